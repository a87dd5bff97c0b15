"""Banded matrix storage and a reusable band LU factorization.

Storage follows the LAPACK general-band layout: entry ``A[i, j]`` lives at
``ab[ku + i - j, j]``.  Factorization and solves go through ``dgbtrf`` /
``dgbtrs`` so that one factorization serves any number of right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.linalg.lapack import dgbtrf, dgbtrs

__all__ = [
    "BandedMatrix",
    "DimensionMismatch",
    "Factorization",
    "SingularMatrix",
    "build_banded",
    "factorize",
    "matvec",
    "read_matrix_market",
    "solve",
]

PIVOT_RTOL = 1e-14


class SingularMatrix(ArithmeticError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BandedMatrix:
    """Square n x n matrix with ``kl`` sub- and ``ku`` super-diagonals."""

    n: int
    kl: int
    ku: int
    ab: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not (0 <= self.kl < self.n and 0 <= self.ku < self.n):
            raise ValueError(f"bandwidths ({self.kl}, {self.ku}) invalid for n={self.n}")
        if self.ab.shape != (self.kl + self.ku + 1, self.n):
            raise ValueError("band array has the wrong shape")
        self.ab.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        return self.ab[self.ku].copy()

    def norm_inf(self) -> float:
        """Maximum absolute row sum."""
        rows = np.zeros(self.n)
        for d in range(-self.kl, self.ku + 1):
            j = np.arange(max(0, d), min(self.n, self.n + d))
            np.add.at(rows, j - d, np.abs(self.ab[self.ku - d, j]))
        return float(rows.max())

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for d in range(-self.kl, self.ku + 1):
            j = np.arange(max(0, d), min(self.n, self.n + d))
            out[j - d, j] = self.ab[self.ku - d, j]
        return out

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        # products go through CSR; the band array is read-only so caching is safe
        return self.to_sparse()

    def to_sparse(self) -> sp.csr_matrix:
        # dia_matrix aligns data by column, exactly like the band array
        offsets = np.arange(self.ku, -self.kl - 1, -1)
        return sp.dia_matrix((np.array(self.ab), offsets), shape=self.shape).tocsr()

    @classmethod
    def from_dense(cls, a, kl: int | None = None, ku: int | None = None) -> "BandedMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        n = a.shape[0]
        lo, hi = _bandwidths(a)
        kl = lo if kl is None else kl
        ku = hi if ku is None else ku
        if lo > kl or hi > ku:
            raise ValueError("matrix has entries outside the requested band")
        ab = np.zeros((kl + ku + 1, n))
        for d in range(-kl, ku + 1):
            j = np.arange(max(0, d), min(n, n + d))
            ab[ku - d, j] = a[j - d, j]
        return cls(n, kl, ku, ab)

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "BandedMatrix":
        return cls(n, 0, 0, np.full((1, n), float(scale)))

    def widen(self, kl: int, ku: int) -> "BandedMatrix":
        """Same matrix stored with (at least) the given bandwidths."""
        kl, ku = max(kl, self.kl), max(ku, self.ku)
        if (kl, ku) == (self.kl, self.ku):
            return self
        ab = np.zeros((kl + ku + 1, self.n))
        ab[ku - self.ku : ku + self.kl + 1] = self.ab
        return BandedMatrix(self.n, kl, ku, ab)

    def scale_columns(self, d: np.ndarray) -> "BandedMatrix":
        """Return ``A @ diag(d)``."""
        d = _as_vector(d, self.n)
        return BandedMatrix(self.n, self.kl, self.ku, self.ab * d[None, :])

    def __add__(self, other: "BandedMatrix") -> "BandedMatrix":
        return _combine(self, other, 1.0)

    def __sub__(self, other: "BandedMatrix") -> "BandedMatrix":
        return _combine(self, other, -1.0)

    def __mul__(self, s: float) -> "BandedMatrix":
        return BandedMatrix(self.n, self.kl, self.ku, self.ab * float(s))

    __rmul__ = __mul__

    def __matmul__(self, x):
        return matvec(self, x)


def _combine(a: BandedMatrix, b: BandedMatrix, sign: float) -> BandedMatrix:
    if a.n != b.n:
        raise DimensionMismatch(f"{a.n} vs {b.n}")
    kl, ku = max(a.kl, b.kl), max(a.ku, b.ku)
    a, b = a.widen(kl, ku), b.widen(kl, ku)
    return BandedMatrix(a.n, kl, ku, a.ab + sign * b.ab)


def _bandwidths(a: np.ndarray) -> tuple[int, int]:
    rows, cols = np.nonzero(a)
    if rows.size == 0:
        return 0, 0
    return int(max(0, (rows - cols).max())), int(max(0, (cols - rows).max()))


def _as_vector(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatch(f"expected a vector of length {n}, got shape {x.shape}")
    return x


def build_banded(
    n: int, lower_bw: int, upper_bw: int, entry_rule: Callable[[int, int], float]
) -> BandedMatrix:
    """Assemble a band matrix from ``entry_rule(i, j)`` evaluated on the band."""
    if n < 1:
        raise ValueError("n must be positive")
    if lower_bw < 0 or upper_bw < 0:
        raise ValueError("bandwidths must be nonnegative")
    if lower_bw >= n or upper_bw >= n:
        raise ValueError(f"bandwidths ({lower_bw}, {upper_bw}) must be < n={n}")
    ab = np.zeros((lower_bw + upper_bw + 1, n))
    for j in range(n):
        for i in range(max(0, j - upper_bw), min(n, j + lower_bw + 1)):
            ab[upper_bw + i - j, j] = entry_rule(i, j)
    return BandedMatrix(n, lower_bw, upper_bw, ab)


def matvec(a: BandedMatrix, x) -> np.ndarray:
    x = _as_vector(x, a.n)
    return a._csr @ x


@dataclass(frozen=True, eq=False)
class Factorization:
    matrix: BandedMatrix
    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.n


def factorize(a: BandedMatrix) -> Factorization:
    """Band LU with partial pivoting.

    Raises SingularMatrix when a pivot falls below ``1e-14 * ||A||_inf``.
    """
    kl, ku = a.kl, a.ku
    work = np.zeros((2 * kl + ku + 1, a.n), order="F")
    work[kl:] = a.ab
    lu, piv, info = dgbtrf(work, kl, ku, overwrite_ab=1)
    if info < 0:
        raise ValueError(f"dgbtrf rejected argument {-info}")
    scale = a.norm_inf()
    pivots = np.abs(lu[kl + ku])
    if info > 0 or scale == 0.0 or not np.all(np.isfinite(pivots)) or pivots.min() < PIVOT_RTOL * scale:
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below {PIVOT_RTOL:g} * ||A||_inf = {PIVOT_RTOL * scale:.3e}"
        )
    lu.setflags(write=False)
    piv.setflags(write=False)
    return Factorization(a, lu, piv)


def solve(f: Factorization, b) -> np.ndarray:
    b = _as_vector(b, f.n)
    a = f.matrix
    x, info = dgbtrs(f.lu, a.kl, a.ku, b.reshape(-1, 1), f.piv)
    if info != 0:
        raise ValueError(f"dgbtrs failed with info={info}")
    return x[:, 0]


def read_matrix_market(path) -> BandedMatrix:
    """Read a real square Matrix Market file into band storage.

    Matrices whose bandwidth exceeds n/4 are kept with full bandwidth,
    which makes the band LU an ordinary dense LU.
    """
    m = scipy.io.mmread(path)
    if sp.issparse(m):
        m = sp.coo_matrix(m)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"matrix is {m.shape}, expected square")
        n = m.shape[0]
        keep = m.data != 0
        r, c = m.row[keep], m.col[keep]
        kl = int(max(0, (r - c).max())) if r.size else 0
        ku = int(max(0, (c - r).max())) if r.size else 0
        if max(kl, ku) > n / 4:
            kl = ku = n - 1
        ab = np.zeros((kl + ku + 1, n))
        np.add.at(ab, (ku + m.row - m.col, m.col), m.data.astype(float))
        return BandedMatrix(n, kl, ku, ab)
    dense = np.asarray(m, dtype=float)
    n = dense.shape[0]
    kl, ku = _bandwidths(dense)
    if max(kl, ku) > n / 4:
        kl = ku = n - 1
    return BandedMatrix.from_dense(dense, kl, ku)


def write_matrix_market(path, a: BandedMatrix) -> None:
    scipy.io.mmwrite(path, sp.coo_matrix(a.to_sparse()), field="real", symmetry="general")
