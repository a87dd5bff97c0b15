"""ICP instances, implicit mappings, benchmark generators and residuals.

An instance asks for z with z - m(z) >= 0, w = Mz + q >= 0 and
(z - m(z))^T (Mz + q) = 0, where m acts componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .linalg import BandedMatrix, DimensionMismatch, matvec, read_matrix_market

__all__ = [
    "FAMILIES",
    "MAPPINGS",
    "DomainViolation",
    "IcpProblem",
    "Mapping",
    "SolutionPair",
    "Verdict",
    "block_tridiagonal",
    "check_solution",
    "gen_example",
    "load_problem",
    "residual",
]


class DomainViolation(ValueError):
    pass


@dataclass(frozen=True)
class Mapping:
    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    domain_floor: float = -np.inf

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < self.domain_floor):
            bad = int(np.argmin(z))
            raise DomainViolation(
                f"{self.name} mapping undefined at z[{bad}] = {z[bad]:.3e} < {self.domain_floor}"
            )
        return self.eval(z)


def _sqrt_derivative(z):
    # finite stand-in for the infinite slope at 0; only the oracle uses it
    return 0.5 / np.sqrt(np.maximum(z, 1e-300))


MAPPINGS: dict[str, Mapping] = {
    "zero": Mapping("zero", np.zeros_like, np.zeros_like),
    "sqrt": Mapping("sqrt", np.sqrt, _sqrt_derivative, 0.0),
    "arctan": Mapping("arctan", np.arctan, lambda z: 1.0 / (1.0 + z * z)),
    "cube": Mapping("cube", lambda z: z**3, lambda z: 3.0 * z * z),
}


@dataclass(frozen=True, eq=False)
class IcpProblem:
    M: BandedMatrix
    q: np.ndarray
    mapping: Mapping
    name: str = "icp"

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.shape != (self.M.n,):
            raise DimensionMismatch(f"q has shape {q.shape}, M is {self.M.n} x {self.M.n}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.M.n

    def w_of(self, z) -> np.ndarray:
        return matvec(self.M, z) + self.q

    @property
    def is_lcp(self) -> bool:
        return self.mapping.name == "zero"


@dataclass(frozen=True, eq=False)
class SolutionPair:
    z: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str = ""

    def __bool__(self):
        return self.accepted


def block_tridiagonal(p: int, sub: float, sup: float, block_sub: float, block_sup: float) -> BandedMatrix:
    """Block tridiagonal matrix with S = tridiag(sub, 4, sup) on the diagonal
    and ``block_sub * I`` / ``block_sup * I`` beside it; n = p**2, bandwidth p."""
    n = p * p
    bw = p if p > 1 else 0
    ab = np.zeros((2 * bw + 1, n))
    i = np.arange(n)
    ab[bw] = 4.0
    if p > 1:
        # within-block neighbours: skip couplings that would cross a block boundary
        same_block = (i % p) != 0
        ab[bw - 1, 1:] = np.where(same_block[1:], sup, 0.0)  # A[i-1, i]
        ab[bw + 1, :-1] = np.where(same_block[1:], sub, 0.0)  # A[i+1, i]
        ab[0, p:] = block_sup  # A[i-p, i]
        ab[2 * bw, : n - p] = block_sub  # A[i+p, i]
    return BandedMatrix(n, bw, bw, ab)


# family -> (S sub, S super, block sub, block super, mapping)
FAMILIES: dict[str, tuple[float, float, float, float, str]] = {
    "E41": (-1.0, -1.0, -1.0, -1.0, "sqrt"),
    "E42": (-1.5, -0.5, -1.5, -0.5, "arctan"),
    "E43": (-1.0, -1.0, -1.0, -1.0, "cube"),
    "E44": (-1.5, -0.5, -1.5, -0.5, "cube"),
}


def gen_example(family: str, p: int) -> IcpProblem:
    family = family.upper()
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")
    p = int(p)
    sub, sup, bsub, bsup, mapping = FAMILIES[family]
    M = block_tridiagonal(p, sub, sup, bsub, bsup)
    q = np.where(np.arange(M.n) % 2 == 0, -1.0, 1.0)
    return IcpProblem(M, q, MAPPINGS[mapping], name=f"{family}(p={p})")


def residual(prob: IcpProblem, z) -> float:
    """Complementarity residual |(Mz + q)^T (z - m(z))|."""
    z = np.asarray(z, dtype=float)
    if z.shape != (prob.n,):
        raise DimensionMismatch(f"z has shape {z.shape}, expected ({prob.n},)")
    return float(abs(prob.w_of(z) @ (z - prob.mapping(z))))


def check_solution(prob: IcpProblem, sol: SolutionPair, tol: float) -> Verdict:
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = np.asarray(sol.z, dtype=float)
    w = np.asarray(sol.w, dtype=float)
    if z.shape != (prob.n,) or w.shape != (prob.n,):
        return Verdict(False, "dimension mismatch")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
        return Verdict(False, "non-finite entries")
    try:
        g = z - prob.mapping(z)
    except DomainViolation as exc:
        return Verdict(False, f"domain: {exc}")
    mz_q = prob.w_of(z)
    if g.min() < -tol:
        return Verdict(False, f"feasibility of z - m(z): min = {g.min():.3e}")
    if mz_q.min() < -tol:
        return Verdict(False, f"feasibility of Mz + q: min = {mz_q.min():.3e}")
    gap = np.abs(w - mz_q).max()
    if gap > tol:
        return Verdict(False, f"w differs from Mz + q by {gap:.3e}")
    res = abs(mz_q @ g)
    if res > tol:
        return Verdict(False, f"complementarity residual {res:.3e}")
    return Verdict(True)


def load_problem(matrix_path, q_path, mapping: str = "zero") -> IcpProblem:
    """Matrix Market file for M, one value per line for q, mapping by name."""
    if mapping not in MAPPINGS:
        raise ValueError(f"unknown mapping {mapping!r}; choose from {sorted(MAPPINGS)}")
    M = read_matrix_market(matrix_path)
    q = np.loadtxt(q_path, dtype=float, ndmin=1)
    return IcpProblem(M, q, MAPPINGS[mapping], name=Path(matrix_path).stem)
