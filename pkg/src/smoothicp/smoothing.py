"""Modulus transformation and the smoothed absolute-value system.

With Omega = alpha*I and A = beta*M, the substitution
z - m(z) = beta(|x| + x), w = alpha(|x| - x) turns the ICP into

    F(x) = (Omega + A) x - (Omega - A)|x| + M m(z) + q = 0,

where m(z) is held at the previous outer iterate.  Replacing |x| by
sqrt(x^2 + e^-c) gives the differentiable map F_c.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .linalg import BandedMatrix, DimensionMismatch, matvec
from .problems import IcpProblem

__all__ = [
    "ModulusConfig",
    "SmoothedSystem",
    "eval_F",
    "eval_Fc",
    "jacobian_Fc",
    "phi_c",
    "smoothing_slope",
    "x_from_zw",
    "zw_from_x",
]

# exp(-700) is still a normal double; beyond that the shift underflows
C_MAX = 700.0


@dataclass(frozen=True)
class ModulusConfig:
    alpha: float = 1.0
    beta: float = 1.0
    c: float = 30.0

    def __post_init__(self):
        if not self.alpha > 0 or not self.beta > 0:
            raise ValueError("alpha and beta must be positive")
        if not 0 < self.c <= C_MAX:
            raise ValueError(f"c must lie in (0, {C_MAX:g}]")

    @property
    def shift(self) -> float:
        return float(np.exp(-self.c))


def _vec(x, n=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n is not None and x.shape != (n,):
        raise DimensionMismatch(f"expected a vector of length {n}, got shape {x.shape}")
    return x


def phi_c(x, c: float) -> np.ndarray:
    """Componentwise sqrt(x_i^2 + e^-c)."""
    x = _vec(x)
    return np.sqrt(x * x + np.exp(-c))


def smoothing_slope(x, c: float) -> np.ndarray:
    """d phi_c / dx = x / sqrt(x^2 + e^-c), strictly inside (-1, 1)."""
    x = _vec(x)
    return x / np.sqrt(x * x + np.exp(-c))


def x_from_zw(z, w, m_of_z, cfg: ModulusConfig) -> np.ndarray:
    z = np.atleast_1d(_vec(z))
    w, m_of_z = _vec(w, z.shape[0]), _vec(m_of_z, z.shape[0])
    return 0.5 * ((z - m_of_z) / cfg.beta - w / cfg.alpha)


def zw_from_x(x, cfg: ModulusConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return (z - m(z), w) encoded by x."""
    x = _vec(x)
    ax = np.abs(x)
    return cfg.beta * (ax + x), cfg.alpha * (ax - x)


@dataclass(frozen=True, eq=False)
class SmoothedSystem:
    """F and F_c for one problem, with M m(z) frozen at a given outer iterate."""

    problem: IcpProblem
    config: ModulusConfig
    frozen_mz: np.ndarray
    plus: BandedMatrix  # Omega + A
    minus: BandedMatrix  # Omega - A

    @classmethod
    def build(cls, problem: IcpProblem, config: ModulusConfig, z=None) -> "SmoothedSystem":
        n = problem.n
        A = problem.M * config.beta
        omega = BandedMatrix.identity(n, config.alpha)
        z = np.zeros(n) if z is None else _vec(z, n)
        return cls(problem, config, matvec(problem.M, problem.mapping(z)), omega + A, omega - A)

    def refreshed(self, z) -> "SmoothedSystem":
        z = _vec(z, self.n)
        return dataclasses.replace(self, frozen_mz=matvec(self.problem.M, self.problem.mapping(z)))

    @property
    def n(self) -> int:
        return self.problem.n

    def _affine(self, x: np.ndarray) -> np.ndarray:
        return matvec(self.plus, x) + self.frozen_mz + self.problem.q


def eval_F(sys: SmoothedSystem, x) -> np.ndarray:
    x = _vec(x, sys.n)
    return sys._affine(x) - matvec(sys.minus, np.abs(x))


def eval_Fc(sys: SmoothedSystem, x) -> np.ndarray:
    x = _vec(x, sys.n)
    return sys._affine(x) - matvec(sys.minus, phi_c(x, sys.config.c))


def jacobian_Fc(sys: SmoothedSystem, x) -> BandedMatrix:
    """(Omega + A) - (Omega - A) diag(x / sqrt(x^2 + e^-c)); m(z) is frozen."""
    x = _vec(x, sys.n)
    return sys.plus - sys.minus.scale_columns(smoothing_slope(x, sys.config.c))
