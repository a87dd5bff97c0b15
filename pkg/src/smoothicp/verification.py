"""Independent checks: brute-force active-set oracle, order estimation,
finite-difference Jacobian comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problems import IcpProblem, SolutionPair, check_solution
from .smoothing import SmoothedSystem, eval_Fc, jacobian_Fc

__all__ = [
    "EmptyOracle",
    "InsufficientData",
    "OracleSolutionSet",
    "OrderEstimate",
    "SizeExceeded",
    "check_jacobian",
    "contraction_ok",
    "estimate_order",
    "oracle_match",
    "oracle_solve",
]


class SizeExceeded(ValueError):
    pass


class EmptyOracle(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass
class OracleSolutionSet:
    solutions: list[SolutionPair] = field(default_factory=list)
    patterns: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.solutions)


def _pattern_newton(M, q, mapping, active, z, max_iter=200, max_halvings=30):
    """Damped Newton on the square system of one complementarity pattern.

    Row i is (Mz + q)_i when ``active[i]``, else z_i - m(z_i).
    Iterates until the step stalls rather than on a residual threshold:
    at a multiple root (z - arctan z at 0) a small residual still leaves
    z far from the root.  Returns the root or None.
    """
    n = len(q)
    floor = mapping.domain_floor

    def system(z):
        g = np.where(active, M @ z + q, z - mapping.eval(z))
        return g

    def jac(z):
        J = np.diag(1.0 - mapping.derivative(z))
        J[active] = M[active]
        return J

    g = system(z)
    norm = np.abs(g).max()
    for _ in range(max_iter):
        if norm == 0.0:
            return z
        try:
            step = np.linalg.solve(jac(z), -g)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        t = 1.0
        for _ in range(max_halvings):
            cand = z + t * step
            cand = np.where(cand < floor, floor, cand) if np.isfinite(floor) else cand
            g_c = system(cand)
            n_c = np.abs(g_c).max()
            if n_c < norm:
                break
            t *= 0.5
        else:
            # no decrease possible: converged to roundoff, or stuck
            return z if norm <= 1e-10 else None
        moved = np.abs(cand - z).max()
        z, g, norm = cand, g_c, n_c
        if moved <= 1e-15 * (1.0 + np.abs(z).max()):
            break
    return z if norm <= 1e-10 else None


def oracle_solve(prob: IcpProblem, n_cap: int = 10, seed: int = 0, n_random: int = 3) -> OracleSolutionSet:
    """All ICP solutions reachable by enumerating the 2**n active sets.

    Bit i of a pattern set means (Mz + q)_i = 0 is enforced; otherwise
    z_i - m(z_i) = 0.  Each pattern system is solved from the starts 0, 1
    and ``n_random`` random nonnegative points.  Random starts have about
    half their entries at exactly 0 so that mixed roots of a non-injective
    z - m(z) (sqrt: 0 and 1) are reached.
    """
    n = prob.n
    if n > n_cap:
        raise SizeExceeded(f"n={n} exceeds oracle cap {n_cap}")
    M = prob.M.to_dense()
    q = np.asarray(prob.q)
    mapping = prob.mapping
    rng = np.random.default_rng(seed)
    starts = [np.zeros(n), np.ones(n)] + [
        rng.uniform(0.0, 2.0, n) * (rng.random(n) < 0.5) for _ in range(n_random)
    ]
    out = OracleSolutionSet()
    for mask in range(2**n):
        active = np.array([(mask >> i) & 1 == 1 for i in range(n)])
        for z0 in starts:
            z = _pattern_newton(M, q, mapping, active, z0.copy())
            if z is None:
                continue
            sol = SolutionPair(z, M @ z + q)
            if not check_solution(prob, sol, 1e-9):
                continue
            if any(np.abs(z - s.z).max() <= 1e-7 for s in out.solutions):
                continue
            out.solutions.append(sol)
            out.patterns.append(mask)
    return out


def oracle_match(report, oracle: OracleSolutionSet, tol: float) -> bool:
    if not oracle.solutions:
        raise EmptyOracle("oracle found no solutions")
    z = np.asarray(report.solution.z if hasattr(report, "solution") else report)
    return min(np.abs(z - s.z).max() for s in oracle.solutions) <= tol


@dataclass
class OrderEstimate:
    errors: list[float]
    order: float
    rates: list[float]


def estimate_order(errors, lower: float = 1e-12, upper: float = 1.0) -> OrderEstimate:
    """Median of ln(e_{k+1}/e_k) / ln(e_k/e_{k-1}) over admissible triples.

    Only errors inside (lower, upper) are used; values near roundoff
    carry no rate information.
    """
    e = [float(v) for v in errors if lower < v < upper]
    if len(e) < 3:
        raise InsufficientData(f"need 3 admissible errors, got {len(e)}")
    if any(b >= a for a, b in zip(e, e[1:])):
        raise InsufficientData("admissible errors are not strictly decreasing")
    rates = [np.log(e[k + 1] / e[k]) / np.log(e[k] / e[k - 1]) for k in range(1, len(e) - 1)]
    return OrderEstimate(e, float(np.median(rates)), rates)


def contraction_ok(e0: float, e1: float, order: float, const: float = 1.0) -> bool:
    """Single-step fallback: e1 <= const * e0**(order - 0.5)."""
    return e1 <= const * e0 ** (order - 0.5)


def check_jacobian(sys: SmoothedSystem, x, h: float, jacobian=None) -> float:
    """Max |central difference - analytic entry| over the whole matrix."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    if jacobian is None:
        jacobian = jacobian_Fc(sys, x)
    J = jacobian.to_dense() if hasattr(jacobian, "to_dense") else np.asarray(jacobian)
    worst = 0.0
    for i in range(sys.n):
        e = np.zeros(sys.n)
        e[i] = h
        col = (eval_Fc(sys, x + e) - eval_Fc(sys, x - e)) / (2 * h)
        worst = max(worst, float(np.abs(col - J[:, i]).max()))
    return worst
