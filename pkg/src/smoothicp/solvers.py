"""Modulus-based iteration and the smoothing Newton family.

All four methods return a :class:`SolveReport`.  ``outer_iterations`` is the
IT column of the benchmark tables and ``final_residual`` the RES column.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import SingularMatrix, factorize, matvec, solve
from .problems import DomainViolation, IcpProblem, SolutionPair, residual
from .smoothing import (
    ModulusConfig,
    SmoothedSystem,
    eval_F,
    eval_Fc,
    jacobian_Fc,
    x_from_zw,
    zw_from_x,
)

__all__ = [
    "METHODS",
    "IterationState",
    "SolveReport",
    "SolverParams",
    "initialize_x",
    "m_plus_one_step",
    "modified_newton",
    "modulus_iteration",
    "smoothing_newton",
    "solve_with",
]

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
LINEAR_SOLVE_FAILURE = "linear_solve_failure"
DOMAIN_VIOLATION = "domain_violation"
DIVERGED = "diverged"


@dataclass(frozen=True)
class SolverParams:
    config: ModulusConfig = field(default_factory=ModulusConfig)
    eps: float = 1e-6
    xi1: float = 1.0
    xi2: float = 1.0
    m_steps: int = 3
    max_outer: int = 200
    # modulus inner loop when it runs on its own; inner_tol=None means eps
    inner_tol: float | None = None
    max_inner: int = 100
    # modulus sweeps as the seed of the Newton family.  The seed stops early
    # once its own stopping test passes.
    init_outer_steps: int = 200
    init_max_inner: int = 1000
    # feasibility slack for the modulus stopping test (RES alone is 0 at z = 0)
    feas_tol: float = 1e-5
    # re-evaluate M m(z) after every Newton-type step instead of holding the seed value
    refresh_mapping: bool = False
    # map evaluated at corrector sub-steps: "smoothed" (F_c) or "exact" (F)
    corrector: str = "smoothed"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.m_steps < 1:
            raise ValueError("m_steps must be >= 1")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.init_outer_steps < 0 or self.max_inner < 1 or self.init_max_inner < 1:
            raise ValueError("iteration caps must be positive")
        if self.corrector not in ("smoothed", "exact"):
            raise ValueError(f"unknown corrector {self.corrector!r}")

    @property
    def alpha(self) -> float:
        return self.config.alpha

    @property
    def beta(self) -> float:
        return self.config.beta

    def with_overrides(self, **kw) -> "SolverParams":
        cfg_keys = {"alpha", "beta", "c"}
        cfg = {k: kw.pop(k) for k in list(kw) if k in cfg_keys and kw[k] is not None}
        kw = {k: v for k, v in kw.items() if v is not None}
        config = replace(self.config, **cfg) if cfg else self.config
        return replace(self, config=config, **kw)


@dataclass(frozen=True)
class IterationState:
    x: np.ndarray
    z: np.ndarray
    k: int


@dataclass(eq=False)
class SolveReport:
    method: str
    solution: SolutionPair
    x: np.ndarray
    outer_iterations: int
    final_residual: float
    residual_history: list[float]
    step_norm_history: list[float]
    termination: str
    x_history: list[np.ndarray] = field(default_factory=list)
    init_iterations: int = 0
    factorizations: int = 0
    linear_solves: int = 0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.termination == CONVERGED


class _Counter:
    def __init__(self):
        self.factorizations = 0
        self.solves = 0

    def factorize(self, a):
        self.factorizations += 1
        return factorize(a)

    def solve(self, f, b):
        self.solves += 1
        return solve(f, b)


def _quiet(fn):
    # divergence is reported through the termination field, not warnings
    @functools.wraps(fn)
    def wrapper(*args, **kw):
        with np.errstate(over="ignore", invalid="ignore"):
            return fn(*args, **kw)

    return wrapper


def _feasible(prob: IcpProblem, z: np.ndarray, tol: float) -> bool:
    g = z - prob.mapping(z)
    return g.min() >= -tol and prob.w_of(z).min() >= -tol


@_quiet
def _modulus_run(prob, params, z0, max_outer, max_inner, inner_tol, counter):
    """Modulus sweeps.  Returns (termination, x, z, k, residuals, steps, message)."""
    cfg = params.config
    z = np.array(z0, dtype=float)
    residuals, steps = [], []
    try:
        system = SmoothedSystem.build(prob, cfg, z)
    except DomainViolation as exc:
        x = np.zeros(prob.n)
        return DOMAIN_VIOLATION, x, z, 0, residuals, steps, str(exc)
    mz = prob.mapping(z)
    x = x_from_zw(z, prob.w_of(z), mz, cfg)
    try:
        fac = counter.factorize(system.plus)
    except SingularMatrix as exc:
        return LINEAR_SOLVE_FAILURE, x, z, 0, residuals, steps, str(exc)
    k = 0
    while True:
        try:
            res = residual(prob, z)
            residuals.append(res)
            if res < params.eps and _feasible(prob, z, params.feas_tol):
                return CONVERGED, x, z, k, residuals, steps, ""
            if k >= max_outer:
                return MAX_ITERATIONS, x, z, k, residuals, steps, ""
            mz = prob.mapping(z)
        except DomainViolation as exc:
            return DOMAIN_VIOLATION, x, z, k, residuals, steps, str(exc)
        x_outer = x_from_zw(z, prob.w_of(z), mz, cfg)
        rhs = -matvec(prob.M, mz) - prob.q
        x = x_outer
        for _ in range(max_inner):
            x_next = counter.solve(fac, matvec(system.minus, np.abs(x)) + rhs)
            inner_step = np.linalg.norm(x_next - x)
            x = x_next
            if inner_step <= inner_tol:
                break
        if not np.all(np.isfinite(x)):
            return DIVERGED, x, z, k, residuals, steps, "non-finite iterate"
        g, _ = zw_from_x(x, cfg)
        z = g + mz
        steps.append(float(np.linalg.norm(x - x_outer)))
        k += 1


def modulus_iteration(prob: IcpProblem, params: SolverParams | None = None, z0=None) -> SolveReport:
    """Modulus fixed-point sweeps with a lagged mapping."""
    params = params or SolverParams()
    z0 = np.zeros(prob.n) if z0 is None else np.asarray(z0, dtype=float)
    counter = _Counter()
    inner_tol = params.eps if params.inner_tol is None else params.inner_tol
    term, x, z, k, residuals, steps, msg = _modulus_run(
        prob, params, z0, params.max_outer, params.max_inner, inner_tol, counter
    )
    _, w = zw_from_x(x, params.config)
    return SolveReport(
        method="modulus",
        solution=SolutionPair(z, w),
        x=x,
        outer_iterations=k,
        final_residual=residuals[-1] if residuals else float("nan"),
        residual_history=residuals,
        step_norm_history=steps,
        termination=term,
        factorizations=counter.factorizations,
        linear_solves=counter.solves,
        message=msg,
    )


class _InitFailure(Exception):
    def __init__(self, termination, message, state, counter):
        super().__init__(message)
        self.termination = termination
        self.state = state
        self.counter = counter


def _initialize(prob, params, counter, z0=None) -> IterationState:
    z0 = np.zeros(prob.n) if z0 is None else np.asarray(z0, dtype=float)
    term, x, z, k, _, _, msg = _modulus_run(
        prob, params, z0, params.init_outer_steps, params.init_max_inner, params.eps, counter
    )
    state = IterationState(x, z, k)
    if term in (LINEAR_SOLVE_FAILURE, DOMAIN_VIOLATION, DIVERGED):
        raise _InitFailure(term, msg, state, counter)
    return state


def initialize_x(prob: IcpProblem, params: SolverParams | None = None, z0=None) -> IterationState:
    """Seed for the Newton family: up to ``init_outer_steps`` modulus sweeps."""
    params = params or SolverParams()
    try:
        return _initialize(prob, params, _Counter(), z0)
    except _InitFailure as exc:
        if exc.termination == LINEAR_SOLVE_FAILURE:
            raise SingularMatrix(str(exc)) from None
        if exc.termination == DOMAIN_VIOLATION:
            raise DomainViolation(str(exc)) from None
        raise ArithmeticError(str(exc)) from None


@_quiet
def _newton_family(prob, params, method, n_correctors, xi1, xi2, start=None) -> SolveReport:
    """Shared loop for the three Newton-type methods.

    Each outer step factors J = F_c'(x^k) once, takes the predictor
    y = x - xi1 J^-1 F_c(x), then ``n_correctors`` corrector solves
    y <- y - xi2 J^-1 G(y) against the same factorization.

    The mapping is lagged at ``z_lag``: the seed's z unless
    ``refresh_mapping`` moves it to the newest iterate after every step.
    """
    cfg = params.config
    counter = _Counter()
    residuals, steps, xs = [], [], []

    def report(term, x, z_out, k, msg=""):
        _, w = zw_from_x(x, cfg)
        return SolveReport(
            method=method,
            solution=SolutionPair(z_out, w),
            x=x,
            outer_iterations=k,
            final_residual=residuals[-1] if residuals else float("nan"),
            residual_history=residuals,
            step_norm_history=steps,
            termination=term,
            x_history=xs,
            init_iterations=state.k,
            factorizations=counter.factorizations,
            linear_solves=counter.solves,
            message=msg,
        )

    if start is None:
        try:
            state = _initialize(prob, params, counter)
        except _InitFailure as exc:
            state = exc.state
            return report(exc.termination, state.x, state.z, 0, str(exc))
    else:
        state = start

    x, z_lag = np.asarray(state.x, dtype=float), np.asarray(state.z, dtype=float)
    xs.append(x)
    try:
        system = SmoothedSystem.build(prob, cfg, z_lag)
    except DomainViolation as exc:
        return report(DOMAIN_VIOLATION, x, z_lag, 0, str(exc))
    corrector = eval_Fc if params.corrector == "smoothed" else eval_F
    z_out = z_lag
    for k in range(1, params.max_outer + 1):
        try:
            fac = counter.factorize(jacobian_Fc(system, x))
        except SingularMatrix as exc:
            return report(LINEAR_SOLVE_FAILURE, x, z_out, k - 1, str(exc))
        y = x - xi1 * counter.solve(fac, eval_Fc(system, x))
        for _ in range(n_correctors):
            y = y - xi2 * counter.solve(fac, corrector(system, y))
        x_new = y
        if not np.all(np.isfinite(x_new)):
            return report(DIVERGED, x, z_out, k - 1, "non-finite iterate")
        g, _ = zw_from_x(x_new, cfg)
        try:
            z_new = g + prob.mapping(z_lag)
            z_out = g + prob.mapping(z_new)
            residuals.append(residual(prob, z_out))
        except DomainViolation as exc:
            return report(DOMAIN_VIOLATION, x, z_out, k - 1, str(exc))
        step = float(np.linalg.norm(x_new - x))
        steps.append(step)
        xs.append(x_new)
        x = x_new
        if step < params.eps:
            return report(CONVERGED, x, z_out, k)
        if params.refresh_mapping:
            z_lag = z_new
            system = system.refreshed(z_lag)
    log.debug("%s hit max_outer=%d", method, params.max_outer)
    return report(MAX_ITERATIONS, x, z_out, params.max_outer)


def smoothing_newton(
    prob: IcpProblem, params: SolverParams | None = None, *, start: IterationState | None = None
) -> SolveReport:
    """Smoothing Newton: Newton's method on F_c(x) = 0."""
    params = params or SolverParams()
    return _newton_family(prob, params, "smn", 0, 1.0, 1.0, start)


def modified_newton(
    prob: IcpProblem, params: SolverParams | None = None, *, start: IterationState | None = None
) -> SolveReport:
    """Modified Newton: two solves per frozen Jacobian, weights xi1 and xi2."""
    params = params or SolverParams()
    return _newton_family(prob, params, "msmn", 1, params.xi1, params.xi2, start)


def m_plus_one_step(
    prob: IcpProblem, params: SolverParams | None = None, *, start: IterationState | None = None
) -> SolveReport:
    """(m+1)-step method: m_steps + 1 solves per frozen Jacobian."""
    params = params or SolverParams()
    return _newton_family(prob, params, "sm_m1", params.m_steps, 1.0, 1.0, start)


METHODS = {
    "modulus": modulus_iteration,
    "smn": smoothing_newton,
    "msmn": modified_newton,
    "sm_m1": m_plus_one_step,
}


def solve_with(method: str, prob: IcpProblem, params: SolverParams | None = None, start=None) -> SolveReport:
    """Dispatch by method name.  ``start`` is ignored by the modulus method."""
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    if method == "modulus":
        return fn(prob, params)
    return fn(prob, params, start=start)
