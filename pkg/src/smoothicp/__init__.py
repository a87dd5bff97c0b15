"""Smoothing modulus-based Newton methods for implicit complementarity problems."""

from .linalg import BandedMatrix, DimensionMismatch, SingularMatrix, build_banded, factorize, matvec, solve
from .problems import (
    FAMILIES,
    MAPPINGS,
    DomainViolation,
    IcpProblem,
    SolutionPair,
    check_solution,
    gen_example,
    load_problem,
    residual,
)
from .smoothing import ModulusConfig, SmoothedSystem, eval_F, eval_Fc, jacobian_Fc, phi_c
from .solvers import (
    METHODS,
    IterationState,
    SolveReport,
    SolverParams,
    initialize_x,
    m_plus_one_step,
    modified_newton,
    modulus_iteration,
    smoothing_newton,
    solve_with,
)

__version__ = "0.1.0"
