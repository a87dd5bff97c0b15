"""Empirical convergence order of SMN, MSMN and SM(m+1) on a scalar smoothed
system with a known simple root (found by bracketing).

    python3 scripts/order_study.py --c 1 --x0 -0.5
"""

import argparse

import numpy as np
from scipy.optimize import brentq

from smoothicp.linalg import BandedMatrix
from smoothicp.problems import MAPPINGS, IcpProblem
from smoothicp.smoothing import ModulusConfig, SmoothedSystem, eval_Fc
from smoothicp.solvers import IterationState, SolverParams, m_plus_one_step, modified_newton, smoothing_newton
from smoothicp.verification import InsufficientData, estimate_order


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--m", type=float, default=4.0, help="scalar M")
    ap.add_argument("--q", type=float, default=-1.0)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--x0", type=float, nargs="+", default=[-1.0, -0.5, 0.6, 1.0])
    ap.add_argument("--m-steps", type=int, default=3)
    args = ap.parse_args()

    prob = IcpProblem(BandedMatrix.from_dense([[args.m]]), [args.q], MAPPINGS["zero"])
    params = SolverParams(config=ModulusConfig(c=args.c), eps=1e-14, init_outer_steps=0, m_steps=args.m_steps)
    sys = SmoothedSystem.build(prob, params.config)
    root = brentq(lambda t: eval_Fc(sys, [t])[0], -10.0, 10.0, xtol=1e-16)
    print(f"root of F_c: {root:.16f}  (c = {args.c})")
    for x0 in args.x0:
        start = IterationState(np.array([x0]), np.zeros(1), 0)
        print(f"\nx0 = {x0}")
        for name, fn in (("SMN", smoothing_newton), ("MSMN", modified_newton), ("SM(m+1)", m_plus_one_step)):
            errors = [abs(x[0] - root) for x in fn(prob, params, start=start).x_history]
            try:
                order = f"{estimate_order(errors).order:.2f}"
            except InsufficientData:
                order = "n/a (too few errors inside the window)"
            print(f"  {name:<8} errors {' '.join(f'{e:.1e}' for e in errors)}  order {order}")


if __name__ == "__main__":
    main()
