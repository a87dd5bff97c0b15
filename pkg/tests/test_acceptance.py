"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (``-s`` is on by default
in pyproject, so the verdict lines appear inline).  Set
SMOOTHICP_FULL=1 to add the n = 24025 rows of the cube tables.

Criteria whose targets the implementation does not reach are kept at
their stated tolerance and marked ``xfail(strict=True)``; the analysis
lives in the decisions ledger.
"""

import os
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from smoothicp.cli import run_table
from smoothicp.linalg import BandedMatrix
from smoothicp.problems import MAPPINGS, IcpProblem, gen_example
from smoothicp.smoothing import ModulusConfig, SmoothedSystem, eval_Fc, phi_c
from smoothicp.solvers import (
    METHODS,
    IterationState,
    SolverParams,
    m_plus_one_step,
    modified_newton,
    smoothing_newton,
    solve_with,
)
from smoothicp.verification import (
    EmptyOracle,
    InsufficientData,
    check_jacobian,
    contraction_ok,
    estimate_order,
    oracle_match,
    oracle_solve,
)

FULL = os.environ.get("SMOOTHICP_FULL") == "1"
CUBE_MAX_N = 24025 if FULL else 3025


def verdict(number, ok, detail):
    print(f"\nACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def by_method(rows):
    out = {}
    for r in rows:
        out.setdefault(r.method, {})[r.n] = r
    return out


@pytest.fixture(scope="module")
def tables():
    t0 = time.perf_counter()
    out = {
        "T2": by_method(run_table("T2")),
        "T3": by_method(run_table("T3")),
        "T4": by_method(run_table("T4", max_n=CUBE_MAX_N)),
        "T5": by_method(run_table("T5", max_n=CUBE_MAX_N)),
    }
    out["wall"] = time.perf_counter() - t0
    return out


def it_misses(table, targets, tol):
    """[(method, n, IT, target)] for rows outside target +- tol."""
    misses = []
    for method, per_n in targets.items():
        for n, want in per_n.items():
            if n not in table[method]:
                continue
            got = table[method][n].iterations
            if abs(got - want) > tol[method]:
                misses.append((method, n, got, want))
    return misses


def describe(table):
    return "; ".join(
        f"{m} " + " ".join(f"n={n}:IT={r.iterations},RES={r.residual:.2e}" for n, r in sorted(table[m].items()))
        for m in ("smn", "msmn", "sm_m1")
    )


@pytest.mark.xfail(strict=True, reason="SMN IT below target and RES above 1e-5 for n >= 1600; see ledger")
def test_criterion_1_table2(tables):
    t = tables["T2"]
    sizes = (400, 1600, 3600, 6400)
    targets = {
        "smn": dict(zip(sizes, (5, 7, 8, 8))),
        "msmn": dict(zip(sizes, (3, 3, 3, 3))),
        "sm_m1": dict(zip(sizes, (2, 3, 3, 3))),
    }
    misses = it_misses(t, targets, {"smn": 2, "msmn": 1, "sm_m1": 1})
    big_res = [(m, n, r.residual) for m in targets for n, r in t[m].items() if r.residual > 1e-5]
    ok = not misses and not big_res
    verdict(1, ok, f"IT misses {misses}; RES > 1e-5 at {[(m, n, f'{v:.2e}') for m, n, v in big_res]}")
    print("   ", describe(t))
    assert ok


def test_criterion_2_table3(tables):
    t = tables["T3"]
    sizes = (400, 1600, 3600, 6400)
    targets = {"msmn": dict.fromkeys(sizes, 3), "sm_m1": dict.fromkeys(sizes, 2)}
    misses = it_misses(t, targets, {"msmn": 1, "sm_m1": 1})
    verdict(2, not misses, f"IT misses {misses}")
    print("   ", describe(t))
    assert not misses


@pytest.mark.xfail(strict=True, reason="E43 SMN IT and E44 SM(m+1) IT miss at n = 3025; see ledger")
def test_criterion_3_cube_tables(tables):
    misses = []
    for tid, smn_targets in (("T4", {3025: 8, 24025: 10}), ("T5", {3025: 6, 24025: 7})):
        t = tables[tid]
        for n, r in t["smn"].items():
            if abs(r.iterations - smn_targets[n]) > 2:
                misses.append((tid, "smn", n, r.iterations))
        for n, r in t["msmn"].items():
            if r.iterations not in (2, 3):
                misses.append((tid, "msmn", n, r.iterations))
        for n, r in t["sm_m1"].items():
            if r.iterations != 2:
                misses.append((tid, "sm_m1", n, r.iterations))
    verdict(3, not misses, f"sizes up to n={CUBE_MAX_N}; misses {misses}")
    print("    T4:", describe(tables["T4"]))
    print("    T5:", describe(tables["T5"]))
    assert not misses


def test_criterion_4_ranking(tables):
    bad = []
    for tid in ("T2", "T3", "T4", "T5"):
        t = tables[tid]
        for n in t["smn"]:
            a, b, c = t["sm_m1"][n].iterations, t["msmn"][n].iterations, t["smn"][n].iterations
            if not a <= b <= c:
                bad.append((tid, n, a, b, c))
    verdict(4, not bad, f"rows violating IT(SM) <= IT(MSMN) <= IT(SMN): {bad}")
    assert not bad


def random_instance(rng, mapping):
    n = int(rng.integers(1, 5 if mapping == "sqrt" else 7))
    a = rng.uniform(-1, 1, (n, n)) * (rng.random((n, n)) < 0.6)
    np.fill_diagonal(a, 0.0)
    # weak dominance: diagonal at least the off-diagonal row sum, positive
    a[np.diag_indices(n)] = np.maximum(np.abs(a).sum(axis=1) + rng.uniform(0, 1, n), 0.1)
    return IcpProblem(BandedMatrix.from_dense(a), rng.uniform(-2, 2, n), MAPPINGS[mapping])


def test_criterion_5_oracle_equivalence():
    rng = np.random.default_rng(2024)
    mappings = ("zero", "arctan", "cube", "sqrt")
    stats = {m: dict(runs=0, converged=0, matched=0, no_oracle=0) for m in mappings}
    logged = []
    for trial in range(100):
        mapping = mappings[trial % 4]
        prob = random_instance(rng, mapping)
        oracle = oracle_solve(prob, seed=trial, n_random=24 if mapping == "sqrt" else 3)
        for method in METHODS:
            rep = solve_with(method, prob)
            s = stats[mapping]
            s["runs"] += 1
            if not rep.converged:
                continue
            s["converged"] += 1
            try:
                hit = oracle_match(rep, oracle, 1e-5)
            except EmptyOracle:
                s["no_oracle"] += 1
                logged.append((trial, mapping, method, "oracle empty"))
                continue
            s["matched"] += hit
            if not hit:
                logged.append((trial, mapping, method, f"{len(oracle)} oracle solution(s), none within 1e-5"))
    rate = {m: s["matched"] / max(s["converged"], 1) for m, s in stats.items()}
    ok = rate["zero"] >= 0.95 and rate["arctan"] >= 0.95
    verdict(5, ok, " ".join(f"{m}: {s['matched']}/{s['converged']} matched of {s['runs']} runs;" for m, s in stats.items()))
    for item in logged:
        print("    discrepancy", item)
    assert ok


def test_criterion_6_smoothing_bound():
    rng = np.random.default_rng(6)
    x = rng.choice([-1, 1], 10_000) * 10.0 ** rng.uniform(-30, 30, 10_000)
    x[:50] = 0.0
    worst = {}
    ok = True
    for c in (10.0, 30.0, 100.0):
        gap = phi_c(x, c) - np.abs(x)
        bound = np.exp(-c / 2)
        # one rounding in exp, one in sqrt
        ok &= bool(np.all(gap >= 0) and np.all(gap <= bound * (1 + 4 * np.finfo(float).eps)))
        worst[c] = float((gap / bound).max())
    verdict(6, ok, f"max (phi - |x|) / e^(-c/2) over 1e4 scalars: {worst}")
    assert ok


def test_criterion_7_jacobian():
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(50):
        if k % 2:
            prob = gen_example(("E41", "E42", "E43", "E44")[k % 4], int(rng.integers(1, 5)))
        else:
            prob = random_instance(rng, ("zero", "arctan", "cube")[k % 3])
            n = int(rng.integers(1, 21))
            a = np.diag(rng.uniform(2, 4, n)) + np.diag(rng.uniform(-1, 1, n - 1), 1) + np.diag(rng.uniform(-1, 1, n - 1), -1)
            prob = IcpProblem(BandedMatrix.from_dense(a), rng.uniform(-1, 1, n), prob.mapping)
        cfg = ModulusConfig(rng.uniform(0.5, 2), rng.uniform(0.5, 2), float(rng.choice([2.0, 10.0, 30.0])))
        sys = SmoothedSystem.build(prob, cfg, rng.uniform(0, 1, prob.n))
        worst = max(worst, check_jacobian(sys, rng.normal(size=prob.n), 1e-7))
    ok = worst <= 1e-5
    verdict(7, ok, f"worst deviation over 50 pairs: {worst:.2e}")
    assert ok


def test_criterion_8_convergence_order():
    prob = IcpProblem(BandedMatrix.from_dense([[4.0]]), [-1.0], MAPPINGS["zero"])
    params = SolverParams(config=ModulusConfig(c=1.0), eps=1e-14, init_outer_steps=0)
    sys = SmoothedSystem.build(prob, params.config)
    root = brentq(lambda t: eval_Fc(sys, [t])[0], -2.0, 2.0, xtol=1e-16)
    start = IterationState(np.array([-0.5]), np.zeros(1), 0)

    def errors(fn):
        return [abs(x[0] - root) for x in fn(prob, params, start=start).x_history]

    smn = estimate_order(errors(smoothing_newton)).order
    e = errors(modified_newton)
    try:
        msmn = estimate_order(e).order
        msmn_ok = msmn >= 2.5
        msmn_note = f"MSMN order {msmn:.2f}"
    except InsufficientData:
        msmn_ok = contraction_ok(e[0], e[1], 3.0)
        msmn_note = "MSMN contraction fallback"
    e_sm = errors(m_plus_one_step)
    try:
        sm_note = f"SM(m+1) order {estimate_order(e_sm).order:.2f} (informational)"
    except InsufficientData:
        sm_note = f"SM(m+1) contraction e1 <= e0^4.5: {contraction_ok(e_sm[0], e_sm[1], 5.0)} (informational)"
    ok = 1.7 <= smn <= 2.3 and msmn_ok
    verdict(8, ok, f"SMN order {smn:.2f}; {msmn_note}; {sm_note}")
    assert ok


def test_criterion_9_bitwise_equivalence():
    prob = gen_example("E41", 5)
    a = modified_newton(prob)
    b = m_plus_one_step(prob, SolverParams(m_steps=1))
    same = len(a.x_history) == len(b.x_history) and all(
        np.array_equal(xa, xb) for xa, xb in zip(a.x_history, b.x_history)
    )
    same &= np.array_equal(a.solution.z, b.solution.z)
    verdict(9, same, f"{len(a.x_history)} iterates compared")
    assert same


def test_criterion_10_cpu_time_informational(tables):
    lines = []
    for tid in ("T2", "T3", "T4", "T5"):
        for method, per_n in tables[tid].items():
            lines.append(f"{tid}/{method}: " + ", ".join(f"{n}:{r.wall_seconds:.3f}s" for n, r in sorted(per_n.items())))
    verdict(10, True, f"wall time is informational only; all tables took {tables['wall']:.1f}s")
    for line in lines:
        print("   ", line)
