"""Benchmark harness: single runs and the IT/RES grids of the result tables.

    smoothicp run --family e41 --p 20 --method sm_m1
    smoothicp run --matrix M.mtx --q q.txt --mapping arctan --method msmn
    smoothicp table T2 --max-n 1600 --output csv
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .problems import FAMILIES, MAPPINGS, IcpProblem, check_solution, gen_example, load_problem
from .solvers import METHODS, SolveReport, SolverParams, _Counter, _initialize, _InitFailure, solve_with

log = logging.getLogger("smoothicp")

EXIT_OK, EXIT_SOLVER, EXIT_SPEC = 0, 2, 3
VERIFY_TOL = 1e-5
CSV_HEADER = ["method", "n", "iterations", "wall_seconds", "residual", "verified"]

# table id -> (family, p values)
TABLES = {
    "T2": ("E41", (20, 40, 60, 80)),
    "T3": ("E42", (20, 40, 60, 80)),
    "T4": ("E43", (55, 155, 205)),
    "T5": ("E44", (55, 155, 205)),
}
TABLE_METHODS = ("smn", "msmn", "sm_m1")


class SpecError(ValueError):
    pass


@dataclass
class RunSpec:
    family: str | None = None
    p: int | None = None
    n: int | None = None
    matrix: str | None = None
    q: str | None = None
    mapping: str = "zero"
    method: str = "sm_m1"
    params: SolverParams = field(default_factory=SolverParams)
    output: str = "pretty"
    seed: int = 0

    def problem(self) -> IcpProblem:
        builtin = self.family is not None
        from_file = self.matrix is not None or self.q is not None
        if builtin == from_file:
            raise SpecError("give exactly one of --family or --matrix/--q")
        if self.method not in METHODS:
            raise SpecError(f"unknown method {self.method!r}")
        if from_file:
            if self.matrix is None or self.q is None:
                raise SpecError("--matrix and --q must be given together")
            try:
                return load_problem(self.matrix, self.q, self.mapping)
            except (OSError, ValueError) as exc:
                raise SpecError(str(exc)) from exc
        family = self.family.upper()
        if family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        p = self.p
        if self.n is not None:
            root = math.isqrt(self.n)
            if root * root != self.n:
                raise SpecError(f"n={self.n} is not a perfect square")
            if p is not None and p != root:
                raise SpecError(f"--p {p} contradicts --n {self.n}")
            p = root
        if p is None or p < 1:
            raise SpecError("builtin families need --p >= 1 (or --n = p**2)")
        return gen_example(family, p)


@dataclass
class BenchRow:
    method: str
    n: int
    iterations: int
    wall_seconds: float
    residual: float
    verified: str
    termination: str
    init_iterations: int = 0

    def csv_fields(self) -> list[str]:
        return [
            self.method,
            str(self.n),
            str(self.iterations),
            f"{self.wall_seconds:.3f}",
            f"{self.residual:.2e}",
            self.verified,
        ]


def _row(prob: IcpProblem, report: SolveReport, wall: float) -> BenchRow:
    verdict = check_solution(prob, report.solution, VERIFY_TOL)
    return BenchRow(
        method=report.method,
        n=prob.n,
        iterations=report.outer_iterations,
        wall_seconds=wall,
        residual=report.final_residual,
        verified="accept" if verdict.accepted else "reject",
        termination=report.termination,
        init_iterations=report.init_iterations,
    )


def run(spec: RunSpec) -> tuple[BenchRow, SolveReport]:
    prob = spec.problem()
    t0 = time.perf_counter()
    report = solve_with(spec.method, prob, spec.params)
    wall = time.perf_counter() - t0
    if not report.converged:
        log.warning("%s on %s stopped: %s %s", spec.method, prob.name, report.termination, report.message)
    return _row(prob, report, wall), report


def run_table(table_id: str, params: SolverParams | None = None, max_n: int | None = None,
              methods=TABLE_METHODS) -> list[BenchRow]:
    """One row per (method, n), methods in the given order, sizes ascending.

    The modulus-sweep seed is shared by the Newton-type methods of one size;
    its cost is charged to every row that uses it.
    """
    table_id = table_id.upper()
    if table_id not in TABLES:
        raise SpecError(f"unknown table {table_id!r}; choose from {sorted(TABLES)}")
    params = params or SolverParams()
    family, ps = TABLES[table_id]
    results: dict[tuple[str, int], BenchRow] = {}
    for p in ps:
        if max_n is not None and p * p > max_n:
            continue
        prob = gen_example(family, p)
        t0 = time.perf_counter()
        try:
            start = _initialize(prob, params, _Counter())
        except _InitFailure as exc:
            log.warning("seed failed on %s: %s", prob.name, exc)
            start = None
        seed_wall = time.perf_counter() - t0
        for method in methods:
            t0 = time.perf_counter()
            report = solve_with(method, prob, params, start=start)
            wall = time.perf_counter() - t0 + (0.0 if method == "modulus" else seed_wall)
            row = _row(prob, report, wall)
            log.info("%s n=%d %s IT=%d RES=%.2e %s", table_id, prob.n, method, row.iterations,
                     row.residual, row.verified)
            results[(method, prob.n)] = row
    return [results[k] for k in sorted(results, key=lambda k: (methods.index(k[0]), k[1]))]


def format_rows(rows: list[BenchRow], fmt: str, reports: list[SolveReport] | None = None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(r.csv_fields())
        return buf.getvalue()
    if fmt == "json":
        payload = []
        for i, r in enumerate(rows):
            item = asdict(r)
            if reports is not None:
                rep = reports[i]
                item.update(
                    residual_history=list(map(float, rep.residual_history)),
                    step_norm_history=list(map(float, rep.step_norm_history)),
                    factorizations=rep.factorizations,
                    linear_solves=rep.linear_solves,
                    z=rep.solution.z.tolist(),
                    w=rep.solution.w.tolist(),
                )
            payload.append(item)
        return json.dumps(payload, indent=2) + "\n"
    lines = [f"{'method':<8}{'n':>8}{'IT':>5}{'seed':>6}{'wall[s]':>10}{'RES':>11}  {'verified':<9}termination"]
    for r in rows:
        lines.append(
            f"{r.method:<8}{r.n:>8}{r.iterations:>5}{r.init_iterations:>6}{r.wall_seconds:>10.3f}"
            f"{r.residual:>11.2e}  {r.verified:<9}{r.termination}"
        )
    return "\n".join(lines) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SPEC, f"{self.prog}: error: {message}\n")


def _add_param_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("solver parameters (defaults: alpha=beta=1, c=30, eps=1e-6, xi1=xi2=1, m=3)")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--xi1", type=float)
    g.add_argument("--xi2", type=float)
    g.add_argument("--m-steps", type=int)
    g.add_argument("--max-outer", type=int)
    g.add_argument("--init-steps", type=int, help="modulus sweeps used as seed")
    g.add_argument("--init-max-inner", type=int)
    g.add_argument("--refresh-mapping", action="store_true", default=None,
                   help="re-evaluate m(z) after every Newton-type step")
    g.add_argument("--corrector", choices=("smoothed", "exact"))


def _params_from(args) -> SolverParams:
    try:
        return SolverParams().with_overrides(
            alpha=args.alpha, beta=args.beta, c=args.c, eps=args.eps, xi1=args.xi1, xi2=args.xi2,
            m_steps=args.m_steps, max_outer=args.max_outer, init_outer_steps=args.init_steps,
            init_max_inner=args.init_max_inner, refresh_mapping=args.refresh_mapping,
            corrector=args.corrector,
        )
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="smoothicp", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="solve one instance")
    r.add_argument("--family", type=str.upper, choices=sorted(FAMILIES))
    r.add_argument("--p", type=int)
    r.add_argument("--n", type=int)
    r.add_argument("--matrix", help="Matrix Market file for M")
    r.add_argument("--q", help="text file, one value of q per line")
    r.add_argument("--mapping", choices=sorted(MAPPINGS), default="zero")
    r.add_argument("--method", choices=sorted(METHODS), default="sm_m1")
    r.add_argument("--output", choices=("csv", "json", "pretty"), default="pretty")
    r.add_argument("--seed", type=int, default=0, help="seed for the --oracle cross-check")
    r.add_argument("--oracle", action="store_true", help="cross-check against active-set enumeration (n <= 10)")
    _add_param_flags(r)

    t = sub.add_parser("table", help="reproduce the IT/RES grid of a result table")
    t.add_argument("table_id", type=str.upper, choices=sorted(TABLES))
    t.add_argument("--max-n", type=int)
    t.add_argument("--include-modulus", action="store_true")
    t.add_argument("--output", choices=("csv", "json", "pretty"), default="pretty")
    t.add_argument("--seed", type=int, default=0)
    _add_param_flags(t)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    np.seterr(all="ignore")
    try:
        params = _params_from(args)
        if args.command == "run":
            spec = RunSpec(
                family=args.family, p=args.p, n=args.n, matrix=args.matrix, q=args.q,
                mapping=args.mapping, method=args.method, params=params, output=args.output,
                seed=args.seed,
            )
            row, report = run(spec)
            if args.oracle:
                from .verification import oracle_match, oracle_solve

                oracle = oracle_solve(spec.problem(), seed=args.seed)
                matched = bool(oracle.solutions) and oracle_match(report, oracle, VERIFY_TOL)
                log.warning("oracle: %d solution(s), match=%s", len(oracle), matched)
            sys.stdout.write(format_rows([row], args.output, [report]))
            return EXIT_OK if report.converged else EXIT_SOLVER
        methods = TABLE_METHODS + (("modulus",) if args.include_modulus else ())
        rows = run_table(args.table_id, params, args.max_n, methods)
        sys.stdout.write(format_rows(rows, args.output))
        bad = [r for r in rows if r.termination != "converged" or r.verified != "accept"]
        return EXIT_SOLVER if bad else EXIT_OK
    except SpecError as exc:
        print(f"smoothicp: bad run spec: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
