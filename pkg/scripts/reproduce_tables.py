"""Run the IT/RES grids for the four benchmark tables and print them next to
reference iteration counts.

    python3 scripts/reproduce_tables.py --max-n 6400
    python3 scripts/reproduce_tables.py --tables T4 T5 --max-n 24025 --csv out.csv
"""

import argparse
import csv

from smoothicp.cli import CSV_HEADER, TABLES, run_table
from smoothicp.solvers import SolverParams

# reference IT per (table, method), in the size order of TABLES
PUBLISHED_IT = {
    "T2": {"smn": (5, 7, 8, 8), "msmn": (3, 3, 3, 3), "sm_m1": (2, 3, 3, 3)},
    "T3": {"smn": (2, 6, 6, 7), "msmn": (3, 3, 3, 3), "sm_m1": (2, 2, 2, 2)},
    "T4": {"smn": (8, 10, 10), "msmn": (3, 2, 3), "sm_m1": (2, 2, 2)},
    "T5": {"smn": (6, 7, 7), "msmn": (3, 3, 2), "sm_m1": (2, 2, 2)},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tables", nargs="+", default=sorted(TABLES), choices=sorted(TABLES))
    ap.add_argument("--max-n", type=int, default=6400)
    ap.add_argument("--init-max-inner", type=int)
    ap.add_argument("--refresh-mapping", action="store_true", default=None)
    ap.add_argument("--csv", help="also write all rows to this file")
    args = ap.parse_args()

    params = SolverParams().with_overrides(init_max_inner=args.init_max_inner, refresh_mapping=args.refresh_mapping)
    all_rows = []
    for tid in args.tables:
        _, ps = TABLES[tid]
        sizes = [p * p for p in ps]
        rows = run_table(tid, params, max_n=args.max_n)
        all_rows += [(tid, r) for r in rows]
        print(f"\n{tid}  (IT ours/reference, RES, verification at 1e-5)")
        for r in rows:
            want = PUBLISHED_IT[tid][r.method][sizes.index(r.n)]
            print(f"  {r.method:<6} n={r.n:<6} IT {r.iterations:>2}/{want:<2}"
                  f"  RES {r.residual:.2e}  {r.verified}  seed sweeps {r.init_iterations}  {r.wall_seconds:.2f}s")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["table"] + CSV_HEADER)
            for tid, r in all_rows:
                w.writerow([tid] + r.csv_fields())


if __name__ == "__main__":
    main()
