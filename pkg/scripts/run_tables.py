"""Rerun every benchmark table and write one CSV per table.

Usage: python3 scripts/run_tables.py [--solver direct|bicgstab|gmres] [--out results]

The direct solver gives the discretisation error; the Krylov solvers give
iteration counts (they stall on most of these systems without a
preconditioner, so their iterates carry large error).
"""

import argparse
from pathlib import Path

from dirac_st import bench


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--solver", default="direct", choices=bench.SOLVERS)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", default="results")
    p.add_argument("--tags", default=",".join(bench.TABLES))
    args = p.parse_args()
    out = Path(args.out)
    for tag in args.tags.split(","):
        reports = bench.run_table(tag, solver=args.solver, tol=args.tol)
        path = bench.write_reports(out / f"table_{tag}_{args.solver}.csv", reports)
        print(f"{tag}: {path}")
        for row, r in zip(bench.TABLES[tag], reports):
            print(
                f"  {r.nx:>4}x{r.nt:<4} size {r.matrix_size:>6} (published {row.matrix_size:>6})"
                f"  error {r.error_percent:9.4g}%  field error {r.field_error_percent:8.4g}%"
                f"  speed {r.centroid_speed:+.3f}  iterations {r.iterations:g} (published {row.iterations:g})"
            )


if __name__ == "__main__":
    main()
