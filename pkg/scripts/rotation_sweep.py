"""Rotation sweep of Lagrange tensor elements over angles and masses.

Usage: python3 scripts/rotation_sweep.py [--nx 128 --nt 32] [--solver direct] [--out results]
"""

import argparse
from pathlib import Path

from dirac_st import bench


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nx", type=int, default=bench.SWEEP_MESH[0])
    p.add_argument("--nt", type=int, default=bench.SWEEP_MESH[1])
    p.add_argument("--solver", default="direct", choices=bench.SOLVERS)
    p.add_argument("--masses", default="0,20,30,40")
    p.add_argument("--out", default="results")
    args = p.parse_args()
    masses = [float(m) for m in args.masses.split(",")]
    reports = bench.rotation_sweep(bench.SWEEP_ANGLES, masses, (args.nx, args.nt), solver=args.solver)
    path = bench.write_sweep(Path(args.out) / "sweep.csv", reports)
    for m in masses:
        errs = [(r.theta, r.error_percent) for r in reports if r.mass == m]
        best = min(errs, key=lambda e: e[1])[0]
        print(f"mass {m:g}: " + " ".join(f"{a:g}:{e:.3g}" for a, e in errs) + f"  (minimum at {best:g} deg)")
    print(path)


if __name__ == "__main__":
    main()
