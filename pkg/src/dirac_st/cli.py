"""Command line entry point: ``python3 -m dirac_st {run,table,sweep,dump-system}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import assembly, bench

EXIT_OK, EXIT_FAILED, EXIT_NOT_CONVERGED, EXIT_BAD_CONFIG = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 3), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_CONFIG, f"{self.prog}: invalid configuration: {message}\n")


# flag name -> (type, ExperimentConfig field or None for CLI-only keys)
_KEYS = {
    "scheme": (str, "scheme"),
    "nx": (int, "nx"),
    "nt": (int, "nt"),
    "theta": (float, "theta"),
    "mass": (float, "mass"),
    "a": (float, "a"),
    "b": (float, "b"),
    "center": (float, "center"),
    "tol": (float, "tol"),
    "solver": (str, "solver"),
    "restart": (int, "restart"),
    "max-iter": (int, "max_iter"),
    "x-min": (float, None),
    "x-max": (float, None),
    "t-max": (float, "t_max"),
    "left": (str, "left"),
    "right": (str, "right"),
    "top": (str, "top"),
    "out": (str, None),
    "dump-grid": (bool, None),
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise bench.ConfigError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; keys mirror the flags."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise bench.ConfigError(f"cannot read config file: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise bench.ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in _KEYS:
            raise bench.ConfigError(f"{path}:{n}: unknown key {key!r}")
        kind = _KEYS[key][0]
        try:
            values[key] = _parse_bool(value) if kind is bool else kind(value)
        except ValueError:
            raise bench.ConfigError(f"{path}:{n}: bad value for {key}: {value!r}") from None
    return values


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--out", help="output directory (default: current directory)")
    for key, (kind, _) in _KEYS.items():
        if key in ("out", "dump-grid"):
            continue
        p.add_argument(f"--{key}", type=kind, default=None)
    p.add_argument("--dump-grid", action="store_true", default=None, help="write the nodal solution as text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dirac_st", description="Space-time Dirac solver benchmarks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_common(sub.add_parser("run", help="run one experiment"))
    t = sub.add_parser("table", help="reproduce a benchmark table")
    t.add_argument("tag", help="one of " + ", ".join(bench.TABLES))
    _add_common(t)
    s = sub.add_parser("sweep", help="rotation sweep of Lagrange tensor elements")
    s.add_argument("--angles", default=None, help="comma separated degrees (default 0,5,...,45)")
    s.add_argument("--masses", default=None, help="comma separated masses (default 0,20,30,40)")
    _add_common(s)
    _add_common(sub.add_parser("dump-system", help="export the assembled operator in Matrix Market format"))
    return parser


def _merged(args) -> dict:
    values = read_config_file(args.config) if args.config else {}
    for key in _KEYS:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            values[key] = flag
    return values


def _config(values: dict, **base) -> bench.ExperimentConfig:
    kw = dict(base)
    for key, (_, name) in _KEYS.items():
        if name and key in values:
            kw[name] = values[key]
    if "x-min" in values or "x-max" in values:
        lo = values.get("x-min", 0.0)
        hi = values.get("x-max")
        if hi is None:
            raise bench.ConfigError("x-min given without x-max")
        kw["x_range"] = (lo, hi)
    cfg = bench.ExperimentConfig(**kw)
    cfg.resolved()
    return cfg


def _floats(text, default):
    if text is None:
        return default
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise bench.ConfigError(f"bad number list {text!r}") from None


def _print_reports(reports):
    cols = ["scheme", "nx", "nt", "theta", "mass", "matrix_size", "iterations", "residual", "converged", "error_percent"]
    print(" ".join(f"{c:>13}" for c in cols))
    for r in reports:
        row = r.row()
        cells = []
        for c in cols:
            v = row[c]
            cells.append(f"{v:>13.4g}" if isinstance(v, float) else f"{str(v):>13}")
        print(" ".join(cells))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = _merged(args)
        out = Path(values.get("out") or ".")
        if args.command == "run":
            cfg = _config(values)
            grid_path = out / "grid.txt" if values.get("dump-grid") else None
            report = bench.run_experiment(cfg, grid_dump=grid_path)
            bench.write_reports(out / "report.csv", [report])
            for k, v in report.row().items():
                print(f"{k} = {v}")
            return EXIT_OK if report.converged else EXIT_NOT_CONVERGED
        if args.command == "table":
            overrides = {}
            for key in ("tol", "solver", "restart", "max-iter", "a", "b"):
                if key in values:
                    overrides[_KEYS[key][1]] = values[key]
            reports = bench.run_table(args.tag, **overrides)
            bench.write_reports(out / f"table_{args.tag}.csv", reports)
            _print_reports(reports)
            return EXIT_OK if all(r.converged for r in reports) else EXIT_NOT_CONVERGED
        if args.command == "sweep":
            angles = _floats(args.angles, bench.SWEEP_ANGLES)
            masses = _floats(args.masses, bench.SWEEP_MASSES)
            mesh = (values.get("nx", bench.SWEEP_MESH[0]), values.get("nt", bench.SWEEP_MESH[1]))
            overrides = {_KEYS[k][1]: values[k] for k in ("tol", "solver", "restart", "max-iter", "a", "b") if k in values}
            reports = bench.rotation_sweep(angles, masses, mesh, **overrides)
            bench.write_sweep(out / "sweep.csv", reports)
            _print_reports(reports)
            return EXIT_OK if all(r.converged for r in reports) else EXIT_NOT_CONVERGED
        if args.command == "dump-system":
            cfg = _config(values)
            _, _, system = bench.build_experiment(cfg)
            mtx, side = assembly.dump_system(system, out / f"{cfg.scheme}_{cfg.nx}x{cfg.nt}")
            print(f"wrote {mtx} ({system.matrix_size} x {system.matrix_size}) and {side}")
            return EXIT_OK
    except bench.ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except bench.ExperimentError as exc:
        print(f"experiment failed in stage {exc}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
