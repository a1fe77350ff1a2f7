"""Experiment configs, error diagnostics, the benchmark table registry and sweeps."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import assembly, krylov
from .analytic import GaussianPacket, exact_solution
from .core import PhysParams, SpaceTimeGrid, SpinorField, build_grid

SOLVERS = ("bicgstab", "gmres", "direct")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class ExperimentError(RuntimeError):
    """Failure inside one pipeline stage; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class UndefinedErrorNorm(ValueError):
    pass


class UndefinedCentroid(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One run. ``None`` fields take scheme-dependent defaults (see ``resolved``)."""

    scheme: str = "diamond"
    nx: int = 24
    nt: int = 48
    x_range: tuple | None = None
    t_max: float = 0.8
    theta: float | None = None
    mass: float = 0.0
    a: float = 8.0
    b: float = 4.0
    center: float | None = None
    tol: float = 1e-6
    solver: str = "bicgstab"
    restart: int = 50
    max_iter: int | None = None
    left: str | None = None
    right: str | None = None
    top: str | None = None

    def resolved(self) -> "ExperimentConfig":
        if self.scheme not in assembly.SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(assembly.SCHEMES)}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        if not self.tol > 0:
            raise ConfigError("tolerance must be positive")
        if self.restart < 1:
            raise ConfigError("restart must be at least 1")
        theta = self.theta if self.theta is not None else (45.0 if self.scheme == "diamond" else 0.0)
        x_range = self.x_range if self.x_range is not None else ((0.0, 1.2) if self.scheme == "diamond" else (0.0, 1.6))
        center = self.center if self.center is not None else default_center(theta, self.mass)
        bc = assembly.default_boundary(self.scheme, theta, self.mass)
        return replace(
            self,
            theta=float(theta),
            x_range=(float(x_range[0]), float(x_range[1])),
            center=float(center),
            left=self.left or bc.left,
            right=self.right or bc.right,
            top=self.top or bc.top,
        )

    @property
    def boundary(self) -> assembly.BoundaryConfig:
        c = self.resolved()
        try:
            return assembly.BoundaryConfig(c.left, c.right, c.top)
        except assembly.AssemblyError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def packet(self) -> GaussianPacket:
        return GaussianPacket(self.a, self.b, self.resolved().center)


def default_center(theta: float, mass: float) -> float:
    """Packet centre keeping the leftward-moving packet inside the default domain."""
    if mass > 0:
        return 0.8
    return 1.1 if theta == 0.0 else 0.5


@dataclass
class ExperimentReport:
    """Outcome of one run; CSV columns follow the field order below."""

    scheme: str
    nx: int
    nt: int
    theta: float
    mass: float
    solver: str
    tol: float
    matrix_size: int
    unknowns: int
    iterations: float
    residual: float
    converged: bool
    error_percent: float
    field_error_percent: float
    centroid_speed: float
    checkerboard_amplitude: float
    wall_time: float
    note: str = ""
    config: ExperimentConfig = field(default=None, repr=False, compare=False)

    def row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "config"}


REPORT_COLUMNS = [f.name for f in fields(ExperimentReport) if f.name != "config"]


# -- diagnostics ------------------------------------------------------------


def l2_error_percent(numerical: SpinorField, exact: SpinorField) -> float:
    """100 * ||num - exact|| / ||exact|| over nodal spinor values only."""
    if numerical.dofmap.total_dofs != exact.dofmap.total_dofs or numerical.grid != exact.grid:
        raise ValueError("fields live on different grids")
    num, ex = numerical.nodal(), exact.nodal()
    norm = np.linalg.norm(ex)
    if norm == 0:
        raise UndefinedErrorNorm("relative error undefined for a zero exact field")
    return float(100.0 * np.linalg.norm(num - ex) / norm)


def field_error_percent(scheme: str, field_: SpinorField, exact) -> float:
    """Relative space-time L2 error of the discrete field inside the cells.

    Uses the scheme's own interpolant and Gauss quadrature; ``exact(x, t)``
    is evaluated at the physical quadrature points.
    """
    xq, tq, psi, w = assembly.cell_quadrature(scheme, field_.grid, field_.coeffs)
    ref = exact(xq, tq)[0]
    num = (w[..., None] * np.abs(psi - ref) ** 2).sum()
    den = (w[..., None] * np.abs(ref) ** 2).sum()
    if den == 0:
        raise UndefinedErrorNorm("relative error undefined for a zero exact field")
    return float(100.0 * math.sqrt(num / den))


def _row_centroid(grid: SpaceTimeGrid, density_row, j: int):
    total = density_row.sum()
    if not total > 0:
        raise UndefinedCentroid(f"time row {j} carries no density")
    x = grid.x0 + grid.dx * np.arange(grid.nx + 1)
    xp, tp = grid.to_physical(x, np.full_like(x, j * grid.dt))
    return float((density_row * xp).sum() / total), float((density_row * tp).sum() / total)


def centroid_speed(field_: SpinorField) -> float:
    """Centroid displacement between the first and last lattice rows over the elapsed time.

    On an unrotated grid this is (x_c(t_max) - x_c(0)) / t_max. On a rotated
    grid the rows are not time slices, so the density-weighted physical
    points of both rows are used: dx' / dt'.
    """
    g = field_.grid
    rho = (np.abs(field_.nodal()) ** 2).sum(axis=-1)
    x0, t0 = _row_centroid(g, rho[0], 0)
    x1, t1 = _row_centroid(g, rho[-1], g.nt)
    return (x1 - x0) / (t1 - t0)


def checkerboard_amplitude(field_: SpinorField) -> float:
    """Largest period-2 (Nyquist) amplitude along t over all x, relative to the field RMS.

    The second difference along t removes the smooth part before the
    alternating sum, so slowly varying fields score near zero and the pure
    mode (-1)^j scores exactly one.
    """
    psi = field_.nodal()  # (nt+1, nx+1, 2)
    rms = math.sqrt(float((np.abs(psi) ** 2).sum(axis=-1).mean()))
    if rms == 0:
        return 0.0
    d2 = psi[:-2] - 2 * psi[1:-1] + psi[2:]
    sign = (-1.0) ** np.arange(1, psi.shape[0] - 1)
    amp = np.abs((sign[:, None, None] * d2).sum(axis=0)) / (4 * d2.shape[0])
    return float(np.sqrt((amp**2).sum(axis=-1)).max() / rms)


# -- pipeline ---------------------------------------------------------------


def build_experiment(config: ExperimentConfig):
    """Grid, reference solution and assembled system for a resolved config."""
    c = config.resolved()
    try:
        grid = build_grid(c.nx, c.nt, c.x_range, c.t_max, c.theta)
        params = PhysParams(c.mass)
        packet = GaussianPacket(c.a, c.b, c.center)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    xp, _ = grid.physical_coords()
    exact = exact_solution(packet, c.mass, (float(xp.min()), float(xp.max())))
    try:
        system = assembly.assemble(c.scheme, grid, params, config.boundary, exact)
    except assembly.AssemblyError as exc:
        raise ConfigError(str(exc)) from None
    return grid, exact, system


def _solve(c: ExperimentConfig, system):
    try:
        return krylov.solve(system, c.solver, tol=c.tol, restart=c.restart, max_iter=c.max_iter), ""
    except krylov.BreakdownError as exc:
        return exc.report, f"breakdown: {exc}"


def run_experiment(config: ExperimentConfig, grid_dump=None, return_field: bool = False):
    """Assemble, solve and compare against the reference solution.

    Returns an ExperimentReport (and the solved SpinorField when
    ``return_field``). Config problems raise ConfigError; failures in later
    stages raise ExperimentError tagged with the stage.
    """
    c = config.resolved()
    grid, exact, system = build_experiment(c)
    t0 = time.perf_counter()
    try:
        report, note = _solve(c, system)
    except (ValueError, RuntimeError, MemoryError) as exc:
        raise ExperimentError("solve", exc) from exc
    wall = time.perf_counter() - t0
    if report.method == "least-squares":
        note = "rank-deficient system: minimum-norm least-squares solution"
    try:
        solved = SpinorField(system.dofmap, system.expand(report.x))
        reference = SpinorField(system.dofmap, assembly.nodal_coefficients(c.scheme, grid, exact))
        err = l2_error_percent(solved, reference)
        ferr = field_error_percent(c.scheme, solved, exact)
        try:
            speed = centroid_speed(solved)
        except UndefinedCentroid:
            speed = float("nan")
        cb = checkerboard_amplitude(solved)
    except (ValueError, FloatingPointError) as exc:
        raise ExperimentError("evaluate", exc) from exc
    out = ExperimentReport(
        scheme=c.scheme,
        nx=c.nx,
        nt=c.nt,
        theta=c.theta,
        mass=c.mass,
        solver=c.solver,
        tol=c.tol,
        matrix_size=system.matrix_size,
        unknowns=system.n,
        iterations=float(report.iterations),
        residual=float(report.residual),
        converged=bool(report.converged),
        error_percent=err,
        field_error_percent=ferr,
        centroid_speed=speed,
        checkerboard_amplitude=cb,
        wall_time=wall,
        note=note,
        config=c,
    )
    if grid_dump is not None:
        write_grid(grid_dump, solved)
    return (out, solved) if return_field else out


# -- output -----------------------------------------------------------------


def write_grid(path, field_: SpinorField):
    """Plain-text dump: header ``nx nt x0 x_max t_max theta`` then ``i j x t re1 im1 re2 im2``.

    x and t are the physical coordinates of each node.
    """
    g = field_.grid
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    psi = field_.nodal()
    xp, tp = g.physical_coords()
    with open(path, "w") as fh:
        fh.write(f"{g.nx} {g.nt} {g.x0:.17g} {g.x_max:.17g} {g.t_max:.17g} {g.theta:.17g}\n")
        for j in range(g.nt + 1):
            for i in range(g.nx + 1):
                p = psi[j, i]
                fh.write(
                    f"{i} {j} {xp[j, i]:.17g} {tp[j, i]:.17g} "
                    f"{p[0].real:.17g} {p[0].imag:.17g} {p[1].real:.17g} {p[1].imag:.17g}\n"
                )
    return path


def read_grid(path):
    """Inverse of ``write_grid``: (header dict, int indices (N, 2), coords (N, 2), psi (N, 2))."""
    with open(path) as fh:
        head = fh.readline().split()
    header = dict(zip(("nx", "nt", "x0", "x_max", "t_max", "theta"), map(float, head)))
    header["nx"], header["nt"] = int(header["nx"]), int(header["nt"])
    data = np.loadtxt(path, skiprows=1, ndmin=2)
    psi = data[:, 4::2] + 1j * data[:, 5::2]
    return header, data[:, :2].astype(int), data[:, 2:4], psi


def write_reports(path, reports, columns=None):
    columns = columns or REPORT_COLUMNS
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in reports:
            w.writerow(r.row() if isinstance(r, ExperimentReport) else r)
    return path


# -- benchmark table registry -------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    """One published benchmark row: mesh plus the printed size, iterations and error."""

    tag: str
    scheme: str
    nx: int
    nt: int
    matrix_size: int
    iterations: float
    error_percent: float
    residual: float | None = None

    @property
    def unequal_steps(self) -> bool:
        """True for the rows run with dt = 2 dx on [0, 1.6] x [0, 0.8]."""
        return self.scheme != "diamond" and self.nx == 4 * self.nt

    def config(self, **overrides) -> ExperimentConfig:
        return ExperimentConfig(scheme=self.scheme, nx=self.nx, nt=self.nt, **overrides)


def _rows(tag, scheme, spec):
    return tuple(TableRow(tag, scheme, *r) for r in spec)


_FD_MESHES = ((32, 16), (48, 24), (64, 32), (80, 40), (64, 16), (80, 20), (96, 24), (112, 28))
_FD_SIZES = (1122, 2450, 4290, 6642, 2210, 3402, 4850, 6554)
_HERMITE_MESHES = ((30, 15), (40, 20), (50, 25), (60, 30), (70, 35), (80, 40))
_HERMITE_SIZES = (2976, 5166, 7956, 11346, 15336, 19926)
_LINEAR_SIZES = (2450, 4290, 6642, 9506, 12882, 16770)

TABLES = {
    "fd-central": _rows(
        "fd-central",
        "central",
        [
            (*m, s, it, e)
            for m, s, it, e in zip(
                _FD_MESHES,
                _FD_SIZES,
                (97.5, 120.5, 161, 418.5, 129, 250, 307.5, 578.5),
                (14.38, 6.28, 9.04, 15.37, 76.79, 56.40, 34.36, 38.85),
            )
        ],
    ),
    "fd-balanced": _rows(
        "fd-balanced",
        "balanced",
        [
            (*m, s, it, e, r)
            for m, s, it, e, r in zip(
                _FD_MESHES,
                _FD_SIZES,
                (120, 863, 53.5, 65, 996, 536, 832, 818),
                (27.89, 19.34, 15.30, 11.11, 75.76, 60.29, 45.36, 38.94),
                (0.044, 0.03, 0.029, 0.025, 0.13, 0.03, 0.26, 0.34),
            )
        ],
    ),
    "tri": _rows(
        "tri",
        "triangle",
        [
            (*m, s, it, e)
            for m, s, it, e in zip(
                _FD_MESHES,
                _FD_SIZES,
                (2.5, 2.5, 2.5, 2.5, 5, 7, 4, 4),
                (101.6, 100.9, 100.6, 100.4, 108.45, 108.93, 106.06, 105.49),
            )
        ],
    ),
    "hermite": _rows(
        "hermite",
        "hermite",
        [
            (*m, s, it, e)
            for m, s, it, e in zip(
                _HERMITE_MESHES,
                _HERMITE_SIZES,
                (961, 1801, 2888, 4221, 5113, 6186),
                (21.92, 25.64, 16.09, 10.97, 7.35, 8.81),
            )
        ],
    ),
    "trig": _rows(
        "trig",
        "trig",
        [
            (*m, s, it, e)
            for m, s, it, e in zip(
                _HERMITE_MESHES,
                _HERMITE_SIZES,
                (1098, 1992, 3021, 4375, 5339, 6238),
                (6.87, 5.15, 4.19, 3.69, 3.50, 3.18),
            )
        ],
    ),
    "lagrange": _rows(
        "lagrange",
        "lagrange",
        [
            (*m, s, it, e)
            for m, s, it, e in zip(
                ((48, 24), (64, 32), (80, 40), (96, 48), (112, 56), (128, 64)),
                _LINEAR_SIZES,
                (331, 679, 899, 1230, 1569, 2012),
                (4.64, 2.86, 2.22, 3.07, 3.49, 7.67),
            )
        ],
    ),
    "diamond": _rows(
        "diamond",
        "diamond",
        [
            (*m, s, it, e)
            for m, s, it, e in zip(
                ((24, 48), (32, 64), (40, 80), (48, 96), (56, 112), (64, 128)),
                _LINEAR_SIZES,
                (305, 621, 883, 1177, 1593, 1897),
                (1.28, 0.71, 0.46, 0.32, 0.23, 0.18),
            )
        ],
    ),
}


def run_table(tag: str, **overrides) -> list[ExperimentReport]:
    if tag not in TABLES:
        raise ConfigError(f"unknown table {tag!r}; choose from {', '.join(TABLES)}")
    return [run_experiment(row.config(**overrides)) for row in TABLES[tag]]


# -- rotation sweep -----------------------------------------------------------

SWEEP_ANGLES = tuple(range(0, 50, 5))
SWEEP_MASSES = (0.0, 20.0, 30.0, 40.0)
SWEEP_MESH = (128, 32)
SWEEP_COLUMNS = ["angle", "mass", "iterations", "error_percent"]


def sweep_config(angle: float, mass: float, mesh=SWEEP_MESH, **overrides) -> ExperimentConfig:
    """Lagrange tensor elements on a lattice rotated by ``angle`` degrees.

    Massless runs stretch the lattice to x_max = (2/3) sec(45 - angle) with
    the packet at 0.5 and exact data on the left edge. Massive runs use
    [0, 1.6] x [0, 0.4] with a zero wall on the left edge and the packet at 0.8.
    """
    if not 0.0 <= angle <= 45.0:
        raise ConfigError(f"rotation angle {angle} outside [0, 45]")
    if mass > 0:
        x_range, center, left = (0.0, 1.6), 0.8, "dirichlet-zero"
    else:
        x_range, center, left = (0.0, (2.0 / 3.0) / math.cos(math.radians(45.0 - angle))), 0.5, "dirichlet-exact"
    base = dict(
        scheme="lagrange",
        nx=mesh[0],
        nt=mesh[1],
        x_range=x_range,
        t_max=0.4,
        theta=float(angle),
        mass=float(mass),
        center=center,
        left=left,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def rotation_sweep(angles=SWEEP_ANGLES, masses=SWEEP_MASSES, mesh=SWEEP_MESH, **overrides) -> list[ExperimentReport]:
    """One report per (angle, mass), ordered mass-major then by angle."""
    return [run_experiment(sweep_config(a, m, mesh, **overrides)) for m in masses for a in angles]


def write_sweep(path, reports):
    rows = [
        {"angle": r.theta, "mass": r.mass, "iterations": r.iterations, "error_percent": r.error_percent}
        for r in reports
    ]
    return write_reports(path, rows, SWEEP_COLUMNS)
