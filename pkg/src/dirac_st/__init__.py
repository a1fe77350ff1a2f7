"""Implicit space-time discretisations of the 1+1D Dirac equation.

Modules: ``core`` (grids, DOF maps, containers), ``analytic`` (reference
solutions), ``schemes`` (stencils and element matrices), ``assembly``
(global systems), ``krylov`` (iterative solvers) and ``bench``
(experiments and diagnostics).
"""

from .analytic import GaussianPacket, exact_solution, fourier_oracle, massless_exact
from .assembly import BoundaryConfig, assemble
from .bench import ExperimentConfig, ExperimentReport, rotation_sweep, run_experiment
from .core import PhysParams, SpaceTimeGrid, build_dofmap, build_grid
from .krylov import bicgstab, gmres

__all__ = [
    "BoundaryConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "GaussianPacket",
    "PhysParams",
    "SpaceTimeGrid",
    "assemble",
    "bicgstab",
    "build_dofmap",
    "build_grid",
    "exact_solution",
    "fourier_oracle",
    "gmres",
    "massless_exact",
    "rotation_sweep",
    "run_experiment",
]
