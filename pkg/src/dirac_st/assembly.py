"""Global system assembly and known-DOF partitioning."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import schemes
from .core import (
    DOFS_PER_NODE,
    EDGES,
    DofMap,
    IDENTITY2,
    PhysParams,
    SpaceTimeGrid,
    SparseSystem,
    build_dofmap,
    edge_nodes,
    finalize_csr,
)

FD_SCHEMES = ("central", "balanced")
FE_SCHEMES = ("triangle", "lagrange", "diamond", "hermite", "trig")
SCHEMES = FD_SCHEMES + FE_SCHEMES
POLICIES = ("natural", "dirichlet-zero", "dirichlet-exact")


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryConfig:
    """Policy for the three lattice edges besides the (always known) initial row."""

    left: str = "natural"
    right: str = "natural"
    top: str = "natural"

    def __post_init__(self):
        for edge in ("left", "right", "top"):
            if getattr(self, edge) not in POLICIES:
                raise AssemblyError(f"unknown boundary policy {getattr(self, edge)!r} on {edge}")

    def policy(self, edge: str) -> str:
        return "dirichlet-exact" if edge == "bottom" else getattr(self, edge)

    @property
    def known_edges(self) -> tuple:
        return tuple(e for e in EDGES if self.policy(e) != "natural")


def default_boundary(scheme: str, theta: float = 0.0, mass: float = 0.0) -> BoundaryConfig:
    """Natural sides on axis-aligned grids; in-flow Dirichlet on rotated ones."""
    if theta == 0.0 and scheme != "diamond":
        return BoundaryConfig()
    return BoundaryConfig(left="dirichlet-zero" if mass > 0 else "dirichlet-exact")


def check_compatible(scheme: str, grid: SpaceTimeGrid):
    if scheme not in SCHEMES:
        raise AssemblyError(f"unknown scheme {scheme!r}")
    if scheme == "diamond" and grid.theta != 45.0:
        raise AssemblyError("diamond elements require a 45 degree rotation")
    if scheme in FD_SCHEMES + ("triangle",) and grid.theta != 0.0:
        raise AssemblyError(f"{scheme} scheme is only defined on an unrotated grid")


def element_matrices(scheme: str, grid: SpaceTimeGrid, mass: float):
    if scheme == "triangle":
        return schemes.triangle_elements(grid.dx, grid.dt, mass)
    return (schemes.tensor_element(scheme, grid.dx, grid.dt, mass, grid.theta),)


def full_operator(scheme: str, grid: SpaceTimeGrid, dofmap: DofMap, mass: float) -> sp.csr_matrix:
    """Operator over all DOFs before partitioning (rows = equations/test functions)."""
    n = dofmap.total_dofs
    if scheme in FD_SCHEMES:
        Dx, Dt, Id = schemes.fd_operators(scheme, grid.nx, grid.nt, grid.dx, grid.dt)
        A = sp.kron(Dt, schemes.T_COEF) + sp.kron(Dx, schemes.X_COEF) + mass * sp.kron(Id, schemes.M_COEF)
        A = A.tocoo()
        return finalize_csr(A.row, A.col, A.data, (n, n))
    d = dofmap.dofs_per_node
    ci, cj = np.meshgrid(np.arange(grid.nx), np.arange(grid.nt), indexing="xy")
    ci, cj = ci.ravel(), cj.ravel()
    rows, cols, vals = [], [], []
    for el in element_matrices(scheme, grid, mass):
        nodes = np.stack([grid.node_index(ci + ox, cj + oy) for ox, oy in el.nodes], axis=1)
        # local (node, comp, kind) -> global dof, per cell
        gidx = ((nodes[:, :, None, None] * 2 + np.arange(2)[None, None, :, None]) * d + np.arange(d)).reshape(
            len(ci), -1
        )
        rows.append(np.repeat(gidx, el.size, axis=1).ravel())
        cols.append(np.tile(gidx, (1, el.size)).ravel())
        vals.append(np.broadcast_to(el.matrix.ravel(), (len(ci), el.size**2)).ravel())
    return finalize_csr(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (n, n))


def lattice_gradient(grid: SpaceTimeGrid, dpsi_dx, dpsi_dt):
    """Physical gradient to derivatives along the lattice axes (r, l)."""
    R = grid.jacobian()
    # d/dr = R[0,0] d/dx' + R[1,0] d/dt'; d/dl = R[0,1] d/dx' + R[1,1] d/dt'
    return R[0, 0] * dpsi_dx + R[1, 0] * dpsi_dt, R[0, 1] * dpsi_dx + R[1, 1] * dpsi_dt


def nodal_coefficients(scheme: str, grid: SpaceTimeGrid, exact) -> np.ndarray:
    """Interpolation coefficients of the exact solution over all DOFs."""
    d = DOFS_PER_NODE[scheme]
    xp, tp = grid.physical_coords()
    psi, gx, gt = exact(xp, tp)
    out = np.zeros((grid.n_nodes, 2, d), dtype=complex)
    out[:, :, 0] = psi.reshape(-1, 2)
    if d == 3:
        basis = schemes.BasisSet(schemes.SCHEME_FAMILY[scheme])
        dr, dl = lattice_gradient(grid, gx, gt)
        out[:, :, 1] = (dr * grid.dx / basis.deriv_scale).reshape(-1, 2)
        out[:, :, 2] = (dl * grid.dt / basis.deriv_scale).reshape(-1, 2)
    return out.ravel()


def sample_initial(scheme: str, grid: SpaceTimeGrid, dofmap: DofMap, bc: BoundaryConfig, exact) -> np.ndarray:
    """Prescribed values for every KNOWN DOF, in increasing DOF order."""
    values = np.zeros(dofmap.total_dofs, dtype=complex)
    exact_mask = np.zeros(dofmap.total_dofs, dtype=bool)
    d = dofmap.dofs_per_node
    for edge in EDGES:
        if bc.policy(edge) == "dirichlet-exact":
            nodes = edge_nodes(grid, edge)
            idx = ((nodes[:, None] * 2 + np.arange(2))[..., None] * d + np.arange(d)).ravel()
            exact_mask[idx] = True
    if exact_mask.any():
        if exact is None:
            raise AssemblyError("known values requested but no reference solution supplied")
        values[exact_mask] = nodal_coefficients(scheme, grid, exact)[exact_mask]
    # dirichlet-zero edges stay zero unless they overlap an exact edge
    return values[dofmap.known]


def assemble(scheme: str, grid: SpaceTimeGrid, params: PhysParams, bc: BoundaryConfig = None, exact=None):
    """Assemble and partition; returns a SparseSystem over the UNKNOWN DOFs.

    ``exact(x, t) -> (psi, dpsi/dx, dpsi/dt)`` supplies initial and
    Dirichlet-exact data at physical node coordinates.
    """
    check_compatible(scheme, grid)
    bc = default_boundary(scheme, grid.theta, params.mass) if bc is None else bc
    dofmap = build_dofmap(grid, scheme, bc.known_edges)
    A = full_operator(scheme, grid, dofmap, params.mass)
    known_vals = sample_initial(scheme, grid, dofmap, bc, exact)
    U, K = dofmap.unknown_indices, dofmap.known_indices
    A_uu = A[U][:, U].tocsr()
    A_uu.sort_indices()
    rhs = -(A[U][:, K] @ known_vals)
    return SparseSystem(A_uu, np.asarray(rhs, dtype=complex), A, dofmap, known_vals)


# -- Matrix Market export ---------------------------------------------------


def dump_system(system: SparseSystem, stem) -> tuple[Path, Path]:
    """Write the full operator (complex general) and a KNOWN-DOF side file."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    mtx = stem.with_suffix(".mtx")
    scipy.io.mmwrite(str(mtx), system.full.astype(complex), field="complex", symmetry="general")
    side = stem.with_name(stem.name + "_known.txt")
    K = system.dofmap.known_indices
    with open(side, "w") as fh:
        fh.write(f"# total_dofs {system.dofmap.total_dofs} known {len(K)}\n")
        for k, v in zip(K, system.known_values):
            fh.write(f"{k} {v.real:.17g} {v.imag:.17g}\n")
    return mtx, side


def load_system(stem):
    """Read back (full operator, known indices, known values) from ``dump_system``."""
    stem = Path(stem)
    A = scipy.io.mmread(str(stem.with_suffix(".mtx"))).tocsr()
    data = np.loadtxt(stem.with_name(stem.name + "_known.txt"), comments="#", ndmin=2)
    idx = data[:, 0].astype(int)
    return A, idx, data[:, 1] + 1j * data[:, 2]


def partition(A: sp.spmatrix, known_idx, known_vals):
    """Eliminate known DOFs: returns (A_uu, rhs, unknown indices)."""
    n = A.shape[0]
    mask = np.zeros(n, dtype=bool)
    mask[known_idx] = True
    U = np.flatnonzero(~mask)
    A = A.tocsr()
    return A[U][:, U].tocsr(), -(A[U][:, known_idx] @ known_vals), U


# -- evaluation of the discrete field inside cells ---------------------------


def cell_quadrature(scheme: str, grid: SpaceTimeGrid, coeffs, order: int = 4):
    """Discrete field at Gauss points of every cell.

    Returns (x', t', psi, w): physical coordinates, field values (..., 2) and
    quadrature weights (absolute area). FD and triangle schemes use their
    natural piecewise-linear interpolants.
    """
    d = DOFS_PER_NODE[scheme]
    c = np.asarray(coeffs).reshape(grid.n_nodes, 2, d)
    q, w = schemes.gauss_01(order)
    XI, ETA = np.meshgrid(q, q, indexing="ij")
    W = np.outer(w, w) * grid.dx * grid.dt
    ci, cj = np.meshgrid(np.arange(grid.nx), np.arange(grid.nt), indexing="xy")
    ci, cj = ci.ravel(), cj.ravel()
    lx = grid.x0 + (ci[:, None, None] + XI) * grid.dx
    lt = (cj[:, None, None] + ETA) * grid.dt
    xp, tp = grid.to_physical(lx, lt)
    if scheme == "triangle":
        psi = np.zeros(lx.shape + (2,), dtype=complex)
        lower = (XI + ETA) <= 1
        for k, tri in enumerate(schemes.TRIANGLES):
            nodes = np.stack([grid.node_index(ci + ox, cj + oy) for ox, oy in tri], axis=1)
            phi = schemes.triangle_shape_values(k, XI, ETA)
            sel = lower if k == 0 else ~lower
            val = np.einsum("aij,cab->cijb", phi, c[nodes, :, 0])
            psi[:, sel] = val[:, sel]
        return xp, tp, psi, np.broadcast_to(W, lx.shape)
    family = "lagrange-linear" if scheme in FD_SCHEMES else schemes.SCHEME_FAMILY[scheme]
    basis = schemes.BasisSet(family)
    phi, _, _ = basis.evaluate(XI, ETA)
    nodes = np.stack([grid.node_index(ci + ox, cj + oy) for ox, oy in schemes.LOCAL_NODES], axis=1)
    if family == "lagrange-linear":
        local = c[nodes, :, 0]  # (cell, 4, 2)
    else:
        local = c[nodes].transpose(0, 1, 3, 2).reshape(len(ci), -1, 2)  # (cell, node*kind, 2)
    psi = np.einsum("aij,cab->cijb", phi, local)
    return xp, tp, psi, np.broadcast_to(W, lx.shape)
