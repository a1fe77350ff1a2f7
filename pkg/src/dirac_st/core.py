"""Grids, DOF numbering, spinor fields and sparse system containers.

Everything here is immutable after construction. Natural units are used
throughout (hbar = c = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
import scipy.sparse as sp

SIGMA0 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)


class InvalidGridError(ValueError):
    pass


@dataclass(frozen=True)
class PhysParams:
    mass: float = 0.0
    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.hbar != 1.0 or self.c != 1.0:
            raise ValueError("only natural units (hbar = c = 1) are supported")
        if not self.mass >= 0:
            raise ValueError(f"mass must be nonnegative, got {self.mass}")


def rotation_matrix(theta_deg: float) -> np.ndarray:
    """Counter-clockwise rotation taking lattice (x, t) to physical (x', t')."""
    th = np.deg2rad(theta_deg)
    c, s = np.cos(th), np.sin(th)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Lattice of (nx+1) x (nt+1) nodes, optionally rotated about the origin.

    Node (i, j) sits at lattice coordinates (x0 + i*dx, j*dt). Its physical
    space-time position is the rotation of that point by ``theta`` degrees.
    """

    nx: int
    nt: int
    x0: float
    x_max: float
    t_max: float
    theta: float = 0.0

    def __post_init__(self):
        if self.nx < 2 or self.nt < 2:
            raise InvalidGridError(f"need nx, nt >= 2, got {self.nx}x{self.nt}")
        if not self.x_max > self.x0:
            raise InvalidGridError(f"degenerate x range [{self.x0}, {self.x_max}]")
        if not self.t_max > 0:
            raise InvalidGridError(f"degenerate t range [0, {self.t_max}]")
        if not 0.0 <= self.theta <= 45.0:
            raise InvalidGridError(f"rotation must lie in [0, 45] degrees, got {self.theta}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x0) / self.nx

    @property
    def dt(self) -> float:
        return self.t_max / self.nt

    @property
    def shape(self) -> tuple[int, int]:
        """(nt+1, nx+1): arrays indexed [j, i]."""
        return (self.nt + 1, self.nx + 1)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.nt + 1)

    def node_index(self, i, j):
        return np.asarray(j) * (self.nx + 1) + np.asarray(i)

    def lattice_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Lattice (x, t) of every node, each of shape ``self.shape``."""
        x = self.x0 + self.dx * np.arange(self.nx + 1)
        t = self.dt * np.arange(self.nt + 1)
        return np.meshgrid(x, t)

    def to_physical(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.theta == 0.0:
            return x, t
        R = rotation_matrix(self.theta)
        return R[0, 0] * x + R[0, 1] * t, R[1, 0] * x + R[1, 1] * t

    def physical_coords(self) -> tuple[np.ndarray, np.ndarray]:
        return self.to_physical(*self.lattice_coords())

    def jacobian(self) -> np.ndarray:
        """Matrix J with [d/dx', d/dt'] = J @ [d/dr, d/dl] (r, l lattice axes)."""
        # physical = R @ lattice, so d/dphys = R @ d/dlattice (R orthogonal)
        return rotation_matrix(self.theta)


def build_grid(nx: int, nt: int, x_range, t_max: float, theta: float = 0.0) -> SpaceTimeGrid:
    x0, x_max = x_range
    return SpaceTimeGrid(int(nx), int(nt), float(x0), float(x_max), float(t_max), float(theta))


class Kind(IntEnum):
    VALUE = 0
    DX = 1
    DT = 2


# Edge names on the lattice: bottom is j = 0 (initial row).
EDGES = ("bottom", "left", "right", "top")


@dataclass(frozen=True)
class DofMap:
    """Node-major numbering: index = (node * 2 + component) * d + kind."""

    grid: SpaceTimeGrid
    dofs_per_node: int
    known: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dofs_per_node not in (1, 3):
            raise ValueError(f"dofs_per_node must be 1 or 3, got {self.dofs_per_node}")
        known = np.asarray(self.known, dtype=bool)
        if known.shape != (self.total_dofs,):
            raise ValueError("known mask has wrong length")
        known.setflags(write=False)
        object.__setattr__(self, "known", known)

    @property
    def total_dofs(self) -> int:
        return 2 * self.dofs_per_node * self.grid.n_nodes

    def index(self, node, comp, kind=0):
        d = self.dofs_per_node
        return (np.asarray(node) * 2 + np.asarray(comp)) * d + np.asarray(kind)

    def decode(self, dof):
        """Inverse of ``index``: returns (node, comp, kind)."""
        d = self.dofs_per_node
        dof = np.asarray(dof)
        return dof // (2 * d), (dof // d) % 2, dof % d

    @property
    def unknown(self) -> np.ndarray:
        return ~self.known

    @property
    def known_indices(self) -> np.ndarray:
        return np.flatnonzero(self.known)

    @property
    def unknown_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.known)

    def value_dofs(self) -> np.ndarray:
        """Indices of (node, comp, VALUE) ordered [node, comp]."""
        nodes = np.arange(self.grid.n_nodes)
        return self.index(nodes[:, None], np.arange(2)[None, :], 0)


def edge_nodes(grid: SpaceTimeGrid, edge: str) -> np.ndarray:
    i = np.arange(grid.nx + 1)
    j = np.arange(grid.nt + 1)
    if edge == "bottom":
        return grid.node_index(i, 0)
    if edge == "top":
        return grid.node_index(i, grid.nt)
    if edge == "left":
        return grid.node_index(0, j)
    if edge == "right":
        return grid.node_index(grid.nx, j)
    raise ValueError(f"unknown edge {edge!r}")


DOFS_PER_NODE = {
    "central": 1,
    "balanced": 1,
    "triangle": 1,
    "lagrange": 1,
    "diamond": 1,
    "hermite": 3,
    "trig": 3,
}


def build_dofmap(grid: SpaceTimeGrid, scheme: str, known_edges=("bottom",)) -> DofMap:
    """DOF map with every DOF on the listed edges marked KNOWN."""
    try:
        d = DOFS_PER_NODE[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}") from None
    known = np.zeros(2 * d * grid.n_nodes, dtype=bool)
    for edge in known_edges:
        nodes = edge_nodes(grid, edge)
        idx = (nodes[:, None] * 2 + np.arange(2)[None, :])[..., None] * d + np.arange(d)
        known[idx.ravel()] = True
    return DofMap(grid, d, known)


@dataclass(frozen=True)
class SpinorField:
    """Coefficient vector over a DofMap (values, plus derivative DOFs when d = 3)."""

    dofmap: DofMap
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.dofmap.total_dofs,):
            raise ValueError(f"expected {self.dofmap.total_dofs} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("spinor field has non-finite entries")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def grid(self) -> SpaceTimeGrid:
        return self.dofmap.grid

    def nodal(self) -> np.ndarray:
        """Nodal spinor values, shape (nt+1, nx+1, 2)."""
        vals = self.coeffs[self.dofmap.value_dofs()]
        return vals.reshape(*self.grid.shape, 2)

    @classmethod
    def from_nodal(cls, dofmap: DofMap, values, derivs=None) -> "SpinorField":
        """Build from nodal values (nt+1, nx+1, 2); derivs maps Kind -> same-shape array."""
        g = dofmap.grid
        c = np.zeros(dofmap.total_dofs, dtype=complex)
        nodes = np.arange(g.n_nodes)[:, None]
        comps = np.arange(2)[None, :]
        c[dofmap.index(nodes, comps, 0)] = np.asarray(values).reshape(g.n_nodes, 2)
        if derivs:
            for kind, arr in derivs.items():
                c[dofmap.index(nodes, comps, int(kind))] = np.asarray(arr).reshape(g.n_nodes, 2)
        return cls(dofmap, c)


@dataclass(frozen=True)
class SparseSystem:
    """Partitioned complex system over the UNKNOWN DOFs.

    ``full`` is the pre-partition operator over all DOFs; ``matrix_size`` is
    its dimension (the number tabulated alongside each mesh).
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    full: sp.csr_matrix
    dofmap: DofMap
    known_values: np.ndarray

    def __post_init__(self):
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n) or self.rhs.shape != (n,):
            raise ValueError("system matrix must be square and match the rhs")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def matrix_size(self) -> int:
        return self.full.shape[0]

    def expand(self, x_unknown) -> np.ndarray:
        """Reinsert known values around a solution over the UNKNOWN DOFs."""
        full = np.empty(self.dofmap.total_dofs, dtype=complex)
        full[self.dofmap.known] = self.known_values
        full[self.dofmap.unknown] = x_unknown
        return full


def finalize_csr(rows, cols, vals, shape) -> sp.csr_matrix:
    """COO triplets to canonical CSR (duplicates summed, explicit zeros dropped)."""
    A = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    if A.nnz:
        # cancellation residue from summing +/- contributions
        A.data[np.abs(A.data) <= 1e-14 * np.abs(A.data).max()] = 0
    A.eliminate_zeros()
    A.sort_indices()
    return A
