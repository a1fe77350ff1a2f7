"""Interior stencils and local element matrices for the seven discretizations.

Every scheme discretizes the same operator

    L = T d/dt + X d/dx + M m,   T = i s0,  X = -i s0 s1,  M = -I,

acting on the spinor (psi_1, psi_2). Element matrices are Galerkin integrals
divided by the cell area ``hx * ht`` so that interior rows read directly as
finite-difference stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import IDENTITY2, SIGMA0, SIGMA1, rotation_matrix

T_COEF = 1j * SIGMA0
X_COEF = -1j * SIGMA0 @ SIGMA1
M_COEF = -IDENTITY2

HERMITE_K = 3.0


class InvalidSpacingError(ValueError):
    pass


class QuadratureOrderError(ValueError):
    pass


class ReferenceDomainError(ValueError):
    pass


def _check_spacing(*hs):
    for h in hs:
        if not h > 0:
            raise InvalidSpacingError(f"spacings must be positive, got {hs}")


def operator_block(wx, wt, wm, mass: float) -> np.ndarray:
    """2x2 block for scalar weights on d/dx, d/dt and the mass term."""
    return X_COEF * wx + T_COEF * wt + M_COEF * (mass * wm)


@dataclass(frozen=True)
class Stencil:
    """Offset (di, dj) -> 2x2 block, plus the scalar derivative patterns.

    ``dx`` / ``dt`` / ``mass`` hold the scalar weights that multiply
    ``X_COEF``, ``T_COEF`` and ``M_COEF * m``.
    """

    dx: dict
    dt: dict
    mass_weights: dict
    mass: float
    hx: float
    ht: float

    @property
    def offsets(self):
        return sorted(set(self.dx) | set(self.dt) | set(self.mass_weights))

    def block(self, offset) -> np.ndarray:
        return operator_block(
            self.dx.get(offset, 0.0), self.dt.get(offset, 0.0), self.mass_weights.get(offset, 0.0), self.mass
        )

    @property
    def blocks(self) -> dict:
        return {o: self.block(o) for o in self.offsets}

    def pattern(self, which: str, radius: int = 1) -> np.ndarray:
        """Scalar pattern as a (2r+1)^2 array, rows = time (top row latest), columns = x."""
        w = {"dx": self.dx, "dt": self.dt, "mass": self.mass_weights}[which]
        n = 2 * radius + 1
        out = np.zeros((n, n))
        for (di, dj), v in w.items():
            out[radius - dj, radius + di] += v
        return out

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply to nodal values (nt+1, nx+1, 2) at nodes where the full stencil fits."""
        r = max(max(abs(di), abs(dj)) for di, dj in self.offsets)
        nt1, nx1 = values.shape[:2]
        out = np.zeros((nt1 - 2 * r, nx1 - 2 * r, 2), dtype=complex)
        for (di, dj), blk in self.blocks.items():
            shifted = values[r + dj : nt1 - r + dj, r + di : nx1 - r + di]
            out += shifted @ blk.T
        return out


def central_stencil(hx: float, ht: float, mass: float = 0.0) -> Stencil:
    _check_spacing(hx, ht)
    dx = {(1, 0): 1 / (2 * hx), (-1, 0): -1 / (2 * hx)}
    dt = {(0, 1): 1 / (2 * ht), (0, -1): -1 / (2 * ht)}
    return Stencil(dx, dt, {(0, 0): 1.0}, mass, hx, ht)


def balanced_stencil(hx: float, ht: float, mass: float = 0.0) -> Stencil:
    _check_spacing(hx, ht)
    corners = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    dx = {(di, dj): di / (4 * hx) for di, dj in corners}
    dt = {(di, dj): dj / (4 * ht) for di, dj in corners}
    return Stencil(dx, dt, {(0, 0): 1.0}, mass, hx, ht)


# -- 1-D difference operators with one-sided closures ----------------------


def _central_1d(n: int, h: float) -> sp.csr_matrix:
    """Central difference on n nodes; first/last rows use the one-sided difference."""
    D = sp.lil_matrix((n, n))
    for k in range(1, n - 1):
        D[k, k - 1], D[k, k + 1] = -0.5 / h, 0.5 / h
    D[0, 0], D[0, 1] = -1 / h, 1 / h
    D[n - 1, n - 2], D[n - 1, n - 1] = -1 / h, 1 / h
    return D.tocsr()


def _average_1d(n: int) -> sp.csr_matrix:
    """Neighbour average; end rows average the node with its single neighbour."""
    A = sp.lil_matrix((n, n))
    for k in range(1, n - 1):
        A[k, k - 1] = A[k, k + 1] = 0.5
    A[0, 0] = A[0, 1] = 0.5
    A[n - 1, n - 2] = A[n - 1, n - 1] = 0.5
    return A.tocsr()


def fd_operators(scheme: str, nx: int, nt: int, hx: float, ht: float):
    """Scalar node operators (Dx, Dt, Mass) for a finite-difference scheme.

    Nodes are numbered j * (nx + 1) + i. Interior rows equal the scheme's
    stencil; rows on the lattice boundary fall back to one-sided differences.
    """
    _check_spacing(hx, ht)
    Cx, Ct = _central_1d(nx + 1, hx), _central_1d(nt + 1, ht)
    Ix, It = sp.identity(nx + 1, format="csr"), sp.identity(nt + 1, format="csr")
    if scheme == "central":
        Dx, Dt = sp.kron(It, Cx), sp.kron(Ct, Ix)
    elif scheme == "balanced":
        Dx, Dt = sp.kron(_average_1d(nt + 1), Cx), sp.kron(Ct, _average_1d(nx + 1))
    else:
        raise ValueError(f"{scheme!r} is not a finite-difference scheme")
    return Dx.tocsr(), Dt.tocsr(), sp.identity((nx + 1) * (nt + 1), format="csr")


# -- 1-D shape functions ----------------------------------------------------

FAMILIES = ("hermite-poly", "hermite-trig", "lagrange-linear", "lagrange-triangle")


def basis_eval(family: str, e, k: float = HERMITE_K):
    """Values and first derivatives of the four 1-D shape functions at e.

    Hermite families return (f00, f10, f01, f11): value at 0, slope at 0,
    value at 1, slope at 1. ``lagrange-linear`` returns its two functions
    (1 - e, e); each output has shape ``(n_funcs,) + e.shape``.
    """
    e = np.asarray(e, dtype=float)
    if np.any(e < -1e-14) or np.any(e > 1 + 1e-14):
        raise ReferenceDomainError("reference coordinate must lie in [0, 1]")
    if family == "hermite-poly":
        vals = np.array([(1 + 2 * e) * (1 - e) ** 2, k * e * (1 - e) ** 2, e**2 * (3 - 2 * e), k * e**2 * (e - 1)])
        ders = np.array([6 * e**2 - 6 * e, k * (1 - e) * (1 - 3 * e), 6 * e - 6 * e**2, k * (3 * e**2 - 2 * e)])
        return vals, ders
    if family == "hermite-trig":
        h = np.pi * e / 2
        c, s = np.cos(h), np.sin(h)
        s2, c2 = np.sin(np.pi * e), np.cos(np.pi * e)
        vals = np.array([c**2, k * c * s2, s**2, -k * s * s2])
        ders = np.array(
            [
                -np.pi * c * s,
                k * (-np.pi / 2 * s * s2 + np.pi * c * c2),
                np.pi * c * s,
                -k * (np.pi / 2 * c * s2 + np.pi * s * c2),
            ]
        )
        return vals, ders
    if family == "lagrange-linear":
        return np.array([1 - e, e]), np.array([-np.ones_like(e), np.ones_like(e)])
    raise ValueError(f"unknown basis family {family!r}")


@dataclass(frozen=True)
class BasisSet:
    """Tensor-product basis on the reference square.

    ``deriv_scale`` is the reference-coordinate slope of a derivative-type
    shape function at its own node; a derivative DOF c therefore represents
    the physical slope ``c * deriv_scale / h``.
    """

    family: str
    k: float = HERMITE_K

    @property
    def dofs_per_node(self) -> int:
        return 1 if self.family == "lagrange-linear" else 3

    @property
    def deriv_scale(self) -> float:
        if self.family == "hermite-poly":
            return self.k
        if self.family == "hermite-trig":
            return self.k * np.pi
        return 1.0

    @property
    def min_order(self) -> int:
        return {"lagrange-linear": 2, "hermite-poly": 4, "hermite-trig": 6}[self.family]

    @property
    def default_order(self) -> int:
        # trig integrands are not polynomial; 10 points settle them below 1e-10
        return {"lagrange-linear": 2, "hermite-poly": 4, "hermite-trig": 10}[self.family]

    def evaluate(self, xi, eta):
        """Shape functions at reference points.

        Returns (phi, dphi_dxi, dphi_deta), each (n_local,) + xi.shape, local
        order (node, kind) with nodes (0,0), (1,0), (0,1), (1,1).
        """
        xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
        vx, dxv = basis_eval(self.family, xi, self.k)
        vt, dtv = basis_eval(self.family, eta, self.k)
        phi, pxi, peta = [], [], []
        for cx, cy in LOCAL_NODES:
            if self.family == "lagrange-linear":
                combos = [(cx, cy)]
            else:
                # value, x-slope, t-slope; the mixed slope is dropped
                vxi, dxi, vti, dti = 2 * cx, 2 * cx + 1, 2 * cy, 2 * cy + 1
                combos = [(vxi, vti), (dxi, vti), (vxi, dti)]
            for ix, it in combos:
                phi.append(vx[ix] * vt[it])
                pxi.append(dxv[ix] * vt[it])
                peta.append(vx[ix] * dtv[it])
        return np.array(phi), np.array(pxi), np.array(peta)


LOCAL_NODES = ((0, 0), (1, 0), (0, 1), (1, 1))
SCHEME_FAMILY = {"lagrange": "lagrange-linear", "diamond": "lagrange-linear", "hermite": "hermite-poly", "trig": "hermite-trig"}


@dataclass(frozen=True)
class ElementMatrix:
    """Local matrix over (local node, component, kind), row = test function.

    ``ex``, ``et``, ``em`` are the scalar area-normalized integrals of
    phi_a * d/dx phi_b, phi_a * d/dt phi_b and phi_a * phi_b.
    """

    nodes: tuple
    dofs_per_node: int
    ex: np.ndarray
    et: np.ndarray
    em: np.ndarray
    mass: float
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, d = len(self.nodes), self.dofs_per_node
        full = (
            np.einsum("ab,cd->acbd", self.ex, X_COEF)
            + np.einsum("ab,cd->acbd", self.et, T_COEF)
            + self.mass * np.einsum("ab,cd->acbd", self.em, M_COEF)
        )
        # scalar index a = node * d + kind; reorder to (node, comp, kind)
        full = full.reshape(n, d, 2, n, d, 2).transpose(0, 2, 1, 3, 5, 4)
        object.__setattr__(self, "matrix", full.reshape(2 * n * d, 2 * n * d))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def gauss_01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1), 0.5 * w


def tensor_element(scheme_or_family: str, hx: float, ht: float, mass: float = 0.0, theta: float = 0.0, order=None):
    """Galerkin element matrix on a (possibly rotated) hx x ht cell."""
    _check_spacing(hx, ht)
    family = SCHEME_FAMILY.get(scheme_or_family, scheme_or_family)
    basis = BasisSet(family)
    order = basis.default_order if order is None else int(order)
    if order < basis.min_order:
        raise QuadratureOrderError(f"{family} needs at least {basis.min_order} Gauss points, got {order}")
    q, w = gauss_01(order)
    Q1, Q2 = np.meshgrid(q, q, indexing="ij")
    W = np.outer(w, w)
    phi, pxi, peta = basis.evaluate(Q1, Q2)
    R = rotation_matrix(theta)
    dr, dl = pxi / hx, peta / ht
    dphys_x = R[0, 0] * dr + R[0, 1] * dl
    dphys_t = R[1, 0] * dr + R[1, 1] * dl
    ex = np.einsum("aij,bij,ij->ab", phi, dphys_x, W)
    et = np.einsum("aij,bij,ij->ab", phi, dphys_t, W)
    em = np.einsum("aij,bij,ij->ab", phi, phi, W)
    return ElementMatrix(LOCAL_NODES, basis.dofs_per_node, ex, et, em, mass)


# Triangles of the unit cell: T123 = (0,0),(1,0),(0,1); T234 = (1,0),(0,1),(1,1).
TRIANGLES = (((0, 0), (1, 0), (0, 1)), ((1, 0), (0, 1), (1, 1)))


def triangle_shape_gradients(tri, hx: float, ht: float) -> np.ndarray:
    """Physical gradients (3, 2) of the P1 shape functions on one cell triangle."""
    P = np.array([[cx * hx, cy * ht] for cx, cy in tri])
    M = np.column_stack([np.ones(3), P])
    coef = np.linalg.inv(M)  # column k holds (c0, cx, ct) of shape k
    return coef[1:, :].T


def triangle_elements(hx: float, ht: float = None, mass: float = 0.0):
    """(T123, T234) element matrices, integrated exactly."""
    ht = hx if ht is None else ht
    _check_spacing(hx, ht)
    out = []
    for tri in TRIANGLES:
        g = triangle_shape_gradients(tri, hx, ht)
        rel_area = 0.5  # triangle area / cell area
        # integral of phi_a over the triangle is area / 3
        ex = np.outer(np.full(3, rel_area / 3), g[:, 0])
        et = np.outer(np.full(3, rel_area / 3), g[:, 1])
        em = rel_area / 12 * (np.ones((3, 3)) + np.eye(3))
        out.append(ElementMatrix(tri, 1, ex, et, em, mass))
    return tuple(out)


def triangle_shape_values(tri_index: int, xi, eta):
    """P1 shape functions of one cell triangle at reference points (unit cell)."""
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    if tri_index == 0:
        return np.array([1 - xi - eta, xi, eta])
    return np.array([1 - eta, 1 - xi, xi + eta - 1])


def interior_stencil(elements, mass: float = 0.0, hx: float = 1.0, ht: float = 1.0) -> Stencil:
    """Sum the contributions of every element touching an interior node.

    ``elements`` are ElementMatrix objects for one cell (one per triangle for
    the split cell); the single-DOF value kind is assumed.
    """
    dx, dt, dm = {}, {}, {}
    for el in elements:
        if el.dofs_per_node != 1:
            raise ValueError("interior stencils are defined for one DOF per node")
        for a, (ax, at) in enumerate(el.nodes):
            for b, (bx, bt) in enumerate(el.nodes):
                off = (bx - ax, bt - at)
                dx[off] = dx.get(off, 0.0) + el.ex[a, b]
                dt[off] = dt.get(off, 0.0) + el.et[a, b]
                dm[off] = dm.get(off, 0.0) + el.em[a, b]
    clean = lambda d: {k: v for k, v in d.items() if abs(v) > 1e-14}  # noqa: E731
    return Stencil(clean(dx), clean(dt), clean(dm), mass, hx, ht)
