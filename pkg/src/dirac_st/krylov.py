"""Unpreconditioned Krylov solvers for complex non-Hermitian systems."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

EPS = np.finfo(float).eps
# breakdown threshold for normalised BiCGSTAB scalars
BREAKDOWN_TOL = EPS**2


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``iterations`` counts half-steps as 0.5 for BiCGSTAB and Arnoldi steps for
    GMRES. ``residual`` is the recomputed ||b - A x|| / ||b||. ``history`` holds
    (iteration, relative residual) pairs; for GMRES ``cycles`` splits the
    history by restart cycle.
    """

    x: np.ndarray
    iterations: float
    residual: float
    converged: bool
    method: str
    history: list = field(default_factory=list)
    cycles: list = field(default_factory=list)


class BreakdownError(RuntimeError):
    """Raised when a BiCGSTAB scalar vanishes; ``report`` carries the last iterate."""

    def __init__(self, message, report: SolveReport):
        super().__init__(message)
        self.report = report


def _as_operator(system):
    """Accept a SparseSystem or an (A, b) pair."""
    if isinstance(system, tuple):
        A, b = system
    else:
        A, b = system.matrix, system.rhs
    b = np.asarray(b, dtype=complex)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.size:
        raise ValueError("solver needs a square system matching the right-hand side")
    return A, b


def relative_residual(A, b, x) -> float:
    bn = np.linalg.norm(b)
    return float(np.linalg.norm(b - A @ x) / bn) if bn > 0 else float(np.linalg.norm(A @ x))


def bicgstab(system, tol: float = 1e-6, max_iter: int = None, shadow: str = "residual", seed: int = 0) -> SolveReport:
    """BiCGSTAB from a zero initial guess.

    Convergence is tested after each half-step on the recursive residual and
    confirmed against the true residual; if they disagree the recursion is
    restarted from the true residual. ``shadow`` picks the fixed shadow
    residual: the initial residual (classic) or a seeded random vector, which
    avoids structural breakdown when b^H A b vanishes.
    """
    A, b = _as_operator(system)
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    n = b.size
    max_iter = 2 * n if max_iter is None else int(max_iter)
    x = np.zeros(n, dtype=complex)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return SolveReport(x, 0.0, 0.0, True, "bicgstab", [(0.0, 0.0)])

    history = [(0.0, 1.0)]

    def done(xk, it):
        res = relative_residual(A, b, xk)
        return SolveReport(xk, it, res, res <= tol, "bicgstab", history)

    rng = np.random.default_rng(seed)

    def new_shadow(res):
        if shadow == "residual":
            return res.copy()
        if shadow == "random":
            return rng.standard_normal(n) + 1j * rng.standard_normal(n)
        raise ValueError(f"unknown shadow choice {shadow!r}")

    r = b.copy()
    r_hat = new_shadow(r)
    rho_old = alpha = omega = 1.0
    p = v = None
    it = 0
    while it < max_iter:
        rho = np.vdot(r_hat, r)
        if abs(rho) <= BREAKDOWN_TOL * np.linalg.norm(r_hat) * np.linalg.norm(r):
            raise BreakdownError("rho vanished", done(x, float(it)))
        if p is None:
            p = r.copy()
        else:
            beta = (rho / rho_old) * (alpha / omega)
            p = r + beta * (p - omega * v)
        v = A @ p
        denom = np.vdot(r_hat, v)
        if abs(denom) <= BREAKDOWN_TOL * np.linalg.norm(r_hat) * np.linalg.norm(v):
            raise BreakdownError("r_hat . Ap vanished", done(x, float(it)))
        alpha = rho / denom
        s = r - alpha * v
        it += 1
        rel = np.linalg.norm(s) / bnorm
        history.append((it - 0.5, float(rel)))
        if rel <= tol:
            x_half = x + alpha * p
            if relative_residual(A, b, x_half) <= tol:
                return done(x_half, it - 0.5)
        t = A @ s
        tt = np.vdot(t, t).real
        if tt == 0:
            # s is already zero to working precision
            return done(x + alpha * p, it - 0.5)
        omega = np.vdot(t, s) / tt
        if abs(omega) <= BREAKDOWN_TOL:
            raise BreakdownError("omega vanished", done(x + alpha * p, it - 0.5))
        x = x + alpha * p + omega * s
        r = s - omega * t
        rel = np.linalg.norm(r) / bnorm
        history.append((float(it), float(rel)))
        if rel <= tol:
            true_r = b - A @ x
            if np.linalg.norm(true_r) / bnorm <= tol:
                return done(x, float(it))
            # recursive residual drifted: restart from the true one
            r = true_r
            r_hat = new_shadow(r)
            p = None
            rho_old = alpha = omega = 1.0
            continue
        rho_old = rho
    return done(x, float(it))


def _givens(a, b):
    """Complex rotation (c, s) with [[c, s], [-conj(s), c]] @ [a, b] = [r, 0]."""
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    r = np.hypot(abs(a), abs(b))
    return abs(a) / r, (a / abs(a)) * np.conj(b) / r


def gmres(system, tol: float = 1e-6, restart: int = 50, max_iter: int = None) -> SolveReport:
    """Restarted GMRES(restart) from a zero initial guess (modified Gram-Schmidt)."""
    A, b = _as_operator(system)
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if restart < 1:
        raise ValueError("restart length must be at least 1")
    n = b.size
    max_iter = 10 * n if max_iter is None else int(max_iter)
    m = min(restart, n)
    x = np.zeros(n, dtype=complex)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return SolveReport(x, 0, 0.0, True, "gmres", [(0, 0.0)], [[0.0]])
    history, cycles = [], []
    total = 0
    while True:
        r = b - A @ x
        beta = np.linalg.norm(r)
        rel = beta / bnorm
        if rel <= tol or total >= max_iter:
            history.append((total, float(rel)))
            return SolveReport(x, total, float(rel), rel <= tol, "gmres", history, cycles)
        V = np.zeros((m + 1, n), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = beta
        V[0] = r / beta
        cycle = [float(rel)]
        history.append((total, float(rel)))
        k = 0
        happy = False
        for j in range(m):
            w = A @ V[j]
            total += 1
            for i in range(j + 1):
                H[i, j] = np.vdot(V[i], w)
                w = w - H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            for i in range(j):
                hi, hi1 = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hi1
                H[i + 1, j] = -np.conj(sn[i]) * hi + cs[i] * hi1
            hnext = H[j + 1, j].real
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            rel = abs(g[j + 1]) / bnorm
            cycle.append(float(rel))
            history.append((total, float(rel)))
            if hnext <= EPS * beta:
                happy = True
                break
            V[j + 1] = w / hnext
            if rel <= tol or total >= max_iter:
                break
        y = _back_substitute(H[:k, :k], g[:k])
        x = x + V[:k].T @ y
        cycles.append(cycle)
        if happy:
            res = relative_residual(A, b, x)
            return SolveReport(x, total, res, res <= tol, "gmres", history, cycles)


def _back_substitute(R, g):
    k = len(g)
    y = np.zeros(k, dtype=complex)
    for i in range(k - 1, -1, -1):
        y[i] = (g[i] - R[i, i + 1 :] @ y[i + 1 :]) / R[i, i]
    return y


def sparse_direct(system, tol: float = 1e-6, singular_tol: float = 1e-10) -> SolveReport:
    """Sparse LU solve, falling back to regularised least squares.

    Rank-deficient systems (the balanced and triangle discretisations have
    exact null spaces) make LU either fail or return an amplified null-space
    component. In that case the minimum-norm least-squares solution is
    approximated through the Tikhonov-regularised normal equations.
    """
    A, b = _as_operator(system)
    A = sp.csc_matrix(A, dtype=complex)
    n = b.size
    if np.linalg.norm(b) == 0:
        return SolveReport(np.zeros(n, dtype=complex), 0, 0.0, True, "direct", [(0, 0.0)])
    x = None
    try:
        with np.errstate(all="ignore"):
            x = spla.splu(A).solve(b)
        res = relative_residual(A, b, x)
        if not np.isfinite(res) or res > singular_tol:
            x = None
    except RuntimeError:
        x = None
    method = "direct"
    if x is None:
        AH = A.conj().T.tocsc()
        N = (AH @ A).tocsc()
        delta = 1e-12 * abs(N.diagonal()).max()
        x = spla.splu(N + delta * sp.identity(n, format="csc")).solve(AH @ b)
        method = "least-squares"
    res = relative_residual(A, b, x)
    return SolveReport(x, 0, res, res <= tol, method, [(0, res)])


def solve(system, method: str = "bicgstab", tol: float = 1e-6, restart: int = 50, max_iter: int = None, shadow="random"):
    """Dispatch to ``bicgstab``, ``gmres`` or ``direct`` (sparse LU)."""
    if method == "bicgstab":
        return bicgstab(system, tol=tol, max_iter=max_iter, shadow=shadow)
    if method == "gmres":
        return gmres(system, tol=tol, restart=restart, max_iter=max_iter)
    if method == "direct":
        return sparse_direct(system, tol=tol)
    raise ValueError(f"unknown solver {method!r}")


def dense_solve(system) -> np.ndarray:
    """Direct LU reference solution."""
    A, b = _as_operator(system)
    dense = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    return np.linalg.solve(dense, b)


def write_history(report: SolveReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "residual"])
        for it, res in report.history:
            w.writerow([it, f"{res:.6e}"])
