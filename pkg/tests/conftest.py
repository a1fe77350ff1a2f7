import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dirac_st import schemes

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def split_block(block):
    """Scalar weights (wx, wt, wm) with block = wx X + wt T + wm M (Frobenius projection)."""
    basis = (schemes.X_COEF, schemes.T_COEF, schemes.M_COEF)
    out = []
    for B in basis:
        out.append(np.vdot(B, block) / np.vdot(B, B))
    return tuple(out)


def interior_row_weights(A, grid, node_ij, comp=0, radius=2):
    """Scalar dx/dt/mass weights of the row of node (i, j), keyed by lattice offset."""
    i, j = node_ij
    row = (grid.node_index(i, j) * 2 + comp)
    dx, dt, dm = {}, {}, {}
    A = A.tocsr()
    for di in range(-radius, radius + 1):
        for dj in range(-radius, radius + 1):
            col = grid.node_index(i + di, j + dj) * 2
            blk = np.zeros((2, 2), dtype=complex)
            for r in range(2):
                for c in range(2):
                    blk[r, c] = A[row - comp + r, col + c]
            if not blk.any():
                continue
            wx, wt, wm = split_block(blk)
            dx[(di, dj)], dt[(di, dj)], dm[(di, dj)] = wx, wt, wm
    return dx, dt, dm


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        ok, detail = verdicts[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
