import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dirac_st import bench, krylov
from dirac_st.analytic import GaussianPacket, gaussian_initial, massless_exact
from dirac_st.bench import (
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    UndefinedCentroid,
    UndefinedErrorNorm,
    centroid_speed,
    checkerboard_amplitude,
    l2_error_percent,
    run_experiment,
)
from dirac_st.core import SpinorField, build_dofmap, build_grid


def field_from(grid, values, scheme="lagrange"):
    return SpinorField.from_nodal(build_dofmap(grid, scheme), values)


def sampled(grid, fn):
    xp, tp = grid.physical_coords()
    return fn(xp, tp)


@pytest.fixture
def exact_field():
    g = build_grid(64, 32, (0.0, 1.6), 0.8)
    p = GaussianPacket(8.0, 4.0, 1.1)
    return g, field_from(g, sampled(g, lambda x, t: massless_exact(p, x, t)))


def test_l2_examples(exact_field):
    g, ex = exact_field
    assert l2_error_percent(ex, ex) == 0.0
    assert l2_error_percent(field_from(g, np.zeros((33, 65, 2))), ex) == pytest.approx(100.0)
    assert l2_error_percent(field_from(g, 1.1 * ex.nodal()), ex) == pytest.approx(10.0, abs=1e-12)


def test_l2_zero_exact(exact_field):
    g, ex = exact_field
    with pytest.raises(UndefinedErrorNorm):
        l2_error_percent(ex, field_from(g, np.zeros((33, 65, 2))))


def test_l2_ignores_derivative_dofs():
    g = build_grid(4, 2, (0, 1), 1)
    dm = build_dofmap(g, "hermite")
    vals = np.ones((3, 5, 2))
    a = SpinorField.from_nodal(dm, vals, {1: np.full((3, 5, 2), 7.0)})
    b = SpinorField.from_nodal(dm, vals)
    assert l2_error_percent(a, b) == 0.0


@given(st.floats(0.01, 10), st.floats(-3, 3))
def test_l2_homogeneity(scale, phase):
    g = build_grid(8, 4, (0, 1), 1)
    r = np.random.default_rng(0)
    ex = field_from(g, r.standard_normal((5, 9, 2)) + 1j)
    num = field_from(g, ex.nodal() * scale * np.exp(1j * phase))
    expected = 100 * abs(scale * np.exp(1j * phase) - 1)
    assert l2_error_percent(num, ex) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_centroid_of_time_constant_field():
    g = build_grid(32, 16, (0, 1.6), 0.8)
    p = GaussianPacket(8, 4, 0.8)
    vals = sampled(g, lambda x, t: gaussian_initial(p, x))
    assert centroid_speed(field_from(g, vals)) == pytest.approx(0.0, abs=1e-12)


def test_centroid_of_exact_solution():
    g = build_grid(160, 80, (0.0, 1.6), 0.8)
    p = GaussianPacket(8.0, 4.0, 1.1)
    f = field_from(g, sampled(g, lambda x, t: massless_exact(p, x, t)))
    assert centroid_speed(f) == pytest.approx(-1.0, abs=1e-3)


def test_centroid_of_double_speed_rows():
    g = build_grid(160, 30, (0.0, 1.6), 0.3)  # dx = dt = 0.01
    p = GaussianPacket(8.0, 4.0, 1.1)
    f = field_from(g, sampled(g, lambda x, t: gaussian_initial(p, x + 2 * t)))
    assert abs(centroid_speed(f)) == pytest.approx(2.0, abs=1e-3)


def test_centroid_undefined_for_empty_row():
    g = build_grid(8, 4, (0, 1), 1)
    vals = np.zeros((5, 9, 2))
    vals[0] = 1.0
    with pytest.raises(UndefinedCentroid):
        centroid_speed(field_from(g, vals))


def test_checkerboard_smooth_solution(exact_field):
    _, ex = exact_field
    assert checkerboard_amplitude(ex) < 0.05


def test_checkerboard_pure_mode():
    g = build_grid(10, 12, (0, 1), 1)
    vals = np.broadcast_to(((-1.0) ** np.arange(13))[:, None, None], (13, 11, 2))
    assert checkerboard_amplitude(field_from(g, vals)) == pytest.approx(1.0, abs=1e-12)


def test_checkerboard_zero_field():
    g = build_grid(10, 12, (0, 1), 1)
    assert checkerboard_amplitude(field_from(g, np.zeros((13, 11, 2)))) == 0.0


@given(st.floats(0.1, 10), st.integers(0, 2**31))
def test_checkerboard_is_scale_invariant(scale, seed):
    g = build_grid(6, 8, (0, 1), 1)
    vals = np.random.default_rng(seed).standard_normal((9, 7, 2))
    a = checkerboard_amplitude(field_from(g, vals))
    assert checkerboard_amplitude(field_from(g, scale * vals)) == pytest.approx(a, rel=1e-9)


def test_grid_dump_roundtrip(tmp_path):
    g = build_grid(6, 4, (0.0, 1.2), 0.8, 30.0)
    r = np.random.default_rng(2)
    vals = r.standard_normal((5, 7, 2)) + 1j * r.standard_normal((5, 7, 2))
    f = field_from(g, vals)
    path = bench.write_grid(tmp_path / "g.txt", f)
    assert path.read_text().splitlines()[0].split()[:2] == ["6", "4"]
    header, ij, coords, psi = bench.read_grid(path)
    assert header == {"nx": 6, "nt": 4, "x0": 0.0, "x_max": 1.2, "t_max": 0.8, "theta": 30.0}
    np.testing.assert_array_equal(ij[:7, 0], np.arange(7))
    xp, tp = g.physical_coords()
    np.testing.assert_allclose(coords, np.column_stack([xp.ravel(), tp.ravel()]), rtol=1e-15)
    np.testing.assert_allclose(psi, vals.reshape(-1, 2), rtol=1e-15)


def test_config_defaults():
    c = ExperimentConfig().resolved()
    assert (c.scheme, c.theta, c.x_range, c.center, c.left) == ("diamond", 45.0, (0.0, 1.2), 0.5, "dirichlet-exact")
    c = ExperimentConfig(scheme="lagrange", mass=20.0).resolved()
    assert (c.theta, c.x_range, c.center, c.left) == (0.0, (0.0, 1.6), 0.8, "natural")


@pytest.mark.parametrize(
    "kw",
    [dict(scheme="quadratic"), dict(solver="cg"), dict(tol=0.0), dict(restart=0), dict(nx=1), dict(a=-1.0),
     dict(scheme="diamond", theta=0.0), dict(scheme="central", theta=30.0), dict(left="sticky"), dict(mass=-2.0)],
)
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(**kw))


def test_diamond_default_report():
    rep = run_experiment(ExperimentConfig(solver="direct"))
    assert rep.matrix_size == 2450
    assert rep.converged
    assert rep.error_percent >= 0
    for key, v in rep.row().items():
        if isinstance(v, float):
            assert math.isfinite(v), key


def test_central_superluminal_flag():
    rep = run_experiment(ExperimentConfig(scheme="central", nx=64, nt=16, solver="direct"))
    assert abs(rep.centroid_speed) > 1.0


@pytest.mark.xfail(strict=True, reason="the triangle system is consistent and its minimum-norm solution is accurate")
def test_triangle_32x16_error_bound():
    rep = run_experiment(ExperimentConfig(scheme="triangle", nx=32, nt=16, solver="direct"))
    assert rep.error_percent >= 90


def test_triangle_rank_deficiency_noted():
    rep = run_experiment(ExperimentConfig(scheme="triangle", nx=16, nt=8, solver="direct"))
    assert "least-squares" in rep.note


def test_breakdown_is_reported_not_raised():
    rep = run_experiment(ExperimentConfig(scheme="central", nx=16, nt=8, solver="bicgstab", max_iter=50))
    assert not rep.converged
    assert rep.iterations <= 50


def test_solver_failure_names_stage(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("no memory")

    monkeypatch.setattr(krylov, "solve", boom)
    with pytest.raises(ExperimentError) as info:
        run_experiment(ExperimentConfig(scheme="lagrange", nx=8, nt=4))
    assert info.value.stage == "solve"


def test_grid_dump_from_run(tmp_path):
    rep, f = run_experiment(ExperimentConfig(scheme="lagrange", nx=8, nt=4, solver="direct"), tmp_path / "g.txt", True)
    header, _, _, psi = bench.read_grid(tmp_path / "g.txt")
    assert header["nx"] == 8
    np.testing.assert_allclose(psi, f.nodal().reshape(-1, 2), rtol=1e-15)


def test_report_csv_columns(tmp_path):
    rep = run_experiment(ExperimentConfig(scheme="lagrange", nx=8, nt=4, solver="direct"))
    path = bench.write_reports(tmp_path / "r.csv", [rep, rep])
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == bench.REPORT_COLUMNS
    assert int(rows[1]["matrix_size"]) == 90


def test_table_registry_sizes():
    for tag, rows in bench.TABLES.items():
        assert len(rows) in (6, 8)
        for r in rows:
            d = 3 if r.scheme in ("hermite", "trig") else 1
            assert r.matrix_size == 2 * d * (r.nx + 1) * (r.nt + 1), (tag, r)


def test_unknown_table():
    with pytest.raises(ConfigError):
        bench.run_table("nope")


def test_sweep_domain():
    c = bench.sweep_config(45, 0.0)
    assert c.x_range[1] == pytest.approx(2 / 3)
    assert c.t_max == 0.4
    assert bench.sweep_config(0, 0.0).x_range[1] == pytest.approx((2 / 3) * math.sqrt(2))
    m = bench.sweep_config(30, 20.0)
    assert (m.x_range, m.center, m.left) == ((0.0, 1.6), 0.8, "dirichlet-zero")
    with pytest.raises(ConfigError):
        bench.sweep_config(50, 0.0)


def test_small_sweep_csv(tmp_path):
    reps = bench.rotation_sweep((0, 45), (0.0, 20.0), (16, 8), solver="direct")
    assert [(r.theta, r.mass) for r in reps] == [(0, 0), (45, 0), (0, 20), (45, 20)]
    path = bench.write_sweep(tmp_path / "s.csv", reps)
    rows = list(csv.reader(path.open()))
    assert rows[0] == bench.SWEEP_COLUMNS
    assert len(rows) == 5
