import numpy as np
import pytest

from chlimit.errors import ChartMismatch, SolvabilityViolated
from chlimit.expansion import (
    build_boundary,
    build_inner,
    build_outer,
    build_radial_approximation,
    glue,
    spectral_assumption_check,
)
from chlimit.geometry import Circle, Disk, TubularChart

import oracles


def _ray(r):
    r = np.atleast_1d(np.asarray(r, dtype=float))
    return np.stack([r, np.zeros_like(r)], axis=-1)


def test_wall_values_exact(field):
    a = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    x = 2.0 * np.stack([np.cos(a), np.sin(a)], axis=-1)
    for t in (0.0, 0.02, 0.05):
        v = field.evaluate(x, t)
        assert np.max(np.abs(v["cA"] + 1.0)) <= 1e-12
        assert np.max(np.abs(v["muA"])) <= 1e-12


def test_deep_interior_value(field):
    sigma = oracles.surface_tension()
    c = field.c(_ray(0.0), 0.0)
    # c = 1 + eps mu_plus / f''(1) with mu_plus = sigma/R0
    assert c[0] == pytest.approx(1.0 + field.eps * sigma / 2.0, abs=1e-12)


def test_interface_crosses_zero_near_radius(field):
    r = np.linspace(0.9, 1.1, 2001)
    c = field.c(_ray(r), 0.0)
    k = np.flatnonzero(np.diff(np.sign(c)))
    assert k.size == 1
    assert abs(r[k[0]] - 1.0) < field.eps


def test_inner_first_order_on_curve_equals_minus_theta1(field, profiles):
    x = _ray(1.0)
    c1 = field.inner.c1(np.array([0.0, 2.0, -3.0]), np.repeat(x, 3, axis=0), 0.0)
    t1 = profiles.theta1(np.array([0.0, 2.0, -3.0]))
    # on the circle mu_minus = mu_plus = sigma and lap d = -1
    assert c1 == pytest.approx(-t1, abs=1e-9)


def test_basis_combination_matches_direct_solve(field, profiles):
    pts = _ray([0.9, 1.0, 1.1, 1.15])
    sols, proj = field.inner.solve_samples(pts, 0.02)
    assert np.max(np.abs(proj)) <= 1e-8
    rho = profiles.grid.nodes
    for k, p in enumerate(pts):
        combo = field.inner.c1(rho, np.repeat(p[None], rho.size, axis=0), 0.02)
        assert np.max(np.abs(combo - sols[:, k])) < 1e-9


def test_solvability_failure_reports_location(field, profiles, monkeypatch):
    inner = field.inner
    monkeypatch.setattr(profiles, "first_order_rhs",
                        lambda mm, jump, lap: np.outer(profiles.theta0.derivative, np.ones(np.size(mm))))
    with pytest.raises(SolvabilityViolated) as info:
        inner.solve_samples(_ray([1.0, 1.05]), 0.0)
    assert info.value.where is not None


def test_g0_smooth_across_curve(field):
    d = np.array([-2e-4, -5e-5, 0.0, 5e-5, 2e-4])
    g = field.inner.g0(_ray(1.0 - d), 0.0)
    assert np.all(np.isfinite(g))
    assert np.max(np.abs(np.diff(g))) < 1e-3


def test_matching_residual_small(field):
    assert field.matching_residual(0.0) < field.eps


def test_pressure_and_velocity(field):
    v = field.evaluate(_ray([0.0, 1.0, 1.9]), 0.0)
    sigma = oracles.surface_tension()
    assert v["pA"][0] == pytest.approx(2 * sigma)
    assert v["pA"][1] == pytest.approx(sigma, abs=1e-9)
    assert v["pA"][2] == 0.0
    assert np.all(v["vA"] == 0)


def test_radial_symmetry(field):
    a = np.linspace(0, 2 * np.pi, 7)
    for r in (0.5, 0.97, 1.03, 1.6):
        x = r * np.stack([np.cos(a), np.sin(a)], axis=-1)
        c = field.c(x, 0.01)
        assert np.ptp(c) < 1e-12


def test_concentration_bounds(field):
    r = np.linspace(0, 2, 801)
    for t in (0.0, 0.05):
        c = field.c(_ray(r), t)
        assert np.all(c >= -1 - 2 * field.eps) and np.all(c <= 1 + 2 * field.eps)


def test_evaluate_preserves_shape(field):
    x = np.zeros((3, 4, 2))
    out = field.evaluate(x, 0.0)
    assert out["cA"].shape == (3, 4)
    assert out["vA"].shape == (3, 4, 2)


def test_glue_rejects_foreign_chart(field):
    other = TubularChart(Circle(1.0), 0.1, Disk(2.0))
    outer = build_outer(field.sharp, field.well, field.chart)
    inner = build_inner(outer, field.profiles, other, 0.0)
    boundary = build_boundary(outer, field.chart)
    with pytest.raises(ChartMismatch):
        glue(inner, outer, boundary, field.chart, 0.05)


def test_spectral_suite(coarse_field, field):
    for f in (coarse_field, field):
        rep = spectral_assumption_check(f)
        assert rep.C_star <= 1.0
        assert np.isfinite(rep.pq_bound)
        assert rep.sup_surface_grad_c < 1e-6
        assert abs(rep.theta1_orthogonality) < 1e-7
        assert rep.passed


def test_custom_delta(profiles):
    f = build_radial_approximation(0.05, delta=0.1, profiles=profiles)
    assert f.chart.delta == 0.1
