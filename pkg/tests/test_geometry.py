import numpy as np
import pytest

from chlimit.errors import InvalidInput, OutsideChart, SeparationViolated
from chlimit.geometry import (
    Circle,
    Disk,
    SplineCurve,
    TubularChart,
    chart_map,
    check_identities,
    cutoff_xi,
    default_delta,
    expansion_jacobian,
    project_and_s,
    stretch,
    surface_operators,
    unstretch,
)


@pytest.fixture
def chart():
    return TubularChart(Circle(1.0), 0.19, Disk(2.0))


def test_circle_closed_forms():
    c = Circle(1.5)
    x = np.array([[1.0, 0.0], [0.0, 2.0], [-0.3, -0.4]])
    assert c.signed_distance(x) == pytest.approx([0.5, -0.5, 1.0])
    assert c.kappa(0.3) == pytest.approx(-1 / 1.5)
    assert c.parameter(np.array([[0.0, 1.0]])) == pytest.approx([0.25])
    n = c.normal(np.array([0.0]))
    assert n == pytest.approx(np.array([[-1.0, 0.0]]))  # inward


def test_circle_counterclockwise():
    c = Circle(1.0)
    t = c.tangent(np.array([0.0]))
    assert t[0, 1] > 0


def test_time_dependent_circle_velocity():
    c = Circle(lambda t: 1.0 - 0.5 * t)
    assert c.radius_rate(0.2) == pytest.approx(-0.5, abs=1e-8)
    # V = -dR/dt
    assert c.normal_velocity(np.array([0.1]), 0.2) == pytest.approx([0.5], abs=1e-8)


def test_default_delta_respects_separation():
    d = default_delta(1.0, 2.0)
    assert 5 * d < 1.0
    TubularChart(Circle(1.0), d, Disk(2.0))


def test_separation_rule_named():
    with pytest.raises(SeparationViolated, match="5\\*delta"):
        TubularChart(Circle(1.0), 0.25, Disk(2.0))


def test_reach_rule_named():
    with pytest.raises(SeparationViolated, match="reach"):
        TubularChart(Circle(0.2), 0.1, Disk(5.0))


def test_nonpositive_delta():
    with pytest.raises(InvalidInput):
        TubularChart(Circle(1.0), 0.0, Disk(2.0))


def test_identities_on_circle(chart):
    res = check_identities(chart, n_samples=1000, seed=3)
    for key in ("grad_d_norm", "grad_S_orthogonality", "chain_rule", "gradient_decomposition"):
        assert res[key] <= 1e-5, key
    assert res["jacobian"] <= 1e-8
    assert res["round_trip"] <= 1e-10


def test_identities_on_moving_circle():
    chart = TubularChart(Circle(lambda t: 1.0 - 0.3 * t), 0.15, Disk(2.0), times=(0.0, 0.5))
    res = check_identities(chart, n_samples=200, t=0.5, seed=1)
    assert res["normal_velocity"] < 1e-6
    assert res["chain_rule"] < 1e-5


def test_spline_circle_matches_circle():
    a = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    pts = np.stack([np.cos(a), np.sin(a)], axis=-1)[::-1]  # clockwise input is reoriented
    curve = SplineCurve(pts)
    x = np.array([[0.9, 0.1], [-1.1, 0.05], [0.2, -0.95]])
    assert curve.signed_distance(x) == pytest.approx(Circle(1.0).signed_distance(x), abs=1e-5)
    s = curve.parameter(x)
    assert np.all(curve.kappa(s) == pytest.approx(-1.0, abs=1e-3))


def test_spline_rejects_self_intersection():
    pts = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    with pytest.raises(InvalidInput):
        SplineCurve(pts)


def test_spline_chart_identities():
    a = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    r = 1.0 + 0.1 * np.cos(3 * a)
    curve = SplineCurve(np.stack([r * np.cos(a), r * np.sin(a)], axis=-1))
    chart = TubularChart(curve, 0.1, Disk(3.0))
    res = check_identities(chart, n_samples=100, seed=2)
    assert res["grad_d_norm"] < 1e-4
    assert res["jacobian"] < 1e-4


def test_stretch_roundtrip(chart):
    rng = np.random.default_rng(0)
    s = rng.random(50)
    r = (2 * rng.random(50) - 1) * 0.3
    x = chart_map(chart, r, s)
    sp = stretch(chart, x, 0.0, 0.05)
    assert sp.rho == pytest.approx(r / 0.05)
    assert unstretch(chart, sp.rho, sp.s, 0.0, 0.05) == pytest.approx(x)


def test_stretch_with_shift(chart):
    x = chart_map(chart, np.array([0.1]), np.array([0.2]))
    sp = stretch(chart, x, 0.0, 0.05, h=0.5)
    assert sp.rho == pytest.approx([1.5])


def test_outside_chart(chart):
    with pytest.raises(OutsideChart):
        project_and_s(chart, np.array([[0.0, 0.0]]))


def test_projection_lands_on_curve(chart):
    x = np.array([[1.2, 0.3], [-0.1, 0.85]])
    s, p = project_and_s(chart, x)
    assert np.linalg.norm(p, axis=-1) == pytest.approx([1.0, 1.0])


def test_surface_operators_of_constant(chart):
    x = chart_map(chart, np.array([0.05, -0.1]), np.array([0.1, 0.7]))
    dt, grad, lap = surface_operators(chart, 2.0, x)
    assert np.all(dt == 0) and np.all(grad == 0) and np.all(lap == 0)


def test_surface_laplacian_of_mode(chart):
    """On the curve, the surface Laplacian of cos(2 pi s) is -cos(2 pi s)/R^2."""
    s = np.linspace(0, 1, 9, endpoint=False)
    x = chart_map(chart, np.zeros_like(s), s)
    _, _, lap = surface_operators(chart, lambda s, t: np.cos(2 * np.pi * s), x)
    assert lap == pytest.approx(-np.cos(2 * np.pi * s), abs=1e-5)


def test_expansion_jacobian():
    assert expansion_jacobian(0.1, 2.0, 0.0, -1.0) == pytest.approx(0.8)
    assert expansion_jacobian(0.1, 0.0, 0.0, 5.0) == pytest.approx(1.0)


def test_cutoff_profile():
    d = 0.2
    s = np.array([0.0, 0.1, 0.2, 0.3, 0.4, 0.5, -0.3])
    xi = cutoff_xi(s, d)
    assert xi[:3] == pytest.approx([1, 1, 1])
    assert xi[4:6] == pytest.approx([0, 0])
    assert xi[3] == pytest.approx(0.5)
    assert xi[6] == pytest.approx(xi[3])
    # derivative bound |s xi'| <= 4 on the transition
    ss = np.linspace(-0.45, 0.45, 2001)
    assert np.max(np.abs(ss * cutoff_xi(ss, d, 1))) <= 4.0


def test_cutoff_derivative_matches_fd():
    d = 0.2
    s = np.linspace(0.21, 0.39, 7)
    h = 1e-6
    fd = (cutoff_xi(s + h, d) - cutoff_xi(s - h, d)) / (2 * h)
    assert cutoff_xi(s, d, 1) == pytest.approx(fd, rel=1e-5, abs=1e-6)
