"""Tubular-neighborhood geometry of a closed curve inside a disk.

Conventions used throughout the package:

* the signed distance ``d`` is positive inside the curve,
* ``n = grad d`` is the inward unit normal, obtained by rotating the unit
  tangent by +90 degrees, so curves are traversed counterclockwise,
* the curve parameter ``s`` lives on ``[0, 1)`` with wraparound,
* ``kappa = lap d`` on the curve (``-1/R`` for a circle of radius ``R``),
  which makes the chart Jacobian ``1 + r kappa`` at normal offset ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ._smooth import smoothstep
from .errors import OutsideChart, ProjectionDiverged, SeparationViolated, InvalidInput

__all__ = [
    "Circle",
    "SplineCurve",
    "Disk",
    "TubularChart",
    "StretchedPoint",
    "default_delta",
    "signed_distance",
    "project_and_s",
    "surface_operators",
    "stretch",
    "unstretch",
    "chart_map",
    "expansion_jacobian",
    "cutoff_xi",
    "check_identities",
]

TWO_PI = 2.0 * np.pi
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise InvalidInput("points must have a trailing dimension of size 2")
    return x


def _wrap(ds):
    """Map parameter differences to [-1/2, 1/2)."""
    return (np.asarray(ds) + 0.5) % 1.0 - 0.5


def _time_derivative(fun, t, step):
    return (fun(t - 2 * step) - 8 * fun(t - step) + 8 * fun(t + step) - fun(t + 2 * step)) / (12 * step)


class Circle:
    """Circle with fixed center and a radius that may depend on time."""

    kind = "circle"

    def __init__(self, radius, center=(0.0, 0.0), time_scale=1.0):
        self._radius = radius
        self.center = np.asarray(center, dtype=float)
        self.time_scale = float(time_scale)

    def radius(self, t=0.0):
        r = self._radius(t) if callable(self._radius) else self._radius
        return float(r)

    def radius_rate(self, t=0.0):
        if not callable(self._radius):
            return 0.0
        return float(_time_derivative(self.radius, t, 1e-4 * self.time_scale))

    def X0(self, s, t=0.0):
        a = TWO_PI * np.asarray(s, dtype=float)
        return self.center + self.radius(t) * np.stack([np.cos(a), np.sin(a)], axis=-1)

    def tangent(self, s, t=0.0):
        a = TWO_PI * np.asarray(s, dtype=float)
        return np.stack([-np.sin(a), np.cos(a)], axis=-1)

    def normal(self, s, t=0.0):
        return self.tangent(s, t) @ ROT90.T

    def kappa(self, s, t=0.0):
        return -1.0 / self.radius(t) + 0.0 * np.asarray(s, dtype=float)

    def normal_velocity(self, s, t=0.0):
        return -self.radius_rate(t) + 0.0 * np.asarray(s, dtype=float)

    def signed_distance(self, x, t=0.0):
        x = _points(x)
        return self.radius(t) - np.linalg.norm(x - self.center, axis=-1)

    def parameter(self, x, t=0.0):
        y = _points(x) - self.center
        return (np.arctan2(y[..., 1], y[..., 0]) / TWO_PI) % 1.0

    def grad_S(self, x, t=0.0):
        y = _points(x) - self.center
        r2 = np.sum(y * y, axis=-1)
        return np.stack([-y[..., 1], y[..., 0]], axis=-1) / (TWO_PI * r2[..., None])

    def lap_S(self, x, t=0.0):
        return np.zeros(_points(x).shape[:-1])

    def dt_S(self, x, t=0.0):
        return np.zeros(_points(x).shape[:-1])

    def lap_d(self, x, t=0.0):
        y = _points(x) - self.center
        return -1.0 / np.linalg.norm(y, axis=-1)

    def reach(self, t=0.0):
        return self.radius(t)

    def max_extent(self, t=0.0):
        """Largest distance of a curve point from the origin."""
        return float(np.linalg.norm(self.center)) + self.radius(t)


class SplineCurve:
    """Static closed curve through the given points (periodic cubic spline).

    Projection uses Newton's method on the parameter, started from the
    nearest point of a dense sampling.
    """

    kind = "general"

    def __init__(self, points, n_seed=512):
        pts = np.asarray(points, dtype=float)
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
        if area < 0:
            pts = pts[::-1]
        closed = np.vstack([pts, pts[:1]])
        knots = np.linspace(0.0, 1.0, closed.shape[0])
        self._spline = CubicSpline(knots, closed, bc_type="periodic")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        self._seed_s = np.linspace(0.0, 1.0, n_seed, endpoint=False)
        self._seed_x = self._spline(self._seed_s)
        if np.min(np.linalg.norm(self._d1(self._seed_s), axis=-1)) == 0.0:
            raise InvalidInput("curve has a vanishing tangent")
        if not _is_simple(self._seed_x):
            raise InvalidInput("curve self-intersects")
        self.time_scale = 1.0

    def X0(self, s, t=0.0):
        return self._spline(np.asarray(s, dtype=float) % 1.0)

    def tangent(self, s, t=0.0):
        d = self._d1(np.asarray(s, dtype=float) % 1.0)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def normal(self, s, t=0.0):
        return self.tangent(s, t) @ ROT90.T

    def kappa(self, s, t=0.0):
        s = np.asarray(s, dtype=float) % 1.0
        d1, d2 = self._d1(s), self._d2(s)
        speed = np.linalg.norm(d1, axis=-1)
        return -(d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / speed**3

    def normal_velocity(self, s, t=0.0):
        return 0.0 * np.asarray(s, dtype=float)

    def parameter(self, x, t=0.0, tol=1e-13, max_iter=50):
        x = _points(x)
        flat = x.reshape(-1, 2)
        dist2 = np.sum((flat[:, None, :] - self._seed_x[None, :, :]) ** 2, axis=-1)
        s = self._seed_s[np.argmin(dist2, axis=1)]
        for _ in range(max_iter):
            diff = self._spline(s % 1.0) - flat
            d1, d2 = self._d1(s % 1.0), self._d2(s % 1.0)
            g = np.sum(diff * d1, axis=-1)
            dg = np.sum(d1 * d1, axis=-1) + np.sum(diff * d2, axis=-1)
            step = g / dg
            s = s - step
            if np.max(np.abs(step)) < tol:
                break
        else:
            raise ProjectionDiverged("projection onto the spline did not converge")
        return (s % 1.0).reshape(x.shape[:-1])

    def signed_distance(self, x, t=0.0):
        x = _points(x)
        s = self.parameter(x, t)
        diff = x - self.X0(s)
        return np.sum(diff * self.normal(s), axis=-1)

    def _fd(self, fun, x, h=1e-5):
        x = _points(x)
        e = np.eye(2)
        grads, lap = [], 0.0
        f0 = fun(x)
        for k in range(2):
            fp, fm = fun(x + h * e[k]), fun(x - h * e[k])
            fp2, fm2 = fun(x + 2 * h * e[k]), fun(x - 2 * h * e[k])
            grads.append((_wrap(fm2 - f0) - 8 * _wrap(fm - f0) + 8 * _wrap(fp - f0) - _wrap(fp2 - f0)) / (12 * h))
            lap = lap + (-_wrap(fm2 - f0) + 16 * _wrap(fm - f0) + 16 * _wrap(fp - f0) - _wrap(fp2 - f0)) / (12 * h * h)
        return np.stack(grads, axis=-1), lap

    def grad_S(self, x, t=0.0):
        return self._fd(lambda y: self.parameter(y, t), x)[0]

    def lap_S(self, x, t=0.0):
        return self._fd(lambda y: self.parameter(y, t), x, h=1e-3)[1]

    def dt_S(self, x, t=0.0):
        return np.zeros(_points(x).shape[:-1])

    def lap_d(self, x, t=0.0):
        s = self.parameter(x, t)
        k = self.kappa(s)
        d = self.signed_distance(x, t)
        return k / (1.0 + d * k)

    def reach(self, t=0.0):
        return 1.0 / np.max(np.abs(self.kappa(self._seed_s)))

    def max_extent(self, t=0.0):
        return float(np.max(np.linalg.norm(self._seed_x, axis=-1)))


def _is_simple(pts):
    a, b = pts, np.roll(pts, -1, axis=0)
    m = len(pts)
    d = b - a

    def cross(u, v):
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    ai, di = a[:, None, :], d[:, None, :]
    aj, dj = a[None, :, :], d[None, :, :]
    denom = cross(di, dj)
    with np.errstate(divide="ignore", invalid="ignore"):
        tpar = cross(aj - ai, dj) / denom
        upar = cross(aj - ai, di) / denom
    hit = (denom != 0) & (tpar >= 0) & (tpar < 1) & (upar >= 0) & (upar < 1)
    idx = np.arange(m)
    near = np.abs(((idx[:, None] - idx[None, :]) + 1) % m - 1) <= 1
    return not np.any(hit & ~near)


@dataclass(frozen=True)
class Disk:
    """Outer domain ``|x| < radius``; ``d_B`` is negative inside."""

    radius: float

    def signed_distance(self, x):
        return np.linalg.norm(_points(x), axis=-1) - self.radius

    def contains(self, x, tol=0.0):
        return self.signed_distance(x) <= tol


def default_delta(R0, R_out):
    """Chart half-width: a quarter of the radius, capped by the separation rule."""
    return min(0.25 * R0, 0.95 * (R_out - R0) / 5.0)


class TubularChart:
    """A curve, the half-width ``delta`` and the outer boundary.

    Construction checks, at each time in ``times``, that the curve keeps a
    distance larger than ``5 delta`` from the outer boundary and that the
    normal projection is well defined within ``3 delta``.
    """

    def __init__(self, curve, delta, boundary, times=(0.0,)):
        self.curve = curve
        self.delta = float(delta)
        self.boundary = boundary
        if not self.delta > 0:
            raise InvalidInput("delta must be positive")
        for t in times:
            gap = boundary.radius - curve.max_extent(t)
            if not gap > 5.0 * self.delta:
                raise SeparationViolated(
                    f"separation constraint dist(curve, boundary) > 5*delta fails at t={t}: "
                    f"distance {gap:.4g} <= {5 * self.delta:.4g}"
                )
            if not curve.reach(t) > 3.0 * self.delta:
                raise SeparationViolated(
                    f"projection constraint reach > 3*delta fails at t={t}: "
                    f"reach {curve.reach(t):.4g} <= {3 * self.delta:.4g}"
                )

    def d_gamma(self, x, t=0.0):
        return self.curve.signed_distance(x, t)

    def d_boundary(self, x):
        return self.boundary.signed_distance(x)

    def require_inside(self, x, t, width):
        d = self.d_gamma(x, t)
        bad = np.abs(d) >= width
        if np.any(bad):
            raise OutsideChart(
                f"{int(np.sum(bad))} point(s) farther than {width:.4g} from the curve"
            )
        return d


@dataclass(frozen=True)
class StretchedPoint:
    rho: np.ndarray
    s: np.ndarray
    d: np.ndarray
    x: np.ndarray


def _h_values(h, s, t):
    if h is None:
        return np.zeros_like(np.asarray(s, dtype=float))
    if np.isscalar(h):
        return np.full_like(np.asarray(s, dtype=float), float(h))
    return np.asarray(h(s, t), dtype=float)


def signed_distance(chart, x, t=0.0, *, require_chart=False):
    if require_chart:
        return chart.require_inside(x, t, 3.0 * chart.delta)
    return chart.d_gamma(x, t)


def project_and_s(chart, x, t=0.0):
    """Parameter of the closest curve point and the point itself."""
    x = _points(x)
    d = chart.require_inside(x, t, 3.0 * chart.delta)
    s = chart.curve.parameter(x, t)
    return s, x - d[..., None] * chart.curve.normal(s, t)


def _h_derivatives(h, s, t, time_scale=1.0):
    """``(h, dh/ds, d2h/ds2, dh/dt)`` by central differences (periodic in s)."""
    s = np.asarray(s, dtype=float)
    if h is None or np.isscalar(h):
        base = _h_values(h, s, t)
        zero = np.zeros_like(base)
        return base, zero, zero, zero
    hs = 1e-3
    f = [h((s + k * hs) % 1.0, t) for k in (-2, -1, 0, 1, 2)]
    ds = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * hs)
    dss = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * hs * hs)
    dt = _time_derivative(lambda tau: h(s, tau), t, 1e-4 * time_scale)
    return f[2], ds, dss, dt


def surface_operators(chart, h, x, t=0.0):
    """Surface time derivative, surface gradient and surface Laplacian of ``h``.

    ``h`` is a callable ``h(s, t)``, a constant, or ``None`` for zero; it is
    extended off the curve as ``h(S(x, t), t)``.
    """
    x = _points(x)
    chart.require_inside(x, t, 3.0 * chart.delta)
    curve = chart.curve
    s = curve.parameter(x, t)
    _, hs, hss, ht = _h_derivatives(h, s, t, curve.time_scale)
    gS = curve.grad_S(x, t)
    dt_h = ht + curve.dt_S(x, t) * hs
    grad_h = gS * hs[..., None]
    lap_h = curve.lap_S(x, t) * hs + np.sum(gS * gS, axis=-1) * hss
    return dt_h, grad_h, lap_h


def stretch(chart, x, t, eps, h=None):
    """Stretched normal coordinate ``d/eps - h(S)``."""
    x = _points(x)
    d = chart.require_inside(x, t, 2.0 * chart.delta)
    s = chart.curve.parameter(x, t)
    return StretchedPoint(d / eps - _h_values(h, s, t), s, d, x)


def chart_map(chart, r, s, t=0.0):
    """Point at normal offset ``r`` from the curve point with parameter ``s``."""
    r = np.asarray(r, dtype=float)
    return chart.curve.X0(s, t) + r[..., None] * chart.curve.normal(s, t)


def unstretch(chart, rho, s, t, eps, h=None):
    rho = np.asarray(rho, dtype=float)
    return chart_map(chart, eps * (rho + _h_values(h, s, t)), s, t)


def expansion_jacobian(eps, rho, h_val, kappa):
    """Area factor ``1 + eps (rho + h) kappa`` of the stretched chart."""
    return 1.0 + eps * (np.asarray(rho) + np.asarray(h_val)) * np.asarray(kappa)


def cutoff_xi(s, delta, nu=0):
    """Cutoff equal to 1 on ``|s| <= delta`` and 0 on ``|s| >= 2 delta``.

    ``nu`` selects the derivative order (0, 1 or 2).
    """
    s = np.asarray(s, dtype=float)
    u = (np.abs(s) - delta) / delta
    if nu == 0:
        return 1.0 - smoothstep(u)
    if nu == 1:
        return -np.sign(s) * smoothstep(u, 1) / delta
    if nu == 2:
        return -smoothstep(u, 2) / delta**2
    raise ValueError("nu must be 0, 1 or 2")


def _fd_gradient(fun, x, step):
    e = np.eye(2)
    cols = []
    for k in range(2):
        cols.append(
            (fun(x - 2 * step * e[k]) - 8 * fun(x - step * e[k]) + 8 * fun(x + step * e[k]) - fun(x + 2 * step * e[k]))
            / (12 * step)
        )
    return np.stack(cols, axis=-1)


def check_identities(chart, n_samples=1000, t=0.0, eps=0.1, h=None, seed=0):
    """Largest violations of the chart identities on random chart points.

    Returns a dict with keys ``grad_d_norm``, ``grad_S_orthogonality``,
    ``chain_rule``, ``gradient_decomposition``, ``jacobian``, ``round_trip``
    and ``normal_velocity``. All derivatives on the left-hand sides are
    central finite differences.
    """
    rng = np.random.default_rng(seed)
    curve = chart.curve
    s = rng.random(n_samples)
    r = (2 * rng.random(n_samples) - 1) * 1.9 * chart.delta
    x = chart_map(chart, r, s, t)
    step = 1e-5

    grad_d = _fd_gradient(lambda y: chart.d_gamma(y, t), x, step)
    grad_S = _fd_gradient(lambda y: _wrap(curve.parameter(y, t) - s), x, step)
    out = {
        "grad_d_norm": float(np.max(np.abs(np.linalg.norm(grad_d, axis=-1) - 1.0))),
        "grad_S_orthogonality": float(np.max(np.abs(np.sum(grad_S * grad_d, axis=-1)))),
    }

    # smooth test function phi(rho, x) = sin(rho) * (1 + x1 x2) + x1^2
    def phi(rho, y):
        return np.sin(rho) * (1.0 + y[..., 0] * y[..., 1]) + y[..., 0] ** 2

    def composed(y):
        sp = stretch(chart, y, t, eps, h)
        return phi(sp.rho, y)

    fd = _fd_gradient(composed, x, 1e-6)
    sp = stretch(chart, x, t, eps, h)
    _, grad_h, _ = surface_operators(chart, h, x, t)
    n = curve.normal(sp.s, t)
    dphi_drho = np.cos(sp.rho) * (1.0 + x[..., 0] * x[..., 1])
    grad_x = np.stack(
        [np.sin(sp.rho) * x[..., 1] + 2 * x[..., 0], np.sin(sp.rho) * x[..., 0]], axis=-1
    )
    formula = (n / eps - grad_h) * dphi_drho[..., None] + grad_x
    out["chain_rule"] = float(np.max(np.abs(fd - formula)))

    # grad psi = (d_n psi) n + surface gradient of psi, for psi(x) = x1^2 + sin(x2)
    def psi(y):
        return y[..., 0] ** 2 + np.sin(y[..., 1])

    g = _fd_gradient(psi, x, step)
    dn = np.sum(g * grad_d, axis=-1)
    surf = grad_S * np.sum(g * _tangential_field(curve, sp.s, x, t), axis=-1)[..., None]
    out["gradient_decomposition"] = float(np.max(np.abs(dn[..., None] * grad_d + surf - g)))

    # Jacobian of (r, s) -> X(r, s) against 1 + r kappa
    hs = 1e-4
    dXdr = (chart_map(chart, r + hs, s, t) - chart_map(chart, r - hs, s, t)) / (2 * hs)
    dXds = (
        chart_map(chart, r, s - 2 * hs, t) - 8 * chart_map(chart, r, s - hs, t)
        + 8 * chart_map(chart, r, s + hs, t) - chart_map(chart, r, s + 2 * hs, t)
    ) / (12 * hs)
    dX0 = (
        curve.X0(s - 2 * hs, t) - 8 * curve.X0(s - hs, t) + 8 * curve.X0(s + hs, t) - curve.X0(s + 2 * hs, t)
    ) / (12 * hs)
    det = np.abs(dXdr[..., 0] * dXds[..., 1] - dXdr[..., 1] * dXds[..., 0]) / np.linalg.norm(dX0, axis=-1)
    rho = r / eps
    out["jacobian"] = float(np.max(np.abs(det - expansion_jacobian(eps, rho, 0.0, curve.kappa(s, t)))))

    back = unstretch(chart, sp.rho, sp.s, t, eps, h)
    out["round_trip"] = float(np.max(np.abs(back - x)))

    ts = 1e-4 * curve.time_scale
    ddt = (chart.d_gamma(x, t + ts) - chart.d_gamma(x, t - ts)) / (2 * ts)
    out["normal_velocity"] = float(np.max(np.abs(-ddt - curve.normal_velocity(s, t))))
    return out


def _tangential_field(curve, s, x, t):
    """Derivative of the chart map along s at fixed normal offset.

    Dotting a gradient with this vector gives the s-derivative, so that
    ``grad_S * (g . dX/ds)`` is the surface part of ``g``.
    """
    d = curve.signed_distance(x, t)
    hs = 1e-5
    fwd = curve.X0(s + hs, t) + d[..., None] * curve.normal(s + hs, t)
    bwd = curve.X0(s - hs, t) + d[..., None] * curve.normal(s - hs, t)
    return (fwd - bwd) / (2 * hs)
