"""Matched-asymptotic approximate solution for the radial scenario.

Outer, inner and boundary-layer terms are assembled to first order in the
concentration and zeroth order in chemical potential, velocity and
pressure, then blended with the cutoff of the chart. The interface
correction ``h_A`` is identically zero because the radial problem keeps the
zero level set a concentric circle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartMismatch, CheckFailed, SolvabilityViolated
from .geometry import Circle, Disk, TubularChart, cutoff_xi, default_delta
from .profiles import SOLVABILITY_TOL, DoubleWell, build_profile_set
from .sharp_limit import evolve_sharp

__all__ = [
    "OuterTerms",
    "InnerTerms",
    "BoundaryTerms",
    "ApproxField",
    "SpectralReport",
    "build_outer",
    "build_inner",
    "build_boundary",
    "glue",
    "build_radial_approximation",
    "spectral_assumption_check",
]

G0_TAYLOR_BAND = 1e-4


def _radius(x):
    return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


class OuterTerms:
    """Bulk terms on either side of the interface.

    The ``+`` fields (inside) are constant in space and the ``-`` fields use
    the logarithmic harmonic profile, which is analytic for ``r > 0`` and
    therefore serves as its own smooth continuation across the interface.
    """

    def __init__(self, sharp, well, chart):
        self.sharp = sharp
        self.well = well
        self.chart = chart

    def mu_plus(self, x, t):
        return np.full(np.shape(x)[:-1], self.sharp.mu_plus(t))

    def mu_minus(self, x, t):
        r = np.maximum(_radius(x), 1e-300)
        return self.sharp.mu_minus(r, t)

    def c1_plus(self, x, t):
        return self.mu_plus(x, t) / self.well.d2f(1.0)

    def c1_minus(self, x, t):
        return self.mu_minus(x, t) / self.well.d2f(-1.0)

    def p_plus(self, x, t):
        return np.full(np.shape(x)[:-1], self.sharp.p_jump(t))

    def p_minus(self, x, t):
        return np.zeros(np.shape(x)[:-1])

    def fields(self, x, t, eps):
        """Outer ``(c, mu, p)`` picking the side from the sign of ``d``."""
        inside = self.chart.d_gamma(x, t) > 0
        r = _radius(x)
        mu_m = np.where(inside, 0.0, self.sharp.mu_minus(np.where(inside, 1.0, r), t))
        mu = np.where(inside, self.sharp.mu_plus(t), mu_m)
        c = np.where(
            inside,
            1.0 + eps * mu / self.well.d2f(1.0),
            -1.0 + eps * mu / self.well.d2f(-1.0),
        )
        p = np.where(inside, self.sharp.p_jump(t), 0.0)
        return c, mu, p


class InnerTerms:
    """Interface-layer terms as functions of the stretched variable.

    The first-order concentration is the combination
    ``-mu_minus Phi_1 - (mu_plus - mu_minus) Phi_2 - lap_d Phi_3`` of
    precomputed profile solutions, which equals the direct solve of the
    solvability-projected right-hand side at every sample.
    """

    def __init__(self, outer, profiles, chart):
        self.outer = outer
        self.profiles = profiles
        self.chart = chart
        self.sigma = profiles.moments.sigma
        self.max_solvability = 0.0

    def mu0(self, rho, x, t):
        eta = self.profiles.eta(rho)
        return self.outer.mu_plus(x, t) * eta + self.outer.mu_minus(x, t) * (1.0 - eta)

    def c0(self, rho):
        return self.profiles.theta0(rho)

    def c1(self, rho, x, t):
        mm = self.outer.mu_minus(x, t)
        jump = self.outer.mu_plus(x, t) - mm
        lap = self.chart.curve.lap_d(x, t)
        b = self.profiles.basis
        return -mm * b[0](rho) - jump * b[1](rho) - lap * b[2](rho)

    def _numerator(self, x, t):
        m = self.profiles.moments
        mm = self.outer.mu_minus(x, t)
        mp = self.outer.mu_plus(x, t)
        return mm * m.int_theta0p + (mp - mm) * m.int_eta_theta0p + 2.0 * self.sigma * self.chart.curve.lap_d(x, t)

    def _normal_quotient(self, fun, x, t):
        """``fun/d`` with the one-sided singularity at the curve removed."""
        x = np.asarray(x, dtype=float)
        d = self.chart.d_gamma(x, t)
        near = np.abs(d) < G0_TAYLOR_BAND
        with np.errstate(divide="ignore", invalid="ignore"):
            out = fun(x) / d
        if np.any(near):
            s = self.chart.curve.parameter(x[near], t)
            n = self.chart.curve.normal(s, t)
            base = x[near] - d[near][:, None] * n
            hstep = G0_TAYLOR_BAND
            out[near] = (fun(base + hstep * n) - fun(base - hstep * n)) / (2 * hstep)
        return out

    def g0(self, x, t):
        """Auxiliary field that makes the first-order problem solvable."""
        K = self.profiles.moments.K_eta
        return self._normal_quotient(lambda y: self._numerator(y, t), x, t) / K

    def l0(self, x, t):
        """Jump of the outer chemical potentials divided by the distance."""
        return self._normal_quotient(
            lambda y: self.outer.mu_plus(y, t) - self.outer.mu_minus(y, t), x, t
        )

    def rhs(self, x, t):
        """Right-hand sides at the samples ``x`` (one column per sample)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mm = self.outer.mu_minus(x, t)
        jump = self.outer.mu_plus(x, t) - mm
        lap = self.chart.curve.lap_d(x, t)
        return self.profiles.first_order_rhs(mm, jump, lap)

    def solve_samples(self, x, t):
        """Direct solves of the first-order problem at each sample.

        Returns the nodal solutions (one column per sample) and the
        solvability residuals.
        """
        rhs = self.rhs(x, t)
        proj = np.atleast_1d(self.profiles.operator.solvability(rhs))
        worst = int(np.argmax(np.abs(proj)))
        self.max_solvability = max(self.max_solvability, float(np.max(np.abs(proj))))
        if abs(proj[worst]) > SOLVABILITY_TOL:
            raise SolvabilityViolated(
                f"first-order problem unsolvable at x={np.atleast_2d(x)[worst]}, t={t}: "
                f"residual {proj[worst]:.3e}",
                residual=float(proj[worst]),
                where=(np.atleast_2d(x)[worst], t),
            )
        return self.profiles.operator.solve(rhs, check=False), proj


def build_outer(sharp, well, chart):
    return OuterTerms(sharp, well, chart)


def build_inner(outer, profiles, chart, t, points=None):
    """Inner terms; when ``points`` are given every sample is solved directly
    and checked for solvability.
    """
    inner = InnerTerms(outer, profiles, chart)
    if points is not None:
        inner.solve_samples(points, t)
    return inner


class BoundaryTerms:
    """Boundary-layer terms at the outer wall (no layer structure at this order)."""

    def __init__(self, outer, chart):
        self.outer = outer
        self.chart = chart

    def z(self, x, eps):
        return self.chart.d_boundary(x) / eps

    def c0(self, x):
        return -np.ones(np.shape(x)[:-1])

    def c1(self, z, x, t):
        return self.outer.c1_minus(x, t) + 0.0 * np.asarray(z)

    def mu0(self, x, t):
        return self.outer.mu_minus(x, t)

    def fields(self, x, t, eps):
        c = -1.0 + eps * self.outer.c1_minus(x, t)
        return c, self.outer.mu_minus(x, t), np.zeros(np.shape(x)[:-1])


def build_boundary(outer, chart):
    return BoundaryTerms(outer, chart)


class ApproxField:
    """Glued approximate fields ``c_A``, ``mu_A``, ``v_A``, ``p_A``.

    The weights are ``xi(d)`` for the inner layer, ``(1 - xi(d))(1 - xi(2 d_B))``
    for the bulk and ``xi(2 d_B)`` for the wall layer; the chart guarantees
    the inner and wall supports are disjoint.
    """

    def __init__(self, inner, outer, boundary, chart, eps):
        self.inner = inner
        self.outer = outer
        self.boundary = boundary
        self.chart = chart
        self.eps = float(eps)
        self.profiles = inner.profiles
        self.sharp = outer.sharp
        self.well = outer.well

    def h_A(self, s, t):
        return np.zeros_like(np.asarray(s, dtype=float))

    def evaluate(self, x, t):
        """All glued fields at points ``x`` (shape ``(..., 2)``) and time ``t``."""
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        flat = x.reshape(-1, 2)
        eps, delta = self.eps, self.chart.delta
        d = self.chart.d_gamma(flat, t)
        dB = self.chart.d_boundary(flat)
        w_in = cutoff_xi(d, delta)
        w_wall = cutoff_xi(2.0 * dB, delta)
        w_bulk = (1.0 - w_in) * (1.0 - w_wall)

        c_o, mu_o, p_o = self.outer.fields(flat, t, eps)
        c_b, mu_b, p_b = self.boundary.fields(flat, t, eps)
        c = w_bulk * c_o + w_wall * c_b
        mu = w_bulk * mu_o + w_wall * mu_b
        p = w_bulk * p_o + w_wall * p_b

        rho = d / eps
        layer = w_in > 0
        if np.any(layer):
            xl = flat[layer]
            rl = rho[layer]
            c_i = self.inner.c0(rl) + eps * self.inner.c1(rl, xl, t)
            mu_i = self.inner.mu0(rl, xl, t)
            p_i = 0.5 * self.sharp.p_jump(t) * (self.inner.c0(rl) + 1.0)
            wl = w_in[layer]
            c[layer] += wl * c_i
            mu[layer] += wl * mu_i
            p[layer] += wl * p_i
        return {
            "d_gamma": d.reshape(shape),
            "rho": rho.reshape(shape),
            "cA": c.reshape(shape),
            "muA": mu.reshape(shape) + 0.0,
            "vA": np.zeros(shape + (2,)),
            "pA": p.reshape(shape),
        }

    def c(self, x, t):
        return self.evaluate(x, t)["cA"]

    def mu(self, x, t):
        return self.evaluate(x, t)["muA"]

    def v(self, x, t):
        return self.evaluate(x, t)["vA"]

    def p(self, x, t):
        return self.evaluate(x, t)["pA"]

    def matching_residual(self, t, n_samples=400):
        """Largest ``|c_I - c_O|`` on the cutoff annulus ``delta <= |d| <= 2 delta``."""
        R = float(self.sharp.R(t))
        delta = self.chart.delta
        d = np.concatenate([np.linspace(delta, 2 * delta, n_samples), -np.linspace(delta, 2 * delta, n_samples)])
        x = np.stack([R - d, np.zeros_like(d)], axis=-1)
        rho = d / self.eps
        c_i = self.inner.c0(rho) + self.eps * self.inner.c1(rho, x, t)
        c_o, _, _ = self.outer.fields(x, t, self.eps)
        return float(np.max(np.abs(c_i - c_o)))


def glue(inner, outer, boundary, chart, eps):
    if inner.chart is not chart or outer.chart is not chart or boundary.chart is not chart:
        raise ChartMismatch("expansion terms were built on different charts")
    return ApproxField(inner, outer, boundary, chart, eps)


def build_radial_approximation(eps, *, beta=1.0, R0=1.0, R_out=2.0, T=0.05, delta=None, profiles=None, well=None):
    """Convenience constructor for the concentric-circle scenario."""
    well = well or DoubleWell(beta)
    profiles = profiles or build_profile_set(well)
    sharp = evolve_sharp(R0, R_out, profiles.moments.sigma, T)
    delta = default_delta(R0, R_out) if delta is None else delta
    times = np.linspace(0.0, T, 11)
    chart = TubularChart(Circle(sharp.R, time_scale=max(T, 1e-3)), delta, Disk(R_out), times)
    outer = build_outer(sharp, well, chart)
    inner = build_inner(outer, profiles, chart, 0.0)
    boundary = build_boundary(outer, chart)
    return glue(inner, outer, boundary, chart, eps)


@dataclass(frozen=True)
class SpectralReport:
    min_f2_outside: float
    C_star: float
    worst_point: tuple
    pq_bound: float
    sup_abs_c: float
    sup_surface_grad_c: float
    theta1_orthogonality: float

    @property
    def passed(self):
        return self.C_star <= 1.0 and np.isfinite(self.pq_bound)


def spectral_assumption_check(field, chart=None, well=None, *, times=None, n_r=None, n_angles=8, seed=0):
    """Structural checks on the glued concentration.

    ``f''(c_A)`` is sampled on the disk outside the inner strip, ``C*`` is the
    reciprocal of its minimum. The remainder of the decomposition
    ``c_I = theta0 + eps p theta1 + eps^2 q`` with ``p = lap d`` at the
    projection is bounded through ``|c1 - p theta1| / (eps + |d|)``.

    Raises
    ------
    CheckFailed
        When ``f''(c_A)`` is not positive outside the strip or the remainder
        bound is not finite.
    """
    chart = chart or field.chart
    well = well or field.well
    eps, delta = field.eps, chart.delta
    T = field.sharp.T
    times = np.linspace(0.0, T, 9) if times is None else np.asarray(times)
    R_out = chart.boundary.radius
    n_r = n_r or int(np.ceil(16 * R_out / eps))
    rng = np.random.default_rng(seed)
    r = np.linspace(0.0, R_out, n_r + 1)

    min_f2, worst, pq, sup_c, sup_grad = np.inf, None, 0.0, 0.0, 0.0
    for t in times:
        ang = rng.random(n_angles) * 2 * np.pi
        pts = (r[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)[None]).reshape(-1, 2)
        vals = field.evaluate(pts, t)
        c, d = vals["cA"], vals["d_gamma"]
        sup_c = max(sup_c, float(np.max(np.abs(c))))
        out = np.abs(d) >= delta
        f2 = well.d2f(c[out])
        k = int(np.argmin(f2))
        if f2[k] < min_f2:
            min_f2, worst = float(f2[k]), (tuple(pts[out][k]), float(t))

        strip = np.abs(d) < 2 * delta
        xs, ds = pts[strip], d[strip]
        rho = ds / eps
        p_coef = chart.curve.kappa(chart.curve.parameter(xs, t), t)
        q = field.inner.c1(rho, xs, t) - p_coef * field.profiles.theta1(rho)
        pq = max(pq, float(np.max(np.abs(q) / (eps + np.abs(ds)))))

        # tangential derivative of c_A along the circle through each sample
        hs = 1e-4
        rad = np.linalg.norm(xs, axis=-1)
        a = np.arctan2(xs[:, 1], xs[:, 0])
        plus = np.stack([rad * np.cos(a + hs), rad * np.sin(a + hs)], axis=-1)
        minus = np.stack([rad * np.cos(a - hs), rad * np.sin(a - hs)], axis=-1)
        tang = (field.c(plus, t) - field.c(minus, t)) / (2 * hs * np.maximum(rad, 1e-12))
        sup_grad = max(sup_grad, float(np.max(np.abs(tang))))

    prof = field.profiles
    orth = prof.grid.integrate(prof.theta1.values * prof.theta0.derivative**2 * well.d3f(prof.theta0.values))
    report = SpectralReport(
        min_f2_outside=min_f2,
        C_star=1.0 / min_f2 if min_f2 > 0 else np.inf,
        worst_point=worst,
        pq_bound=pq,
        sup_abs_c=sup_c,
        sup_surface_grad_c=sup_grad,
        theta1_orthogonality=float(orth),
    )
    if not min_f2 > 0:
        raise CheckFailed(f"f''(c_A) = {min_f2:.4g} <= 0 outside the strip at {worst}", worst=worst)
    if not np.isfinite(pq):
        raise CheckFailed("remainder bound of the profile decomposition is not finite")
    return report
