"""Residuals of the approximate solution and error norms against a diffuse run.

Residuals are formed by substituting the glued fields into the equations
with fourth-order central differences in space and second-order central
differences in time, sampled on a radial ray at several times. Samples are
split into four strata: the inner strip ``|d| < delta``, the cutoff annulus
``delta <= |d| < 2 delta``, the wall collar ``|d_B| < delta`` and the bulk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson, trapezoid

from .errors import DegenerateFit, GridMismatch, InvalidInput, StencilOutOfDomain

__all__ = [
    "STRATA",
    "EvaluationGrid",
    "ResidualField",
    "WeakNormDictionary",
    "stratify",
    "eval_residual",
    "residual_norms",
    "weak_norm",
    "error_norms",
    "fit_order",
]

STRATA = ("interface", "transition", "bulk", "boundary")
RESIDUALS = ("r_S", "r_div", "r_CH1", "r_CH2")


@dataclass(frozen=True)
class EvaluationGrid:
    """Tensor grid of radii (on the positive first axis) and times."""

    r: np.ndarray
    t: np.ndarray
    fd_step: float
    dt_step: float

    @classmethod
    def radial(cls, R_out, T, eps, *, per_eps=16, n_t=16, fd_step=None, dt_step=None):
        """Radii spaced at most ``eps/per_eps`` and ``n_t`` equispaced times.

        The last radius leaves room for the difference stencil.
        """
        fd_step = eps / 16.0 if fd_step is None else fd_step
        r_max = R_out - 2.0 * fd_step
        n_r = int(np.ceil(per_eps * r_max / eps)) + 1
        if n_r % 2 == 0:
            n_r += 1  # odd count for Simpson's rule
        t = np.linspace(0.0, T, n_t) if n_t > 1 else np.array([0.0])
        dt_step = 1e-4 * max(T, 1e-3) if dt_step is None else dt_step
        return cls(np.linspace(0.0, r_max, n_r), t, fd_step, dt_step)

    def points(self):
        return np.stack([self.r, np.zeros_like(self.r)], axis=-1)


@dataclass(frozen=True, eq=False)
class ResidualField:
    """Residual samples of shape ``(n_t, n_r)`` (vector residuals: ``(n_t, n_r, 2)``)."""

    which: str
    grid: EvaluationGrid
    values: np.ndarray
    strata: np.ndarray
    eps: float

    @property
    def magnitude(self):
        v = self.values
        return np.linalg.norm(v, axis=-1) if v.ndim == 3 else np.abs(v)


def stratify(field, r, t):
    """Stratum index (into :data:`STRATA`) for radii ``r`` at time ``t``."""
    pts = np.stack([r, np.zeros_like(r)], axis=-1)
    d = np.abs(field.chart.d_gamma(pts, t))
    dB = np.abs(field.chart.d_boundary(pts))
    delta = field.chart.delta
    out = np.full(r.shape, 2, dtype=int)
    out[dB < delta] = 3
    out[d < 2 * delta] = 1
    out[d < delta] = 0
    return out


_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_D1 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, 16.0, -1.0]) / 12.0
_D2_CENTER = -30.0 / 12.0


def _stencil_points(points, h):
    """Center plus four offsets along each axis: shape ``(n, 9, 2)``."""
    pts = [points]
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = 1.0
        for o in _OFFSETS:
            pts.append(points + o * h * e)
    return np.stack(pts, axis=1)


def _derivatives(values, h):
    """Gradient and Laplacian from values on the 9-point stencil."""
    center = values[:, 0]
    grads, lap = [], 0.0
    for axis in range(2):
        arm = values[:, 1 + 4 * axis : 5 + 4 * axis]
        grads.append(arm @ _D1 / h)
        lap = lap + (arm @ _D2 + _D2_CENTER * center) / h**2
    return np.stack(grads, axis=-1), lap


def _spatial_terms(field, points, t, h):
    R_out = field.chart.boundary.radius
    st = _stencil_points(points, h)
    if np.max(np.linalg.norm(st, axis=-1)) > R_out * (1 + 1e-12):
        raise StencilOutOfDomain("difference stencil leaves the disk; move samples inward")
    vals = field.evaluate(st.reshape(-1, 2), t)
    n = points.shape[0]
    c = vals["cA"].reshape(n, 9)
    mu = vals["muA"].reshape(n, 9)
    p = vals["pA"].reshape(n, 9)
    v = vals["vA"].reshape(n, 9, 2)
    grad_c, lap_c = _derivatives(c, h)
    _, lap_mu = _derivatives(mu, h)
    grad_p, _ = _derivatives(p, h)
    gv1, lap_v1 = _derivatives(v[..., 0], h)
    gv2, lap_v2 = _derivatives(v[..., 1], h)
    return {
        "c": c[:, 0],
        "mu": mu[:, 0],
        "v": v[:, 0],
        "grad_c": grad_c,
        "lap_c": lap_c,
        "lap_mu": lap_mu,
        "grad_p": grad_p,
        "div_v": gv1[:, 0] + gv2[:, 1],
        "lap_v": np.stack([lap_v1, lap_v2], axis=-1),
    }


def _residual_at(field, which, points, t, grid):
    eps = field.eps
    terms = _spatial_terms(field, points, t, grid.fd_step)
    if which == "r_CH2":
        return terms["mu"] + eps * terms["lap_c"] - field.well.df(terms["c"]) / eps
    if which == "r_div":
        return terms["div_v"]
    if which == "r_S":
        return -terms["lap_v"] + terms["grad_p"] - terms["mu"][:, None] * terms["grad_c"]
    if which == "r_CH1":
        k = grid.dt_step
        dcdt = (field.c(points, t + k) - field.c(points, t - k)) / (2 * k)
        transport = np.sum(terms["v"] * terms["grad_c"], axis=-1)
        return dcdt + transport - terms["lap_mu"]
    raise InvalidInput(f"unknown residual {which!r}; choose from {RESIDUALS}")


def eval_residual(field, which, grid, t=None):
    """Residual samples on the grid (all grid times, or the single time ``t``)."""
    times = grid.t if t is None else np.atleast_1d(np.asarray(t, dtype=float))
    pts = grid.points()
    vals, strata = [], []
    for tau in times:
        vals.append(_residual_at(field, which, pts, float(tau), grid))
        strata.append(stratify(field, grid.r, float(tau)))
    g = grid if t is None else EvaluationGrid(grid.r, times, grid.fd_step, grid.dt_step)
    return ResidualField(which, g, np.asarray(vals), np.asarray(strata), field.eps)


def _time_integral(values, t):
    if t.size == 1:
        return float(values[0])
    return float(trapezoid(values, t))


def _space_integral(values, r):
    """``int values 2 pi r dr`` along the last axis (Simpson)."""
    return simpson(values * (2 * np.pi * r), x=r, axis=-1)


def residual_norms(residual, dictionary=None):
    """Stratified sup and L2 norms, plus the weak norm for ``r_CH1``.

    Returns a list of ``(norm_name, stratum, value)``.
    """
    mag = residual.magnitude
    r, t = residual.grid.r, residual.grid.t
    rows = []
    for k, name in enumerate(STRATA):
        mask = residual.strata == k
        rows.append(("Linf", name, float(np.max(mag[mask])) if np.any(mask) else 0.0))
        sq = _space_integral(np.where(mask, mag**2, 0.0), r)
        rows.append(("L2", name, float(np.sqrt(max(_time_integral(sq, t), 0.0)))))
    outer = residual.strata >= 2
    rows.append(("Linf", "bulk_strata", float(np.max(mag[outer])) if np.any(outer) else 0.0))
    rows.append(("Linf", "all", float(np.max(mag))))
    sq = _space_integral(mag**2, r)
    rows.append(("L2", "all", float(np.sqrt(max(_time_integral(sq, t), 0.0)))))
    if residual.which == "r_CH1":
        rows.append(("weak", "all", weak_norm(residual, dictionary)))
    return [(f"{residual.which}_{n}", s, v) for n, s, v in rows]


class WeakNormDictionary:
    """Finite family of smooth test functions on the disk with their H1 norms.

    Members: the constant, the coordinate monomials of degree 1 and 2 and
    three centred Gaussians of widths ``R_out * (1/4, 1/2, 3/4)``.
    """

    def __init__(self, R_out, members=None, n_r=801, n_theta=64):
        self.R_out = float(R_out)
        self.n_theta = n_theta
        self.members = members if members is not None else self.default_members(R_out)
        r = np.linspace(0.0, R_out, n_r)
        th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        x = r[:, None] * np.cos(th)[None]
        y = r[:, None] * np.sin(th)[None]
        self.h1_norms = {}
        for name, (fun, grad) in self.members.items():
            val = fun(x, y)
            gx, gy = grad(x, y)
            ring = (val**2 + gx**2 + gy**2).mean(axis=1) * 2 * np.pi
            self.h1_norms[name] = float(np.sqrt(simpson(ring * r, x=r)))

    @staticmethod
    def default_members(R_out):
        def const(x, y):
            return np.ones_like(x)

        members = {
            "one": (const, lambda x, y: (0 * x, 0 * x)),
            "x": (lambda x, y: x, lambda x, y: (1 + 0 * x, 0 * x)),
            "y": (lambda x, y: y, lambda x, y: (0 * x, 1 + 0 * x)),
            "xx": (lambda x, y: x * x, lambda x, y: (2 * x, 0 * x)),
            "xy": (lambda x, y: x * y, lambda x, y: (y, x)),
            "yy": (lambda x, y: y * y, lambda x, y: (0 * x, 2 * y)),
        }
        for k, frac in enumerate((0.25, 0.5, 0.75)):
            w = frac * R_out

            def g(x, y, w=w):
                return np.exp(-(x * x + y * y) / (2 * w * w))

            def dg(x, y, w=w):
                e = np.exp(-(x * x + y * y) / (2 * w * w))
                return -x / (w * w) * e, -y / (w * w) * e

            members[f"gauss{k}"] = (g, dg)
        return members

    def ring_averages(self, r):
        """``int_0^{2 pi} phi(r cos a, r sin a) da`` for every member."""
        th = np.linspace(0.0, 2 * np.pi, self.n_theta, endpoint=False)
        x = r[:, None] * np.cos(th)[None]
        y = r[:, None] * np.sin(th)[None]
        return {name: fun(x, y).mean(axis=1) * 2 * np.pi for name, (fun, _) in self.members.items()}


def weak_norm(residual, dictionary=None):
    """``max_phi int_0^T |int r phi dx| dt / ||phi||_H1`` over the dictionary.

    For a single time sample the time integral is dropped.
    """
    r, t = residual.grid.r, residual.grid.t
    dictionary = dictionary or WeakNormDictionary(r[-1])
    vals = residual.values
    if vals.ndim == 3:
        raise InvalidInput("weak norm is defined for scalar residuals")
    rings = dictionary.ring_averages(r)
    best = 0.0
    for name, ring in rings.items():
        spatial = np.abs(simpson(vals * ring * r, x=r, axis=-1))
        best = max(best, _time_integral(spatial, t) / dictionary.h1_norms[name])
    return float(best)


def _dual_norm(values, r, dictionary):
    rings = dictionary.ring_averages(r)
    return max(
        abs(float(simpson(values * ring * r, x=r))) / dictionary.h1_norms[name]
        for name, ring in rings.items()
    )


def error_norms(diffuse_run, field, *, dictionary=None, include_paired=True):
    """Norms of ``c_eps - c_A`` over the snapshots of a diffuse run.

    The negative Sobolev norm is replaced by the dual norm over the test
    dictionary. Returns a dict keyed by norm name.
    """
    if abs(diffuse_run.eps - field.eps) > 1e-14:
        raise GridMismatch("diffuse run and approximation use different eps")
    snaps = diffuse_run.snapshots
    if len(snaps) < 2:
        raise GridMismatch("error norms need at least two snapshots")
    eps, delta = field.eps, field.chart.delta
    grid = diffuse_run.grid
    r = grid.nodes
    pts = np.stack([r, np.zeros_like(r)], axis=-1)
    t = np.array([s.t for s in snaps])
    dictionary = dictionary or WeakNormDictionary(grid.R_out)
    keys = ("l2", "l2_out", "grad_out", "dn_in", "energy")
    acc = {k: [] for k in keys}
    dual, sup = [], []
    paired = []
    fd_h = eps / 16.0
    inner_nodes = r <= grid.R_out - 2 * fd_h
    res_grid = EvaluationGrid(r[inner_nodes], np.array([0.0]), fd_h, 1e-4 * max(field.sharp.T, 1e-3))
    for s in snaps:
        cA = field.c(pts, s.t)
        R = s.c - cA
        dR = np.gradient(R, r, edge_order=2)
        inside = np.abs(field.chart.d_gamma(pts, s.t)) < delta
        w = 2 * np.pi * r
        acc["l2"].append(simpson(R**2 * w, x=r))
        acc["l2_out"].append(simpson(np.where(inside, 0.0, R**2) * w, x=r))
        acc["grad_out"].append(simpson(np.where(inside, 0.0, dR**2) * w, x=r))
        acc["dn_in"].append(simpson(np.where(inside, dR**2, 0.0) * w, x=r))
        acc["energy"].append(simpson((eps * dR**2 + field.well.d2f(cA) * R**2 / eps) * w, x=r))
        dual.append(_dual_norm(R, r, dictionary))
        sup.append(np.max(np.abs(R)))
        if include_paired:
            rch2 = _residual_at(field, "r_CH2", res_grid.points(), s.t, res_grid)
            paired.append(simpson(rch2 * R[inner_nodes] * w[inner_nodes], x=r[inner_nodes]))
    I = {k: _time_integral(np.asarray(v), t) for k, v in acc.items()}
    out = {
        "L2_R": np.sqrt(I["l2"]),
        "Linf_R": float(np.max(sup)),
        "main1": np.sqrt(I["l2"]),  # tangential gradients of radial fields vanish
        "main2": eps * np.sqrt(I["grad_out"]) + np.sqrt(I["l2_out"]),
        "main3": eps**1.5 * np.sqrt(I["dn_in"]) + float(np.max(dual)),
        "main4": I["energy"],
    }
    if include_paired:
        out["paired_rCH2_R"] = abs(_time_integral(np.asarray(paired), t))
    hist = diffuse_run.arrays()
    out["radius_error"] = float(np.max(np.abs(hist["R_eps"] - field.sharp.R(hist["t"]))))
    return {k: float(v) for k, v in out.items()}


def fit_order(eps, norms):
    """Least-squares slope of ``log norm`` against ``log eps``.

    Returns ``(slope, fit_residual)`` where the residual is the root mean
    square deviation of the fitted line in log space.
    """
    eps = np.asarray(eps, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if eps.size < 3 or eps.size != norms.size:
        raise DegenerateFit("need at least three (eps, norm) pairs")
    if np.any(~np.isfinite(norms)) or np.any(norms <= 0):
        raise DegenerateFit("norms must be finite and positive")
    x, y = np.log(eps), np.log(norms)
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    fit_res = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    return float(coef[0]), fit_res
