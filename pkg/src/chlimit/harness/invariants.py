"""Machine-readable invariant suites, one per module.

Each suite returns rows ``(suite, check, value, tolerance, passed)``. A
suite that raises is reported as a single failed row rather than aborting
the others.
"""

from __future__ import annotations

import numpy as np

from ..diffuse import RadialGrid, interface_radius, run
from ..errors import ChlimitError, DegenerateFit, SeparationViolated
from ..expansion import build_radial_approximation, spectral_assumption_check
from ..geometry import Circle, Disk, TubularChart
from ..profiles import DoubleWell, RhoGrid, build_profile_set
from ..residuals import EvaluationGrid, eval_residual, fit_order, stratify
from ..sharp_limit import interface_ode_rhs, radial_mu, evolve_sharp
from .pipeline import geometry_rows

SUITES = ("profiles", "geometry", "sharp_limit", "expansion", "diffuse", "residuals")


def _row(suite, name, value, tol, passed=None):
    value = float(value)
    if passed is None:
        passed = bool(abs(value) <= tol)
    return (suite, name, value, tol, bool(passed))


def profiles_suite(cfg):
    well = DoubleWell(cfg.beta)
    pset = build_profile_set(well, RhoGrid(cfg.profile_half_width, cfg.profile_nodes))
    rho = pset.grid.nodes
    exact = np.tanh(rho * np.sqrt(cfg.beta / 2))
    m = pset.moments
    t0 = pset.theta0
    teta0 = pset.grid.integrate(pset.theta1.values * t0.derivative**2 * well.d3f(t0.values))
    solv = np.max(np.abs(pset.operator.solvability(pset.basis_rhs())))
    return [
        _row("profiles", "theta0_vs_tanh", np.max(np.abs(t0.values - exact)), 1e-8),
        _row("profiles", "sigma_vs_closed_form", m.sigma - np.sqrt(2 * cfg.beta) / 3, 1e-7),
        _row("profiles", "int_theta0p_minus_2", m.int_theta0p - 2.0, 1e-8),
        _row("profiles", "eta_orthogonality", m.eta_orthogonality, 1e-10),
        _row("profiles", "theta1_weighted_orthogonality", teta0, 1e-7),
        _row("profiles", "basis_solvability", solv, 1e-8),
        _row("profiles", "theta1_residual", pset.theta1.residual_norm, 1e-8),
        _row("profiles", "theta0_far_field", max(abs(t0.values[0] + 1), abs(t0.values[-1] - 1)), 1e-8),
    ]


def geometry_suite(cfg):
    rows = [("geometry", k, v, tol, ok) for k, v, tol, ok in
            geometry_rows(cfg.R0, cfg.R_out, cfg.chart_delta, cfg.samples, cfg.seed)]
    try:
        TubularChart(Circle(cfg.R0), (cfg.R_out - cfg.R0) / 4, Disk(cfg.R_out))
        rejected = False
    except SeparationViolated:
        rejected = True
    rows.append(_row("geometry", "rejects_crowded_delta", 0.0 if rejected else 1.0, 0.0))
    return rows


def sharp_limit_suite(cfg):
    sigma = np.sqrt(2 * cfg.beta) / 3
    R, Ro = cfg.R0, cfg.R_out
    h = 1e-3
    # flux identity: half the jump of d mu/dr at the interface equals dR/dt
    # (the inner phase has constant mu, so only the outer trace contributes)
    f = [radial_mu(R, Ro, sigma, R + k * h) for k in range(5)]
    outer_slope = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    flux = 0.5 * outer_slope
    rhs = interface_ode_rhs(R, Ro, sigma)
    r = np.linspace(R + 0.1 * (Ro - R), Ro - 0.1 * (Ro - R), 50)
    hh = 1e-3
    mu = lambda x: radial_mu(R, Ro, sigma, x)  # noqa: E731
    lap = ((r + hh / 2) * (mu(r + hh) - mu(r)) - (r - hh / 2) * (mu(r) - mu(r - hh))) / (r * hh**2)
    state = evolve_sharp(R, Ro, sigma, cfg.T)
    ts = np.linspace(0, cfg.T, 200)
    Rs = state.R(ts)
    return [
        _row("sharp_limit", "flux_identity", flux - rhs, 1e-7),
        _row("sharp_limit", "harmonicity", np.max(np.abs(lap)), 1e-7),
        _row("sharp_limit", "mu_at_wall", radial_mu(R, Ro, sigma, Ro), 1e-14),
        _row("sharp_limit", "radius_monotone", float(np.max(np.diff(Rs))), 0.0, bool(np.all(np.diff(Rs) < 0))),
    ]


def expansion_suite(cfg):
    eps = cfg.eps_list[-1]
    field = build_radial_approximation(eps, beta=cfg.beta, R0=cfg.R0, R_out=cfg.R_out, T=cfg.T, delta=cfg.delta)
    a = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    wall = cfg.R_out * np.stack([np.cos(a), np.sin(a)], axis=-1)
    v = field.evaluate(wall, 0.0)
    rows = [
        _row("expansion", "wall_concentration", np.max(np.abs(v["cA"] + 1)), 1e-12),
        _row("expansion", "wall_chemical_potential", np.max(np.abs(v["muA"])), 1e-12),
        _row("expansion", "zero_velocity", np.max(np.abs(v["vA"])), 0.0),
    ]
    try:
        rep = spectral_assumption_check(field, seed=cfg.seed)
        rows.append(_row("expansion", "spectral_C_star", rep.C_star, 1.0, rep.C_star <= 1.0))
        rows.append(_row("expansion", "profile_decomposition_bound", rep.pq_bound, np.inf, np.isfinite(rep.pq_bound)))
    except ChlimitError as exc:
        rows.append(("expansion", f"spectral_check_failed: {exc}", np.nan, 1.0, False))
    rows.append(_row("expansion", "matching_residual", field.matching_residual(0.0), eps))
    return rows


def diffuse_suite(cfg):
    eps = cfg.eps_list[0]
    field = build_radial_approximation(eps, beta=cfg.beta, R0=cfg.R0, R_out=cfg.R_out, T=cfg.T, delta=cfg.delta)
    grid = RadialGrid.for_eps(cfg.R_out, eps, cfg.per_eps)
    res = run(field, grid, eps, cfg.T)
    inc = res.energy_increments
    R0_eps = interface_radius(res.snapshots[0] if res.snapshots else res.final, grid) if res.snapshots else cfg.R0
    return [
        _row("diffuse", "energy_max_increment", np.max(inc), 0.0, bool(np.all(inc <= 0))),
        _row("diffuse", "energy_guard_rejections", res.energy_rejections, 0.0),
        _row("diffuse", "boundary_rows", res.boundary_error, 0.0),
        _row("diffuse", "initial_radius_offset", R0_eps - cfg.R0, 1e-12),
        _row("diffuse", "radius_error_vs_sharp",
             np.max(np.abs(res.arrays()["R_eps"] - field.sharp.R(res.arrays()["t"]))), 5 * eps),
    ]


def residuals_suite(cfg):
    eps = cfg.eps_list[0]
    field = build_radial_approximation(eps, beta=cfg.beta, R0=cfg.R0, R_out=cfg.R_out, T=cfg.T, delta=cfg.delta)
    grid = EvaluationGrid.radial(cfg.R_out, cfg.T, eps, per_eps=cfg.eval_per_eps, n_t=3)
    rdiv = eval_residual(field, "r_div", grid)
    strata = stratify(field, grid.r, 0.0)
    e = np.array([0.1, 0.05, 0.025])
    slope, _ = fit_order(e, 3.0 * e**2)
    try:
        fit_order(e, np.zeros(3))
        degenerate = False
    except DegenerateFit:
        degenerate = True
    return [
        _row("residuals", "r_div_sup", np.max(np.abs(rdiv.values)), 1e-12),
        _row("residuals", "strata_partition", float(np.all((strata >= 0) & (strata <= 3))), 1.0, bool(np.all((strata >= 0) & (strata <= 3)))),
        _row("residuals", "synthetic_slope", slope - 2.0, 1e-12),
        _row("residuals", "degenerate_fit_rejected", 0.0 if degenerate else 1.0, 0.0),
    ]


_RUNNERS = {
    "profiles": profiles_suite,
    "geometry": geometry_suite,
    "sharp_limit": sharp_limit_suite,
    "expansion": expansion_suite,
    "diffuse": diffuse_suite,
    "residuals": residuals_suite,
}


def run_invariants(cfg, only=None):
    names = SUITES if not only else [s for s in SUITES if s in only]
    rows = []
    for name in names:
        try:
            rows += _RUNNERS[name](cfg)
        except ChlimitError as exc:
            rows.append((name, f"suite_error: {type(exc).__name__}: {exc}", float("nan"), float("nan"), False))
    return rows
