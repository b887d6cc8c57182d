"""Acceptance criteria, one test each.

Every test appends a PASS/FAIL line that is printed in the terminal
summary (and to stdout under ``-s``). Tolerances are the contractual ones.
"""

import time

import numpy as np
import pytest

from chlimit.geometry import Circle, Disk, TubularChart, check_identities, default_delta
from chlimit.harness.config import ExperimentConfig
from chlimit.harness.pipeline import measure_all, norm_rows, order_rows
from chlimit.profiles import DoubleWell, RhoGrid, build_profile_set, solve_theta0
from chlimit.sharp_limit import evolve_sharp

import oracles
from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

EPS_SWEEP = (0.08, 0.04, 0.02)


def report(number, title, checks):
    """``checks``: list of ``(label, measured, requirement, passed)``."""
    ok = all(c[3] for c in checks)
    detail = "; ".join(f"{label} = {value:.4g} ({req})" for label, value, req, _ in checks)
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="session")
def sweep(tmp_path_factory):
    cfg = ExperimentConfig(eps_list=EPS_SWEEP, T=0.05, per_eps=8)
    start = time.perf_counter()
    measurements = measure_all(cfg, str(tmp_path_factory.mktemp("sweep")))
    elapsed = time.perf_counter() - start
    orders = {k: s for k, s, _ in order_rows(norm_rows(measurements))}
    return cfg, measurements, orders, elapsed


def test_criterion_01_profile_exactness():
    grid = RhoGrid(20.0, 4001)
    start = time.perf_counter()
    theta0 = solve_theta0(DoubleWell(1.0), grid)
    seconds = time.perf_counter() - start
    err = float(np.max(np.abs(theta0.values - oracles.tanh_profile(grid.nodes))))
    assert report(1, "profile matches tanh", [
        ("max error", err, "<= 1e-8", err <= 1e-8),
        ("runtime s", seconds, "< 1", seconds < 1.0),
    ])


def test_criterion_02_surface_tension(profiles):
    err = abs(profiles.moments.sigma - oracles.surface_tension())
    assert report(2, "surface tension", [("|sigma - sqrt(2)/3|", err, "<= 1e-7", err <= 1e-7)])


def test_criterion_03_orthogonality(profiles, field, well):
    m = profiles.moments
    t0 = profiles.theta0
    teta0 = abs(profiles.grid.integrate(profiles.theta1.values * t0.derivative**2 * well.d3f(t0.values)))
    rhs = np.column_stack([profiles.basis_rhs(), m.sigma - t0.derivative])
    solv = float(np.max(np.abs(profiles.operator.solvability(rhs))))
    r = np.linspace(1.0 - 0.3, 1.0 + 0.3, 41)
    _, proj = field.inner.solve_samples(np.stack([r, np.zeros_like(r)], axis=-1), 0.03)
    solv = max(solv, float(np.max(np.abs(proj))))
    assert report(3, "orthogonality suite", [
        ("|int (eta - 1/2) theta0'|", abs(m.eta_orthogonality), "<= 1e-10", abs(m.eta_orthogonality) <= 1e-10),
        ("|int theta1 theta0'^2 f'''|", teta0, "<= 1e-7", teta0 <= 1e-7),
        ("max solvability residual", solv, "<= 1e-8", solv <= 1e-8),
    ])


def test_criterion_04_geometry_identities():
    chart = TubularChart(Circle(1.0), default_delta(1.0, 2.0), Disk(2.0))
    res = check_identities(chart, n_samples=1000, seed=0)
    checks = [(k, res[k], "<= 1e-5", res[k] <= 1e-5)
              for k in ("grad_d_norm", "grad_S_orthogonality", "chain_rule")]
    checks.append(("jacobian", res["jacobian"], "<= 1e-8", res["jacobian"] <= 1e-8))
    assert report(4, "geometry identities on 1000 points", checks)


def test_criterion_05_sharp_limit_oracle():
    sigma = oracles.surface_tension()
    state = evolve_sharp(1.0, 2.0, sigma, 0.1)
    ref = oracles.rk4_radius(1.0, 2.0, sigma, 0.1, dt=1e-6)
    diff = abs(float(state.R(0.1)) - ref)
    slope = float(state.dRdt(0.0))
    assert report(5, "sharp limit vs RK4", [
        ("|R(0.1) - R_rk4|", diff, "<= 1e-8", diff <= 1e-8),
        ("dR/dt(0)", slope, "-0.3401 +- 1e-4", abs(slope + 0.3401) <= 1e-4),
    ])


def test_criterion_06_central_convergence(sweep):
    _, ms, orders, elapsed = sweep
    errs = [m.errors["radius_error"] for m in ms]
    slope = orders["radius_error@domain"]
    decreasing = all(a > b for a, b in zip(errs, errs[1:]))
    assert report(6, "interface radius convergence", [
        ("slope", slope, ">= 0.9", slope >= 0.9),
        ("decreasing", float(decreasing), "true", decreasing),
        ("sweep seconds", elapsed, "<= 1800", elapsed <= 1800),
    ])


def test_criterion_07_residual_orders(sweep):
    _, ms, orders, _ = sweep
    rdiv = max(v for m in ms for n, _, v in m.residual_rows if n == "r_div_Linf")
    bulk = orders["r_CH2_Linf@bulk_strata"]
    strip = orders["r_CH2_L2@interface"]
    weak = orders["r_CH1_weak@all"]
    assert report(7, "residual orders", [
        ("r_CH2 sup bulk slope", bulk, ">= 1.8", bulk >= 1.8),
        ("r_CH2 L2 inner strip slope", strip, ">= 0.9", strip >= 0.9),
        ("r_div sup", rdiv, "== 0 to machine precision", rdiv <= 1e-14),
        ("r_CH1 weak slope", weak, ">= 0.9", weak >= 0.9),
    ])


def test_criterion_08_boundary_conditions(sweep):
    _, ms, _, _ = sweep
    approx = max(m.approx_boundary_error for m in ms)
    diffuse = max(m.diffuse_boundary_error for m in ms)
    assert report(8, "boundary values exact", [
        ("approximation wall error", approx, "<= 1e-12", approx <= 1e-12),
        ("diffuse wall rows", diffuse, "== 0 every step", diffuse == 0.0),
    ])


def test_criterion_09_spectral_assumption(sweep):
    _, ms, _, _ = sweep
    cstar = max(m.spectral["C_star"] for m in ms)
    pq = max(m.spectral["pq_bound"] for m in ms)
    assert report(9, "spectral assumption suite", [
        ("max C*", cstar, "<= 1", cstar <= 1.0),
        ("decomposition bound", pq, "finite", bool(np.isfinite(pq))),
    ])


def test_criterion_10_energy_dissipation(sweep):
    _, ms, _, _ = sweep
    worst = max(m.energy_max_increment for m in ms)
    steps = sum(m.accepted_steps for m in ms)
    rejected = sum(m.energy_rejections for m in ms)
    assert report(10, "energy dissipation", [
        ("largest increment", worst, "<= 0", worst <= 0.0),
        ("accepted steps", steps, "all checked", True),
        ("guard rejections", rejected, "== 0", rejected == 0),
    ])
