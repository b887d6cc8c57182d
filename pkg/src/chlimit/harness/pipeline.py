"""Stage functions shared by the CLI subcommands.

Each stage writes CSV files and returns the list of paths it produced so
the caller can register them in the manifest.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..diffuse import RadialGrid, run
from ..errors import DegenerateFit
from ..expansion import build_radial_approximation, spectral_assumption_check
from ..geometry import Circle, Disk, TubularChart, check_identities
from ..profiles import DoubleWell, RhoGrid, build_profile_set
from ..residuals import (
    RESIDUALS,
    EvaluationGrid,
    WeakNormDictionary,
    error_norms,
    eval_residual,
    fit_order,
    residual_norms,
)
from ..sharp_limit import evolve_sharp

GEOMETRY_TOLERANCES = {
    "grad_d_norm": 1e-5,
    "grad_S_orthogonality": 1e-5,
    "chain_rule": 1e-5,
    "gradient_decomposition": 1e-5,
    "jacobian": 1e-8,
    "round_trip": 1e-10,
    "normal_velocity": 1e-6,
}

WEAK_NORM_NOTE = "negative Sobolev norms are replaced by the dual norm over a fixed test dictionary"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows, comment=None):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _profile_set(cfg):
    return build_profile_set(DoubleWell(cfg.beta), RhoGrid(cfg.profile_half_width, cfg.profile_nodes))


# -- individual stages -----------------------------------------------------


def _parent(path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def profile_stage(beta, half_width, nodes, out):
    """Write the heteroclinic profile (``out``) plus siblings for eta, theta1 and the moments."""
    _parent(out)
    pset = build_profile_set(DoubleWell(beta), RhoGrid(half_width, nodes))
    base, ext = os.path.splitext(out)
    ext = ext or ".csv"
    paths = [out if out.endswith(ext) else base + ext]
    pset.theta0.to_csv(paths[0])
    for name in ("eta", "theta1"):
        p = f"{base}_{name}{ext}"
        getattr(pset, name).to_csv(p)
        paths.append(p)
    m = pset.moments
    rows = [(k, getattr(m, k)) for k in ("sigma", "int_theta0p", "int_eta_theta0p", "K_eta", "eta_tilde",
                                         "eta_orthogonality", "quadrature_error")]
    rows.append(("decay_rate", pset.theta0.decay_rate))
    rows.append(("residual_norm", pset.theta0.residual_norm))
    paths.append(write_csv(f"{base}_moments{ext}", ["quantity", "value"], rows))
    return pset, paths


def geometry_rows(R, R_out, delta, samples, seed=0, t=0.0):
    chart = TubularChart(Circle(R), delta, Disk(R_out))
    res = check_identities(chart, n_samples=samples, t=t, seed=seed)
    return [(k, res[k], GEOMETRY_TOLERANCES[k], res[k] <= GEOMETRY_TOLERANCES[k]) for k in GEOMETRY_TOLERANCES]


def sharp_stage(R0, R_out, T, beta, out):
    sigma = build_profile_set(DoubleWell(beta)).moments.sigma
    state = evolve_sharp(R0, R_out, sigma, T)
    _parent(out)
    state.to_csv(out)
    return state, [out]


def approx_stage(eps, t, grid_n, out, *, beta=1.0, R0=1.0, R_out=2.0, T=None, delta=None):
    """Glued fields on a ``grid_n x grid_n`` Cartesian grid clipped to the disk."""
    T = max(t, 0.05) if T is None else T
    field = build_radial_approximation(eps, beta=beta, R0=R0, R_out=R_out, T=T, delta=delta)
    axis = np.linspace(-R_out, R_out, grid_n)
    X1, X2 = np.meshgrid(axis, axis, indexing="xy")
    pts = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= R_out]
    vals = field.evaluate(pts, t)
    rows = zip(pts[:, 0], pts[:, 1], vals["d_gamma"], vals["rho"], vals["cA"], vals["muA"],
               vals["vA"][:, 0], vals["vA"][:, 1], vals["pA"])
    header = ["x1", "x2", "d_gamma", "rho", "cA", "muA", "vA1", "vA2", "pA"]
    return field, [write_csv(out, header, rows)]


def diffuse_stage(eps, R0, R_out, T, n_r, snapshots, out_dir, *, beta=1.0, delta=None):
    field = build_radial_approximation(eps, beta=beta, R0=R0, R_out=R_out, T=T, delta=delta)
    grid = RadialGrid(R_out, n_r - 1) if n_r else RadialGrid.for_eps(R_out, eps)
    grid.check_resolution(eps)
    result = run(field, grid, eps, T, well=field.well, snapshot_times=np.linspace(0.0, T, max(snapshots, 2)))
    return result, result.write(out_dir)


# -- per-eps measurement -----------------------------------------------------


@dataclass
class EpsMeasurement:
    eps: float
    residual_rows: list
    errors: dict
    spectral: dict
    energy_max_increment: float
    energy_rejections: int
    newton_rejections: int
    accepted_steps: int
    diffuse_boundary_error: float
    approx_boundary_error: float
    seconds: float
    files: list


def residual_table(cfg, eps, profiles=None, field=None):
    profiles = profiles or _profile_set(cfg)
    field = field or build_radial_approximation(
        eps, beta=cfg.beta, R0=cfg.R0, R_out=cfg.R_out, T=cfg.T, delta=cfg.delta, profiles=profiles
    )
    grid = EvaluationGrid.radial(cfg.R_out, cfg.T, eps, per_eps=cfg.eval_per_eps, n_t=cfg.n_t)
    dictionary = WeakNormDictionary(cfg.R_out)
    rows = []
    for which in RESIDUALS:
        rows += residual_norms(eval_residual(field, which, grid), dictionary)
    return field, rows


def _approx_boundary_error(field, T, n=256):
    a = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    pts = field.chart.boundary.radius * np.stack([np.cos(a), np.sin(a)], axis=-1)
    worst = 0.0
    for t in np.linspace(0.0, T, 5):
        v = field.evaluate(pts, t)
        worst = max(worst, float(np.max(np.abs(v["cA"] + 1.0))), float(np.max(np.abs(v["muA"]))))
    return worst


def measure_eps(cfg, eps, out_dir):
    """Residuals, diffuse run, error norms and structural checks for one ``eps``."""
    start = time.perf_counter()
    profiles = _profile_set(cfg)
    field, rows = residual_table(cfg, eps, profiles)
    grid = RadialGrid.for_eps(cfg.R_out, eps, cfg.per_eps)
    grid.check_resolution(eps, cfg.per_eps)
    diffuse = run(field, grid, eps, cfg.T, well=field.well,
                  snapshot_times=np.linspace(0.0, cfg.T, cfg.snapshots))
    files = diffuse.write(os.path.join(out_dir, f"eps_{eps:g}"))
    errors = error_norms(diffuse, field)
    rep = spectral_assumption_check(field, seed=cfg.seed)
    inc = diffuse.energy_increments
    return EpsMeasurement(
        eps=eps,
        residual_rows=rows,
        errors=errors,
        spectral={"C_star": rep.C_star, "pq_bound": rep.pq_bound, "min_f2_outside": rep.min_f2_outside,
                  "sup_abs_c": rep.sup_abs_c, "theta1_orthogonality": rep.theta1_orthogonality},
        energy_max_increment=float(np.max(inc)) if inc.size else 0.0,
        energy_rejections=diffuse.energy_rejections,
        newton_rejections=diffuse.newton_rejections,
        accepted_steps=len(diffuse.t) - 1,
        diffuse_boundary_error=diffuse.boundary_error,
        approx_boundary_error=_approx_boundary_error(field, cfg.T),
        seconds=time.perf_counter() - start,
        files=files,
    )


def measure_all(cfg, out_dir, threads=1):
    eps_list = list(cfg.eps_list)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(eps_list))) as pool:
            return list(pool.map(measure_eps, [cfg] * len(eps_list), eps_list, [out_dir] * len(eps_list)))
    return [measure_eps(cfg, e, out_dir) for e in eps_list]


# -- tables, fits and acceptance ----------------------------------------------


def norm_rows(measurements):
    """``(eps, norm_name, stratum, value)`` rows for residual and error norms."""
    rows = []
    for m in measurements:
        rows += [(m.eps, n, s, v) for n, s, v in m.residual_rows]
        rows += [(m.eps, n, "domain", v) for n, v in sorted(m.errors.items())]
    return rows


def order_rows(rows):
    """Fitted slope per ``norm_name@stratum``; degenerate series get ``nan``."""
    series = {}
    for eps, name, stratum, value in rows:
        series.setdefault(f"{name}@{stratum}", ([], []))
        series[f"{name}@{stratum}"][0].append(eps)
        series[f"{name}@{stratum}"][1].append(value)
    out = []
    for key, (e, v) in series.items():
        try:
            slope, res = fit_order(e, v)
        except DegenerateFit:
            slope, res = float("nan"), float("nan")
        out.append((key, slope, res))
    return out


@dataclass
class Check:
    name: str
    measured: float
    threshold: str
    passed: bool


def acceptance_checks(measurements, orders, elapsed):
    slopes = {k: s for k, s, _ in orders}

    def slope(key):
        return slopes.get(key, float("nan"))

    def floor(name, key, lo):
        s = slope(key)
        return Check(name, s, f">= {lo}", bool(s >= lo))

    checks = [
        floor("interface radius error slope", "radius_error@domain", 0.9),
        floor("r_CH2 sup over bulk strata slope", "r_CH2_Linf@bulk_strata", 1.8),
        floor("r_CH2 L2 over inner strip slope", "r_CH2_L2@interface", 0.9),
        floor("r_CH1 weak norm slope", "r_CH1_weak@all", 0.9),
    ]
    rdiv = max(v for m in measurements for n, s, v in m.residual_rows if n == "r_div_Linf")
    checks.append(Check("r_div sup", rdiv, "<= 1e-12", rdiv <= 1e-12))
    bc = max(max(m.approx_boundary_error, m.diffuse_boundary_error) for m in measurements)
    checks.append(Check("boundary values", bc, "<= 1e-12", bc <= 1e-12))
    cstar = max(m.spectral["C_star"] for m in measurements)
    checks.append(Check("spectral constant C*", cstar, "<= 1", cstar <= 1.0))
    pq = max(m.spectral["pq_bound"] for m in measurements)
    checks.append(Check("profile decomposition bound", pq, "finite", bool(np.isfinite(pq))))
    dE = max(m.energy_max_increment for m in measurements)
    rejected = sum(m.energy_rejections for m in measurements)
    checks.append(Check("largest energy increment", dE, "<= 0", dE <= 0.0))
    checks.append(Check("energy guard rejections", rejected, "== 0", rejected == 0))
    for name in ("L2_R", "main1", "main2", "main3", "main4", "radius_error"):
        vals = [m.errors[name] for m in measurements]
        mono = all(a > b for a, b in zip(vals, vals[1:]))
        checks.append(Check(f"{name} decreasing in eps", float(mono), "true", mono))
    checks.append(Check("wall-clock seconds", elapsed, "<= 1800", elapsed <= 1800))
    return checks


def write_summary(path, cfg, measurements, orders, checks):
    lines = [f"config {cfg.digest()[:16]}", f"eps list {', '.join(f'{e:g}' for e in cfg.eps_list)}",
             f"note: {WEAK_NORM_NOTE}", ""]
    for c in checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.measured:.6g} (needs {c.threshold})")
    lines.append("")
    lines.append("per-eps diagnostics")
    for m in measurements:
        lines.append(
            f"  eps={m.eps:g} steps={m.accepted_steps} newton_rejections={m.newton_rejections} "
            f"radius_error={m.errors['radius_error']:.4e} C*={m.spectral['C_star']:.4f} "
            f"seconds={m.seconds:.1f}"
        )
    lines.append("")
    lines.append(f"overall: {'PASS' if all(c.passed for c in checks) else 'FAIL'}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


# -- gnuplot -------------------------------------------------------------------

_ORDERS_GP = """set terminal pngcairo size 900,650
set output 'convergence.png'
set logscale xy
set xlabel 'eps'
set ylabel 'norm'
set key left top
set datafile separator ','
plot \\
{plots}
"""

_RADIUS_GP = """set terminal pngcairo size 900,650
set output 'radius.png'
set xlabel 't'
set ylabel 'interface radius'
set datafile separator ','
plot '../sharp.csv' using 1:2 every ::1 with lines lw 2 title 'sharp limit', \\
{plots}
"""

_ENERGY_GP = """set terminal pngcairo size 900,650
set output 'energy.png'
set xlabel 't'
set ylabel 'energy'
set datafile separator ','
plot \\
{plots}
"""


def write_gnuplot(out_dir, eps_list):
    plot_dir = os.path.join(out_dir, "plots")
    os.makedirs(plot_dir, exist_ok=True)
    series = ["radius_error", "L2_R", "main3", "r_CH2_L2", "r_CH1_weak"]
    strata = {"radius_error": "domain", "L2_R": "domain", "main3": "domain",
              "r_CH2_L2": "interface", "r_CH1_weak": "all"}
    conv = ", \\\n".join(
        f"  \"< grep ',{s},{strata[s]},' ../norms.csv\" using 1:4 with linespoints title '{s}'" for s in series
    )
    hist = ", \\\n".join(
        f"  '../eps_{e:g}/history.csv' using 1:2 every ::1 with lines title 'eps={e:g}'" for e in eps_list
    )
    energy = ", \\\n".join(
        f"  '../eps_{e:g}/history.csv' using 1:3 every ::1 with lines title 'eps={e:g}'" for e in eps_list
    )
    paths = []
    for name, text in (("convergence.gp", _ORDERS_GP.format(plots=conv)),
                       ("radius.gp", _RADIUS_GP.format(plots=hist)),
                       ("energy.gp", _ENERGY_GP.format(plots=energy))):
        p = os.path.join(plot_dir, name)
        with open(p, "w") as fh:
            fh.write(text)
        paths.append(p)
    return paths
