"""Radially symmetric Cahn-Hilliard solver on a disk.

Finite volumes in ``r`` with the symmetric closure at the origin, fully
implicit Euler in time and Newton's method on the coupled ``(c, mu)`` system
with banded linear algebra. The outer wall carries ``c = -1`` and ``mu = 0``.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    MultipleInterfaces,
    NoInterface,
    NonConvergence,
    ResolutionTooCoarse,
    StepFailed,
)
from .profiles import DoubleWell

__all__ = [
    "RadialGrid",
    "RadialState",
    "RadialRun",
    "init_from_approx",
    "step",
    "interface_radius",
    "run",
    "energy",
    "mass",
]

NEWTON_TOL = 1e-10
MAX_HALVINGS = 20


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes ``r_i = i h`` on ``[0, R_out]`` (``n_intervals + 1`` nodes)."""

    R_out: float
    n_intervals: int

    @classmethod
    def for_eps(cls, R_out, eps, per_eps=8):
        """Grid honouring ``h <= eps / per_eps``."""
        return cls(R_out, int(np.ceil(per_eps * R_out / eps - 1e-9)))

    @property
    def h(self):
        return self.R_out / self.n_intervals

    @property
    def nodes(self):
        return np.linspace(0.0, self.R_out, self.n_intervals + 1)

    @property
    def weights(self):
        """Control-volume measures ``int r dr`` of each node (wall node: half cell)."""
        h, r = self.h, self.nodes
        m = r * h
        m[0] = h * h / 8.0
        m[-1] = 0.5 * h * (r[-1] - 0.25 * h)
        return m

    @property
    def face_radii(self):
        return self.nodes[:-1] + 0.5 * self.h

    def laplacian_coefficients(self):
        """``(a_minus, a_plus)`` with ``(lap u)_i = a+ (u_{i+1}-u_i) - a- (u_i-u_{i-1})``."""
        h = self.h
        m = self.weights[:-1]
        rf = self.face_radii
        a_plus = rf / (h * m)
        a_minus = np.zeros_like(a_plus)
        a_minus[1:] = rf[:-1] / (h * m[1:])
        return a_minus, a_plus

    def laplacian(self, u):
        """Discrete radial Laplacian at the interior nodes (all but the wall)."""
        a_m, a_p = self.laplacian_coefficients()
        u = np.asarray(u, dtype=float)
        du = np.diff(u)
        out = a_p * du
        out[1:] -= a_m[1:] * du[:-1]
        return out

    def check_resolution(self, eps, per_eps=8):
        if self.h > eps / per_eps * (1 + 1e-12):
            raise ResolutionTooCoarse(
                f"grid spacing {self.h:.4g} exceeds eps/{per_eps} = {eps / per_eps:.4g}"
            )


@dataclass(frozen=True, eq=False)
class RadialState:
    t: float
    c: np.ndarray
    mu: np.ndarray
    energy: float
    mass: float


def energy(grid, c, eps, well):
    """``2 pi int (eps/2 |c_r|^2 + f(c)/eps) r dr`` in the discrete form."""
    grad = grid.face_radii * np.diff(c) ** 2 / grid.h
    bulk = grid.weights * well.f(c)
    return float(2 * np.pi * (0.5 * eps * grad.sum() + bulk.sum() / eps))


def mass(grid, c):
    return float(2 * np.pi * np.dot(grid.weights, c))


def chemical_potential(grid, c, eps, well):
    mu = np.zeros_like(c)
    mu[:-1] = -eps * grid.laplacian(c) + well.df(c[:-1]) / eps
    return mu


def _make_state(grid, t, c, mu, eps, well):
    return RadialState(float(t), c, mu, energy(grid, c, eps, well), mass(grid, c))


def init_from_approx(field, grid, well=None):
    """Sample ``c_A(., 0)`` on the nodes; the wall row is set exactly."""
    eps = field.eps
    grid.check_resolution(eps)
    well = well or field.well
    r = grid.nodes
    c = field.c(np.stack([r, np.zeros_like(r)], axis=-1), 0.0)
    c[-1] = -1.0
    mu = chemical_potential(grid, c, eps, well)
    return _make_state(grid, 0.0, c, mu, eps, well)


def _residual(grid, c, mu, c_old, dt, eps, well):
    f1 = (c[:-1] - c_old[:-1]) / dt - grid.laplacian(mu)
    f2 = mu[:-1] + eps * grid.laplacian(c) - well.df(c[:-1]) / eps
    return f1, f2


def step(state, dt, eps, well, grid, *, max_iter=12):
    """One implicit Euler step. Raises :class:`NonConvergence` on failure.

    Convergence is declared when both residual blocks, scaled to
    concentration units (``dt * F1`` and ``eps * F2``), are below
    ``NEWTON_TOL`` in max norm.
    """
    n = grid.n_intervals
    a_m, a_p = grid.laplacian_coefficients()
    c, mu = state.c.copy(), state.mu.copy()
    history = []
    for it in range(1, max_iter + 1):
        f1, f2 = _residual(grid, c, mu, state.c, dt, eps, well)
        scaled = max(np.max(np.abs(f1)) * dt, np.max(np.abs(f2)) * eps)
        history.append(scaled)
        if not np.isfinite(scaled):
            break
        if scaled <= NEWTON_TOL:
            return _make_state(grid, state.t + dt, c, mu, eps, well), it - 1, history
        # interleaved unknowns (c_0, mu_0, c_1, mu_1, ...), bands (3, 3)
        ab = np.zeros((7, 2 * n))
        ic = 2 * np.arange(n)
        im = ic + 1
        # rows of F1 (index 2i)
        ab[3, ic] = 1.0 / dt
        ab[3 - 1, im] = a_m + a_p
        ab[3 - 3, im[1:]] = -a_p[:-1]  # mu_{i+1}
        ab[3 + 1, ic[1:] - 1] = -a_m[1:]  # mu_{i-1}, column 2i-1
        # rows of F2 (index 2i+1)
        ab[3, im] = 1.0
        ab[3 + 1, ic] = -eps * (a_m + a_p) - well.d2f(c[:-1]) / eps
        ab[3 - 1, ic[1:]] = eps * a_p[:-1]  # c_{i+1}, column 2i+2
        ab[3 + 3, ic[:-1]] = eps * a_m[1:]  # c_{i-1}, column 2i-2
        rhs = np.empty(2 * n)
        rhs[ic], rhs[im] = f1, f2
        try:
            delta = solve_banded((3, 3), ab, rhs)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NonConvergence(str(exc)) from exc
        c[:-1] -= delta[ic]
        mu[:-1] -= delta[im]
    raise NonConvergence(f"Newton residual history {history}")


def interface_radius(state_or_c, grid):
    """Zero of ``c`` by linear interpolation of its single sign change."""
    c = getattr(state_or_c, "c", state_or_c)
    pos = c > 0
    flips = np.nonzero(pos[:-1] != pos[1:])[0]
    if flips.size == 0:
        raise NoInterface("concentration does not change sign")
    if flips.size > 1:
        raise MultipleInterfaces(f"{flips.size} sign changes at r = {grid.nodes[flips]}")
    i = flips[0]
    r = grid.nodes
    return float(r[i] + (r[i + 1] - r[i]) * c[i] / (c[i] - c[i + 1]))


@dataclass(eq=False)
class RadialRun:
    """Accepted-step history of a diffuse run."""

    grid: RadialGrid
    eps: float
    t: list = field(default_factory=list)
    R_eps: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    newton_iterations: list = field(default_factory=list)
    wall_flux: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    newton_rejections: int = 0
    energy_rejections: int = 0
    boundary_error: float = 0.0
    final: RadialState | None = None

    def record(self, state, dt=0.0, iterations=0, flux=np.nan):
        self.t.append(state.t)
        self.R_eps.append(interface_radius(state, self.grid))
        self.energy.append(state.energy)
        self.mass.append(state.mass)
        self.dt.append(dt)
        self.newton_iterations.append(iterations)
        self.wall_flux.append(flux)
        self.boundary_error = max(self.boundary_error, abs(state.c[-1] + 1.0), abs(state.mu[-1]))
        self.final = state

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in ("t", "R_eps", "energy", "mass", "dt", "wall_flux")}

    @property
    def energy_increments(self):
        return np.diff(np.asarray(self.energy))

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        paths = [os.path.join(out_dir, "history.csv")]
        with open(paths[0], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "R_eps", "energy", "mass"])
            for row in zip(self.t, self.R_eps, self.energy, self.mass):
                w.writerow([repr(float(v)) for v in row])
        for k, snap in enumerate(self.snapshots):
            path = os.path.join(out_dir, f"snapshot_{k:03d}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["r", "c", "mu"])
                for row in zip(self.grid.nodes, snap.c, snap.mu):
                    w.writerow([repr(float(v)) for v in row])
            paths.append(path)
        return paths


def _wall_flux(grid, mu):
    """Discrete ``2 pi R_out d mu/dr`` at the wall."""
    return float(2 * np.pi * grid.face_radii[-1] * (mu[-1] - mu[-2]) / grid.h)


def run(field, grid, eps, T, dt0=None, *, well=None, snapshot_times=(), dt_max=None, energy_guard=True):
    """Integrate from the sampled approximation to time ``T``.

    The step starts at ``dt0`` (default ``10 eps^3``), is halved when Newton
    fails or, with ``energy_guard``, when the discrete energy would rise,
    and grows back by 25% per easy step up to ``dt_max`` (default ``dt0``).
    """
    well = well or getattr(field, "well", None) or DoubleWell()
    dt0 = 10.0 * eps**3 if dt0 is None else dt0
    dt_max = dt0 if dt_max is None else dt_max
    state = init_from_approx(field, grid, well)
    result = RadialRun(grid, eps)
    result.record(state)
    targets = sorted(set(float(s) for s in snapshot_times if 0 <= s <= T))
    if targets and targets[0] == 0.0:
        result.snapshots.append(state)
        targets.pop(0)
    dt = dt0
    tol_t = 1e-12 * max(T, 1.0)
    while state.t < T - tol_t:
        goal = min([T] + [s for s in targets if s > state.t + tol_t])
        trial = min(dt, goal - state.t)
        for _ in range(MAX_HALVINGS + 1):
            try:
                new, iters, _ = step(state, trial, eps, well, grid)
            except NonConvergence:
                result.newton_rejections += 1
                trial *= 0.5
                continue
            if energy_guard and new.energy > state.energy + 1e-13 * max(1.0, abs(state.energy)):
                result.energy_rejections += 1
                trial *= 0.5
                continue
            break
        else:
            raise StepFailed(f"no acceptable step at t={state.t:.6g} after {MAX_HALVINGS} halvings")
        result.record(new, trial, iters, _wall_flux(grid, new.mu))
        if targets and abs(new.t - targets[0]) <= tol_t:
            result.snapshots.append(new)
            targets.pop(0)
        dt = trial if trial < dt and trial < goal - state.t else dt
        if iters <= 4:
            dt = min(dt * 1.25, dt_max)
        state = new
    return result
