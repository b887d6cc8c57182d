"""Radially symmetric sharp-interface limit.

A circle of radius ``R(t)`` centred in the disk ``|x| < R_out``. The chemical
potential is harmonic on each side, equals ``sigma/R`` on the circle and
vanishes on the outer wall; the interface moves with half the jump of the
normal flux. Velocity vanishes identically and the pressure is piecewise
constant with jump ``2 sigma / R``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateRadius, InterfaceCollapse, InvalidInput

__all__ = [
    "radial_mu",
    "radial_mu_gradient",
    "interface_ode_rhs",
    "evolve_sharp",
    "radial_stokes_pressure",
    "RadialSharpState",
]

_EDGE = 1e-12


def _check_radius(R, R_out):
    if not (R > _EDGE and R < R_out - _EDGE):
        raise DegenerateRadius(f"interface radius {R} not inside (0, {R_out})")


def radial_mu(R, R_out, sigma, r):
    """Chemical potential: ``sigma/R`` inside, logarithmic decay to 0 outside."""
    _check_radius(R, R_out)
    r = np.asarray(r, dtype=float)
    inner = sigma / R
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = inner * np.log(r / R_out) / np.log(R / R_out)
    return np.where(r <= R, inner, outer)


def radial_mu_gradient(R, R_out, sigma, r):
    """``d mu / d r`` (zero inside)."""
    _check_radius(R, R_out)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        outer = sigma / (R * np.log(R / R_out) * r)
    return np.where(r <= R, 0.0, outer)


def interface_ode_rhs(R, R_out, sigma):
    """``dR/dt = sigma / (2 R^2 ln(R/R_out))``, negative for admissible R."""
    _check_radius(R, R_out)
    return sigma / (2.0 * R * R * np.log(R / R_out))


def radial_stokes_pressure(R, sigma):
    """Pressure jump (inside minus outside) for the resting radial state."""
    return 2.0 * sigma / R


@dataclass(frozen=True, eq=False)
class RadialSharpState:
    """Dense-output trajectory of the interface radius."""

    R0: float
    R_out: float
    sigma: float
    T: float
    _sol: object = None

    def R(self, t):
        t = np.asarray(t, dtype=float)
        if self._sol is None:
            return np.full_like(t, self.R0) if t.ndim else float(self.R0)
        out = self._sol.sol(t)[0] if t.ndim else float(self._sol.sol(float(t))[0])
        return out

    def dRdt(self, t):
        R = np.asarray(self.R(t), dtype=float)
        return self.sigma / (2.0 * R * R * np.log(R / self.R_out))

    def mu(self, r, t):
        return radial_mu(float(self.R(t)), self.R_out, self.sigma, r)

    def mu_plus(self, t):
        return self.sigma / float(self.R(t))

    def mu_minus(self, r, t):
        """Outer chemical potential continued analytically to all ``r > 0``."""
        R = float(self.R(t))
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.sigma / R) * np.log(r / self.R_out) / np.log(R / self.R_out)

    def p_jump(self, t):
        return radial_stokes_pressure(float(self.R(t)), self.sigma)

    def to_csv(self, path, n_samples=201):
        ts = np.linspace(0.0, self.T, n_samples)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "R", "dRdt", "mu_interface"])
            for t in ts:
                R = float(self.R(t))
                w.writerow([repr(float(t)), repr(R), repr(float(self.dRdt(t))), repr(self.sigma / R)])


def evolve_sharp(R0, R_out, sigma, T, rtol=1e-10, atol=1e-13, floor_fraction=0.05):
    """Integrate the radius ODE with adaptive RK45 and dense output.

    Raises
    ------
    InterfaceCollapse
        If the radius reaches ``floor_fraction * R_out`` before ``T``.
    """
    _check_radius(R0, R_out)
    if T < 0:
        raise InvalidInput("T must be non-negative")
    if sigma == 0.0 or T == 0.0:
        return RadialSharpState(R0, R_out, sigma, T, None)
    floor = floor_fraction * R_out

    def hit_floor(t, y):
        return y[0] - floor

    hit_floor.terminal = True
    hit_floor.direction = -1
    sol = solve_ivp(
        lambda t, y: [interface_ode_rhs(y[0], R_out, sigma)],
        (0.0, T),
        [R0],
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=hit_floor,
    )
    if sol.status == 1 or sol.t[-1] < T:
        raise InterfaceCollapse(f"radius reached the floor {floor:.3g} at t={sol.t[-1]:.4g} < T={T}")
    if not sol.success:  # pragma: no cover
        raise InterfaceCollapse(sol.message)
    return RadialSharpState(R0, R_out, sigma, T, sol)
