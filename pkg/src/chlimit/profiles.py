"""One-dimensional profile problems on a truncated line.

The heteroclinic profile of the double well, the transition function used to
interpolate the two bulk chemical potentials, and the bordered solver for the
linearized profile operator all live here. Every discrete operator uses the
same fourth-order central stencil so that residual checks and solves agree.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import make_interp_spline
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from ._smooth import smoothstep
from .errors import (
    GridMismatch,
    GridTooNarrow,
    InvalidInput,
    NonConvergence,
    Singular,
    SolvabilityViolated,
)

__all__ = [
    "DoubleWell",
    "RhoGrid",
    "ProfileSolution",
    "MomentTable",
    "LinearizedOperator",
    "ProfileSet",
    "solve_theta0",
    "build_eta",
    "eta_function",
    "compute_moments",
    "apply_operator",
    "solve_linearized_profile",
    "build_profile_set",
    "second_difference",
]

SOLVABILITY_TOL = 1e-8
FARFIELD_TOL = 1e-8


@dataclass(frozen=True)
class DoubleWell:
    """Quartic double well ``f(s) = beta/4 (s^2 - 1)^2``."""

    beta: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise InvalidInput(f"beta must be positive, got {self.beta}")

    def f(self, s):
        s = np.asarray(s, dtype=float)
        return 0.25 * self.beta * (s * s - 1.0) ** 2

    def df(self, s):
        s = np.asarray(s, dtype=float)
        return self.beta * s * (s * s - 1.0)

    def d2f(self, s):
        s = np.asarray(s, dtype=float)
        return self.beta * (3.0 * s * s - 1.0)

    def d3f(self, s):
        return 6.0 * self.beta * np.asarray(s, dtype=float)

    def d4f(self, s=0.0):
        return 6.0 * self.beta + 0.0 * np.asarray(s, dtype=float)

    @property
    def curvature_at_wells(self):
        """``f''(+-1)``, identical at both minima."""
        return 2.0 * self.beta


@dataclass(frozen=True)
class RhoGrid:
    """Uniform odd-sized grid on ``[-half_width, half_width]``."""

    half_width: float = 20.0
    n: int = 4001

    def __post_init__(self):
        if not self.half_width > 0:
            raise InvalidInput("half_width must be positive")
        if self.n < 5 or self.n % 2 == 0:
            raise InvalidInput(f"node count must be odd and >= 5, got {self.n}")

    @cached_property
    def nodes(self):
        nodes = np.linspace(-self.half_width, self.half_width, self.n)
        nodes[self.center] = 0.0
        return nodes

    @property
    def spacing(self):
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def center(self):
        return self.n // 2

    @cached_property
    def weights(self):
        """Trapezoid weights."""
        w = np.full(self.n, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def coarse_integrate(self, values):
        """Trapezoid rule on every other node, used for error estimates."""
        coarse = np.asarray(values)[::2]
        h = 2.0 * self.spacing
        return float(h * (coarse.sum() - 0.5 * (coarse[0] + coarse[-1])))


_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_HALF = 3  # stencil half width
_BANDS = (_HALF, _HALF)


def second_difference(values, spacing, left=None, right=None):
    """Sixth-order central second difference with constant ghost values.

    ``left``/``right`` give the value assumed beyond each end; by default the
    end value itself is repeated, which is a flat far-field closure.
    """
    u = np.asarray(values, dtype=float)
    lo = u[0] if left is None else left
    hi = u[-1] if right is None else right
    ext = np.concatenate((np.full(_HALF, lo), u, np.full(_HALF, hi)))
    n = u.size
    out = np.zeros(n)
    for k, coef in enumerate(_D2):
        out += coef * ext[k : k + n]
    return out / spacing**2


def first_difference(values, spacing):
    """Sixth-order central first difference; lower order in the last three nodes."""
    u = np.asarray(values, dtype=float)
    n = u.size
    d = np.empty_like(u)
    d[3:-3] = sum(c * u[k : n - 6 + k] for k, c in enumerate(_D1)) / spacing
    for i in (1, 2, n - 3, n - 2):
        d[i] = (u[i + 1] - u[i - 1]) / (2.0 * spacing)
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * spacing)
    d[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * spacing)
    return d


def _stencil_bands(n, spacing):
    """Banded storage of the second-difference matrix with flat ghosts.

    Entry ``(i, j)`` lives at ``ab[_HALF + i - j, j]``; a ghost beyond an end
    refers back to the end node.
    """
    ab = np.zeros((2 * _HALF + 1, n))
    rows = np.arange(n)
    for k, coef in enumerate(_D2):
        cols = np.clip(rows + k - _HALF, 0, n - 1)
        np.add.at(ab, (_HALF + rows - cols, cols), coef / spacing**2)
    return ab


def _fit_decay(rho, deviation, half_width):
    """Exponential decay rate of ``deviation`` over the outer part of the grid."""
    mask = (np.abs(rho) >= 0.25 * half_width) & (deviation > 1e-9) & (deviation < 1e-1)
    if mask.sum() < 4:
        return float("inf")
    slope = np.polyfit(np.abs(rho[mask]), np.log(deviation[mask]), 1)[0]
    return float(-slope)


@dataclass(frozen=True, eq=False)
class ProfileSolution:
    """Nodal values of a profile together with derived metadata."""

    grid: RhoGrid
    values: np.ndarray
    derivative: np.ndarray
    far_field: tuple
    decay_rate: float
    residual_norm: float
    name: str = "profile"

    @cached_property
    def _splines(self):
        base = make_interp_spline(self.grid.nodes, self.values, k=5)
        return [base, base.derivative(1), base.derivative(2)]

    def __call__(self, rho, nu=0):
        """Quintic-spline evaluation; constant continuation beyond the grid."""
        rho = np.asarray(rho, dtype=float)
        L = self.grid.half_width
        inside = np.abs(rho) <= L
        out = self._splines[nu](np.clip(rho, -L, L))
        if nu > 0:
            out = np.where(inside, out, 0.0)
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rho", "value", "derivative"])
            for row in zip(self.grid.nodes, self.values, self.derivative):
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class MomentTable:
    sigma: float
    int_theta0p: float
    int_eta_theta0p: float
    K_eta: float
    eta_tilde: float
    eta_orthogonality: float
    quadrature_error: float


def solve_theta0(well=None, grid=None, *, tol=1e-10, max_iter=50):
    """Heteroclinic profile from -1 to +1 with value 0 at the origin.

    Newton's method on the fourth-order discretization, started from the
    closed-form profile of the quartic well. The end nodes carry the far-field
    values and the center node is pinned to zero.

    Raises
    ------
    NonConvergence
        Newton did not reach ``tol`` within ``max_iter`` iterations.
    GridTooNarrow
        The profile has not reached its far field near the ends.
    """
    well = well or DoubleWell()
    grid = grid or RhoGrid()
    rho, h, n, mid = grid.nodes, grid.spacing, grid.n, grid.center
    u = np.tanh(rho * np.sqrt(0.5 * well.beta))
    u[0], u[-1], u[mid] = -1.0, 1.0, 0.0
    base = -_stencil_bands(n, h)
    pinned = np.array([0, mid, n - 1])
    half = _HALF

    def residual(v):
        r = -second_difference(v, h, -1.0, 1.0) + well.df(v)
        r[pinned] = 0.0
        return r

    res = residual(u)
    for _ in range(max_iter):
        if np.max(np.abs(res)) <= tol:
            break
        ab = base.copy()
        ab[half] += well.d2f(u)
        for i in pinned:
            # identity row; entry (i, i+k) sits at ab[half-k, i+k]
            for k in range(-half, half + 1):
                if 0 <= i + k < n:
                    ab[half - k, i + k] = 0.0
            ab[half, i] = 1.0
        u = u - solve_banded(_BANDS, ab, res)
        u[pinned] = (-1.0, 0.0, 1.0)
        res = residual(u)
    else:
        if np.max(np.abs(res)) > tol:
            raise NonConvergence(
                f"profile Newton stalled at residual {np.max(np.abs(res)):.3e}"
            )
    res_norm = float(np.max(np.abs(res)))
    if max(abs(u[1] + 1.0), abs(u[-2] - 1.0)) > FARFIELD_TOL:
        raise GridTooNarrow(
            f"profile differs from its far field by {max(abs(u[1] + 1), abs(u[-2] - 1)):.2e} "
            f"near rho = +-{grid.half_width}; increase the half width"
        )
    deriv = first_difference(u, h)
    alpha = _fit_decay(rho, np.abs(1.0 - u * u), grid.half_width)
    return ProfileSolution(grid, u, deriv, (-1.0, 1.0), alpha, res_norm, "theta0")


def eta_function(rho, nu=0):
    """Monotone transition from 0 (rho <= -1) to 1 (rho >= 1), odd about 1/2."""
    u = 0.5 * (np.asarray(rho, dtype=float) + 1.0)
    return smoothstep(u, nu) * 0.5**nu


def build_eta(grid=None):
    grid = grid or RhoGrid()
    rho = grid.nodes
    values = eta_function(rho)
    return ProfileSolution(
        grid, values, eta_function(rho, 1), (0.0, 1.0), float("inf"), 0.0, "eta"
    )


def compute_moments(theta0, eta):
    """Integrals of the profile that enter the first-order construction."""
    if theta0.grid != eta.grid:
        raise GridMismatch("theta0 and eta live on different grids")
    grid = theta0.grid
    tp = theta0.derivative
    integrands = {
        "sq": tp * tp,
        "tp": tp,
        "eta_tp": eta.values * tp,
        "etap_tp": eta.derivative * tp,
        "orth": (eta.values - 0.5) * tp,
    }
    fine = {k: grid.integrate(v) for k, v in integrands.items()}
    err = max(abs(fine[k] - grid.coarse_integrate(v)) for k, v in integrands.items())
    return MomentTable(
        sigma=0.5 * fine["sq"],
        int_theta0p=fine["tp"],
        int_eta_theta0p=fine["eta_tp"],
        K_eta=fine["etap_tp"],
        eta_tilde=0.5 * fine["etap_tp"],
        eta_orthogonality=fine["orth"],
        quadrature_error=err,
    )


class LinearizedOperator:
    """``w -> w'' - f''(theta0) w`` with a factorized bordered solver.

    The operator has the translation mode ``theta0'`` in its kernel on the
    whole line. The bordered system appends ``theta0'`` as an extra column
    (a Lagrange multiplier absorbing any component of the right-hand side
    along the kernel) and the row ``w(0) = 0`` as the normalization.
    """

    def __init__(self, theta0, well=None):
        self.theta0 = theta0
        self.well = well or DoubleWell()
        grid = theta0.grid
        self.grid = grid
        n = grid.n
        ab = _stencil_bands(n, grid.spacing)
        ab[_HALF] -= self.well.d2f(theta0.values)
        offsets = list(range(_HALF, -_HALF - 1, -1))
        diags = [row[k:] if k >= 0 else row[: n + k] for row, k in zip(ab, offsets)]
        core = sp.diags(diags, offsets, shape=(n, n), format="csc")
        kernel = sp.csc_matrix(theta0.derivative.reshape(-1, 1))
        pin = sp.csc_matrix(([1.0], ([0], [grid.center])), shape=(1, n))
        bordered = sp.bmat([[core, kernel], [pin, None]], format="csc")
        try:
            self._lu = splu(bordered)
        except RuntimeError as exc:  # pragma: no cover - scipy reports singularity this way
            raise Singular(str(exc)) from exc
        if not np.all(np.isfinite(self._lu.U.diagonal())) or np.min(
            np.abs(self._lu.U.diagonal())
        ) == 0.0:
            raise Singular("bordered profile system is singular")

    def apply(self, w):
        w = np.asarray(w, dtype=float)
        return second_difference(w, self.grid.spacing) - self.well.d2f(self.theta0.values) * w

    def solvability(self, rhs):
        """Projections of one or many right-hand sides on the kernel."""
        return np.asarray(rhs).T @ (self.grid.weights * self.theta0.derivative)

    def solve(self, rhs, *, check=True, tol=SOLVABILITY_TOL):
        """Bounded solution(s) vanishing at the origin.

        ``rhs`` may be a vector or an ``(n, m)`` array of columns.
        """
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.grid.n:
            raise GridMismatch("right-hand side does not match the profile grid")
        proj = np.atleast_1d(self.solvability(rhs))
        if check and np.max(np.abs(proj)) > tol:
            worst = int(np.argmax(np.abs(proj)))
            raise SolvabilityViolated(
                f"right-hand side not orthogonal to the kernel: {proj[worst]:.3e}",
                residual=float(proj[worst]),
                where=worst,
            )
        extra = np.zeros((1,) + rhs.shape[1:])
        sol = self._lu.solve(np.concatenate([rhs, extra]))
        return sol[:-1]


def apply_operator(theta0, w, well=None):
    return LinearizedOperator(theta0, well).apply(w)


def solve_linearized_profile(theta0, rhs, well=None, *, operator=None, name="linearized"):
    """Solve ``w'' - f''(theta0) w = rhs`` with ``w(0) = 0``.

    Raises :class:`SolvabilityViolated` when ``rhs`` has a component along
    ``theta0'`` larger than the tolerance.
    """
    op = operator or LinearizedOperator(theta0, well)
    rhs = np.asarray(rhs, dtype=float)
    w = op.solve(rhs)
    grid = op.grid
    far = (float(w[0]), float(w[-1]))
    dev = np.where(grid.nodes < 0, np.abs(w - far[0]), np.abs(w - far[1]))
    return ProfileSolution(
        grid,
        w,
        first_difference(w, grid.spacing),
        far,
        _fit_decay(grid.nodes, dev, grid.half_width),
        float(np.max(np.abs(op.apply(w) - rhs))),
        name,
    )


@dataclass(eq=False)
class ProfileSet:
    """Everything in the stretched variable needed by the inner expansion.

    ``basis`` holds three solutions ``Phi_k`` of the linearized problem whose
    right-hand sides are

    * ``1 - (I1/K) eta'``
    * ``eta - (Ieta/K) eta'``
    * ``theta0' - (2 sigma/K) eta'``

    each orthogonal to the kernel by construction. The first-order inner
    correction is a pointwise linear combination of them.
    """

    well: DoubleWell
    grid: RhoGrid
    theta0: ProfileSolution
    eta: ProfileSolution
    theta1: ProfileSolution
    moments: MomentTable
    operator: LinearizedOperator
    basis: list = field(default_factory=list)

    def basis_rhs(self):
        m = self.moments
        one = np.ones(self.grid.n)
        etap = self.eta.derivative
        return np.column_stack(
            [
                one - (m.int_theta0p / m.K_eta) * etap,
                self.eta.values - (m.int_eta_theta0p / m.K_eta) * etap,
                self.theta0.derivative - (2.0 * m.sigma / m.K_eta) * etap,
            ]
        )

    def first_order_rhs(self, mu_minus, jump, lap_d):
        """Right-hand side ``A^0`` at chart samples, as an ``(n, m)`` array.

        ``mu_minus``, ``jump = mu_plus - mu_minus`` and ``lap_d`` are arrays of
        the sample values.
        """
        m = self.moments
        mu_minus, jump, lap_d = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (mu_minus, jump, lap_d))
        numerator = mu_minus * m.int_theta0p + jump * m.int_eta_theta0p + 2.0 * m.sigma * lap_d
        one = np.ones((self.grid.n, 1))
        return (
            -(one * mu_minus)
            - np.outer(self.eta.values, jump)
            - np.outer(self.theta0.derivative, lap_d)
            + np.outer(self.eta.derivative, numerator / m.K_eta)
        )

    def first_order_weights(self, mu_minus, jump, lap_d):
        """Coefficients of ``basis`` reproducing the first-order correction."""
        return -np.asarray(mu_minus), -np.asarray(jump), -np.asarray(lap_d)


def build_profile_set(well=None, grid=None):
    well = well or DoubleWell()
    grid = grid or RhoGrid()
    theta0 = solve_theta0(well, grid)
    eta = build_eta(grid)
    moments = compute_moments(theta0, eta)
    op = LinearizedOperator(theta0, well)
    theta1 = solve_linearized_profile(
        theta0, moments.sigma - theta0.derivative, well, operator=op, name="theta1"
    )
    pset = ProfileSet(well, grid, theta0, eta, theta1, moments, op)
    rhs = pset.basis_rhs()
    sols = op.solve(rhs)
    for k in range(rhs.shape[1]):
        w = sols[:, k]
        pset.basis.append(
            ProfileSolution(
                grid, w, first_difference(w, grid.spacing), (float(w[0]), float(w[-1])),
                float("nan"), float(np.max(np.abs(op.apply(w) - rhs[:, k]))), f"basis{k}",
            )
        )
    return pset
