"""Independent reference computations used by the tests.

Nothing here calls into the package's solvers: each oracle recomputes the
quantity from a closed form or with a deliberately different method.
"""

import math

import numpy as np


def tanh_profile(rho, beta=1.0):
    return np.tanh(rho * np.sqrt(beta / 2.0))


def tanh_profile_derivative(rho, beta=1.0):
    a = np.sqrt(beta / 2.0)
    return a / np.cosh(a * rho) ** 2


def surface_tension(beta=1.0):
    """Half the integral of the squared profile slope, in closed form."""
    return math.sqrt(2.0 * beta) / 3.0


def radius_rate(R, R_out, sigma):
    return sigma / (2.0 * R * R * math.log(R / R_out))


def rk4_radius(R0, R_out, sigma, T, dt=1e-6):
    """Fixed-step classical Runge-Kutta for the interface radius."""
    n = int(round(T / dt))
    h = T / n
    R = R0
    f = radius_rate
    for _ in range(n):
        k1 = f(R, R_out, sigma)
        k2 = f(R + 0.5 * h * k1, R_out, sigma)
        k3 = f(R + 0.5 * h * k2, R_out, sigma)
        k4 = f(R + h * k3, R_out, sigma)
        R += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return R


def annulus_harmonic_fd(R, R_out, value_at_R, n=2001):
    """Second-order FD solve of ``(r u')' = 0`` on ``[R, R_out]`` with Dirichlet data."""
    r = np.linspace(R, R_out, n)
    h = r[1] - r[0]
    m = n - 2
    plus = r[1:-1] + h / 2
    minus = r[1:-1] - h / 2
    A = np.zeros((m, m))
    rhs = np.zeros(m)
    for i in range(m):
        A[i, i] = -(plus[i] + minus[i])
        if i > 0:
            A[i, i - 1] = minus[i]
        else:
            rhs[i] -= minus[i] * value_at_R
        if i < m - 1:
            A[i, i + 1] = plus[i]
    u = np.linalg.solve(A, rhs)
    return r, np.concatenate([[value_at_R], u, [0.0]])


def dense_bordered_solve(theta0_values, theta0_derivative, spacing, rhs, d2f, center):
    """Dense second-order FD version of the bordered linearized solve.

    Uses a plain three-point Laplacian and ``numpy.linalg.solve``, so it
    agrees with the sparse sixth-order solver only to O(h^2).
    """
    n = theta0_values.size
    L = np.zeros((n + 1, n + 1))
    idx = np.arange(n)
    L[idx, idx] = -2.0 / spacing**2 - d2f(theta0_values)
    L[idx[1:], idx[:-1]] = 1.0 / spacing**2
    L[idx[:-1], idx[1:]] = 1.0 / spacing**2
    # flat far field
    L[0, 1] = 2.0 / spacing**2
    L[n - 1, n - 2] = 2.0 / spacing**2
    L[:n, n] = theta0_derivative
    L[n, center] = 1.0
    sol = np.linalg.solve(L, np.concatenate([rhs, [0.0]]))
    return sol[:n]


def manufactured_field(x):
    """Smooth test function and its Laplacian, for stencil-order checks."""
    u = np.sin(1.3 * x[..., 0]) * np.cos(0.7 * x[..., 1]) + x[..., 0] ** 3
    lap = -(1.3**2 + 0.7**2) * np.sin(1.3 * x[..., 0]) * np.cos(0.7 * x[..., 1]) + 6 * x[..., 0]
    return u, lap
