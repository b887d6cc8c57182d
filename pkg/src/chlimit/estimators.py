"""Estimator-style wrappers with ``fit`` / ``transform`` / ``predict``.

The models here are not learned from data: ``fit`` builds the solution from
the hyperparameters and ``X`` only carries query points. The wrappers exist
so the solvers plug into parameter grids and pipelines via ``get_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .diffuse import RadialGrid, run
from .errors import InvalidInput
from .expansion import build_radial_approximation
from .profiles import DoubleWell, build_profile_set
from .sharp_limit import evolve_sharp

__all__ = ["SharpInterfaceLimit", "MatchedAsymptoticApproximation", "RadialCahnHilliard"]

FIELD_COLUMNS = ("cA", "muA", "vA1", "vA2", "pA")


def _positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise InvalidInput(f"{name} must be a positive finite number, got {value!r}")


def _times(X, T):
    t = check_array(np.asarray(X, dtype=float).reshape(-1, 1), ensure_all_finite=True).ravel()
    if np.any(t < 0) or np.any(t > T * (1 + 1e-12)):
        raise InvalidInput(f"times must lie in [0, {T}]")
    return t


class SharpInterfaceLimit(BaseEstimator):
    """Radius of the shrinking circle in the sharp-interface limit.

    ``predict(t)`` returns ``R(t)``; ``X`` may be a 1-D array of times or a
    single-column 2-D array.
    """

    def __init__(self, R0=1.0, R_out=2.0, beta=1.0, T=0.1, rtol=1e-10):
        self.R0 = R0
        self.R_out = R_out
        self.beta = beta
        self.T = T
        self.rtol = rtol

    def fit(self, X=None, y=None):
        for name in ("R0", "R_out", "beta", "T", "rtol"):
            _positive(name, getattr(self, name))
        if self.R0 >= self.R_out:
            raise InvalidInput("R0 must be smaller than R_out")
        self.profiles_ = build_profile_set(DoubleWell(self.beta))
        self.sigma_ = self.profiles_.moments.sigma
        self.state_ = evolve_sharp(self.R0, self.R_out, self.sigma_, self.T, rtol=self.rtol)
        return self

    def predict(self, X):
        check_is_fitted(self, "state_")
        return np.asarray(self.state_.R(_times(X, self.T)), dtype=float)


class MatchedAsymptoticApproximation(TransformerMixin, BaseEstimator):
    """Glued approximate fields of the radial scenario.

    ``transform`` maps rows ``(x1, x2, t)`` to ``(cA, muA, vA1, vA2, pA)``;
    ``predict`` returns the concentration column only.
    """

    def __init__(self, eps=0.05, beta=1.0, R0=1.0, R_out=2.0, T=0.05, delta=None):
        self.eps = eps
        self.beta = beta
        self.R0 = R0
        self.R_out = R_out
        self.T = T
        self.delta = delta

    def fit(self, X=None, y=None):
        for name in ("eps", "beta", "R0", "R_out", "T"):
            _positive(name, getattr(self, name))
        if self.delta is not None:
            _positive("delta", self.delta)
        well = DoubleWell(self.beta)
        self.field_ = build_radial_approximation(
            self.eps, beta=self.beta, R0=self.R0, R_out=self.R_out, T=self.T, delta=self.delta, well=well
        )
        self.n_features_in_ = 3
        return self

    def _check_points(self, X):
        check_is_fitted(self, "field_")
        X = check_array(X, ensure_all_finite=True)
        if X.shape[1] != 3:
            raise InvalidInput(f"expected rows (x1, x2, t), got {X.shape[1]} columns")
        if np.any(np.hypot(X[:, 0], X[:, 1]) > self.R_out * (1 + 1e-12)):
            raise InvalidInput("points must lie in the closed disk")
        _times(X[:, 2], self.T)
        return X

    def transform(self, X):
        X = self._check_points(X)
        out = np.empty((X.shape[0], len(FIELD_COLUMNS)))
        for t in np.unique(X[:, 2]):
            rows = X[:, 2] == t
            vals = self.field_.evaluate(X[rows, :2], float(t))
            out[rows, 0] = vals["cA"]
            out[rows, 1] = vals["muA"]
            out[rows, 2:4] = vals["vA"]
            out[rows, 4] = vals["pA"]
        return out

    def predict(self, X):
        return self.transform(X)[:, 0]

    def get_feature_names_out(self, input_features=None):
        return np.asarray(FIELD_COLUMNS, dtype=object)


class RadialCahnHilliard(BaseEstimator):
    """Diffuse-interface evolution started from the glued approximation.

    ``predict(t)`` interpolates the zero-level radius of the run linearly
    between accepted steps.
    """

    def __init__(self, eps=0.05, beta=1.0, R0=1.0, R_out=2.0, T=0.05, per_eps=8, dt0=None):
        self.eps = eps
        self.beta = beta
        self.R0 = R0
        self.R_out = R_out
        self.T = T
        self.per_eps = per_eps
        self.dt0 = dt0

    def fit(self, X=None, y=None):
        approx = MatchedAsymptoticApproximation(self.eps, self.beta, self.R0, self.R_out, self.T).fit()
        grid = RadialGrid.for_eps(self.R_out, self.eps, self.per_eps)
        self.run_ = run(approx.field_, grid, self.eps, self.T, self.dt0, well=DoubleWell(self.beta))
        self.approximation_ = approx
        return self

    def predict(self, X):
        check_is_fitted(self, "run_")
        hist = self.run_.arrays()
        return np.interp(_times(X, self.T), hist["t"], hist["R_eps"])
