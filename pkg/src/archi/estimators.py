"""scikit-learn style wrappers around the solver and spectrum routines.

These let the numerics sit inside ``Pipeline`` objects or be tuned via
``get_params``/``set_params``; they add no numerics of their own.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import spectrum
from .hill import SolverConfig, basis_arrays
from .potentials import Potential
from .tiling import Tiling


def _lambda_column(X) -> np.ndarray:
    X = check_array(np.asarray(X, dtype=float).reshape(-1, 1) if np.ndim(X) <= 1 else X,
                    ensure_2d=True, dtype=float)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single column of spectral parameters, got {X.shape[1]}")
    return X[:, 0]


def _check_potential(q) -> Potential:
    if not isinstance(q, Potential):
        raise TypeError(f"expected a Potential, got {type(q).__name__}")
    return q


class HillBasis(TransformerMixin, BaseEstimator):
    """Maps spectral parameters to ``(C, S, C', S')`` at the edge end."""

    def __init__(self, potential=None, method="auto", step_count=4096):
        self.potential = potential
        self.method = method
        self.step_count = step_count

    def fit(self, X=None, y=None):
        self.potential_ = _check_potential(self.potential)
        self.config_ = SolverConfig(self.method, self.step_count)
        self.config_.resolve(self.potential_)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        lam = _lambda_column(X)
        return np.column_stack([np.asarray(v, dtype=float)
                                for v in basis_arrays(self.potential_, lam, self.config_)])


class BandSpectrum(BaseEstimator):
    """Fits the band structure of one potential; ``predict`` labels 1 in a band, 0 in a gap.

    ``fit`` takes the potential itself as ``X``.
    """

    def __init__(self, tiling="triangular", lambda_max=60.0, lambda_grid=spectrum.LAMBDA_GRID,
                 method="auto", step_count=4096):
        self.tiling = tiling
        self.lambda_max = lambda_max
        self.lambda_grid = lambda_grid
        self.method = method
        self.step_count = step_count

    def fit(self, X, y=None):
        q = _check_potential(X)
        cfg = SolverConfig(self.method, self.step_count)
        tiling = Tiling.from_name(self.tiling)
        self.tiling_ = tiling
        self.bands_ = spectrum.ac_bands(tiling, q, self.lambda_max, cfg, self.lambda_grid)
        self.point_spectrum_ = spectrum.point_spectrum(tiling, q, self.lambda_max, cfg,
                                                       self.lambda_grid)
        return self

    def predict(self, X):
        check_is_fitted(self, "bands_")
        lam = _lambda_column(X)
        out = np.zeros(lam.shape, dtype=int)
        for b in self.bands_:
            out[(lam >= b.lo) & (lam <= b.hi)] = 1
        return out


class DispersionSurface(TransformerMixin, BaseEstimator):
    """Maps quasimomenta ``(theta1, theta2)`` to sorted band functions, NaN padded."""

    def __init__(self, tiling="triangular", potential=None, lambda_max=60.0,
                 lambda_grid=spectrum.LAMBDA_GRID, branches=None):
        self.tiling = tiling
        self.potential = potential
        self.lambda_max = lambda_max
        self.lambda_grid = lambda_grid
        self.branches = branches

    def fit(self, X=None, y=None):
        self.potential_ = _check_potential(self.potential)
        self.tiling_ = Tiling.from_name(self.tiling)
        return self

    def transform(self, X):
        check_is_fitted(self, "potential_")
        thetas = check_array(X, dtype=float)
        if thetas.shape[1] != 2:
            raise ValueError("quasimomenta must have two columns")
        rows = [spectrum.band_functions(self.tiling_, self.potential_, th, self.lambda_max,
                                        lambda_grid=self.lambda_grid) for th in thetas]
        width = self.branches or max((r.size for r in rows), default=0)
        out = np.full((len(rows), width), np.nan)
        for i, r in enumerate(rows):
            out[i, :min(width, r.size)] = r[:width]
        return out
