"""scikit-learn style wrappers.

Both estimators take the reference signal as ``X`` (shape ``(n,)`` or
``(n, 1)``) and the disturbance at the error sensor as ``y``.  ``predict``
returns the anti-noise the fitted (frozen) control filter would produce at
the error sensor, so ``score`` is the fraction of disturbance power removed
(R^2 of anti-noise against disturbance).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_coeffs, check_signal, check_signal_pair
from .controller import Variant
from .engine import simulate
from .errors import DivergenceError
from .oracle import constrained_solve, estimate_correlations, output_power, wiener_solve


class _AntiNoiseMixin:
    def control_signal(self, X):
        """Control-filter output y = w * x for a reference ``X``."""
        check_is_fitted(self, "coef_")
        x = check_signal(X)
        return np.convolve(x, self.coef_)[: x.size]

    def predict(self, X):
        y = self.control_signal(X)
        return np.convolve(y, check_coeffs(self.secondary_path, "secondary_path"))[: y.size]


class AdaptiveNoiseController(_AntiNoiseMixin, RegressorMixin, BaseEstimator):
    """Closed-loop adaptive controller (FxLMS family).

    ``fit`` runs the adaptation sample by sample over the whole signal with
    the given ``variant``; the final control filter is ``coef_``.

    Parameters
    ----------
    taps : int
        Control filter length.
    mu : float
        Step size.
    variant : str
        One of FXLMS, MFXLMS, MOV_FXLMS, MOV_MFXLMS, RESCALING.
    secondary_path : array-like
        True secondary path used to simulate the plant.
    secondary_path_estimate : array-like or None
        Model used by the controller; defaults to ``secondary_path``.
    rho2 : float
        Output power limit (MOV_MFXLMS).
    window : int
        Running-sum length for the variable penalty factor.
    alpha : float
        Fixed penalty factor (MOV_FXLMS).
    y_max : float or None
        Output magnitude limit (RESCALING).

    Attributes
    ----------
    coef_ : ndarray of shape (taps,)
    history_ : dict of ndarray
        Full-rate ``y``, ``e``, ``alpha`` and ``gs_hat`` from the last fit.
    """

    def __init__(self, taps=2, mu=1e-4, variant="MOV_MFXLMS", secondary_path=(1.0,),
                 secondary_path_estimate=None, rho2=1.0, window=1024, alpha=0.0,
                 y_max=None, eps1=1e-12, eps2=1e-12):
        self.taps = taps
        self.mu = mu
        self.variant = variant
        self.secondary_path = secondary_path
        self.secondary_path_estimate = secondary_path_estimate
        self.rho2 = rho2
        self.window = window
        self.alpha = alpha
        self.y_max = y_max
        self.eps1 = eps1
        self.eps2 = eps2

    def fit(self, X, y):
        x, d = check_signal_pair(X, y)
        variant = Variant.parse(self.variant)
        if self.taps < 1 or not self.mu > 0 or not self.rho2 > 0:
            raise ValueError("need taps >= 1, mu > 0 and rho2 > 0")
        if variant is Variant.RESCALING and not (self.y_max and self.y_max > 0):
            raise ValueError("RESCALING needs y_max > 0")
        sec = check_coeffs(self.secondary_path, "secondary_path")
        sec_hat = sec if self.secondary_path_estimate is None else check_coeffs(
            self.secondary_path_estimate, "secondary_path_estimate")
        w = np.zeros(int(self.taps))
        trace, _, _, _, _, diverged = simulate(
            x, d, sec, sec_hat, w, mu=self.mu, variant=variant, alpha_fixed=self.alpha,
            y_max=self.y_max, window=self.window, eps1=self.eps1, eps2=self.eps2,
            rho2=self.rho2, power_window=self.window, decimation=1)
        if diverged >= 0:
            raise DivergenceError(f"weights became non-finite at sample {diverged}", index=int(diverged))
        self.coef_ = w
        self.history_ = {"y": trace[:, 3].copy(), "e": trace[:, 4].copy(),
                         "alpha": trace[:, 5].copy(), "gs_hat": trace[:, 6].copy()}
        self.n_features_in_ = 1
        return self


class ConstrainedWienerFilter(_AntiNoiseMixin, RegressorMixin, BaseEstimator):
    """Closed-form optimal control filter, optionally power constrained.

    With ``rho2=None`` and ``alpha=0`` this is the plain filtered-reference
    Wiener solution.  A fixed ``alpha`` gives the penalized solution; a
    ``rho2`` finds the smallest penalty meeting ``E[y^2] <= rho2``.

    Attributes
    ----------
    coef_ : ndarray of shape (taps,)
    lambda_ : float
        Penalty actually used (the Lagrange multiplier when ``rho2`` is set).
    output_power_ : float
    correlations_ : CorrelationSet
    """

    def __init__(self, taps=2, secondary_path=(1.0,), rho2=None, alpha=0.0):
        self.taps = taps
        self.secondary_path = secondary_path
        self.rho2 = rho2
        self.alpha = alpha

    def fit(self, X, y):
        x, d = check_signal_pair(X, y)
        sec = check_coeffs(self.secondary_path, "secondary_path")
        xp = np.convolve(x, sec)[: x.size]
        c = estimate_correlations(x, xp, d, int(self.taps))
        if self.rho2 is None:
            self.coef_ = wiener_solve(c, self.alpha)
            self.lambda_ = float(self.alpha)
        else:
            sol = constrained_solve(c, self.rho2)
            self.coef_, self.lambda_ = sol.w, sol.lam
        self.output_power_ = output_power(c, self.coef_)
        self.correlations_ = c
        self.n_features_in_ = 1
        return self
