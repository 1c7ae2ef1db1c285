"""Sample-by-sample adaptive controller in the modified-FxLMS arrangement.

Per sample the caller runs::

    y = st.compute_control(x)
    (emit y, measure e = d - s*y)
    xp = st.filtered_reference(x)
    d_hat = st.estimate_disturbance(e)
    e_m = st.modified_error(d_hat)
    st.update_weights(e_m, alpha, y)      # or e for FXLMS

:meth:`ControllerState.step` does all of this given a callback for the plant.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from .dsp import DelayLine, FirFilter
from .errors import CorruptSignalError, DivergenceError


class Variant(enum.IntEnum):
    FXLMS = 0
    MFXLMS = 1
    MOV_FXLMS = 2
    MOV_MFXLMS = 3
    RESCALING = 4

    @classmethod
    def parse(cls, name) -> "Variant":
        if isinstance(name, cls):
            return name
        if isinstance(name, int) and not isinstance(name, bool):
            try:
                return cls(name)
            except ValueError:
                raise ValueError(f"unknown variant code {name}") from None
        key = str(name).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown variant {name!r}; expected one of {[v.name for v in cls]}") from None

    @property
    def uses_modified_error(self) -> bool:
        return self in (Variant.MFXLMS, Variant.MOV_FXLMS, Variant.MOV_MFXLMS)


class ControllerState:
    """Adaptive control filter ``w`` plus the delay lines it needs.

    ``x_line`` holds enough reference history for both the control filter
    and the secondary-path model; ``y_line`` keeps the last L emitted
    control samples, which are the historical products w(n-l)'x(n-l).
    """

    def __init__(self, taps: int, sec_hat, mu: float, variant=Variant.MOV_MFXLMS, *, w0=None):
        if taps < 1:
            raise ValueError("taps must be >= 1")
        if not mu > 0:
            raise ValueError("mu must be positive")
        self.sec_hat = sec_hat if isinstance(sec_hat, FirFilter) else FirFilter(sec_hat)
        self.taps = int(taps)
        self.mu = float(mu)
        self.variant = Variant.parse(variant)
        self.w = np.zeros(self.taps) if w0 is None else np.array(w0, dtype=np.float64)
        if self.w.shape != (self.taps,):
            raise ValueError("w0 must have one entry per tap")
        L = self.sec_hat.length
        self.x_line = DelayLine(max(self.taps, L))
        self.xprime_line = DelayLine(self.taps)
        self.y_line = DelayLine(L)
        self.n = 0
        self.y = 0.0
        self.xprime = 0.0

    def compute_control(self, x_n: float) -> float:
        if not math.isfinite(x_n):
            raise CorruptSignalError(f"non-finite reference sample at n={self.n}")
        self.x_line.push(x_n)
        self.y = float(np.dot(self.w, self.x_line.recent(self.taps)))
        self.y_line.push(self.y)
        return self.y

    def filtered_reference(self, x_n: float = None) -> float:
        # x_n is already in x_line; the argument only mirrors the call pattern
        self.xprime = float(np.dot(self.sec_hat.coeffs, self.x_line.recent(self.sec_hat.length)))
        self.xprime_line.push(self.xprime)
        return self.xprime

    def estimate_disturbance(self, e_n: float) -> float:
        return e_n + float(np.dot(self.sec_hat.coeffs, self.y_line.recent()))

    def modified_error(self, d_hat_n: float) -> float:
        return d_hat_n - float(np.dot(self.w, self.xprime_line.recent()))

    def update_weights(self, err: float, alpha: float, y_n: float) -> None:
        """One stochastic-gradient step on E[err^2] + alpha E[y^2].

        ``err`` is e(n) for FXLMS/RESCALING and e_m(n) otherwise.
        """
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        xp = self.xprime_line.recent()
        if alpha == 0.0:
            self.w += self.mu * (xp * err)
        else:
            x = self.x_line.recent(self.taps)
            self.w += self.mu * (xp * err - alpha * x * y_n)
        if not np.all(np.isfinite(self.w)):
            raise DivergenceError(f"non-finite weight at n={self.n}", index=self.n)
        self.n += 1

    def rescale_weights(self, y_n: float, y_max: float) -> float:
        """Shrink ``w`` so this sample's output magnitude is ``y_max``.

        Returns the (possibly limited) control sample to emit.
        """
        if not y_max > 0:
            raise ValueError("y_max must be positive")
        a = abs(y_n)
        if a <= y_max:
            return y_n
        self.w *= y_max / a
        self.y = math.copysign(y_max, y_n)
        self.y_line.set_newest(self.y)
        return self.y

    def step(self, x_n: float, plant, *, alpha=0.0, y_max=None, penalty=None):
        """Run one full sample.  ``plant(y)`` must return the error e(n).

        ``alpha`` is the fixed penalty; when a ``penalty`` estimator is given
        it supplies the per-sample variable penalty instead (fed with this
        sample's x, x' and d-hat, as the compiled loop does).
        Returns ``(y, e, d_hat, e_m, alpha)``.
        """
        y = self.compute_control(x_n)
        if self.variant is Variant.RESCALING:
            y = self.rescale_weights(y, y_max)
        e = plant(y)
        xp = self.filtered_reference(x_n)
        d_hat = self.estimate_disturbance(e)
        e_m = self.modified_error(d_hat)
        if penalty is not None:
            penalty.estimate_gs(x_n, xp)
            variable = penalty.variable_penalty(d_hat)
            if self.variant is Variant.MOV_MFXLMS:
                alpha = variable
        if self.variant not in (Variant.MOV_FXLMS, Variant.MOV_MFXLMS):
            alpha = 0.0
        self.update_weights(e_m if self.variant.uses_modified_error else e, alpha, y)
        return y, e, d_hat, e_m, alpha


def compute_control(st: ControllerState, x_n):
    return st.compute_control(x_n)


def filtered_reference(st: ControllerState, x_n=None):
    return st.filtered_reference(x_n)


def estimate_disturbance(st: ControllerState, e_n):
    return st.estimate_disturbance(e_n)


def modified_error(st: ControllerState, d_hat_n):
    return st.modified_error(d_hat_n)


def update_weights(st: ControllerState, e_m_n, alpha_n, y_n):
    st.update_weights(e_m_n, alpha_n, y_n)


def rescale_weights(st: ControllerState, y_n, y_max):
    return st.rescale_weights(y_n, y_max)
