"""Secondary-path power gain and penalty-factor estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dsp import WindowedPower

DEFAULT_EPS = 1e-12


def penalty_from_power(disturbance_power, gs, rho2):
    """``max(G_s * (sqrt(P_d / (rho2 * G_s)) - 1), 0)``.

    The penalty at which a fully-correlated anti-noise of gain ``gs`` just
    meets the output power limit ``rho2``.
    """
    return max(gs * (math.sqrt(disturbance_power / (rho2 * gs)) - 1.0), 0.0)


@dataclass(frozen=True)
class OfflinePenaltyInput:
    sigma_d2: float
    Gs: float
    rho2: float


def offline_penalty(inp: OfflinePenaltyInput) -> float:
    """Optimal constant penalty for a known disturbance variance and path gain."""
    vals = (inp.sigma_d2, inp.Gs, inp.rho2)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("offline penalty inputs must be finite")
    if inp.Gs <= 0 or inp.rho2 <= 0:
        raise ValueError("Gs and rho2 must be positive")
    if inp.sigma_d2 < 0:
        raise ValueError("sigma_d2 must be >= 0")
    return penalty_from_power(inp.sigma_d2, inp.Gs, inp.rho2)


class PenaltyEstimator:
    """Per-sample variable penalty factor from K-sample running sums.

    Call :meth:`estimate_gs` then :meth:`variable_penalty` once per sample.
    """

    def __init__(self, window: int, rho2: float, eps1: float = DEFAULT_EPS, eps2: float = DEFAULT_EPS):
        if rho2 <= 0:
            raise ValueError("rho2 must be positive")
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError("eps1 and eps2 must be positive")
        self.K = int(window)
        self.rho2 = float(rho2)
        self.eps1 = float(eps1)
        self.eps2 = float(eps2)
        self.sum_x2 = WindowedPower(self.K)
        self.sum_xp2 = WindowedPower(self.K)
        self.sum_dhat2 = WindowedPower(self.K)
        self.gs = self.eps1 / self.eps2
        self.alpha = 0.0

    def estimate_gs(self, x_n: float, xprime_n: float) -> float:
        num = max(self.sum_xp2.push(xprime_n), self.eps1)
        den = max(self.sum_x2.push(x_n), self.eps2)
        self.gs = num / den
        return self.gs

    def variable_penalty(self, d_hat_n: float) -> float:
        s = self.sum_dhat2.push(d_hat_n)
        self.alpha = penalty_from_power(s / self.K, self.gs, self.rho2)
        return self.alpha


def estimate_gs(pe: PenaltyEstimator, x_n, xprime_n):
    return pe.estimate_gs(x_n, xprime_n)


def variable_penalty(pe: PenaltyEstimator, d_hat_n):
    return pe.variable_penalty(d_hat_n)
