"""Closed-form constrained Wiener solutions.

The power-constrained problem

    minimize   E[e_m^2]            (quadratic in w)
    subject to w' R_xx w <= rho2

has the stationary point ``w(lam) = (R_x'x' + lam R_xx)^-1 r_x'd`` for a
multiplier ``lam >= 0``.  Output power along that curve decreases
monotonically in ``lam``, so the active multiplier is found by bracketing
and bisection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConvergenceError, SingularSystemError

MAX_COND = 1e12
MAX_BISECTIONS = 200


@dataclass(frozen=True)
class CorrelationSet:
    Rxx: np.ndarray
    Rxpxp: np.ndarray
    rxpd: np.ndarray
    n_samples: int = 0

    @property
    def taps(self) -> int:
        return self.rxpd.size


@dataclass(frozen=True)
class ConstrainedSolution:
    w: np.ndarray
    lam: float
    power: float
    residual_power: float | None = None
    active: bool = False


CHUNK = 1 << 15


def _lag_view(v, taps):
    """Read-only view whose row n is ``[v(n), v(n-1), ..., v(n-taps+1)]``."""
    padded = np.concatenate([np.zeros(taps - 1), v])
    return sliding_window_view(padded, taps)[:, ::-1]


def correlations_over(x, xprime, d_hat, taps, start=0, stop=None) -> "CorrelationSet":
    """Correlation estimates over samples ``[start, stop)``.

    Regression vectors may reach back before ``start`` into real history;
    before sample 0 the history is zero.
    """
    stop = x.size if stop is None else stop
    X = _lag_view(x, taps)
    Xp = _lag_view(xprime, taps)
    Rxx = np.zeros((taps, taps))
    Rpp = np.zeros((taps, taps))
    r = np.zeros(taps)
    for a in range(start, stop, CHUNK):
        b = min(a + CHUNK, stop)
        xa = np.ascontiguousarray(X[a:b])
        pa = np.ascontiguousarray(Xp[a:b])
        Rxx += xa.T @ xa
        Rpp += pa.T @ pa
        r += pa.T @ d_hat[a:b]
    n = stop - start
    return CorrelationSet(Rxx=_sym(Rxx) / n, Rxpxp=_sym(Rpp) / n, rxpd=r / n, n_samples=n)


def _sym(a):
    return 0.5 * (a + a.T)


def estimate_correlations(x, xprime, d_hat, taps) -> CorrelationSet:
    """Time-averaged outer-product estimates of R_xx, R_x'x' and r_x'd."""
    x, xprime, d_hat = (np.asarray(v, dtype=np.float64).ravel() for v in (x, xprime, d_hat))
    if not (x.size == xprime.size == d_hat.size):
        raise ValueError("x, xprime and d_hat must have the same length")
    if x.size < 100 * taps:
        raise ValueError(f"need at least {100 * taps} samples for {taps} taps, got {x.size}")
    return correlations_over(x, xprime, d_hat, taps)


def _spd_solve(A, b):
    """Cholesky solve; a diagonal jitter of 1e-10 * trace / n is added when
    ``A`` is numerically singular or its condition number reaches MAX_COND
    (narrow-band references make the correlation matrices rank deficient).
    """
    n = A.shape[0]
    tr = np.trace(A)
    if not np.all(np.isfinite(A)) or not tr > 0:
        raise SingularSystemError("correlation matrix is singular")
    cho = None
    if np.linalg.cond(A) < MAX_COND:
        try:
            cho = scipy.linalg.cho_factor(A)
        except np.linalg.LinAlgError:
            pass
    if cho is None:
        try:
            cho = scipy.linalg.cho_factor(A + (1e-10 * tr / n) * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError("correlation matrix is not positive definite") from exc
    return scipy.linalg.cho_solve(cho, b)


def wiener_solve(c: CorrelationSet, alpha: float) -> np.ndarray:
    """``(R_x'x' + alpha R_xx)^-1 r_x'd``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return _spd_solve(c.Rxpxp + alpha * c.Rxx, c.rxpd)


def output_power(c: CorrelationSet, w) -> float:
    w = np.asarray(w, dtype=np.float64)
    return float(w @ c.Rxx @ w)


def residual_power(c: CorrelationSet, w, d_power) -> float:
    """E[e_m^2] at ``w`` given the disturbance power E[d^2]."""
    w = np.asarray(w, dtype=np.float64)
    return float(d_power - 2.0 * w @ c.rxpd + w @ c.Rxpxp @ w)


def constrained_solve(c: CorrelationSet, rho2: float, *, rtol: float = 1e-12, d_power=None) -> ConstrainedSolution:
    """Minimum-residual filter with output power at most ``rho2``."""
    if not rho2 > 0:
        raise ValueError("rho2 must be positive")

    def finish(w, lam, active):
        p = output_power(c, w)
        res = None if d_power is None else residual_power(c, w, d_power)
        return ConstrainedSolution(w=w, lam=lam, power=p, residual_power=res, active=active)

    w0 = wiener_solve(c, 0.0)
    if output_power(c, w0) <= rho2:
        return finish(w0, 0.0, False)

    lo, hi = 0.0, 1.0
    for _ in range(MAX_BISECTIONS):
        if output_power(c, wiener_solve(c, hi)) < rho2:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError("could not bracket the Lagrange multiplier")

    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        w = wiener_solve(c, mid)
        p = output_power(c, w)
        if abs(p - rho2) <= rtol * rho2 or hi - lo <= 4 * np.finfo(float).eps * hi:
            return finish(w, mid, True)
        if p > rho2:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not converge after {MAX_BISECTIONS} iterations")


@dataclass(frozen=True)
class StageOracle:
    index: int
    start_s: float
    stop_s: float
    w_unconstrained: np.ndarray
    power_unconstrained: float
    solution: ConstrainedSolution
    sigma_d2: float
    gs: float
    offline_alpha: float


def stage_oracles(sc, reference=None) -> list:
    """Constrained and unconstrained optima for every stage of a scenario.

    Correlations come from the rendered reference over each stage, using the
    true disturbance as the target (exact when the secondary-path model is
    perfect).
    """
    from .engine import effective_paths
    from .noise import compose_timeline
    from .penalty import OfflinePenaltyInput, offline_penalty

    xs = compose_timeline(sc.timeline, sc.base_dir) if reference is None else np.asarray(reference, float)
    prim, _, sec_hat = effective_paths(sc)
    n = xs.size
    d = np.convolve(xs, prim)[:n]
    xp = np.convolve(xs, sec_hat)[:n]
    out = []
    for k, (start, stop) in enumerate(sc.timeline.stage_bounds()):
        c = correlations_over(xs, xp, d, sc.taps, start, stop)
        seg = slice(start, stop)
        d_power = float(np.mean(d[seg] ** 2))
        gs = float(np.mean(xp[seg] ** 2) / np.mean(xs[seg] ** 2))
        w0 = wiener_solve(c, 0.0)
        out.append(StageOracle(
            index=k,
            start_s=start / sc.fs,
            stop_s=stop / sc.fs,
            w_unconstrained=w0,
            power_unconstrained=output_power(c, w0),
            solution=constrained_solve(c, sc.rho2, d_power=d_power),
            sigma_d2=d_power,
            gs=gs,
            offline_alpha=offline_penalty(OfflinePenaltyInput(d_power, gs, sc.rho2)),
        ))
    return out
