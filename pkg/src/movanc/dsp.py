"""Streaming DSP primitives: FIR filters, delay lines and windowed power."""
from __future__ import annotations

import math

import numpy as np

from .errors import CorruptSignalError

# full recomputation period for running sums, bounds accumulated drift
REFRESH_PERIOD = 1 << 20


class FirFilter:
    """Fixed FIR coefficient vector."""

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=np.float64).ravel()
        if c.size < 1:
            raise ValueError("FIR filter needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("FIR coefficients must be finite")
        c.setflags(write=False)
        self.coeffs = c

    @property
    def length(self) -> int:
        return self.coeffs.size

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"FirFilter({self.coeffs.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, FirFilter) and np.array_equal(self.coeffs, other.coeffs)

    def filter(self, x) -> np.ndarray:
        """Offline causal filtering with zero initial conditions."""
        x = np.asarray(x, dtype=np.float64)
        return np.convolve(x, self.coeffs)[: x.size]


class DelayLine:
    """Tapped delay line; index 0 is the newest sample.

    Backed by a doubled ring buffer so the newest-first window is always a
    contiguous (reversed) slice.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._buf = np.zeros(2 * self.capacity)
        self._pos = self.capacity  # next write goes to _pos - 1

    def push(self, v: float) -> None:
        self._pos -= 1
        if self._pos < 0:
            self._pos = self.capacity - 1
        self._buf[self._pos] = v
        self._buf[self._pos + self.capacity] = v

    def recent(self, k: int | None = None) -> np.ndarray:
        """The ``k`` most recent samples, newest first (view, do not mutate)."""
        k = self.capacity if k is None else k
        if k > self.capacity:
            raise ValueError(f"delay line holds only {self.capacity} samples")
        return self._buf[self._pos : self._pos + k]

    def __getitem__(self, i: int) -> float:
        return float(self._buf[self._pos + i])

    def set_newest(self, v: float) -> None:
        i = self._pos % self.capacity
        self._buf[i] = v
        self._buf[i + self.capacity] = v

    def clear(self) -> None:
        self._buf[:] = 0.0


def fir_step(f: FirFilter, line: DelayLine) -> float:
    """Output of ``f`` for the delay line's current contents."""
    return float(np.dot(f.coeffs, line.recent(f.length)))


class WindowedPower:
    """Running sum of squares over the last ``window`` samples.

    Uses O(1) add/subtract updates and recomputes the sum from the stored
    squares every ``REFRESH_PERIOD`` pushes.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = int(window)
        self._sq = np.zeros(self.window)
        self._idx = 0
        self._count = 0
        self.sum = 0.0

    def push(self, v: float) -> float:
        if not math.isfinite(v):
            raise CorruptSignalError(f"non-finite sample {v!r}")
        s = v * v
        self.sum += s - self._sq[self._idx]
        self._sq[self._idx] = s
        self._idx += 1
        if self._idx == self.window:
            self._idx = 0
        self._count += 1
        if self._count % REFRESH_PERIOD == 0:
            self.sum = float(np.sum(self._sq))
        # cancellation can leave a tiny negative residue
        if self.sum < 0.0:
            self.sum = 0.0
        return self.sum

    @property
    def mean(self) -> float:
        return self.sum / self.window

    def direct_sum(self) -> float:
        return float(np.sum(self._sq))


def windowed_power_push(wp: WindowedPower, v: float) -> float:
    return wp.push(v)


def moving_power(v, window: int) -> np.ndarray:
    """Offline trailing-window mean of ``v**2`` with zero-padded history."""
    sq = np.asarray(v, dtype=np.float64) ** 2
    c = np.cumsum(sq)
    out = c.copy()
    out[window:] -= c[:-window]
    return out / window
