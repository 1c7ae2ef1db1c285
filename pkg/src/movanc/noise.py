"""Reference-noise synthesis, recording loading and staged timelines."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.io import wavfile
from scipy.signal import firwin, lfilter

from .errors import InsufficientRecordingError, InvalidBandError, RecordingError

BANDPASS_TAPS = 255


def _check_band(lo, hi, fs):
    if not (0 < lo < hi < fs / 2):
        raise InvalidBandError(f"band [{lo}, {hi}] Hz must satisfy 0 < lo < hi < fs/2 = {fs / 2}")


def gen_bandlimited(seed, lo, hi, fs, n, variance, *, numtaps=BANDPASS_TAPS):
    """Zero-mean Gaussian noise band-limited to ``[lo, hi]`` Hz.

    Unit white noise is passed through a Hamming windowed-sinc bandpass, the
    filter warm-up is dropped, and the result is rescaled so that its
    empirical variance equals ``variance`` exactly.

    ``seed`` may be an int or anything accepted by ``numpy.random.default_rng``.
    """
    _check_band(lo, hi, fs)
    if not variance > 0:
        raise ValueError("variance must be positive")
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return np.zeros(0)
    rng = np.random.default_rng(seed)
    h = firwin(numtaps, [lo, hi], pass_zero=False, fs=fs, window="hamming")
    v = lfilter(h, 1.0, rng.standard_normal(n + numtaps))[numtaps:]
    v -= v.mean()
    sd = v.std()
    if sd == 0.0:  # n == 1
        return np.zeros(n)
    return v * (math.sqrt(variance) / sd)


def read_wav(path):
    """Mono PCM16 or float32 WAV as float64 samples plus sample rate."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            fs, data = wavfile.read(path)
    except wavfile.WavFileWarning as exc:
        raise RecordingError(f"{path}: {exc}") from exc
    except (ValueError, EOFError) as exc:
        raise RecordingError(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise RecordingError(f"{path}: expected mono, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0, int(fs)
    if data.dtype == np.float32:
        return data.astype(np.float64), int(fs)
    raise RecordingError(f"{path}: unsupported sample format {data.dtype}")


def write_wav(path, samples, fs, *, pcm16=True):
    """Write mono samples; ``pcm16`` clips to [-1, 1) and quantizes."""
    x = np.asarray(samples, dtype=np.float64)
    if pcm16:
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = x.astype(np.float32)
    wavfile.write(path, int(fs), data)


def read_csv_samples(path):
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise RecordingError(f"{path}:{lineno}: not a number: {line!r}") from None
    return np.array(vals, dtype=np.float64)


def load_recording(path, fs=None):
    """Load a recording; returns ``(samples, fs)``.

    CSV files carry no rate and take ``fs``.  For WAV files a given ``fs``
    must match the header (no resampling is done).
    """
    path = Path(path)
    if not path.exists():
        raise RecordingError(f"{path}: no such file")
    suffix = path.suffix.lower()
    if suffix == ".wav":
        samples, file_fs = read_wav(path)
        if fs is not None and file_fs != fs:
            raise RecordingError(f"{path}: sample rate {file_fs} Hz does not match scenario {fs} Hz")
        return samples, file_fs
    if suffix in (".csv", ".txt"):
        return read_csv_samples(path), fs
    raise RecordingError(f"{path}: unsupported format {suffix!r}")


@dataclass(frozen=True)
class Bandlimited:
    lo: float
    hi: float
    variance: float


@dataclass(frozen=True)
class Recording:
    path: str
    gain: float = 1.0


@dataclass(frozen=True)
class NoiseStage:
    source: Bandlimited | Recording
    start: float = 0.0
    mode: str = "replace"

    def __post_init__(self):
        if self.mode not in ("replace", "compound"):
            raise ValueError(f"mode must be 'replace' or 'compound', got {self.mode!r}")
        if self.start < 0:
            raise ValueError("stage start must be >= 0")
        if isinstance(self.source, Bandlimited) and not self.source.variance > 0:
            raise ValueError("variance must be positive")


@dataclass(frozen=True)
class ReferenceTimeline:
    fs: float
    duration: float
    stages: Sequence[NoiseStage] = field(default_factory=tuple)
    seed: int = 0

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.duration))

    def stage_bounds(self):
        """``(start, stop)`` sample indices of every stage."""
        n = self.n_samples
        starts = [int(round(st.start * self.fs)) for st in self.stages]
        return list(zip(starts, starts[1:] + [n]))


def validate_timeline(t: ReferenceTimeline):
    if not t.stages:
        raise ValueError("timeline needs at least one stage")
    if t.stages[0].start != 0:
        raise ValueError("first stage must start at 0")
    starts = [st.start for st in t.stages]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError("stage starts must strictly increase")
    if starts[-1] >= t.duration:
        raise ValueError("every stage must start before the end of the timeline")
    for st in t.stages:
        if isinstance(st.source, Bandlimited):
            _check_band(st.source.lo, st.source.hi, t.fs)


def stage_source(t: ReferenceTimeline, index: int, n: int, base_dir=None) -> np.ndarray:
    """First ``n`` samples of stage ``index``'s source."""
    src = t.stages[index].source
    if isinstance(src, Bandlimited):
        seed = np.random.SeedSequence([t.seed, index])
        return gen_bandlimited(seed, src.lo, src.hi, t.fs, n, src.variance)
    path = Path(src.path)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    samples, _ = load_recording(path, t.fs)
    if samples.size < n:
        raise InsufficientRecordingError(
            f"{path}: {samples.size} samples, stage needs {n}")
    return src.gain * samples[:n]


def compose_timeline(t: ReferenceTimeline, base_dir=None) -> np.ndarray:
    """Render the reference signal described by ``t``.

    A ``replace`` stage silences every earlier source from its start; a
    ``compound`` stage is added on top of whatever is still running.  Each
    source runs from its start until the next ``replace`` stage (or the end).
    """
    validate_timeline(t)
    n = t.n_samples
    out = np.zeros(n)
    bounds = t.stage_bounds()
    for i, (start, _) in enumerate(bounds):
        stop = n
        for j in range(i + 1, len(t.stages)):
            if t.stages[j].mode == "replace":
                stop = bounds[j][0]
                break
        out[start:stop] += stage_source(t, i, stop - start, base_dir)
    return out
