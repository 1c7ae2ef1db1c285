"""Generate the synthetic duct paths and noise recordings used by sec5b.scenario.

Writes into ``src/movanc/scenarios/``:

* ``duct_primary.csv`` / ``duct_secondary.csv``: FIR models of a short air
  duct (propagation delay, a few decaying reflections, 60-5000 Hz
  loudspeaker/microphone band shaping).  The secondary path has 320 taps.
* ``construction.wav``: 60 s of construction-site-like noise, energy mostly
  in 70-400 Hz (engine harmonics, band noise, periodic impacts).
* ``aircraft.wav``: 30 s flyover, 400-3500 Hz broadband noise under a
  rise-and-fall envelope with a Doppler-swept tone.

Everything is seeded, so re-running reproduces the shipped files bit for bit.
"""
from pathlib import Path

import numpy as np
from scipy.signal import firwin, lfilter

from movanc.noise import write_wav

FS = 16000
OUT = Path(__file__).resolve().parents[1] / "src" / "movanc" / "scenarios"


def echo_path(length, echoes, shaping):
    h = np.zeros(length)
    for delay, gain in echoes:
        h[delay] += gain
    h = np.convolve(h, shaping)[:length]
    return h


def duct_paths():
    shaping = firwin(41, [60, 5000], pass_zero=False, fs=FS)
    sec = echo_path(320, [(8, 1.0), (29, -0.32), (67, 0.18), (131, -0.09), (212, 0.04)], shaping)
    prim = echo_path(448, [(36, 1.0), (61, 0.38), (109, -0.22), (187, 0.12), (290, -0.06), (385, 0.03)], shaping)
    return prim, sec


def band(rng, n, lo, hi, numtaps=511):
    h = firwin(numtaps, [lo, hi], pass_zero=False, fs=FS)
    v = lfilter(h, 1.0, rng.standard_normal(n + numtaps))[numtaps:]
    return v / v.std()


def construction(seconds=60.0, seed=2024):
    rng = np.random.default_rng(seed)
    n = int(seconds * FS)
    t = np.arange(n) / FS
    rumble = band(rng, n, 70, 400)
    engine = sum(a * np.sin(2 * np.pi * k * 92.0 * t + rng.uniform(0, 2 * np.pi))
                 for k, a in zip(range(1, 5), (0.8, 0.5, 0.35, 0.2)))
    # slow load variation of the engine
    engine *= 1.0 + 0.25 * np.sin(2 * np.pi * 0.07 * t)
    impacts = np.zeros(n)
    hit = band(rng, int(0.12 * FS), 80, 400) * np.exp(-np.arange(int(0.12 * FS)) / (0.03 * FS))
    starts = np.arange(0.3, seconds - 0.2, 0.55)
    for start in starts + rng.uniform(-0.05, 0.05, starts.size):
        i = int(start * FS)
        impacts[i : i + hit.size] += 0.9 * hit[: n - i]
    x = rumble + engine + impacts
    return 0.9 * x / np.abs(x).max()


def aircraft(seconds=30.0, seed=2025):
    rng = np.random.default_rng(seed)
    n = int(seconds * FS)
    t = np.arange(n) / FS
    jet = band(rng, n, 400, 3500)
    # closest approach two thirds into the clip
    t0 = 0.66 * seconds
    env = 0.08 + np.exp(-0.5 * ((t - t0) / 3.5) ** 2)
    f_inst = 1100.0 - 350.0 * np.tanh((t - t0) / 2.0)
    tone = 0.5 * np.sin(2 * np.pi * np.cumsum(f_inst) / FS)
    x = env * (jet + tone)
    return 0.9 * x / np.abs(x).max()


def main():
    prim, sec = duct_paths()
    for name, h in (("duct_primary.csv", prim), ("duct_secondary.csv", sec)):
        (OUT / name).write_text("".join(f"{float(v)!r}\n" for v in h))
    write_wav(OUT / "construction.wav", construction(), FS)
    write_wav(OUT / "aircraft.wav", aircraft(), FS)
    print(f"wrote assets to {OUT}")


if __name__ == "__main__":
    main()
