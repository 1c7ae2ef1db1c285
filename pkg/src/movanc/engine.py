"""Closed-loop scenario runner.

Per sample: reference -> primary path -> disturbance d; control filter ->
secondary path -> anti-noise; e = d - y'; filtered reference, disturbance
estimate, modified error, penalty factor and weight update.  The loop
itself is compiled (:mod:`movanc._kernel`).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernel
from .errors import DivergenceError
from .noise import compose_timeline
from .scenario import Scenario

TRACE_COLUMNS = ("n", "t", "x", "d", "y", "e", "alpha", "gs_hat", "sigma_y2_ma")


@dataclass
class StageSummary:
    """Per-stage statistics.

    ``sigma_*`` and ``mean_*`` fields average over the steady window (the
    last third of the stage).  ``gs`` is E[x'^2]/E[x^2] over that window.
    Violations count post-settle samples whose moving-average output power
    exceeds ``rho2 * (1 + violation_margin)``.
    """

    index: int
    start_s: float
    stop_s: float
    sigma_y2: float
    sigma_e2: float
    sigma_d2: float
    sigma_dhat2: float
    gs: float
    mean_gs_hat: float
    mean_alpha: float
    alpha_zero_fraction: float
    max_sigma_y2_ma: float
    violations: int
    post_settle_samples: int
    final_w: list

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.post_settle_samples if self.post_settle_samples else 0.0


@dataclass
class MetricsLog:
    name: str
    fs: float
    variant: str
    rho2: float
    trace: dict
    snapshot_n: np.ndarray
    snapshot_w: np.ndarray
    stages: list
    final_w: np.ndarray
    dhat_max_error: float

    @property
    def n_logged(self) -> int:
        return self.trace["n"].size

    @property
    def taps(self) -> int:
        return self.final_w.size

    def summary(self) -> dict:
        return {
            "name": self.name,
            "variant": self.variant,
            "fs_hz": self.fs,
            "rho2": self.rho2,
            "final_w": self.final_w.tolist(),
            "dhat_max_error": self.dhat_max_error,
            "violations": int(sum(s.violations for s in self.stages)),
            "post_settle_samples": int(sum(s.post_settle_samples for s in self.stages)),
            "stages": [dict(asdict(s), violation_fraction=s.violation_fraction) for s in self.stages],
        }


def effective_paths(sc: Scenario):
    """``(primary, secondary, secondary_hat)`` coefficient arrays actually simulated."""
    prim = sc.primary.coeffs
    sec = sc.secondary.coeffs
    if sc.primary_includes_secondary:
        prim = np.convolve(prim, sec)
    sec_hat = (sc.secondary_hat or sc.secondary).coeffs.copy()
    if sc.secondary_hat_error > 0:
        rng = np.random.default_rng(np.random.SeedSequence([sc.seed, 0x5EC]))
        sec_hat = sec_hat * (1.0 + sc.secondary_hat_error * rng.standard_normal(sec_hat.size))
    return np.ascontiguousarray(prim), np.ascontiguousarray(sec), sec_hat


def stage_windows(sc: Scenario):
    """Sample indices ``(start, stop, steady_start, settle_stop)`` per stage."""
    bounds = sc.timeline.stage_bounds()
    settle = int(round(sc.settle_s * sc.fs))
    out = []
    for start, stop in bounds:
        out.append((start, stop, stop - (stop - start) // 3, min(start + settle, stop)))
    return np.array(out, dtype=np.int64).reshape(-1, 4)


def simulate(xs, ds, sec, sec_hat, w, *, mu, variant, alpha_fixed=0.0, y_max=None,
             window=1024, eps1=1e-12, eps2=1e-12, rho2=1.0, power_window=1024,
             decimation=1, snapshot_period=None, windows=None, violation_level=None):
    """Thin typed wrapper over the compiled loop; ``w`` is updated in place.

    ``xs`` is the reference and ``ds`` the disturbance at the error sensor.
    ``windows`` holds per-stage ``(start, stop, steady_start, settle_stop)``
    rows (default: one stage spanning everything).
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ds = np.ascontiguousarray(ds, dtype=np.float64)
    n = xs.size
    if windows is None:
        windows = np.array([[0, n, n - n // 3, 0]], dtype=np.int64)
    windows = np.asarray(windows, dtype=np.int64)
    return _kernel.simulate(
        xs, ds, np.ascontiguousarray(sec, dtype=np.float64),
        np.ascontiguousarray(sec_hat, dtype=np.float64), w, float(mu), int(variant),
        float(alpha_fixed), math.inf if y_max is None else float(y_max), int(window),
        float(eps1), float(eps2), float(rho2), int(power_window), int(decimation),
        int(snapshot_period or max(n, 1)),
        windows[:, 0].copy(), windows[:, 1].copy(), windows[:, 2].copy(), windows[:, 3].copy(),
        math.inf if violation_level is None else float(violation_level),
    )


def run_scenario(sc: Scenario, reference=None) -> MetricsLog:
    """Simulate ``sc`` and return its metrics.

    ``reference`` overrides the rendered noise timeline (it must have
    ``sc.n_samples`` samples); mostly useful in tests.
    """
    xs = compose_timeline(sc.timeline, sc.base_dir) if reference is None else np.asarray(reference, dtype=np.float64)
    if xs.size != sc.n_samples:
        raise ValueError(f"reference has {xs.size} samples, scenario needs {sc.n_samples}")
    prim, sec, sec_hat = effective_paths(sc)
    ds = np.convolve(xs, prim)[: xs.size]
    win = stage_windows(sc)
    w = np.zeros(sc.taps)
    trace, snaps, stage_w, acc, dhat_err, diverged = simulate(
        xs, ds, sec, sec_hat, w, mu=sc.mu, variant=sc.variant, alpha_fixed=sc.alpha_fixed,
        y_max=sc.y_max, window=sc.window, eps1=sc.eps1, eps2=sc.eps2, rho2=sc.rho2,
        power_window=sc.power_window, decimation=sc.decimation,
        snapshot_period=sc.snapshot_period, windows=win,
        violation_level=sc.rho2 * (1.0 + sc.violation_margin),
    )
    if diverged >= 0:
        raise DivergenceError(
            f"{sc.name or 'scenario'}: weights became non-finite at sample {diverged} "
            f"(t = {diverged / sc.fs:.4f} s); reduce algorithm.mu", index=int(diverged))

    cols = {name: trace[:, i] for i, name in enumerate(("n", "x", "d", "y", "e", "alpha", "gs_hat", "sigma_y2_ma"))}
    n = cols["n"].astype(np.int64)
    trace_dict = {"n": n, "t": n / sc.fs}
    trace_dict.update((k, cols[k]) for k in TRACE_COLUMNS[2:])

    stages = []
    for k, (start, stop, _, _) in enumerate(win):
        a = acc[k]
        cnt = a[_kernel.A_SCNT]

        def mean(col, a=a, cnt=cnt):
            return float(a[col] / cnt) if cnt else 0.0

        x2 = a[_kernel.A_SX2]
        stages.append(StageSummary(
            index=k,
            start_s=start / sc.fs,
            stop_s=stop / sc.fs,
            sigma_y2=mean(_kernel.A_SY2),
            sigma_e2=mean(_kernel.A_SE2),
            sigma_d2=mean(_kernel.A_SD2),
            sigma_dhat2=mean(_kernel.A_SDH2),
            gs=float(a[_kernel.A_SXP2] / x2) if x2 > 0 else 0.0,
            mean_gs_hat=mean(_kernel.A_SGS),
            mean_alpha=mean(_kernel.A_SAL),
            alpha_zero_fraction=float(a[_kernel.A_AZ] / a[_kernel.A_CNT]) if a[_kernel.A_CNT] else 1.0,
            max_sigma_y2_ma=float(a[_kernel.A_MAMAX]),
            violations=int(a[_kernel.A_VIOL]),
            post_settle_samples=int(a[_kernel.A_POST]),
            final_w=stage_w[k].tolist(),
        ))

    snap_n = np.arange(snaps.shape[0], dtype=np.int64) * sc.snapshot_period
    snap_n = np.append(snap_n, sc.n_samples)
    snaps = np.vstack([snaps, w[None, :]])
    return MetricsLog(
        name=sc.name,
        fs=sc.fs,
        variant=sc.variant.name,
        rho2=sc.rho2,
        trace=trace_dict,
        snapshot_n=snap_n,
        snapshot_w=snaps,
        stages=stages,
        final_w=w.copy(),
        dhat_max_error=float(dhat_err),
    )


def run_suite(scenarios, parallelism: int = 1) -> list:
    """Run scenarios independently; results keep the input order.

    A failing scenario does not stop the others: its slot holds the raised
    exception instead of a :class:`MetricsLog`.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    scenarios = list(scenarios)

    def one(sc):
        try:
            return run_scenario(sc)
        except Exception as exc:  # noqa: BLE001 - collected for the caller
            return exc

    if parallelism == 1 or len(scenarios) <= 1:
        return [one(sc) for sc in scenarios]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, scenarios))

