"""CSV / JSON serialization of run results."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import TRACE_COLUMNS, MetricsLog


def emit_csv(log: MetricsLog, out_dir, formats=("csv", "json")) -> list:
    """Write ``trace.csv``, ``weights.csv`` and ``summary.json`` into ``out_dir``.

    Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / "trace.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(TRACE_COLUMNS)
            cols = [log.trace[c] for c in TRACE_COLUMNS]
            ints = cols[0].tolist()
            rest = [c.tolist() for c in cols[1:]]
            for i, n in enumerate(ints):
                wr.writerow([str(n)] + [repr(c[i]) for c in rest])
        written.append(path)

        path = out / "weights.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["n"] + [f"w{i}" for i in range(log.taps)])
            for n, w in zip(log.snapshot_n.tolist(), log.snapshot_w.tolist()):
                wr.writerow([str(n)] + [repr(v) for v in w])
        written.append(path)
    if "json" in formats:
        path = out / "summary.json"
        path.write_text(json.dumps(log.summary(), indent=2) + "\n")
        written.append(path)
    return written


def read_trace_csv(path) -> dict:
    """Load a ``trace.csv`` back into column arrays."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = list(rd)
    if not rows:
        return {h: np.zeros(0, dtype=np.int64 if h == "n" else np.float64) for h in header}
    cols = list(zip(*rows))
    out = {}
    for h, col in zip(header, cols):
        out[h] = np.array([int(v) for v in col]) if h == "n" else np.array([float(v) for v in col])
    return out


def read_weights_csv(path):
    """``(n, W)`` from a ``weights.csv``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0].astype(np.int64), data[:, 1:]
