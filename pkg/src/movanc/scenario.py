"""Scenario description and its TOML file format.

A scenario file has the sections ``[run]``, ``[[stage]]`` (one table per
noise stage), ``[paths]``, ``[algorithm]``, ``[constraint]``, ``[penalty]``
and ``[logging]``.  The README has the full key table.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .controller import Variant
from .dsp import FirFilter
from .errors import ScenarioError
from .noise import Bandlimited, NoiseStage, Recording, ReferenceTimeline, read_csv_samples


@dataclass
class Scenario:
    fs: float
    duration: float
    stages: tuple
    primary: FirFilter
    secondary: FirFilter
    variant: Variant
    mu: float
    taps: int
    rho2: float = 1.0
    secondary_hat: FirFilter | None = None
    primary_includes_secondary: bool = False
    secondary_hat_error: float = 0.0
    window: int = 1024
    eps1: float = 1e-12
    eps2: float = 1e-12
    alpha_fixed: float = 0.0
    y_max: float | None = None
    decimation: int = 16
    snapshot_period: int = 1600
    power_window: int = 1024
    settle_s: float = 2.0
    violation_margin: float = 0.1
    seed: int = 0
    name: str = ""
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    @property
    def timeline(self) -> ReferenceTimeline:
        return ReferenceTimeline(self.fs, self.duration, tuple(self.stages), self.seed)

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.duration))

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


# the shipped reference scenarios (and their recordings and path files)
SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"

# file key -> (Scenario attribute, required)
KEY_TABLE = {
    "run.name": ("name", False),
    "run.fs_hz": ("fs", True),
    "run.duration_s": ("duration", True),
    "run.seed": ("seed", False),
    "paths.primary": ("primary", True),
    "paths.secondary": ("secondary", True),
    "paths.secondary_hat": ("secondary_hat", False),
    "paths.primary_includes_secondary": ("primary_includes_secondary", False),
    "paths.secondary_hat_error": ("secondary_hat_error", False),
    "algorithm.variant": ("variant", True),
    "algorithm.mu": ("mu", True),
    "algorithm.taps": ("taps", True),
    "constraint.rho2": ("rho2", False),
    "penalty.window": ("window", False),
    "penalty.eps1": ("eps1", False),
    "penalty.eps2": ("eps2", False),
    "penalty.alpha_fixed": ("alpha_fixed", False),
    "penalty.y_max": ("y_max", False),
    "logging.decimation": ("decimation", False),
    "logging.snapshot_period": ("snapshot_period", False),
    "logging.power_window": ("power_window", False),
    "logging.settle_s": ("settle_s", False),
    "logging.violation_margin": ("violation_margin", False),
}
STAGE_KEYS = ("kind", "lo_hz", "hi_hz", "variance", "path", "gain", "start_s", "mode")
FILTER_KEYS = ("paths.primary", "paths.secondary", "paths.secondary_hat")
INT_KEYS = {"taps", "window", "decimation", "snapshot_period", "power_window", "seed"}


def _flatten(doc):
    flat = {}
    for section, body in doc.items():
        if section == "stage":
            continue
        if not isinstance(body, dict):
            raise ScenarioError("top-level keys must live in a [section]", key=section)
        for k, v in body.items():
            flat[f"{section}.{k}"] = v
    return flat


def _load_filter(value, key, base_dir):
    if isinstance(value, str):
        p = Path(value)
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        try:
            value = read_csv_samples(p)
        except (OSError, ValueError) as exc:
            raise ScenarioError(f"cannot read coefficients: {exc}", key=key) from None
    try:
        return FirFilter(value)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), key=key) from None


def _build_stage(i, tbl):
    key = f"stage[{i}]"
    unknown = set(tbl) - set(STAGE_KEYS)
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)}", key=key)
    kind = tbl.get("kind", "bandlimited")
    try:
        if kind == "bandlimited":
            for k in ("lo_hz", "hi_hz", "variance"):
                if k not in tbl:
                    raise ScenarioError("missing required key", key=f"{key}.{k}")
            src = Bandlimited(float(tbl["lo_hz"]), float(tbl["hi_hz"]), float(tbl["variance"]))
        elif kind == "recording":
            if "path" not in tbl:
                raise ScenarioError("missing required key", key=f"{key}.path")
            src = Recording(str(tbl["path"]), float(tbl.get("gain", 1.0)))
        else:
            raise ScenarioError(f"unknown stage kind {kind!r}", key=f"{key}.kind")
        return NoiseStage(src, float(tbl.get("start_s", 0.0)), str(tbl.get("mode", "replace")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), key=key) from None


def scenario_from_dict(doc: dict, base_dir=None, name="") -> Scenario:
    """Build and validate a :class:`Scenario` from a parsed TOML document."""
    flat = _flatten(doc)
    unknown = sorted(set(flat) - set(KEY_TABLE))
    if unknown:
        raise ScenarioError("unknown key", key=unknown[0])
    for k, (_, required) in KEY_TABLE.items():
        if required and k not in flat:
            raise ScenarioError("missing required key", key=k)

    stages_raw = doc.get("stage", [])
    if not isinstance(stages_raw, list):
        raise ScenarioError("use [[stage]] tables", key="stage")
    kwargs = {"stages": tuple(_build_stage(i, t) for i, t in enumerate(stages_raw)),
              "base_dir": base_dir, "name": name}
    for k, v in flat.items():
        attr = KEY_TABLE[k][0]
        if k in FILTER_KEYS:
            v = _load_filter(v, k, base_dir)
        elif attr == "variant":
            try:
                v = Variant.parse(v)
            except ValueError as exc:
                raise ScenarioError(str(exc), key=k) from None
        elif attr == "name":
            v = str(v)
        elif attr == "primary_includes_secondary":
            if not isinstance(v, bool):
                raise ScenarioError("expected true or false", key=k)
        elif attr in INT_KEYS:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(f"expected an integer, got {v!r}", key=k)
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ScenarioError(f"expected a number, got {v!r}", key=k)
            v = float(v)
        kwargs[attr] = v
    sc = Scenario(**kwargs)
    validate_scenario(sc)
    return sc


def validate_scenario(sc: Scenario) -> None:
    def check(cond, key, msg):
        if not cond:
            raise ScenarioError(msg, key=key)

    check(sc.fs > 0, "run.fs_hz", "must be positive")
    check(sc.duration > 0, "run.duration_s", "must be positive")
    check(sc.taps >= 1, "algorithm.taps", "must be >= 1")
    check(sc.mu > 0, "algorithm.mu", "must be positive")
    check(sc.rho2 > 0, "constraint.rho2", "must be positive")
    check(sc.window >= 1, "penalty.window", "must be >= 1")
    check(sc.eps1 > 0, "penalty.eps1", "must be positive")
    check(sc.eps2 > 0, "penalty.eps2", "must be positive")
    check(sc.alpha_fixed >= 0, "penalty.alpha_fixed", "must be >= 0")
    check(sc.decimation >= 1, "logging.decimation", "must be >= 1")
    check(sc.snapshot_period >= 1, "logging.snapshot_period", "must be >= 1")
    check(sc.power_window >= 1, "logging.power_window", "must be >= 1")
    check(sc.settle_s >= 0, "logging.settle_s", "must be >= 0")
    check(sc.violation_margin >= 0, "logging.violation_margin", "must be >= 0")
    check(sc.secondary_hat_error >= 0, "paths.secondary_hat_error", "must be >= 0")
    if sc.variant is Variant.RESCALING:
        check(sc.y_max is not None and sc.y_max > 0, "penalty.y_max", "RESCALING needs y_max > 0")
    if sc.secondary_hat is not None:
        check(sc.secondary_hat.length == sc.secondary.length, "paths.secondary_hat",
              "must have the same length as paths.secondary")

    check(len(sc.stages) > 0, "stage", "at least one [[stage]] is required")
    prev = None
    for i, st in enumerate(sc.stages):
        key = f"stage[{i}]"
        if i == 0:
            check(st.start == 0, f"{key}.start_s", "first stage must start at 0")
        else:
            check(st.start > prev, f"{key}.start_s", "stage starts must strictly increase")
        check(st.start < sc.duration, f"{key}.start_s", "must be before the end of the run")
        prev = st.start
        if isinstance(st.source, Bandlimited):
            check(0 < st.source.lo < st.source.hi, f"{key}.lo_hz", "need 0 < lo_hz < hi_hz")
            check(st.source.hi < sc.fs / 2, f"{key}.hi_hz", f"must be below fs/2 = {sc.fs / 2:g}")
            check(st.source.variance > 0, f"{key}.variance", "must be positive")


def parse_scenario_text(text: str, base_dir=None, name="") -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        # message carries "(at line L, column C)"
        raise ScenarioError(f"syntax error: {exc}") from None
    return scenario_from_dict(doc, base_dir=base_dir, name=name)


def parse_scenario_file(path, overrides=()) -> Scenario:
    """Read, apply ``section.key=value`` overrides, and validate."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: syntax error: {exc}") from None
    for item in overrides:
        apply_override(doc, item)
    return scenario_from_dict(doc, base_dir=path.parent, name=doc.get("run", {}).get("name", path.stem))


def _parse_value(text):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_override(doc: dict, item: str) -> None:
    """Apply one ``key=value`` override in place on a raw document."""
    if "=" not in item:
        raise ScenarioError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    value = _parse_value(raw.strip())
    parts = key.split(".")
    if parts[0] == "stage":
        if len(parts) != 3 or not parts[1].isdigit() or parts[2] not in STAGE_KEYS:
            raise ScenarioError("stage overrides look like stage.<index>.<key>", key=key)
        stages = doc.get("stage", [])
        idx = int(parts[1])
        if idx >= len(stages):
            raise ScenarioError(f"no stage {idx}", key=key)
        stages[idx][parts[2]] = value
        return
    if key not in KEY_TABLE:
        raise ScenarioError("unknown key", key=key)
    section, name = parts
    doc.setdefault(section, {})[name] = value


def _stage_to_dict(st: NoiseStage) -> dict:
    src = st.source
    if isinstance(src, Bandlimited):
        d = {"kind": "bandlimited", "lo_hz": src.lo, "hi_hz": src.hi, "variance": src.variance}
    else:
        d = {"kind": "recording", "path": src.path, "gain": src.gain}
    d.update(start_s=st.start, mode=st.mode)
    return d


def scenario_to_dict(sc: Scenario) -> dict:
    """Inverse of :func:`scenario_from_dict`; filters are written inline."""
    doc: dict = {}
    for key, (attr, _) in KEY_TABLE.items():
        v = getattr(sc, attr)
        if v is None:
            continue
        if isinstance(v, FirFilter):
            v = v.coeffs.tolist()
        elif isinstance(v, Variant):
            v = v.name
        elif isinstance(v, np.generic):
            v = v.item()
        section, name = key.split(".")
        doc.setdefault(section, {})[name] = v
    doc["stage"] = [_stage_to_dict(st) for st in sc.stages]
    return doc


def dump_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))

