"""Run configuration: a small sectioned key = value format.

Example::

    pipeline = hom
    preset = paper-fig3b
    seed = 7

    [hom]
    n_points = 4001

Top-level keys: pipeline, preset (comma list), seed, out. Presets are applied
in order, then explicit keys override them. ``#`` and ``;`` start comments.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

from . import constants as K
from .errors import ConfigError
from .presets import PRESETS

PIPELINES = ("jsi", "jta", "schmidt", "hom", "tof", "netsim")

# section -> key -> (type, default). Types: float, int, bool, str, floats, ofloat
SCHEMA = {
    "grid": {
        "n": ("int", K.GRID_N),
        "span_hz": ("float", K.GRID_SPAN / (2 * 3.141592653589793)),
    },
    "pump": {
        "wavelength": ("float", K.PUMP_WAVELENGTH),
        "bandwidth_wl": ("float", K.PUMP_BANDWIDTH_WL),
        "shape": ("str", "gaussian"),
    },
    "crystal": {
        "length": ("float", K.CRYSTAL_LENGTH),
        "poling_period": ("float", K.POLING_PERIOD),
        "temperature": ("float", K.OVEN_TEMPERATURE),
        "ridge_fwhm_hz": ("float", K.RIDGE_FWHM),
        "mean_beta": ("float", K.MEAN_BETA),
        "dk0": ("float", 0.0),
        "beta_h": ("ofloat", None),
        "beta_v": ("ofloat", None),
        "table": ("str", ""),
    },
    "synthesis": {
        "dt_h": ("ofloat", None),
        "dt_v": ("ofloat", None),
        "dt_minus": ("ofloat", None),
        "d1": ("ofloat", None),
        "d2": ("ofloat", None),
        "d3": ("ofloat", None),
        "phase": ("ofloat", None),
        "d3_scan": ("floats", []),
    },
    "analysis": {
        "threshold_db": ("float", -10.0),
        "schmidt_threshold": ("float", 1e-3),
        "bin_window_hz": ("ofloat", None),
        "export_half_width_hz": ("float", 3e12),
        "schmidt_half_width_hz": ("float", 3e12),
    },
    "hom": {
        "half_range": ("ofloat", None),
        "n_points": ("int", 2001),
        "compensate_walkoff": ("bool", True),
    },
    "detection": {
        "efficiency": ("float", K.SNSPD_EFFICIENCY),
        "jitter_fwhm": ("float", K.SNSPD_JITTER_FWHM),
        "electronics_jitter_fwhm": ("float", 0.0),
        "system_jitter_fwhm": ("ofloat", None),
        "dark_rate": ("float", K.SNSPD_DARK_RATE),
        "dead_time": ("float", 0.0),
        "dispersion_ps_nm": ("float", -895.0),
        "lambda_ref": ("float", K.DCF_LAMBDA_REF),
        "dispersion_scale": ("float", 1.0),
        "pair_rate": ("float", K.PAIR_RATE),
        "pairs": ("float", 1e5),
        "window": ("float", K.COINCIDENCE_WINDOW),
        "recon_n": ("int", 64),
        "sync_every": ("int", 76_000),
    },
    "network": {
        "link_length": ("float", K.LINK_LENGTH),
        "group_index": ("float", K.LINK_GROUP_INDEX),
        "link_dispersion_ps_nm_km": ("float", 17.0),
        "loss_db": ("float", 0.0),
        "sync_jitter": ("float", K.SYNC_JITTER),
        "local_offset": ("float", 0.0),
        "remote_offset": ("float", 0.0),
        "remote_drift": ("float", 0.0),
        "random_walk": ("float", 0.0),
        "referenced": ("bool", True),
        "bin_width": ("float", K.FOLD_BIN_WIDTH),
        "duration": ("float", 1.0),
        "local_dispersion_ps_nm": ("float", -268.5),
        "remote_efficiency": ("float", K.SNSPD_EFFICIENCY),
        "remote_jitter_fwhm": ("float", K.SNSPD_JITTER_FWHM),
        "sync_every": ("int", 76_000),
        "link_delay": ("ofloat", None),
    },
}

TOP_LEVEL = ("pipeline", "preset", "seed", "out")


def _convert(kind, raw, line):
    s = raw.strip()
    try:
        if kind == "float":
            return float(s)
        if kind == "ofloat":
            return None if s.lower() in ("none", "") else float(s)
        if kind == "int":
            v = float(s)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind == "bool":
            low = s.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if kind == "floats":
            return [float(p) for p in s.split(",") if p.strip()]
        return s
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {kind}", line) from None


def _format(kind, value):
    if value is None:
        return "none"
    if kind == "bool":
        return "true" if value else "false"
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind in ("float", "ofloat"):
        return repr(float(value))
    return str(value)


def defaults() -> dict:
    return {sec: {k: (list(v[1]) if isinstance(v[1], list) else v[1]) for k, v in keys.items()} for sec, keys in SCHEMA.items()}


@dataclass
class RunConfig:
    pipeline: str
    presets: tuple = ()
    seed: int = 0
    out: str = ""
    sections: dict = field(default_factory=defaults)
    warnings: list = field(default_factory=list, compare=False)

    def get(self, section, key):
        return self.sections[section][key]

    def canonical(self) -> dict:
        """Everything that determines the results (the output path does not)."""
        return {"pipeline": self.pipeline, "presets": list(self.presets), "seed": self.seed, "sections": self.sections}

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _check_delays(sections):
    syn = sections["synthesis"]
    direct = any(syn[k] is not None for k in ("dt_h", "dt_v", "dt_minus"))
    geom = syn["d1"] is not None or syn["d2"] is not None
    msgs = []
    if direct and geom:
        msgs.append("both delays and displacements given; displacements ignored")
    if syn["dt_minus"] is not None and (syn["dt_h"] is not None or syn["dt_v"] is not None):
        msgs.append("dt_minus given together with dt_h/dt_v; dt_h/dt_v win")
    if syn["phase"] is not None and (syn["d3"] is not None or syn["d3_scan"]):
        msgs.append("both phase and pump mirror displacement given; displacement ignored")
    return msgs


def parse_config(text: str, pipeline=None, presets=(), seed=None, out=None) -> RunConfig:
    """Parse configuration text; keyword arguments override top-level keys.

    Extra ``presets`` are applied after the ones named in the text.
    """
    top = {}
    explicit = {sec: {} for sec in SCHEMA}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        if section is None:
            if key not in TOP_LEVEL:
                raise ConfigError(f"unknown top-level key {key!r}", lineno)
            if key in top:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            top[key] = (value, lineno)
            continue
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in explicit[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        explicit[section][key] = _convert(SCHEMA[section][key][0], value, lineno)

    names = []
    if "preset" in top:
        v, ln = top["preset"]
        for name in (p.strip() for p in v.split(",")):
            if not name:
                continue
            if name not in PRESETS:
                raise ConfigError(f"unknown preset {name!r}", ln)
            names.append(name)
    for name in presets:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}")
        if name not in names:
            names.append(name)

    sections = defaults()
    suggested = None
    for name in names:
        p = PRESETS[name]
        suggested = p.get("pipeline", suggested)
        for sec, vals in p["values"].items():
            for k, v in vals.items():
                sections[sec][k] = list(v) if isinstance(v, list) else v
    for sec, vals in explicit.items():
        sections[sec].update(vals)

    if pipeline is None and "pipeline" in top:
        pipeline, ln = top["pipeline"]
        if pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {pipeline!r}; expected one of {', '.join(PIPELINES)}", ln)
    if pipeline is None:
        pipeline = suggested
    if pipeline is None:
        raise ConfigError("missing pipeline", 1 if text.strip() else None)
    if pipeline not in PIPELINES:
        raise ConfigError(f"unknown pipeline {pipeline!r}; expected one of {', '.join(PIPELINES)}")

    if seed is None:
        seed = _convert("int", top["seed"][0], top["seed"][1]) if "seed" in top else 0
    if out is None:
        out = top["out"][0] if "out" in top else f"runs/{pipeline}"

    cfg = RunConfig(pipeline, tuple(names), int(seed), out, sections)
    for msg in _check_delays(sections):
        cfg.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
    return cfg


def serialize(cfg: RunConfig) -> str:
    """Text form with every resolved value written out."""
    lines = [f"pipeline = {cfg.pipeline}"]
    if cfg.presets:
        lines.append(f"preset = {', '.join(cfg.presets)}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"out = {cfg.out}")
    for sec, keys in SCHEMA.items():
        lines.append("")
        lines.append(f"[{sec}]")
        for k, (kind, _) in keys.items():
            lines.append(f"{k} = {_format(kind, cfg.sections[sec][k])}")
    return "\n".join(lines) + "\n"
