"""Experiment configuration: a TOML document with one flat table per module.

Every key has a type, a default and a range; unknown tables or keys are
rejected by name and TOML syntax errors report their line and column.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "SCHEMA", "SECTIONS_FOR", "validate_config",
           "load_config", "defaults_table"]

KINDS = ("mc-kinetic-3w", "mc-kinetic-4w", "perturbation-scaling", "onemode-pdf", "pbp-triad", "kz-flux-scan")


class ConfigError(ValueError):
    """Invalid configuration; ``line``/``column`` are set for syntax errors."""

    def __init__(self, message, line=None, column=None, key=None):
        super().__init__(message)
        self.line, self.column, self.key = line, column, key


@dataclass(frozen=True)
class Key:
    kind: type
    default: Any
    lo: float = -math.inf
    hi: float = math.inf
    choices: tuple = ()
    open_lo: bool = False
    doc: str = ""


_INF = math.inf
SCHEMA = {
    "experiment": {
        "kind": Key(str, None, choices=KINDS, doc="experiment to run"),
        "seed": Key(int, 0, 0, 2**63 - 1, doc="master seed"),
        "output": Key(str, "results", doc="output directory"),
        "reproducible": Key(bool, True, doc="order-fixed merging and a fixed seed"),
        "workers": Key(int, 1, 1, 256, doc="worker processes for ensembles"),
    },
    "lattice": {
        "d": Key(int, 2, 1, 3, doc="dimension"),
        "n_side": Key(int, 8, 2, 256, doc="modes per side"),
        "L": Key(float, 2 * math.pi, 0, _INF, open_lo=True, doc="box size"),
    },
    "system": {
        "kind": Key(str, "capillary", choices=("capillary", "rossby", "nls"), doc="wave system"),
        "epsilon": Key(float, 0.05, 0, 1, open_lo=True, doc="nonlinearity"),
        "sigma": Key(float, 1.0, 0, _INF, open_lo=True, doc="surface tension (capillary)"),
        "beta": Key(float, 1.0, 0, _INF, open_lo=True, doc="beta-plane gradient (Rossby)"),
        "rho": Key(float, 1.0, 0, _INF, doc="deformation radius (Rossby)"),
    },
    "ensemble": {
        "R": Key(int, 1000, 2, 10**7, doc="realizations"),
        "law": Key(str, "rayleigh", choices=("rayleigh", "deterministic-level"), doc="amplitude law"),
        "antithetic": Key(bool, True, doc="pair each realization with its sign flip"),
        "controls": Key(bool, True, doc="initial-intensity control variates"),
    },
    "spectrum": {
        "amplitude": Key(float, 1.0, 0, _INF, open_lo=True, doc="peak spectrum"),
        "width": Key(float, 1.2, 0, _INF, open_lo=True, doc="Gaussian width in k"),
    },
    "time": {
        "T": Key(float, 5.0, 0, _INF, open_lo=True, doc="window length"),
        "dt_fraction": Key(float, 1.0, 0, 1, open_lo=True, doc="step as a fraction of the resolution bound"),
    },
    "kinetics": {
        "quantile": Key(float, 0.75, 0, 1, doc="rate quantile defining checked modes"),
        "tolerance": Key(float, 0.2, 0, _INF, open_lo=True, doc="relative tolerance"),
    },
    "perturbation": {
        "epsilons": Key(list, [0.02, 0.04, 0.08], doc="nonlinearity values (>= 2, positive)"),
        "amplitude": Key(float, 1.0, 0, _INF, open_lo=True, doc="r.m.s. amplitude"),
        "T": Key(float, 1.0, 0, _INF, open_lo=True, doc="expansion time"),
        "dt_fraction": Key(float, 0.25, 0, 1, open_lo=True, doc="step fraction"),
    },
    "onemode": {
        "n": Key(float, 1.0, 0, _INF, open_lo=True, doc="spectrum"),
        "eta": Key(float, 1.0, 0, _INF, open_lo=True, doc="gain rate"),
        "F": Key(float, -0.01, doc="constant flux"),
        "s_cut": Key(float, 30.0, 0, _INF, open_lo=True, doc="breaking intensity"),
        "cells": Key(int, 400, 2, 10**6, doc="grid cells"),
    },
    "pbp": {
        "omega_q": Key(float, 1.0, 0, _INF, open_lo=True, doc="first daughter frequency"),
        "omega_r": Key(float, 1.5, 0, _INF, open_lo=True, doc="second daughter frequency"),
        "V": Key(float, 1.0, doc="coupling"),
        "epsilon": Key(float, 0.1, 0, 1, open_lo=True, doc="nonlinearity"),
        "delta_weight": Key(float, 1.0, 0, _INF, open_lo=True, doc="resonance weight"),
        "cells": Key(list, [48, 96], doc="refinement levels (cells per mode)"),
        "domain": Key(float, 20.0, 0, _INF, open_lo=True, doc="grid extent in units of n"),
        "marginal_domain": Key(float, 12.0, 0, _INF, open_lo=True, doc="extent for the marginal check"),
        "form": Key(str, "printed", choices=("printed", "peierls"), doc="flux gauge"),
        "memory_mb": Key(float, 2048.0, 1, _INF, doc="grid memory budget"),
    },
    "scan": {
        "strengths": Key(list, [0.0, 0.1, 0.2, 0.4, 0.6], doc="departures from equipartition"),
        "cells": Key(int, 48, 4, 256, doc="cells per mode"),
        "domain": Key(float, 20.0, 0, _INF, open_lo=True, doc="grid extent in units of n"),
    },
}

SECTIONS_FOR = {
    "mc-kinetic-3w": ("experiment", "lattice", "system", "ensemble", "spectrum", "time", "kinetics"),
    "mc-kinetic-4w": ("experiment", "lattice", "system", "ensemble", "spectrum", "time", "kinetics"),
    "perturbation-scaling": ("experiment", "lattice", "system", "perturbation"),
    "onemode-pdf": ("experiment", "onemode"),
    "pbp-triad": ("experiment", "pbp"),
    "kz-flux-scan": ("experiment", "pbp", "scan"),
}

# keys that do not affect results
_NOT_HASHED = ("output", "workers")

# per-kind overrides of the generic defaults
KIND_DEFAULTS = {
    "mc-kinetic-4w": {"system": {"kind": "nls", "epsilon": 0.05}, "lattice": {"n_side": 6}, "ensemble": {"R": 200}},
    "perturbation-scaling": {"lattice": {"d": 1, "n_side": 32}, "experiment": {"seed": 1}},
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    sections: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.sections[section][key]

    @property
    def seed(self) -> int:
        return self.sections["experiment"]["seed"]

    def canonical(self) -> str:
        """Stable JSON of everything that can change results (output path and worker count excluded)."""
        sec = json.loads(json.dumps(self.sections))
        for key in _NOT_HASHED:
            sec["experiment"].pop(key, None)
        return json.dumps({"kind": self.kind, "sections": sec}, sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_overrides(self, **experiment) -> "ExperimentConfig":
        sec = json.loads(json.dumps(self.sections))
        for k, v in experiment.items():
            if v is not None:
                sec["experiment"][k] = _check(("experiment", k), SCHEMA["experiment"][k], v)
        return ExperimentConfig(self.kind, sec)


def _check(path, spec: Key, value):
    name = ".".join(path)
    if spec.kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if spec.kind is list:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{name} must be a non-empty array", key=name)
        return _check_list(name, value)
    if spec.kind is int and isinstance(value, bool) or not isinstance(value, spec.kind):
        raise ConfigError(f"{name} must be of type {spec.kind.__name__}, got {type(value).__name__}", key=name)
    if spec.choices and value not in spec.choices:
        raise ConfigError(f"{name}={value!r} is not one of {list(spec.choices)}", key=name)
    if spec.kind in (int, float):
        if not math.isfinite(value):
            raise ConfigError(f"{name} must be finite", key=name)
        below = value <= spec.lo if spec.open_lo else value < spec.lo
        if below or value > spec.hi:
            lo = "(" if spec.open_lo else "["
            raise ConfigError(f"{name}={value} is out of range {lo}{spec.lo}, {spec.hi}]", key=name)
    return value


def _check_list(name, value):
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{name} entries must be finite numbers", key=name)
    if name == "perturbation.epsilons":
        if len(value) < 2 or any(v <= 0 or v > 1 for v in value):
            raise ConfigError(f"{name} needs at least two values in (0, 1]", key=name)
        return [float(v) for v in value]
    if name == "pbp.cells":
        if any(not isinstance(v, int) or v < 4 or v > 256 for v in value):
            raise ConfigError(f"{name} entries must be integers in [4, 256]", key=name)
        if len(value) < 2:
            raise ConfigError(f"{name} needs at least two refinement levels", key=name)
        return [int(v) for v in value]
    if name == "scan.strengths":
        if any(v < 0 or v >= 1 for v in value):
            raise ConfigError(f"{name} entries must lie in [0, 1)", key=name)
        return [float(v) for v in value]
    return list(value)


_POS = re.compile(r"\(at line (\d+), column (\d+)\)")


def validate_config(raw: str) -> ExperimentConfig:
    """Parse, default and range-check a configuration document."""
    try:
        doc = tomllib.loads(raw)
    except tomllib.TOMLDecodeError as exc:
        m = _POS.search(str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        where = f" at line {line}, column {col}" if m else ""
        raise ConfigError(f"parse error{where}: {_POS.sub('', str(exc)).strip()}", line, col) from None
    exp = doc.get("experiment")
    if not isinstance(exp, dict) or "kind" not in exp:
        raise ConfigError("missing required key experiment.kind", key="experiment.kind")
    kind = _check(("experiment", "kind"), SCHEMA["experiment"]["kind"], exp["kind"])
    allowed = SECTIONS_FOR[kind]
    for sec, body in doc.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section {sec!r}", key=sec)
        if not isinstance(body, dict):
            raise ConfigError(f"{sec!r} must be a table", key=sec)
        if sec not in allowed:
            raise ConfigError(f"section {sec!r} is not used by experiment kind {kind}", key=sec)
        for key in body:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in section [{sec}]", key=f"{sec}.{key}")
    sections = {}
    for sec in allowed:
        over = KIND_DEFAULTS.get(kind, {}).get(sec, {})
        body = doc.get(sec, {})
        out = {}
        for key, spec in SCHEMA[sec].items():
            if key in body:
                out[key] = _check((sec, key), spec, body[key])
            else:
                out[key] = over.get(key, spec.default)
        sections[sec] = out
    if kind == "mc-kinetic-3w" and sections["system"]["kind"] == "nls":
        raise ConfigError("system.kind='nls' is four-wave; mc-kinetic-3w needs capillary or rossby",
                          key="system.kind")
    if kind == "mc-kinetic-4w" and sections["system"]["kind"] != "nls":
        raise ConfigError("mc-kinetic-4w needs system.kind='nls'", key="system.kind")
    if kind.startswith("mc-kinetic") and sections["ensemble"]["antithetic"] and sections["ensemble"]["R"] % 2:
        raise ConfigError("ensemble.R must be even for antithetic ensembles", key="ensemble.R")
    return ExperimentConfig(kind, sections)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return validate_config(fh.read())


def defaults_table() -> str:
    """Markdown table of every key, its default and its range."""
    lines = ["| key | default | range | meaning |", "|---|---|---|---|"]
    for sec, keys in SCHEMA.items():
        for key, spec in keys.items():
            if spec.choices:
                rng = " / ".join(map(str, spec.choices))
            elif spec.kind in (int, float):
                rng = f"{'(' if spec.open_lo else '['}{spec.lo:g}, {spec.hi:g}]"
            else:
                rng = ""
            default = "required" if spec.default is None else spec.default
            lines.append(f"| {sec}.{key} | {default} | {rng} | {spec.doc} |")
    return "\n".join(lines)
