"""Run configuration: defaults file, JSON schemas, model and profile shortcuts."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .errors import CTError

SCHEMA_VERSION = "1.0"


class ConfigError(CTError):
    """Invalid run configuration (exit code 2)."""


def _data(name: str) -> dict:
    return json.loads(resources.files("ctharm").joinpath("data", name).read_text())


def load_defaults() -> dict:
    return _data("defaults.json")


def config_schema() -> dict:
    return _data("config.schema.json")


def report_schema() -> dict:
    return _data("report.schema.json")


def workers() -> int:
    """Worker cap from CT_THREADS (default 1)."""
    raw = os.environ.get("CT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"CT_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("CT_THREADS must be >= 1")
    return n


MODEL_SHORTCUTS = {
    "h2": {"name": "hyperbolic", "n": 2},
    "h3": {"name": "hyperbolic", "n": 3},
    "h4": {"name": "hyperbolic", "n": 4},
}


def resolve_model(spec: Any) -> dict:
    """Model descriptor from a shortcut (h3, hyperbolic:5, dr:1,2), JSON file path or inline JSON."""
    if isinstance(spec, dict):
        return dict(spec)
    s = str(spec).strip()
    if s in MODEL_SHORTCUTS:
        return dict(MODEL_SHORTCUTS[s])
    if s.startswith("hyperbolic:"):
        return {"name": "hyperbolic", "n": int(s.split(":", 1)[1])}
    if s.startswith("dr:") or s.startswith("damek_ricci:"):
        p, q = (int(v) for v in s.split(":", 1)[1].split(","))
        return {"name": "damek_ricci", "p": p, "q": q}
    if s.startswith("{"):
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model JSON does not parse: {exc}") from exc
    path = Path(s)
    if path.is_file():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model file {s} is not valid JSON: {exc}") from exc
    raise ConfigError(f"unrecognised model {s!r}")


def parse_profile(spec: str) -> dict:
    """'bump:2' -> {'kind': 'bump', 's': 2}; also gauss:sigma,s and annulus:a,b."""
    kind, _, args = spec.partition(":")
    vals = [float(v) for v in args.split(",")] if args else []
    try:
        if kind == "bump":
            return {"kind": "bump", "s": vals[0] if vals else 1.0}
        if kind == "gauss":
            return {"kind": "gauss", "sigma": vals[0], "s": vals[1]}
        if kind == "annulus":
            return {"kind": "annulus", "a": vals[0], "b": vals[1]}
    except IndexError as exc:
        raise ConfigError(f"profile {spec!r} is missing parameters") from exc
    raise ConfigError(f"unknown profile {spec!r}")


@dataclass
class RunConfig:
    command: str
    model: dict
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0x5EED
    defaults: dict = field(default_factory=load_defaults, repr=False)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            jsonschema.validate(raw, config_schema())
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid run configuration: {exc.message}") from exc
        raw = copy.deepcopy(raw)
        raw["model"] = resolve_model(raw["model"])
        return cls(**raw)

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, self.defaults["tolerances"][key]))

    def section(self, name: str) -> dict:
        out = dict(self.defaults[name])
        for k, v in self.grid.items():
            if k in out:
                out[k] = v
        return out
