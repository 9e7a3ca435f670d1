"""Experiment configuration: JSON documents validated against a versioned schema."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import channels
from .errors import ConfigInvalid

SCHEMA_VERSION = "ccqlab/1"
KINDS = ("info", "resolve", "wiretap", "advantage", "lemmas", "sweep")

_channel_ref = {
    "type": "object",
    "properties": {
        "preset": {"type": "string"},
        "params": {"type": "object"},
        "file": {"type": "string"},
        "states": {"type": "array"},
        "kernel": {"type": "array"},
        "dim": {"type": "integer"},
        "input_size": {"type": "integer"},
        "kind": {"type": "string"},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["schema", "kind", "trials", "master_seed"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "kind": {"enum": list(KINDS)},
        "channel": _channel_ref,
        "legit_channel": _channel_ref,
        "P": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "n": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "rates": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "rate_tilde": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "M": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "alphas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "thresholds": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "decoder_threshold": {"type": "number", "exclusiveMinimum": 0},
        "ell": {"type": "integer", "minimum": 1},
        "priors": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "threads": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
    },
}

DEFAULTS = {
    "channel": {"preset": "orthogonal"},
    "n": [2],
    "threads": 1,
    "priors": 5,
    "ell": 4,
}


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


@dataclass
class ExperimentConfig:
    raw: dict

    def __getitem__(self, key):
        return self.raw[key]

    def get(self, key, default=None):
        return self.raw.get(key, default)

    @property
    def kind(self) -> str:
        return self.raw["kind"]

    @property
    def trials(self) -> int:
        return self.raw["trials"]

    @property
    def master_seed(self) -> int:
        return self.raw["master_seed"]

    @property
    def n_grid(self) -> list:
        return list(self.raw["n"])

    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def cq_channel(self) -> channels.CqChannel:
        ch = load_channel_ref(self.raw["channel"])
        if not isinstance(ch, channels.CqChannel):
            raise ConfigInvalid({"channel": "expected a cq channel"})
        return ch

    def legit_channel(self) -> channels.ClassicalChannel:
        ref = self.raw.get("legit_channel")
        if ref is None:
            raise ConfigInvalid({"legit_channel": "required for this experiment kind"})
        ch = load_channel_ref(ref)
        if not isinstance(ch, channels.ClassicalChannel):
            raise ConfigInvalid({"legit_channel": "expected a classical channel"})
        return ch

    def distribution(self, size: int) -> np.ndarray:
        p = self.raw.get("P")
        if p is None:
            return channels.uniform(size)
        try:
            p = channels.as_distribution(p, "P")
        except ValueError as exc:
            raise ConfigInvalid({"P": str(exc)}) from exc
        if p.size != size:
            raise ConfigInvalid({"P": f"has {p.size} entries, channel input alphabet has {size}"})
        return p


def load_channel_ref(ref: dict):
    if "preset" in ref:
        name, params = ref["preset"], ref.get("params", {})
        try:
            if name.lower() in ("bsc", "identity"):
                return channels.classical_preset(name, **params)
            return channels.cq_preset(name, **params)
        except (KeyError, TypeError) as exc:
            raise ConfigInvalid({"preset": str(exc)}) from exc
    if "file" in ref:
        return channels.load_channel(ref["file"])
    return channels.channel_from_json(ref)


def validate(raw: dict) -> ExperimentConfig:
    """Fill defaults, validate against ``SCHEMA`` and cross-check fields."""
    raw = {**copy.deepcopy(DEFAULTS), **copy.deepcopy(raw)}
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = {_path(e): e.message for e in sorted(validator.iter_errors(raw), key=lambda e: e.path)}
    if errors:
        raise ConfigInvalid(errors)
    cfg = ExperimentConfig(raw)
    problems = {}
    try:
        d = cfg.cq_channel()
    except ConfigInvalid as exc:
        problems.update(exc.errors)
        d = None
    except (ValueError, OSError) as exc:
        problems["channel"] = str(exc)
        d = None
    if d is not None:
        from .linalg import max_dim

        for n in cfg.n_grid:
            if d.dim ** n > max_dim():
                problems["n"] = f"(d={d.dim}, n={n}) gives dimension {d.dim ** n} > max_dim {max_dim()}"
        try:
            cfg.distribution(d.input_size)
        except ConfigInvalid as exc:
            problems.update(exc.errors)
    if cfg.kind in ("resolve", "sweep") and "rates" not in raw and "M" not in raw:
        problems["rates"] = "resolve/sweep need 'rates' or 'M'"
    if cfg.kind in ("wiretap", "advantage"):
        for key in ("legit_channel", "rates", "rate_tilde"):
            if key not in raw:
                problems[key] = f"required for kind={cfg.kind}"
    if problems:
        raise ConfigInvalid(problems)
    return cfg


def load(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid({"<file>": f"not valid JSON: {exc}"}) from exc
