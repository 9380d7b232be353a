"""Experiment configuration: schema, validation, canonical serialisation and hashing."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import ConfigInvalid

REQUIRED = object()

_CONT = {"c0": 1.0, "ell": 1.0, "hbar": 1.0, "v": 1.0}
_STATE_KEYS = {"kind", "sigma_p_cm", "sigma_x_rel", "x_L", "x_R", "phi"}
_LAT_STATE_KEYS = _STATE_KEYS | {"p_tilt", "x0"}
_HALDANE = {"t1": 1.0, "t2": 0.2, "phi": -math.pi / 2, "ny": 6}

# experiment -> (engine, parameter defaults); REQUIRED marks keys without defaults
SCHEMA: dict[str, tuple[str, dict]] = {
    "paper_case": ("continuum", {"case": REQUIRED, "t": None, "dr": None, "points_per_period": 33}),
    "influence_map": ("continuum", {**_CONT, "slice": "rel", "t": 25.0, "extent": 20.0, "n": 201,
                                    "fixed": None}),
    "evolve_slice": ("continuum", {**_CONT, "case": None, "state": None, "slice": "rel", "t": 25.0,
                                   "extent": 20.0, "n": 201, "fixed": None, "frame": "comoving"}),
    "momentum": ("continuum", {**_CONT, "case": None, "state": None, "t": 25.0, "dr": None,
                               "points_per_period": 33}),
    "criterion": ("continuum", {**_CONT, "case": None, "state": None, "t": 25.0, "dr": None,
                                "points_per_period": 33}),
    "oracle_compare": ("oracle", {**_CONT, "t": 10.0, "n_realizations": 10000, "n_tuples": 20,
                                  "tuple_seed": 2024}),
    "bands": ("haldane", {**_HALDANE, "n_path": 301}),
    "edge_dispersion": ("haldane", {**_HALDANE, "n_p": 257}),
    "lattice_run": ("haldane", {**_HALDANE, "W": 1.5, "nx": 128, "n_realizations": 100, "t": None,
                                "travel": 50.0, "state": None}),
    "noon_run": ("haldane", {**_HALDANE, "W": 1.5, "nx": 128, "n_realizations": 100, "t": None,
                             "travel": 5.0, "state": None}),
}
TOP_KEYS = {"engine", "experiment", "parameters", "output", "master_seed", "config_hash"}
OUTPUT_KEYS = {"path", "format"}


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    engine: str = ""
    output: dict = field(default_factory=lambda: {"path": ".", "format": "json"})
    master_seed: int = 0

    def to_dict(self) -> dict:
        return {"engine": self.engine, "experiment": self.experiment, "master_seed": self.master_seed,
                "output": dict(self.output), "parameters": copy.deepcopy(self.parameters)}

    def hash(self) -> str:
        """Hash of the physics-relevant content (output location excluded)."""
        d = self.to_dict()
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _check_state(block, lattice: bool):
    if block is None:
        return None
    if not isinstance(block, dict):
        raise ConfigInvalid("'state' must be a mapping")
    allowed = _LAT_STATE_KEYS if lattice else _STATE_KEYS
    unknown = set(block) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown state key(s): {', '.join(sorted(unknown))}")
    return dict(block)


def validate(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigInvalid("configuration must be a mapping")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigInvalid(f"unknown key(s): {', '.join(sorted(unknown))}")
    if "experiment" not in raw:
        raise ConfigInvalid("missing required key 'experiment'")
    exp = raw["experiment"]
    if exp not in SCHEMA:
        raise ConfigInvalid(f"unknown experiment {exp!r}; expected one of {sorted(SCHEMA)}")
    engine, defaults = SCHEMA[exp]
    if raw.get("engine", engine) != engine:
        raise ConfigInvalid(f"experiment {exp!r} runs on engine {engine!r}, not {raw['engine']!r}")
    params = raw.get("parameters", {}) or {}
    if not isinstance(params, dict):
        raise ConfigInvalid("'parameters' must be a mapping")
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigInvalid(f"unknown parameter(s) for {exp}: {', '.join(sorted(unknown))}")
    merged = {}
    for key, default in defaults.items():
        if key in params:
            merged[key] = params[key]
        elif default is REQUIRED:
            raise ConfigInvalid(f"missing required key '{key}'")
        else:
            merged[key] = default
    if "state" in merged:
        merged["state"] = _check_state(merged["state"], engine == "haldane")
    if engine == "continuum" and exp != "influence_map" and "case" in merged:
        if merged["case"] is None and merged["state"] is None:
            raise ConfigInvalid("missing required key 'case' (or a 'state' block)")
    out = raw.get("output", {}) or {}
    if set(out) - OUTPUT_KEYS:
        raise ConfigInvalid(f"unknown output key(s): {', '.join(sorted(set(out) - OUTPUT_KEYS))}")
    out = {"path": str(out.get("path", ".")), "format": out.get("format", "json")}
    if out["format"] not in ("csv", "json"):
        raise ConfigInvalid("output format must be 'csv' or 'json'")
    seed = raw.get("master_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigInvalid("master_seed must be a non-negative integer")
    cfg = ExperimentConfig(exp, merged, engine, out, seed)
    # serialised configs carry their hash; a stale one means the file was edited
    if "config_hash" in raw and raw["config_hash"] != cfg.hash():
        raise ConfigInvalid(f"config_hash {raw['config_hash']!r} does not match content ({cfg.hash()})")
    return cfg


def parse(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    return validate(raw)


def serialize(cfg: ExperimentConfig) -> str:
    return json.dumps({**cfg.to_dict(), "config_hash": cfg.hash()}, sort_keys=True, indent=2) + "\n"


def parse_value(text: str):
    """Interpret a --set value as JSON when possible, else as a bare string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text
