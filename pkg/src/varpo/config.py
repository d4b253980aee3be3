"""Experiment configuration: INI-style files, strict schemas, canonical hashing.

A config file has an optional ``[run]`` section (seed, trials, format, out,
project_simplex) and one section per experiment::

    [run]
    seed = 7

    [bandit3]
    epsilon = 0.01
    sigma = 1.5, 0.4, 0.3

Unknown sections and unknown keys are errors. Command-line flags override
``[run]`` values.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(v)) if float(v).is_integer() else _bad_int(v) for v in _floats(text)]


def _bad_int(v):
    raise ValueError(f"{v} is not an integer")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _auto_float(text: str):
    t = text.strip().lower()
    return None if t in ("", "auto") else float(t)


PARSERS = {
    "int": lambda s: int(s.strip()),
    "float": lambda s: float(s.strip()),
    "floats": _floats,
    "ints": _ints,
    "str": lambda s: s.strip(),
    "path": lambda s: s.strip(),
    "bool": _bool,
    "auto_float": _auto_float,
}

EXPERIMENTS = ("bandit3", "risk", "fig-distribution", "rlhf-sim", "coverage", "stats-report")

# key -> (kind, default)
SCHEMAS: dict[str, dict[str, tuple[str, Any]]] = {
    "bandit3": {
        "r_star": ("floats", [1.0, 1.8, 1.65]),
        "sigma": ("floats", [1.5, 0.4, 0.3]),
        "epsilon": ("float", 0.01),
        "epsilon_grid": ("floats", [0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0]),
        "band_low": ("float", 0.34),
        "band_high": ("float", 0.44),
        "bins": ("int", 40),
        "scenario": ("path", ""),
    },
    "risk": {
        "epsilon": ("float", 0.01),
        "scenarios": ("int", 20),
        "suite_seed": ("int", 2024),
        "scenario": ("path", ""),
    },
    "fig-distribution": {
        "n": ("int", 16),
        "range_high": ("floats", [3.0, 100.0]),
        "range_low": ("floats", [3.0, 10.0]),
        "epsilon": ("float", 0.01),
        "bins": ("int", 30),
    },
    "rlhf-sim": {
        "population": ("int", 80),
        "range_max": ("float", 100.0),
        "ranges": ("floats", [100.0, 50.0, 20.0, 10.0]),
        "eval_prompts": ("int", 512),
        "iterations": ("int", 2000),
        "batch_size": ("int", 64),
        "learning_rate": ("float", 0.5),
        "gradient_mode": ("str", "exact"),
        "reward_noise": ("str", "persistent"),
        "tilt_scale": ("float", 2.0),
        "kl_coef": ("auto_float", None),
        "variance_scale": ("auto_float", None),
        "env_seed": ("int", 123),
        "n_prompts": ("int", 8),
        "n_responses": ("int", 6),
        "spread": ("float", 0.007),
        "min_width": ("float", 5.0),
        "width_low": ("float", 0.02),
        "width_high": ("float", 0.8),
        "alpha": ("float", 0.05),
        "scenario": ("path", ""),
        "population_out": ("path", ""),
    },
    "coverage": {
        "n": ("int", 9),
        "deltas": ("floats", [0.05, 0.1]),
        "betas": ("floats", []),
        "sigma2_low": ("float", 0.1),
        "sigma2_high": ("float", 10.0),
    },
    "stats-report": {
        "n": ("int", 80),
        "alpha": ("float", 0.05),
    },
}

DEFAULT_TRIALS = {
    "bandit3": 100_000,
    "risk": 100_000,
    "fig-distribution": 1000,
    "rlhf-sim": 1,
    "coverage": 10_000,
    "stats-report": 1,
}

RUN_KEYS = {
    "seed": ("int", 0),
    "trials": ("int", None),
    "format": ("str", "csv"),
    "out": ("path", ""),
    "project_simplex": ("bool", False),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    trials: int = 1
    output_path: str = ""
    format: str = "csv"
    project_simplex: bool = False
    params: dict = field(default_factory=dict)

    def canonical(self) -> dict:
        """Everything that can change results (the output path cannot)."""
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "trials": self.trials,
            "project_simplex": self.project_simplex,
            "params": {k: self.params[k] for k in sorted(self.params)},
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_section(section: str, items, schema) -> dict:
    out = {}
    for key, raw in items:
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        kind, _ = schema[key]
        try:
            out[key] = PARSERS[kind](raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return out


def read_config_file(path: str) -> tuple[dict, dict]:
    """Return ({run keys}, {experiment: {keys}}) parsed from ``path``."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    run: dict = {}
    sections: dict = {}
    for name in cp.sections():
        if name == "run":
            run = _parse_section(name, cp.items(name), RUN_KEYS)
        elif name in SCHEMAS:
            sections[name] = _parse_section(name, cp.items(name), SCHEMAS[name])
        else:
            raise ConfigError(f"unknown section [{name}]")
    return run, sections


def build_config(
    experiment: str,
    config_path: str | None = None,
    seed: int | None = None,
    trials: int | None = None,
    out: str | None = None,
    fmt: str | None = None,
    project_simplex: bool | None = None,
    overrides: dict | None = None,
) -> ExperimentConfig:
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    run, sections = read_config_file(config_path) if config_path else ({}, {})
    params = {k: v for k, (_, v) in SCHEMAS[experiment].items()}
    params.update(sections.get(experiment, {}))
    for key, value in (overrides or {}).items():
        if key not in SCHEMAS[experiment]:
            raise ConfigError(f"unknown key {key!r} for {experiment}")
        params[key] = value
    seed = run.get("seed", 0) if seed is None else seed
    trials = run.get("trials") if trials is None else trials
    trials = DEFAULT_TRIALS[experiment] if trials is None else trials
    fmt = run.get("format", "csv") if fmt is None else fmt
    out = run.get("out", "") if out is None else out
    proj = run.get("project_simplex", False) if project_simplex is None else project_simplex
    cfg = ExperimentConfig(experiment, int(seed), int(trials), out, fmt, bool(proj), params)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    p = cfg.params
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    for key, (kind, _) in SCHEMAS[cfg.experiment].items():
        v = p[key]
        if kind == "int" and v < 1 and key not in ("env_seed", "suite_seed"):
            raise ConfigError(f"{key} must be >= 1")
        if kind == "float" and not math.isfinite(v):
            raise ConfigError(f"{key} must be finite")
        if kind == "path" and v and key not in ("population_out",) and not os.path.isfile(v):
            raise ConfigError(f"{key}: file not found: {v}")
    e = cfg.experiment
    if e == "bandit3":
        if len(p["r_star"]) != len(p["sigma"]) or not p["r_star"]:
            raise ConfigError("r_star and sigma must have the same nonzero length")
        if any(s <= 0 for s in p["sigma"]) or p["epsilon"] <= 0:
            raise ConfigError("sigma and epsilon must be > 0")
        if any(x <= 0 for x in p["epsilon_grid"]):
            raise ConfigError("epsilon_grid entries must be > 0")
        if not 0 <= p["band_low"] < p["band_high"] <= 1:
            raise ConfigError("need 0 <= band_low < band_high <= 1")
    elif e == "risk":
        if p["epsilon"] <= 0:
            raise ConfigError("epsilon must be > 0")
    elif e == "fig-distribution":
        for key in ("range_high", "range_low"):
            r = p[key]
            if len(r) != 2 or not (0 < r[0] < r[1]):
                raise ConfigError(f"{key} must be 'lo, hi' with 0 < lo < hi")
        if p["epsilon"] <= 0:
            raise ConfigError("epsilon must be > 0")
    elif e == "rlhf-sim":
        if p["population"] < 2:
            raise ConfigError("population must be >= 2")
        if p["gradient_mode"] not in ("exact", "stochastic"):
            raise ConfigError("gradient_mode must be exact or stochastic")
        if p["reward_noise"] not in ("persistent", "fresh"):
            raise ConfigError("reward_noise must be persistent or fresh")
        if p["range_max"] <= 1 or any(r <= 1 for r in p["ranges"]):
            raise ConfigError("reward ranges must exceed 1")
        if p["learning_rate"] < 0 or p["tilt_scale"] <= 0:
            raise ConfigError("learning_rate must be >= 0 and tilt_scale > 0")
        for key in ("kl_coef", "variance_scale"):
            if p[key] is not None and not p[key] > 0:
                raise ConfigError(f"{key} must be > 0 or auto")
        if p["n_responses"] % 2:
            raise ConfigError("n_responses must be even")
        if not 0 < p["alpha"] < 1:
            raise ConfigError("alpha must lie in (0, 1)")
    elif e == "coverage":
        if not p["deltas"] and not p["betas"]:
            raise ConfigError("give deltas or betas")
        if any(not 0 < d < 1 for d in p["deltas"]) or any(b <= 0 for b in p["betas"]):
            raise ConfigError("deltas must lie in (0, 1) and betas be > 0")
        if not 0 < p["sigma2_low"] < p["sigma2_high"]:
            raise ConfigError("need 0 < sigma2_low < sigma2_high")
    elif e == "stats-report":
        if p["n"] < 2 or not 0 < p["alpha"] < 1:
            raise ConfigError("need n >= 2 and alpha in (0, 1)")
