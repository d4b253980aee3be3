"""Scenario files: per-pair reward specifications.

A scenario is a CSV file with a header, or a JSON list of objects (a JSON
object with a ``pairs`` list is also accepted). Each record has

* ``pair_id``: ``"x:y"`` (prompt x, response y, both 0-based) or a single
  integer y, meaning prompt 0;
* either ``a`` and ``b`` (interval oracle) or ``r_star`` and ``sigma2``
  (Gaussian/ensemble oracle). Every record in a file uses the same pair.

Every (prompt, response) cell of the rectangular table must appear exactly
once.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .config import ConfigError

INTERVAL_FIELDS = ("a", "b")
GAUSSIAN_FIELDS = ("r_star", "sigma2")


@dataclass(frozen=True, eq=False)
class Scenario:
    mode: str  # "interval" or "gaussian"
    first: np.ndarray  # a or r_star, shape (n_prompts, n_responses)
    second: np.ndarray  # b or sigma2

    @property
    def shape(self) -> tuple[int, int]:
        return self.first.shape


def _pair(raw) -> tuple[int, int]:
    text = str(raw).strip()
    if ":" in text:
        x, y = text.split(":", 1)
        return int(x), int(y)
    return 0, int(text)


def _records(path: str) -> list[dict]:
    if not os.path.isfile(path):
        raise ConfigError(f"scenario file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.lower().endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if isinstance(data, dict):
            data = data.get("pairs")
        if not isinstance(data, list):
            raise ConfigError(f"{path}: expected a list of pair records")
        return data
    return list(csv.DictReader(text.splitlines()))


def load_scenario(path: str) -> Scenario:
    recs = _records(path)
    if not recs:
        raise ConfigError(f"{path}: no pair records")
    keys = set(recs[0])
    if set(INTERVAL_FIELDS) <= keys:
        mode, fields = "interval", INTERVAL_FIELDS
    elif set(GAUSSIAN_FIELDS) <= keys:
        mode, fields = "gaussian", GAUSSIAN_FIELDS
    else:
        raise ConfigError(f"{path}: records need (a, b) or (r_star, sigma2)")
    allowed = {"pair_id", *fields}
    cells = {}
    for i, rec in enumerate(recs):
        extra = set(rec) - allowed
        if extra:
            raise ConfigError(f"{path}: record {i} has unknown fields {sorted(extra)}")
        try:
            x, y = _pair(rec["pair_id"])
            v1, v2 = float(rec[fields[0]]), float(rec[fields[1]])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: record {i} is malformed: {exc}") from exc
        if x < 0 or y < 0 or (x, y) in cells:
            raise ConfigError(f"{path}: pair {x}:{y} is invalid or repeated")
        cells[(x, y)] = (v1, v2)
    nx = 1 + max(x for x, _ in cells)
    ny = 1 + max(y for _, y in cells)
    if len(cells) != nx * ny:
        raise ConfigError(f"{path}: pairs do not fill a {nx}x{ny} table")
    first = np.empty((nx, ny))
    second = np.empty((nx, ny))
    for (x, y), (v1, v2) in cells.items():
        first[x, y], second[x, y] = v1, v2
    if not (np.all(np.isfinite(first)) and np.all(np.isfinite(second))):
        raise ConfigError(f"{path}: values must be finite")
    if mode == "gaussian" and np.any(second <= 0):
        raise ConfigError(f"{path}: sigma2 must be > 0")
    if mode == "interval" and np.any(first >= second):
        raise ConfigError(f"{path}: need a < b for every pair")
    return Scenario(mode, first, second)


def write_scenario(path: str, scenario: Scenario) -> None:
    fields = INTERVAL_FIELDS if scenario.mode == "interval" else GAUSSIAN_FIELDS
    nx, ny = scenario.shape
    if path.lower().endswith(".json"):
        recs = [{"pair_id": f"{x}:{y}", fields[0]: float(scenario.first[x, y]),
                 fields[1]: float(scenario.second[x, y])} for x in range(nx) for y in range(ny)]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(recs, fh, indent=1)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_id", *fields])
        for x in range(nx):
            for y in range(ny):
                w.writerow([f"{x}:{y}", repr(float(scenario.first[x, y])),
                            repr(float(scenario.second[x, y]))])
