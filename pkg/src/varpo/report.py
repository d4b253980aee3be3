"""Report records and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = ("experiment", "metric", "value", "std_error", "n", "seed")
HIST_HEADER = ("bin_left", "bin_right", "count")
EXACT = "exact"


@dataclass
class Row:
    metric: str
    value: object
    std_error: float | None = None  # None means the value is exact
    n: int = 1


@dataclass
class ReportRecord:
    experiment: str
    config_hash: str
    seed: int
    rows: list = field(default_factory=list)
    histograms: dict = field(default_factory=dict)

    def add(self, metric: str, value, std_error: float | None = None, n: int = 1) -> None:
        self.rows.append(Row(metric, value, std_error, int(n)))

    def add_histogram(self, name: str, values, edges) -> None:
        counts, edges = np.histogram(np.asarray(values), bins=np.asarray(edges))
        self.histograms[name] = (edges, counts)

    def value(self, metric: str):
        for r in self.rows:
            if r.metric == metric:
                return r.value
        raise KeyError(metric)

    def metrics(self) -> dict:
        return {r.metric: r.value for r in self.rows}


def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return "NA"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else fmt_value(v)
    return v


def to_csv(report: ReportRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerow([report.experiment, "config_hash", report.config_hash, EXACT, 1, report.seed])
    for r in report.rows:
        se = EXACT if r.std_error is None else fmt_value(r.std_error)
        w.writerow([report.experiment, r.metric, fmt_value(r.value), se, r.n, report.seed])
    return buf.getvalue()


def to_json(report: ReportRecord) -> str:
    records = [{"experiment": report.experiment, "metric": "config_hash",
                "value": report.config_hash, "std_error": EXACT, "n": 1, "seed": report.seed}]
    for r in report.rows:
        records.append({
            "experiment": report.experiment,
            "metric": r.metric,
            "value": _json_value(r.value),
            "std_error": EXACT if r.std_error is None else _json_value(r.std_error),
            "n": r.n,
            "seed": report.seed,
        })
    doc = {"experiment": report.experiment, "config_hash": report.config_hash,
           "seed": report.seed, "records": records}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def histogram_csv(edges, counts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HIST_HEADER)
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        w.writerow([fmt_value(float(lo)), fmt_value(float(hi)), int(c)])
    return buf.getvalue()


def histogram_path(out: str, name: str) -> str:
    root, _ = os.path.splitext(out)
    return f"{root}.{name}.hist.csv"


def write_report(report: ReportRecord, out: str, fmt: str) -> list[str]:
    """Write the report (and one file per histogram); return written paths."""
    text = to_csv(report) if fmt == "csv" else to_json(report)
    paths = []
    if not out:
        print(text, end="")
    else:
        parent = os.path.dirname(os.path.abspath(out))
        os.makedirs(parent, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(out)
        for name in sorted(report.histograms):
            edges, counts = report.histograms[name]
            p = histogram_path(out, name)
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write(histogram_csv(edges, counts))
            paths.append(p)
    return paths
