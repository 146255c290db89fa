"""Artifact writers: fixed-schema CSVs and the JSON run report.

Every file is written to a temporary sibling and renamed into place, so a
reader never sees a partial artifact at the final path.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .estimators import CSV_FIELDS, EstimateRecord

SERIES_FIELDS = ("graph", "origin", "k", "value", "kind")
REPLICA_FIELDS = ("replica", "n", "statistic", "value")


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(fields: Iterable[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def estimates_csv(records: Iterable[EstimateRecord]) -> str:
    return csv_text(CSV_FIELDS, (r.row() for r in records))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, EstimateRecord):
        return _jsonable(obj.to_json())
    if isinstance(obj, Path):
        return str(obj)
    return obj


class RunReport:
    """Collects records, residuals and counters; the single serialization point."""

    def __init__(self, config_echo: dict, config_hash: str):
        self.config = config_echo
        self.config_hash = config_hash
        self.records: list[EstimateRecord] = []
        self.residuals: dict = {}
        self.quality: dict = {"clipped_f": 0, "floor_violations": 0, "excluded_pairs": 0}
        self.timings: dict = {}
        self.sections: dict = {}
        self.series_rows: list[dict] = []
        self.replica_rows: list[dict] = []
        self._t0 = None

    def phase(self, name: str):
        report = self

        class _Timer:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                report.timings[name] = report.timings.get(name, 0.0) + time.perf_counter() - self.t
                return False

        return _Timer()

    def add(self, records):
        self.records.extend(records)

    def to_json(self) -> dict:
        return _jsonable({
            "header": {
                "artifact_version": __version__,
                "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "config_hash": self.config_hash,
            },
            "config": self.config,
            "estimates": self.records,
            "residuals": self.residuals,
            "data_quality": self.quality,
            "timings": self.timings,
            **self.sections,
        })

    def write(self, outdir, prefix: str = "", formats=("csv", "json")) -> list[Path]:
        outdir = Path(outdir)
        written = []
        if "csv" in formats:
            written.append(atomic_write(outdir / f"{prefix}estimates.csv", estimates_csv(self.records)))
            if self.series_rows:
                written.append(atomic_write(outdir / f"{prefix}series.csv", csv_text(SERIES_FIELDS, self.series_rows)))
            if self.replica_rows:
                written.append(atomic_write(outdir / f"{prefix}replicas.csv", csv_text(REPLICA_FIELDS, self.replica_rows)))
        if "json" in formats:
            written.append(atomic_write(outdir / f"{prefix}report.json", json.dumps(self.to_json(), indent=2) + "\n"))
        return written


def collect_reports(indir) -> list[dict]:
    out = []
    for p in sorted(Path(indir).rglob("*report.json")):
        with open(p, encoding="utf-8") as fh:
            data = json.load(fh)
        data["_path"] = str(p)
        out.append(data)
    return out


def merge_reports(indir, outfile) -> Path:
    """Combine every run report under ``indir``: CSV of estimates or a JSON summary."""
    reports = collect_reports(indir)
    outfile = Path(outfile)
    if outfile.suffix == ".csv":
        rows = []
        for rep in reports:
            for r in rep.get("estimates", []):
                rows.append({k: r.get(k, "") for k in CSV_FIELDS})
        for row in rows:
            for k in ("value", "dispersion"):
                row[k] = repr(float(row[k]))
            if row["seed"] is None:
                row["seed"] = ""
        return atomic_write(outfile, csv_text(CSV_FIELDS, rows))
    summary = {
        "runs": [{"path": rep["_path"], "config_hash": rep["header"]["config_hash"],
                  "operations": rep["config"].get("run.operations"), "estimates": len(rep.get("estimates", []))}
                 for rep in reports],
        "estimates": [e for rep in reports for e in rep.get("estimates", [])],
    }
    return atomic_write(outfile, json.dumps(summary, indent=2) + "\n")
