"""Plot-ready CSV output and the config echo.

Everything written here is a pure function of the records and the config, so
identical inputs give byte-identical files. Wall-clock timings only appear in
records.csv and the trace files, never in summary.csv.
"""
from __future__ import annotations

import csv
import json
import math
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .. import __version__
from .config import ExperimentConfig
from .scenario import ResultRecord

SUMMARY_COLUMNS = ("axis", "set", "mean_rate", "std_rate", "n_seeds")
RECORD_COLUMNS = ("axis", "seed", "label", "rate", "rate_bps", "iterations", "converged", "runtime_ms",
                  "channel_hash", "config_hash", "error")
TRACE_COLUMNS = ("iteration", "rate", "wmmse_rate", "inner_iterations", "seconds")


class OutputError(OSError):
    """Results could not be written."""


def _num(x) -> str:
    """Shortest repr that round-trips the double exactly."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def summarize(records: list[ResultRecord]) -> list[tuple]:
    """(axis value, label, mean, std, n) over successful seeds, in first-seen order.

    std is the sample standard deviation (0 for a single seed).
    """
    groups: OrderedDict[tuple, list[float]] = OrderedDict()
    for rec in records:
        key = (rec.axis_value, rec.label)
        groups.setdefault(key, [])
        if rec.ok:
            groups[key].append(rec.rate)
    rows = []
    for (axis, label), rates in groups.items():
        if rates:
            arr = np.array(rates)
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            rows.append((axis, label, float(arr.mean()), std, arr.size))
        else:
            rows.append((axis, label, float("nan"), float("nan"), 0))
    return rows


def _trace_name(index: int, rec: ResultRecord) -> str:
    safe = rec.label.replace("/", "_")
    return f"trace_{index:03d}_seed{rec.seed}_{safe}.csv"


def _write_csv(path: Path, header, rows) -> None:
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_results(records: list[ResultRecord], directory, config: ExperimentConfig | None = None,
                 traces: bool = True) -> list[Path]:
    """Write summary.csv, records.csv, per-run traces and config.json; return the paths."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror or exc}") from exc
    written = []

    summary = out / "summary.csv"
    _write_csv(summary, SUMMARY_COLUMNS,
               [(_num(a), label, _num(m), _num(s), n) for a, label, m, s, n in summarize(records)])
    written.append(summary)

    rec_path = out / "records.csv"
    _write_csv(rec_path, RECORD_COLUMNS, [
        (_num(r.axis_value), r.seed, r.label, _num(r.rate), _num(r.rate_bps), r.iterations, _num(r.converged),
         f"{r.runtime_ms:.3f}", r.channel_hash, r.config_hash, r.error) for r in records])
    written.append(rec_path)

    if traces:
        axis_index = {}
        trace_dir = out / "traces"
        for rec in records:
            if not rec.trace:
                continue
            idx = axis_index.setdefault(rec.axis_value, len(axis_index))
            trace_dir.mkdir(exist_ok=True)
            path = trace_dir / _trace_name(idx, rec)
            _write_csv(path, TRACE_COLUMNS, [(i, _num(r), _num(w), k, f"{t:.6f}") for i, r, w, k, t in rec.trace])
            written.append(path)

    if config is not None:
        echo = {
            "config": config.to_dict(),
            "config_hash": config.hash,
            "package_version": __version__,
            "rate_units": "bit/s/Hz summed over subcarriers; rate_bps = rate * subcarrier spacing",
            "n_records": len(records),
            "n_failed": sum(not r.ok for r in records),
        }
        path = out / "config.json"
        try:
            path.write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
        written.append(path)
    return written
