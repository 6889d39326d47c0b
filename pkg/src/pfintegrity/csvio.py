"""CSV emission and parsing for epoch records and metrics rows."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .metrics import LimitMetrics, MetricsReport
from .pipeline import EpochRecord

METRICS_COLUMNS = [
    "mode", "bias", "faults", "seed", "alert_limit",
    "rmse", "p_fa", "p_mi", "failure_ratio", "failure_error", "bound_gap",
]
LIMIT_FIELDS = ["p_fa", "p_mi", "failure_ratio", "failure_error", "bound_gap"]


def fmt(x) -> str:
    """9 significant digits; ``None`` becomes an empty cell."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.9g}"


def parse_float(cell: str):
    return None if cell == "" else float(cell)


def limit_label(r: float) -> str:
    return f"{r:g}"


def epoch_columns(alert_limits) -> list[str]:
    cols = ["time", "truth_x", "truth_y", "truth_z", "est_x", "est_y", "est_z", "err_norm"]
    for r in alert_limits:
        cols += [f"bound_{limit_label(r)}", f"ref_risk_{limit_label(r)}"]
    return cols


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def write_epochs(path, records, alert_limits):
    rows = []
    for rec in records:
        row = [rec.time, *rec.truth, *rec.estimate, rec.error]
        for r in alert_limits:
            row += [rec.bounds[r], rec.ref_risks[r]]
        rows.append([fmt(v) for v in row])
    write_csv(path, epoch_columns(alert_limits), rows)


def read_epochs(path) -> list[EpochRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty records file") from None
        rows = list(reader)
    if header[:8] != epoch_columns([]):
        raise ValueError(f"{path}: unexpected header {header[:8]}")
    limits = [float(h[len("bound_"):]) for h in header[8::2]]
    records = []
    for row in rows:
        vals = [float(v) for v in row]
        bounds = {r: vals[8 + 2 * i] for i, r in enumerate(limits)}
        refs = {r: vals[9 + 2 * i] for i, r in enumerate(limits)}
        records.append(EpochRecord(vals[0], np.array(vals[1:4]), np.array(vals[4:7]), bounds, refs))
    if not records:
        raise ValueError(f"{path}: no epoch rows")
    return records


def metrics_rows(report: MetricsReport, mode, bias, faults, seed) -> list[list[str]]:
    rows = []
    for r, lm in report.per_limit.items():
        rows.append([mode, fmt(bias), fmt(faults), fmt(seed), fmt(r), fmt(report.rmse)]
                    + [fmt(getattr(lm, f)) for f in LIMIT_FIELDS])
    return rows


def write_metrics(path, rows):
    write_csv(path, METRICS_COLUMNS, rows)


def read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def report_from_rows(rows) -> MetricsReport:
    """Rebuild a report from metrics rows of a single run."""
    per_limit = {
        float(row["alert_limit"]): LimitMetrics(*(parse_float(row[f]) for f in LIMIT_FIELDS))
        for row in rows
    }
    return MetricsReport(float(rows[0]["rmse"]), per_limit)
