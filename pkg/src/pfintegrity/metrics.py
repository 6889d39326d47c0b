"""Trajectory accuracy and integrity metrics over a run's epoch records."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_RISK_THRESHOLD = 0.1


@dataclass(frozen=True)
class LimitMetrics:
    p_fa: float
    p_mi: float
    failure_ratio: float
    failure_error: Optional[float]
    bound_gap: Optional[float]


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    per_limit: dict


def compute_metrics(records, risk_threshold: float = DEFAULT_RISK_THRESHOLD,
                    alert_limits=None) -> MetricsReport:
    """Summarize a run.

    Per alert limit ``r``, an epoch has a fault when the position error exceeds
    ``r``; the system declares insufficient integrity when the bound exceeds
    ``risk_threshold``. ``p_fa`` and ``p_mi`` are fractions of all epochs. A
    failure is an epoch where the bound is below the reference risk.
    """
    if not records:
        raise ValueError("no epoch records")
    errors = np.array([rec.error for rec in records])
    rmse = float(np.sqrt(np.mean(errors**2)))
    if alert_limits is None:
        alert_limits = list(records[0].bounds)

    per_limit = {}
    for r in alert_limits:
        bound = np.array([rec.bounds[r] for rec in records])
        ref = np.array([rec.ref_risks[r] for rec in records])
        fault = errors > r
        alarm = bound > risk_threshold
        failure = bound < ref
        per_limit[r] = LimitMetrics(
            p_fa=float(np.mean(alarm & ~fault)),
            p_mi=float(np.mean(~alarm & fault)),
            failure_ratio=float(np.mean(failure)),
            failure_error=float(np.mean(errors[failure])) if failure.any() else None,
            bound_gap=float(np.mean(bound[~failure] - ref[~failure])) if (~failure).any() else None,
        )
    return MetricsReport(rmse, per_limit)
