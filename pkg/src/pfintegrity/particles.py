"""Weighted particle sets: propagation, normalization, resampling and moments.

Weights are kept as natural logs everywhere. A set with ``S`` particles stores
positions as an ``(S, 3)`` array and log-weights as an ``(S,)`` array; the
particle at row ``i`` is the ``i``-th position hypothesis.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._numerics import logsumexp
from .errors import AllWeightsZero, DegenerateSet

#: Diagonal loading added to every fitted covariance (m^2).
COV_REGULARIZATION = 1e-6


@dataclass(frozen=True)
class ParticleSet:
    positions: np.ndarray
    log_weights: np.ndarray
    epoch_time: float = 0.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, copy=True).reshape(-1, 3)
        logw = np.array(self.log_weights, dtype=float, copy=True).reshape(-1)
        if pos.shape[0] < 1:
            raise DegenerateSet("a particle set needs at least one particle")
        if logw.shape[0] != pos.shape[0]:
            raise ValueError(f"{pos.shape[0]} positions but {logw.shape[0]} log-weights")
        if not np.all(np.isfinite(pos)):
            raise ValueError("particle positions must be finite")
        if np.any(np.isnan(logw)) or np.any(logw == np.inf):
            raise ValueError("log-weights must be finite or -inf")
        pos.flags.writeable = False
        logw.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "log_weights", logw)

    @classmethod
    def uniform(cls, positions, epoch_time: float = 0.0) -> "ParticleSet":
        positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        n = positions.shape[0]
        return cls(positions, np.full(n, -np.log(n)), epoch_time)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def with_log_weights(self, log_weights) -> "ParticleSet":
        return replace(self, log_weights=log_weights)


@dataclass(frozen=True)
class OdometrySample:
    """IMU-derived motion over one interval: velocity, acceleration, duration."""

    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dt: float = 0.0

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError(f"odometry dt must be >= 0, got {self.dt}")
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3))
        object.__setattr__(self, "acceleration", np.asarray(self.acceleration, dtype=float).reshape(3))

    def displacement(self) -> np.ndarray:
        """Constant-acceleration displacement ``v*dt + a*dt^2/2``."""
        return self.velocity * self.dt + 0.5 * self.acceleration * self.dt**2


@dataclass(frozen=True)
class GaussianSummary:
    mean: np.ndarray
    covariance: np.ndarray


def propagate(ps: ParticleSet, odo: OdometrySample, prop_var: float, seed) -> ParticleSet:
    """Move every particle by the odometry displacement plus N(0, prop_var) per axis.

    ``seed`` may be an integer, a sequence of integers, or a ``numpy`` Generator.
    """
    if prop_var < 0:
        raise ValueError(f"prop_var must be >= 0, got {prop_var}")
    moved = ps.positions + odo.displacement()
    if prop_var > 0:
        rng = np.random.default_rng(seed)
        moved = moved + rng.normal(0.0, np.sqrt(prop_var), size=moved.shape)
    return replace(ps, positions=moved)


def normalize(ps: ParticleSet) -> ParticleSet:
    logw = ps.log_weights
    if np.all(logw == -np.inf):
        raise AllWeightsZero("every particle has zero weight")
    total = logsumexp(logw)
    # already normalized to rounding: return as-is so normalize is idempotent
    if abs(total) < 1e-12:
        return ps
    return ps.with_log_weights(logw - total)


def resample_sir(ps: ParticleSet, seed, n: int | None = None) -> ParticleSet:
    """Systematic resampling to ``n`` (default ``len(ps)``) equally weighted particles."""
    ps = normalize(ps)
    n = len(ps) if n is None else int(n)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(ps.weights)
    cdf[-1] = 1.0
    points = (rng.random() + np.arange(n)) / n
    idx = np.searchsorted(cdf, points, side="right")
    # zero-weight particles share a cdf value with a predecessor and are never picked
    idx = np.minimum(idx, len(ps) - 1)
    return ParticleSet(ps.positions[idx], np.full(n, -np.log(n)), ps.epoch_time)


def point_estimate(ps: ParticleSet) -> np.ndarray:
    """Weighted mean position."""
    w = normalize(ps).weights
    return w @ ps.positions


def fit_gaussian(ps: ParticleSet, reg: float = COV_REGULARIZATION) -> GaussianSummary:
    """Weighted mean and (population) covariance, loaded with ``reg * I``."""
    if len(ps) < 2:
        raise DegenerateSet("fit_gaussian needs at least two particles")
    w = normalize(ps).weights
    mean = w @ ps.positions
    centred = ps.positions - mean
    cov = (centred * w[:, None]).T @ centred
    cov = 0.5 * (cov + cov.T) + reg * np.eye(3)
    return GaussianSummary(mean, cov)
