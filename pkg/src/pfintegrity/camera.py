"""Camera expert distributions over the particle set.

A map-matched image yields an extracted position. That position is carried
forward to the GNSS epoch with IMU odometry, each particle is scored by its
negated, temperature-scaled distance to it, and a softmax turns the scores
into a probability vector aligned with the particles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from .particles import OdometrySample, ParticleSet

DEFAULT_TAU = 5.0


@dataclass(frozen=True)
class MapMatchResult:
    extracted_state: np.ndarray
    match_time: float
    quality: float = 1.0

    def __post_init__(self):
        state = np.asarray(self.extracted_state, dtype=float).reshape(3)
        if not np.all(np.isfinite(state)):
            raise ValueError("extracted state must be finite")
        object.__setattr__(self, "extracted_state", state)


def interpolate_state(x_prev, odo: OdometrySample) -> np.ndarray:
    return np.asarray(x_prev, dtype=float) + odo.displacement()


def distance_scores(state, ps: ParticleSet, tau: float = DEFAULT_TAU) -> np.ndarray:
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    d = np.linalg.norm(ps.positions - np.asarray(state, dtype=float), axis=1)
    return -d / tau


def softmax_distribution(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return softmax(scores)


def camera_expert(mm: MapMatchResult, odo_to_epoch: OdometrySample, ps: ParticleSet,
                  tau: float = DEFAULT_TAU) -> np.ndarray:
    state = interpolate_state(mm.extracted_state, odo_to_epoch)
    return softmax_distribution(distance_scores(state, ps, tau))
