"""Fault-tolerant GNSS likelihood (Particle RAIM style).

The measurement likelihood is a mixture with one Gaussian component per
pseudorange. Component weights (responsibilities) come from one EM step: each
particle casts squared-normal votes on its normalized residuals, votes are
normalized per particle and pooled with the particle weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numerics import logsumexp
from .errors import DegenerateVotes
from .particles import ParticleSet, normalize

VOTE_FLOOR = 1e-300
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PseudorangeMeasurement:
    sat_position: np.ndarray
    pseudorange: float
    sigma: float


@dataclass(frozen=True)
class GnssEpoch:
    """One epoch of R pseudoranges, stored column-wise for vectorized use."""

    time: float
    sat_positions: np.ndarray
    pseudoranges: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        sats = np.asarray(self.sat_positions, dtype=float).reshape(-1, 3)
        rho = np.asarray(self.pseudoranges, dtype=float).reshape(-1)
        sig = np.broadcast_to(np.asarray(self.sigmas, dtype=float), rho.shape).copy()
        if not (sats.shape[0] == rho.shape[0]):
            raise ValueError("satellite positions and pseudoranges differ in length")
        if np.any(sig <= 0):
            raise ValueError("measurement sigmas must be > 0")
        if np.any(rho <= 0):
            raise ValueError("pseudoranges must be > 0")
        object.__setattr__(self, "sat_positions", sats)
        object.__setattr__(self, "pseudoranges", rho)
        object.__setattr__(self, "sigmas", sig)

    @classmethod
    def from_measurements(cls, time, measurements) -> "GnssEpoch":
        return cls(
            time,
            [m.sat_position for m in measurements],
            [m.pseudorange for m in measurements],
            [m.sigma for m in measurements],
        )

    @property
    def measurements(self) -> list[PseudorangeMeasurement]:
        return [
            PseudorangeMeasurement(s, float(r), float(sg))
            for s, r, sg in zip(self.sat_positions, self.pseudoranges, self.sigmas)
        ]

    def __len__(self) -> int:
        return self.pseudoranges.shape[0]


def expected_pseudorange(x, sat):
    """Geometric range ``||x - sat||``; broadcasts over leading axes."""
    return np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(sat, dtype=float), axis=-1)


def normalized_residuals(positions, epoch: GnssEpoch) -> np.ndarray:
    """``(m_k - ||x_i - sat_k||) / sigma_k`` as an ``(S, R)`` array."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    ranges = expected_pseudorange(positions[:, None, :], epoch.sat_positions[None, :, :])
    return (epoch.pseudoranges[None, :] - ranges) / epoch.sigmas[None, :]


def geometry_matrix(sat_positions, x) -> np.ndarray:
    """Rows ``[-u_k, 1]`` with ``u_k`` the unit line of sight from ``x`` to satellite k."""
    los = np.asarray(sat_positions, dtype=float) - np.asarray(x, dtype=float)
    u = los / np.linalg.norm(los, axis=1, keepdims=True)
    return np.hstack([-u, np.ones((u.shape[0], 1))])


def gdop(sat_positions, x) -> float:
    """Geometric dilution of precision at ``x``; ``inf`` for singular geometry."""
    H = geometry_matrix(sat_positions, x)
    if H.shape[0] < 4:
        return np.inf
    G = H.T @ H
    if np.linalg.cond(G) > 1e12:
        return np.inf
    return float(np.sqrt(np.trace(np.linalg.inv(G))))


def dop_sigma(sat_positions, x, meas_noise_var: float) -> float:
    """Per-measurement spread: noise sigma scaled by sqrt(GDOP) of the geometry at ``x``."""
    return float(np.sqrt(meas_noise_var) * np.sqrt(gdop(sat_positions, x)))


def compute_gamma(epoch: GnssEpoch, ps: ParticleSet) -> np.ndarray:
    """Measurement responsibilities from one E-step plus weighted pooling."""
    w = normalize(ps).weights
    r = normalized_residuals(ps.positions, epoch)
    votes = np.exp(-0.5 * r**2)
    if not np.any(votes > 0):
        raise DegenerateVotes("all RAIM votes underflowed; particles inconsistent with every range")
    votes = np.maximum(votes, VOTE_FLOOR)
    votes /= votes.sum(axis=1, keepdims=True)
    gamma = w @ votes
    return gamma / gamma.sum()


def gnss_log_likelihood(x, epoch: GnssEpoch, gamma) -> np.ndarray | float:
    """``log sum_k gamma_k N(m_k | ||x - sat_k||, sigma_k)``.

    ``x`` may be one position or an ``(S, 3)`` array; the result matches.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    r = normalized_residuals(x, epoch)
    log_comp = -0.5 * r**2 - np.log(epoch.sigmas)[None, :] - _LOG_SQRT_2PI
    gamma = np.asarray(gamma, dtype=float)
    with np.errstate(divide="ignore"):
        out = logsumexp(log_comp + np.log(gamma)[None, :], axis=1)
    return float(out[0]) if single else out


def update_weights_gnss(ps: ParticleSet, epoch: GnssEpoch) -> tuple[ParticleSet, np.ndarray]:
    gamma = compute_gamma(epoch, ps)
    ll = gnss_log_likelihood(ps.positions, epoch, gamma)
    return normalize(ps.with_log_weights(ps.log_weights + ll)), gamma
