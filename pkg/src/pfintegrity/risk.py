"""Per-epoch PAC-Bayes upper bound on the probability of hazardous error.

The bound is ``R_M + t`` where ``R_M`` is the empirical hazard rate over M
odometry-perturbed posteriors and ``t`` approximately inverts the Bernoulli KL
at the gap ``eps = (KL(current || prior) + ln((M + 1) / delta)) / M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .particles import GaussianSummary, ParticleSet, fit_gaussian, normalize, point_estimate

Q_FLOOR = 1e-6
DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class PerturbationEnsemble:
    posteriors: tuple
    mean_posterior: ParticleSet

    @property
    def M(self) -> int:
        return len(self.posteriors)

    @classmethod
    def from_posteriors(cls, posteriors: Sequence[ParticleSet]) -> "PerturbationEnsemble":
        """Index-aligned average: mean position and mean weight of particle i across members."""
        posteriors = tuple(normalize(p) for p in posteriors)
        if not posteriors:
            raise ValueError("an ensemble needs at least one posterior")
        sizes = {len(p) for p in posteriors}
        if len(sizes) != 1:
            raise ValueError(f"posteriors disagree on particle count: {sorted(sizes)}")
        positions = np.mean([p.positions for p in posteriors], axis=0)
        weights = np.mean([p.weights for p in posteriors], axis=0)
        with np.errstate(divide="ignore"):
            mean = normalize(ParticleSet(positions, np.log(weights), posteriors[0].epoch_time))
        return cls(posteriors, mean)


@dataclass(frozen=True)
class RiskReport:
    empirical_risk: float
    epsilon: float
    divergence_term: float
    bound: float
    alert_limit: float
    reference_risk: Optional[float] = None


def _hazard(positions, centre, r) -> np.ndarray:
    return (np.linalg.norm(np.asarray(positions) - np.asarray(centre), axis=-1) >= r).astype(float)


def classification_loss(x, post: ParticleSet, r: float) -> int:
    """1 when ``x`` lies at least ``r`` from the posterior's point estimate."""
    return int(_hazard(x, point_estimate(post), r))


def empirical_risk(ens: PerturbationEnsemble, r: float) -> float:
    mean = ens.mean_posterior
    w = mean.weights
    losses = [w @ _hazard(mean.positions, point_estimate(p), r) for p in ens.posteriors]
    return float(np.clip(np.mean(losses), 0.0, 1.0))


def gaussian_kl(a: GaussianSummary, b: GaussianSummary) -> float:
    """Closed-form ``KL(N_a || N_b)`` for full-covariance Gaussians."""
    d = a.mean.shape[0]
    if np.array_equal(a.mean, b.mean) and np.array_equal(a.covariance, b.covariance):
        return 0.0
    cb = np.linalg.cholesky(b.covariance)
    ca = np.linalg.cholesky(a.covariance)
    inv_cb_ca = np.linalg.solve(cb, ca)
    trace = np.sum(inv_cb_ca**2)
    z = np.linalg.solve(cb, b.mean - a.mean)
    maha = z @ z
    logdet = 2.0 * (np.sum(np.log(np.diag(cb))) - np.sum(np.log(np.diag(ca))))
    return float(max(0.5 * (trace + maha - d + logdet), 0.0))


def epsilon_gap(cur: ParticleSet, prev: ParticleSet, M: int, delta: float = DEFAULT_DELTA) -> float:
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    kl = gaussian_kl(fit_gaussian(cur), fit_gaussian(prev))
    return (kl + np.log((M + 1) / delta)) / M


def inverse_bernoulli(q: float, eps: float) -> float:
    """Small-gap approximation to the t solving ``D_Ber(q || q + t) = eps``."""
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    q = float(np.clip(q, Q_FLOOR, 1.0 - Q_FLOOR))
    return float(np.sqrt(2.0 * eps / (1.0 / q + 1.0 / (1.0 - q))))


def reference_risk(mean_posterior: ParticleSet, truth, r: float) -> float:
    w = normalize(mean_posterior).weights
    return float(np.clip(w @ _hazard(mean_posterior.positions, truth, r), 0.0, 1.0))


def risk_bound(ens: PerturbationEnsemble, cur: ParticleSet, prev: ParticleSet, r: float,
               delta: float = DEFAULT_DELTA, truth=None) -> RiskReport:
    """Assemble the bound for alert limit ``r``; ``truth`` adds the reference risk."""
    rm = empirical_risk(ens, r)
    eps = epsilon_gap(cur, prev, ens.M, delta)
    t = inverse_bernoulli(rm, eps)
    ref = None if truth is None else reference_risk(ens.mean_posterior, truth, r)
    return RiskReport(rm, eps, t, min(1.0, rm + t), r, ref)
