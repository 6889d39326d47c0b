"""KL-weighted mixture of camera experts and joint GNSS-camera posterior.

Each camera expert Q_j gets the weight ``alpha_j`` that minimizes
``KL(alpha_j Q_j || P)`` against the GNSS particle distribution P. The
minimizer has the closed form ``exp(-KL(Q_j || P) - 1)`` for a normalized
expert, so experts inconsistent with GNSS are down-weighted exponentially.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch

PROB_FLOOR = 1e-12


def floor_probs(p, floor: float = PROB_FLOOR) -> np.ndarray:
    return np.maximum(np.asarray(p, dtype=float), floor)


def _check_lengths(*vectors):
    lengths = {np.shape(v)[-1] for v in vectors}
    if len(lengths) != 1:
        raise LengthMismatch(f"distributions have lengths {sorted(lengths)}")


def kl_divergence(p, q) -> float:
    """Discrete ``D_KL(p || q)`` with ``0 log 0 = 0``; ``q`` is floored first."""
    p = np.asarray(p, dtype=float)
    _check_lengths(p, q)
    q = floor_probs(q)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def alpha_objective(alpha: float, Q, P) -> float:
    """``KL(alpha Q || P)`` summed over particles, the quantity each weight minimizes."""
    Q = floor_probs(Q)
    P = floor_probs(P)
    aq = alpha * Q
    return float(np.sum(aq * np.log(aq / P)))


def optimal_alpha(Q, P) -> float:
    Q = floor_probs(Q)
    P = floor_probs(P)
    _check_lengths(Q, P)
    k = np.sum(Q * np.log(P / Q)) / np.sum(Q) - 1.0
    return float(np.exp(k))


def normalize_alphas(alphas_raw) -> np.ndarray:
    a = np.asarray(alphas_raw, dtype=float)
    if a.size == 0 or np.any(a <= 0):
        raise ValueError("alphas must be a nonempty sequence of positive reals")
    return a / a.sum()


def mixture_of_experts(experts, alphas) -> np.ndarray:
    experts = np.atleast_2d(np.asarray(experts, dtype=float))
    alphas = np.asarray(alphas, dtype=float)
    if experts.shape[0] != alphas.shape[0]:
        raise ValueError(f"{experts.shape[0]} experts but {alphas.shape[0]} weights")
    return alphas @ experts


@dataclass(frozen=True)
class MixtureOfExperts:
    experts: np.ndarray
    alphas_raw: np.ndarray
    alphas: np.ndarray
    probs: np.ndarray


def weigh_experts(experts, P) -> MixtureOfExperts:
    """Closed-form weights for every expert, then normalize and mix."""
    experts = np.atleast_2d(np.asarray(experts, dtype=float))
    raw = np.array([optimal_alpha(q, P) for q in experts])
    alphas = normalize_alphas(raw)
    return MixtureOfExperts(experts, raw, alphas, mixture_of_experts(experts, alphas))


def fuse_joint(P, Qstar) -> np.ndarray:
    """Unnormalized joint log-probabilities ``log P_i + log Q*_i``."""
    _check_lengths(P, Qstar)
    return np.log(floor_probs(P)) + np.log(floor_probs(Qstar))
