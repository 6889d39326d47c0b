"""Per-epoch filter recursion with perturbation ensemble and risk bounding."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import scenario as sc
from ._numerics import logsumexp
from .camera import camera_expert
from .errors import AllWeightsZero, DegenerateSet, DegenerateVotes, ScenarioError
from .fusion import floor_probs, fuse_joint, weigh_experts
from .gnss import GnssEpoch, compute_gamma, dop_sigma, expected_pseudorange, gnss_log_likelihood
from .particles import OdometrySample, ParticleSet, normalize, point_estimate, propagate, resample_sir
from .risk import PerturbationEnsemble, risk_bound

log = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    time: float
    truth: np.ndarray
    estimate: np.ndarray
    bounds: dict
    ref_risks: dict
    gamma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    alphas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fault_mask_gnss: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    fault_mask_camera: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def error(self) -> float:
        return float(np.linalg.norm(np.asarray(self.estimate) - np.asarray(self.truth)))


@dataclass
class _Candidate:
    prior: ParticleSet
    posterior: ParticleSet
    log_evidence: float
    gamma: np.ndarray
    alphas: np.ndarray


def _update(prior, epoch, matches, cam_odos, cfg) -> _Candidate:
    """GNSS weighting, optional camera fusion, and the candidate's total log-likelihood."""
    gamma = compute_gamma(epoch, prior)
    ll = gnss_log_likelihood(prior.positions, epoch, gamma)
    gnss_post = normalize(prior.with_log_weights(prior.log_weights + ll))
    if not cfg.fusion:
        evidence = logsumexp(prior.log_weights + ll)
        return _Candidate(prior, gnss_post, float(evidence), gamma, np.zeros(0))
    experts = [camera_expert(mm, odo, gnss_post, cfg.tau) for mm, odo in zip(matches, cam_odos)]
    moe = weigh_experts(experts, gnss_post.weights)
    joint = fuse_joint(gnss_post.weights, moe.probs)
    posterior = normalize(prior.with_log_weights(joint))
    evidence = logsumexp(prior.log_weights + ll + np.log(floor_probs(moe.probs)))
    return _Candidate(prior, posterior, float(evidence), gamma, moe.alphas)


def _camera_inputs(cfg, t_prev, truth_prev, true_odo, noisy_odo):
    """Match times inside the interval, truth at each, and noisy odometry to the epoch."""
    K, dt = cfg.cameras_per_epoch, true_odo.dt
    offsets = dt * np.arange(1, K + 1) / (K + 1)
    truths = np.array([
        truth_prev + true_odo.velocity * s + 0.5 * true_odo.acceleration * s**2 for s in offsets
    ])
    odos = [
        OdometrySample(noisy_odo.velocity + noisy_odo.acceleration * s, noisy_odo.acceleration, dt - s)
        for s in offsets
    ]
    return t_prev + offsets, truths, odos


def step(ps: ParticleSet, t: int, traj: sc.Trajectory, sats, cfg: sc.ScenarioConfig):
    """Advance the filter by one epoch. Returns ``(resampled_set, EpochRecord)``."""
    truth = traj.truth[t]
    time = float(traj.times[t])
    odo = traj.noisy_odometry[t - 1]

    predicted = point_estimate(ps) + odo.displacement()
    rho, gmask = sc.inject_gnss_faults(
        expected_pseudorange(truth, sats), cfg, [cfg.seed, sc.GNSS, t]
    )
    sigma = dop_sigma(sats, predicted, cfg.meas_noise_var)
    epoch = GnssEpoch(time, sats, rho, sigma)

    match_times, cam_truths, cam_odos = _camera_inputs(
        cfg, float(traj.times[t - 1]), traj.truth[t - 1], traj.true_odometry[t - 1], odo
    )
    matches, cmask = sc.simulate_camera(cam_truths, cfg, [cfg.seed, sc.CAMERA, t], match_times)

    prng = np.random.default_rng([cfg.seed, sc.PERTURB, t])
    candidates = []
    for _ in range(cfg.M):
        odo_u = OdometrySample(
            odo.velocity + prng.normal(0.0, cfg.odometry_noise, 3),
            odo.acceleration + prng.normal(0.0, cfg.odometry_accel_noise, 3),
            odo.dt,
        )
        # common propagation noise across members keeps particle indices aligned
        prior = replace(propagate(ps, odo_u, cfg.prop_var, [cfg.seed, sc.PROPAGATE, t]), epoch_time=time)
        candidates.append(_update(prior, epoch, matches, cam_odos, cfg))

    best = max(range(cfg.M), key=lambda u: candidates[u].log_evidence)
    chosen = candidates[best]
    ens = PerturbationEnsemble.from_posteriors([c.posterior for c in candidates])
    prior_mean = PerturbationEnsemble.from_posteriors([c.prior for c in candidates]).mean_posterior
    estimate = point_estimate(chosen.posterior if cfg.estimate == "best" else ens.mean_posterior)

    bounds, refs = {}, {}
    for r in cfg.alert_limits:
        rep = risk_bound(ens, ens.mean_posterior, prior_mean, r, cfg.delta, truth)
        bounds[r], refs[r] = rep.bound, rep.reference_risk

    record = EpochRecord(time, truth.copy(), estimate, bounds, refs,
                         chosen.gamma, chosen.alphas, gmask, cmask)
    return resample_sir(chosen.posterior, [cfg.seed, sc.RESAMPLE, t]), record


def initial_particles(cfg: sc.ScenarioConfig, start) -> ParticleSet:
    rng = np.random.default_rng([cfg.seed, sc.INIT])
    pos = np.asarray(start) + rng.normal(0.0, cfg.init_sigma, (cfg.num_particles, 3))
    return ParticleSet.uniform(pos, 0.0)


def run_scenario(cfg: sc.ScenarioConfig) -> list[EpochRecord]:
    """Run the full filter over a generated scenario; deterministic in ``cfg``."""
    cfg.validate()
    traj = sc.generate_trajectory(cfg)
    sats = sc.generate_constellation(cfg)
    ps = initial_particles(cfg, traj.truth[0])
    records = []
    for t in range(1, cfg.num_epochs + 1):
        try:
            ps, rec = step(ps, t, traj, sats, cfg)
        except (AllWeightsZero, DegenerateVotes, DegenerateSet) as exc:
            log.error("scenario failed at epoch %d: %s", t, exc)
            raise ScenarioError(t, exc) from exc
        records.append(rec)
    return records
