"""Particle-filter GNSS-camera fusion with PAC-Bayes integrity risk bounds."""

from .camera import MapMatchResult, camera_expert, distance_scores, interpolate_state, softmax_distribution
from .errors import (
    AllWeightsZero,
    ConfigError,
    DegenerateSet,
    DegenerateVotes,
    LengthMismatch,
    ScenarioError,
)
from .fusion import (
    MixtureOfExperts,
    fuse_joint,
    kl_divergence,
    mixture_of_experts,
    normalize_alphas,
    optimal_alpha,
    weigh_experts,
)
from .gnss import (
    GnssEpoch,
    PseudorangeMeasurement,
    compute_gamma,
    expected_pseudorange,
    gnss_log_likelihood,
    update_weights_gnss,
)
from .metrics import MetricsReport, compute_metrics
from .particles import (
    GaussianSummary,
    OdometrySample,
    ParticleSet,
    fit_gaussian,
    normalize,
    point_estimate,
    propagate,
    resample_sir,
)
from .pipeline import EpochRecord, run_scenario
from .risk import (
    PerturbationEnsemble,
    RiskReport,
    classification_loss,
    empirical_risk,
    epsilon_gap,
    gaussian_kl,
    inverse_bernoulli,
    reference_risk,
    risk_bound,
)
from .scenario import ScenarioConfig

__version__ = "0.1.0"
