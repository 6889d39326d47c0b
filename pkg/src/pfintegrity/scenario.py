"""Emulated scenario: trajectory, satellites, faulted pseudoranges, map matches.

Everything is generated in a local ENU frame centred on the start of the
trajectory. Random draws use independent streams keyed by ``(seed, stream,
epoch)`` so that the fused and GNSS-only modes see identical measurements.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .camera import MapMatchResult
from .errors import ConfigError
from .gnss import gdop
from .particles import OdometrySample

SAT_SHELL_RADIUS = 20_200e3
MAX_GDOP = 5.0

# stream ids for np.random.default_rng([seed, stream, ...])
TRAJECTORY, ODOMETRY, GNSS, CAMERA, INIT, PERTURB, PROPAGATE, RESAMPLE = range(8)


@dataclass(frozen=True)
class ScenarioConfig:
    # scenario
    num_epochs: int = 50
    epoch_dt: float = 1.0
    speed: float = 10.0
    segment_epochs: int = 5
    max_turn_deg: float = 20.0
    max_climb_rate: float = 0.3
    init_sigma: float = 2.0
    seed: int = 0
    # gnss
    num_satellites: int = 12
    num_gnss_faults: int = 6
    gnss_bias: float = 100.0
    one_sided_bias: bool = False
    meas_noise_var: float = 10.0
    min_elevation_deg: float = 15.0
    max_elevation_deg: float = 85.0
    # camera
    cameras_per_epoch: int = 3
    camera_fault_prob: float = 0.2
    camera_fault_offset: float = 50.0
    camera_sigma: float = 2.0
    tau: float = 5.0
    # odometry noise, per-axis sigma on velocity (m/s) and acceleration (m/s^2)
    odometry_noise: float = 0.3
    odometry_accel_noise: float = 0.05
    # filter
    num_particles: int = 120
    prop_var: float = 3.0
    fusion: bool = True
    estimate: str = "best"
    # integrity
    alert_limits: tuple = (8.0, 16.0)
    M: int = 10
    delta: float = 0.05
    risk_threshold: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "alert_limits", tuple(float(r) for r in self.alert_limits))

    @property
    def mode(self) -> str:
        return "fused" if self.fusion else "gnss_only"

    def as_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "ScenarioConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.num_epochs >= 1, "num_epochs must be >= 1")
        need(self.epoch_dt > 0, "epoch_dt must be > 0")
        need(self.speed >= 0, "speed must be >= 0")
        need(self.segment_epochs >= 1, "segment_epochs must be >= 1")
        need(self.num_satellites >= 4, "num_satellites must be >= 4")
        need(0 <= self.num_gnss_faults < self.num_satellites,
             f"num_gnss_faults ({self.num_gnss_faults}) must be < num_satellites ({self.num_satellites})")
        need(self.gnss_bias >= 0, "gnss_bias must be >= 0")
        for name in ("meas_noise_var", "prop_var", "odometry_noise", "odometry_accel_noise",
                     "camera_sigma", "init_sigma", "max_climb_rate"):
            need(getattr(self, name) >= 0, f"{name} must be >= 0")
        need(self.meas_noise_var > 0, "meas_noise_var must be > 0")
        need(self.max_climb_rate <= self.speed or self.speed == 0, "max_climb_rate must not exceed speed")
        need(self.cameras_per_epoch >= 1, "cameras_per_epoch must be >= 1")
        need(0 <= self.camera_fault_prob <= 1, "camera_fault_prob must lie in [0, 1]")
        need(self.camera_fault_offset >= 0, "camera_fault_offset must be >= 0")
        need(self.tau > 0, "tau must be > 0")
        need(self.num_particles >= 2, "num_particles must be >= 2")
        need(self.estimate in ("best", "mean"), "estimate must be 'best' or 'mean'")
        need(len(self.alert_limits) >= 1 and all(r > 0 for r in self.alert_limits),
             "alert_limits must be a nonempty list of positive values")
        need(self.M >= 1, "M must be >= 1")
        need(0 < self.delta < 1, "delta must lie in (0, 1)")
        need(0 <= self.risk_threshold <= 1, "risk_threshold must lie in [0, 1]")
        need(-90 <= self.min_elevation_deg <= self.max_elevation_deg <= 90,
             "satellite elevations must satisfy -90 <= min <= max <= 90")
        g = gdop(generate_constellation(self), np.zeros(3))
        need(np.isfinite(g) and g < MAX_GDOP,
             f"satellite geometry is degenerate (GDOP {g:.3g}, must be < {MAX_GDOP})")
        return self


@dataclass(frozen=True)
class Trajectory:
    """Truth at epochs ``0..N`` and odometry over each of the N intervals."""

    times: np.ndarray
    truth: np.ndarray
    true_odometry: list = field(default_factory=list)
    noisy_odometry: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.true_odometry)

    def __iter__(self):
        return iter(zip(self.truth[1:], self.true_odometry, self.noisy_odometry))


def _rng(cfg: ScenarioConfig, stream: int, *key):
    return np.random.default_rng([cfg.seed, stream, *key])


def generate_trajectory(cfg: ScenarioConfig) -> Trajectory:
    """Constant-acceleration segments that turn and climb while holding speed."""
    rng = _rng(cfg, TRAJECTORY)
    n, dt = cfg.num_epochs, cfg.epoch_dt
    heading = rng.uniform(0, 2 * np.pi)
    vel = cfg.speed * np.array([np.cos(heading), np.sin(heading), 0.0])
    pos = np.zeros(3)
    truth = [pos]
    true_odo = []
    for start in range(0, n, cfg.segment_epochs):
        steps = min(cfg.segment_epochs, n - start)
        heading += np.deg2rad(rng.uniform(-cfg.max_turn_deg, cfg.max_turn_deg))
        climb = rng.uniform(-cfg.max_climb_rate, cfg.max_climb_rate)
        horiz = math.sqrt(max(cfg.speed**2 - climb**2, 0.0))
        target = np.array([horiz * np.cos(heading), horiz * np.sin(heading), climb])
        acc = (target - vel) / (steps * dt)
        for _ in range(steps):
            odo = OdometrySample(vel, acc, dt)
            true_odo.append(odo)
            pos = pos + odo.displacement()
            vel = vel + acc * dt
            truth.append(pos)

    noise_rng = _rng(cfg, ODOMETRY)
    noisy = [
        OdometrySample(
            o.velocity + noise_rng.normal(0.0, cfg.odometry_noise, 3),
            o.acceleration + noise_rng.normal(0.0, cfg.odometry_accel_noise, 3),
            o.dt,
        )
        for o in true_odo
    ]
    return Trajectory(np.arange(n + 1) * dt, np.array(truth), true_odo, noisy)


def generate_constellation(cfg: ScenarioConfig) -> np.ndarray:
    """Static satellites on a spherical shell, spread on a golden-angle spiral in azimuth."""
    n = cfg.num_satellites
    el = np.deg2rad(np.linspace(cfg.min_elevation_deg, cfg.max_elevation_deg, n))
    az = np.deg2rad(np.arange(n) * 137.50776405)
    return SAT_SHELL_RADIUS * np.column_stack(
        [np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)]
    )


def inject_gnss_faults(true_ranges, cfg: ScenarioConfig, epoch_seed):
    """Add N(0, meas_noise_var) to every range and a bias to a random subset.

    Returns ``(pseudoranges, fault_mask)``.
    """
    true_ranges = np.asarray(true_ranges, dtype=float)
    R = true_ranges.shape[0]
    if cfg.num_gnss_faults > R:
        raise ValueError(f"cannot fault {cfg.num_gnss_faults} of {R} ranges")
    rng = np.random.default_rng(epoch_seed)
    rho = true_ranges + rng.normal(0.0, np.sqrt(cfg.meas_noise_var), R)
    mask = np.zeros(R, dtype=bool)
    idx = rng.choice(R, size=cfg.num_gnss_faults, replace=False)
    mask[idx] = True
    bias = rng.normal(cfg.gnss_bias, 0.1 * cfg.gnss_bias, idx.size)
    sign = rng.choice([-1.0, 1.0], idx.size)
    # NLOS delays are never negative
    rho[idx] += np.abs(bias) if cfg.one_sided_bias else sign * bias
    return rho, mask


def simulate_camera(truth, cfg: ScenarioConfig, epoch_seed, match_times=None):
    """Emulated map-matcher output for K images.

    ``truth`` is the true position at each match time, shape ``(3,)`` or
    ``(K, 3)``. A faulted image is a wrong database match: the extracted state
    is displaced horizontally by ``camera_fault_offset`` in a random direction.
    Returns ``(results, fault_mask)``.
    """
    K = cfg.cameras_per_epoch
    truth = np.broadcast_to(np.asarray(truth, dtype=float), (K, 3))
    match_times = np.zeros(K) if match_times is None else np.asarray(match_times, dtype=float)
    rng = np.random.default_rng(epoch_seed)
    noise = rng.normal(0.0, cfg.camera_sigma, (K, 3))
    faulty = rng.random(K) < cfg.camera_fault_prob
    angle = rng.uniform(0, 2 * np.pi, K)
    offset = cfg.camera_fault_offset * np.column_stack([np.cos(angle), np.sin(angle), np.zeros(K)])
    states = truth + noise + np.where(faulty[:, None], offset, 0.0)
    results = [MapMatchResult(s, float(t), 1.0) for s, t in zip(states, match_times)]
    return results, faulty
