"""Physical models: wireless link, computation delay, mobility, stragglers.

Link rate follows Shannon capacity C = W log2(1 + S / Noise) with a
log-distance received power S_d = sd_offset - 20 log10(d) + omega (dBm),
omega ~ N(0, sigma^2) drawn once per transmission.  The transmitter
constants (power, wavelength, 4 pi term, antenna gains) are folded into
sd_offset, so the default sd_offset = 6 gives S_d = 6 - 20 log10(d).

Computation of l rows takes t = alpha l - (l / beta) ln(1 - U), a shifted
exponential with floor alpha l and tail rate beta / l.  A straggling worker
additionally sleeps for slowdown_factor times its computation time, so its
total is (1 + slowdown_factor) times the sampled value.

Nodes move with constant velocity: p(t') = p(t) + v (t' - t).
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CommConfig:
    bandwidth_hz: float = 1.0e4
    noise_power_w: float = 1.1e-12
    sd_offset_dbm: float = 6.0
    path_loss_db_per_decade: float = 20.0
    noise_std_db: float = 1.0
    bits_per_element: float = 64.0
    min_distance_m: float = 1.0

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth_hz}")
        if self.noise_power_w <= 0:
            raise ValueError(f"noise power must be positive, got {self.noise_power_w}")
        if self.noise_std_db < 0:
            raise ValueError(f"noise std must be non-negative, got {self.noise_std_db}")
        if self.bits_per_element <= 0:
            raise ValueError(f"bits per element must be positive, got {self.bits_per_element}")
        if self.min_distance_m <= 0:
            raise ValueError(f"min distance must be positive, got {self.min_distance_m}")


@dataclass(frozen=True)
class ComputeProfile:
    """Shifted-exponential parameters: alpha (s per row), beta (straggling)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"alpha and beta must be positive, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class KinematicState:
    """Planar position (m) and constant velocity (m/s)."""

    position: tuple
    velocity: tuple

    def __post_init__(self):
        if len(self.position) != 2 or len(self.velocity) != 2:
            raise ValueError("position and velocity must be planar (2 components)")
        if not all(math.isfinite(c) for c in (*self.position, *self.velocity)):
            raise ValueError("kinematic state has non-finite components")


@dataclass(frozen=True)
class StragglerPlan:
    """Which worker (if any) straggles and by how much.

    slowdown_factor is the sleep multiple: the victim's total computation
    time is (1 + slowdown_factor) times the sampled one.
    """

    enabled: bool = False
    victim: int = -1
    slowdown_factor: float = 10.0

    def __post_init__(self):
        if self.slowdown_factor < 1:
            raise ValueError(f"slowdown factor must be >= 1, got {self.slowdown_factor}")


def signal_power(d, omega, cfg):
    """Received power S (W) at distance d (m) with dB noise omega.

    S_d = sd_offset - 20 log10(max(d, min_distance)) + omega  (dBm)
    S = 10^((S_d - 30) / 10)                                  (W)
    """
    d = max(float(d), cfg.min_distance_m)
    s_dbm = cfg.sd_offset_dbm - cfg.path_loss_db_per_decade * math.log10(d) + omega
    return 10.0 ** ((s_dbm - 30.0) / 10.0)


def channel_capacity(d, omega, cfg):
    """Shannon capacity C = W log2(1 + S / Noise) in bits/s."""
    s = signal_power(d, omega, cfg)
    return cfg.bandwidth_hz * math.log2(1.0 + s / cfg.noise_power_w)


def comm_time(rows, cols, d, rng, cfg):
    """Transmission time of a (rows x cols) payload over the link at distance d.

    Draws the dB noise omega once for this transmission, then
    rows * cols * u / C(d, omega).
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"payload dimensions must be >= 1, got ({rows}, {cols})")
    omega = 0.0
    if cfg.noise_std_db > 0:
        omega = rng.gen.normal(0.0, cfg.noise_std_db)
    return rows * cols * cfg.bits_per_element / channel_capacity(d, omega, cfg)


def comp_time_sample(load, profile, rng):
    """Shifted-exponential computation time for `load` rows.

    t = alpha l - (l / beta) ln(1 - U), U ~ Uniform[0, 1); always >= alpha l.
    """
    load = int(load)
    if load < 1:
        raise ValueError(f"load must be >= 1, got {load}")
    u = rng.gen.random()
    return profile.alpha * load - (load / profile.beta) * math.log1p(-u)


def advance(k, dt):
    """Constant-velocity drift: position += velocity * dt."""
    if dt < 0:
        raise ValueError(f"negative time step: {dt}")
    px, py = k.position
    vx, vy = k.velocity
    return KinematicState(position=(px + vx * dt, py + vy * dt), velocity=k.velocity)


def apply_straggler(t_comp, worker_id, plan):
    """Add the victim's sleep: t * (1 + slowdown_factor) if worker_id straggles."""
    if t_comp < 0:
        raise ValueError(f"negative computation time: {t_comp}")
    if plan.enabled and worker_id == plan.victim:
        return t_comp * (1.0 + plan.slowdown_factor)
    return t_comp


def distance(a, b, min_distance=0.0):
    """Euclidean distance between two kinematic states' positions."""
    dx = a.position[0] - b.position[0]
    dy = a.position[1] - b.position[1]
    return max(math.hypot(dx, dy), min_distance)
