"""Predefined-path controller: go to the current estimate, then circle it.

The circle radius defaults to sqrt(2) times the target depth. While circling,
each step aims at the point of the circle that lies one step length ahead
(counterclockwise), so consecutive positions are chord points of the circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import EnvConfig, Observation
from .geometry import to_scaled, wrap_angle


@dataclass(frozen=True)
class BaselineConfig:
    radius: float  # m
    capture_band: float = 10.0  # m

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if self.capture_band < 0:
            raise ValueError("capture_band must be >= 0")

    @classmethod
    def for_depth(cls, depth: float, capture_band: float = 10.0) -> "BaselineConfig":
        return cls(math.sqrt(2.0) * depth, capture_band)


def chord_angle(step_length: float, radius: float) -> float:
    """Angle subtended at the centre by a chord of ``step_length``."""
    return 2.0 * math.asin(min(1.0, step_length / (2.0 * radius)))


def baseline_action(obs, config: BaselineConfig, env_config: EnvConfig,
                    circling: bool = False) -> tuple[float, bool]:
    """One control decision. Returns (action in [-1, 1], circling flag for the next call)."""
    if not isinstance(obs, Observation):
        obs = Observation.from_array(obs)
    rel = obs.d_hat  # agent relative to the estimate
    rho = float(np.hypot(*rel))
    R = to_scaled(config.radius)
    band = to_scaled(config.capture_band)
    c = env_config.step_length
    psi = math.atan2(obs.v[1], obs.v[0])

    if circling and rho > R + 2.0 * band:
        circling = False  # estimate moved away: transit again
    elif not circling and rho <= R + band:
        circling = True

    if not circling or rho == 0.0:
        desired = math.atan2(-rel[1], -rel[0])
    else:
        theta = math.atan2(rel[1], rel[0])
        # intersection of the circle with the reachable ring of radius c around the agent
        cos_phi = (rho * rho + R * R - c * c) / (2.0 * rho * R)
        if -1.0 <= cos_phi <= 1.0:
            phi = math.acos(cos_phi)
        else:
            phi = chord_angle(c, R)
        aim = R * np.array([math.cos(theta + phi), math.sin(theta + phi)]) - rel
        desired = math.atan2(aim[1], aim[0])
    turn = wrap_angle(desired - psi)
    turn = max(-env_config.max_turn, min(env_config.max_turn, turn))
    return turn / env_config.max_turn, circling


class PredefinedPath:
    """Stateful wrapper holding the transit/circling mode bit."""

    policy_id = "predefined"

    def __init__(self, config: BaselineConfig, env_config: EnvConfig):
        self.config = config
        self.env_config = env_config
        self.circling = False

    def reset(self):
        self.circling = False

    def __call__(self, obs) -> float:
        action, self.circling = baseline_action(obs, self.config, self.env_config, self.circling)
        return action
