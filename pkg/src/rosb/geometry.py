"""Planar geometry helpers and seeded random streams.

Distances are scaled so that 1.0 corresponds to 1 km.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KM = 1.0
METER = 1e-3 * KM
TWO_PI = 2.0 * math.pi


class DegenerateRange(ValueError):
    """Slant range shorter than the target depth; no planar projection exists."""


def to_scaled(meters: float) -> float:
    return meters * METER


def to_meters(scaled: float) -> float:
    return scaled / METER


def heading_vector(psi: float) -> np.ndarray:
    return np.array([math.cos(psi), math.sin(psi)])


def wrap_angle(theta: float) -> float:
    """Wrap ``theta`` into (-pi, pi]."""
    if not math.isfinite(theta):
        raise ValueError(f"cannot wrap non-finite angle {theta!r}")
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def project_slant_range(slant: float, depth: float) -> float:
    """Project a slant range onto the agent plane given the target depth.

    Raises DegenerateRange if ``slant < depth``.
    """
    if slant < 0 or depth < 0:
        raise ValueError("slant and depth must be non-negative")
    if slant < depth:
        raise DegenerateRange(f"slant {slant} shorter than depth {depth}")
    if depth == 0:
        return slant
    # factored form keeps precision when slant ~ depth
    return math.sqrt((slant - depth) * (slant + depth))


@dataclass(frozen=True)
class NoiseModel:
    """Range noise w ~ N(epsilon_frac * slant, sigma^2), sigma in scaled units."""

    sigma: float = to_scaled(1.0)
    epsilon_frac: float = 0.01

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if not 0 <= self.epsilon_frac < 1:
            raise ValueError("epsilon_frac must lie in [0, 1)")

    @property
    def silent(self) -> bool:
        return self.sigma == 0 and self.epsilon_frac == 0


def seeded_rng(seed: int, *keys: int) -> np.random.Generator:
    """Deterministic generator for ``seed``, optionally split by integer keys.

    ``seeded_rng(seed, episode, env_id, consumer)`` gives a stream that does not
    depend on how many other streams were drawn before it.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
