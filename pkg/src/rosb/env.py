"""Episodic single-agent / static-target range-only tracking simulator.

Config values are given in meters and seconds; internally every distance is
scaled (1.0 = 1 km).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .estimator import InsufficientData, LeastSquaresEstimator, Measurement
from .geometry import (
    DegenerateRange,
    NoiseModel,
    heading_vector,
    project_slant_range,
    to_meters,
    to_scaled,
    wrap_angle,
)

OBS_DIM = 7
ACT_DIM = 1
MAX_RANGE_RETRIES = 8

# reward threshold e_th (meters) for the three reward configurations
TEST_E_TH = {"1": 0.0, "2a": 1.0, "2b": 0.3}


class EpisodeDone(RuntimeError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    speed: float = 1.0  # m/s
    dt: float = 30.0  # s
    max_steps: int = 200
    depth: float = 15.0  # m
    action_noise_sigma: float = 0.017  # rad
    max_turn: float = math.pi / 2  # rad per step
    d_th: float = 300.0  # m
    e_th: float = 0.3  # m
    lam: float = 0.01
    d_max: float = 1000.0  # m
    d_min: float = 5.0  # m
    sigma: float = 1.0  # m
    epsilon_frac: float = 0.01
    arena_half_width: float = 500.0  # m
    window: int = 30
    init_distance: float | None = None  # m; None = agent uniform in the arena
    terminate_on_bounds: bool = True

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError("speed must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not 0 < self.max_turn <= math.pi:
            raise ValueError("max_turn must lie in (0, pi]")
        if not self.d_min < self.d_th < self.d_max:
            raise ValueError("need d_min < d_th < d_max")
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.depth < 0 or self.e_th < 0 or self.action_noise_sigma < 0:
            raise ValueError("depth, e_th and action_noise_sigma must be >= 0")
        if self.max_steps < 1 or self.window < 3:
            raise ValueError("max_steps must be >= 1 and window >= 3")
        NoiseModel(to_scaled(self.sigma), self.epsilon_frac)

    # scaled views
    @property
    def step_length(self) -> float:
        return to_scaled(self.speed * self.dt)

    @property
    def speed_scaled(self) -> float:
        return to_scaled(self.speed)

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(to_scaled(self.sigma), self.epsilon_frac)

    @property
    def depth_scaled(self) -> float:
        return to_scaled(self.depth)

    def with_test(self, test: str) -> "EnvConfig":
        return replace(self, e_th=TEST_E_TH[str(test)])

    def noiseless(self) -> "EnvConfig":
        return replace(self, sigma=0.0, epsilon_frac=0.0, action_noise_sigma=0.0)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class AgentState:
    p: np.ndarray
    v: np.ndarray
    psi: float


@dataclass(frozen=True)
class TargetState:
    q: np.ndarray
    depth: float


@dataclass(frozen=True)
class Observation:
    p: np.ndarray
    v: np.ndarray
    d_hat: np.ndarray
    range_p: float

    def to_array(self) -> np.ndarray:
        return np.array([self.p[0], self.p[1], self.v[0], self.v[1],
                         self.d_hat[0], self.d_hat[1], self.range_p])

    @classmethod
    def from_array(cls, x) -> "Observation":
        x = np.asarray(x, dtype=float)
        if x.shape != (OBS_DIM,):
            raise ValueError(f"expected shape ({OBS_DIM},), got {x.shape}")
        return cls(x[0:2].copy(), x[2:4].copy(), x[4:6].copy(), float(x[6]))


@dataclass
class StepResult:
    obs: Observation
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


def kinematics_step(state: AgentState, delta_psi: float, cfg: EnvConfig,
                    rng: np.random.Generator | None = None) -> tuple[AgentState, bool]:
    """Advance the constant-speed agent one step.

    The new heading is used for the displacement. Returns the new state and
    whether ``delta_psi`` had to be clamped to ``max_turn``.
    """
    clamped = abs(delta_psi) > cfg.max_turn
    if clamped:
        delta_psi = math.copysign(cfg.max_turn, delta_psi)
    w = 0.0
    if cfg.action_noise_sigma > 0:
        w = rng.normal(0.0, cfg.action_noise_sigma)
    psi = wrap_angle(state.psi + delta_psi + w)
    g = heading_vector(psi)
    v = cfg.speed_scaled * g
    p = state.p + v * cfg.dt
    return AgentState(p, v, psi), clamped


def measure_range(agent: AgentState, target: TargetState, noise: NoiseModel,
                  rng: np.random.Generator | None = None) -> float:
    """Noisy slant range projected onto the agent plane.

    A draw whose noisy slant falls below the depth is discarded and redrawn;
    after ``MAX_RANGE_RETRIES`` failed redraws the agent is treated as being
    directly overhead (0).
    """
    slant = math.hypot(math.hypot(*(agent.p - target.q)), target.depth)
    if noise.silent:
        return project_slant_range(slant, target.depth)
    mean = noise.epsilon_frac * slant
    for _ in range(1 + MAX_RANGE_RETRIES):
        noisy = slant + rng.normal(mean, noise.sigma)
        try:
            return project_slant_range(max(noisy, 0.0), target.depth)
        except DegenerateRange:
            continue
    return 0.0


def reward_distance(d_hat: float, cfg: EnvConfig) -> float:
    if d_hat > to_scaled(cfg.d_th):
        return cfg.lam * (0.5 - d_hat)
    return 1.0


def reward_error(e_q: float, cfg: EnvConfig) -> float:
    if e_q > to_scaled(cfg.e_th):
        return cfg.lam * (0.5 - e_q)
    return 1.0


def reward_terminal(d_hat: float, cfg: EnvConfig) -> tuple[float, bool]:
    if d_hat > to_scaled(cfg.d_max):
        return -100.0, True
    if d_hat < to_scaled(cfg.d_min):
        return -1.0, True
    return 0.0, False


class RangeOnlyEnv:
    """Gym-style environment: ``reset(rng) -> obs``, ``step(action) -> StepResult``.

    Observations are arrays laid out as [p.x, p.y, v.x, v.y, d_hat.x, d_hat.y, range_p]
    where ``d_hat = p - q_hat``.
    """

    obs_dim = OBS_DIM
    act_dim = ACT_DIM

    def __init__(self, config: EnvConfig | None = None, record: bool = False):
        self.config = config or EnvConfig()
        self.record = record
        self.estimator = LeastSquaresEstimator(self.config.window)
        self.agent: AgentState | None = None
        self.target: TargetState | None = None
        self.q_hat = np.zeros(2)
        self.steps = 0
        self.done = True
        self.last_range = 0.0
        self.trajectory: list[dict] = []
        self._rng: np.random.Generator | None = None

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        cfg = self.config
        self._rng = rng
        half = to_scaled(cfg.arena_half_width)
        d_min = to_scaled(cfg.d_min)
        q = rng.uniform(-half, half, size=2)
        if cfg.init_distance is None:
            while True:
                p = rng.uniform(-half, half, size=2)
                if np.linalg.norm(p - q) >= d_min:
                    break
        else:
            bearing = rng.uniform(-math.pi, math.pi)
            p = q + max(to_scaled(cfg.init_distance), d_min) * heading_vector(bearing)
        psi = wrap_angle(rng.uniform(-math.pi, math.pi))
        self.agent = AgentState(p, cfg.speed_scaled * heading_vector(psi), psi)
        self.target = TargetState(q, cfg.depth_scaled)
        self.estimator.clear()
        self.q_hat = np.zeros(2)
        self.steps = 0
        self.done = False
        self.trajectory = []
        self._measure()
        return self._obs().to_array()

    def _measure(self) -> bool:
        self.last_range = measure_range(self.agent, self.target, self.config.noise, self._rng)
        self.estimator.push(Measurement(self.agent.p.copy(), self.last_range, self.steps))
        try:
            est = self.estimator.solve()
        except InsufficientData:
            return False
        if est.valid:
            self.q_hat = est.q_hat.copy()
        return est.valid

    def _obs(self) -> Observation:
        a = self.agent
        return Observation(a.p.copy(), a.v.copy(), a.p - self.q_hat, self.last_range)

    @property
    def error(self) -> float:
        """True localization error |q_hat - q| (scaled)."""
        return float(np.linalg.norm(self.q_hat - self.target.q))

    def step(self, action: float) -> StepResult:
        if self.done:
            raise EpisodeDone("step() called on a finished episode; call reset()")
        cfg = self.config
        action = float(np.clip(action, -1.0, 1.0))
        self.agent, clamped = kinematics_step(self.agent, action * cfg.max_turn, cfg, self._rng)
        self.steps += 1
        valid = self._measure()
        obs = self._obs()
        d_hat = float(np.linalg.norm(obs.d_hat))
        e_q = self.error
        r_d = reward_distance(d_hat, cfg)
        r_e = reward_error(e_q, cfg)
        r_terminal, terminated = reward_terminal(d_hat, cfg)
        if not cfg.terminate_on_bounds:
            terminated = False
        truncated = self.steps >= cfg.max_steps
        self.done = terminated or truncated
        reward = r_d + r_e + r_terminal
        info = {"e_q": e_q, "r_d": r_d, "r_e": r_e, "r_terminal": r_terminal,
                "valid": valid, "clamped": clamped, "terminated": terminated,
                "truncated": truncated and not terminated, "step": self.steps}
        if self.record:
            a = self.agent
            self.trajectory.append({
                "step": self.steps, "px": to_meters(a.p[0]), "py": to_meters(a.p[1]),
                "psi": a.psi, "qx": to_meters(self.target.q[0]), "qy": to_meters(self.target.q[1]),
                "qhat_x": to_meters(self.q_hat[0]), "qhat_y": to_meters(self.q_hat[1]),
                "range_p": to_meters(self.last_range), "r_d": r_d, "r_e": r_e,
                "r_terminal": r_terminal, "e_q": to_meters(e_q)})
        return StepResult(obs, reward, self.done, info)


TRAJECTORY_COLUMNS = ["step", "px", "py", "psi", "qx", "qy", "qhat_x", "qhat_y",
                      "range_p", "r_d", "r_e", "r_terminal", "e_q"]


def write_trajectory_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRAJECTORY_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k]
                        for k in TRAJECTORY_COLUMNS})
    return path
