"""Training loop: lockstep parallel environments feeding one learner."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ..env import ACT_DIM, OBS_DIM, EnvConfig, RangeOnlyEnv
from ..geometry import seeded_rng, to_meters
from .agents import Agent, AgentConfig, make_agent
from .buffer import ReplayBuffer

log = logging.getLogger(__name__)

# rng consumers
NET, UPDATE, ENV, EXPLORE = 0, 1, 2, 3

CURVE_COLUMNS = ["episode", "env_id", "return", "final_e_q_m", "steps", "noise_scale",
                 "batch_size"]


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    gamma: float = 0.99
    tau: float = 0.01
    lr_actor: float = 1e-3
    lr_critic: float = 1e-4
    hidden: tuple = (64, 32)
    buffer_size: int = 500_000
    batch_start: int = 32
    batch_max: int = 2048
    batch_double_every: int = 200_000  # episodes
    batch_growth: str = "double"  # or "add2"
    warmup_episodes: int = 10_000
    update_every: int = 30  # aggregate env steps
    update_times: int = 20
    parallel_envs: int = 8
    explore_noise_init: float = 0.5
    explore_noise_decay: float = 0.9999
    policy_delay: int = 2
    target_smoothing: bool = True
    alpha: float = 0.005
    target_entropy: float = -1.0
    episodes: int = 10_000
    checkpoint_every: int = 0  # episodes; 0 = only at the end
    reward_window: int = 100_000
    error_window: int = 10_000

    def __post_init__(self):
        self.hidden = tuple(self.hidden)
        if self.batch_growth not in ("double", "add2"):
            raise ValueError("batch_growth must be 'double' or 'add2'")
        if min(self.parallel_envs, self.update_every, self.update_times, self.batch_start) < 1:
            raise ValueError("parallel_envs, update_every, update_times, batch_start must be >= 1")

    def agent_config(self) -> AgentConfig:
        return AgentConfig(hidden=self.hidden, gamma=self.gamma, tau=self.tau,
                           lr_actor=self.lr_actor, lr_critic=self.lr_critic,
                           policy_delay=self.policy_delay,
                           target_smoothing=self.target_smoothing, alpha=self.alpha,
                           target_entropy=self.target_entropy)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["hidden"] = list(d["hidden"])
        return d


def noise_scale(episode: int, cfg: TrainConfig) -> float:
    return cfg.explore_noise_init * cfg.explore_noise_decay**episode


def batch_size(episode: int, cfg: TrainConfig) -> int:
    k = episode // cfg.batch_double_every
    if cfg.batch_growth == "add2":
        return min(cfg.batch_start + 2 * k, cfg.batch_max)
    # cap the exponent before shifting so huge episode counts stay cheap
    return min(cfg.batch_start << min(k, 32), cfg.batch_max)


def select_action(agent: Agent, obs, explore: bool, scale: float, rng: np.random.Generator,
                  warmup: bool = False) -> float:
    if warmup:
        return float(rng.uniform(-1.0, 1.0))
    return agent.act(obs, explore=explore, noise_scale=scale, rng=rng)


@dataclass
class _Slot:
    env: RangeOnlyEnv
    env_id: int
    episode: int = -1
    obs: np.ndarray | None = None
    ret: float = 0.0
    warmup: bool = False
    scale: float = 0.0
    batch: int = 0
    rng: np.random.Generator | None = None
    active: bool = False


@dataclass
class TrainResult:
    agent: Agent
    records: list = field(default_factory=list)
    total_steps: int = 0
    updates: int = 0


def train(algo: str, env_config: EnvConfig, cfg: TrainConfig, seed: int,
          out_dir=None) -> TrainResult:
    """Train ``algo`` and return the agent plus one learning-curve record per episode.

    Environments are stepped in a fixed order so results depend only on the
    seed. With ``out_dir`` the learning curve, rolling summaries and the
    checkpoint are written there.
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    agent = make_agent(algo, cfg.agent_config(), seeded_rng(seed, 0, 0, NET))
    update_rng = seeded_rng(seed, 0, 0, UPDATE)
    buffer = ReplayBuffer(cfg.buffer_size, OBS_DIM, ACT_DIM)
    slots = [_Slot(RangeOnlyEnv(env_config), i) for i in range(cfg.parallel_envs)]
    result = TrainResult(agent)
    started = 0
    completed = 0

    def start(slot: _Slot):
        nonlocal started
        slot.episode = started
        started += 1
        slot.obs = slot.env.reset(seeded_rng(seed, slot.episode + 1, slot.env_id, ENV))
        slot.rng = seeded_rng(seed, slot.episode + 1, slot.env_id, EXPLORE)
        slot.ret = 0.0
        slot.warmup = slot.episode < cfg.warmup_episodes
        slot.scale = noise_scale(completed, cfg)
        slot.batch = batch_size(completed, cfg)
        slot.active = True

    for slot in slots:
        if started < cfg.episodes:
            start(slot)

    while any(s.active for s in slots):
        for slot in slots:
            if not slot.active:
                continue
            a = select_action(agent, slot.obs, True, slot.scale, slot.rng, slot.warmup)
            res = slot.env.step(a)
            next_obs = res.obs.to_array()
            buffer.push(slot.obs, a, res.reward, next_obs, res.info["terminated"])
            slot.obs = next_obs
            slot.ret += res.reward
            result.total_steps += 1

            bs = batch_size(completed, cfg)
            if result.total_steps % cfg.update_every == 0 and len(buffer) >= bs:
                for _ in range(cfg.update_times):
                    batch = buffer.sample(bs, update_rng)
                    losses = agent.update(batch)
                    result.updates += 1
                    if not all(math.isfinite(v) for v in losses.values()):
                        _dump_batch(out_dir, batch, losses)
                        raise TrainingDiverged(f"non-finite loss {losses} at update {result.updates}")

            if res.done:
                result.records.append({
                    "episode": completed, "env_id": slot.env_id, "return": slot.ret,
                    "final_e_q_m": to_meters(res.info["e_q"]), "steps": slot.env.steps,
                    "noise_scale": 0.0 if slot.warmup else slot.scale, "batch_size": slot.batch})
                completed += 1
                slot.active = False
                if out_dir is not None and cfg.checkpoint_every and completed % cfg.checkpoint_every == 0:
                    agent.save(out_dir / "checkpoint")
                if started < cfg.episodes:
                    start(slot)

    if out_dir is not None:
        agent.save(out_dir / "checkpoint")
        write_curve(result.records, out_dir / "learning_curve.csv")
        write_rolling(result.records, out_dir, cfg)
    log.info("trained %s: %d episodes, %d steps, %d updates", algo, completed,
             result.total_steps, result.updates)
    return result


def _dump_batch(out_dir, batch, losses):
    msg = f"diverged with losses {losses}"
    log.error(msg)
    if out_dir is not None:
        np.savez(Path(out_dir) / "diverged_batch.npz", obs=batch.obs, act=batch.act,
                 rew=batch.rew, next_obs=batch.next_obs, done=batch.done)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_curve(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for r in records:
            w.writerow([_fmt(r[c]) for c in CURVE_COLUMNS])
    return path


def read_curve(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = {"episode", "env_id", "steps", "batch_size"}
    return [{k: int(v) if k in ints else float(v) for k, v in row.items()} for row in rows]


def write_rolling(records, out_dir, cfg: TrainConfig):
    from ..evaluation import rolling

    out_dir = Path(out_dir)
    returns = [r["return"] for r in records]
    errors = [r["final_e_q_m"] for r in records]
    for name, values, window in (("rolling_reward.csv", returns, cfg.reward_window),
                                 ("rolling_error.csv", errors, cfg.error_window)):
        mean, sd = rolling(values, window)
        with (out_dir / name).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["episode", "mean", "sd"])
            for i, (m, s) in enumerate(zip(mean, sd)):
                w.writerow([i, _fmt(m), _fmt(s)])
