"""DDPG, TD3 and SAC learners on top of :mod:`rosb.nn`.

Every agent exposes ``act`` for a single observation and ``update`` for one
gradient step on a sampled batch. ``target_hook``, when set, is called with a
dict describing each bootstrap target (used to instrument the algorithms in
tests).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..env import ACT_DIM, OBS_DIM
from ..nn import Adam, CheckpointError, Mlp, load_checkpoint, save_checkpoint, soft_update
from .buffer import Batch

ALGOS = ("ddpg", "td3", "sac-c", "sac-a")
LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class AgentConfig:
    hidden: tuple = (64, 32)
    gamma: float = 0.99
    tau: float = 0.01
    lr_actor: float = 1e-3
    lr_critic: float = 1e-4
    policy_delay: int = 2
    target_smoothing: bool = True
    smoothing_std: float = 0.2
    smoothing_clip: float = 0.5
    alpha: float = 0.005
    auto_alpha: bool = False
    target_entropy: float = -1.0


def _critic_step(critic: Mlp, opt: Adam, obs, act, y) -> float:
    q, cache = critic.forward_cache(np.concatenate([obs, act], axis=1))
    diff = q[:, 0] - y
    grads, _ = critic.backward(cache, (2.0 / len(y)) * diff[:, None])
    opt.step([critic.flatten(grads)])
    return float(np.mean(diff * diff))


def _bootstrap(rew, done, gamma, next_value):
    # done transitions take the reward alone; no critic value leaks in
    return rew + gamma * np.where(done, 0.0, next_value)


class Agent:
    algo = ""
    roles: tuple = ()

    def __init__(self, cfg: AgentConfig, rng: np.random.Generator,
                 obs_dim: int = OBS_DIM, act_dim: int = ACT_DIM):
        self.cfg = cfg
        self.rng = rng
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.critic_updates = 0
        self.actor_updates = 0
        self.target_hook = None

    def _critic_net(self) -> Mlp:
        return Mlp((self.obs_dim + self.act_dim, *self.cfg.hidden, 1), "linear", self.rng)

    def _hook(self, **info):
        if self.target_hook is not None:
            self.target_hook(info)

    def networks(self) -> dict:
        return {name: getattr(self, name) for name in self.roles}

    def optimizers(self) -> dict:
        return {}

    def counters(self) -> dict:
        return {"critic_updates": self.critic_updates, "actor_updates": self.actor_updates}

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        opts = self.optimizers()
        for name, net in self.networks().items():
            save_checkpoint(directory / f"{name}.npz", net, opts.get(name),
                            meta={"algo": self.algo, "role": name})
        meta = {"algo": self.algo, "counters": self.counters(), "config": self._config_dict()}
        meta.update(self._extra_state())
        (directory / "agent.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        return directory

    def load(self, directory):
        directory = Path(directory)
        try:
            meta = json.loads((directory / "agent.json").read_text())
        except (OSError, ValueError) as exc:
            raise CheckpointError(f"{directory}: missing or corrupt agent.json") from exc
        if meta.get("algo") != self.algo:
            raise CheckpointError(f"checkpoint is {meta.get('algo')!r}, agent is {self.algo!r}")
        opts = self.optimizers()
        for name, net in self.networks().items():
            loaded, opt, _ = load_checkpoint(directory / f"{name}.npz")
            if not loaded.same_architecture(net):
                raise CheckpointError(f"{name}: architecture mismatch")
            for p, q in zip(net.params, loaded.params):
                p[...] = q
            if name in opts and opt is not None:
                mine = opts[name]
                mine.t = opt.t
                for a, b in zip(mine.m + mine.v, opt.m + opt.v):
                    a[...] = b
        self.critic_updates = meta["counters"]["critic_updates"]
        self.actor_updates = meta["counters"]["actor_updates"]
        self._load_extra_state(meta)
        return self

    def _config_dict(self):
        d = dict(vars(self.cfg))
        d["hidden"] = list(d["hidden"])
        return d

    def _extra_state(self) -> dict:
        return {}

    def _load_extra_state(self, meta):
        pass


class DDPG(Agent):
    algo = "ddpg"
    roles = ("actor", "actor_target", "critic", "critic_target")

    def __init__(self, cfg: AgentConfig, rng: np.random.Generator, **kw):
        super().__init__(cfg, rng, **kw)
        self.actor = Mlp((self.obs_dim, *cfg.hidden, self.act_dim), "tanh", rng)
        self.actor_target = self.actor.copy()
        self._make_critics()
        self.actor_opt = Adam([self.actor.flat], cfg.lr_actor)

    def _make_critics(self):
        self.critic = self._critic_net()
        self.critic_target = self.critic.copy()
        self.critic_opt = Adam([self.critic.flat], self.cfg.lr_critic)

    def optimizers(self):
        return {"actor": self.actor_opt, "critic": self.critic_opt}

    def deterministic(self, obs) -> np.ndarray:
        return self.actor.forward(np.atleast_2d(obs))[:, 0]

    def act(self, obs, explore: bool = False, noise_scale: float = 0.0,
            rng: np.random.Generator | None = None) -> float:
        a = float(self.deterministic(obs)[0])
        if explore and noise_scale > 0:
            a += noise_scale * rng.standard_normal()
        return float(np.clip(a, -1.0, 1.0))

    def _actor_step(self, obs, critic: Mlp) -> float:
        a, acache = self.actor.forward_cache(obs)
        q, ccache = critic.forward_cache(np.concatenate([obs, a], axis=1))
        n = len(obs)
        _, gx = critic.backward(ccache, np.full((n, 1), -1.0 / n))
        grads, _ = self.actor.backward(acache, gx[:, self.obs_dim:])
        self.actor_opt.step([self.actor.flatten(grads)])
        self.actor_updates += 1
        return float(-q.mean())

    def update(self, batch: Batch) -> dict:
        cfg = self.cfg
        a2 = self.actor_target.forward(batch.next_obs)
        q_next = self.critic_target.forward(np.concatenate([batch.next_obs, a2], axis=1))[:, 0]
        y = _bootstrap(batch.rew, batch.done, cfg.gamma, q_next)
        self._hook(y=y, next_q=q_next, done=batch.done, rew=batch.rew)
        critic_loss = _critic_step(self.critic, self.critic_opt, batch.obs, batch.act, y)
        self.critic_updates += 1
        actor_loss = self._actor_step(batch.obs, self.critic)
        soft_update(self.actor_target, self.actor, cfg.tau)
        soft_update(self.critic_target, self.critic, cfg.tau)
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}


class TD3(DDPG):
    algo = "td3"
    roles = ("actor", "actor_target", "critic1", "critic2", "critic1_target", "critic2_target")

    def _make_critics(self):
        self.critic1 = self._critic_net()
        self.critic2 = self._critic_net()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.critic1_opt = Adam([self.critic1.flat], self.cfg.lr_critic)
        self.critic2_opt = Adam([self.critic2.flat], self.cfg.lr_critic)

    def optimizers(self):
        return {"actor": self.actor_opt, "critic1": self.critic1_opt, "critic2": self.critic2_opt}

    def target_action(self, next_obs) -> np.ndarray:
        a2 = self.actor_target.forward(next_obs)
        if self.cfg.target_smoothing:
            noise = self.cfg.smoothing_std * self.rng.standard_normal(a2.shape)
            a2 = a2 + np.clip(noise, -self.cfg.smoothing_clip, self.cfg.smoothing_clip)
        return np.clip(a2, -1.0, 1.0)

    def update(self, batch: Batch) -> dict:
        cfg = self.cfg
        x2 = np.concatenate([batch.next_obs, self.target_action(batch.next_obs)], axis=1)
        q1 = self.critic1_target.forward(x2)[:, 0]
        q2 = self.critic2_target.forward(x2)[:, 0]
        q_next = np.minimum(q1, q2)
        y = _bootstrap(batch.rew, batch.done, cfg.gamma, q_next)
        self._hook(y=y, next_q=q_next, next_q1=q1, next_q2=q2, done=batch.done, rew=batch.rew)
        l1 = _critic_step(self.critic1, self.critic1_opt, batch.obs, batch.act, y)
        l2 = _critic_step(self.critic2, self.critic2_opt, batch.obs, batch.act, y)
        self.critic_updates += 1
        out = {"critic_loss": 0.5 * (l1 + l2)}
        if self.critic_updates % cfg.policy_delay == 0:
            out["actor_loss"] = self._actor_step(batch.obs, self.critic1)
            soft_update(self.actor_target, self.actor, cfg.tau)
            soft_update(self.critic1_target, self.critic1, cfg.tau)
            soft_update(self.critic2_target, self.critic2, cfg.tau)
        return out


def squashed_gaussian(mean, log_std, eps):
    """Reparameterized tanh-Gaussian sample and its log-density."""
    std = np.exp(log_std)
    u = mean + std * eps
    a = np.tanh(u)
    # log(1 - tanh(u)^2) written stably
    log_jac = 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
    logp = -0.5 * eps * eps - log_std - _HALF_LOG_2PI - log_jac
    return a, logp


class SAC(Agent):
    roles = ("actor", "critic1", "critic2", "critic1_target", "critic2_target")

    def __init__(self, cfg: AgentConfig, rng: np.random.Generator, **kw):
        super().__init__(cfg, rng, **kw)
        # two heads (mean, log-std) on one trunk
        self.actor = Mlp((self.obs_dim, *cfg.hidden, 2 * self.act_dim), "linear", rng)
        self.critic1 = self._critic_net()
        self.critic2 = self._critic_net()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_opt = Adam([self.actor.flat], cfg.lr_actor)
        self.critic1_opt = Adam([self.critic1.flat], cfg.lr_critic)
        self.critic2_opt = Adam([self.critic2.flat], cfg.lr_critic)
        self.log_alpha = np.array([math.log(cfg.alpha)]) if cfg.alpha > 0 else np.array([-np.inf])
        self.alpha_opt = Adam([self.log_alpha], cfg.lr_critic)

    @property
    def algo(self):
        return "sac-a" if self.cfg.auto_alpha else "sac-c"

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def optimizers(self):
        return {"actor": self.actor_opt, "critic1": self.critic1_opt, "critic2": self.critic2_opt}

    def _heads(self, out):
        raw = out[:, 1]
        return out[:, 0], np.clip(raw, LOG_STD_MIN, LOG_STD_MAX), raw

    def deterministic(self, obs) -> np.ndarray:
        out = self.actor.forward(np.atleast_2d(obs))
        return np.tanh(out[:, 0])

    def sample(self, obs, rng):
        mean, log_std, _ = self._heads(self.actor.forward(np.atleast_2d(obs)))
        return squashed_gaussian(mean, log_std, rng.standard_normal(len(mean)))

    def act(self, obs, explore: bool = False, noise_scale: float = 0.0,
            rng: np.random.Generator | None = None) -> float:
        if not explore:
            return float(self.deterministic(obs)[0])
        a, _ = self.sample(obs, rng)
        return float(a[0])

    def update(self, batch: Batch) -> dict:
        cfg = self.cfg
        n = len(batch.rew)
        alpha = self.alpha
        a2, logp2 = self.sample(batch.next_obs, self.rng)
        x2 = np.concatenate([batch.next_obs, a2[:, None]], axis=1)
        q1 = self.critic1_target.forward(x2)[:, 0]
        q2 = self.critic2_target.forward(x2)[:, 0]
        soft_value = np.minimum(q1, q2)
        if alpha > 0:
            soft_value = soft_value - alpha * logp2
        y = _bootstrap(batch.rew, batch.done, cfg.gamma, soft_value)
        self._hook(y=y, next_q=soft_value, next_q1=q1, next_q2=q2, next_logp=logp2,
                   done=batch.done, rew=batch.rew, alpha=alpha)
        l1 = _critic_step(self.critic1, self.critic1_opt, batch.obs, batch.act, y)
        l2 = _critic_step(self.critic2, self.critic2_opt, batch.obs, batch.act, y)
        self.critic_updates += 1

        actor_loss, logp = self._actor_step(batch.obs, alpha)
        out = {"critic_loss": 0.5 * (l1 + l2), "actor_loss": actor_loss, "alpha": alpha}
        if cfg.auto_alpha:
            # d/dlog_alpha of -log_alpha * (logp + target_entropy)
            grad = -float(np.mean(logp + cfg.target_entropy))
            self._hook(alpha_grad=grad, entropy=-float(np.mean(logp)))
            self.alpha_opt.step([np.array([grad])])
            out["alpha_loss"] = -float(self.log_alpha[0] * np.mean(logp + cfg.target_entropy))
        soft_update(self.critic1_target, self.critic1, cfg.tau)
        soft_update(self.critic2_target, self.critic2, cfg.tau)
        return out

    def actor_gradients(self, obs, alpha, eps):
        """Loss mean(alpha*logp - min(Q1, Q2)) and its actor gradients for fixed noise."""
        out, acache = self.actor.forward_cache(obs)
        mean, log_std, raw = self._heads(out)
        a, logp = squashed_gaussian(mean, log_std, eps)
        x = np.concatenate([obs, a[:, None]], axis=1)
        q1, c1 = self.critic1.forward_cache(x)
        q2, c2 = self.critic2.forward_cache(x)
        n = len(obs)
        pick1 = q1[:, 0] <= q2[:, 0]
        g1 = np.where(pick1, 1.0, 0.0)[:, None]
        _, gx1 = self.critic1.backward(c1, g1)
        _, gx2 = self.critic2.backward(c2, 1.0 - g1)
        dq_da = gx1[:, self.obs_dim] + gx2[:, self.obs_dim]
        std = np.exp(log_std)
        dtanh = 1.0 - a * a
        g_mean = (alpha * 2.0 * a - dq_da * dtanh) / n
        g_logstd = (alpha * (-1.0 + 2.0 * a * std * eps) - dq_da * dtanh * std * eps) / n
        g_logstd = g_logstd * ((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX))
        grads, _ = self.actor.backward(acache, np.stack([g_mean, g_logstd], axis=1))
        qmin = np.minimum(q1[:, 0], q2[:, 0])
        loss = float(np.mean(alpha * logp - qmin))
        return loss, grads, logp

    def _actor_step(self, obs, alpha):
        eps = self.rng.standard_normal(len(obs))
        loss, grads, logp = self.actor_gradients(obs, alpha, eps)
        self.actor_opt.step([self.actor.flatten(grads)])
        self.actor_updates += 1
        return loss, logp

    def _extra_state(self):
        return {"log_alpha": float(self.log_alpha[0]),
                "alpha_adam": {"t": self.alpha_opt.t, "m": float(self.alpha_opt.m[0][0]),
                               "v": float(self.alpha_opt.v[0][0])}}

    def _load_extra_state(self, meta):
        self.log_alpha[0] = meta["log_alpha"]
        st = meta["alpha_adam"]
        self.alpha_opt.t = st["t"]
        self.alpha_opt.m[0][0] = st["m"]
        self.alpha_opt.v[0][0] = st["v"]


def make_agent(algo: str, cfg: AgentConfig | None = None,
               rng: np.random.Generator | None = None) -> Agent:
    if algo not in ALGOS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGOS}")
    cfg = cfg or AgentConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    if algo == "ddpg":
        return DDPG(cfg, rng)
    if algo == "td3":
        return TD3(cfg, rng)
    cfg = AgentConfig(**{**vars(cfg), "auto_alpha": algo == "sac-a"})
    return SAC(cfg, rng)


def load_agent(directory) -> Agent:
    directory = Path(directory)
    try:
        meta = json.loads((directory / "agent.json").read_text())
        cfg = AgentConfig(**{**meta["config"], "hidden": tuple(meta["config"]["hidden"])})
        algo = meta["algo"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{directory}: missing or corrupt agent.json") from exc
    if algo not in ALGOS:
        raise CheckpointError(f"{directory}: unknown algorithm {algo!r}")
    return make_agent(algo, cfg).load(directory)


class ActorPolicy:
    """Greedy policy from a trained agent, for evaluation."""

    def __init__(self, agent: Agent):
        self.agent = agent
        self.policy_id = agent.algo

    def reset(self):
        pass

    def __call__(self, obs) -> float:
        return float(self.agent.deterministic(obs)[0])
