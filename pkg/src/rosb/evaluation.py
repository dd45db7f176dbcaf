"""Batch evaluation, robust statistics, radius sweeps and metrics files."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .env import EnvConfig, RangeOnlyEnv, write_trajectory_csv
from .estimator import solve_ls
from .geometry import seeded_rng, to_meters, to_scaled

TRANSIENT = (1, 50)  # inclusive, 1-based steps
STEADY = (150, 200)


@dataclass
class RunMatrix:
    errors: np.ndarray  # (n_runs, n_steps), meters
    policy_id: str
    seeds: list

    def __post_init__(self):
        self.errors = np.asarray(self.errors, dtype=float)
        if self.errors.ndim != 2:
            raise ValueError("errors must be a run x step grid")
        if not np.all(np.isfinite(self.errors)):
            raise ValueError("errors must be finite")

    @property
    def n_runs(self):
        return self.errors.shape[0]

    @property
    def n_steps(self):
        return self.errors.shape[1]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "seed"] + [f"step_{k}" for k in range(1, self.n_steps + 1)])
            for i, row in enumerate(self.errors):
                w.writerow([i, self.seeds[i]] + [repr(float(x)) for x in row])
        return path

    @classmethod
    def from_csv(cls, path, policy_id: str = "") -> "RunMatrix":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        return cls(np.array([[float(x) for x in r[2:]] for r in rows]), policy_id,
                   [int(r[1]) for r in rows])


def evaluate(policy, env_config: EnvConfig, n_runs: int, seed: int,
             trajectory_dir=None) -> RunMatrix:
    """Run ``n_runs`` full-length episodes of ``policy`` and record e_q per step.

    ``policy`` is a callable obs -> action with an optional ``reset()``.
    Bound violations do not end the episode here, so every row has
    ``max_steps`` entries.
    """
    cfg = replace(env_config, terminate_on_bounds=False)
    errors = np.zeros((n_runs, cfg.max_steps))
    seeds = []
    for run in range(n_runs):
        run_seed = int(seeded_rng(seed, run).integers(2**31))
        seeds.append(run_seed)
        env = RangeOnlyEnv(cfg, record=trajectory_dir is not None)
        obs = env.reset(seeded_rng(run_seed))
        if hasattr(policy, "reset"):
            policy.reset()
        for k in range(cfg.max_steps):
            res = env.step(policy(obs))
            obs = res.obs.to_array()
            errors[run, k] = to_meters(res.info["e_q"])
        if trajectory_dir is not None:
            write_trajectory_csv(env.trajectory, Path(trajectory_dir) / f"trajectory_{run}.csv")
    return RunMatrix(errors, getattr(policy, "policy_id", "policy"), seeds)


def iqm(values) -> float:
    """Interquartile mean: drop floor(n/4) samples from each end, average the rest."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = len(x)
    if n < 4:
        raise ValueError("iqm needs at least 4 values")
    k = n // 4
    return float(np.mean(x[k:n - k]))


def probability_of_improvement(a, b) -> float:
    """P(a < b) over all pairs, ties counting 1/2 (lower is better)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) == 0 or len(b) == 0:
        raise ValueError("samples must be non-empty")
    less = (a[:, None] < b[None, :]).sum()
    ties = (a[:, None] == b[None, :]).sum()
    return float((less + 0.5 * ties) / (len(a) * len(b)))


def rolling(values, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Trailing mean and SD; the first ``window - 1`` points use what is available."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(values, dtype=float)
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    c2 = np.concatenate([[0.0], np.cumsum(x * x)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    n = idx - lo
    mean = (c1[idx] - c1[lo]) / n
    var = np.maximum((c2[idx] - c2[lo]) / n - mean * mean, 0.0)
    if window == 1:
        return x.copy(), np.zeros_like(x)
    return mean, np.sqrt(var)


def window_means(matrix: RunMatrix, window: tuple[int, int]) -> np.ndarray | None:
    """Per-run mean error over 1-based inclusive ``window``; None if it is out of range."""
    lo, hi = window
    hi = min(hi, matrix.n_steps)
    if lo > hi:
        return None
    return matrix.errors[:, lo - 1:hi].mean(axis=1)


def _maybe(fn, *xs):
    return None if any(x is None for x in xs) else fn(*xs)


def metrics(matrix: RunMatrix) -> dict:
    e = matrix.errors
    transient = window_means(matrix, TRANSIENT)
    steady = window_means(matrix, STEADY)
    return {
        "policy_id": matrix.policy_id,
        "n_runs": matrix.n_runs,
        "n_steps": matrix.n_steps,
        "per_step_iqm": [iqm(e[:, k]) for k in range(matrix.n_steps)],
        "per_step_sd": e.std(axis=0).tolist(),
        "per_step_rmse": np.sqrt(np.mean(e * e, axis=0)).tolist(),
        "transient_iqm": _maybe(iqm, transient),
        "steady_iqm": _maybe(iqm, steady),
        "transient_run_means": None if transient is None else transient.tolist(),
        "steady_run_means": None if steady is None else steady.tolist(),
        "prob_improvement_vs": {},
    }


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True))
    return path


class ShapeMismatch(ValueError):
    pass


def compare(a: dict, b: dict) -> dict:
    """Side-by-side comparison of two metrics dicts (``a`` relative to ``b``)."""
    if a["n_runs"] != b["n_runs"] or a["n_steps"] != b["n_steps"]:
        raise ShapeMismatch(f"{a['n_runs']}x{a['n_steps']} vs {b['n_runs']}x{b['n_steps']}")

    def delta(key):
        if a[key] is None or b[key] is None:
            return None
        return 100.0 * (a[key] - b[key]) / b[key] if b[key] != 0 else 0.0

    return {
        "a": a["policy_id"], "b": b["policy_id"],
        "per_step_iqm_a": a["per_step_iqm"], "per_step_iqm_b": b["per_step_iqm"],
        "transient_delta_pct": delta("transient_iqm"),
        "steady_delta_pct": delta("steady_iqm"),
        "prob_improvement_transient": _maybe(probability_of_improvement,
                                             a["transient_run_means"], b["transient_run_means"]),
        "prob_improvement_steady": _maybe(probability_of_improvement,
                                          a["steady_run_means"], b["steady_run_means"]),
    }


def circle_positions(radius: float, n: int, step_length: float, phase: float) -> np.ndarray:
    """``n`` consecutive chord points of length ``step_length`` on a centred circle."""
    dtheta = 2.0 * math.asin(min(1.0, step_length / (2.0 * radius)))
    theta = phase + dtheta * np.arange(n)
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


def radius_sweep(depth: float, radii, window: int = 30, n_runs: int = 100, seed: int = 0,
                 sigma: float = 1.0, epsilon_frac: float = 0.01,
                 step_length: float = 30.0) -> list[dict]:
    """LS error for an agent on a perfect circle around the true target.

    All lengths in meters. For each radius the newest ``window`` chord points
    (one ping every ``step_length``) are used. Returns one row per radius with
    RMSE, mean, SD and median error over ``n_runs`` Monte-Carlo runs.
    """
    radii = list(radii)
    if not radii or any(not r > 0 for r in radii):
        raise ValueError("radii must be a non-empty list of positive values")
    z = to_scaled(depth)
    s_sig = to_scaled(sigma)
    rows = []
    for i, radius in enumerate(radii):
        rng = seeded_rng(seed, i)
        R = to_scaled(radius)
        err = np.empty(n_runs)
        for run in range(n_runs):
            pos = circle_positions(R, window, to_scaled(step_length), rng.uniform(-math.pi, math.pi))
            slant = np.hypot(np.linalg.norm(pos, axis=1), z)
            noisy = slant + rng.normal(epsilon_frac * slant, s_sig)
            # redraw the rare ranges that noise pushes below the depth
            while np.any(bad := noisy < z):
                noisy[bad] = slant[bad] + rng.normal(epsilon_frac * slant[bad], s_sig)
            ranges = np.sqrt((noisy - z) * (noisy + z))
            est = solve_ls(pos, ranges)
            err[run] = to_meters(np.linalg.norm(est.q_hat)) if est.valid else np.nan
        ok = err[np.isfinite(err)]
        rows.append({"radius_m": float(radius), "window": window, "n_runs": n_runs,
                     "rmse_m": float(np.sqrt(np.mean(ok**2))), "mean_m": float(ok.mean()),
                     "sd_m": float(ok.std()), "median_m": float(np.median(ok)),
                     "invalid": int(n_runs - len(ok))})
    return rows


def write_rows_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return path
