"""Train a small SAC agent with automatic temperature and compare it to the circle."""
import sys

from rosb import BaselineConfig, EnvConfig, PredefinedPath, compare, evaluate, metrics
from rosb.evaluation import rolling
from rosb.rl import ActorPolicy, TrainConfig, train

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
env = EnvConfig(depth=15.0).with_test("2b")
cfg = TrainConfig(parallel_envs=4, episodes=episodes, warmup_episodes=200)
res = train("sac-a", env, cfg, seed=0)
mean, _ = rolling([r["return"] for r in res.records], 200)
print(f"{res.total_steps} env steps, {res.updates} updates; "
      f"rolling return {mean[199]:.2f} -> {mean[-1]:.2f}")

learned = metrics(evaluate(ActorPolicy(res.agent), env, 20, seed=9))
circle = metrics(evaluate(PredefinedPath(BaselineConfig.for_depth(15.0), env), env, 20, seed=9))
for key, val in compare(learned, circle).items():
    if not key.startswith("per_step"):
        print(f"{key:28s} {val}")
