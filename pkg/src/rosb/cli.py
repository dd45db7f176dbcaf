"""Command-line entry point: ``rosb {train,eval,compare,sweep,export,rerun}``.

Exit codes: 0 success, 2 usage/config error, 3 data/artifact error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

from . import config as cfgmod
from .baseline import BaselineConfig, PredefinedPath
from .env import TEST_E_TH
from .evaluation import (
    ShapeMismatch,
    compare,
    evaluate,
    metrics,
    radius_sweep,
    rolling,
    write_json,
    write_rows_csv,
)
from .nn import CheckpointError
from .rl import ALGOS, ActorPolicy, load_agent, train
from .rl.train import TrainingDiverged, read_curve

log = logging.getLogger("rosb")

OUTPUT_ROOT_ENV = "ROSB_OUTPUT_ROOT"
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _out_dir(path: str) -> Path:
    p = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not p.is_absolute():
        p = Path(root) / p
    p.mkdir(parents=True, exist_ok=True)
    return p


def _settings(args) -> dict:
    """Built-in defaults < preset < config file < --set overrides."""
    flat = {}
    if getattr(args, "preset", None):
        flat.update(cfgmod.preset(args.preset))
    if getattr(args, "config", None):
        flat.update(cfgmod.load_config(args.config))
    for item in getattr(args, "set", None) or []:
        key, value = cfgmod.parse_override(item)
        flat[key] = value
    return flat


def _write_manifest(out: Path, command: str, args, effective: dict, outputs: list[str]):
    recorded = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    manifest = {
        "command": command,
        "args": recorded,
        "effective_config": effective,
        "seed": getattr(args, "seed", None),
        "version": _version(),
        "created": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(outputs),
    }
    write_json(manifest, out / "manifest.json")


def cmd_train(args) -> int:
    flat = _settings(args)
    env_cfg = cfgmod.env_config(flat)
    train_cfg = cfgmod.train_config(flat)
    if args.test is not None:
        env_cfg = env_cfg.with_test(args.test)
    if args.episodes is not None:
        train_cfg = replace(train_cfg, episodes=args.episodes)
    out = _out_dir(args.out)
    train(args.algo, env_cfg, train_cfg, args.seed, out_dir=out)
    outputs = ["learning_curve.csv", "rolling_reward.csv", "rolling_error.csv", "checkpoint"]
    _write_manifest(out, "train", args, {"env": env_cfg.to_dict(), "train": train_cfg.to_dict(),
                                         "algo": args.algo}, outputs)
    print(f"trained {args.algo} -> {out}")
    return 0


def _policy(spec: str, env_cfg, flat):
    if spec == "predefined":
        b = cfgmod.section(flat, "baseline")
        radius = b.get("radius", BaselineConfig.for_depth(env_cfg.depth).radius)
        return PredefinedPath(BaselineConfig(radius, b.get("capture_band", 10.0)), env_cfg)
    path = Path(spec)
    if path.is_file():
        path = path.parent
    return ActorPolicy(load_agent(path))


def cmd_eval(args) -> int:
    flat = _settings(args)
    env_cfg = cfgmod.env_config(flat)
    if args.depth is not None:
        env_cfg = replace(env_cfg, depth=args.depth)
    runs = args.runs if args.runs is not None else int(flat.get("eval.runs", 100))
    if runs < 1:
        raise UsageError("--runs must be >= 1")
    policy = _policy(args.policy, env_cfg, flat)
    out = _out_dir(args.out)
    traj = out if runs == 1 else None
    matrix = evaluate(policy, env_cfg, runs, args.seed, trajectory_dir=traj)
    matrix.to_csv(out / "run_matrix.csv")
    outputs = ["run_matrix.csv"]
    if runs >= 4:
        write_json(metrics(matrix), out / "metrics.json")
        outputs.append("metrics.json")
    if traj is not None:
        outputs.append("trajectory_0.csv")
    _write_manifest(out, "eval", args, {"env": env_cfg.to_dict(), "runs": runs}, outputs)
    print(f"evaluated {matrix.policy_id}: {matrix.n_runs}x{matrix.n_steps} -> {out}")
    return 0


def _read_metrics(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read metrics {path}: {exc}") from exc


def cmd_compare(args) -> int:
    a, b = _read_metrics(args.a), _read_metrics(args.b)
    try:
        result = compare(a, b)
    except (ShapeMismatch, KeyError) as exc:
        raise DataError(f"metrics files are not comparable: {exc}") from exc
    out = Path(args.out)
    if os.environ.get(OUTPUT_ROOT_ENV) and not out.is_absolute():
        out = Path(os.environ[OUTPUT_ROOT_ENV]) / out
    if out.suffix != ".json":
        out = out / "compare.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(result, out)

    def pct(v):
        return "n/a" if v is None else f"{v:+.1f}%"

    poi = result["prob_improvement_transient"]
    print(f"transient delta {pct(result['transient_delta_pct'])}, steady delta "
          f"{pct(result['steady_delta_pct'])}, PoI {'n/a' if poi is None else f'{poi:.3f}'} -> {out}")
    return 0


def _radii(text):
    try:
        vals = [float(x) for x in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise UsageError(f"bad radii list {text!r}") from exc
    return vals


def cmd_sweep(args) -> int:
    flat = _settings(args)
    sw = cfgmod.section(flat, "sweep")
    depth = args.depth if args.depth is not None else float(sw.get("depth", 200.0))
    radii = _radii(args.radii) if args.radii is not None else [float(r) for r in sw.get("radii", [])]
    if not radii or any(r <= 0 for r in radii):
        raise UsageError("--radii must list one or more positive radii")
    runs = args.runs if args.runs is not None else int(sw.get("runs", 100))
    env = cfgmod.env_config(flat)
    rows = radius_sweep(depth, radii, window=args.window, n_runs=runs, seed=args.seed,
                        sigma=env.sigma, epsilon_frac=env.epsilon_frac,
                        step_length=env.speed * env.dt)
    out = _out_dir(args.out)
    name = f"sweep_window{args.window}.csv"
    write_rows_csv(rows, out / name)
    _write_manifest(out, "sweep", args, {"depth": depth, "radii": radii, "runs": runs}, [name])
    print(f"sweep depth={depth} window={args.window} -> {out / name}")
    return 0


def cmd_export(args) -> int:
    """Plot-data CSVs: rolling reward/error curves and per-step IQM comparisons."""
    out = _out_dir(args.out)
    written = []
    if args.curve:
        try:
            rows = read_curve(args.curve)
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"cannot read learning curve {args.curve}: {exc}") from exc
        for name, key, window in (("fig_reward.csv", "return", args.reward_window),
                                  ("fig_error.csv", "final_e_q_m", args.error_window)):
            mean, sd = rolling([r[key] for r in rows], window)
            data = [{"episode": r["episode"], "mean": float(m), "sd": float(s)}
                    for r, m, s in zip(rows, mean, sd)]
            write_rows_csv(data, out / name)
            written.append(name)
    if args.metrics:
        ms = [_read_metrics(p) for p in args.metrics]
        n = {m["n_steps"] for m in ms}
        if len(n) != 1:
            raise DataError("metrics files have different step counts")
        data = []
        for k in range(n.pop()):
            row = {"step": k + 1}
            for m in ms:
                row[f"{m['policy_id']}_iqm"] = m["per_step_iqm"][k]
                row[f"{m['policy_id']}_sd"] = m["per_step_sd"][k]
            data.append(row)
        write_rows_csv(data, out / "fig_iqm.csv")
        written.append("fig_iqm.csv")
    if not written:
        raise UsageError("export needs --curve and/or --metrics")
    print("wrote " + ", ".join(written))
    return 0


def cmd_rerun(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        command = manifest["command"]
        recorded = manifest["args"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"bad manifest {args.manifest}: {exc}") from exc
    ns = argparse.Namespace(**recorded, out=args.out)
    return COMMANDS[command](ns)


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "compare": cmd_compare, "sweep": cmd_sweep,
            "export": cmd_export, "rerun": cmd_rerun}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rosb", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, preset=False):
        sp.add_argument("--config", help="YAML file with dotted keys")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        if preset:
            sp.add_argument("--preset", choices=sorted(cfgmod.PRESETS))

    t = sub.add_parser("train", help="train an agent")
    common(t)
    t.add_argument("--algo", required=True, choices=ALGOS)
    t.add_argument("--test", choices=sorted(TEST_E_TH), help="reward configuration")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--episodes", type=int)
    t.add_argument("--out", default="train")

    e = sub.add_parser("eval", help="evaluate a checkpoint or the predefined path")
    common(e, preset=True)
    e.add_argument("--policy", required=True, help="checkpoint directory or 'predefined'")
    e.add_argument("--runs", type=int)
    e.add_argument("--depth", type=float, help="target depth in meters")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default="eval")

    c = sub.add_parser("compare", help="compare two metrics.json files")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--out", default="compare.json")

    s = sub.add_parser("sweep", help="localization error against loop radius")
    common(s, preset=True)
    s.add_argument("--depth", type=float)
    s.add_argument("--radii", help="comma or space separated radii in meters")
    s.add_argument("--window", type=int, choices=(30, 300), default=30)
    s.add_argument("--runs", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="sweep")

    x = sub.add_parser("export", help="plot-data CSVs")
    x.add_argument("--curve", help="learning_curve.csv from train")
    x.add_argument("--metrics", nargs="*", help="metrics.json files from eval")
    x.add_argument("--reward-window", type=int, default=100_000)
    x.add_argument("--error-window", type=int, default=10_000)
    x.add_argument("--out", default="export")

    r = sub.add_parser("rerun", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"rosb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, TrainingDiverged) as exc:
        print(f"rosb: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
