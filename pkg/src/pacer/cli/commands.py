"""Subcommand bodies. Each returns a process exit code."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import envs as E
from ..actor import sample_actions_batch
from ..critic import twin_min_values
from ..diagnostics import policy_bimodality
from ..errors import CheckpointError, ConfigurationError, DataError, TrainingError
from ..trainer import evaluate, load_checkpoint, run_training
from ..trainer.loop import EVAL_SEED_OFFSET
from .config import RunConfig
from .plot import plot_metrics

EXIT_OK = 0
EXIT_TRAINING = 1
EXIT_CONFIG = 2
EXIT_CHECKPOINT = 3
EXIT_DATA = 4


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def git_blob_hash(data: bytes) -> str:
    """Hash of ``data`` as git stores it: sha1 over ``blob <len>\\0`` plus the bytes."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def content_hash(path) -> str:
    """Blob hash of a file, or a hash over sorted (relative name, blob hash) pairs of a directory."""
    path = Path(path)
    if path.is_file():
        return git_blob_hash(path.read_bytes())
    h = hashlib.sha1()
    for f in sorted(p for p in path.rglob("*") if p.is_file()):
        h.update(f"{f.relative_to(path).as_posix()}\0{git_blob_hash(f.read_bytes())}\n".encode())
    return h.hexdigest()


def train_seed(run: RunConfig, seed: int, root: Path, quiet=False) -> int:
    run_dir = root / f"seed{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    single = run.for_seed(seed)
    single.save(run_dir / "config.json")
    cfg = single.train_config(seed)
    manifest = {"env": run.env, "seed": seed, "config_hash": single.digest(),
                "metrics": f"metrics_seed{seed}.csv", "started": _now()}

    def progress(n, row):
        if not quiet:
            print(f"[seed {seed}] step {n} eval_return_mean {row['eval_return_mean']:.3f}", flush=True)

    code = EXIT_OK
    try:
        run_training(E.make(run.env), cfg, out_dir=run_dir, progress=progress,
                     metrics_name=manifest["metrics"])
        manifest["status"] = "completed"
        manifest["checkpoint"] = "checkpoints/final"
        manifest["checkpoint_hash"] = content_hash(run_dir / "checkpoints" / "final")
    except TrainingError as exc:
        print(f"training failed for seed {seed}: {exc}", file=sys.stderr)
        manifest["status"] = "failed"
        manifest["error"] = str(exc)
        code = EXIT_TRAINING
    manifest["finished"] = _now()
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return code


def cmd_train(config_path, overrides=(), cvar=None, quiet=False) -> int:
    run = RunConfig.load(config_path).with_overrides(overrides)
    if cvar is not None:
        run = run.with_overrides(["utility.kind=cvar", f"utility.cvar_level={cvar}"])
    root = run.resolved_out_dir()
    root.mkdir(parents=True, exist_ok=True)
    run.save(root / "config.json")
    for seed in run.seeds:
        code = train_seed(run, seed, root, quiet)
        if code != EXIT_OK:
            return code
    return EXIT_OK


def _checkpoint_dir(path) -> Path:
    """Accept a checkpoint directory or a run directory holding ``checkpoints/final``."""
    path = Path(path)
    if (path / "meta.json").is_file():
        return path
    if (path / "checkpoints" / "final" / "meta.json").is_file():
        return path / "checkpoints" / "final"
    raise CheckpointError(f"no checkpoint found at {path}")


def _load(path, env_name=None):
    ck = load_checkpoint(_checkpoint_dir(path))
    name = env_name or ck.meta["env"]
    env = E.make(name)
    if env.spec.state_dim != ck.meta["state_dim"] or env.spec.action_dim != ck.meta["action_dim"]:
        raise CheckpointError(
            f"checkpoint dims (state {ck.meta['state_dim']}, action {ck.meta['action_dim']}) do not match "
            f"{name} (state {env.spec.state_dim}, action {env.spec.action_dim})")
    return ck, env


def return_cvar(returns, level: float) -> float:
    """Mean of the worst ``ceil(level * n)`` returns."""
    r = np.sort(np.asarray(returns, dtype=np.float64))
    k = max(1, int(np.ceil(level * len(r) - 1e-12)))
    return float(r[:k].mean())


def cmd_eval(checkpoint, env=None, episodes=10, cvar=None, seed=None, out=None) -> int:
    if episodes < 1:
        raise ConfigurationError("episodes must be at least 1", "episodes")
    ck, e = _load(checkpoint, env)
    seed = ck.meta["config"]["seed"] + EVAL_SEED_OFFSET if seed is None else seed
    res = evaluate(ck.actor, e, episodes, ck.normalizer, seed=seed)
    summary = {"env": e.spec.name, **res.summary()}
    if cvar is not None:
        summary["cvar_level"] = cvar
        summary["return_cvar"] = return_cvar(res.returns, cvar)
    print(json.dumps(summary), file=out or sys.stdout)
    return EXIT_OK


def cmd_plot(csv_paths, output_path, window=100) -> int:
    path = plot_metrics(csv_paths, output_path, window)
    print(path)
    return EXIT_OK


def cmd_bimodality(checkpoint, n_samples=100_000, seed=0, out=None) -> int:
    ck, _ = _load(checkpoint)
    rep = policy_bimodality(ck.actor, n_samples, rng=np.random.default_rng(seed), normalizer=ck.normalizer)
    d = rep.to_dict()
    d["verdict"] = "PASS" if rep.passed else "FAIL"
    print(json.dumps(d), file=out or sys.stdout)
    return EXIT_OK


def _vector(text, dim, key):
    try:
        v = np.array([float(x) for x in str(text).split(",")], dtype=np.float64)
    except ValueError:
        raise ConfigurationError(f"{key} must be comma-separated numbers", key) from None
    if v.shape != (dim,):
        raise ConfigurationError(f"{key} must have {dim} entries, got {v.size}", key)
    return v


def _write_csv(header, rows, output):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[repr(float(x)) for x in row] for row in rows])
    if output is None or output == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(buf.getvalue())


def cmd_sample(checkpoint, state, n=1000, mode="eval", seed=0, output=None) -> int:
    """Write ``n`` actions drawn at ``state`` as CSV with columns a0..a{d-1}."""
    ck, e = _load(checkpoint)
    s = _vector(state, e.spec.state_dim, "state")
    if ck.normalizer is not None:
        s = ck.normalizer.normalize(s)
    acts = sample_actions_batch(ck.actor, s, n, mode, np.random.default_rng(seed))
    _write_csv([f"a{i}" for i in range(e.spec.action_dim)], acts, output)
    return EXIT_OK


def cmd_quantiles(checkpoint, state, action, k=32, output=None) -> int:
    """Write (tau_hat, z) on a uniform grid of ``k`` midpoints, z from the online twin minimum."""
    ck, e = _load(checkpoint)
    s = _vector(state, e.spec.state_dim, "state")
    a = _vector(action, e.spec.action_dim, "action")
    if ck.normalizer is not None:
        s = ck.normalizer.normalize(s)
    tau_hats = (np.arange(k) + 0.5) / k
    z = twin_min_values(ck.critics, ck.critics.online, s[None], a[None], tau_hats[None])[0]
    _write_csv(["tau_hat", "z"], np.stack([tau_hats, z], axis=1), output)
    return EXIT_OK


def run_guarded(fn, *args, **kwargs) -> int:
    """Map package errors to exit codes, printing the message to stderr."""
    try:
        return fn(*args, **kwargs)
    except ConfigurationError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"config error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
