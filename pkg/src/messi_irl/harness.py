"""Seeded experiments, parameter sweeps and CSV output.

Seed scheme: run seed ``k`` is expanded with ``numpy.random.SeedSequence(k)``
into four child streams, used in this order for environment construction,
expert demonstrations, unsupervised demonstrations and the initial reward.
Every algorithm and every sweep point that share ``k`` therefore see the
same environment and the same demonstrations.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .datagen import MIXTURES, MixtureSpec, generate_expert, generate_unsupervised
from .environments import BUILDERS, evaluate_policy, make_environment
from .learners import LearnerConfig, em_maxent, run_maxent, run_messi
from .penalty import TrainingSet

ALGORITHMS = ("maxent", "messi", "messimax", "em-maxent")
SWEEP_AXES = ("iterations", "u", "nu", "lambda0")
RUN_COLUMNS = ("axis_value", "seed", "iteration", "metric", "algorithm")
SUMMARY_COLUMNS = ("axis_value", "algorithm", "iteration", "mean", "stderr", "n")


class ConfigError(ValueError):
    """Raised for an invalid experiment configuration, before any computation."""


@dataclass(frozen=True)
class ExperimentConfig:
    environment: str = "gridworld"
    env_params: dict = field(default_factory=dict)
    algorithms: tuple = ("maxent", "messi")
    mixture: str = "mu1"
    l: int = 1
    u: int = 20
    nu: float = 0.5
    lambda0: float = 0.05
    theta_max: float = 500.0
    iterations: int = 100
    step_size: float = 1.0
    eta: int = 10
    seeds: Optional[tuple] = None
    reps: int = 20
    seed_base: int = 0
    sweep_axis: Optional[str] = None
    sweep_values: tuple = ()
    output: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.environment not in BUILDERS:
            raise ConfigError(f"unknown environment {self.environment!r}; choose from {sorted(BUILDERS)}")
        if not isinstance(self.env_params, dict):
            raise ConfigError("env_params must be a mapping")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms must not repeat")
        if self.mixture not in MIXTURES:
            raise ConfigError(f"unknown mixture {self.mixture!r}; choose from {MIXTURES}")
        checks = [
            (self.l >= 1, "l must be >= 1"),
            (self.u >= 0, "u must be >= 0"),
            (0.0 <= self.nu <= 1.0, "nu must lie in [0, 1]"),
            (self.lambda0 >= 0, "lambda0 must be >= 0"),
            (self.theta_max > 0, "theta_max must be > 0"),
            (self.iterations >= 1, "iterations must be >= 1"),
            (self.step_size > 0, "step_size must be > 0"),
            (self.eta >= 1, "eta must be >= 1"),
            (self.reps >= 1, "reps must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.seeds is not None and len(self.seeds) == 0:
            raise ConfigError("seeds must not be empty")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}; choose from {SWEEP_AXES}")
            if self.sweep_axis != "iterations" and not self.sweep_values:
                raise ConfigError(f"sweep over {self.sweep_axis} needs sweep_values")
            for v in self.sweep_values:
                try:
                    dataclasses.replace(self, sweep_axis=None, sweep_values=(), **{self.sweep_axis: v})
                except ConfigError as exc:
                    raise ConfigError(f"sweep value {v!r}: {exc}") from None

    @property
    def seed_list(self) -> tuple:
        if self.seeds is not None:
            return tuple(self.seeds)
        return tuple(range(self.seed_base, self.seed_base + self.reps))

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        names = {f.name for f in dataclasses.fields(cls)}
        if "algorithm" in doc:
            if "algorithms" in doc:
                raise ConfigError("give either 'algorithm' or 'algorithms'")
            doc["algorithms"] = doc.pop("algorithm")
        if "T" in doc:
            doc["iterations"] = doc.pop("T")
        sweep = doc.pop("sweep", None)
        if sweep is not None:
            if not isinstance(sweep, dict):
                raise ConfigError("sweep must be a mapping with 'axis' and 'values'")
            doc["sweep_axis"] = sweep.get("axis")
            doc["sweep_values"] = sweep.get("values", ())
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(doc.get("algorithms"), str):
            doc["algorithms"] = [doc["algorithms"]]
        for key in ("algorithms", "sweep_values", "seeds"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        for key in ("l", "u", "iterations", "eta", "reps", "seed_base", "workers"):
            if key in doc and not isinstance(doc[key], int):
                raise ConfigError(f"{key} must be an integer")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)


def seed_streams(seed: int):
    """Four child streams (environment, expert, unsupervised, theta_0) for a run seed."""
    env, expert, unsup, theta0 = np.random.SeedSequence(seed).spawn(4)
    return (
        np.random.default_rng(env),
        np.random.default_rng(expert),
        np.random.default_rng(unsup),
        int(theta0.generate_state(1)[0]),
    )


def build_bundle(cfg: ExperimentConfig, env_rng):
    params = dict(cfg.env_params)
    if cfg.environment == "gridworld":
        params.setdefault("rng", env_rng)
    return make_environment(cfg.environment, **params)


@dataclass
class RunData:
    """Everything shared by the algorithms for one seed."""

    bundle: object
    expert: list
    unsupervised: dict
    theta_seed: int


def prepare_run(cfg: ExperimentConfig, seed: int) -> RunData:
    env_rng, ex_rng, un_rng, theta_seed = seed_streams(seed)
    bundle = build_bundle(cfg, env_rng)
    expert = generate_expert(bundle, cfg.l, rng=ex_rng)
    unsup = {}
    state = un_rng.bit_generator.state
    for mix in {_mixture_for(a, cfg) for a in cfg.algorithms} - {None}:
        # every mixture restarts the unsupervised stream, so sets are paired
        un_rng.bit_generator.state = state
        spec = MixtureSpec.named(mix, cfg.nu)
        unsup[mix] = generate_unsupervised(bundle, spec, cfg.u, rng=un_rng)
    return RunData(bundle, expert, unsup, theta_seed)


def _mixture_for(algorithm: str, cfg: ExperimentConfig):
    if algorithm == "maxent":
        return None
    if algorithm == "messimax":
        return "ustar"
    return cfg.mixture


def learner_config(cfg: ExperimentConfig, bundle, theta_seed: int, lambda0=None) -> LearnerConfig:
    return LearnerConfig(
        iterations=cfg.iterations,
        theta_max=cfg.theta_max,
        lambda0=cfg.lambda0 if lambda0 is None else lambda0,
        seed=theta_seed,
        step_size=cfg.step_size,
        horizon=bundle.horizon,
    )


def run_algorithm(cfg: ExperimentConfig, data: RunData, algorithm: str):
    """Run one algorithm on prepared data; returns ``(theta_T, history)``."""
    bundle = data.bundle
    lcfg = learner_config(cfg, bundle, data.theta_seed)
    if algorithm == "maxent":
        return run_maxent(bundle.mdp, data.expert, lcfg)
    unsup = data.unsupervised[_mixture_for(algorithm, cfg)]
    if algorithm == "em-maxent":
        ts = TrainingSet.from_matrix(data.expert, unsup, np.eye(len(data.expert) + len(unsup)))
        return em_maxent(bundle.mdp, ts, lcfg, eta=cfg.eta)
    ts = TrainingSet.build(data.expert, unsup, bundle.similarity, **bundle.similarity_params)
    return run_messi(bundle.mdp, ts, lcfg)


def metric_curve(bundle, theta_T, history) -> np.ndarray:
    """Metric at iterations 0..T.

    Entries 0..T-1 come from the expected feature counts the learner already
    computed for theta_t; the last entry evaluates theta_T.
    """
    curve = [bundle.metric(f) for f in history.feature_counts]
    curve.append(evaluate_policy(bundle, theta_T))
    return np.array(curve)


def _seed_rows(args):
    cfg, seed, axis_value = args
    data = prepare_run(cfg, seed)
    rows = []
    for alg in cfg.algorithms:
        theta, hist = run_algorithm(cfg, data, alg)
        for t, m in enumerate(metric_curve(data.bundle, theta, hist)):
            rows.append({"axis_value": axis_value, "seed": seed, "iteration": t, "metric": float(m), "algorithm": alg})
    return rows


def _map(fn, jobs, workers):
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_experiment(cfg: ExperimentConfig, axis_value="") -> list[dict]:
    """Per-seed, per-iteration metric rows for every configured algorithm."""
    jobs = [(cfg, seed, axis_value) for seed in cfg.seed_list]
    return [row for rows in _map(_seed_rows, jobs, cfg.workers) for row in rows]


def sweep(cfg: ExperimentConfig, axis: Optional[str] = None, values=None) -> list[dict]:
    """Run one experiment per axis value with shared seeds.

    The ``iterations`` axis is covered by a single run: each row's
    ``axis_value`` is its iteration.
    """
    axis = axis or cfg.sweep_axis
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if axis == "iterations":
        rows = run_experiment(cfg)
        for r in rows:
            r["axis_value"] = r["iteration"]
        return rows
    values = tuple(cfg.sweep_values if values is None else values)
    if not values:
        raise ConfigError(f"sweep over {axis} needs values")
    rows = []
    for v in values:
        point = dataclasses.replace(cfg, sweep_axis=None, sweep_values=(), **{axis: v})
        rows.extend(run_experiment(point, axis_value=v))
    return rows


def aggregate(rows: list[dict]) -> list[dict]:
    """Mean and standard error over seeds for each (axis_value, algorithm, iteration)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["axis_value"], r["algorithm"], r["iteration"]), []).append(r["metric"])
    out = []
    for (v, alg, t), ms in groups.items():
        ms = np.asarray(ms)
        se = float(ms.std(ddof=1) / math.sqrt(ms.size)) if ms.size > 1 else 0.0
        out.append({"axis_value": v, "algorithm": alg, "iteration": t, "mean": float(ms.mean()), "stderr": se, "n": int(ms.size)})
    return out


def final_rows(rows: list[dict]) -> list[dict]:
    """Rows at the last iteration of each run."""
    last = max(r["iteration"] for r in rows)
    return [r for r in rows if r["iteration"] == last]


def write_csv(rows: list[dict], path, columns) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in columns})


def write_results(rows: list[dict], out_dir) -> tuple[Path, Path]:
    """Write ``runs.csv`` and ``summary.csv`` into ``out_dir``."""
    out_dir = Path(out_dir)
    runs, summary = out_dir / "runs.csv", out_dir / "summary.csv"
    write_csv(rows, runs, RUN_COLUMNS)
    write_csv(aggregate(rows), summary, SUMMARY_COLUMNS)
    return runs, summary
