"""Experiment harness: JSON configs validated against a shipped schema, a
solver registry spanning every environment, seeded batch execution with an
optional process pool, and deterministic CSV/JSON reports."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from copy import deepcopy
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .advisor import advise, usecase_traits
from .core import DEFAULT_DISCOUNT, metrics_summary, run_episode
from .envs import env_true_mdp, make_env
from .errors import ConfigError
from .rng import derive_seed

SCHEMA_PATH = Path(__file__).parent / "schemas" / "experiment.schema.json"

_REQUIRED = object()


def _solver_cfg(cfg: dict, **spec):
    """Fill defaults and reject unknown keys; _REQUIRED marks mandatory keys."""
    extra = set(cfg) - set(spec)
    if extra:
        raise ConfigError(f"unknown solver config keys: {sorted(extra)}")
    out = {}
    for key, default in spec.items():
        if key in cfg:
            out[key] = cfg[key]
        elif default is _REQUIRED:
            raise ConfigError(f"solver config missing required key '{key}'")
        else:
            out[key] = default
    return out


# ---------------------------------------------------------------- registry

def _agent_runner(build):
    def run(env_cfg, cfg, horizon, seed):
        env = make_env(env_cfg)
        return run_episode(env, build(env, cfg), horizon=horizon, seed=seed)

    return run


def _build_illa_olla(env, cfg):
    from .agents import IllaOllaAgent

    c = _solver_cfg(cfg, step_up=0.01, target_bler=0.1)
    return IllaOllaAgent(env.s50, step_up=c["step_up"], target_bler=c["target_bler"])


def _build_thompson(env, cfg):
    from .agents import ThompsonMcsAgent

    _solver_cfg(cfg)
    return ThompsonMcsAgent(env.rates)


def _build_fixed_mcs(env, cfg):
    from .agents import FixedMcsAgent

    return FixedMcsAgent(_solver_cfg(cfg, mcs=_REQUIRED)["mcs"])


def _build_water_fill(env, cfg):
    from .agents import WaterFillAgent

    _solver_cfg(cfg)
    return WaterFillAgent()


def _build_uniform_power(env, cfg):
    from .agents import UniformPowerAgent

    _solver_cfg(cfg)
    return UniformPowerAgent()


def _build_pf(env, cfg):
    from .agents import PfAgent

    return PfAgent(_solver_cfg(cfg, ewma_alpha=0.1)["ewma_alpha"])


def _build_round_robin(env, cfg):
    from .agents import RoundRobinAgent

    _solver_cfg(cfg)
    return RoundRobinAgent()


def _build_max_rate(env, cfg):
    from .agents import MaxRateAgent

    _solver_cfg(cfg)
    return MaxRateAgent()


def _build_dpp(env, cfg):
    from .agents import DppEnergyAgent

    return DppEnergyAgent(env, v_weight=_solver_cfg(cfg, v_weight=0.0)["v_weight"])


def _build_min_energy(env, cfg):
    from .agents import MinEnergyAgent

    _solver_cfg(cfg)
    return MinEnergyAgent()


def _build_es_thresholds(env, cfg):
    from .agents import EsThresholdAgent
    from .rules import EsThresholds

    c = _solver_cfg(cfg, lower=0.3, upper=0.9)
    return EsThresholdAgent(env, EsThresholds(lower=c["lower"], upper=c["upper"]))


def _build_mpc_energy(env, cfg):
    from .agents import MpcEnergyAgent, es_oracle_predictor, es_persistence_predictor

    c = _solver_cfg(cfg, predictor="oracle", plan_horizon=5, discount=1.0)
    if c["predictor"] == "oracle":
        predictor = es_oracle_predictor(env)
    elif c["predictor"] == "persistence":
        predictor = es_persistence_predictor()
    else:
        raise ConfigError(
            f"unknown predictor {c['predictor']!r}; known: ['oracle', 'persistence']"
        )
    return MpcEnergyAgent(env, predictor, horizon=c["plan_horizon"], discount=c["discount"])


def _build_mro(env, cfg):
    from .agents import MroAgent
    from .rules import MroParams

    c = _solver_cfg(cfg, hysteresis=3.0, time_to_trigger=3)
    return MroAgent(MroParams(hysteresis=c["hysteresis"], time_to_trigger=c["time_to_trigger"]))


def _build_greedy_ho(env, cfg):
    from .agents import GreedyHoAgent

    _solver_cfg(cfg)
    return GreedyHoAgent()


def _build_trunk(env, cfg):
    from .agents import TrunkAgent

    return TrunkAgent(env, _solver_cfg(cfg, thresholds=_REQUIRED)["thresholds"])


def _build_accept_all(env, cfg):
    from .agents import AcceptAllAgent

    _solver_cfg(cfg)
    return AcceptAllAgent(env.n_classes)


def _run_value_iteration(env_cfg, cfg, horizon, seed):
    from .agents import TablePolicyAgent
    from .planning import value_iteration

    c = _solver_cfg(cfg, tol=1e-8)
    env = make_env(env_cfg)
    mdp = env.mdp if hasattr(env, "mdp") else env_true_mdp(env)
    table = value_iteration(mdp, tol=c["tol"])
    return run_episode(env, TablePolicyAgent(env, table.policy), horizon=horizon, seed=seed)


def _run_q_learning(env_cfg, cfg, horizon, seed):
    from .agents import TablePolicyAgent
    from .planning import q_learning

    c = _solver_cfg(cfg, train_episodes=100, train_horizon=200)
    env = make_env(env_cfg)
    qt = q_learning(
        env,
        episodes=c["train_episodes"],
        horizon=c["train_horizon"],
        seed=derive_seed(seed, 7),
    )
    return run_episode(env, TablePolicyAgent(env, qt.greedy_policy()), horizon=horizon, seed=seed)


def _run_bo_tracker(env_cfg, cfg, horizon, seed):
    from .bandits import TRACKER_WINDOW, bo_beam_tracker

    c = _solver_cfg(
        cfg, budget_per_step=_REQUIRED, kernel=None, kappa=2.0, window=TRACKER_WINDOW
    )
    return bo_beam_tracker(
        make_env(env_cfg),
        budget_per_step=c["budget_per_step"],
        kernel=c["kernel"],
        kappa=c["kappa"],
        window=c["window"],
        horizon=horizon,
        seed=seed,
    )


def _run_knn_tracker(env_cfg, cfg, horizon, seed):
    from .agents import knn_beam_tracker

    c = _solver_cfg(cfg, budget_per_step=_REQUIRED)
    return knn_beam_tracker(
        make_env(env_cfg), budget_per_step=c["budget_per_step"], horizon=horizon, seed=seed
    )


def _run_full_scan(env_cfg, cfg, horizon, seed):
    from .agents import full_scan_tracker

    _solver_cfg(cfg)
    return full_scan_tracker(make_env(env_cfg), horizon=horizon, seed=seed)


@dataclass(frozen=True)
class SolverSpec:
    envs: tuple
    run: object  # (env_cfg, solver_cfg, horizon, seed) -> EpisodeLog


SOLVERS = {
    "illa-olla": SolverSpec(("link_adaptation",), _agent_runner(_build_illa_olla)),
    "thompson-mcs": SolverSpec(("link_adaptation",), _agent_runner(_build_thompson)),
    "fixed-mcs": SolverSpec(("link_adaptation",), _agent_runner(_build_fixed_mcs)),
    "water-fill": SolverSpec(("power_control",), _agent_runner(_build_water_fill)),
    "uniform-power": SolverSpec(("power_control",), _agent_runner(_build_uniform_power)),
    "proportional-fair": SolverSpec(("scheduling",), _agent_runner(_build_pf)),
    "round-robin": SolverSpec(("scheduling",), _agent_runner(_build_round_robin)),
    "max-rate": SolverSpec(("scheduling",), _agent_runner(_build_max_rate)),
    "dpp-energy": SolverSpec(("energy_saving",), _agent_runner(_build_dpp)),
    "min-energy": SolverSpec(("energy_saving",), _agent_runner(_build_min_energy)),
    "es-thresholds": SolverSpec(("energy_saving",), _agent_runner(_build_es_thresholds)),
    "mpc-energy": SolverSpec(("energy_saving",), _agent_runner(_build_mpc_energy)),
    "mro": SolverSpec(("handover",), _agent_runner(_build_mro)),
    "greedy-ho": SolverSpec(("handover",), _agent_runner(_build_greedy_ho)),
    "trunk": SolverSpec(("admission_control",), _agent_runner(_build_trunk)),
    "accept-all": SolverSpec(("admission_control",), _agent_runner(_build_accept_all)),
    "value-iteration": SolverSpec(("tabular", "admission_control"), _run_value_iteration),
    "q-learning": SolverSpec(("tabular", "admission_control"), _run_q_learning),
    "bo-tracker": SolverSpec(("beamforming",), _run_bo_tracker),
    "knn-tracker": SolverSpec(("beamforming",), _run_knn_tracker),
    "full-scan": SolverSpec(("beamforming",), _run_full_scan),
}

ENV_USE_CASE = {
    "link_adaptation": "LA",
    "power_control": "PC",
    "beamforming": "BF",
    "scheduling": "SC",
    "energy_saving": "ES",
    "handover": "HO",
    "admission_control": "AC",
    "tabular": "AC",  # enumerable MDPs share the exact-planning story
}


def check_compatibility(solver_name: str, env_kind: str) -> None:
    spec = SOLVERS.get(solver_name)
    if spec is None:
        raise ConfigError(f"unknown solver {solver_name!r}; known: {sorted(SOLVERS)}")
    if env_kind in spec.envs:
        return
    case = ENV_USE_CASE.get(env_kind)
    hint = ""
    if case is not None:
        rec = advise(usecase_traits(case))
        walk = "; ".join(f"{q} {a}" for q, a in rec.path)
        hint = f" Advisor reasoning for this env: {walk} -> {rec.technique} ({rec.solver_hint})."
    raise ConfigError(
        f"solver '{solver_name}' supports {list(spec.envs)}, not '{env_kind}'.{hint}"
    )


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    env: dict
    solvers: tuple  # of (name, label, cfg-dict)
    horizon: int = 100
    n_episodes: int = 1
    seeds: tuple = (0,)
    outputs: str = "outputs"
    metrics: str = "basic"

    def __post_init__(self):
        if not self.solvers:
            raise ConfigError("at least one solver required")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        labels = [label for _, label, _ in self.solvers]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate solver labels: {sorted(labels)}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        schema = json.loads(SCHEMA_PATH.read_text())
        try:
            jsonschema.validate(raw, schema)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config invalid at {exc.json_path}: {exc.message}") from exc
        seeds = raw.get("seeds", [0])
        if isinstance(seeds, dict):
            seeds = [derive_seed(seeds["base"], i) for i in range(seeds["count"])]
        solvers = tuple(
            (s["name"], s.get("label", s["name"]), dict(s.get("config", {})))
            for s in raw["solvers"]
        )
        return cls(
            env=dict(raw["env"]),
            solvers=solvers,
            horizon=raw.get("horizon", 100),
            n_episodes=raw.get("n_episodes", 1),
            seeds=tuple(int(s) for s in seeds),
            outputs=raw.get("outputs", "outputs"),
            metrics=raw.get("metrics", "basic"),
        )

    def to_dict(self) -> dict:
        return {
            "env": self.env,
            "solvers": [
                {"name": n, "label": l, "config": c} for n, l, c in self.solvers
            ],
            "horizon": self.horizon,
            "n_episodes": self.n_episodes,
            "seeds": list(self.seeds),
            "outputs": self.outputs,
            "metrics": self.metrics,
        }


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------- execution

def _run_cell(args):
    """One (solver, seed) cell; top level so a process pool can ship it."""
    env_cfg, name, solver_cfg, horizon, n_episodes, seed = args
    runner = SOLVERS[name].run
    return [
        runner(env_cfg, solver_cfg, horizon, derive_seed(seed, ep))
        for ep in range(n_episodes)
    ]


def resolve_jobs(jobs=None) -> int:
    if jobs is None:
        jobs = os.environ.get("OCCAM_RRM_JOBS", "1")
    try:
        jobs = int(jobs)
    except (TypeError, ValueError):
        raise ConfigError(f"jobs must be an integer, got {jobs!r}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    return jobs


def run_experiment(cfg: ExperimentConfig, jobs=None) -> Path:
    """Run every (solver, seed) cell, write per-episode CSVs and summary.json,
    and return the summary path. Cells may run in a process pool; outputs are
    merged in config order, so results never depend on scheduling."""
    env_kind = cfg.env.get("env")
    for name, _, _ in cfg.solvers:
        check_compatibility(name, env_kind)
    make_env(cfg.env)  # surface env config errors before any run

    jobs = resolve_jobs(jobs)
    cells = [
        (index, seed, (cfg.env, name, solver_cfg, cfg.horizon, cfg.n_episodes, seed))
        for index, (name, _, solver_cfg) in enumerate(cfg.solvers)
        for seed in cfg.seeds
    ]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, [args for _, _, args in cells]))
    else:
        results = [_run_cell(args) for _, _, args in cells]
    by_cell = {(index, seed): logs for (index, seed, _), logs in zip(cells, results)}

    out_dir = Path(cfg.outputs)
    episode_dir = out_dir / "episodes"
    episode_dir.mkdir(parents=True, exist_ok=True)

    summary = {"config": cfg.to_dict(), "env": env_kind, "solvers": {}}
    for index, (name, label, _) in enumerate(cfg.solvers):
        env = make_env(cfg.env)
        discount = float(getattr(env, "discount", DEFAULT_DISCOUNT))
        solver_logs = []
        files = []
        per_seed = {}
        for seed in cfg.seeds:
            logs = by_cell[(index, seed)]
            solver_logs.extend(logs)
            for ep, log in enumerate(logs):
                rel = f"episodes/{label}_seed{seed}_ep{ep}.csv"
                log.to_csv(out_dir / rel)
                files.append(rel)
            seed_metrics = metrics_summary(logs, kind="basic", discount=discount)
            per_seed[str(seed)] = seed_metrics.to_dict()
        record = metrics_summary(solver_logs, kind=cfg.metrics, discount=discount)
        summary["solvers"][label] = {
            "name": name,
            "metrics": record.to_dict(),
            "per_seed": per_seed,
            "episode_files": files,
        }

    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return summary_path


# ---------------------------------------------------------------- sweep

def _set_by_path(root, dotted: str, value):
    """Resolve a dotted path like 'env.hysteresis' or 'solvers.0.config.v'
    and set its leaf. List segments must be in-range indices; the leaf of a
    dict may be a new key (env and solver configs are open maps)."""
    parts = dotted.split(".")
    node = root
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(node, list):
            try:
                idx = int(part)
            except ValueError:
                raise ConfigError(f"path '{dotted}': '{part}' is not a list index")
            if not 0 <= idx < len(node):
                raise ConfigError(f"path '{dotted}': index {idx} out of range")
            if last:
                node[idx] = value
            else:
                node = node[idx]
        elif isinstance(node, dict):
            if last:
                node[part] = value
            elif part not in node:
                raise ConfigError(f"path '{dotted}': key '{part}' not found")
            else:
                node = node[part]
        else:
            raise ConfigError(f"path '{dotted}': cannot descend into {type(node).__name__}")


_PROFILE_COLUMNS = {
    "basic": (),
    "scheduling": ("sum_log_throughput",),
    "beam": ("accuracy", "mean_abs_beam_error"),
}


def sweep(cfg: ExperimentConfig, param_path: str, values, jobs=None) -> Path:
    """Re-run the experiment once per value of a dotted config parameter and
    aggregate one CSV row per (value, solver)."""
    if not values:
        raise ConfigError("sweep needs a nonempty list of values")
    base = cfg.to_dict()
    out_dir = Path(cfg.outputs)
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = ("mean_reward", "discounted_return") + _PROFILE_COLUMNS[cfg.metrics]

    rows = []
    for i, value in enumerate(values):
        raw = deepcopy(base)
        _set_by_path(raw, param_path, value)
        raw["outputs"] = str(out_dir / f"value_{i:03d}")
        summary_path = run_experiment(ExperimentConfig.from_dict(raw), jobs=jobs)
        summary = json.loads(summary_path.read_text())
        for _, label, _ in cfg.solvers:
            metrics = summary["solvers"][label]["metrics"]
            rows.append(
                [param_path, json.dumps(value), label]
                + [repr(float(metrics[c])) for c in columns]
            )

    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "value", "solver"] + list(columns))
        writer.writerows(rows)
    return sweep_path
