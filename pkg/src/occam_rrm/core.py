"""Sequential-decision core: environment and policy contracts, the episode
engine, discounted returns, and metric summaries shared by every solver."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import ConfigError, InvalidActionError, MissingDiagnosticError
from .rng import STREAM_POLICY, derive_seed

DEFAULT_DISCOUNT = 0.99
DEFAULT_HORIZON = 1000

_ROW_SUM_TOL = 1e-9


@dataclass
class TabularMdp:
    """Finite MDP given by explicit transition and reward tables.

    Parameters
    ----------
    n_states, n_actions : int
        Sizes of the (enumerated) state and action spaces.
    transition : ndarray, shape (n_states, n_actions, n_states)
        transition[s, a, s'] = P(s' | s, a). Rows must sum to one.
    reward : ndarray, shape (n_states, n_actions)
        Expected immediate reward r(s, a).
    discount : float
        Discount factor, strictly below one.
    """

    n_states: int
    n_actions: int
    transition: np.ndarray
    reward: np.ndarray
    discount: float = DEFAULT_DISCOUNT

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.reward = np.asarray(self.reward, dtype=float)
        if self.n_states < 1 or self.n_actions < 1:
            raise ConfigError("n_states and n_actions must be positive")
        if self.transition.shape != (self.n_states, self.n_actions, self.n_states):
            raise ConfigError(
                f"transition shape {self.transition.shape} != "
                f"{(self.n_states, self.n_actions, self.n_states)}"
            )
        if self.reward.shape != (self.n_states, self.n_actions):
            raise ConfigError(
                f"reward shape {self.reward.shape} != {(self.n_states, self.n_actions)}"
            )
        if not (0.0 <= self.discount < 1.0):
            raise ConfigError(f"discount must lie in [0, 1), got {self.discount}")
        if np.any(self.transition < -_ROW_SUM_TOL):
            raise ConfigError("transition probabilities must be nonnegative")
        row_sums = self.transition.sum(axis=2)
        bad = np.abs(row_sums - 1.0) > _ROW_SUM_TOL
        if np.any(bad):
            s, a = np.argwhere(bad)[0]
            raise ConfigError(
                f"transition row (state={s}, action={a}) sums to {row_sums[s, a]!r}"
            )
        if not np.all(np.isfinite(self.reward)):
            raise ConfigError("reward table must be finite")


@dataclass
class StepOutcome:
    """One environment transition: next observation, reward, termination flag,
    plus named per-step diagnostics (throughputs, optimal beam, ...)."""

    observation: Any
    reward: float
    done: bool = False
    diagnostics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.reward = float(self.reward)
        if not np.isfinite(self.reward):
            raise ValueError(f"non-finite reward {self.reward}")


@dataclass
class StepRecord:
    """Entry of an EpisodeLog: the observation the policy acted on, the action
    taken, the reward received, and the step diagnostics."""

    observation: Any
    action: Any
    reward: float
    diagnostics: dict[str, float]


@dataclass
class EpisodeLog:
    steps: list[StepRecord]
    seed: int
    env_name: str

    def __len__(self):
        return len(self.steps)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([s.reward for s in self.steps], dtype=float)

    @property
    def actions(self) -> list:
        return [s.action for s in self.steps]

    def diagnostic_keys(self) -> list[str]:
        keys: set[str] = set()
        for s in self.steps:
            keys.update(s.diagnostics)
        return sorted(keys)

    def to_csv(self, path) -> None:
        """Write one row per step with columns t, action, reward and the
        union of diagnostic keys in sorted order."""
        keys = self.diagnostic_keys()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "action", "reward"] + keys)
            for t, s in enumerate(self.steps):
                row = [t, _format_action(s.action), repr(float(s.reward))]
                row += [
                    repr(float(s.diagnostics[k])) if k in s.diagnostics else ""
                    for k in keys
                ]
                writer.writerow(row)


def _format_action(action) -> str:
    # Vector actions (power levels, beam subsets) become ";"-joined scalars so
    # the CSV stays one cell per column.
    if isinstance(action, str):
        return action
    if isinstance(action, (list, tuple)):
        return ";".join(_format_action(a) for a in action)
    if isinstance(action, np.ndarray):
        return ";".join(_format_action(a) for a in action.ravel())
    if isinstance(action, (bool, np.bool_)):
        return str(int(action))
    if isinstance(action, (int, np.integer)):
        return str(int(action))
    return repr(float(action))


@runtime_checkable
class Environment(Protocol):
    """Seeded simulator. reset(seed) returns the first observation; step(action)
    returns a StepOutcome. Instances are single-run owned, never shared."""

    name: str

    def reset(self, seed: int) -> Any: ...

    def step(self, action) -> StepOutcome: ...


@runtime_checkable
class Policy(Protocol):
    def act(self, observation) -> Any: ...


class ScriptedPolicy:
    """Replays a fixed action sequence; used for replay determinism checks."""

    def __init__(self, actions: Sequence):
        self._actions = list(actions)
        self._t = 0

    def reset(self, seed: int) -> None:
        self._t = 0

    def act(self, observation):
        if self._t >= len(self._actions):
            raise ConfigError("scripted policy exhausted its action list")
        a = self._actions[self._t]
        self._t += 1
        return a


class _CallablePolicy:
    def __init__(self, fn: Callable):
        self._fn = fn

    def act(self, observation):
        return self._fn(observation)


def as_policy(policy) -> Policy:
    if hasattr(policy, "act"):
        return policy
    if callable(policy):
        return _CallablePolicy(policy)
    raise ConfigError(f"not a policy: {policy!r}")


def run_episode(env, policy, horizon: int, seed: int) -> EpisodeLog:
    """Run one seeded episode and return its log.

    The policy may expose optional hooks: reset(seed), called once with a
    policy-stream seed derived from the episode seed, and
    observe(outcome, action), called after every transition (bandit and RL
    policies learn through it). Episodes stop after `horizon` steps or when
    the environment reports done.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    pol = as_policy(policy)
    obs = env.reset(seed)
    if hasattr(pol, "reset"):
        pol.reset(derive_seed(seed, STREAM_POLICY))
    steps: list[StepRecord] = []
    for t in range(horizon):
        action = pol.act(obs)
        try:
            out = env.step(action)
        except InvalidActionError as exc:
            raise InvalidActionError(f"step {t}: {exc}") from exc
        if hasattr(pol, "observe"):
            pol.observe(out, action)
        steps.append(StepRecord(obs, action, out.reward, dict(out.diagnostics)))
        obs = out.observation
        if out.done:
            break
    return EpisodeLog(steps=steps, seed=seed, env_name=getattr(env, "name", type(env).__name__))


def replay_episode(env, log: EpisodeLog) -> EpisodeLog:
    """Re-run a log's action sequence on a fresh env with the log's seed."""
    return run_episode(env, ScriptedPolicy(log.actions), len(log.steps), log.seed)


def discounted_return(rewards: Iterable[float], discount: float) -> float:
    """Sum of discount**t * rewards[t]; the finite-horizon objective."""
    if not (0.0 <= discount < 1.0):
        raise ConfigError(f"discount must lie in [0, 1), got {discount}")
    r = np.asarray(list(rewards), dtype=float)
    if r.size == 0:
        return 0.0
    return float(r @ np.power(discount, np.arange(r.size)))


@dataclass
class MetricsRecord:
    mean_reward: float
    discounted_return: float
    sum_log_throughput: float | None = None
    accuracy: float | None = None
    mean_abs_beam_error: float | None = None

    def __post_init__(self):
        if self.accuracy is not None and not (0.0 <= self.accuracy <= 1.0):
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")

    def to_dict(self) -> dict[str, float]:
        out = {
            "mean_reward": self.mean_reward,
            "discounted_return": self.discounted_return,
        }
        for k in ("sum_log_throughput", "accuracy", "mean_abs_beam_error"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        return out


METRIC_PROFILES = ("basic", "scheduling", "beam")

# Diagnostic keys the non-basic profiles consume.
THROUGHPUT_PREFIX = "thr_"
SERVED_BEAM_KEY = "served_beam"
OPTIMAL_BEAM_KEY = "optimal_beam"


def _gather(logs: list[EpisodeLog], key: str) -> np.ndarray:
    vals = [s.diagnostics[key] for log in logs for s in log.steps if key in s.diagnostics]
    if not vals:
        raise MissingDiagnosticError(f"profile requires diagnostic '{key}'")
    return np.asarray(vals, dtype=float)


def metrics_summary(
    logs: list[EpisodeLog], kind: str = "basic", discount: float = DEFAULT_DISCOUNT
) -> MetricsRecord:
    """Aggregate episode logs under a metric profile.

    Profiles: "basic" (mean reward, mean discounted return), "scheduling"
    (adds sum over users of log mean throughput, from thr_<u> diagnostics),
    "beam" (adds accuracy and mean absolute beam error, from served_beam and
    optimal_beam diagnostics). A profile that needs diagnostics the logs do
    not carry raises MissingDiagnosticError naming the key.
    """
    if not logs:
        raise ConfigError("metrics_summary needs at least one episode log")
    if kind not in METRIC_PROFILES:
        raise ConfigError(f"unknown metrics profile {kind!r}; known: {METRIC_PROFILES}")
    all_rewards = np.concatenate([log.rewards for log in logs]) if logs else np.array([])
    if all_rewards.size == 0:
        raise ConfigError("episode logs contain no steps")
    mean_reward = float(all_rewards.mean())
    ret = float(np.mean([discounted_return(log.rewards, discount) for log in logs]))
    rec = MetricsRecord(mean_reward=mean_reward, discounted_return=ret)

    if kind == "scheduling":
        users = sorted(
            {
                k
                for log in logs
                for s in log.steps
                for k in s.diagnostics
                if k.startswith(THROUGHPUT_PREFIX)
            }
        )
        if not users:
            raise MissingDiagnosticError(
                f"profile 'scheduling' requires '{THROUGHPUT_PREFIX}<user>' diagnostics"
            )
        rec.sum_log_throughput = float(
            sum(np.log(_gather(logs, k).mean()) for k in users)
        )
    elif kind == "beam":
        served = _gather(logs, SERVED_BEAM_KEY)
        optimal = _gather(logs, OPTIMAL_BEAM_KEY)
        if served.size != optimal.size:
            raise MissingDiagnosticError(
                f"'{SERVED_BEAM_KEY}' and '{OPTIMAL_BEAM_KEY}' logged on different steps"
            )
        rec.accuracy = float(np.mean(served == optimal))
        rec.mean_abs_beam_error = float(np.mean(np.abs(served - optimal)))
    return rec
