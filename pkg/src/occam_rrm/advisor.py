"""Technique selection: a deterministic decision tree from problem traits to
a solver class, plus the trait vectors for the stock RRM use cases."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

Q_LONG_TERM = "long-term planning problem (endogenous state)?"
Q_MODEL_KNOWN = "underlying model known?"
Q_TRACTABLE = "MDP small enough for exact methods?"
Q_SOLVABLE = "analytically solvable structure?"
Q_HISTORICAL = "historical data available?"
Q_EXPERT = "expert policy available?"
Q_PREDICTABLE = "state trajectory predictable?"

SOLVER_HINTS = {
    "static-optimization": "static_opt.water_fill",
    "supervised-learning": "agents.knn_beam_tracker",
    "bandits": "bandits.thompson_select",
    "exact-dp": "planning.value_iteration",
    "stochastic-rule": "rules.dpp_action",
    "offline-rl": "planning.q_learning",
    "policy-tuning": "tuning.nelder_mead",
    "mpc": "planning.mpc_plan",
    "rl": "planning.q_learning",
}


@dataclass(frozen=True)
class ProblemTraits:
    endogenous_state: bool = False
    model_known: bool = False
    analytically_solvable: bool = False
    tractable_mdp: bool = False
    historical_data: bool = False
    expert_policy_available: bool = False
    state_predictable: bool = False


@dataclass(frozen=True)
class Recommendation:
    technique: str
    path: tuple = field(default_factory=tuple)
    solver_hint: str = ""

    def render(self) -> str:
        lines = [f"{'  ' * i}{q} {a}" for i, (q, a) in enumerate(self.path)]
        lines.append(f"{'  ' * len(self.path)}-> {self.technique} ({self.solver_hint})")
        return "\n".join(lines)


def advise(traits: ProblemTraits) -> Recommendation:
    """Walk the selection tree, recording each question actually asked.

    Short-term problems split on model knowledge: a known solvable model is
    plain optimization, logged data without a model is supervised learning,
    and everything else is a bandit. Long-term problems try the most
    structured option first: exact dynamic programming, then analytic
    stochastic rules, offline learning from logs, tuning an expert policy,
    prediction-based receding-horizon control, and finally RL from scratch.
    """
    path = []

    def ask(question, answer):
        path.append((question, "yes" if answer else "no"))
        return answer

    def pick(technique):
        return Recommendation(technique, tuple(path), SOLVER_HINTS[technique])

    if not ask(Q_LONG_TERM, traits.endogenous_state):
        if ask(Q_MODEL_KNOWN, traits.model_known):
            if ask(Q_SOLVABLE, traits.analytically_solvable):
                return pick("static-optimization")
            return pick("bandits")
        if ask(Q_HISTORICAL, traits.historical_data):
            return pick("supervised-learning")
        return pick("bandits")

    if ask(Q_MODEL_KNOWN, traits.model_known) and ask(Q_TRACTABLE, traits.tractable_mdp):
        return pick("exact-dp")
    if ask(Q_SOLVABLE, traits.analytically_solvable):
        return pick("stochastic-rule")
    if ask(Q_HISTORICAL, traits.historical_data):
        return pick("offline-rl")
    if ask(Q_EXPERT, traits.expert_policy_available):
        return pick("policy-tuning")
    if ask(Q_PREDICTABLE, traits.state_predictable):
        return pick("mpc")
    return pick("rl")


def _t(endog=False, known=False, solvable=False, tractable=False, hist=False,
       expert=False, predictable=False) -> ProblemTraits:
    return ProblemTraits(
        endogenous_state=endog,
        model_known=known,
        analytically_solvable=solvable,
        tractable_mdp=tractable,
        historical_data=hist,
        expert_policy_available=expert,
        state_predictable=predictable,
    )


# Trait vectors per (use case, variant). SC and AC carry endogenous state;
# ES and HO become long-term through actuation inertia; PC, BF and LA are
# exogenous unless a variant couples the action back into the state.
USE_CASE_TABLE = {
    ("PC", "known-channel"): _t(known=True, solvable=True),
    ("PC", "incremental-power"): _t(endog=True),
    ("BF", "known-channel"): _t(known=True, solvable=True),
    ("BF", "analog-hidden-channel"): _t(),
    ("BF", "analog-logged-data"): _t(hist=True),
    ("LA", "adaptive-mcs"): _t(),
    ("SC", "proportional-fair"): _t(endog=True, known=True, solvable=True),
    ("SC", "logged-data"): _t(endog=True, hist=True),
    ("SC", "complex-utility"): _t(endog=True),
    ("ES", "thresholds"): _t(endog=True, expert=True),
    ("ES", "complex"): _t(endog=True),
    ("ES", "queue-energy-tradeoff"): _t(endog=True, known=True, solvable=True),
    ("ES", "task-assignment"): _t(),
    ("ES", "predictable-traffic"): _t(endog=True, predictable=True),
    ("HO", "mobility-robustness"): _t(endog=True, expert=True),
    ("AC", "small-instance"): _t(endog=True, known=True, tractable=True),
    ("AC", "trunk-reservation"): _t(endog=True, known=True, solvable=True),
    ("AC", "large-complex"): _t(endog=True),
    ("AC", "logged-data"): _t(endog=True, hist=True),
}

DEFAULT_VARIANTS = {
    "PC": "known-channel",
    "BF": "known-channel",
    "LA": "adaptive-mcs",
    "SC": "proportional-fair",
    "ES": "thresholds",
    "HO": "mobility-robustness",
    "AC": "trunk-reservation",
}


def usecase_traits(use_case: str, variant: str = "default") -> ProblemTraits:
    case = str(use_case).upper()
    if case not in DEFAULT_VARIANTS:
        raise ConfigError(
            f"unknown use case {use_case!r}; known: {sorted(DEFAULT_VARIANTS)}"
        )
    name = DEFAULT_VARIANTS[case] if variant == "default" else str(variant)
    key = (case, name)
    if key not in USE_CASE_TABLE:
        known = sorted(v for c, v in USE_CASE_TABLE if c == case)
        raise ConfigError(f"unknown {case} variant {variant!r}; known: {known}")
    return USE_CASE_TABLE[key]
