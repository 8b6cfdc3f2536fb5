"""Seven radio-resource-management environments plus exact-MDP extraction."""

from ..errors import ConfigError
from .admission import AdmissionEnv, make_admission_env
from .beamforming import SERVE_BEST, BeamAction, BeamformingEnv, make_beamforming_env
from .energy import EnergySavingEnv, es_transition, make_energy_env, normalize_subset
from .handover import HandoverEnv, load_rsrp_trace_csv, make_handover_env
from .link_adaptation import LaObs, LinkAdaptEnv, make_link_adapt_env
from .power import PowerEnv, make_power_env
from .scheduling import EWMA_FLOOR, SchedulingEnv, make_scheduling_env
from .tabular import TabularEnv, env_true_mdp, make_tabular_env
from .types import (
    AdmissionState,
    ChannelMatrix,
    MroObservation,
    QueueState,
    RsrpField,
)

ENV_FACTORIES = {
    "link_adaptation": make_link_adapt_env,
    "power_control": make_power_env,
    "beamforming": make_beamforming_env,
    "scheduling": make_scheduling_env,
    "energy_saving": make_energy_env,
    "handover": make_handover_env,
    "admission_control": make_admission_env,
    "tabular": make_tabular_env,
}


def make_env(cfg: dict):
    """Build an environment from a config dict with an 'env' discriminator."""
    if "env" not in cfg:
        raise ConfigError("environment config needs an 'env' discriminator field")
    kind = cfg["env"]
    factory = ENV_FACTORIES.get(kind)
    if factory is None:
        raise ConfigError(f"unknown env {kind!r}; known: {sorted(ENV_FACTORIES)}")
    return factory(cfg)


__all__ = [
    "AdmissionEnv",
    "AdmissionState",
    "BeamAction",
    "BeamformingEnv",
    "ChannelMatrix",
    "ENV_FACTORIES",
    "EWMA_FLOOR",
    "EnergySavingEnv",
    "HandoverEnv",
    "LaObs",
    "LinkAdaptEnv",
    "MroObservation",
    "PowerEnv",
    "QueueState",
    "RsrpField",
    "SERVE_BEST",
    "SchedulingEnv",
    "TabularEnv",
    "env_true_mdp",
    "es_transition",
    "load_rsrp_trace_csv",
    "make_admission_env",
    "make_beamforming_env",
    "make_energy_env",
    "make_env",
    "make_handover_env",
    "make_link_adapt_env",
    "make_power_env",
    "make_scheduling_env",
    "make_tabular_env",
    "normalize_subset",
]
