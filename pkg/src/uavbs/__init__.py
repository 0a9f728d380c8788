"""Multi-UAV aerial base-station simulator with decentralised Q-learning placement."""

from .agent import Action, LearnParams, QTable, StateKey
from .energy import EnergyLedger, PowerModelParams, propulsion_power
from .radio import ChannelParams, UavPosition, associate, covered_area, sinr
from .world import AreaSpec, Clustered, Uniform, WorldState, spawn_devices, step_mobility

__version__ = "0.1.0"

__all__ = [
    "Action", "LearnParams", "QTable", "StateKey",
    "EnergyLedger", "PowerModelParams", "propulsion_power",
    "ChannelParams", "UavPosition", "associate", "covered_area", "sinr",
    "AreaSpec", "Clustered", "Uniform", "WorldState", "spawn_devices", "step_mobility",
]
