"""Two-tier multi-rate slotted ALOHA simulator for OWC cells relaying over LoRa."""

from .engine import ThroughputStats, run_simulation
from .estimators import AdaptiveMSelector, TwoTierAlohaSimulator
from .lora import LoraLinkConfig, SfRow, sf_table
from .owc import OwcCellConfig, OwcDerived, OwcRadioConfig
from .scenario import Scenario, parse_scenario
from .sweep import SweepSpec, build_adaptive_m_table, run_sweep

__all__ = [
    "AdaptiveMSelector",
    "LoraLinkConfig",
    "OwcCellConfig",
    "OwcDerived",
    "OwcRadioConfig",
    "Scenario",
    "SfRow",
    "SweepSpec",
    "ThroughputStats",
    "TwoTierAlohaSimulator",
    "build_adaptive_m_table",
    "parse_scenario",
    "run_simulation",
    "run_sweep",
    "sf_table",
]
__version__ = "0.1.0"
