"""Deterministic network simulator for envoys, adversaries and a reducer."""

from .config import STRATEGIES, ScenarioConfig, bundled_scenario, config_from_mapping, load_config
from .engine import SimReport, run
from .experiment import VoteSumReport, vote_sum_experiment
from .universe import ADVERSARY, HONEST, OFFLINE, Universe, build_universe, largest_remainder

__all__ = [
    "ADVERSARY", "HONEST", "OFFLINE", "STRATEGIES", "ScenarioConfig", "SimReport", "Universe",
    "VoteSumReport", "build_universe", "bundled_scenario", "config_from_mapping",
    "largest_remainder", "load_config", "run", "vote_sum_experiment",
]
