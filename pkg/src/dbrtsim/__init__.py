"""Discrete-event MANET simulator comparing plain DSDV with DSDV plus a
precomputed node-disjoint backup routing table."""

from .config import ConfigError, ScenarioConfig, load_config, override, parse_config
from .experiments import RunResult, SweepSpec, dump_tables, run_scenario, sweep, verify
from .network import Network

__all__ = ["ConfigError", "Network", "RunResult", "ScenarioConfig", "SweepSpec", "dump_tables",
           "load_config", "override", "parse_config", "run_scenario", "sweep", "verify"]
