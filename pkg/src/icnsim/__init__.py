"""Discrete-event simulator for in-network caching strategies in ICN/NDN IoT networks."""
from .engine import RunConfig, RunResult, Simulator, WorkloadSpec, baseline_latency, run
from .errors import ConfigError, IcnSimError
from .model import ChunkName, StrategyKind, StrategyParams
from .topology import gen_core, gen_edge, gen_line, gen_random_geometric

__version__ = "0.1.0"

__all__ = [
    "ChunkName", "ConfigError", "IcnSimError", "RunConfig", "RunResult", "Simulator", "StrategyKind",
    "StrategyParams", "WorkloadSpec", "baseline_latency", "gen_core", "gen_edge", "gen_line",
    "gen_random_geometric", "run",
]
