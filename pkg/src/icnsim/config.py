"""Experiment spec files (YAML) with line-referenced validation.

Schema::

    name: core-comparison          # optional label
    strategies:                    # required, >= 1
      - NoCache
      - LCD
      - Prob(0.5)                  # or {kind: Prob, p: 0.5}
    seeds: [1, 2, 3]               # or base_seed + runs
    base_seed: 0
    runs: 30
    output_dir: results/core       # optional; CLI flag and ICNSIM_OUTPUT_DIR also apply
    config:                        # RunConfig template, every field optional
      topology: {kind: core, branching_core: 4, branching_leaf: 3, consumers_per_leaf: 1}
      cache_capacity: 5
      replacement: lru             # lru | fifo | random
      cache_at_consumer: false
      chunk_count: 50
      workload: {kind: uniform, producers: all, requesters: all, requests_per_prefix: 1,
                 pacing: window, window_ms: 10000, spacing_ms: 100, start_ms: 0}
      per_hop_delay_ms: 10
      jitter_ms: 0
      loss: 0.0
      pit_timeout_ms: 2000
      retries: 3
      snapshot_period_ms: 1000
      max_time_ms: 300000
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .engine import RunConfig, WorkloadSpec
from .errors import ConfigError
from .model import StrategyParams, strategy_kind
from .topology import TOPOLOGY_KINDS

TOP_LEVEL_KEYS = {"name", "strategies", "seeds", "base_seed", "runs", "output_dir", "config"}
RUN_KEYS = {f.name for f in fields(RunConfig)} - {"strategy", "seed"}
WORKLOAD_KEYS = {f.name for f in fields(WorkloadSpec)}
STRATEGY_KEYS = {"kind", "p", "k", "i"}


@dataclass(frozen=True)
class ExperimentSpec:
    strategies: tuple[StrategyParams, ...]
    template: RunConfig
    seeds: tuple[int, ...]
    name: str = "experiment"
    output_dir: str | None = None

    def configs(self):
        """(strategy index, seed, RunConfig) in output order."""
        for si, strategy in enumerate(self.strategies):
            for seed in self.seeds:
                yield si, seed, self.template.with_(strategy=strategy, seed=seed)


def _line_map(text: str) -> dict:
    """Map key paths like ``('config', 'workload', 'pacing')`` to 1-based line numbers."""
    lines = {}

    def walk(node, path):
        lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                walk(value, path + (key.value,))
                lines[path + (key.value,)] = key.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                walk(item, path + (i,))

    root = yaml.compose(text)
    if root is not None:
        walk(root, ())
    return lines


def _fmt(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


class _Validator:
    def __init__(self, lines):
        self.lines = lines

    def error(self, path, message):
        return ConfigError(message, field=_fmt(path), line=self.lines.get(tuple(path)))

    def mapping(self, value, path, allowed):
        if not isinstance(value, dict):
            raise self.error(path, f"expected a mapping, got {type(value).__name__}")
        unknown = sorted(set(value) - allowed)
        if unknown:
            raise self.error(path + (unknown[0],),
                             f"unknown field {unknown[0]!r} (allowed: {', '.join(sorted(allowed))})")
        return value

    def integer(self, value, path, minimum=None):
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.error(path, f"must be >= {minimum}, got {value}")
        return value

    def strategy(self, value, path):
        try:
            if isinstance(value, str):
                return StrategyParams.parse(value)
            self.mapping(value, path, STRATEGY_KEYS)
            if "kind" not in value:
                raise self.error(path, "strategy mapping needs 'kind'")
            kind = strategy_kind(value["kind"])
            return StrategyParams(kind, **{k: v for k, v in value.items() if k != "kind"})
        except ConfigError as exc:
            if exc.line is not None:
                raise
            if isinstance(value, dict):
                sub = path + (exc.field if exc.field in value else "kind",)
            else:
                sub = path
            raise self.error(sub, str(exc).split(": ", 1)[-1]) from None
        except TypeError as exc:
            raise self.error(path, str(exc)) from None

    def run_config(self, value, path):
        self.mapping(value, path, RUN_KEYS)
        kwargs = dict(value)
        if "topology" in kwargs:
            topo = kwargs["topology"]
            if not isinstance(topo, dict) or "kind" not in topo:
                raise self.error(path + ("topology",), "expected a mapping with 'kind'")
            if topo["kind"] not in TOPOLOGY_KINDS:
                raise self.error(path + ("topology", "kind"),
                                 f"unknown topology kind {topo['kind']!r} (known: {', '.join(TOPOLOGY_KINDS)})")
        if "workload" in kwargs:
            wl = self.mapping(kwargs["workload"], path + ("workload",), WORKLOAD_KEYS)
            wl = dict(wl)
            for key in ("producers", "requesters"):
                if isinstance(wl.get(key), list):
                    wl[key] = tuple(wl[key])
            if "requests" in wl:
                wl["requests"] = tuple(tuple(r) for r in wl["requests"])
            try:
                kwargs["workload"] = WorkloadSpec(**wl)
            except ConfigError as exc:
                sub = (exc.field or "workload").split(".")[-1]
                raise self.error(path + ("workload", sub), str(exc).split(": ", 1)[-1]) from None
            except TypeError as exc:
                raise self.error(path + ("workload",), str(exc)) from None
        try:
            return RunConfig(**kwargs)
        except ConfigError as exc:
            raise self.error(path + (exc.field,) if exc.field else path,
                             str(exc).split(": ", 1)[-1]) from None
        except TypeError as exc:
            raise self.error(path, str(exc)) from None


def parse_experiment(text: str, source: str = "<spec>") -> ExperimentSpec:
    try:
        data = yaml.safe_load(text)
        lines = _line_map(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"{source}: invalid YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from None
    v = _Validator(lines)
    v.mapping(data, (), TOP_LEVEL_KEYS)
    if "strategies" not in data:
        raise ConfigError("missing required field", field="strategies")
    strategies = data["strategies"]
    if not isinstance(strategies, list) or not strategies:
        raise v.error(("strategies",), "expected a non-empty list")
    parsed = tuple(v.strategy(s, ("strategies", i)) for i, s in enumerate(strategies))
    labels = [s.label for s in parsed]
    dupes = {l for l in labels if labels.count(l) > 1}
    if dupes:
        raise v.error(("strategies",), f"duplicate strategies {sorted(dupes)}")

    if "seeds" in data:
        seeds = data["seeds"]
        if not isinstance(seeds, list) or not seeds:
            raise v.error(("seeds",), "expected a non-empty list of integers")
        seeds = tuple(v.integer(s, ("seeds", i), 0) for i, s in enumerate(seeds))
    else:
        base = v.integer(data.get("base_seed", 0), ("base_seed",), 0)
        runs = v.integer(data.get("runs", 1), ("runs",), 1)
        seeds = tuple(range(base, base + runs))
    template = v.run_config(data.get("config") or {}, ("config",))
    name = str(data.get("name", Path(source).stem))
    output_dir = data.get("output_dir")
    return ExperimentSpec(parsed, template, seeds, name, None if output_dir is None else str(output_dir))


def load_experiment(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_experiment(text, str(path))
