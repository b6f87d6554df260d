"""Acceptance criteria, one test each; every test records a PASS/FAIL line."""
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from icnsim import RunConfig, StrategyParams, WorkloadSpec, gen_edge, run
from icnsim.config import parse_experiment
from icnsim.experiment import run_batch, write_outputs
from icnsim.metrics import (MetricsLog, label_violations, latency_reduction_by_distance, merge_stats,
                            overall_summary, stats_by_distance, hop_reduction_by_distance)
from icnsim.model import ChunkName

from conftest import ConstRng, line_config

pytestmark = pytest.mark.acceptance

SEEDS = range(30)
ORDERING_SET = ["CEE", "LCD", "Prob(0.5)", "ProbCache", "ProbCache-Inv", "Labels(4)", "Intervals(2)"]
CORE = {"kind": "core", "branching_core": 4, "branching_leaf": 3, "consumers_per_leaf": 1}
RGG = {"kind": "random_geometric", "n": 50}
SPACED = WorkloadSpec(pacing="spaced", spacing_ms=100)


def cached_nodes(result, name):
    return [v for v, names in enumerate(result.snapshots[-1].contents) if name in names]


@lru_cache(maxsize=None)
def batch(topology_key, strategy):
    topo = CORE if topology_key == "core" else RGG
    return [run(RunConfig(topology=topo, strategy=StrategyParams.parse(strategy), seed=s)).log
            for s in SEEDS]


@lru_cache(maxsize=None)
def batch_seconds(topology_key):
    start = time.perf_counter()
    for s in ORDERING_SET:
        batch(topology_key, s)
    return time.perf_counter() - start


def mean_hops(log):
    return overall_summary(log, 10.0).mean_hops


def mean_hop_reduction(logs):
    return math.fsum(overall_summary(log, 10.0).mean_hop_reduction for log in logs) / len(logs)


# 1 ---------------------------------------------------------------------------

def test_criterion_1_strategy_traces(verdict):
    name = ChunkName(0, 6)  # chunk 6: label 2 under k=4, label 0 under k=2
    one = [(5, 0, 6, 0)]
    two = [(5, 0, 6, 0), (5, 0, 6, 500)]
    cases = [
        ("CEE", 6, one, None, [1, 2, 3, 4]),
        ("NoCache", 6, one, None, []),
        ("LCD", 6, one, None, [1]),
        ("LCD", 6, two, None, [1, 2]),
        ("MCD", 6, one, None, [1]),
        ("MCD", 6, two, None, [2]),
        ("Prob(0)", 6, one, None, []),
        ("Prob(1)", 6, one, None, [1, 2, 3, 4]),
        ("ProbCache", 6, one, 0.0, [1, 2, 3, 4]),
        ("ProbCache", 6, one, 1.0, []),
        ("ProbCache-Inv", 6, one, 0.0, [1, 2, 3]),
        ("ProbCache-Inv", 6, one, 1.0, []),
        ("Labels(4)", 6, one, None, [2]),
        ("Labels(2)", 6, one, None, [2, 4]),
        ("Intervals(2)", 6, one, None, [3]),
        ("Intervals(2)", 8, [(7, 0, 6, 0)], None, [3, 6]),
    ]
    start = time.perf_counter()
    mismatches = []
    for strategy, n, reqs, draw, expected in cases:
        kwargs = {} if draw is None else {"node_rng": lambda v, d=draw: ConstRng(d)}
        got = cached_nodes(run(line_config(n, reqs, strategy), **kwargs), name)
        if got != expected:
            mismatches.append(f"{strategy} n={n} draw={draw}: {got} != {expected}")
    elapsed = time.perf_counter() - start
    verdict(1, not mismatches and elapsed < 1.0,
            f"{len(cases) - len(mismatches)}/{len(cases)} placements exact, {elapsed:.3f}s "
            + "; ".join(mismatches))


# 2 ---------------------------------------------------------------------------

def test_criterion_2_degenerate_equivalences(verdict):
    pairs = [("Prob(1)", "CEE"), ("Labels(1)", "CEE"), ("Intervals(0)", "CEE"), ("Prob(0)", "NoCache")]
    scenarios = [(CORE, s) for s in range(3)] + [(RGG, s) for s in range(3)]
    diffs = []
    decisions = 0
    for a, b in pairs:
        for topo, seed in scenarios:
            ta = run(RunConfig(topology=topo, strategy=StrategyParams.parse(a), seed=seed, trace=True)).trace
            tb = run(RunConfig(topology=topo, strategy=StrategyParams.parse(b), seed=seed, trace=True)).trace
            decisions += len(ta)
            if ta != tb:
                diffs.append(f"{a} vs {b} on {topo['kind']} seed {seed}")
    verdict(2, not diffs, f"{len(pairs) * len(scenarios) - len(diffs)}/{len(pairs) * len(scenarios)} "
                          f"decision sequences identical ({decisions} decisions) " + "; ".join(diffs))


# 3 ---------------------------------------------------------------------------

def test_criterion_3_linearity(verdict):
    strategies = ["NoCache", "CEE", "LCD", "MCD", "Prob(0.5)", "ProbCache", "ProbCache-Inv", "Labels(4)",
                  "Intervals(2)"]
    total = exact = 0
    window_nonagg = window_nonagg_exact = window_agg = 0
    for s in strategies:
        for topo in (CORE, RGG):
            spaced = run(RunConfig(topology=topo, strategy=StrategyParams.parse(s), workload=SPACED)).log
            total += len(spaced)
            exact += sum(r.latency == r.hops_to_hit * 10.0 for r in spaced)
            window = run(RunConfig(topology=topo, strategy=StrategyParams.parse(s))).log
            for r in window:
                if r.aggregated:
                    window_agg += 1
                else:
                    window_nonagg += 1
                    window_nonagg_exact += r.latency == r.hops_to_hit * 10.0
    hops, lat = [], []
    for seed in range(5):
        log = run(RunConfig(topology=RGG, strategy=StrategyParams.parse("CEE"), workload=SPACED,
                            jitter_ms=2.0, seed=seed)).log
        hops += [r.hops_to_hit for r in log]
        lat += [r.latency for r in log]
    slope, _ = np.polyfit(np.array(hops, float), np.array(lat, float), 1)
    ok = (exact == total and window_nonagg_exact == window_nonagg and len(hops) >= 10_000
          and abs(slope - 10.0) <= 0.2)
    verdict(3, ok, f"jitter=0: {exact}/{total} exact (spaced requests), window pacing "
                   f"{window_nonagg_exact}/{window_nonagg} non-aggregated exact ({window_agg} PIT-aggregated "
                   f"excluded); jitter=2ms slope {slope:.4f} ms/hop over {len(hops)} retrievals")


# 4 ---------------------------------------------------------------------------

def test_criterion_4_nocache_identity(verdict):
    bad_hops = 0
    nonzero = []
    n = 0
    agg_lr = []
    for topo in (CORE, RGG):
        for seed in range(10):
            cfg = RunConfig(topology=topo, strategy=StrategyParams.parse("NoCache"), seed=seed, workload=SPACED)
            log = run(cfg).log
            n += len(log)
            bad_hops += sum(r.hops_to_hit != r.distance_to_source for r in log)
            hr = hop_reduction_by_distance(log)
            lr = latency_reduction_by_distance(log, cfg)
            nonzero += [(d, v) for d, v in list(hr.items()) + list(lr.items()) if v != 0]
            window = run(cfg.with_(workload=WorkloadSpec())).log
            bad_hops += sum(r.hops_to_hit != r.distance_to_source for r in window)
            n += len(window)
            agg_lr.append(overall_summary(window, cfg).mean_latency_reduction)
    verdict(4, bad_hops == 0 and not nonzero,
            f"{n - bad_hops}/{n} retrievals with hops_to_hit == distance; "
            f"{len(nonzero)} nonzero hop/latency reductions (spaced requests); window pacing mean latency "
            f"reduction from PIT aggregation alone {sum(agg_lr) / len(agg_lr):.4f} ms")


# 5 ---------------------------------------------------------------------------

def probcache_frequencies(strategy):
    reqs = [(4, 0, i % 50, 50 * i) for i in range(10_000)]
    cfg = line_config(5, reqs, strategy, cache_capacity=1, trace=True, snapshot_period_ms=0,
                      max_time_ms=1_000_000)
    result = run(cfg)
    assert len(result.log) == 10_000 and all(r.hit_node == 0 for r in result.log)
    counts = {v: 0 for v in (1, 2, 3)}
    for _, node, _, what in result.trace:
        if what == "cache":
            counts[node] += 1
    return [counts[v] / 10_000 for v in (1, 2, 3)]


def test_criterion_5_probcache_distribution(verdict):
    pc = probcache_frequencies("ProbCache")
    inv = probcache_frequencies("ProbCache-Inv")
    ok = all(abs(a - b) <= 0.02 for a, b in zip(pc, [0.5, 0.75, 1.0])) and \
        all(abs(a - b) <= 0.02 for a, b in zip(inv, [0.5, 0.25, 0.0]))
    verdict(5, ok, f"ProbCache {[round(x, 4) for x in pc]} vs [0.5, 0.75, 1.0]; "
                   f"ProbCache-Inv {[round(x, 4) for x in inv]} vs [0.5, 0.25, 0.0]")


# 6 ---------------------------------------------------------------------------

def test_criterion_6_labels_invariant(verdict):
    violations = snapshots = cached = 0
    for k in (2, 3, 4, 5):
        for topo in (CORE, RGG):
            for seed in range(5):
                result = run(RunConfig(topology=topo, strategy=StrategyParams.parse(f"Labels({k})"), seed=seed,
                                       snapshot_period_ms=500))
                for snap in result.snapshots:
                    snapshots += 1
                    cached += snap.occupancy()
                    violations += len(label_violations(snap, k))
    verdict(6, violations == 0 and cached > 0,
            f"{violations} violations over {snapshots} snapshots holding {cached} cached entries")


# 7 ---------------------------------------------------------------------------

def ordering_report(topology_key):
    lcd = batch(topology_key, "LCD")
    cee = batch(topology_key, "CEE")
    wins = sum(mean_hops(a) < mean_hops(b) for a, b in zip(lcd, cee))
    means = {s: mean_hop_reduction(batch(topology_key, s)) for s in ORDERING_SET}
    ranking = sorted(means, key=means.get, reverse=True)
    return wins, ranking, means


def test_criterion_7_ordering(verdict):
    seconds = batch_seconds("core") + batch_seconds("rgg")
    parts = []
    ok = seconds < 300
    for key in ("core", "rgg"):
        wins, ranking, means = ordering_report(key)
        ok &= wins >= 27 and ranking[:2] == ["LCD", "Labels(4)"]
        parts.append(f"{key}: LCD<CEE in {wins}/30, ranking "
                     + " > ".join(f"{s} {means[s]:.4f}" for s in ranking))
    verdict(7, ok, f"batch {seconds:.0f}s; " + "; ".join(parts))


# 8 ---------------------------------------------------------------------------

def test_criterion_8_topology_sensitivity(verdict):
    pc, inv = batch("core", "ProbCache"), batch("core", "ProbCache-Inv")
    core_wins = sum(mean_hops(b) <= mean_hops(a) for a, b in zip(pc, inv))
    core_pc = sum(map(mean_hops, pc)) / 30
    core_inv = sum(map(mean_hops, inv)) / 30
    edge_wl = WorkloadSpec(producers="root", requesters="consumers", requests_per_prefix=20)
    edge = {}
    for s in ("ProbCache", "ProbCache-Inv"):
        edge[s] = [mean_hops(run(RunConfig(topology=gen_edge(8, 2, 3), strategy=StrategyParams.parse(s),
                                           workload=edge_wl, seed=seed)).log) for seed in SEEDS]
    edge_pc = sum(edge["ProbCache"]) / 30
    edge_inv = sum(edge["ProbCache-Inv"]) / 30
    edge_wins = sum(b > a for a, b in zip(edge["ProbCache"], edge["ProbCache-Inv"]))
    ok = core_wins >= 20 and core_inv <= core_pc and edge_inv > edge_pc
    verdict(8, ok, f"core: Inv {core_inv:.4f} vs ProbCache {core_pc:.4f}, Inv<=ProbCache in {core_wins}/30; "
                   f"edge(8,2,3): Inv {edge_inv:.4f} vs ProbCache {edge_pc:.4f}, "
                   f"Inv>ProbCache in {edge_wins}/30")


# 9 ---------------------------------------------------------------------------

def test_criterion_9_turning_point(verdict):
    reductions = {}
    for s in ORDERING_SET + ["MCD"]:
        merged = merge_stats(stats_by_distance(log) for log in batch("rgg", s))
        reductions[s] = {d: merged[d].hop_reduction for d in (2, 4)}
    bad = [s for s, r in reductions.items() if s != "LCD" and not r[4] - r[2] > 0]
    lcd2 = reductions["LCD"][2]
    verdict(9, not bad and lcd2 > 0,
            f"LCD reduction at 2 hops {lcd2:.4f}; at 4 minus at 2: "
            + ", ".join(f"{s} {r[4] - r[2]:+.4f}" for s, r in reductions.items() if s != "LCD")
            + (f"; failing {bad}" if bad else ""))


# 10 --------------------------------------------------------------------------

def test_criterion_10_determinism_and_merge(verdict, tmp_path):
    spec = parse_experiment("name: det\nstrategies: [NoCache, LCD, ProbCache, Labels(4)]\nruns: 4\n"
                            "config: {topology: {kind: random_geometric, n: 50}, jitter_ms: 1.0}\n")
    a = write_outputs(run_batch(spec), tmp_path / "a")
    b = write_outputs(run_batch(spec), tmp_path / "b")
    identical = all(a[k].read_bytes() == b[k].read_bytes() for k in a)

    worst = 0.0
    for s in ORDERING_SET:
        logs = batch("rgg", s)
        whole = MetricsLog()
        for log in logs:
            whole.extend(log)
        merged = merge_stats(stats_by_distance(log) for log in logs)
        direct = stats_by_distance(whole)
        for d in direct:
            for x, y in ((merged[d].mean_hops_to_hit, direct[d].mean_hops_to_hit),
                         (merged[d].mean_latency, direct[d].mean_latency)):
                worst = max(worst, abs(x - y) / abs(y) if y else abs(x))
            assert merged[d].n == direct[d].n
    verdict(10, identical and worst <= 1e-12,
            f"CSVs byte-identical: {identical}; worst relative merge error {worst:.2e}")
