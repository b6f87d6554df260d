"""Seeded batches over strategies, CSV artifacts and strategy comparison."""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import ExperimentSpec
from .engine import RunConfig, RunResult, run
from .errors import ConfigError, EmptyLog, IcnSimError
from .metrics import (DEFAULT_MIN_SAMPLES, MetricsLog, merge_stats, overall_summary,
                      stats_by_distance)

OUTPUT_DIR_ENV = "ICNSIM_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

SUMMARY_METRICS = ("mean_hops", "mean_hop_reduction", "mean_latency", "mean_latency_reduction",
                   "failure_rate", "mean_distance")


@dataclass
class RunOutcome:
    strategy: str
    seed: int
    result: RunResult | None = None
    error: str | None = None


@dataclass
class BatchResult:
    spec: ExperimentSpec
    outcomes: list[RunOutcome] = field(default_factory=list)

    def log(self, strategy: str | None = None) -> MetricsLog:
        log = MetricsLog()
        for o in self.outcomes:
            if o.result is not None and (strategy is None or o.strategy == strategy):
                log.extend(o.result.log)
        return log

    @property
    def strategy_labels(self) -> list[str]:
        return [s.label for s in self.spec.strategies]


def _run_one(cfg: RunConfig) -> RunOutcome:
    try:
        return RunOutcome(cfg.strategy.label, cfg.seed, run(cfg))
    except IcnSimError as exc:
        return RunOutcome(cfg.strategy.label, cfg.seed, error=f"{type(exc).__name__}: {exc}")


def run_batch(spec: ExperimentSpec, jobs: int = 1) -> BatchResult:
    """Run every (strategy, seed); a failing run is recorded and the batch continues."""
    configs = [cfg for _, _, cfg in spec.configs()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one, configs, chunksize=4))
    else:
        outcomes = [_run_one(cfg) for cfg in configs]
    return BatchResult(spec, outcomes)


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(x) for x in row])
    path.write_text(buf.getvalue())


RETRIEVAL_HEADER = ("strategy", "seed", "seq", "consumer", "prefix", "chunk_id", "distance_to_source",
                    "hops_to_hit", "latency_ms", "hit_node", "issue_time_ms", "satisfy_time_ms",
                    "retries", "aggregated", "status")
BY_DISTANCE_HEADER = ("strategy", "distance", "n", "mean_hops_to_hit", "hop_reduction", "mean_latency_ms",
                      "latency_reduction_ms", "low_confidence")
SUMMARY_HEADER = ("strategy", "seed", "n", "failures", "failure_rate", "mean_distance", "mean_hops",
                  "mean_hop_reduction", "mean_latency", "mean_latency_reduction", "status")
SNAPSHOT_HEADER = ("strategy", "seed", "time_ms", "node", "occupancy", "contents")


def retrieval_rows(batch: BatchResult):
    for o in batch.outcomes:
        if o.result is None:
            continue
        rows = []
        for r in o.result.log.records:
            rows.append((r.seq, (o.strategy, o.seed, r.seq, r.consumer, r.prefix, r.chunk_id,
                                 r.distance_to_source, r.hops_to_hit, r.latency, r.hit_node,
                                 r.issue_time, r.satisfy_time, r.retries, r.aggregated, "ok")))
        for f in o.result.log.failures:
            rows.append((f.seq, (o.strategy, o.seed, f.seq, f.consumer, f.prefix, f.chunk_id,
                                 f.distance_to_source, None, None, None, f.issue_time, None,
                                 f.retries, None, f.reason)))
        rows.sort(key=lambda item: item[0])
        yield from (row for _, row in rows)


def by_distance_rows(batch: BatchResult, min_samples: int = DEFAULT_MIN_SAMPLES):
    delay = batch.spec.template.per_hop_delay_ms
    for label in batch.strategy_labels:
        parts = []
        for o in batch.outcomes:
            if o.strategy == label and o.result is not None and o.result.log.records:
                parts.append(stats_by_distance(o.result.log))
        for d, s in merge_stats(parts).items():
            yield (label, d, s.n, s.mean_hops_to_hit, s.hop_reduction, s.mean_latency,
                   s.latency_reduction(delay), s.low_confidence(min_samples))


def _summary_row(label, seed, log, delay, status="ok"):
    try:
        s = overall_summary(log, delay)
    except EmptyLog:
        return (label, seed, 0, len(log.failures), log.failure_rate, None, None, None, None, None,
                status if status != "ok" else "empty")
    return (label, seed, s.n, s.failures, s.failure_rate, s.mean_distance, s.mean_hops,
            s.mean_hop_reduction, s.mean_latency, s.mean_latency_reduction, status)


def summary_rows(batch: BatchResult):
    delay = batch.spec.template.per_hop_delay_ms
    for label in batch.strategy_labels:
        for o in batch.outcomes:
            if o.strategy != label:
                continue
            if o.result is None:
                yield (label, o.seed, 0, 0, None, None, None, None, None, None, f"error: {o.error}")
            else:
                yield _summary_row(label, o.seed, o.result.log, delay)
        yield _summary_row(label, "all", batch.log(label), delay)


def snapshot_rows(batch: BatchResult):
    for o in batch.outcomes:
        if o.result is None:
            continue
        for snap in o.result.snapshots:
            for node, names in enumerate(snap.contents):
                yield (o.strategy, o.seed, snap.time, node, len(names), " ".join(str(n) for n in names))


def write_outputs(batch: BatchResult, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "retrievals": out / "retrievals.csv",
        "by_distance": out / "by_distance.csv",
        "summary": out / "summary.csv",
        "snapshots": out / "snapshots.csv",
    }
    _write_csv(paths["retrievals"], RETRIEVAL_HEADER, retrieval_rows(batch))
    _write_csv(paths["by_distance"], BY_DISTANCE_HEADER, by_distance_rows(batch))
    _write_csv(paths["summary"], SUMMARY_HEADER, summary_rows(batch))
    _write_csv(paths["snapshots"], SNAPSHOT_HEADER, snapshot_rows(batch))
    return paths


def resolve_output_dir(cli_value, spec: ExperimentSpec) -> Path:
    if cli_value:
        return Path(cli_value)
    if spec.output_dir:
        return Path(spec.output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)) / spec.name


def format_summary_table(batch: BatchResult) -> str:
    header = f"{'strategy':<14} {'runs':>4} {'n':>7} {'fail%':>6} {'dist':>6} {'hops':>7} " \
             f"{'hop_red':>8} {'lat_ms':>8} {'lat_red':>8}"
    lines = [header, "-" * len(header)]
    for row in summary_rows(batch):
        label, seed = row[0], row[1]
        if seed != "all":
            continue
        runs = sum(1 for o in batch.outcomes if o.strategy == label and o.result is not None)
        n, fail_rate, dist, hops, hred, lat, lred = row[2], row[4], row[5], row[6], row[7], row[8], row[9]
        if hops is None:
            lines.append(f"{label:<14} {runs:>4} {n:>7}   (no satisfied retrievals)")
            continue
        lines.append(f"{label:<14} {runs:>4} {n:>7} {100 * fail_rate:>6.2f} {dist:>6.3f} {hops:>7.4f} "
                     f"{hred:>8.4f} {lat:>8.3f} {lred:>8.4f}")
    errors = [o for o in batch.outcomes if o.error]
    for o in errors:
        lines.append(f"! {o.strategy} seed {o.seed}: {o.error}")
    return "\n".join(lines)


# -- comparison -------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    metric: str
    strategy_a: str
    strategy_b: str
    seeds: tuple
    mean_a: float
    mean_b: float
    a_lower: int
    b_lower: int
    ties: int

    @property
    def difference(self) -> float:
        return self.mean_a - self.mean_b

    @property
    def sign(self) -> str:
        d = self.difference
        return "<" if d < 0 else (">" if d > 0 else "=")

    def report(self) -> str:
        return (f"{self.metric} over {len(self.seeds)} matched seeds\n"
                f"  {self.strategy_a}: {self.mean_a:.6g}\n"
                f"  {self.strategy_b}: {self.mean_b:.6g}\n"
                f"  difference ({self.strategy_a} - {self.strategy_b}): {self.difference:+.6g}\n"
                f"  ordering: {self.strategy_a} {self.sign} {self.strategy_b}\n"
                f"  per seed: {self.strategy_a} lower in {self.a_lower}, "
                f"{self.strategy_b} lower in {self.b_lower}, ties {self.ties}")


def compare(summary_csv, strategy_a: str, strategy_b: str, metric: str) -> Comparison:
    with open(summary_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{summary_csv} has no rows")
    available = [c for c in rows[0] if c not in ("strategy", "seed", "status")]
    if metric not in available:
        raise ConfigError(f"{metric!r} not in {summary_csv} (available: {', '.join(available)})",
                          field="metric")
    per = {}
    for row in rows:
        if row["seed"] == "all" or row.get("status", "ok") != "ok" or row[metric] == "":
            continue
        per.setdefault(row["strategy"], {})[row["seed"]] = float(row[metric])
    for s in (strategy_a, strategy_b):
        if s not in per:
            raise ConfigError(f"{s!r} not in {summary_csv} (present: {', '.join(sorted(per))})",
                              field="strategy")
    seeds = sorted(set(per[strategy_a]) & set(per[strategy_b]), key=lambda s: (len(s), s))
    if not seeds:
        raise ConfigError(f"no seeds shared by {strategy_a} and {strategy_b}")
    a = [per[strategy_a][s] for s in seeds]
    b = [per[strategy_b][s] for s in seeds]
    return Comparison(metric, strategy_a, strategy_b, tuple(seeds), math.fsum(a) / len(a),
                      math.fsum(b) / len(b), sum(x < y for x, y in zip(a, b)),
                      sum(x > y for x, y in zip(a, b)), sum(x == y for x, y in zip(a, b)))
