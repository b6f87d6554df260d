"""Command line front end: ``icnsim run | compare | topo-dump``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_experiment
from .engine import Simulator
from .errors import IcnSimError
from .experiment import (OUTPUT_DIR_ENV, compare, format_summary_table, resolve_output_dir, run_batch,
                         write_outputs)
from .routing import format_fibs
from .topology import format_edge_list


def _cmd_run(args) -> int:
    spec = load_experiment(args.spec)
    if args.seed is not None:
        spec = spec.__class__(spec.strategies, spec.template, (args.seed,), spec.name, spec.output_dir)
    batch = run_batch(spec, jobs=args.jobs)
    out = resolve_output_dir(args.out, spec)
    paths = write_outputs(batch, out)
    print(format_summary_table(batch))
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    failed = sum(1 for o in batch.outcomes if o.error)
    if failed:
        print(f"{failed} of {len(batch.outcomes)} runs failed", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    print(compare(args.summary_csv, args.strategy_a, args.strategy_b, args.metric).report())
    return 0


def _cmd_topo_dump(args) -> int:
    spec = load_experiment(args.spec)
    seed = args.seed if args.seed is not None else spec.seeds[0]
    sim = Simulator(spec.template.with_(strategy=spec.strategies[0], seed=seed))
    edges = format_edge_list(sim.topology)
    fibs = format_fibs(sim.routing)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"topology_seed{seed}.txt").write_text(edges)
        (out / f"fibs_seed{seed}.txt").write_text(fibs)
        print(f"wrote {out / f'topology_seed{seed}.txt'} and {out / f'fibs_seed{seed}.txt'}")
    else:
        sys.stdout.write(edges + "\n" + fibs)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icnsim", description="ICN in-network caching simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every strategy x seed in an experiment spec and write CSVs")
    p.add_argument("spec", help="YAML experiment spec")
    p.add_argument("--seed", type=int, help="run this single seed instead of the spec's seeds")
    p.add_argument("--out", help=f"output directory (default: spec output_dir, else ${OUTPUT_DIR_ENV}/<name>, "
                                 "else results/<name>)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="compare two strategies on one summary.csv metric")
    p.add_argument("summary_csv")
    p.add_argument("strategy_a")
    p.add_argument("strategy_b")
    p.add_argument("--metric", default="mean_hops")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("topo-dump", help="print the generated topology and FIBs")
    p.add_argument("spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write files here instead of stdout")
    p.set_defaults(func=_cmd_topo_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IcnSimError as exc:
        source = getattr(args, "spec", None) or getattr(args, "summary_csv", "")
        print(f"icnsim: error: {source}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"icnsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
