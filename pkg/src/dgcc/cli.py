"""Command-line interface.

Subcommands: generate synthetic instances, check decomposability, run the
optimizer or the baseline, run experiment batches and parameter sweeps, and
print aggregate reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .framework import RunConfig, run_dgcc, run_global_nsga2, write_run_outputs
from .harness import (
    ExperimentSpec,
    InstanceSource,
    SweepSpec,
    format_report,
    read_aggregates,
    run_experiment,
    sweep_normalized_hv,
    write_sweep_curves,
)
from .instance import (
    CHANNELS,
    GeneratorSpec,
    InstanceError,
    check_weak_decomposability,
    generate_instance,
    load_instance,
    save_instance,
)


def _parse_values(text: str) -> tuple[int, ...]:
    """Sweep values: either 'lo..hi' (inclusive) or a comma list."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgcc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a synthetic clustered instance")
    p_gen.add_argument("--spec", required=True, help="generator spec JSON file")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True, help="output instance file")

    p_check = sub.add_parser("check", help="report weak decomposability per channel")
    p_check.add_argument("instance")
    p_check.add_argument("--channel", choices=CHANNELS)

    p_run = sub.add_parser("run", help="run the optimizer on one instance")
    p_run.add_argument("--instance", required=True)
    p_run.add_argument("--days", type=int, required=True)
    p_run.add_argument("--config", help="RunConfig overrides, JSON file")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument(
        "--ablation",
        action="append",
        default=[],
        choices=("structure", "resources", "inheritance"),
        help="disable one mechanism (repeatable)",
    )
    p_run.add_argument(
        "--baseline",
        choices=("global-nsga2",),
        help="run the single-population baseline instead",
    )
    p_run.add_argument("--order", help="comma-separated component visit order")
    p_run.add_argument("--out", required=True, help="output directory")

    p_bench = sub.add_parser("bench", help="run an experiment batch from a spec file")
    p_bench.add_argument("--spec", required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--workers", type=int, default=1)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter and emit curve data")
    p_sweep.add_argument("--param", required=True, choices=("L", "Q"))
    p_sweep.add_argument("--values", required=True, help="e.g. 1..30 or 2,6,10")
    p_sweep.add_argument("--instance", action="append", required=True, help="instance file (repeatable)")
    p_sweep.add_argument("--days", type=int, required=True)
    p_sweep.add_argument("--repeats", type=int, default=1)
    p_sweep.add_argument("--variant", default="dgcc")
    p_sweep.add_argument("--config", help="RunConfig overrides, JSON file")
    p_sweep.add_argument("--seed-base", type=int, default=0)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", required=True)

    p_report = sub.add_parser("report", help="print the aggregate table of a batch")
    p_report.add_argument("dir")

    return parser


def _load_config(path: str | None, days: int, seed: int | None, order: str | None) -> RunConfig:
    data = {}
    if path:
        data = json.loads(Path(path).read_text())
    data["D"] = days
    if seed is not None:
        data["seed"] = seed
    if order is not None:
        data["order"] = [int(v) for v in order.split(",")]
    return RunConfig.from_dict(data)


def cmd_generate(args: argparse.Namespace) -> int:
    spec = GeneratorSpec.from_dict(json.loads(Path(args.spec).read_text()))
    instance = generate_instance(spec, args.seed)
    save_instance(instance, args.out)
    print(f"wrote {args.out}: {instance.n_pois} pois in {instance.m} clusters")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    channels = (args.channel,) if args.channel else CHANNELS
    for channel in channels:
        report = check_weak_decomposability(instance, channel)
        print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    cfg = _load_config(args.config, args.days, args.seed, args.order)
    if args.ablation:
        cfg = cfg.with_ablations(args.ablation)
    if args.baseline:
        result = run_global_nsga2(instance, cfg)
        variant = args.baseline
    else:
        result = run_dgcc(instance, cfg)
        variant = "dgcc"
    write_run_outputs(
        result,
        args.out,
        extra_summary={"instance": instance.name, "variant": variant, "seed": cfg.seed},
    )
    print(
        f"{variant}: {result.fes_total} FEs over {result.rounds} rounds, "
        f"archive {len(result.archive)}, final HV {result.final_hv():.6g}"
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    spec = ExperimentSpec.from_dict(json.loads(Path(args.spec).read_text()))
    rows, aggregates = run_experiment(spec, out_dir=args.out, workers=args.workers)
    print(f"wrote {len(rows)} result rows and {len(aggregates)} aggregate rows to {args.out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = json.loads(Path(args.config).read_text()) if args.config else {}
    spec = ExperimentSpec(
        instances=tuple(InstanceSource(label=Path(p).stem, path=p) for p in args.instance),
        durations=(args.days,),
        repeats=args.repeats,
        variants=(args.variant,),
        seed_base=args.seed_base,
        sweep=SweepSpec(parameter=args.param, values=_parse_values(args.values)),
        config=config,
    )
    _, aggregates = run_experiment(spec, out_dir=args.out, workers=args.workers)
    curves = sweep_normalized_hv(aggregates, args.param)
    write_sweep_curves(curves, args.param, args.out)
    print(f"swept {args.param} over {len(_parse_values(args.values))} values; curves in {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    print(format_report(read_aggregates(args.dir)))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "check": cmd_check,
    "run": cmd_run,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
