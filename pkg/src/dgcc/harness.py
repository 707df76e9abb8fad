"""Experiment runner: multi-seed batches, ablations, parameter sweeps.

Every (instance, duration) pair gets one shared reference point, computed
from a variant-independent random-genome warm-up sample and passed to every
run as a fixed reference, so hypervolumes are comparable across variants
and independent of execution order. Cell seeds are derived from the spec's
base seed and the cell key, so reruns reproduce byte-identical result rows
(wall-clock timings aside).
"""

from __future__ import annotations

import csv
import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .encoding import Genome, initial_decomposition
from .framework import RunConfig, run_dgcc, run_global_nsga2
from .instance import ClusteredInstance, GeneratorSpec, InstanceError, generate_instance, load_instance
from .objectives import evaluate_full_unchecked
from .pareto import RefPolicy, hypervolume
from .streams import substream

logger = logging.getLogger(__name__)

VARIANTS = (
    "dgcc",
    "dgcc-ablation-structure",
    "dgcc-ablation-resources",
    "dgcc-ablation-inheritance",
    "global-nsga2",
)

REFERENCE_SAMPLE_SIZE = 512


@dataclass(frozen=True)
class SweepSpec:
    parameter: str  # "L" | "Q"
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.parameter not in ("L", "Q"):
            raise ValueError(f"sweep parameter must be 'L' or 'Q', got {self.parameter!r}")
        if any(v <= 0 for v in self.values):
            raise ValueError("sweep values must be positive")


@dataclass(frozen=True)
class InstanceSource:
    label: str
    path: str | None = None
    generator: GeneratorSpec | None = None
    gen_seed: int = 0

    def load(self) -> ClusteredInstance:
        if self.path is not None:
            return load_instance(self.path)
        assert self.generator is not None
        return generate_instance(self.generator, self.gen_seed)


@dataclass(frozen=True)
class ExperimentSpec:
    instances: tuple[InstanceSource, ...]
    durations: tuple[int, ...]
    repeats: int
    variants: tuple[str, ...]
    seed_base: int = 0
    sweep: SweepSpec | None = None
    config: dict | None = None  # RunConfig field overrides

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; expected one of {VARIANTS}")
        if not self.instances or not self.durations:
            raise ValueError("need at least one instance and one duration")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        sources = []
        for entry in data["instances"]:
            if isinstance(entry, str):
                sources.append(InstanceSource(label=Path(entry).stem, path=entry))
            else:
                gen = GeneratorSpec.from_dict(entry["generator"])
                sources.append(
                    InstanceSource(
                        label=entry.get("name", gen.name),
                        generator=gen,
                        gen_seed=int(entry.get("seed", 0)),
                    )
                )
        sweep = None
        if data.get("sweep"):
            sweep = SweepSpec(
                parameter=data["sweep"]["parameter"],
                values=tuple(int(v) for v in data["sweep"]["values"]),
            )
        return cls(
            instances=tuple(sources),
            durations=tuple(int(d) for d in data["durations"]),
            repeats=int(data.get("repeats", 1)),
            variants=tuple(data.get("variants", ("dgcc",))),
            seed_base=int(data.get("seed_base", 0)),
            sweep=sweep,
            config=data.get("config"),
        )


@dataclass(frozen=True)
class ResultRow:
    instance: str
    variant: str
    value: int | None  # sweep parameter value, if sweeping
    seed: int
    hv: float
    fes: int
    wall_ms: float


@dataclass(frozen=True)
class AggregateRow:
    instance: str
    variant: str
    value: int | None
    repeats: int
    mean_hv: float
    std_hv: float
    rank: int


def cell_seed(seed_base: int, *key) -> int:
    """seed_base plus a stable hash of the cell key, folded to 63 bits."""
    h = hashlib.blake2b(digest_size=8)
    for part in key:
        h.update(str(part).encode())
        h.update(b"\x1f")
    return (seed_base + int.from_bytes(h.digest(), "big")) & 0x7FFFFFFFFFFFFFFF


def pooled_reference(
    instance: ClusteredInstance, D: int, base_cfg: RunConfig, seed_base: int, label: str
) -> tuple[float, ...]:
    """Variant-independent warm-up: objective-wise maximum over a random
    genome sample, scaled by the adaptive margin."""
    m = instance.m
    order = base_cfg.order if base_cfg.order is not None else tuple(range(1, m + 1))
    plan = initial_decomposition(m, D, base_cfg.M, order)
    rng = substream(seed_base, "shared-ref", label, D)
    ecfg = base_cfg.eval_config()
    margin = base_cfg.ref.margin if base_cfg.ref.kind == "adaptive" else 1.1
    maxima = [0.0, 0.0, 0.0]
    for _ in range(REFERENCE_SAMPLE_SIZE):
        slots: list[int] = []
        for pos in range(1, m + 1):
            members = instance.cluster_members(order[pos - 1])
            length = plan.days[pos - 1] * plan.M
            take = min(length, len(members))
            picked = [int(v) for v in rng.permutation(members)[:take]]
            seg = picked + [0] * (length - take)
            zero_draws = rng.random(length)
            seg = [0 if zero_draws[j] < base_cfg.p_z else seg[j] for j in range(length)]
            if all(v == 0 for v in seg):
                seg[int(rng.integers(0, length))] = picked[0]
            slots.extend(seg)
        obj = evaluate_full_unchecked(Genome(slots), plan, instance, ecfg)
        maxima = [max(a, b) for a, b in zip(maxima, obj)]
    return tuple(v * margin for v in maxima)


def _build_cfg(
    base_cfg: RunConfig,
    D: int,
    seed: int,
    variant: str,
    sweep: SweepSpec | None,
    value: int | None,
    ref_coords: tuple[float, ...],
) -> RunConfig:
    cfg = replace(
        base_cfg,
        D=D,
        seed=seed,
        ref=RefPolicy(kind="fixed", coords=ref_coords),
        no_structure_adjustment=False,
        no_resource_allocation=False,
        no_population_inheritance=False,
    )
    if variant == "dgcc-ablation-structure":
        cfg = replace(cfg, no_structure_adjustment=True)
    elif variant == "dgcc-ablation-resources":
        cfg = replace(cfg, no_resource_allocation=True)
    elif variant == "dgcc-ablation-inheritance":
        cfg = replace(cfg, no_population_inheritance=True)
    if sweep is not None and value is not None:
        if sweep.parameter == "L":
            cfg = replace(cfg, L=int(value))
        else:  # Q = (I_bas + I_add) / n, split evenly
            half = (int(value) * cfg.n) // 2
            cfg = replace(cfg, I_bas=half, I_add=half)
    return cfg


def _run_cell(args: tuple) -> ResultRow:
    instance, cfg, variant, label, value, ref_coords = args
    t0 = time.perf_counter()
    if variant == "global-nsga2":
        result = run_global_nsga2(instance, cfg)
    else:
        result = run_dgcc(instance, cfg)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    hv = hypervolume(result.archive.objectives, ref_coords)
    return ResultRow(
        instance=label,
        variant=variant,
        value=value,
        seed=cfg.seed,
        hv=hv,
        fes=result.fes_total,
        wall_ms=wall_ms,
    )


def run_experiment(
    spec: ExperimentSpec,
    out_dir: str | Path | None = None,
    workers: int = 1,
) -> tuple[list[ResultRow], list[AggregateRow]]:
    """Execute every (instance x duration x variant x sweep value x repeat)
    cell; returns raw rows and per-cell aggregates, optionally writing
    results.csv and summary.csv."""
    base_cfg = RunConfig(D=max(spec.durations), **(spec.config or {}))
    values: tuple[int | None, ...] = spec.sweep.values if spec.sweep else (None,)

    cells = []
    for source in spec.instances:
        try:
            instance = source.load()
        except (InstanceError, OSError) as exc:
            logger.error("skipping instance %s: %s", source.label, exc)
            continue
        for D in spec.durations:
            label = f"{source.label}@D{D}"
            ref_coords = pooled_reference(instance, D, base_cfg, spec.seed_base, label)
            for variant in spec.variants:
                for value in values:
                    for rep in range(spec.repeats):
                        seed = cell_seed(spec.seed_base, label, variant, value, rep)
                        cfg = _build_cfg(base_cfg, D, seed, variant, spec.sweep, value, ref_coords)
                        cells.append((instance, cfg, variant, label, value, ref_coords))

    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        rows = [_run_cell(cell) for cell in cells]

    rows.sort(key=lambda r: (r.instance, r.variant, -1 if r.value is None else r.value, r.seed))
    aggregates = aggregate_rows(rows)
    if out_dir is not None:
        write_results(rows, aggregates, out_dir)
    return rows, aggregates


def aggregate_rows(rows: Sequence[ResultRow]) -> list[AggregateRow]:
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.instance, row.variant, row.value), []).append(row)

    partial: list[dict] = []
    for (instance, variant, value), members in sorted(
        groups.items(), key=lambda kv: (kv[0][0], kv[0][1], -1 if kv[0][2] is None else kv[0][2])
    ):
        hvs = [r.hv for r in members]
        mean = sum(hvs) / len(hvs)
        if len(hvs) > 1:
            var = sum((h - mean) ** 2 for h in hvs) / (len(hvs) - 1)
            std = var ** 0.5
        else:
            std = 0.0
        partial.append(
            dict(instance=instance, variant=variant, value=value, repeats=len(hvs), mean_hv=mean, std_hv=std)
        )

    # rank variants within each (instance, value) group; higher mean HV is better
    out: list[AggregateRow] = []
    for entry in partial:
        peers = [p for p in partial if p["instance"] == entry["instance"] and p["value"] == entry["value"]]
        rank = 1 + sum(1 for p in peers if p["mean_hv"] > entry["mean_hv"])
        out.append(AggregateRow(rank=rank, **entry))
    return out


def sweep_normalized_hv(
    aggregates: Sequence[AggregateRow], parameter: str
) -> dict[str, list[tuple[int, float]]]:
    """Per instance: sweep-value means min-max normalized to [0, 1].

    A flat curve (zero range) maps to all zeros.
    """
    by_instance: dict[str, list[AggregateRow]] = {}
    for agg in aggregates:
        if agg.value is None:
            raise ValueError("aggregates carry no sweep values")
        by_instance.setdefault(agg.instance, []).append(agg)

    curves: dict[str, list[tuple[int, float]]] = {}
    for instance, entries in sorted(by_instance.items()):
        entries = sorted(entries, key=lambda a: a.value)
        if len(entries) < 2:
            raise ValueError(f"instance {instance}: need at least 2 sweep values")
        means = [e.mean_hv for e in entries]
        lo, hi = min(means), max(means)
        span = hi - lo
        if span <= 0:
            curves[instance] = [(e.value, 0.0) for e in entries]
        else:
            curves[instance] = [(e.value, (e.mean_hv - lo) / span) for e in entries]
    return curves


# -- persistence ------------------------------------------------------------------


RESULT_COLUMNS = ("instance", "variant", "value", "seed", "hv", "fes", "wall_ms")
AGGREGATE_COLUMNS = ("instance", "variant", "value", "repeats", "mean_hv", "std_hv", "rank")


def write_results(
    rows: Sequence[ResultRow], aggregates: Sequence[AggregateRow], out_dir: str | Path
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.instance, r.variant, "" if r.value is None else r.value, r.seed, repr(r.hv), r.fes, repr(r.wall_ms)]
            )
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for a in aggregates:
            writer.writerow(
                [a.instance, a.variant, "" if a.value is None else a.value, a.repeats, repr(a.mean_hv), repr(a.std_hv), a.rank]
            )


def write_sweep_curves(
    curves: dict[str, list[tuple[int, float]]], parameter: str, out_dir: str | Path
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for instance, points in sorted(curves.items()):
        safe = instance.replace("/", "_").replace("@", "_")
        with open(out / f"curve_{parameter}_{safe}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([parameter, "normalized_hv"])
            for value, norm in points:
                writer.writerow([value, repr(norm)])


def read_aggregates(out_dir: str | Path) -> list[AggregateRow]:
    path = Path(out_dir) / "summary.csv"
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                AggregateRow(
                    instance=rec["instance"],
                    variant=rec["variant"],
                    value=int(rec["value"]) if rec["value"] else None,
                    repeats=int(rec["repeats"]),
                    mean_hv=float(rec["mean_hv"]),
                    std_hv=float(rec["std_hv"]),
                    rank=int(rec["rank"]),
                )
            )
    return rows


def format_report(aggregates: Sequence[AggregateRow]) -> str:
    header = f"{'instance':<24} {'variant':<28} {'value':>6} {'runs':>5} {'mean HV':>14} {'std HV':>13} {'rank':>5}"
    lines = [header, "-" * len(header)]
    for a in aggregates:
        value = "" if a.value is None else str(a.value)
        lines.append(
            f"{a.instance:<24} {a.variant:<28} {value:>6} {a.repeats:>5} "
            f"{a.mean_hv:>14.6g} {a.std_hv:>13.6g} {a.rank:>5}"
        )
    return "\n".join(lines)
