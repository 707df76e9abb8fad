"""Cooperative-coevolution driver.

One run proceeds in rounds over the components in visit order. Each round a
component's subpopulation receives a fitness-evaluation budget, evolves,
and feeds every evaluated assembly into a global Pareto archive and into
the shared context solution (replaced only on strictly higher reference-box
contribution). Between rounds the per-component hypervolume ledger is
updated and budgets are re-allocated by optimization potential; every L
rounds the day assignment is re-balanced toward the component with the
best normalized per-day front.

A plain single-population NSGA-II over full genomes (same operators applied
per segment, same budgets) is provided as the comparison baseline.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoding import (
    DecompositionPlan,
    Genome,
    genome_to_text,
    initial_decomposition,
    segment_of,
)
from .evolution import (
    ContextSolution,
    Subpopulation,
    cache_objectives,
    crossover,
    fill_day_block,
    init_subpopulation,
    mutate,
    nsga2_step,
    repair_empty,
    run_generations,
)
from .instance import CHANNELS, ClusteredInstance, check_weak_decomposability
from .objectives import (
    EvalConfig,
    ObjectiveVector,
    evaluate_full,
    full_evaluator,
    normalized_fitness,
    segment_vector_objectives,
)
from .pareto import (
    ParetoArchive,
    RefPolicy,
    ReferencePoint,
    choose_reference_point,
    hv_contribution,
    hypervolume,
)
from .streams import substream

logger = logging.getLogger(__name__)

STAGNATION_THRESHOLD = 5e-5


@dataclass(frozen=True)
class RunConfig:
    """Run parameters; defaults follow the reference experimental setup."""

    D: int
    n: int = 100
    p_m: float = 0.3
    p_z: float = 0.3
    alpha_ctrl: float = 0.8
    theta: float = 10000.0
    M: int = 5
    L: int = 6
    I_bas: int | None = None  # default 10n, so I_bas + I_add = 20n
    I_add: int | None = None
    max_fes: int | None = None  # default 30000m + 5000D
    seed: int = 0
    eval_mode: str = "context"
    count_interday_edges: bool = True
    segment_omega: str = "local"
    ref: RefPolicy = RefPolicy(kind="adaptive", margin=1.1)
    order: tuple[int, ...] | None = None
    delta_const: float = 1e-12
    no_structure_adjustment: bool = False
    no_resource_allocation: bool = False
    no_population_inheritance: bool = False
    preserve_intermediate_days: bool = False

    def __post_init__(self) -> None:
        if self.D < 1:
            raise ValueError(f"D must be >= 1, got {self.D}")
        if self.n < 2:
            raise ValueError(f"population size must be >= 2, got {self.n}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if not 0 <= self.p_m <= 1 or not 0 <= self.p_z <= 1:
            raise ValueError("p_m and p_z must be probabilities")
        if self.delta_const <= 0:
            raise ValueError("delta_const must be positive")

    @property
    def i_bas(self) -> int:
        return self.I_bas if self.I_bas is not None else 10 * self.n

    @property
    def i_add(self) -> int:
        return self.I_add if self.I_add is not None else 10 * self.n

    def resolved_max_fes(self, m: int) -> int:
        if self.max_fes is not None:
            return self.max_fes
        return 30000 * m + 5000 * self.D

    def eval_config(self) -> EvalConfig:
        return EvalConfig(
            alpha_ctrl=self.alpha_ctrl,
            theta=self.theta,
            eval_mode=self.eval_mode,
            count_interday_edges=self.count_interday_edges,
            segment_omega=self.segment_omega,
        )

    def with_ablations(self, names: Sequence[str]) -> "RunConfig":
        flags = {}
        for name in names:
            if name == "structure":
                flags["no_structure_adjustment"] = True
            elif name == "resources":
                flags["no_resource_allocation"] = True
            elif name == "inheritance":
                flags["no_population_inheritance"] = True
            else:
                raise ValueError(f"unknown ablation {name!r}")
        return replace(self, **flags)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        if "MaxFEs" in data:
            data["max_fes"] = data.pop("MaxFEs")
        ref_data = data.pop("ref", None)
        if ref_data is not None:
            coords = ref_data.get("coords")
            data["ref"] = RefPolicy(
                kind=ref_data.get("policy", ref_data.get("kind", "adaptive")),
                margin=float(ref_data.get("margin", 1.1)),
                coords=tuple(coords) if coords is not None else None,
            )
        if "order" in data and data["order"] is not None:
            data["order"] = tuple(int(v) for v in data["order"])
        ablations = data.pop("ablations", [])
        cfg = cls(**data)
        return cfg.with_ablations(ablations) if ablations else cfg


# -- resource ledger ----------------------------------------------------------


@dataclass
class ResourceLedger:
    """Per-component hypervolume bookkeeping driving budget allocation."""

    C: list[float]
    delta: list[float]
    P: list[float]
    N: list[int]
    stagnant: list[bool]
    I_avl: list[int]
    I_bas: int
    I_add: int
    delta_const: float = 1e-12
    B: float = 0.0

    @classmethod
    def fresh(cls, n_pois: Sequence[int], i_bas: int, i_add: int, delta_const: float) -> "ResourceLedger":
        m = len(n_pois)
        return cls(
            C=[0.0] * m,
            delta=[0.0] * m,
            P=[1.0] * m,
            N=list(n_pois),
            stagnant=[False] * m,
            I_avl=[i_bas + i_add] * m,
            I_bas=i_bas,
            I_add=i_add,
            delta_const=delta_const,
        )

    @property
    def U(self) -> list[int]:
        """0-based indices of non-stagnant components."""
        return [i for i, s in enumerate(self.stagnant) if not s]

    def snapshot(self, round_index: int, fes: int, days: Sequence[int], adjusted: bool) -> dict:
        return {
            "round": int(round_index),
            "fes": int(fes),
            "C": [float(v) for v in self.C],
            "delta": [float(v) for v in self.delta],
            "P": [float(v) for v in self.P],
            "days": [int(v) for v in days],
            "I_avl": [int(v) for v in self.I_avl],
            "stagnant": [bool(v) for v in self.stagnant],
            "adjusted": bool(adjusted),
        }


def balancing_coefficient(deltas: Sequence[float], delta_const: float) -> float:
    """Mean hypervolume improvement plus a small positive constant."""
    if not deltas:
        raise ValueError("balancing coefficient needs at least one delta")
    if delta_const <= 0:
        raise ValueError("delta_const must be positive")
    return sum(deltas) / len(deltas) + delta_const


def optimization_potential(delta_i: float, B: float, N_i: int) -> float:
    """(delta + B) scaled by the component's POI count."""
    if N_i < 1:
        raise ValueError(f"component POI count must be >= 1, got {N_i}")
    return (delta_i + B) * N_i


def detect_stagnation(delta_i: float, C_prev: float, threshold: float = STAGNATION_THRESHOLD) -> bool:
    """Relative improvement strictly below the threshold; never stagnant
    before the component has any hypervolume."""
    if C_prev <= 0:
        return False
    return delta_i / C_prev < threshold


def allocate_resources(ledger: ResourceLedger) -> list[int]:
    """Integer budgets: stagnant components keep the basic share, the pooled
    additional share is split proportionally to optimization potential with
    a largest-remainder pass so totals are exact."""
    m = len(ledger.P)
    budgets = [ledger.I_bas] * m
    active = ledger.U
    if not active:
        if ledger.I_add > 0:
            logger.warning("all components stagnant: additional budget pool unspent")
        return budgets
    pool = len(active) * ledger.I_add
    total_p = sum(ledger.P[i] for i in active)
    if total_p <= 0:
        shares = {i: pool // len(active) for i in active}
    else:
        shares = {i: int(math.floor(pool * ledger.P[i] / total_p)) for i in active}
    leftover = pool - sum(shares.values())
    for i in sorted(active, key=lambda i: (-ledger.P[i], i)):
        if leftover <= 0:
            break
        shares[i] += 1
        leftover -= 1
    for i in active:
        budgets[i] += shares[i]
    return budgets


def component_hv(subpop: Subpopulation, ref: ReferencePoint) -> float:
    """Hypervolume of a subpopulation's cached objectives vs the global
    frozen reference."""
    if not subpop.cached_objectives:
        return 0.0
    return hypervolume(subpop.cached_objectives, ref)


# -- dynamic structure adjustment ----------------------------------------------


@dataclass
class AdjustResult:
    plan: DecompositionPlan
    subpops: list[Subpopulation]
    moved: tuple[int, int] | None  # (i_max, i_min) when a transfer happened


def normalized_component_hvs(
    plan: DecompositionPlan,
    subpops: list[Subpopulation],
    instance: ClusteredInstance,
    cfg: RunConfig,
) -> list[float]:
    """Hypervolume of each subpopulation's per-day-normalized isolated
    objectives against a shared reference (pooled max * 1.1)."""
    ecfg = cfg.eval_config()
    per_component: list[list[ObjectiveVector]] = []
    for pos in range(1, plan.m + 1):
        d_i = plan.days[pos - 1]
        vecs = [
            normalized_fitness(
                segment_vector_objectives(ind, d_i, plan.M, instance, ecfg), d_i
            )
            for ind in subpops[pos - 1].individuals
        ]
        per_component.append(vecs)
    pooled = np.asarray([v for vecs in per_component for v in vecs], dtype=float)
    ref = tuple(float(c) for c in pooled.max(axis=0) * 1.1)
    return [hypervolume(vecs, ref) for vecs in per_component]


def adjust_decision(hvs: Sequence[float], days: Sequence[int]) -> tuple[int, int] | None:
    """Pick (receiver, donor) = (argmax HV, argmin HV among multi-day
    components), 1-based, ties to the lower index; None when no transfer is
    possible."""
    m = len(hvs)
    i_max = 1 + min(range(m), key=lambda i: (-hvs[i], i))
    eligible = [pos for pos in range(1, m + 1) if days[pos - 1] > 1]
    if not eligible:
        return None
    i_min = min(eligible, key=lambda pos: (hvs[pos - 1], pos))
    if i_max == i_min:
        return None
    return i_max, i_min


def apply_day_transfer(
    plan: DecompositionPlan,
    subpops: list[Subpopulation],
    instance: ClusteredInstance,
    cfg: RunConfig,
    stream: np.random.Generator,
    i_max: int,
    i_min: int,
) -> tuple[DecompositionPlan, list[Subpopulation]]:
    """Shift one day block from component i_min to i_max.

    The receiver grows a freshly randomized block on its side toward the
    donor; the donor sheds its block toward the receiver; every component
    strictly between does both (day count unchanged, one day's content
    churned) unless ``preserve_intermediate_days`` keeps them untouched.
    Subpopulations outside [i_max, i_min] are inherited as-is.
    """
    m = plan.m
    direction = 1 if i_min > i_max else -1
    days = list(plan.days)
    days[i_max - 1] += 1
    days[i_min - 1] -= 1
    new_plan = plan.with_days(tuple(days))

    M = plan.M
    lo, hi = min(i_max, i_min), max(i_max, i_min)
    new_subpops: list[Subpopulation] = []
    for pos in range(1, m + 1):
        sp = subpops[pos - 1]
        is_intermediate = lo < pos < hi
        untouched = pos < lo or pos > hi or (is_intermediate and cfg.preserve_intermediate_days)
        if untouched:
            new_subpops.append(sp)  # population inheritance
            continue
        members = instance.cluster_members(sp.cluster_id)
        new_individuals: list[list[int]] = []
        for ind in sp.individuals:
            slots = list(ind)
            if pos == i_max:
                present = {v for v in slots if v != 0}
                block = fill_day_block(members, present, M, cfg.p_z, stream)
                slots = slots + block if direction == 1 else block + slots
            elif pos == i_min:
                slots = slots[M:] if direction == 1 else slots[:-M]
                repair_empty(slots, members, stream)
            else:
                # shed the block toward the receiver, grow one toward the donor
                slots = slots[M:] if direction == 1 else slots[:-M]
                present = {v for v in slots if v != 0}
                block = fill_day_block(members, present, M, cfg.p_z, stream)
                slots = slots + block if direction == 1 else block + slots
                repair_empty(slots, members, stream)
            new_individuals.append(slots)
        new_subpops.append(
            Subpopulation(
                component_index=sp.component_index,
                cluster_id=sp.cluster_id,
                individuals=new_individuals,
                cached_objectives=None,
                rng=sp.rng,
            )
        )
    return new_plan, new_subpops


def dynamic_adjust(
    plan: DecompositionPlan,
    subpops: list[Subpopulation],
    instance: ClusteredInstance,
    cfg: RunConfig,
    stream: np.random.Generator,
) -> AdjustResult:
    """Move one day of encoding from the weakest to the strongest component,
    judged by the hypervolume of per-day-normalized isolated objectives."""
    hvs = normalized_component_hvs(plan, subpops, instance, cfg)
    moved = adjust_decision(hvs, plan.days)
    if moved is None:
        return _maybe_reinit(AdjustResult(plan, subpops, None), instance, cfg)
    if cfg.no_population_inheritance:
        days = list(plan.days)
        days[moved[0] - 1] += 1
        days[moved[1] - 1] -= 1
        return _maybe_reinit(
            AdjustResult(plan.with_days(tuple(days)), subpops, moved), instance, cfg
        )
    new_plan, new_subpops = apply_day_transfer(plan, subpops, instance, cfg, stream, *moved)
    return AdjustResult(new_plan, new_subpops, moved)


def _maybe_reinit(result: AdjustResult, instance: ClusteredInstance, cfg: RunConfig) -> AdjustResult:
    """Under the no-inheritance ablation every adjustment restarts all
    subpopulations from scratch, transfer or not."""
    if not cfg.no_population_inheritance:
        return result
    fresh = [
        init_subpopulation(
            sp.component_index, result.plan, instance, len(sp.individuals), cfg.p_z, sp.rng
        )
        for sp in result.subpops
    ]
    return AdjustResult(result.plan, fresh, result.moved)


def _refit_context_genome(
    genome: Genome,
    old_plan: DecompositionPlan,
    new_plan: DecompositionPlan,
    i_max: int,
    i_min: int,
) -> Genome:
    """Re-cut the context genome for the new day assignment, preserving each
    segment's visited sequence; the donor drops overflow ids from its side
    nearest the receiver if its content no longer fits."""
    direction = 1 if i_min > i_max else -1
    M = old_plan.M
    slots: list[int] = []
    for pos in range(1, old_plan.m + 1):
        seg = segment_of(genome, old_plan, pos).slots
        if pos == i_max:
            seg = seg + [0] * M if direction == 1 else [0] * M + seg
        elif pos == i_min:
            capacity = new_plan.days[pos - 1] * M
            seq = [v for v in seg if v != 0]
            if len(seq) > capacity:
                seq = seq[-capacity:] if direction == 1 else seq[:capacity]
            seg = seq + [0] * (capacity - len(seq))
        slots.extend(seg)
    return Genome(slots)


# -- run result and main loops --------------------------------------------------


@dataclass
class RunResult:
    archive: ParetoArchive
    history: list[dict]
    fes_total: int
    reference: ReferencePoint
    plan: DecompositionPlan
    rounds: int
    wall_ms: float
    decomposability: dict[str, bool] = field(default_factory=dict)

    def final_hv(self) -> float:
        return hypervolume(self.archive.objectives, self.reference)


def _update_context(
    context: ContextSolution,
    candidates: Sequence[tuple[Genome, ObjectiveVector]],
    ref: ReferencePoint,
) -> ContextSolution:
    best = context
    for genome, obj in candidates:
        contrib = hv_contribution(obj, ref, warn=False)
        if contrib > best.hv_contrib:
            best = ContextSolution(genome=genome, objectives=obj, hv_contrib=contrib)
    return best


def run_dgcc(instance: ClusteredInstance, cfg: RunConfig) -> RunResult:
    """Full coevolutionary run; deterministic for a fixed config."""
    t0 = time.perf_counter()
    m = instance.m
    if cfg.D < m:
        raise ValueError(f"need at least one day per city: D={cfg.D} < m={m}")
    max_fes = cfg.resolved_max_fes(m)
    if max_fes < m * cfg.n:
        raise ValueError(
            f"MaxFEs={max_fes} cannot cover the initial evaluations ({m}*{cfg.n})"
        )

    decomp = {}
    for channel in CHANNELS:
        report = check_weak_decomposability(instance, channel)
        decomp[channel] = report.satisfied
        if not report.satisfied:
            logger.warning(
                "instance %s not weakly decomposable on %s channel "
                "(lhs=%.6g > rhs=%.6g); proceeding anyway",
                instance.name, channel, report.lhs, report.rhs,
            )

    order = cfg.order if cfg.order is not None else tuple(range(1, m + 1))
    plan = initial_decomposition(m, cfg.D, cfg.M, order)
    ecfg = cfg.eval_config()
    ledger = ResourceLedger.fresh(
        [len(instance.cluster_members(cid)) for cid in order],
        cfg.i_bas,
        cfg.i_add,
        cfg.delta_const,
    )
    archive = ParetoArchive()
    adjust_rng = substream(cfg.seed, "adjust")
    subpops = [
        init_subpopulation(pos, plan, instance, cfg.n, cfg.p_z, substream(cfg.seed, "component", pos))
        for pos in range(1, m + 1)
    ]

    def insert_candidates(cands: Sequence[tuple[Genome, ObjectiveVector]], the_plan: DecompositionPlan) -> None:
        # genomes are stored with the plan they were laid out under and only
        # rendered to text for the survivors at write time
        archive.insert_many([((genome, the_plan), obj) for genome, obj in cands])

    # provisional context: first individual of every component
    slots: list[int] = []
    for sp in subpops:
        slots.extend(sp.individuals[0])
    context_genome = Genome(slots)
    context = ContextSolution(
        genome=context_genome,
        objectives=evaluate_full(context_genome, plan, instance, ecfg),
        hv_contrib=0.0,
    )

    fes_total = 0
    warmup_pool: list[tuple[Genome, ObjectiveVector]] = [(context.genome, context.objectives)]
    for sp in subpops:
        evaluated = cache_objectives(sp, context, plan, instance, ecfg)
        fes_total += len(evaluated)
        insert_candidates(evaluated, plan)
        warmup_pool.extend(evaluated)

    history: list[dict] = []
    ref: ReferencePoint | None = None
    round_index = 0
    stopped = False

    while not stopped:
        round_index += 1
        consumed_this_round = 0
        round_candidates: list[tuple[Genome, ObjectiveVector]] = []
        for pos in range(1, m + 1):
            budget = ledger.I_avl[pos - 1]
            if fes_total + budget > max_fes:
                stopped = True
                break
            subpops[pos - 1], fes, cands = nsga2_step(
                subpops[pos - 1], budget, context, plan, instance, ecfg, cfg.p_m
            )
            fes_total += fes
            consumed_this_round += fes
            insert_candidates(cands, plan)
            if ref is not None:
                context = _update_context(context, cands, ref)
            else:
                round_candidates.extend(cands)

        if ref is None:
            # freeze the reference from everything seen through the warm-up
            # round, then promote the best contributor to context
            pool = [obj for _, obj in warmup_pool] + [obj for _, obj in round_candidates]
            ref = choose_reference_point(pool, cfg.ref)
            context = _update_context(
                ContextSolution(
                    context.genome,
                    context.objectives,
                    hv_contribution(context.objectives, ref, warn=False),
                ),
                warmup_pool + round_candidates,
                ref,
            )

        if stopped and consumed_this_round == 0 and round_index > 1:
            round_index -= 1
            break

        # ledger update (bookkeeping even when allocation is ablated)
        c_prev = list(ledger.C)
        for pos in range(1, m + 1):
            ledger.C[pos - 1] = component_hv(subpops[pos - 1], ref)
            ledger.delta[pos - 1] = ledger.C[pos - 1] - c_prev[pos - 1]
        ledger.B = balancing_coefficient(ledger.delta, ledger.delta_const)
        for pos in range(1, m + 1):
            ledger.stagnant[pos - 1] = detect_stagnation(ledger.delta[pos - 1], c_prev[pos - 1])
            ledger.P[pos - 1] = optimization_potential(
                ledger.delta[pos - 1], ledger.B, ledger.N[pos - 1]
            )
        if cfg.no_resource_allocation:
            ledger.I_avl = [cfg.i_bas + cfg.i_add] * m
        else:
            ledger.I_avl = allocate_resources(ledger)

        adjusted = False
        if (
            not stopped
            and not cfg.no_structure_adjustment
            and round_index % cfg.L == 0
        ):
            result = dynamic_adjust(plan, subpops, instance, cfg, adjust_rng)
            if result.moved is not None or cfg.no_population_inheritance:
                adjusted = True
                old_plan = plan
                plan = result.plan
                subpops = result.subpops
                if result.moved is not None:
                    context_genome = _refit_context_genome(
                        context.genome, old_plan, plan, *result.moved
                    )
                else:
                    context_genome = context.genome
                if cfg.eval_mode == "context":
                    obj = evaluate_full(context_genome, plan, instance, ecfg)
                    context = ContextSolution(
                        genome=context_genome,
                        objectives=obj,
                        hv_contrib=hv_contribution(obj, ref, warn=False),
                    )
                else:
                    context = ContextSolution(context_genome, context.objectives, context.hv_contrib)
                for sp in subpops:
                    if sp.cached_objectives is None:
                        evaluated = cache_objectives(sp, context, plan, instance, ecfg)
                        insert_candidates(evaluated, plan)
                        if cfg.eval_mode == "context":
                            context = _update_context(context, evaluated, ref)

        if cfg.no_population_inheritance and not stopped and not adjusted:
            # ablated inheritance: every round restarts every subpopulation;
            # only the context solution and archive carry progress forward
            subpops = [
                init_subpopulation(sp.component_index, plan, instance, cfg.n, cfg.p_z, sp.rng)
                for sp in subpops
            ]
            for sp in subpops:
                evaluated = cache_objectives(sp, context, plan, instance, ecfg)
                insert_candidates(evaluated, plan)
                if cfg.eval_mode == "context":
                    context = _update_context(context, evaluated, ref)

        history.append(ledger.snapshot(round_index, fes_total, plan.days, adjusted))

        if stopped:
            break
        if consumed_this_round == 0:
            logger.warning("no budget consumable in a full round; stopping at %d FEs", fes_total)
            break

    wall_ms = (time.perf_counter() - t0) * 1000.0
    assert ref is not None
    return RunResult(
        archive=archive,
        history=history,
        fes_total=fes_total,
        reference=ref,
        plan=plan,
        rounds=round_index,
        wall_ms=wall_ms,
        decomposability=decomp,
    )


def run_global_nsga2(instance: ClusteredInstance, cfg: RunConfig) -> RunResult:
    """Single-population NSGA-II over full genomes under the same budget.

    Segments are varied with the component operators; rounds consume
    m*(I_bas+I_add) evaluations so that with one component the loop is
    step-for-step identical to the coevolutionary run with adjustments
    disabled.
    """
    t0 = time.perf_counter()
    m = instance.m
    if cfg.D < m:
        raise ValueError(f"need at least one day per city: D={cfg.D} < m={m}")
    max_fes = cfg.resolved_max_fes(m)
    if max_fes < cfg.n:
        raise ValueError(f"MaxFEs={max_fes} cannot cover the initial evaluations")

    decomp = {}
    for channel in CHANNELS:
        decomp[channel] = check_weak_decomposability(instance, channel).satisfied

    order = cfg.order if cfg.order is not None else tuple(range(1, m + 1))
    plan = initial_decomposition(m, cfg.D, cfg.M, order)
    ecfg = cfg.eval_config()
    archive = ParetoArchive()

    streams = [substream(cfg.seed, "component", pos) for pos in range(1, m + 1)]
    seg_pops = [
        init_subpopulation(pos, plan, instance, cfg.n, cfg.p_z, streams[pos - 1]).individuals
        for pos in range(1, m + 1)
    ]
    population: list[list[int]] = []
    for k in range(cfg.n):
        slots: list[int] = []
        for pos in range(1, m + 1):
            slots.extend(seg_pops[pos - 1][k])
        population.append(slots)

    members_by_pos = [instance.cluster_members(plan.order[pos - 1]) for pos in range(1, m + 1)]
    bounds = [plan.segment_bounds(pos) for pos in range(1, m + 1)]

    def vary(a: list[int], b: list[int], rng: np.random.Generator) -> tuple[list[int], list[int]]:
        c1: list[int] = []
        c2: list[int] = []
        for pos in range(m):
            lo, hi = bounds[pos]
            s1, s2 = crossover(a[lo:hi], b[lo:hi], members_by_pos[pos], rng)
            c1.extend(s1)
            c2.extend(s2)
        out1: list[int] = []
        for pos in range(m):
            lo, hi = bounds[pos]
            out1.extend(mutate(c1[lo:hi], members_by_pos[pos], cfg.p_m, rng))
        out2: list[int] = []
        for pos in range(m):
            lo, hi = bounds[pos]
            out2.extend(mutate(c2[lo:hi], members_by_pos[pos], cfg.p_m, rng))
        return out1, out2

    eval_full = full_evaluator(plan, instance, ecfg)

    def evaluate(child: list[int]) -> tuple[Genome, ObjectiveVector]:
        genome = Genome(list(child))
        return genome, eval_full(genome)

    objs: list[ObjectiveVector] = []
    initial: list[tuple[Genome, ObjectiveVector]] = []
    fes_total = 0
    for ind in population:
        genome, obj = evaluate(ind)
        initial.append((genome, obj))
        objs.append(obj)
        fes_total += 1
    archive.insert_many([((genome, plan), obj) for genome, obj in initial])

    pool = list(objs)
    round_budget = m * (cfg.i_bas + cfg.i_add)
    rng = streams[0]
    rounds = 0
    while fes_total + round_budget <= max_fes:
        population, objs, fes, cands = run_generations(
            population, objs, round_budget, rng, vary, evaluate
        )
        if fes == 0:
            break
        fes_total += fes
        rounds += 1
        archive.insert_many([((genome, plan), obj) for genome, obj in cands])
        if rounds == 1:
            pool.extend(obj for _, obj in cands)

    ref = choose_reference_point(pool, cfg.ref)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return RunResult(
        archive=archive,
        history=[],
        fes_total=fes_total,
        reference=ref,
        plan=plan,
        rounds=rounds,
        wall_ms=wall_ms,
        decomposability=decomp,
    )


# -- output writers -------------------------------------------------------------


def archive_csv_lines(archive: ParetoArchive) -> list[str]:
    def as_text(payload) -> str:
        if isinstance(payload, tuple):
            genome, plan = payload
            return genome_to_text(genome, plan)
        return str(payload)

    rows = sorted(
        (obj[0], obj[1], obj[2], as_text(payload))
        for payload, obj in zip(archive.genomes, archive.objectives)
    )
    # genome text contains commas, so that column is quoted
    lines = ["f_t,f_c,f_e,genome"]
    lines.extend(f'{r[0]!r},{r[1]!r},{r[2]!r},"{r[3]}"' for r in rows)
    return lines


def write_run_outputs(result: RunResult, out_dir: str | Path, extra_summary: dict | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "archive.csv").write_text("\n".join(archive_csv_lines(result.archive)) + "\n")
    with open(out / "history.jsonl", "w") as fh:
        for snap in result.history:
            fh.write(json.dumps(snap, sort_keys=True) + "\n")
    summary = {
        "final_hv": result.final_hv(),
        "reference": list(result.reference.coords),
        "fes_total": result.fes_total,
        "rounds": result.rounds,
        "archive_size": len(result.archive),
        "days": list(result.plan.days),
        "order": list(result.plan.order),
        "decomposability": result.decomposability,
        "wall_ms": result.wall_ms,
    }
    if extra_summary:
        summary.update(extra_summary)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def audit_budget_exactness(history: Sequence[dict], cfg: RunConfig, m: int) -> None:
    """Assert the per-round allocation invariant and the global FE cap.

    With allocation enabled every snapshot's budgets must sum to
    m*I_bas + |U|*I_add; under the equal-budget ablation they must all be
    I_bas + I_add. Raises AssertionError on the first violation.
    """
    max_fes = cfg.resolved_max_fes(m)
    for snap in history:
        total = sum(snap["I_avl"])
        if cfg.no_resource_allocation:
            expected = m * (cfg.i_bas + cfg.i_add)
        else:
            n_active = sum(1 for s in snap["stagnant"] if not s)
            expected = m * cfg.i_bas + n_active * cfg.i_add
        if total != expected:
            raise AssertionError(
                f"round {snap['round']}: allocations sum to {total}, expected {expected}"
            )
        if snap["fes"] > max_fes:
            raise AssertionError(
                f"round {snap['round']}: cumulative FEs {snap['fes']} exceed MaxFEs {max_fes}"
            )
