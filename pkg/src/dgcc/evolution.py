"""Per-component subpopulation lifecycle.

Each component keeps a subpopulation of segment genotypes evolved by a
small NSGA-II: binary tournaments on (rank, crowding), two-point crossover
with duplicate repair, single-slot replacement mutation, and elitist
truncation. Candidates are scored either assembled into the shared context
solution or per segment in isolation.

All operators preserve segment validity: no duplicate ids, only ids from
the component's cluster, and at least one non-zero slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .encoding import DecompositionPlan, Genome, segment_of
from .instance import ClusteredInstance
from .objectives import (
    EvalConfig,
    ObjectiveVector,
    evaluate_segment,
    full_evaluator,
    segment_vector_objectives,
)
from .pareto import crowding_distance, hv_contribution, non_dominated_sort

Segment = list[int]


@dataclass
class Subpopulation:
    component_index: int  # 1-based segment position in the plan
    cluster_id: int
    individuals: list[Segment]
    cached_objectives: list[ObjectiveVector] | None
    rng: np.random.Generator


@dataclass
class ContextSolution:
    """Best-known full solution used to complete partial candidates."""

    genome: Genome
    objectives: ObjectiveVector
    hv_contrib: float


def fill_day_block(members: Sequence[int], exclude: set[int], M: int, p_z: float,
                   rng: np.random.Generator) -> list[int]:
    """One fresh day block: distinct unused cluster POIs, then random zeroing."""
    pool = [pid for pid in members if pid not in exclude]
    take = min(M, len(pool))
    picked = [int(v) for v in rng.permutation(pool)[:take]] if take else []
    block = picked + [0] * (M - take)
    zero_draws = rng.random(M)
    return [0 if zero_draws[j] < p_z else block[j] for j in range(M)]


def repair_empty(slots: Segment, members: Sequence[int], rng: np.random.Generator) -> None:
    """Force one cluster POI into an all-zero segment (in place)."""
    if any(v != 0 for v in slots):
        return
    pid = int(members[int(rng.integers(0, len(members)))])
    pos = int(rng.integers(0, len(slots)))
    slots[pos] = pid


def init_subpopulation(
    component_index: int,
    plan: DecompositionPlan,
    instance: ClusteredInstance,
    n: int,
    p_z: float,
    stream: np.random.Generator,
) -> Subpopulation:
    """Random subpopulation of n segment genotypes for one component.

    Each individual samples min(d_i*M, |V_i|) distinct POIs from the
    cluster, shuffles them into the leading slots, then zeroes each slot
    independently with probability p_z; if everything lands on zero, one
    sampled POI is forced back.
    """
    if n < 2:
        raise ValueError(f"subpopulation size must be >= 2, got {n}")
    cluster_id = plan.order[component_index - 1]
    members = instance.cluster_members(cluster_id)
    length = plan.days[component_index - 1] * plan.M
    individuals: list[Segment] = []
    for _ in range(n):
        take = min(length, len(members))
        picked = [int(v) for v in stream.permutation(members)[:take]]
        slots: Segment = picked + [0] * (length - take)
        zero_draws = stream.random(length)
        slots = [0 if zero_draws[j] < p_z else slots[j] for j in range(length)]
        if all(v == 0 for v in slots):
            pid = picked[int(stream.integers(0, len(picked)))]
            pos = int(stream.integers(0, length))
            slots[pos] = pid
        individuals.append(slots)
    return Subpopulation(
        component_index=component_index,
        cluster_id=cluster_id,
        individuals=individuals,
        cached_objectives=None,
        rng=stream,
    )


def mutate(
    segment: Segment,
    members: Sequence[int],
    p_m: float,
    stream: np.random.Generator,
) -> Segment:
    """With probability p_m, replace one uniformly-chosen slot with a draw
    from {0} plus the cluster POIs not already in the segment."""
    out = list(segment)
    if stream.random() >= p_m:
        return out
    pos = int(stream.integers(0, len(out)))
    present = {v for v in out if v != 0}
    pool = [0] + sorted(pid for pid in members if pid not in present)
    out[pos] = pool[int(stream.integers(0, len(pool)))]
    repair_empty(out, members, stream)
    return out


def crossover(
    parent_a: Segment,
    parent_b: Segment,
    members: Sequence[int],
    stream: np.random.Generator,
) -> tuple[Segment, Segment]:
    """Two-point crossover with duplicate repair on the exchanged region."""
    if len(parent_a) != len(parent_b):
        raise ValueError(
            f"crossover needs equal-length segments, got {len(parent_a)} and {len(parent_b)}"
        )
    length = len(parent_a)
    cuts = stream.integers(0, length + 1, size=2)
    c1, c2 = int(min(cuts)), int(max(cuts))

    def make_child(outer: Segment, inner: Segment) -> Segment:
        child = outer[:c1] + inner[c1:c2] + outer[c2:]
        counts: dict[int, int] = {}
        for v in child:
            if v != 0:
                counts[v] = counts.get(v, 0) + 1
        for pos in range(c1, c2):
            v = child[pos]
            if v == 0 or counts[v] <= 1:
                continue
            present = {x for x in child if x != 0}
            pool = [0] + sorted(pid for pid in members if pid not in present)
            repl = pool[int(stream.integers(0, len(pool)))]
            counts[v] -= 1
            child[pos] = repl
            if repl != 0:
                counts[repl] = counts.get(repl, 0) + 1
        repair_empty(child, members, stream)
        return child

    return make_child(parent_a, parent_b), make_child(parent_b, parent_a)


def assemble(
    context: ContextSolution,
    plan: DecompositionPlan,
    i: int,
    segment: Segment,
) -> Genome:
    """Copy of the context genome with component i's slots replaced."""
    genome = context.genome.copy()
    segment_of(genome, plan, i).write(list(segment))
    return genome


def segment_is_valid(slots: Sequence[int], members: Sequence[int]) -> bool:
    nonzero = [v for v in slots if v != 0]
    allowed = set(members)
    return (
        len(nonzero) >= 1
        and len(set(nonzero)) == len(nonzero)
        and all(v in allowed for v in nonzero)
    )


# -- generational engine ------------------------------------------------------


def rank_and_crowd(objectives: Sequence[Sequence[float]]) -> tuple[list[int], list[float]]:
    fronts = non_dominated_sort(objectives)
    ranks = [0] * len(objectives)
    crowds = [0.0] * len(objectives)
    for r, front in enumerate(fronts):
        cds = crowding_distance([objectives[i] for i in front])
        for i, cd in zip(front, cds):
            ranks[i] = r
            crowds[i] = cd
    return ranks, crowds


def _tournament(rng: np.random.Generator, n: int, ranks: list[int], crowds: list[float]) -> int:
    i, j = (int(v) for v in rng.integers(0, n, size=2))
    if ranks[j] < ranks[i] or (ranks[j] == ranks[i] and crowds[j] > crowds[i]):
        return j
    return i


def environmental_selection(
    pop: list, objectives: list[ObjectiveVector], n: int
) -> tuple[list, list[ObjectiveVector], list[int], list[float]]:
    """Elitist truncation to n by (front rank, crowding distance)."""
    fronts = non_dominated_sort(objectives)
    sel_pop: list = []
    sel_obj: list[ObjectiveVector] = []
    sel_rank: list[int] = []
    sel_crowd: list[float] = []
    for r, front in enumerate(fronts):
        cds = crowding_distance([objectives[i] for i in front])
        if len(sel_pop) + len(front) <= n:
            chosen = list(zip(front, cds))
        else:
            remaining = n - len(sel_pop)
            ordered = sorted(zip(front, cds), key=lambda t: (-t[1], t[0]))
            chosen = ordered[:remaining]
        for i, cd in chosen:
            sel_pop.append(pop[i])
            sel_obj.append(objectives[i])
            sel_rank.append(r)
            sel_crowd.append(cd)
        if len(sel_pop) == n:
            break
    return sel_pop, sel_obj, sel_rank, sel_crowd


def run_generations(
    individuals: list,
    objectives: list[ObjectiveVector],
    budget_fe: int,
    rng: np.random.Generator,
    vary: Callable[[list, list, np.random.Generator], tuple[list, list]],
    evaluate: Callable[[list], tuple[Genome, ObjectiveVector]],
) -> tuple[list, list[ObjectiveVector], int, list[tuple[Genome, ObjectiveVector]]]:
    """Generic elitist generational loop under an exact FE budget.

    ``vary`` turns two parents into two children (crossover + mutation),
    ``evaluate`` maps a child to its full assembled genome and objective
    vector; every evaluate call costs one FE. Runs whole generations of
    len(individuals) evaluations while they fit in the budget.
    """
    n = len(individuals)
    fes_used = 0
    candidates: list[tuple[Genome, ObjectiveVector]] = []
    if n == 0 or budget_fe < n:
        return individuals, objectives, 0, candidates

    ranks, crowds = rank_and_crowd(objectives)
    pop = list(individuals)
    objs = list(objectives)
    while fes_used + n <= budget_fe:
        children: list = []
        while len(children) < n:
            p1 = _tournament(rng, n, ranks, crowds)
            p2 = _tournament(rng, n, ranks, crowds)
            c1, c2 = vary(pop[p1], pop[p2], rng)
            children.append(c1)
            if len(children) < n:
                children.append(c2)
        child_objs: list[ObjectiveVector] = []
        for child in children:
            full, obj = evaluate(child)
            candidates.append((full, obj))
            child_objs.append(obj)
        fes_used += n
        pop, objs, ranks, crowds = environmental_selection(
            pop + children, objs + child_objs, n
        )
    return pop, objs, fes_used, candidates


def nsga2_step(
    subpop: Subpopulation,
    budget_fe: int,
    context: ContextSolution,
    plan: DecompositionPlan,
    instance: ClusteredInstance,
    cfg: EvalConfig,
    p_m: float,
) -> tuple[Subpopulation, int, list[tuple[Genome, ObjectiveVector]]]:
    """Evolve one component for as many whole generations as the budget
    allows; returns the updated subpopulation, the exact FE count, and all
    evaluated full-assembly candidates."""
    if subpop.cached_objectives is None:
        raise ValueError("subpopulation objectives not cached; evaluate before stepping")
    i = subpop.component_index
    members = instance.cluster_members(subpop.cluster_id)
    d_i = plan.days[i - 1]
    eval_full = full_evaluator(plan, instance, cfg)

    def vary(a: Segment, b: Segment, rng: np.random.Generator) -> tuple[Segment, Segment]:
        c1, c2 = crossover(a, b, members, rng)
        return mutate(c1, members, p_m, rng), mutate(c2, members, p_m, rng)

    def evaluate(child: Segment) -> tuple[Genome, ObjectiveVector]:
        full = assemble(context, plan, i, child)
        if cfg.eval_mode == "context":
            obj = eval_full(full)
        elif cfg.segment_omega == "local":
            obj = segment_vector_objectives(child, d_i, plan.M, instance, cfg)
        else:
            obj = evaluate_segment(full, plan, instance, cfg, i)
        return full, obj

    pop, objs, fes, candidates = run_generations(
        subpop.individuals, subpop.cached_objectives, budget_fe, subpop.rng, vary, evaluate
    )
    out = Subpopulation(
        component_index=subpop.component_index,
        cluster_id=subpop.cluster_id,
        individuals=pop,
        cached_objectives=objs,
        rng=subpop.rng,
    )
    return out, fes, candidates


def best_contribution(
    candidates: Sequence[tuple[Genome, ObjectiveVector]],
    ref_coords: Sequence[float],
) -> tuple[Genome, ObjectiveVector, float] | None:
    """Candidate with the highest reference-box contribution (ties: first)."""
    best: tuple[Genome, ObjectiveVector, float] | None = None
    for genome, obj in candidates:
        contrib = hv_contribution(obj, ref_coords, warn=False)
        if best is None or contrib > best[2]:
            best = (genome, obj, contrib)
    return best


def cache_objectives(
    subpop: Subpopulation,
    context: ContextSolution,
    plan: DecompositionPlan,
    instance: ClusteredInstance,
    cfg: EvalConfig,
) -> list[tuple[Genome, ObjectiveVector]]:
    """(Re)compute cached objectives for every individual; returns the
    assembled candidates so callers can archive them when the evaluations
    are budgeted."""
    d_i = plan.days[subpop.component_index - 1]
    eval_full = full_evaluator(plan, instance, cfg)
    evaluated: list[tuple[Genome, ObjectiveVector]] = []
    objs: list[ObjectiveVector] = []
    for ind in subpop.individuals:
        full = assemble(context, plan, subpop.component_index, ind)
        if cfg.eval_mode == "context":
            obj = eval_full(full)
        elif cfg.segment_omega == "local":
            obj = segment_vector_objectives(ind, d_i, plan.M, instance, cfg)
        else:
            obj = evaluate_segment(full, plan, instance, cfg, subpop.component_index)
        evaluated.append((full, obj))
        objs.append(obj)
    subpop.cached_objectives = objs
    return evaluated


def front_of(objectives: Sequence[ObjectiveVector]) -> list[ObjectiveVector]:
    """First non-dominated front of a set of vectors."""
    if not objectives:
        return []
    fronts = non_dominated_sort(objectives)
    return [objectives[i] for i in fronts[0]]
