"""Three-objective itinerary evaluation.

All objectives are minimized: weighted travel time, weighted travel plus
visit cost, and a scaled sum of reciprocal POI scores. The balancing factor
``omega = 1 - k/(D*M + alpha)`` shrinks the time and cost objectives as the
itinerary fills up, so the optimizer is not pushed toward degenerate visit
counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .encoding import DecompositionPlan, Genome, decode, segment_of, validate
from .instance import ClusteredInstance


class ObjectiveVector(NamedTuple):
    f_t: float
    f_c: float
    f_e: float


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation knobs.

    ``alpha_ctrl`` is the control parameter of the balancing factor and
    ``theta`` the scale of the score objective. ``eval_mode`` selects how
    subpopulations are scored during coevolution: assembled into the shared
    context ("context") or per-segment in isolation ("isolated").
    ``segment_omega`` picks whether isolated segment evaluation uses the
    segment-local balancing factor or the whole-genome one.
    """

    alpha_ctrl: float = 0.8
    theta: float = 10000.0
    eval_mode: str = "context"
    count_interday_edges: bool = True
    segment_omega: str = "local"

    def __post_init__(self) -> None:
        if not self.alpha_ctrl > 0:
            raise ValueError(f"alpha_ctrl must be > 0, got {self.alpha_ctrl}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if self.eval_mode not in ("context", "isolated"):
            raise ValueError(f"eval_mode must be 'context' or 'isolated', got {self.eval_mode!r}")
        if self.segment_omega not in ("local", "global"):
            raise ValueError(f"segment_omega must be 'local' or 'global', got {self.segment_omega!r}")


def omega(k: int, D: int, M: int, alpha_ctrl: float) -> float:
    """Balancing factor 1 - k/(D*M + alpha); strictly decreasing in k."""
    if not 0 <= k <= D * M:
        raise ValueError(f"k={k} out of range 0..{D * M}")
    return 1.0 - k / (D * M + alpha_ctrl)


def _evaluate_routes(
    routes: list[list[int]],
    slot_capacity: int,
    instance: ClusteredInstance,
    cfg: EvalConfig,
    w: float | None = None,
) -> ObjectiveVector:
    """Score a list of per-day routes against a slot capacity.

    ``slot_capacity`` is the D*M (or d_i*M) that the balancing factor
    normalizes against; ``w`` overrides the balancing factor when given.
    """
    seq = [pid for route in routes for pid in route]
    k = len(seq)
    if w is None:
        w = 1.0 - k / (slot_capacity + cfg.alpha_ctrl)
    idx = [instance.index_of(pid) for pid in seq]

    time_rows = instance.edge_rows("time")
    cost_rows = instance.edge_rows("cost")
    visit_cost = instance.visit_costs
    inv_score = instance.reciprocal_scores

    t_sum = 0.0
    c_edge = 0.0
    if cfg.count_interday_edges:
        for a, b in zip(idx, idx[1:]):
            t_sum += time_rows[a][b]
            c_edge += cost_rows[a][b]
    else:
        for route in routes:
            ridx = [instance.index_of(pid) for pid in route]
            for a, b in zip(ridx, ridx[1:]):
                t_sum += time_rows[a][b]
                c_edge += cost_rows[a][b]

    c_visit = 0.0
    e_sum = 0.0
    for i in idx:
        c_visit += visit_cost[i]
        e_sum += inv_score[i]

    return ObjectiveVector(
        f_t=w * t_sum,
        f_c=w * (c_edge + c_visit),
        f_e=cfg.theta * e_sum,
    )


def evaluate_full(
    genome: Genome,
    plan: DecompositionPlan,
    instance: ClusteredInstance,
    cfg: EvalConfig,
) -> ObjectiveVector:
    """Objectives of a whole itinerary.

    Edges between consecutive visited POIs are charged across day and
    segment boundaries unless ``count_interday_edges`` is off.
    """
    problems = validate(genome, plan, instance)
    if problems:
        raise ValueError(f"invalid genome: {problems[0]}")
    return _evaluate_routes(decode(genome, plan), plan.length, instance, cfg)


def evaluate_full_unchecked(
    genome: Genome,
    plan: DecompositionPlan,
    instance: ClusteredInstance,
    cfg: EvalConfig,
) -> ObjectiveVector:
    """evaluate_full without the validity pass; callers must guarantee it.

    The coevolution loop evaluates every offspring and its operators keep
    genomes valid by construction, so it skips the re-check.
    """
    return _evaluate_routes(decode(genome, plan), plan.length, instance, cfg)


def full_evaluator(
    plan: DecompositionPlan,
    instance: ClusteredInstance,
    cfg: EvalConfig,
):
    """Prebound fast path for whole-genome evaluation in the hot loop.

    Hoists all table lookups out of the per-candidate call; produces exactly
    the same values as evaluate_full on valid genomes.
    """
    id2idx = {p.id: i for i, p in enumerate(instance.pois)}
    time_rows = instance.edge_rows("time")
    cost_rows = instance.edge_rows("cost")
    visit_cost = instance.visit_costs
    inv_score = instance.reciprocal_scores
    denom = plan.length + cfg.alpha_ctrl
    theta = cfg.theta

    if cfg.count_interday_edges:

        def evaluate(genome: Genome) -> ObjectiveVector:
            idx = [id2idx[v] for v in genome.slots if v != 0]
            w = 1.0 - len(idx) / denom
            t = ce = cv = e = 0.0
            prev = -1
            for i in idx:
                if prev >= 0:
                    t += time_rows[prev][i]
                    ce += cost_rows[prev][i]
                cv += visit_cost[i]
                e += inv_score[i]
                prev = i
            return ObjectiveVector(w * t, w * (ce + cv), theta * e)

    else:
        M = plan.M
        D = plan.D

        def evaluate(genome: Genome) -> ObjectiveVector:
            slots = genome.slots
            t = ce = cv = e = 0.0
            k = 0
            for day in range(D):
                prev = -1
                for v in slots[day * M : (day + 1) * M]:
                    if v == 0:
                        continue
                    i = id2idx[v]
                    if prev >= 0:
                        t += time_rows[prev][i]
                        ce += cost_rows[prev][i]
                    cv += visit_cost[i]
                    e += inv_score[i]
                    prev = i
                    k += 1
            w = 1.0 - k / denom
            return ObjectiveVector(w * t, w * (ce + cv), theta * e)

    return evaluate


def evaluate_segment(
    genome: Genome,
    plan: DecompositionPlan,
    instance: ClusteredInstance,
    cfg: EvalConfig,
    i: int,
) -> ObjectiveVector:
    """Objectives of segment i in isolation.

    Edges into neighboring segments are excluded; they are the interaction
    terms that coevolution handles through the shared context. By default
    the balancing factor is local to the segment (k_i against d_i*M).
    """
    view = segment_of(genome, plan, i)
    d_i = plan.days[i - 1]
    routes = [[v for v in block if v != 0] for block in view.day_blocks]
    if not any(routes):
        raise ValueError(f"segment {i} is empty")
    cluster = plan.order[i - 1]
    for route in routes:
        for pid in route:
            if instance.cluster_of(pid) != cluster:
                raise ValueError(
                    f"segment {i}: id {pid} belongs to cluster {instance.cluster_of(pid)}"
                )
    w = None
    if cfg.segment_omega == "global":
        k_total = sum(1 for v in genome.slots if v != 0)
        w = omega(k_total, plan.D, plan.M, cfg.alpha_ctrl)
    return _evaluate_routes(routes, d_i * plan.M, instance, cfg, w=w)


def segment_vector_objectives(
    slots: Sequence[int],
    d_i: int,
    M: int,
    instance: ClusteredInstance,
    cfg: EvalConfig,
) -> ObjectiveVector:
    """Isolated objectives of a bare segment slot vector (local balancing)."""
    routes = [
        [v for v in slots[d * M : (d + 1) * M] if v != 0] for d in range(d_i)
    ]
    return _evaluate_routes(routes, d_i * M, instance, cfg)


def normalized_fitness(v: ObjectiveVector, d_i: int) -> ObjectiveVector:
    """Per-day fitness: each objective divided by the assigned day count."""
    if d_i < 1:
        raise ValueError(f"d_i must be >= 1, got {d_i}")
    return ObjectiveVector(v.f_t / d_i, v.f_c / d_i, v.f_e / d_i)
