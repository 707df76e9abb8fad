"""Day-block genome encoding and decomposition plans.

A genome is a flat vector of length D*M over {0} plus POI ids. The vector
is laid out as consecutive per-component segments (component order fixed by
the plan), each segment holding that component's day blocks of M slots.
Zeros are placeholders; they may sit anywhere inside a day block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .instance import ClusteredInstance


@dataclass(frozen=True)
class DecompositionPlan:
    """Component visit order plus per-component day counts.

    ``order`` is a permutation of the cluster indices 1..m giving the city
    visit sequence; ``days[i]`` is the day count of the i-th segment in that
    order. Day counts always sum to the total duration D, and every
    component keeps at least one day.
    """

    order: tuple[int, ...]
    days: tuple[int, ...]
    M: int

    def __post_init__(self) -> None:
        m = len(self.order)
        if sorted(self.order) != list(range(1, m + 1)):
            raise ValueError(f"order must be a permutation of 1..{m}, got {self.order}")
        if len(self.days) != m:
            raise ValueError("days must align with order")
        if any(d < 1 for d in self.days):
            raise ValueError(f"every component needs at least one day, got {self.days}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")

    @property
    def m(self) -> int:
        return len(self.order)

    @property
    def D(self) -> int:
        return sum(self.days)

    @property
    def length(self) -> int:
        return self.D * self.M

    def segment_bounds(self, i: int) -> tuple[int, int]:
        """Slot range [start, stop) of segment i (1-based)."""
        if not 1 <= i <= self.m:
            raise ValueError(f"component index {i} out of range 1..{self.m}")
        start = sum(self.days[: i - 1]) * self.M
        return start, start + self.days[i - 1] * self.M

    def with_days(self, days: tuple[int, ...]) -> "DecompositionPlan":
        return DecompositionPlan(order=self.order, days=days, M=self.M)


def initial_decomposition(m: int, D: int, M: int, order: tuple[int, ...] | None = None) -> DecompositionPlan:
    """Spread D days as evenly as possible over m components.

    The first ``D mod m`` components in visit order take one extra day.
    """
    if order is None:
        order = tuple(range(1, m + 1))
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if D < m:
        raise ValueError(f"need at least one day per component: D={D} < m={m}")
    base, extra = divmod(D, m)
    days = tuple(base + 1 if i < extra else base for i in range(m))
    return DecompositionPlan(order=order, days=days, M=M)


@dataclass
class Genome:
    """Flat slot vector; value type, cheap to clone."""

    slots: list[int]

    def copy(self) -> "Genome":
        return Genome(list(self.slots))

    def visited(self) -> list[int]:
        return [v for v in self.slots if v != 0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return self.slots == other.slots


@dataclass
class SegmentView:
    """Window onto one component's contiguous slot range of a genome."""

    genome: Genome
    component_index: int
    start: int
    stop: int
    days: int
    M: int

    @property
    def slots(self) -> list[int]:
        return self.genome.slots[self.start : self.stop]

    @property
    def day_blocks(self) -> list[list[int]]:
        s = self.slots
        return [s[d * self.M : (d + 1) * self.M] for d in range(self.days)]

    def write(self, values: list[int]) -> None:
        if len(values) != self.stop - self.start:
            raise ValueError(
                f"segment {self.component_index}: expected {self.stop - self.start} "
                f"slots, got {len(values)}"
            )
        self.genome.slots[self.start : self.stop] = values


def segment_of(genome: Genome, plan: DecompositionPlan, i: int) -> SegmentView:
    """View of component i's d_i*M slots (i is 1-based)."""
    start, stop = plan.segment_bounds(i)
    if len(genome.slots) != plan.length:
        raise ValueError(
            f"genome length {len(genome.slots)} does not match plan length {plan.length}"
        )
    return SegmentView(
        genome=genome,
        component_index=i,
        start=start,
        stop=stop,
        days=plan.days[i - 1],
        M=plan.M,
    )


def decode(genome: Genome, plan: DecompositionPlan) -> list[list[int]]:
    """Per-day routes in layout order; zeros skipped."""
    if len(genome.slots) != plan.length:
        raise ValueError(
            f"genome length {len(genome.slots)} does not match plan length {plan.length}"
        )
    routes = []
    slots = genome.slots
    for day in range(plan.D):
        block = slots[day * plan.M : (day + 1) * plan.M]
        routes.append([v for v in block if v != 0])
    return routes


def validate(
    genome: Genome, plan: DecompositionPlan, instance: ClusteredInstance
) -> list[str]:
    """Structural validity check; returns a list of violations (empty = ok)."""
    violations: list[str] = []
    if len(genome.slots) != plan.length:
        violations.append(
            f"length mismatch: genome has {len(genome.slots)} slots, plan needs {plan.length}"
        )
        return violations

    seen: dict[int, int] = {}
    for pos, v in enumerate(genome.slots):
        if v == 0:
            continue
        if v in seen:
            violations.append(f"duplicate id {v} at slots {seen[v]} and {pos}")
        else:
            seen[v] = pos
        if not instance.has_poi(v):
            violations.append(f"unknown id {v} at slot {pos}")

    for i in range(1, plan.m + 1):
        start, stop = plan.segment_bounds(i)
        cluster = plan.order[i - 1]
        nonzero = [v for v in genome.slots[start:stop] if v != 0]
        if not nonzero:
            violations.append(f"segment {i} (cluster {cluster}) is empty")
        for v in nonzero:
            if instance.has_poi(v) and instance.cluster_of(v) != cluster:
                violations.append(
                    f"id {v} in segment {i} belongs to cluster {instance.cluster_of(v)}, "
                    f"expected {cluster}"
                )
    return violations


def genome_to_text(genome: Genome, plan: DecompositionPlan) -> str:
    """Textual form: ',' in a day, '|' between days, '||' between segments."""
    parts = []
    for i in range(1, plan.m + 1):
        view = segment_of(genome, plan, i)
        parts.append("|".join(",".join(str(v) for v in block) for block in view.day_blocks))
    return "||".join(parts)


def genome_from_text(text: str) -> Genome:
    slots: list[int] = []
    for seg in text.split("||"):
        for block in seg.split("|"):
            slots.extend(int(v) for v in block.split(","))
    return Genome(slots)
