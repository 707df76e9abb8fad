"""Pareto machinery: dominance, sorting, crowding, exact hypervolume.

Hypervolume is exact: a sorted sweep in 2D and a dimension sweep over the
third objective in 3D. Points that do not weakly dominate the reference
point are clipped out (with a logged count) rather than rejected, because
early random populations can be arbitrarily bad.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance for minimization: a <= b everywhere and a != b."""
    not_worse = all(x <= y for x, y in zip(a, b))
    return not_worse and any(x < y for x, y in zip(a, b))


def _dominance_matrix(arr: np.ndarray) -> np.ndarray:
    """dom[i, j]: point i dominates point j (per-objective accumulation is
    much faster than broadcasting with an axis-2 reduction)."""
    n = arr.shape[0]
    le = np.ones((n, n), dtype=bool)
    lt = np.zeros((n, n), dtype=bool)
    for j in range(arr.shape[1]):
        col = arr[:, j]
        a = col[:, None]
        b = col[None, :]
        le &= a <= b
        lt |= a < b
    return le & lt


def non_dominated_sort(points: Sequence[Sequence[float]]) -> list[list[int]]:
    """Fast non-dominated sorting; returns fronts as index lists."""
    n = len(points)
    if n == 0:
        return []
    arr = np.asarray(points, dtype=float)
    dom = _dominance_matrix(arr)

    n_dominators = dom.sum(axis=0)
    fronts: list[list[int]] = []
    remaining = n_dominators.copy()
    assigned = np.zeros(n, dtype=bool)
    current = np.nonzero(remaining == 0)[0]
    while current.size:
        fronts.append([int(i) for i in current])
        assigned[current] = True
        remaining = remaining - dom[current].sum(axis=0)
        nxt = (remaining == 0) & ~assigned
        current = np.nonzero(nxt)[0]
    return fronts


def non_dominated_sort_bruteforce(points: Sequence[Sequence[float]]) -> list[list[int]]:
    """Definitional oracle: peel non-dominated sets by pairwise comparison."""
    remaining = list(range(len(points)))
    fronts = []
    while remaining:
        front = [
            i
            for i in remaining
            if not any(dominates(points[j], points[i]) for j in remaining if j != i)
        ]
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def crowding_distance(front: Sequence[Sequence[float]]) -> list[float]:
    """NSGA-II crowding: boundary points get +inf, interior points sum
    normalized neighbor gaps; objectives with zero range contribute 0."""
    n = len(front)
    if n == 0:
        return []
    if n <= 2:
        return [math.inf] * n
    arr = np.asarray(front, dtype=float)
    dist = np.zeros(n)
    for m in range(arr.shape[1]):
        order = np.argsort(arr[:, m], kind="stable")
        vals = arr[order, m]
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        span = vals[-1] - vals[0]
        if span <= 0:
            continue
        gaps = (vals[2:] - vals[:-2]) / span
        interior = order[1:-1]
        finite = ~np.isinf(dist[interior])
        dist[interior[finite]] += gaps[finite]
    return [float(d) for d in dist]


# -- reference points ---------------------------------------------------------


@dataclass(frozen=True)
class ReferencePoint:
    """Hypervolume reference; worse than every point it is compared against."""

    coords: tuple[float, ...]
    policy: str = "fixed"
    margin: float = 1.0
    frozen: bool = True


@dataclass(frozen=True)
class RefPolicy:
    """How a run picks its reference point: fixed coordinates, or the
    component-wise maximum of a warm-up sample scaled by a margin and then
    frozen for the rest of the run."""

    kind: str = "adaptive"
    margin: float = 1.1
    coords: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "adaptive"):
            raise ValueError(f"unknown reference policy {self.kind!r}")
        if self.kind == "fixed" and self.coords is None:
            raise ValueError("fixed reference policy requires coords")
        if self.kind == "adaptive" and not self.margin >= 1.0:
            raise ValueError(f"adaptive margin must be >= 1, got {self.margin}")


def choose_reference_point(
    samples: Sequence[Sequence[float]], policy: RefPolicy
) -> ReferencePoint:
    if policy.kind == "fixed":
        assert policy.coords is not None
        return ReferencePoint(coords=tuple(float(c) for c in policy.coords), policy="fixed")
    if not samples:
        raise ValueError("adaptive reference point needs a non-empty sample")
    arr = np.asarray(samples, dtype=float)
    coords = tuple(float(c) for c in arr.max(axis=0) * policy.margin)
    return ReferencePoint(coords=coords, policy="adaptive", margin=policy.margin, frozen=True)


def _ref_coords(ref: ReferencePoint | Sequence[float]) -> tuple[float, ...]:
    if isinstance(ref, ReferencePoint):
        return ref.coords
    return tuple(float(c) for c in ref)


# -- hypervolume --------------------------------------------------------------


def _pareto_mask(arr: np.ndarray) -> np.ndarray:
    """Boolean mask of points not strictly dominated by another point."""
    n = arr.shape[0]
    if n <= 1:
        return np.ones(n, dtype=bool)
    return ~_dominance_matrix(arr).any(axis=0)


def _hv2(xs: np.ndarray, ys: np.ndarray, rx: float, ry: float) -> float:
    """Exact 2D hypervolume of (already clipped) points via a sorted sweep."""
    if xs.size == 0:
        return 0.0
    order = np.lexsort((ys, xs))
    x = xs[order]
    y = ys[order]
    cummin = np.minimum.accumulate(y)
    prev_best = np.concatenate(([ry], cummin[:-1]))
    improving = y < prev_best
    return float(((rx - x[improving]) * (prev_best[improving] - y[improving])).sum())


def hypervolume(
    points: Sequence[Sequence[float]], ref: ReferencePoint | Sequence[float]
) -> float:
    """Exact hypervolume (2 or 3 objectives, minimization)."""
    coords = _ref_coords(ref)
    dim = len(coords)
    if dim not in (2, 3):
        raise ValueError(f"hypervolume supports 2 or 3 objectives, got {dim}")
    if len(points) == 0:
        return 0.0
    arr = np.asarray(points, dtype=float)
    if arr.shape[1] != dim:
        raise ValueError(f"points have {arr.shape[1]} objectives, reference has {dim}")
    inside = (arr <= np.asarray(coords)).all(axis=1)
    clipped = int(arr.shape[0] - inside.sum())
    if clipped:
        logger.warning("hypervolume: clipped %d point(s) outside the reference box", clipped)
    arr = arr[inside]
    if arr.shape[0] == 0:
        return 0.0
    arr = arr[_pareto_mask(arr)]

    if dim == 2:
        return _hv2(arr[:, 0], arr[:, 1], coords[0], coords[1])

    # 3D dimension sweep: slabs between consecutive z-levels, each weighted
    # by the 2D area of the points active at that depth.
    rx, ry, rz = coords
    z_order = np.lexsort((arr[:, 1], arr[:, 0], arr[:, 2]))
    arr = arr[z_order]
    n = len(arr)
    x_order = np.lexsort((arr[:, 1], arr[:, 0]))
    xs_sorted = arr[x_order, 0]
    ys_sorted = arr[x_order, 1]
    pos_in_x = np.empty(n, dtype=int)
    pos_in_x[x_order] = np.arange(n)

    zs = arr[:, 2]
    levels = np.unique(zs)
    vol = 0.0
    active = np.zeros(n, dtype=bool)
    start = 0
    for li, z in enumerate(levels):
        stop = start
        while stop < n and zs[stop] == z:
            stop += 1
        active[pos_in_x[start:stop]] = True
        start = stop
        z_top = levels[li + 1] if li + 1 < len(levels) else rz
        height = float(z_top - z)
        if height <= 0:
            continue
        vol += height * _hv2(xs_sorted[active], ys_sorted[active], rx, ry)
    return float(vol)


def hv_contribution(
    v: Sequence[float], ref: ReferencePoint | Sequence[float], warn: bool = True
) -> float:
    """Volume of the single box spanned by a point and the reference."""
    coords = _ref_coords(ref)
    vol = 1.0
    for x, r in zip(v, coords):
        if x > r:
            if warn:
                logger.warning("hv_contribution: point %s outside reference %s", tuple(v), coords)
            return 0.0
        vol *= r - x
    return vol


# -- archive ------------------------------------------------------------------


class ParetoArchive:
    """Mutually non-dominated set of (genome, objectives) entries.

    Insertion keeps the incumbent on dominance ties (equal objective
    vectors) and evicts entries dominated by a new point. With a capacity,
    the most crowded entry is dropped once the bound is exceeded. Objective
    vectors are mirrored into a preallocated numpy buffer so dominance
    checks stay vectorized as the archive grows.
    """

    def __init__(self, capacity: int | None = None):
        self.capacity = capacity
        self.genomes: list = []
        self.objectives: list[tuple[float, ...]] = []
        self._buf: np.ndarray | None = None
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def entries(self) -> list[tuple[object, tuple[float, ...]]]:
        return list(zip(self.genomes, self.objectives))

    def _view(self) -> np.ndarray:
        assert self._buf is not None
        return self._buf[: self._size]

    def _append_row(self, vec: np.ndarray) -> None:
        if self._buf is None:
            self._buf = np.empty((256, vec.shape[0]))
        elif self._size == self._buf.shape[0]:
            grown = np.empty((self._buf.shape[0] * 2, self._buf.shape[1]))
            grown[: self._size] = self._buf
            self._buf = grown
        self._buf[self._size] = vec
        self._size += 1

    def insert(self, genome, objective: Sequence[float]) -> bool:
        """Insert one candidate; returns True if it was kept."""
        obj = tuple(float(x) for x in objective)
        vec = np.asarray(obj)
        if self._size:
            arr = self._view()
            le = (arr <= vec).all(axis=1)
            lt = (arr < vec).any(axis=1)
            if (le & lt).any() or (le & ~lt).any():
                return False
            dominated = (arr >= vec).all(axis=1) & (arr > vec).any(axis=1)
            if dominated.any():
                keep = ~dominated
                self.genomes = [g for g, k in zip(self.genomes, keep) if k]
                self.objectives = [o for o, k in zip(self.objectives, keep) if k]
                kept = int(keep.sum())
                self._buf[:kept] = arr[keep]
                self._size = kept
        self.genomes.append(genome)
        self.objectives.append(obj)
        self._append_row(vec)
        if self.capacity is not None and self._size > self.capacity:
            self._truncate()
        return True

    def insert_many(self, items: Sequence[tuple[object, Sequence[float]]]) -> int:
        """Batch insert; equivalent to sequential inserts (earliest equal
        vector wins) but with vectorized dominance checks. Large batches are
        chunked to keep the pairwise self-filter small."""
        CHUNK = 128
        if len(items) > CHUNK:
            return sum(
                self._insert_chunk(items[i : i + CHUNK]) for i in range(0, len(items), CHUNK)
            )
        return self._insert_chunk(items)

    def _insert_chunk(self, items: Sequence[tuple[object, Sequence[float]]]) -> int:
        if not items:
            return 0
        objs = np.asarray([[float(x) for x in obj] for _, obj in items])
        k, dim = objs.shape
        le = np.ones((k, k), dtype=bool)
        lt = np.zeros((k, k), dtype=bool)
        for j in range(dim):
            col = objs[:, j]
            le &= col[:, None] <= col[None, :]
            lt |= col[:, None] < col[None, :]
        keep = ~(le & lt).any(axis=0)
        eq = le & ~lt  # includes the diagonal
        keep &= ~np.triu(eq, k=1).any(axis=0)  # equal to an earlier batch member

        if self._size:
            arr = self._view()
            a = arr.shape[0]
            le_a = np.ones((a, k), dtype=bool)
            lt_a = np.zeros((a, k), dtype=bool)
            for j in range(dim):
                le_a &= arr[:, j][:, None] <= objs[:, j][None, :]
                lt_a |= arr[:, j][:, None] < objs[:, j][None, :]
            keep &= ~(le_a & lt_a).any(axis=0)
            keep &= ~(le_a & ~lt_a).any(axis=0)  # ties keep the incumbent
            if keep.any():
                n_kept = int(keep.sum())
                ge = np.ones((a, n_kept), dtype=bool)
                gt = np.zeros((a, n_kept), dtype=bool)
                survivors = objs[keep]
                for j in range(dim):
                    ge &= arr[:, j][:, None] >= survivors[:, j][None, :]
                    gt |= arr[:, j][:, None] > survivors[:, j][None, :]
                evict = (ge & gt).any(axis=1)
                if evict.any():
                    stay = ~evict
                    self.genomes = [g for g, s in zip(self.genomes, stay) if s]
                    self.objectives = [o for o, s in zip(self.objectives, stay) if s]
                    kept_n = int(stay.sum())
                    self._buf[:kept_n] = arr[stay]
                    self._size = kept_n

        added = 0
        for i in np.nonzero(keep)[0]:
            genome, obj = items[int(i)]
            self.genomes.append(genome)
            self.objectives.append(tuple(float(x) for x in obj))
            self._append_row(objs[i])
            added += 1
            if self.capacity is not None and self._size > self.capacity:
                self._truncate()
        return added

    def _truncate(self) -> None:
        dists = crowding_distance(self.objectives)
        drop = min(range(len(dists)), key=lambda i: (dists[i], -i))
        del self.genomes[drop]
        del self.objectives[drop]
        arr = self._view()
        self._buf[drop : self._size - 1] = arr[drop + 1 :]
        self._size -= 1

    def is_consistent(self) -> bool:
        """True when no entry dominates another (test hook)."""
        objs = self.objectives
        return not any(
            dominates(objs[i], objs[j])
            for i in range(len(objs))
            for j in range(len(objs))
            if i != j
        )
