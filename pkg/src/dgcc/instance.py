"""Clustered-graph problem instances.

A problem instance is a complete undirected graph over points of interest
(POIs) partitioned into city clusters. Every POI pair carries two edge
weights (travel minutes and travel cost) and every POI carries a score and
a visit cost. The module covers file I/O, synthetic generation with a
decomposability margin, the weak-decomposability check, and small
brute-force path oracles used by the test suite.

Instance file format (JSON)::

    {
      "name": "demo",
      "clusters": [[1, 2], [3]],
      "pois": [{"id": 1, "score": 4.0, "visit_cost": 2.0,
                "visit_minutes": 60.0, "label": "museum"}, ...],
      "time_matrix": [[0.0, ...], ...],
      "cost_matrix": [[0.0, ...], ...]
    }

Matrices are full (not triangular), row-major, indexed by the position of
the POI in the ``pois`` list. Cluster and component indices are 1-based
throughout; POI ids are arbitrary positive integers.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

Channel = str  # "time" | "cost"
CHANNELS = ("time", "cost")


class InstanceError(ValueError):
    """Raised for malformed instance files or invariant violations."""


@dataclass(frozen=True)
class Poi:
    """A point of interest inside one cluster."""

    id: int
    cluster_id: int
    score: float
    visit_cost: float
    visit_minutes: float | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise InstanceError(f"poi id must be positive, got {self.id}")
        if not self.score > 0:
            raise InstanceError(f"poi {self.id}: score must be > 0, got {self.score}")
        if self.visit_cost < 0:
            raise InstanceError(
                f"poi {self.id}: visit_cost must be >= 0, got {self.visit_cost}"
            )
        if self.visit_minutes is not None and self.visit_minutes < 0:
            raise InstanceError(
                f"poi {self.id}: visit_minutes must be >= 0, got {self.visit_minutes}"
            )


@dataclass(frozen=True)
class GenericObjectiveForm:
    """Weighted vertex-plus-edge path objective on one weight channel.

    ``alpha_form`` scales the vertex-weight sum, ``beta_form`` the edge-weight
    sum. On the "cost" channel the vertex weight is the visit cost; on the
    "time" channel it is the recorded visit minutes (0 when absent).
    """

    alpha_form: float
    beta_form: float
    channel: Channel = "cost"

    def __post_init__(self) -> None:
        if self.alpha_form < 0 or self.beta_form < 0:
            raise InstanceError("form coefficients must be non-negative")
        if self.alpha_form == 0 and self.beta_form == 0:
            raise InstanceError("alpha_form and beta_form cannot both be zero")
        if self.channel not in CHANNELS:
            raise InstanceError(f"unknown channel {self.channel!r}")


@dataclass(frozen=True)
class DecomposabilityReport:
    """Outcome of the weak-decomposability test on one edge channel."""

    channel: Channel
    lhs: float
    rhs: float
    satisfied: bool
    per_cluster_wmax: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "lhs": self.lhs,
            "rhs": self.rhs if math.isfinite(self.rhs) else "inf",
            "satisfied": self.satisfied,
            "per_cluster_wmax": list(self.per_cluster_wmax),
        }


@dataclass
class ClusteredInstance:
    """Complete clustered graph with two edge channels and POI weights.

    Immutable after construction; all fields are validated in
    ``__post_init__`` and derived lookup tables are precomputed there.
    """

    name: str
    pois: list[Poi]
    clusters: list[list[int]]
    time_matrix: np.ndarray
    cost_matrix: np.ndarray

    _id2idx: dict[int, int] = field(init=False, repr=False)
    _cluster_of: dict[int, int] = field(init=False, repr=False)
    _time_rows: list[list[float]] = field(init=False, repr=False)
    _cost_rows: list[list[float]] = field(init=False, repr=False)
    _visit_cost: list[float] = field(init=False, repr=False)
    _visit_minutes: list[float] = field(init=False, repr=False)
    _inv_score: list[float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.time_matrix = np.asarray(self.time_matrix, dtype=float)
        self.cost_matrix = np.asarray(self.cost_matrix, dtype=float)
        n = len(self.pois)
        ids = [p.id for p in self.pois]
        if len(set(ids)) != n:
            raise InstanceError("pois: duplicate ids")

        if not self.clusters:
            raise InstanceError("clusters: at least one cluster required")
        seen: set[int] = set()
        for ci, members in enumerate(self.clusters, start=1):
            if not members:
                raise InstanceError(f"clusters: cluster {ci} is empty")
            overlap = seen.intersection(members)
            if overlap:
                raise InstanceError(
                    f"clusters: poi id {min(overlap)} appears in more than one cluster"
                )
            seen.update(members)
        if seen != set(ids):
            missing = sorted(set(ids) - seen) + sorted(seen - set(ids))
            raise InstanceError(
                f"clusters: partition does not match poi id set (mismatch near id {missing[0]})"
            )

        self._cluster_of = {}
        for ci, members in enumerate(self.clusters, start=1):
            for pid in members:
                self._cluster_of[pid] = ci
        for p in self.pois:
            if p.cluster_id != self._cluster_of[p.id]:
                raise InstanceError(
                    f"poi {p.id}: cluster_id {p.cluster_id} disagrees with partition "
                    f"(expected {self._cluster_of[p.id]})"
                )

        for mname, mat in (("time_matrix", self.time_matrix), ("cost_matrix", self.cost_matrix)):
            if mat.shape != (n, n):
                raise InstanceError(f"{mname}: expected shape {(n, n)}, got {mat.shape}")
            if np.any(mat < 0):
                i, j = map(int, np.argwhere(mat < 0)[0])
                raise InstanceError(f"{mname}: negative entry at ({i},{j})")
            if np.any(np.diag(mat) != 0):
                i = int(np.nonzero(np.diag(mat))[0][0])
                raise InstanceError(f"{mname}: non-zero diagonal at ({i},{i})")
            asym = mat != mat.T
            if np.any(asym):
                i, j = map(int, np.argwhere(asym)[0])
                raise InstanceError(f"{mname}: asymmetric at ({i},{j})")

        self._id2idx = {p.id: i for i, p in enumerate(self.pois)}
        self._time_rows = self.time_matrix.tolist()
        self._cost_rows = self.cost_matrix.tolist()
        self._visit_cost = [p.visit_cost for p in self.pois]
        self._visit_minutes = [p.visit_minutes or 0.0 for p in self.pois]
        self._inv_score = [1.0 / p.score for p in self.pois]

    # -- lookups -----------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.clusters)

    @property
    def n_pois(self) -> int:
        return len(self.pois)

    def index_of(self, poi_id: int) -> int:
        try:
            return self._id2idx[poi_id]
        except KeyError:
            raise InstanceError(f"unknown poi id {poi_id}") from None

    def has_poi(self, poi_id: int) -> bool:
        return poi_id in self._id2idx

    def cluster_of(self, poi_id: int) -> int:
        try:
            return self._cluster_of[poi_id]
        except KeyError:
            raise InstanceError(f"unknown poi id {poi_id}") from None

    def cluster_members(self, cluster_id: int) -> list[int]:
        if not 1 <= cluster_id <= self.m:
            raise InstanceError(f"cluster index {cluster_id} out of range 1..{self.m}")
        return list(self.clusters[cluster_id - 1])

    def edge_rows(self, channel: Channel) -> list[list[float]]:
        if channel == "time":
            return self._time_rows
        if channel == "cost":
            return self._cost_rows
        raise InstanceError(f"unknown channel {channel!r}")

    def vertex_weights(self, channel: Channel) -> list[float]:
        if channel == "time":
            return self._visit_minutes
        if channel == "cost":
            return self._visit_cost
        raise InstanceError(f"unknown channel {channel!r}")

    @property
    def visit_costs(self) -> list[float]:
        """Per-POI visit cost, aligned with matrix indices."""
        return self._visit_cost

    @property
    def reciprocal_scores(self) -> list[float]:
        """Per-POI 1/score, aligned with matrix indices."""
        return self._inv_score

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        pois_out = []
        for p in self.pois:
            row: dict = {"id": p.id, "score": p.score, "visit_cost": p.visit_cost}
            if p.visit_minutes is not None:
                row["visit_minutes"] = p.visit_minutes
            if p.label is not None:
                row["label"] = p.label
            pois_out.append(row)
        return {
            "name": self.name,
            "clusters": [list(c) for c in self.clusters],
            "pois": pois_out,
            "time_matrix": self.time_matrix.tolist(),
            "cost_matrix": self.cost_matrix.tolist(),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusteredInstance):
            return NotImplemented
        return (
            self.name == other.name
            and self.pois == other.pois
            and self.clusters == other.clusters
            and np.array_equal(self.time_matrix, other.time_matrix)
            and np.array_equal(self.cost_matrix, other.cost_matrix)
        )


def save_instance(instance: ClusteredInstance, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(instance.to_dict(), indent=2) + "\n", encoding="utf-8"
    )


def load_instance(path: str | Path) -> ClusteredInstance:
    """Load and validate an instance file; raises InstanceError on any defect."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: top-level value must be an object")
    for key in ("name", "clusters", "pois", "time_matrix", "cost_matrix"):
        if key not in data:
            raise InstanceError(f"{path}: missing field {key!r}")
    clusters = [[int(pid) for pid in members] for members in data["clusters"]]
    cluster_of = {pid: ci for ci, ms in enumerate(clusters, start=1) for pid in ms}
    pois = []
    for entry in data["pois"]:
        try:
            pid = int(entry["id"])
            pois.append(
                Poi(
                    id=pid,
                    cluster_id=cluster_of.get(pid, 0),
                    score=float(entry["score"]),
                    visit_cost=float(entry["visit_cost"]),
                    visit_minutes=(
                        float(entry["visit_minutes"])
                        if entry.get("visit_minutes") is not None
                        else None
                    ),
                    label=entry.get("label"),
                )
            )
        except KeyError as exc:
            raise InstanceError(f"{path}: poi entry missing field {exc}") from exc
    if any(p.cluster_id == 0 for p in pois):
        bad = next(p.id for p in pois if p.cluster_id == 0)
        raise InstanceError(f"{path}: poi {bad} not assigned to any cluster")
    return ClusteredInstance(
        name=str(data["name"]),
        pois=pois,
        clusters=clusters,
        time_matrix=np.asarray(data["time_matrix"], dtype=float),
        cost_matrix=np.asarray(data["cost_matrix"], dtype=float),
    )


# -- synthetic generation ---------------------------------------------------


def _as_ranges(value, m: int) -> tuple[tuple[float, float], ...]:
    """Normalize a single [lo, hi] or a per-cluster list of them."""
    seq = list(value)
    if seq and isinstance(seq[0], (int, float)):
        return tuple((float(seq[0]), float(seq[1])) for _ in range(m))
    if len(seq) != m:
        raise InstanceError(f"per-cluster ranges must have length m={m}, got {len(seq)}")
    return tuple((float(lo), float(hi)) for lo, hi in seq)


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a synthetic instance.

    Intracluster edge weights (both channels) are uniform in
    ``intra_weight_range``. Intercluster weights are uniform in
    ``[margin*S, 2*margin*S]`` where ``S`` is the summed per-cluster maximum
    intracluster weight of that channel, so ``margin >= 1`` guarantees the
    weak-decomposability inequality; smaller margins deliberately produce
    instances that fail the check.

    ``score_range`` and ``cost_range`` accept either one [lo, hi] for all
    clusters or a per-cluster list, which models the uneven tourism
    resources that make dynamic day allocation worthwhile.
    """

    m: int
    cluster_sizes: tuple[int, ...]
    intra_weight_range: tuple[float, float] = (1.0, 10.0)
    margin: float = 1.5
    score_range: tuple = (1.0, 100.0)
    cost_range: tuple = (0.0, 50.0)
    name: str = "generated"

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InstanceError(f"m must be >= 1, got {self.m}")
        if len(self.cluster_sizes) != self.m:
            raise InstanceError(
                f"cluster_sizes must have length m={self.m}, got {len(self.cluster_sizes)}"
            )
        if any(s < 1 for s in self.cluster_sizes):
            raise InstanceError("cluster sizes must be >= 1")
        lo, hi = self.intra_weight_range
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi or lo < 0:
            raise InstanceError(f"intra_weight_range: invalid range [{lo}, {hi}]")
        for rname in ("score_range", "cost_range"):
            for lo, hi in _as_ranges(getattr(self, rname), self.m):
                if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi or lo < 0:
                    raise InstanceError(f"{rname}: invalid range [{lo}, {hi}]")
                if rname == "score_range" and lo <= 0:
                    raise InstanceError("score_range lower bounds must be > 0")
        if not self.margin > 0:
            raise InstanceError(f"margin must be > 0, got {self.margin}")

    def score_ranges(self) -> tuple[tuple[float, float], ...]:
        return _as_ranges(self.score_range, self.m)

    def cost_ranges(self) -> tuple[tuple[float, float], ...]:
        return _as_ranges(self.cost_range, self.m)

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        def tuplify(value):
            return tuple(
                tuple(v) if isinstance(v, (list, tuple)) else v for v in value
            )

        return cls(
            m=int(data["m"]),
            cluster_sizes=tuple(int(s) for s in data["cluster_sizes"]),
            intra_weight_range=tuple(data.get("intra_weight_range", (1.0, 10.0))),
            margin=float(data.get("margin", 1.5)),
            score_range=tuplify(data.get("score_range", (1.0, 100.0))),
            cost_range=tuplify(data.get("cost_range", (0.0, 50.0))),
            name=str(data.get("name", "generated")),
        )


def generate_instance(spec: GeneratorSpec, seed: int) -> ClusteredInstance:
    """Deterministically generate an instance from a spec and seed."""
    rng = np.random.default_rng(np.random.SeedSequence(seed & 0xFFFFFFFFFFFFFFFF))
    sizes = spec.cluster_sizes
    n = sum(sizes)
    clusters: list[list[int]] = []
    next_id = 1
    for size in sizes:
        clusters.append(list(range(next_id, next_id + size)))
        next_id += size

    score_ranges = spec.score_ranges()
    cost_ranges = spec.cost_ranges()
    pois = []
    for ci, members in enumerate(clusters, start=1):
        for pid in members:
            pois.append(
                Poi(
                    id=pid,
                    cluster_id=ci,
                    score=float(rng.uniform(*score_ranges[ci - 1])),
                    visit_cost=float(rng.uniform(*cost_ranges[ci - 1])),
                )
            )

    matrices = {}
    cluster_of = {pid: ci for ci, ms in enumerate(clusters, start=1) for pid in ms}
    lo, hi = spec.intra_weight_range
    for channel in CHANNELS:
        mat = np.zeros((n, n))
        # intracluster draws first: S depends on them
        for i in range(n):
            for j in range(i + 1, n):
                if cluster_of[i + 1] == cluster_of[j + 1]:
                    w = float(rng.uniform(lo, hi))
                    mat[i, j] = mat[j, i] = w
        s_total = 0.0
        for members in clusters:
            if len(members) < 2:
                continue
            idx = [pid - 1 for pid in members]
            s_total += float(mat[np.ix_(idx, idx)].max())
        inter_lo, inter_hi = spec.margin * s_total, 2.0 * spec.margin * s_total
        for i in range(n):
            for j in range(i + 1, n):
                if cluster_of[i + 1] != cluster_of[j + 1]:
                    w = float(rng.uniform(inter_lo, inter_hi))
                    mat[i, j] = mat[j, i] = w
        matrices[channel] = mat

    return ClusteredInstance(
        name=spec.name,
        pois=pois,
        clusters=clusters,
        time_matrix=matrices["time"],
        cost_matrix=matrices["cost"],
    )


# -- decomposability ---------------------------------------------------------


def check_weak_decomposability(
    instance: ClusteredInstance, channel: Channel
) -> DecomposabilityReport:
    """Test whether the summed intracluster maxima stay below the smallest
    intercluster weight on the given channel.

    Clusters of size 1 contribute 0 (they have no internal edge). With a
    single cluster there is no intercluster pair and the right-hand side is
    reported as +inf.
    """
    mat = np.asarray(instance.edge_rows(channel))
    per_cluster = []
    for members in instance.clusters:
        if len(members) < 2:
            per_cluster.append(0.0)
            continue
        idx = [instance.index_of(pid) for pid in members]
        per_cluster.append(float(mat[np.ix_(idx, idx)].max()))
    lhs = float(sum(per_cluster))

    if instance.m == 1:
        rhs = math.inf
    else:
        rhs = math.inf
        for a, b in itertools.combinations(range(instance.m), 2):
            ia = [instance.index_of(pid) for pid in instance.clusters[a]]
            ib = [instance.index_of(pid) for pid in instance.clusters[b]]
            rhs = min(rhs, float(mat[np.ix_(ia, ib)].min()))

    return DecomposabilityReport(
        channel=channel,
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs <= rhs,
        per_cluster_wmax=tuple(per_cluster),
    )


def visit_count(path: Sequence[int], cluster_index: int, instance: ClusteredInstance) -> int:
    """Number of entries into a cluster along a path, counting the start."""
    if not path:
        raise InstanceError("visit_count: empty path")
    if not 1 <= cluster_index <= instance.m:
        raise InstanceError(f"cluster index {cluster_index} out of range 1..{instance.m}")
    count = 1 if instance.cluster_of(path[0]) == cluster_index else 0
    for prev, cur in zip(path, path[1:]):
        if instance.cluster_of(cur) == cluster_index and instance.cluster_of(prev) != cluster_index:
            count += 1
    return count


def path_cost(
    instance: ClusteredInstance, path: Sequence[int], form: GenericObjectiveForm
) -> float:
    """Evaluate the generic vertex+edge objective of a path under a form."""
    edge = instance.edge_rows(form.channel)
    vert = instance.vertex_weights(form.channel)
    idx = [instance.index_of(pid) for pid in path]
    total = form.alpha_form * sum(vert[i] for i in idx)
    total += form.beta_form * sum(edge[a][b] for a, b in zip(idx, idx[1:]))
    return total


MAX_BRUTE_FORCE_POIS = 10


def brute_force_optimal_path(
    instance: ClusteredInstance,
    form: GenericObjectiveForm,
    require_all_clusters: bool,
) -> tuple[list[int], float]:
    """Exhaustively minimize the generic objective over all simple sequences.

    Enumerates every ordered duplicate-free sequence over every vertex
    subset (optionally restricted to subsets covering all clusters) and
    returns ``(path, value)``; ties are broken by lexicographically smallest
    path. Guarded to at most 10 vertices.
    """
    n = instance.n_pois
    if n > MAX_BRUTE_FORCE_POIS:
        raise InstanceError(
            f"brute force limited to {MAX_BRUTE_FORCE_POIS} pois, instance has {n}"
        )
    ids = sorted(p.id for p in instance.pois)
    edge = instance.edge_rows(form.channel)
    vert = instance.vertex_weights(form.channel)
    alpha, beta = form.alpha_form, form.beta_form
    idx_of = instance.index_of
    cluster_of = instance.cluster_of
    m = instance.m

    best_path: list[int] | None = None
    best_value = math.inf

    def consider(path: list[int], value: float, covered: int) -> None:
        nonlocal best_path, best_value
        if require_all_clusters and covered != m:
            return
        if value < best_value or (value == best_value and (best_path is None or path < best_path)):
            best_value = value
            best_path = list(path)

    def extend(path: list[int], used: set[int], value: float, cover: dict[int, int]) -> None:
        consider(path, value, len(cover))
        last = idx_of(path[-1])
        row = edge[last]
        for pid in ids:
            if pid in used:
                continue
            i = idx_of(pid)
            nv = value + alpha * vert[i] + beta * row[i]
            used.add(pid)
            ci = cluster_of(pid)
            cover[ci] = cover.get(ci, 0) + 1
            path.append(pid)
            extend(path, used, nv, cover)
            path.pop()
            if cover[ci] == 1:
                del cover[ci]
            else:
                cover[ci] -= 1
            used.remove(pid)

    for pid in ids:
        i = idx_of(pid)
        extend([pid], {pid}, alpha * vert[i], {cluster_of(pid): 1})

    if best_path is None:
        raise InstanceError("brute force found no feasible path")
    return best_path, best_value


def iter_channels() -> Iterator[Channel]:
    return iter(CHANNELS)
