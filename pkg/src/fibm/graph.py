"""Directed LT graphs, community partitions and negative seed selection."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

LT_SLACK = 1e-9


class GraphFormatError(ValueError):
    """Raised for malformed graph, community or seed inputs."""


def _remap_labels(labels: Iterable[str]) -> list[str]:
    uniq = set(labels)
    try:
        return sorted(uniq, key=int)
    except ValueError:
        return sorted(uniq)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable directed graph with LT arc weights.

    Arcs are stored as parallel arrays; ``in_ptr``/``in_arcs`` and
    ``out_ptr``/``out_arcs`` are CSR views into them, each segment sorted by
    the neighbour id.
    """

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    labels: tuple[str, ...]
    in_ptr: np.ndarray = field(repr=False)
    in_arcs: np.ndarray = field(repr=False)
    out_ptr: np.ndarray = field(repr=False)
    out_arcs: np.ndarray = field(repr=False)

    @classmethod
    def from_arcs(
        cls,
        node_count: int,
        arcs: Sequence[tuple[int, int, float]],
        labels: Sequence[str] | None = None,
    ) -> "Graph":
        if labels is None:
            labels = [str(i) for i in range(node_count)]
        if len(labels) != node_count:
            raise GraphFormatError("label count does not match node count")
        seen: set[tuple[int, int]] = set()
        rows = []
        for u, v, w in arcs:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphFormatError(f"arc ({u}, {v}) outside node range")
            if u == v:
                raise GraphFormatError(f"self-loop on node {u}")
            if (u, v) in seen:
                raise GraphFormatError(f"duplicate arc ({u}, {v})")
            if not 0.0 <= w <= 1.0:
                raise GraphFormatError(f"weight {w} of arc ({u}, {v}) outside [0, 1]")
            seen.add((u, v))
            rows.append((u, v, w))
        src = np.array([r[0] for r in rows], dtype=np.int64)
        dst = np.array([r[1] for r in rows], dtype=np.int64)
        weight = np.array([r[2] for r in rows], dtype=np.float64)

        in_sums = np.bincount(dst, weights=weight, minlength=node_count)
        bad = np.flatnonzero(in_sums > 1.0 + LT_SLACK)
        if bad.size:
            v = int(bad[0])
            raise GraphFormatError(
                f"LT admissibility violated at node {labels[v]}: in-weight sum {in_sums[v]:.6g} > 1"
            )

        in_order = np.lexsort((src, dst))
        out_order = np.lexsort((dst, src))
        in_ptr = np.concatenate(([0], np.cumsum(np.bincount(dst, minlength=node_count))))
        out_ptr = np.concatenate(([0], np.cumsum(np.bincount(src, minlength=node_count))))
        for a in (src, dst, weight, in_order, out_order, in_ptr, out_ptr):
            a.setflags(write=False)
        return cls(
            node_count=node_count,
            src=src,
            dst=dst,
            weight=weight,
            labels=tuple(str(x) for x in labels),
            in_ptr=in_ptr,
            in_arcs=in_order,
            out_ptr=out_ptr,
            out_arcs=out_order,
        )

    @property
    def arc_count(self) -> int:
        return int(self.src.size)

    def arcs(self) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), float(w)) for u, v, w in zip(self.src, self.dst, self.weight)]

    def in_neighbors(self, v: int) -> list[tuple[int, float]]:
        idx = self.in_arcs[self.in_ptr[v]:self.in_ptr[v + 1]]
        return [(int(self.src[a]), float(self.weight[a])) for a in idx]

    def out_neighbors(self, u: int) -> list[tuple[int, float]]:
        idx = self.out_arcs[self.out_ptr[u]:self.out_ptr[u + 1]]
        return [(int(self.dst[a]), float(self.weight[a])) for a in idx]

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_weight_sum(self) -> np.ndarray:
        return np.bincount(self.dst, weights=self.weight, minlength=self.node_count)

    def index_of(self, label: str | int) -> int:
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_lookup", lookup)
        try:
            return lookup[str(label)]
        except KeyError:
            raise GraphFormatError(f"unknown node id {label!r}") from None

    def label(self, v: int) -> str:
        return self.labels[v]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.node_count).encode())
        for a in (self.src, self.dst, self.weight):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update("\n".join(self.labels).encode())
        return h.hexdigest()[:16]

    def same_structure(self, other: "Graph") -> bool:
        return (
            self.node_count == other.node_count
            and self.labels == other.labels
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )


def _content_lines(path: Path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def load_edge_list(
    path: str | Path,
    directed: bool = True,
    weight_mode: str = "uniform-in-degree",
) -> Graph:
    """Read a ``u v [w]`` edge list.

    ``weight_mode`` is ``"uniform-in-degree"`` (every in-arc of v gets
    1/in-degree(v), computed after undirected edges are doubled) or
    ``"explicit"`` (third column). Self-loops and repeated arcs are dropped
    with a warning, the first occurrence wins.
    """
    if weight_mode not in ("uniform-in-degree", "explicit"):
        raise GraphFormatError(f"unknown weight mode {weight_mode!r}")
    raw_arcs: list[tuple[str, str, float]] = []
    for lineno, parts in _content_lines(Path(path)):
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"{path}:{lineno}: expected 'u v [w]', got {len(parts)} fields")
        w = 1.0
        if weight_mode == "explicit":
            if len(parts) != 3:
                raise GraphFormatError(f"{path}:{lineno}: weight column missing")
            try:
                w = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: bad weight {parts[2]!r}") from None
            if not 0.0 <= w <= 1.0:
                raise GraphFormatError(f"{path}:{lineno}: weight {w} outside [0, 1]")
        u, v = parts[0], parts[1]
        raw_arcs.append((u, v, w))
        if not directed:
            raw_arcs.append((v, u, w))
    if not raw_arcs:
        raise GraphFormatError(f"{path}: no arcs")

    labels = _remap_labels([a[0] for a in raw_arcs] + [a[1] for a in raw_arcs])
    index = {lab: i for i, lab in enumerate(labels)}
    seen: dict[tuple[int, int], int] = {}
    arcs: list[list] = []
    n_loops = n_dupes = 0
    for u_lab, v_lab, w in raw_arcs:
        u, v = index[u_lab], index[v_lab]
        if u == v:
            n_loops += 1
            continue
        if (u, v) in seen:
            n_dupes += 1
            continue
        seen[(u, v)] = len(arcs)
        arcs.append([u, v, w])
    if n_loops:
        log.warning("%s: dropped %d self-loop(s)", path, n_loops)
    if n_dupes and directed:
        log.warning("%s: dropped %d duplicate arc(s)", path, n_dupes)
    elif n_dupes:
        log.info("%s: dropped %d arc(s) repeated by symmetrization", path, n_dupes)
    if not arcs:
        raise GraphFormatError(f"{path}: no arcs")

    if weight_mode == "uniform-in-degree":
        indeg = np.bincount([a[1] for a in arcs], minlength=len(labels))
        for a in arcs:
            a[2] = 1.0 / indeg[a[1]]
    return Graph.from_arcs(len(labels), [tuple(a) for a in arcs], labels)


@dataclass(frozen=True, eq=False)
class CommunityPartition:
    assignment: np.ndarray
    community_count: int
    members: tuple[tuple[int, ...], ...]
    names: tuple[str, ...]

    @classmethod
    def from_assignment(cls, assignment: Sequence[int], names: Sequence[str] | None = None) -> "CommunityPartition":
        arr = np.asarray(assignment, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise GraphFormatError("assignment must be a nonempty 1-d sequence")
        count = int(arr.max()) + 1
        if arr.min() < 0 or set(np.unique(arr).tolist()) != set(range(count)):
            raise GraphFormatError("community ids must be contiguous from 0")
        members = tuple(tuple(int(v) for v in np.flatnonzero(arr == c)) for c in range(count))
        if names is None:
            names = [str(c) for c in range(count)]
        arr.setflags(write=False)
        return cls(assignment=arr, community_count=count, members=members, names=tuple(names))

    @property
    def node_count(self) -> int:
        return int(self.assignment.size)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.community_count)


def load_communities(path: str | Path, graph: Graph) -> CommunityPartition:
    """Read ``node_id label`` lines; labels are renumbered by first appearance."""
    assignment = [-1] * graph.node_count
    label_ids: dict[str, int] = {}
    for lineno, parts in _content_lines(Path(path)):
        if len(parts) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 'node_id label'")
        try:
            v = graph.index_of(parts[0])
        except GraphFormatError:
            raise GraphFormatError(f"{path}:{lineno}: unknown node id {parts[0]}") from None
        if assignment[v] != -1:
            raise GraphFormatError(f"{path}:{lineno}: duplicate node {parts[0]}")
        assignment[v] = label_ids.setdefault(parts[1], len(label_ids))
    missing = [graph.labels[v] for v, c in enumerate(assignment) if c == -1]
    if missing:
        shown = ", ".join(missing[:10])
        raise GraphFormatError(f"{path}: missing community for node(s) {shown}")
    return CommunityPartition.from_assignment(assignment, names=list(label_ids))


def top_degree_seeds(graph: Graph, size: int) -> list[int]:
    """Nodes with the largest in+out degree, lower id first on ties."""
    if size < 0 or size > graph.node_count:
        raise GraphFormatError(f"seed size {size} exceeds node count {graph.node_count}")
    total = graph.in_degree() + graph.out_degree()
    order = np.lexsort((np.arange(graph.node_count), -total))
    return sorted(int(v) for v in order[:size])


@dataclass(frozen=True)
class ProblemInstance:
    graph: Graph
    partition: CommunityPartition
    negative_seeds: tuple[int, ...]
    k: int
    mu: float = 1.0
    alpha: float = 0.5
    beta: float = 0.0

    def __post_init__(self):
        seeds = tuple(sorted(set(int(s) for s in self.negative_seeds)))
        object.__setattr__(self, "negative_seeds", seeds)
        n = self.graph.node_count
        if self.partition.node_count != n:
            raise ValueError("partition does not cover the graph")
        if not seeds:
            raise ValueError("negative seed set is empty")
        if seeds[0] < 0 or seeds[-1] >= n:
            raise ValueError("negative seed outside graph")
        if not 0 <= self.k <= n - len(seeds):
            raise ValueError(f"budget k={self.k} outside [0, {n - len(seeds)}]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")

    def with_beta(self, beta: float) -> "ProblemInstance":
        return ProblemInstance(self.graph, self.partition, self.negative_seeds, self.k, self.mu, self.alpha, beta)
