"""Valid reverse-reachable (VRR) path index.

Each non-seed root v gets R reverse live-edge walks. A walk that reaches the
negative seed set is *valid* and becomes a path (root first, seed excluded);
identical paths are merged and their count kept in ``L``. ``M[u][v]`` is the
number of live paths rooted at v that pass through u and ``D[u]`` lists the
paths containing u. Immunizing u removes every path in ``D[u]``.

Paths are stored flat (``path_ptr``/``path_flat``) and shared read-only by
every snapshot. Mutable state is ``L``, the per-root live counts and the
per-(node, community) live mass that marginal gains read.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .diffusion import cumulative_in_weights
from .graph import CommunityPartition, Graph
from .rng import substream

ROOT_BLOCK = 64
DUMP_MAGIC = "# fibm-vrr-index 1"

_index_ids = itertools.count(1)


class IndexCacheMiss(ValueError):
    """A stored index does not match the requested inputs."""


class StaleSnapshot(ValueError):
    pass


@dataclass(frozen=True)
class BlockEstimate:
    total: float
    per_community: np.ndarray
    baseline_total: float
    baseline_per_community: np.ndarray


@dataclass(frozen=True)
class Snapshot:
    index_id: int
    L: np.ndarray
    mass: np.ndarray
    valid: np.ndarray


def seeds_fingerprint(seeds: Iterable[int]) -> str:
    return hashlib.sha256(",".join(str(s) for s in sorted(seeds)).encode()).hexdigest()[:16]


def _ranges(ptr: np.ndarray, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated positions of CSR segments ``ids`` and their lengths."""
    lens = ptr[ids + 1] - ptr[ids]
    total = int(lens.sum())
    offsets = np.repeat(ptr[ids] - (np.cumsum(lens) - lens), lens)
    return offsets + np.arange(total), lens


class _MView:
    """Read-only ``M[u][v]`` computed from ``D`` and the live multiplicities."""

    def __init__(self, index: "VrrIndex"):
        self._index = index

    def __getitem__(self, u: int) -> dict[int, int]:
        idx = self._index
        out: dict[int, int] = {}
        for pid in idx.D(u):
            root = int(idx.path_root[pid])
            out[root] = out.get(root, 0) + int(idx.L[pid])
        return out

    def get(self, u: int, default=None):
        return self[u]

    def __iter__(self):
        return iter(np.flatnonzero(np.diff(self._index.d_ptr)).tolist())

    def items(self):
        return ((u, self[u]) for u in self)


class VrrIndex:
    def __init__(
        self,
        graph: Graph,
        partition: CommunityPartition,
        negative_seeds: Iterable[int],
        samples_per_root: int,
        rng_seed: int,
        path_ptr: np.ndarray,
        path_flat: np.ndarray,
        multiplicity: np.ndarray,
        debug: bool = False,
    ):
        self.graph = graph
        self.partition = partition
        self.negative_seeds = tuple(sorted(set(int(s) for s in negative_seeds)))
        self.samples_per_root = int(samples_per_root)
        self.rng_seed = int(rng_seed)
        self.debug = debug
        self.index_id = next(_index_ids)

        n, C = graph.node_count, partition.community_count
        self.seed_mask = np.zeros(n, dtype=bool)
        self.seed_mask[list(self.negative_seeds)] = True
        self.theta = np.where(self.seed_mask, 0, self.samples_per_root).astype(np.int64)

        self.path_ptr = np.asarray(path_ptr, dtype=np.int64)
        self.path_flat = np.asarray(path_flat, dtype=np.int64)
        self.initial_L = np.asarray(multiplicity, dtype=np.int64)
        self.path_root = self.path_flat[self.path_ptr[:-1]] if self.initial_L.size else np.zeros(0, np.int64)
        if self.path_flat.size and self.seed_mask[self.path_flat].any():
            raise ValueError("a VRR path contains a negative seed")
        self._path_of_slot = np.repeat(np.arange(self.initial_L.size), np.diff(self.path_ptr))
        # D as CSR: for node u, ids of the paths through u (ascending)
        order = np.lexsort((self._path_of_slot, self.path_flat))
        self.d_ptr = np.concatenate(([0], np.cumsum(np.bincount(self.path_flat, minlength=n))))
        self.d_ids = self._path_of_slot[order]
        self._slot_comm = partition.assignment[self.path_root[self._path_of_slot]] if self.path_flat.size else np.zeros(0, np.int64)
        self.initial_valid = np.bincount(self.path_root, weights=self.initial_L, minlength=n).astype(np.int64)
        self.initial_mass = self._recount_mass(self.initial_L)
        for a in (self.path_ptr, self.path_flat, self.initial_L, self.path_root, self.theta,
                  self.d_ptr, self.d_ids, self.initial_valid, self.initial_mass):
            a.setflags(write=False)
        self.M = _MView(self)
        self.L = self.initial_L.copy()
        self.valid = self.initial_valid.copy()
        self.mass = self.initial_mass.copy()

    def _recount_mass(self, L: np.ndarray) -> np.ndarray:
        n, C = self.graph.node_count, self.partition.community_count
        flat_key = self.path_flat * C + self._slot_comm
        counts = np.bincount(flat_key, weights=L[self._path_of_slot], minlength=n * C)
        return counts.astype(np.int64).reshape(n, C)

    @property
    def path_count(self) -> int:
        return int(self.initial_L.size)

    def path(self, pid: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.path_flat[self.path_ptr[pid]:self.path_ptr[pid + 1]])

    @property
    def path_nodes(self) -> list[tuple[int, ...]]:
        return [self.path(p) for p in range(self.path_count)]

    def D(self, u: int) -> np.ndarray:
        return self.d_ids[self.d_ptr[u]:self.d_ptr[u + 1]]

    def _check_candidate(self, u: int):
        if self.seed_mask[u]:
            raise ValueError(f"node {u} is a negative seed")

    def estimate_negative_spread(self) -> tuple[float, np.ndarray]:
        """(sigma_hat(S_N, G), per-community split); seeds count themselves."""
        prob = np.zeros(self.graph.node_count)
        roots = self.theta > 0
        prob[roots] = self.initial_valid[roots] / self.theta[roots]
        prob[self.seed_mask] = 1.0
        per = np.bincount(self.partition.assignment, weights=prob, minlength=self.partition.community_count)
        return float(per.sum()), per

    def blocked_counts(self) -> np.ndarray:
        """Blocked walk counts per community (integer numerators of the blocked estimate)."""
        return np.bincount(
            self.partition.assignment,
            weights=self.initial_valid - self.valid,
            minlength=self.partition.community_count,
        ).astype(np.int64)

    def blocked_estimate(self) -> BlockEstimate:
        prob = np.zeros(self.graph.node_count)
        roots = self.theta > 0
        prob[roots] = (self.initial_valid[roots] - self.valid[roots]) / self.theta[roots]
        per = np.bincount(self.partition.assignment, weights=prob, minlength=self.partition.community_count)
        base, base_c = self.estimate_negative_spread()
        return BlockEstimate(float(per.sum()), per, base, base_c)

    def marginal_delta(self, u: int) -> np.ndarray:
        """Per-community increase of the blocked estimate if u were immunized now."""
        self._check_candidate(u)
        return self.mass[u] / self.samples_per_root

    def invalidate(self, u: int) -> None:
        self._check_candidate(u)
        pids = self.D(u)
        live = pids[self.L[pids] > 0]
        if live.size:
            slots, lens = _ranges(self.path_ptr, live)
            counts = np.repeat(self.L[live], lens)
            np.subtract.at(self.mass, (self.path_flat[slots], self._slot_comm[slots]), counts)
            np.subtract.at(self.valid, self.path_root[live], self.L[live])
            self.L[live] = 0
        if self.debug:
            self.check_consistency()

    def check_consistency(self) -> None:
        """Full recount of the live mass and per-root counts from ``L``."""
        if np.any(self.L < 0) or np.any(self.L > self.initial_L):
            raise AssertionError("path multiplicity outside [0, initial]")
        valid = np.bincount(self.path_root, weights=self.L, minlength=self.graph.node_count).astype(np.int64)
        if not np.array_equal(valid, self.valid):
            raise AssertionError("per-root live counts disagree with a full recount")
        if not np.array_equal(self._recount_mass(self.L), self.mass):
            raise AssertionError("node mass disagrees with a full recount of M")

    def snapshot(self) -> Snapshot:
        return Snapshot(self.index_id, self.L.copy(), self.mass.copy(), self.valid.copy())

    def restore(self, token: Snapshot) -> None:
        if token.index_id != self.index_id:
            raise StaleSnapshot("snapshot was taken from a different index")
        self.L = token.L.copy()
        self.mass = token.mass.copy()
        self.valid = token.valid.copy()

    def cache_key(self) -> dict:
        return {
            "graph": self.graph.fingerprint(),
            "negative_seeds": seeds_fingerprint(self.negative_seeds),
            "samples_per_root": self.samples_per_root,
            "rng_seed": self.rng_seed,
        }

    def dump(self, path: str | Path) -> None:
        lines = [DUMP_MAGIC]
        lines += [f"{k} {v}" for k, v in self.cache_key().items()]
        lines.append(f"paths {self.path_count}")
        for pid in range(self.path_count):
            nodes = " ".join(map(str, self.path(pid)[1:]))
            lines.append(f"{self.path_root[pid]} {self.initial_L[pid]} {nodes}".rstrip())
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(
        cls,
        path: str | Path,
        graph: Graph,
        partition: CommunityPartition,
        negative_seeds: Iterable[int],
        samples_per_root: int,
        rng_seed: int,
    ) -> "VrrIndex":
        """Read a dump written by :meth:`dump`; raises IndexCacheMiss when the keys differ."""
        lines = Path(path).read_text().splitlines()
        if not lines or lines[0] != DUMP_MAGIC:
            raise IndexCacheMiss(f"{path}: not a VRR index dump")
        header = dict(line.split(" ", 1) for line in lines[1:6])
        expected = {
            "graph": graph.fingerprint(),
            "negative_seeds": seeds_fingerprint(negative_seeds),
            "samples_per_root": str(int(samples_per_root)),
            "rng_seed": str(int(rng_seed)),
        }
        for k, v in expected.items():
            if header.get(k) != v:
                raise IndexCacheMiss(f"{path}: {k} is {header.get(k)!r}, expected {v!r}")
        count = int(header["paths"])
        body = lines[6:6 + count]
        if len(body) != count:
            raise IndexCacheMiss(f"{path}: truncated dump")
        ptr, flat, mult = [0], [], []
        for line in body:
            parts = [int(x) for x in line.split()]
            flat.append(parts[0])
            flat.extend(parts[2:])
            mult.append(parts[1])
            ptr.append(len(flat))
        return cls(graph, partition, negative_seeds, samples_per_root, rng_seed,
                   np.array(ptr), np.array(flat, dtype=np.int64), np.array(mult, dtype=np.int64))

    def same_paths(self, other: "VrrIndex") -> bool:
        return (
            self.samples_per_root == other.samples_per_root
            and np.array_equal(self.path_ptr, other.path_ptr)
            and np.array_equal(self.path_flat, other.path_flat)
            and np.array_equal(self.initial_L, other.initial_L)
        )


def _walk_block(graph, keys, sources, seed_mask, roots, R, gen):
    """Reverse walks for a block of roots; returns valid walks as -1 padded rows, root first."""
    walks = np.repeat(roots, R)
    m = walks.size
    cap = 8
    paths = np.full((m, cap), -1, dtype=np.int64)
    paths[:, 0] = walks
    length = np.ones(m, dtype=np.int64)
    cur = walks.copy()
    valid = np.zeros(m, dtype=bool)
    active = np.arange(m)
    while active.size:
        u = gen.random(active.size)
        here = cur[active]
        pos = np.searchsorted(keys, 2.0 * here + u, side="right")
        picked = pos < graph.in_ptr[here + 1]
        active = active[picked]
        parent = sources[pos[picked]]
        hit = seed_mask[parent]
        valid[active[hit]] = True
        active, parent = active[~hit], parent[~hit]
        if not active.size:
            break
        width = int(length[active].max())
        revisit = (paths[active, :width] == parent[:, None]).any(axis=1)
        active, parent = active[~revisit], parent[~revisit]
        if not active.size:
            break
        if int(length[active].max()) >= cap:
            cap *= 2
            grown = np.full((m, cap), -1, dtype=np.int64)
            grown[:, :paths.shape[1]] = paths
            paths = grown
        paths[active, length[active]] = parent
        length[active] += 1
        cur[active] = parent
    return paths[valid]


def sample_vrr(
    graph: Graph,
    partition: CommunityPartition,
    negative_seeds: Iterable[int],
    samples_per_root: int = 1000,
    rng_seed: int = 0,
    debug: bool = False,
) -> VrrIndex:
    """Sample ``samples_per_root`` reverse walks from every non-seed node.

    Roots are processed in fixed blocks, each with its own derived random
    stream, so the index depends only on the inputs and ``rng_seed``.
    """
    if samples_per_root < 1:
        raise ValueError("samples_per_root must be >= 1")
    seeds = sorted(set(int(s) for s in negative_seeds))
    if not seeds:
        raise ValueError("negative seed set is empty")
    n = graph.node_count
    seed_mask = np.zeros(n, dtype=bool)
    seed_mask[seeds] = True
    roots = np.flatnonzero(~seed_mask)
    keys, sources = cumulative_in_weights(graph)
    ptr_parts, flat_parts, mult_parts = [], [], []
    for block, start in enumerate(range(0, roots.size, ROOT_BLOCK)):
        gen = substream(rng_seed, "vrr", block)
        rows = _walk_block(graph, keys, sources, seed_mask, roots[start:start + ROOT_BLOCK], samples_per_root, gen)
        if not rows.size:
            continue
        uniq, counts = np.unique(rows, axis=0, return_counts=True)
        keep = uniq >= 0
        flat_parts.append(uniq[keep])
        ptr_parts.append(keep.sum(axis=1))
        mult_parts.append(counts)
    if flat_parts:
        lens = np.concatenate(ptr_parts)
        flat = np.concatenate(flat_parts)
        mult = np.concatenate(mult_parts)
    else:
        lens = flat = mult = np.zeros(0, dtype=np.int64)
    ptr = np.concatenate(([0], np.cumsum(lens)))
    return VrrIndex(graph, partition, seeds, samples_per_root, rng_seed, ptr, flat, mult, debug=debug)
