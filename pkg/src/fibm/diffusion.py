"""Linear Threshold spread via live-edge sampling (Monte Carlo) and exhaustive enumeration.

A live-edge configuration keeps, for every node v, at most one in-arc (u, v)
chosen with probability p_{u,v}. Spread is reachability from the seeds in
that subgraph once the removed nodes are deleted. Seeds count themselves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graph import CommunityPartition, Graph
from .rng import substream

MC_CHUNK = 4096
ENUM_LIMIT = 10**7


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SpreadResult:
    total: float
    per_community: np.ndarray
    stderr: float = 0.0


def _as_mask(n: int, nodes: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for v in nodes:
        mask[int(v)] = True
    return mask


def _check_sets(seeds, removed):
    seeds, removed = set(map(int, seeds)), set(map(int, removed))
    overlap = seeds & removed
    if overlap:
        raise ValueError(f"seeds and removed nodes overlap: {sorted(overlap)}")
    return seeds, removed


def _reach(parent: np.ndarray, seed_mask: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """Active mask for a batch of one-parent configurations (rows of ``parent``, -1 = none)."""
    has_parent = parent >= 0
    safe = np.where(has_parent, parent, 0)
    relay = has_parent & alive[None, :]
    active = np.broadcast_to(seed_mask & alive, parent.shape).copy()
    for _ in range(parent.shape[1]):
        nxt = active | (relay & np.take_along_axis(active, safe, axis=1))
        if np.array_equal(nxt, active):
            break
        active = nxt
    return active


def cumulative_in_weights(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Per-arc key ``2*v + cumsum`` in in-CSR order, so one searchsorted picks arcs for all nodes."""
    arcs = graph.in_arcs
    w = graph.weight[arcs]
    keys = np.empty(arcs.size, dtype=np.float64)
    for v in range(graph.node_count):
        lo, hi = graph.in_ptr[v], graph.in_ptr[v + 1]
        keys[lo:hi] = 2.0 * v + np.cumsum(w[lo:hi])
    return keys, graph.src[arcs]


def sample_parents(graph: Graph, uniforms: np.ndarray, keys=None, sources=None) -> np.ndarray:
    """Map uniforms of shape (runs, n) to the chosen live in-neighbour of each node, or -1."""
    if keys is None:
        keys, sources = cumulative_in_weights(graph)
    n = graph.node_count
    target = 2.0 * np.arange(n) + uniforms
    pos = np.searchsorted(keys, target, side="right")
    chosen = pos < graph.in_ptr[1:]
    parent = np.full(uniforms.shape, -1, dtype=np.int64)
    parent[chosen] = sources[pos[chosen]]
    return parent


def lt_spread_mc(
    graph: Graph,
    partition: CommunityPartition,
    seeds: Iterable[int],
    removed: Iterable[int] = (),
    runs: int = 10000,
    rng_seed: int = 0,
) -> SpreadResult:
    seeds, removed = _check_sets(seeds, removed)
    if runs < 1:
        raise ValueError("runs must be >= 1")
    n = graph.node_count
    seed_mask = _as_mask(n, seeds)
    alive = ~_as_mask(n, removed)
    keys, sources = cumulative_in_weights(graph)
    comm = partition.assignment
    totals = np.empty(runs)
    comm_sum = np.zeros(partition.community_count)
    for chunk, start in enumerate(range(0, runs, MC_CHUNK)):
        m = min(MC_CHUNK, runs - start)
        u = substream(rng_seed, "mc", chunk).random((m, n))
        active = _reach(sample_parents(graph, u, keys, sources), seed_mask, alive)
        totals[start:start + m] = active.sum(axis=1)
        comm_sum += np.bincount(comm, weights=active.sum(axis=0), minlength=partition.community_count)
    stderr = float(totals.std(ddof=1) / np.sqrt(runs)) if runs > 1 else 0.0
    return SpreadResult(float(totals.mean()), comm_sum / runs, stderr)


def _live_options(graph: Graph):
    opts = []
    for v in range(graph.node_count):
        nbrs = graph.in_neighbors(v)
        residual = 1.0 - sum(w for _, w in nbrs)
        choices = [(u, w) for u, w in nbrs if w > 0.0]
        if residual > 1e-15:
            choices.append((-1, residual))
        opts.append(choices)
    return opts


def configuration_count(graph: Graph) -> int:
    return int(np.prod([len(o) for o in _live_options(graph)], dtype=object))


def lt_spread_exact(
    graph: Graph,
    partition: CommunityPartition,
    seeds: Iterable[int],
    removed: Iterable[int] = (),
) -> SpreadResult:
    """Exact expectation by summing over every live-edge configuration."""
    seeds, removed = _check_sets(seeds, removed)
    n = graph.node_count
    guard = int(np.prod((graph.in_degree() + 1).astype(object)))
    if guard > ENUM_LIMIT:
        raise EnumerationTooLarge(f"prod(in-degree + 1) = {guard} exceeds {ENUM_LIMIT}")
    opts = _live_options(graph)
    shape = tuple(len(o) for o in opts)
    par_tab = [np.array([u for u, _ in o], dtype=np.int64) for o in opts]
    prob_tab = [np.array([w for _, w in o]) for o in opts]
    seed_mask = _as_mask(n, seeds)
    alive = ~_as_mask(n, removed)
    total_configs = int(np.prod(shape, dtype=np.int64))
    comm_exp = np.zeros(partition.community_count)
    for start in range(0, total_configs, 1 << 16):
        flat = np.arange(start, min(total_configs, start + (1 << 16)))
        idx = np.unravel_index(flat, shape)
        parent = np.stack([par_tab[v][idx[v]] for v in range(n)], axis=1)
        prob = np.ones(flat.size)
        for v in range(n):
            prob *= prob_tab[v][idx[v]]
        active = _reach(parent, seed_mask, alive)
        node_exp = prob @ active
        comm_exp += np.bincount(partition.assignment, weights=node_exp, minlength=partition.community_count)
    return SpreadResult(float(comm_exp.sum()), comm_exp, 0.0)


@dataclass(frozen=True)
class BlockedSpread:
    total: float
    per_community: np.ndarray
    base: SpreadResult
    immunized: SpreadResult


def blocked_spread(
    graph: Graph,
    partition: CommunityPartition,
    negative_seeds: Iterable[int],
    positive_seeds: Iterable[int],
    method: str = "exact",
    runs: int = 10000,
    rng_seed: int = 0,
) -> BlockedSpread:
    """Reduction of negative spread caused by immunizing ``positive_seeds``.

    The Monte Carlo variant reuses ``rng_seed`` for both terms, so both
    spreads are measured on the same live-edge samples.
    """
    neg = set(map(int, negative_seeds))
    pos = set(map(int, positive_seeds))
    if neg & pos:
        raise ValueError(f"positive seeds overlap negative seeds: {sorted(neg & pos)}")
    if method == "exact":
        base = lt_spread_exact(graph, partition, neg)
        imm = lt_spread_exact(graph, partition, neg, pos)
    elif method == "mc":
        base = lt_spread_mc(graph, partition, neg, (), runs, rng_seed)
        imm = lt_spread_mc(graph, partition, neg, pos, runs, rng_seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    per = base.per_community - imm.per_community
    return BlockedSpread(float(per.sum()), per, base, imm)
