"""Estimator-vs-oracle checks and exhaustive structure checks on small instances."""
from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .diffusion import ENUM_LIMIT, blocked_spread, lt_spread_exact, lt_spread_mc
from .graph import CommunityPartition, Graph
from .objectives import FairnessConfig, _w_rows, alpha_sensitivity_bound, analytic_deviation_bounds, fairness_W
from .rng import substream
from .vrr import VrrIndex, sample_vrr

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def random_lt_graph(n: int, rng: np.random.Generator, density: float = 0.5) -> Graph:
    """Random directed graph whose in-weights sum to at most 1 at every node."""
    arcs = []
    for v in range(n):
        srcs = [u for u in range(n) if u != v and rng.random() < density]
        if not srcs:
            continue
        w = rng.dirichlet(np.ones(len(srcs))) * rng.uniform(0.6, 1.0)
        arcs += [(u, v, float(x)) for u, x in zip(srcs, w)]
    return Graph.from_arcs(n, arcs)


def random_instance(n: int, seed: int, max_communities: int = 3, negatives: int = 1):
    rng = substream(seed, "instance")
    graph = random_lt_graph(n, rng)
    c = int(rng.integers(1, max_communities + 1))
    labels = list(range(c)) + [int(x) for x in rng.integers(0, c, n - c)]
    partition = CommunityPartition.from_assignment(labels)
    neg = sorted(int(x) for x in rng.choice(n, size=negatives, replace=False))
    return graph, partition, neg


def planted_partition_graph(n: int, m: int, communities: int, seed: int, mix: float = 0.2):
    """Undirected graph with ``m`` edges, a fraction ``mix`` of them across communities.

    Returns the graph (uniform in-degree weights) and its planted partition.
    """
    rng = substream(seed, "planted")
    assignment = np.arange(n) % communities
    members = [np.flatnonzero(assignment == c) for c in range(communities)]
    edges: set[tuple[int, int]] = set()
    while len(edges) < m:
        c = int(rng.integers(communities))
        u = int(rng.choice(members[c]))
        if rng.random() < mix:
            v = int(rng.integers(n))
        else:
            v = int(rng.choice(members[c]))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    indeg = np.zeros(n, dtype=np.int64)
    for u, v in edges:
        indeg[u] += 1
        indeg[v] += 1
    arcs = []
    for u, v in sorted(edges):
        arcs.append((u, v, 1.0 / indeg[v]))
        arcs.append((v, u, 1.0 / indeg[u]))
    return Graph.from_arcs(n, arcs), CommunityPartition.from_assignment(assignment.tolist())


def counts_after(index: VrrIndex, nodes) -> np.ndarray:
    """Blocked counts per community if ``nodes`` were immunized on a fresh index."""
    token = index.snapshot()
    for u in nodes:
        index.invalidate(u)
    out = index.blocked_counts()
    index.restore(token)
    return out


def coverage_counts(index: VrrIndex, nodes) -> int:
    """Walk mass covered by ``nodes``, recomputed straight from the path store."""
    chosen = set(nodes)
    total = 0
    for pid in range(index.path_count):
        if chosen.intersection(index.path(pid)):
            total += int(index.initial_L[pid])
    return total


def selectable_nodes(index: VrrIndex) -> list[int]:
    return sorted(int(u) for u in np.flatnonzero(index.initial_mass.sum(axis=1) > 0))


def subset_table(nodes, fn):
    subsets = [frozenset(s) for r in range(len(nodes) + 1) for s in itertools.combinations(nodes, r)]
    return subsets, {s: fn(s) for s in subsets}


def coverage_violations(index: VrrIndex, nodes=None) -> tuple[int, int]:
    """Exhaustive monotonicity/submodularity check of the coverage objective (integer arithmetic)."""
    nodes = selectable_nodes(index) if nodes is None else list(nodes)
    subsets, val = subset_table(nodes, lambda s: coverage_counts(index, s))
    checked = bad = 0
    for X in subsets:
        for u in nodes:
            if u in X:
                continue
            checked += 1
            if val[X | {u}] < val[X]:
                bad += 1
            gx = val[X | {u}] - val[X]
            for Y in subsets:
                if X <= Y and u not in Y:
                    checked += 1
                    if val[Y | {u}] - val[Y] > gx:
                        bad += 1
    return bad, checked


@dataclass
class DeviationCheck:
    checked: int
    monotonicity_violations: int
    submodularity_violations: int
    max_monotonicity_violation: float
    max_submodularity_violation: float
    kappa: float
    epsilon: float
    exceed: int


def w_deviation_check(index: VrrIndex, alpha: float = 0.5, nodes=None, tol: float = 1e-12) -> DeviationCheck:
    """Observed (kappa, epsilon) violations of W against the closed-form bounds.

    W is only defined where something is blocked, so sets with zero blocked
    mass are left out. The bound constants use the largest proportion
    deviation and the largest one-node proportion change over the instance.
    """
    nodes = selectable_nodes(index) if nodes is None else list(nodes)
    _, base = index.estimate_negative_spread()
    cfg = FairnessConfig.from_spread(base, alpha)
    inc = cfg.included
    subsets, counts = subset_table(nodes, lambda s: counts_after(index, s))
    W, x = {}, {}
    for s in subsets:
        w, xs = _w_rows(counts[s].astype(np.float64), cfg)
        W[s], x[s] = float(w[0]), xs[0]
    domain = [s for s in subsets if counts[s].sum() > 0]
    empty = DeviationCheck(0, 0, 0, 0.0, 0.0, 0.0, 0.0, 0)
    if not domain:
        return empty
    states = np.array([x[s][inc] for s in domain])
    steps = np.array([x[s | {u}][inc] - x[s][inc] for s in domain for u in nodes if u not in s] or [np.zeros(inc.sum())])
    bound = analytic_deviation_bounds(states, cfg.shares[inc], steps, alpha)
    checked = mono = sub = exceed = 0
    worst_m = worst_s = 0.0
    for X in domain:
        for u in nodes:
            if u in X:
                continue
            checked += 1
            drop = W[X] - W[X | {u}]
            if drop > tol:
                mono += 1
                worst_m = max(worst_m, drop)
                exceed += drop > bound.kappa + tol
            gx = W[X | {u}] - W[X]
            for Y in domain:
                if X <= Y and u not in Y:
                    checked += 1
                    rise = (W[Y | {u}] - W[Y]) - gx
                    if rise > tol:
                        sub += 1
                        worst_s = max(worst_s, rise)
                        exceed += rise > bound.epsilon + tol
    return DeviationCheck(checked, mono, sub, worst_m, worst_s, bound.kappa, bound.epsilon, int(exceed))


def w_invariant_violations(trials: int, seed: int, max_communities: int = 8) -> dict:
    """Random-vector checks of 0 <= W <= 1, W = 1 iff x = n, and growth along x -> n."""
    rng = substream(seed, "w-invariants")
    out = {"range": 0, "iff": 0, "alignment": 0, "trials": trials}
    for _ in range(trials):
        C = int(rng.integers(1, max_communities + 1))
        n = rng.dirichlet(np.ones(C))
        alpha = float(rng.uniform(0.05, 0.95))
        cfg = FairnessConfig(alpha, n)
        x = n.copy() if rng.random() < 0.1 else rng.dirichlet(np.ones(C))
        W, xs = fairness_W(x, cfg)
        if not (-1e-12 <= W <= 1 + 1e-12):
            out["range"] += 1
        at_parity = np.max(np.abs(xs - n)) < 1e-12
        if (abs(W - 1.0) <= 1e-12) != at_parity and not _near_parity(xs, n):
            out["iff"] += 1
        if not at_parity:
            prev = W
            for t in (0.25, 0.5, 0.75, 1.0):
                wt, _ = fairness_W((1 - t) * x + t * n, cfg)
                if not wt > prev:
                    out["alignment"] += 1
                    break
                prev = wt
    return out


def _near_parity(x, n) -> bool:
    # W - 1 is quadratic in (x - n): deviations below ~1e-6 round W to exactly 1
    return np.max(np.abs(x - n)) < 1e-6


def alpha_bound_violations(trials: int, seed: int, phi: float = 0.05, max_communities: int = 8) -> int:
    rng = substream(seed, "alpha-bound")
    bad = 0
    for _ in range(trials):
        C = int(rng.integers(2, max_communities + 1))
        n = rng.dirichlet(np.ones(C) * 2)
        h = rng.uniform(-phi, phi, C) * 0.999
        h -= np.dot(n, h)  # keep sum(x) = 1
        if np.max(np.abs(h)) >= phi:
            h *= 0.999 * phi / np.max(np.abs(h))
        x = n * (1 + h)
        a1, a2 = (float(a) for a in rng.uniform(0.01, 0.99, 2))
        w1, _ = fairness_W(x, FairnessConfig(a1, n))
        w2, _ = fairness_W(x, FairnessConfig(a2, n))
        if abs(w1 - w2) > alpha_sensitivity_bound(phi, a1, a2) + 10 * phi**3:
            bad += 1
    return bad


def oracle_agreement(graphs, runs: int = 100_000, seed: int = 0) -> list[dict]:
    rows = []
    for i, (graph, partition, neg) in enumerate(graphs):
        exact = lt_spread_exact(graph, partition, neg)
        mc = lt_spread_mc(graph, partition, neg, (), runs, seed + i)
        err = abs(mc.total - exact.total)
        rows.append({"exact": exact.total, "mc": mc.total, "stderr": mc.stderr,
                     "ok": err <= 4 * mc.stderr + 1e-9})
    return rows


def vrr_fidelity(graphs, samples_per_root: int = 5000, seed: int = 0, positives: int = 2) -> list[dict]:
    rows = []
    for i, (graph, partition, neg) in enumerate(graphs):
        index = sample_vrr(graph, partition, neg, samples_per_root, seed + i)
        exact = lt_spread_exact(graph, partition, neg)
        est, _ = index.estimate_negative_spread()
        rng = substream(seed + i, "positives")
        pool = [v for v in range(graph.node_count) if v not in set(neg)]
        pos = sorted(int(v) for v in rng.choice(pool, size=min(positives, len(pool)), replace=False))
        token = index.snapshot()
        for u in pos:
            index.invalidate(u)
        blocked = index.blocked_estimate().total
        index.restore(token)
        truth = blocked_spread(graph, partition, neg, pos, "exact").total
        rows.append({
            "exact": exact.total, "estimate": est, "spread_ok": abs(est - exact.total) <= 0.05 * exact.total,
            "positives": pos, "blocked_exact": truth, "blocked_estimate": blocked,
            "blocked_ok": abs(blocked - truth) <= 0.07 * exact.total,
        })
    return rows


def validate_instance(graph: Graph, partition: CommunityPartition, neg, samples_per_root: int,
                      mc_runs: int, seed: int, inject_fault: bool = False) -> ValidationReport:
    """Oracle cross-checks on one user-supplied instance."""
    checks = []
    guard = int(np.prod((graph.in_degree() + 1).astype(object)))
    if guard > ENUM_LIMIT:
        raise ValueError(f"graph exceeds the enumeration guard ({guard} > {ENUM_LIMIT})")
    exact = lt_spread_exact(graph, partition, neg)
    mc = lt_spread_mc(graph, partition, neg, (), mc_runs, seed)
    checks.append(Check("mc-vs-exact", abs(mc.total - exact.total) <= 4 * mc.stderr + 1e-9,
                        {"exact": exact.total, "mc": mc.total, "stderr": mc.stderr}))
    index = sample_vrr(graph, partition, neg, samples_per_root, seed)
    if inject_fault:
        u = int(np.argmax(index.mass.sum(axis=1)))
        index.mass[u, 0] += 1
    est, _ = index.estimate_negative_spread()
    checks.append(Check("vrr-vs-exact", abs(est - exact.total) <= 0.05 * exact.total,
                        {"exact": exact.total, "estimate": est}))
    try:
        index.check_consistency()
        checks.append(Check("index-consistency", True))
    except AssertionError as exc:
        checks.append(Check("index-consistency", False, {"error": str(exc)}))
    nodes = selectable_nodes(index)
    if len(nodes) <= 8:
        bad, total = coverage_violations(index, nodes)
        checks.append(Check("coverage-submodularity", bad == 0, {"violations": bad, "checked": total}))
        dev = w_deviation_check(index, 0.5, nodes)
        checks.append(Check("w-deviation-bounds", dev.exceed == 0, asdict(dev)))
    inv = w_invariant_violations(2000, seed)
    checks.append(Check("w-invariants", inv["range"] + inv["iff"] + inv["alignment"] == 0, inv))
    return ValidationReport(checks)


def validate_random(count: int = 20, n: int = 6, samples_per_root: int = 5000, mc_runs: int = 100_000,
                    seed: int = 0) -> ValidationReport:
    """Suite on ``count`` random LT instances: MC and VRR estimators against enumeration."""
    graphs = [random_instance(n, seed + i) for i in range(count)]
    oracle = oracle_agreement(graphs, mc_runs, seed)
    fidelity = vrr_fidelity(graphs, samples_per_root, seed)
    ok_mc = sum(r["ok"] for r in oracle)
    ok_spread = sum(r["spread_ok"] for r in fidelity)
    ok_blocked = sum(r["blocked_ok"] for r in fidelity)
    checks = [
        Check("mc-vs-exact", ok_mc >= int(np.ceil(0.95 * count)), {"within": ok_mc, "of": count}),
        Check("vrr-spread", ok_spread >= int(np.ceil(0.9 * count)), {"within": ok_spread, "of": count}),
        Check("vrr-blocked", ok_blocked >= int(np.ceil(0.9 * count)), {"within": ok_blocked, "of": count}),
    ]
    inv = w_invariant_violations(2000, seed)
    checks.append(Check("w-invariants", inv["range"] + inv["iff"] + inv["alignment"] == 0, inv))
    return ValidationReport(checks)


def cmd_validate(cfg, inject_fault: bool = False) -> ValidationReport:
    """Instance checks when a graph is configured, else the random small-graph suite."""
    import json
    from pathlib import Path

    from .bench import load_inputs

    if cfg.graph:
        inputs = load_inputs(cfg)
        report = validate_instance(inputs.graph, inputs.partition, inputs.negative_seeds,
                                   cfg.samples_per_root, cfg.mc_runs, cfg.rng_seed, inject_fault)
    else:
        report = validate_random(20, 6, cfg.samples_per_root, cfg.mc_runs, cfg.rng_seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"schema": 1, "config": cfg.to_dict(), **report.to_dict()}
    (out / "validate.json").write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")
    return report
