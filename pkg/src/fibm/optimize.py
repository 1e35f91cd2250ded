"""Greedy seed selection (CELF-R, CELF, full computation) and beta sweeps.

All selectors share one candidate rule: a node is selectable if it lies on at
least one sampled path when the index is fresh. A selector stops early (the
solution is marked ``short``) once that pool is used up, or when the best gain
falls below ``-kappa_budget``.
"""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import ProblemInstance
from .objectives import SetObjective, objective_for
from .vrr import VrrIndex

log = logging.getLogger(__name__)

SELECTORS = ("celf-r", "celf", "fc")
GREEDY_FACTOR = 1.0 - 1.0 / math.e
SOUNDNESS_TOL = 1e-12


@dataclass
class IterationRecord:
    node: int
    gain: float
    K: float
    W: float
    F: float
    epsilon: float
    kappa: float
    evaluations: int


@dataclass
class Solution:
    seeds: list[int]
    trace: list[IterationRecord]
    beta: float
    selector: str
    objective: str = "fibm"
    epsilon_max: float = 0.0
    short: bool = False
    compensation_checks: int = 0
    compensation_violations: int = 0
    final: dict = field(default_factory=dict)

    @property
    def evaluations(self) -> list[int]:
        return [r.evaluations for r in self.trace]

    @property
    def total_evaluations(self) -> int:
        return sum(self.evaluations)

    @property
    def psi(self) -> float:
        return empirical_psi(self.trace, len(self.trace))

    def psi_curve(self) -> list[float]:
        return [empirical_psi(self.trace, i) for i in range(1, len(self.trace) + 1)]


def empirical_psi(trace, k: int) -> float:
    """(1 - 1/e) * sum over the first k iterations of observed epsilon + kappa."""
    total = 0.0
    for rec in trace[:k]:
        total += max(0.0, rec.epsilon) + max(0.0, rec.kappa)
    return GREEDY_FACTOR * total


def _check_problem(index: VrrIndex, problem: ProblemInstance):
    if tuple(problem.negative_seeds) != index.negative_seeds:
        raise ValueError("problem and index use different negative seed sets")


class _Run:
    """Shared state of one selection run on an index."""

    def __init__(self, index, problem, objective):
        _check_problem(index, problem)
        self.index = index
        self.k = problem.k
        self.obj = objective if objective is not None else objective_for(index, problem.alpha, problem.beta)
        self.candidates = np.flatnonzero(~index.seed_mask)
        self.selectable = set(np.flatnonzero(index.mass.sum(axis=1) > 0).tolist())
        self.counts = index.blocked_counts()

    def gains(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=np.int64)
        return self.obj.gains(self.counts, self.index.mass[nodes])

    def commit(self, sol: Solution, u: int, gain: float, eps: float, evals: int, kappa_budget: float) -> bool:
        """Apply the winner; returns False when the run must stop short instead."""
        if gain < -kappa_budget:
            sol.short = True
            return False
        self.index.invalidate(u)
        self.counts = self.index.blocked_counts()
        val = self.obj.evaluate(self.counts)
        sol.seeds.append(int(u))
        sol.trace.append(IterationRecord(int(u), float(gain), val.K, val.W, val.F,
                                         float(eps), max(0.0, -float(gain)), int(evals)))
        return True

    def finish(self, sol: Solution) -> Solution:
        val = self.obj.evaluate(self.counts)
        sol.final = {"K": val.K, "W": val.W, "F": val.F, "dp_gap": val.dp_gap}
        return sol


def select_fc(index: VrrIndex, problem: ProblemInstance, objective: SetObjective | None = None,
              kappa_budget: float = math.inf) -> Solution:
    """Evaluate every remaining candidate at every iteration."""
    run = _Run(index, problem, objective)
    sol = Solution([], [], problem.beta, "fc", run.obj.kind)
    remaining = list(run.candidates)
    prev: dict[int, float] = {}
    for i in range(1, run.k + 1):
        if not remaining:
            sol.short = True
            break
        g = run.gains(remaining)
        now = dict(zip(remaining, g.tolist()))
        eps = 0.0
        if i > 2:
            for u, val in now.items():
                if u in prev:
                    eps = max(eps, prev[u] - val)
        sol.epsilon_max = max(sol.epsilon_max, eps)
        best, best_gain = -1, -math.inf
        for u in remaining:
            if u in run.selectable and now[u] > best_gain:
                best, best_gain = u, now[u]
        if best < 0 or not run.commit(sol, best, best_gain, eps, len(remaining), kappa_budget):
            sol.short = True
            break
        remaining.remove(best)
        prev = now
    return run.finish(sol)


def _lazy_select(index, problem, objective, compensate: bool, kappa_budget: float) -> Solution:
    run = _Run(index, problem, objective)
    name = "celf-r" if compensate else "celf"
    sol = Solution([], [], problem.beta, name, run.obj.kind)
    if run.k == 0:
        return run.finish(sol)
    cands = run.candidates
    g0 = run.gains(cands)
    history: dict[int, dict[int, float]] = {int(u): {0: float(g)} for u, g in zip(cands, g0)}
    cached = {int(u): float(g) for u, g in zip(cands, g0) if int(u) in run.selectable}
    heap = [(-g, u) for u, g in cached.items()]
    heapq.heapify(heap)
    eps_max = 0.0

    for i in range(1, run.k + 1):
        if not heap:
            sol.short = True
            break
        evals, eps_iter = 0, 0.0
        if i == 1:
            evals = len(cands)
            neg, u = heapq.heappop(heap)
            gain = -neg
            updated = {u}
        else:
            updated = set()
            while True:
                neg, u = heapq.heappop(heap)
                if u in updated:
                    gain = -neg
                    break
                g = float(run.gains([u])[0])
                evals += 1
                history[u][i - 1] = g
                if compensate:
                    if i > 2 and (i - 2) in history[u]:
                        eps = max(0.0, history[u][i - 2] - g)
                        eps_iter = max(eps_iter, eps)
                        eps_max = max(eps_max, eps)
                    sol.compensation_checks += 1
                    if g > cached[u] + eps_max + SOUNDNESS_TOL:
                        sol.compensation_violations += 1
                        log.debug("stale bound %.3g + eps_max %.3g below recomputed gain %.3g for node %d",
                                    cached[u], eps_max, g, u)
                cached[u] = g
                updated.add(u)
                heapq.heappush(heap, (-g, u))
        if compensate and eps_max > 0:
            for _, v in heap:
                if v not in updated:
                    cached[v] += eps_max
            heap = [(-cached[v], v) for _, v in heap]
            heapq.heapify(heap)
        sol.epsilon_max = eps_max
        if not run.commit(sol, u, gain, eps_iter, evals, kappa_budget):
            break
        del cached[u]
    return run.finish(sol)


def select_celf_r(index: VrrIndex, problem: ProblemInstance, objective: SetObjective | None = None,
                  kappa_budget: float = math.inf) -> Solution:
    """Lazy greedy whose stale gains are raised by the largest observed stage-to-stage gain decay."""
    return _lazy_select(index, problem, objective, True, kappa_budget)


def select_celf(index: VrrIndex, problem: ProblemInstance, objective: SetObjective | None = None,
                kappa_budget: float = math.inf) -> Solution:
    return _lazy_select(index, problem, objective, False, kappa_budget)


def select(index, problem, selector: str = "celf-r", objective: SetObjective | None = None,
           kappa_budget: float = math.inf) -> Solution:
    fn = {"celf-r": select_celf_r, "celf": select_celf, "fc": select_fc}.get(selector)
    if fn is None:
        raise ValueError(f"unknown selector {selector!r}")
    return fn(index, problem, objective, kappa_budget)


def dominates(a, b) -> bool:
    return a[0] >= b[0] and a[1] >= b[1] and (a[0] > b[0] or a[1] > b[1])


def fast_nondominated_sort(points) -> list[list[int]]:
    """Partition maximization points into successive non-dominated fronts."""
    n = len(points)
    dominated_by = [[] for _ in range(n)]
    count = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(points[p], points[q]):
                dominated_by[p].append(q)
            elif dominates(points[q], points[p]):
                count[p] += 1
        if count[p] == 0:
            fronts[0].append(p)
    while fronts[-1]:
        nxt = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                count[q] -= 1
                if count[q] == 0:
                    nxt.append(q)
        fronts.append(sorted(nxt))
    return fronts[:-1] if len(fronts) > 1 else fronts


def nondominated_sort(points) -> list[int]:
    """Indices of the points no other point dominates (duplicates all kept)."""
    for p in points:
        if not all(math.isfinite(float(v)) for v in p):
            raise ValueError("non-finite objective value")
    if not points:
        return []
    return sorted(fast_nondominated_sort(points)[0])


@dataclass
class ParetoPoint:
    beta: float
    seeds: list[int]
    F: float
    W: float
    K: float
    dp_gap: float
    feasible: bool
    dominated: bool
    solution: Solution


@dataclass
class ParetoFront:
    points: list[ParetoPoint]
    reference: ParetoPoint
    mu: float

    def retained(self) -> list[ParetoPoint]:
        return [p for p in self.points if not p.dominated]


def sweep_beta(index: VrrIndex, problem: ProblemInstance, grid, selector: str = "celf-r",
               kappa_budget: float = math.inf) -> ParetoFront:
    """Run the selector for every beta on one shared index, restoring it between runs."""
    grid = sorted(set(float(b) for b in grid))
    if not grid:
        raise ValueError("empty beta grid")
    if grid[0] < 0 or grid[-1] > 1:
        raise ValueError("beta grid must lie in [0, 1]")
    if grid[0] != 0.0:
        grid = [0.0] + grid
    token = index.snapshot()
    points = []
    for beta in grid:
        index.restore(token)
        sol = select(index, problem.with_beta(beta), selector, kappa_budget=kappa_budget)
        f = sol.final
        points.append(ParetoPoint(beta, list(sol.seeds), f["F"], f["W"], f["K"], f["dp_gap"],
                                  False, False, sol))
    index.restore(token)
    ref = points[0]
    for p in points:
        loss = 0.0 if ref.F <= 0 else 1.0 - p.F / ref.F
        p.feasible = loss <= problem.mu + 1e-12
    keep = set(nondominated_sort([(p.F, p.W) for p in points]))
    for i, p in enumerate(points):
        p.dominated = i not in keep
    return ParetoFront(points, ref, problem.mu)
