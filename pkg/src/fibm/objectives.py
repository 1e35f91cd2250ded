"""Fairness (W), effectiveness (F) and scalarized (K) objectives plus baselines.

Blocked amounts are per-community vectors. Communities with zero negative
exposure (n_c = 0) drop out of W, the DP gap and the deviation bounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class FairnessConfig:
    alpha: float
    shares: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        shares = np.asarray(self.shares, dtype=np.float64)
        if np.any(shares < 0):
            raise ValueError("community shares must be nonnegative")
        object.__setattr__(self, "shares", shares)

    @classmethod
    def from_spread(cls, per_community_spread, alpha: float = 0.5) -> "FairnessConfig":
        spread = np.asarray(per_community_spread, dtype=np.float64)
        total = spread.sum()
        if total <= 0:
            raise ValueError("negative spread is zero in every community")
        return cls(alpha, spread / total)

    @property
    def included(self) -> np.ndarray:
        return self.shares > 0

    @property
    def weights(self) -> np.ndarray:
        r = np.zeros_like(self.shares)
        inc = self.included
        r[inc] = self.shares[inc] ** (1.0 - self.alpha)
        return r


@dataclass(frozen=True)
class ObjectiveValue:
    W: float
    F: float
    K: float
    x: np.ndarray
    dp_gap: float


@dataclass(frozen=True)
class DeviationBound:
    epsilon: float
    kappa: float
    delta_max: float
    delta_u_max: float


def _w_rows(blocked: np.ndarray, config: FairnessConfig) -> tuple[np.ndarray, np.ndarray]:
    """W for each row of a (m, C) blocked matrix; columns are summed in a fixed order."""
    blocked = np.atleast_2d(np.asarray(blocked, dtype=np.float64))
    if blocked.shape[1] != config.shares.size:
        raise ValueError(f"{blocked.shape[1]} communities given, config has {config.shares.size}")
    total = np.zeros(blocked.shape[0])
    for c in range(blocked.shape[1]):
        total = total + blocked[:, c]
    positive = total > 0
    x = np.zeros_like(blocked)
    x[positive] = blocked[positive] / total[positive, None]
    r = config.weights
    w = np.zeros(blocked.shape[0])
    for c in np.flatnonzero(config.included):
        w = w + r[c] * x[:, c] ** config.alpha
    return w, x


def fairness_W(blocked, config: FairnessConfig) -> tuple[float, np.ndarray]:
    """Concave DP surrogate sum_c r_c x_c^alpha; W = 0 when nothing is blocked."""
    blocked = np.asarray(blocked, dtype=np.float64)
    if blocked.ndim != 1:
        raise ValueError("expected one blocked amount per community")
    if np.any(blocked < 0):
        raise ValueError("blocked amounts must be nonnegative")
    w, x = _w_rows(blocked, config)
    return float(w[0]), x[0]


def effectiveness_F(blocked_total: float, baseline_spread: float) -> float:
    if baseline_spread <= 0:
        raise ValueError("baseline negative spread is zero")
    return min(1.0, max(0.0, blocked_total / baseline_spread))


def combined_K(W: float, F: float, beta: float) -> float:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta={beta} outside [0, 1]")
    return beta * W + (1.0 - beta) * F


def dp_gap(blocked, baseline) -> float:
    """max_c - min_c of blocked/baseline over communities with positive baseline."""
    blocked = np.asarray(blocked, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    inc = baseline > 0
    if not inc.any():
        raise ValueError("no community has positive negative spread")
    ratios = blocked[inc] / baseline[inc]
    return float(ratios.max() - ratios.min())


def alpha_sensitivity_bound(phi: float, alpha1: float, alpha2: float) -> float:
    """Leading-order bound on |W_alpha1 - W_alpha2| when every |x_c/n_c - 1| < phi."""
    if phi < 0:
        raise ValueError("phi must be nonnegative")
    for a in (alpha1, alpha2):
        if not 0.0 < a < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
    return abs((alpha1 - alpha2) * (alpha1 + alpha2 - 1.0)) / 2.0 * phi**2


def analytic_deviation_bounds(x, shares, increments, alpha: float) -> DeviationBound:
    """First-order (kappa, epsilon) bounds for W around the current proportions.

    ``x`` are the current blocked proportions, ``increments`` the change of
    those proportions caused by adding one node. Only communities with a
    positive share may be passed.
    """
    x = np.asarray(x, dtype=np.float64)
    shares = np.asarray(shares, dtype=np.float64)
    inc = np.asarray(increments, dtype=np.float64)
    if np.any(shares <= 0):
        raise ValueError("a community with zero share was included")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    d_max = float(np.max(np.abs(x - shares))) if x.size else 0.0
    du_max = float(np.max(np.abs(inc))) if inc.size else 0.0
    eps = 2.0 * alpha * (1.0 - alpha) * d_max * du_max * float(np.sum(1.0 / shares))
    return DeviationBound(eps, eps / 2.0, d_max, du_max)


def power_welfare(a: float = 0.1) -> Callable[[np.ndarray], np.ndarray]:
    return lambda r: np.power(r, a)


def log_welfare(a: float = 0.01) -> Callable[[np.ndarray], np.ndarray]:
    return lambda r: np.log2(np.power(r, a) + 1.0)


WELFARE = {"wf": power_welfare(0.1), "cff": log_welfare(0.01)}


def baseline_objective(kind: str, blocked, baseline, transform=None) -> float:
    """Comparison objectives: ``maxmin`` ratio or community-weighted concave welfare."""
    blocked = np.atleast_2d(np.asarray(blocked, dtype=np.float64))
    values = _baseline_rows(kind, blocked, np.asarray(baseline, dtype=np.float64), transform)
    return float(values[0])


def _baseline_rows(kind, blocked, baseline, transform=None):
    inc = baseline > 0
    if not inc.any():
        raise ValueError("no community has positive negative spread")
    ratios = blocked[:, inc] / baseline[inc]
    if kind == "maxmin":
        return ratios.min(axis=1)
    if kind in ("wf", "cff", "concave-welfare"):
        g = transform if transform is not None else WELFARE.get(kind)
        if g is None:
            raise ValueError("concave-welfare needs a transform")
        return (baseline[inc] * g(ratios)).sum(axis=1)
    raise ValueError(f"unknown baseline objective {kind!r}")


class SetObjective:
    """Set-function view used by the selectors.

    Works on integer blocked walk counts: ``base`` is the current per-community
    count vector, ``cand`` a (m, C) matrix of per-candidate count increments.
    Counts are divided by ``samples_per_root`` to get spread estimates.
    """

    def __init__(self, baseline_per_community, samples_per_root: int, alpha: float = 0.5,
                 beta: float = 0.0, kind: str = "fibm"):
        self.baseline = np.asarray(baseline_per_community, dtype=np.float64)
        self.baseline_total = float(self.baseline.sum())
        self.scale = float(samples_per_root)
        self.beta = float(beta)
        self.kind = kind
        self.fairness = FairnessConfig.from_spread(self.baseline, alpha)
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta={beta} outside [0, 1]")
        if kind not in ("fibm", "maxmin", "wf", "cff"):
            raise ValueError(f"unknown objective {kind!r}")

    def _f_rows(self, counts: np.ndarray) -> np.ndarray:
        total = np.zeros(counts.shape[0], dtype=np.int64)
        for c in range(counts.shape[1]):
            total = total + counts[:, c]
        return total / (self.scale * self.baseline_total)

    def values(self, counts) -> np.ndarray:
        counts = np.atleast_2d(np.asarray(counts, dtype=np.int64))
        if self.kind != "fibm":
            return _baseline_rows(self.kind, counts / self.scale, self.baseline)
        w, _ = _w_rows(counts.astype(np.float64), self.fairness)
        return self.beta * w + (1.0 - self.beta) * self._f_rows(counts)

    def gains(self, base, cand) -> np.ndarray:
        base = np.asarray(base, dtype=np.int64)
        cand = np.atleast_2d(np.asarray(cand, dtype=np.int64))
        if self.kind != "fibm":
            after = _baseline_rows(self.kind, (base + cand) / self.scale, self.baseline)
            return after - _baseline_rows(self.kind, base[None, :] / self.scale, self.baseline)[0]
        gain = np.zeros(cand.shape[0])
        if self.beta > 0:
            w_after, _ = _w_rows((base + cand).astype(np.float64), self.fairness)
            w_now, _ = _w_rows(base.astype(np.float64), self.fairness)
            gain = self.beta * (w_after - w_now[0])
        if self.beta < 1:
            gain = gain + (1.0 - self.beta) * self._f_rows(cand)
        return gain

    def evaluate(self, counts) -> ObjectiveValue:
        counts = np.asarray(counts, dtype=np.int64)
        blocked = counts / self.scale
        W, x = fairness_W(blocked, self.fairness)
        F = effectiveness_F(float(counts.sum()) / self.scale, self.baseline_total)
        return ObjectiveValue(W, F, combined_K(W, F, self.beta), x, dp_gap(blocked, self.baseline))


def objective_for(index, alpha: float = 0.5, beta: float = 0.0, kind: str = "fibm") -> SetObjective:
    _, per = index.estimate_negative_spread()
    return SetObjective(per, index.samples_per_root, alpha, beta, kind)

