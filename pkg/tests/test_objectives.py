import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fibm.objectives import (FairnessConfig, SetObjective, alpha_sensitivity_bound, analytic_deviation_bounds,
                             baseline_objective, combined_K, dp_gap, effectiveness_F, fairness_W)
from fibm.validation import alpha_bound_violations, w_invariant_violations

HALF = FairnessConfig(0.5, [0.5, 0.5])


def test_w_reference_values():
    assert fairness_W([0.5, 0.5], HALF)[0] == pytest.approx(1.0, abs=1e-15)
    assert fairness_W([0.0, 0.0], HALF)[0] == 0.0
    assert fairness_W([1.0, 0.0], HALF)[0] == pytest.approx(np.sqrt(0.5), abs=1e-12)


def test_w_excludes_unexposed_communities():
    cfg = FairnessConfig.from_spread([2.0, 0.0, 2.0], 0.5)
    assert fairness_W([1.0, 0.0, 1.0], cfg)[0] == pytest.approx(1.0, abs=1e-12)
    assert dp_gap([1.0, 0.0, 1.0], [2.0, 0.0, 2.0]) == 0.0


def test_f_and_k():
    assert effectiveness_F(0.0, 3.0) == 0.0
    assert effectiveness_F(3.0, 3.0) == 1.0
    assert effectiveness_F(2.0, 3.0) == pytest.approx(2 / 3)
    assert combined_K(0.8, 0.6, 0.0) == 0.6
    assert combined_K(0.8, 0.6, 1.0) == 0.8
    assert combined_K(0.8, 0.6, 0.5) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        combined_K(0.8, 0.6, 1.1)


def test_dp_gap():
    assert dp_gap([1.0, 2.0], [2.0, 4.0]) == 0.0
    assert dp_gap([1.0, 0.0], [1.0, 1.0]) == 1.0


def test_alpha_sensitivity_bound():
    assert alpha_sensitivity_bound(0.1, 0.4, 0.4) == 0.0
    assert alpha_sensitivity_bound(0.1, 0.3, 0.7) == pytest.approx(0.0, abs=1e-18)
    assert alpha_sensitivity_bound(0.1, 0.3, 0.9) == pytest.approx(0.0006)


def test_analytic_deviation_bounds():
    b = analytic_deviation_bounds([0.6, 0.4], [0.5, 0.5], [0.05, -0.05], 0.5)
    # 2 * 0.25 * 0.1 * 0.05 * (1/0.5 + 1/0.5)
    assert b.epsilon == pytest.approx(0.01) and b.kappa == pytest.approx(0.005)
    assert analytic_deviation_bounds([0.5, 0.5], [0.5, 0.5], [0.05, -0.05], 0.5).epsilon == 0.0
    assert analytic_deviation_bounds([0.6, 0.4], [0.5, 0.5], [0.0, 0.0], 0.5).epsilon == 0.0
    with pytest.raises(ValueError):
        analytic_deviation_bounds([1.0, 0.0], [1.0, 0.0], [0.0, 0.0], 0.5)


def test_baselines():
    assert baseline_objective("maxmin", [1.0, 2.0], [2.0, 4.0]) == 0.5
    for kind in ("maxmin", "wf", "cff"):
        assert baseline_objective(kind, [0.0, 0.0], [2.0, 4.0]) == 0.0
    with pytest.raises(ValueError):
        baseline_objective("nope", [0.0], [1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.lists(st.floats(0, 1), min_size=2, max_size=6),
       st.sampled_from(["wf", "cff"]))
def test_welfare_is_concave(a, b, kind):
    m = min(len(a), len(b))
    a, b = np.array(a[:m]), np.array(b[:m])
    base = np.ones(m)
    mid = baseline_objective(kind, (a + b) / 2, base)
    avg = (baseline_objective(kind, a, base) + baseline_objective(kind, b, base)) / 2
    assert mid >= avg - 1e-12


def test_w_invariants_on_random_vectors():
    out = w_invariant_violations(2000, seed=1)
    assert out["range"] == out["iff"] == out["alignment"] == 0


def test_alpha_bound_on_random_vectors():
    assert alpha_bound_violations(300, seed=1) == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=3, max_size=3), st.lists(st.integers(0, 5), min_size=3, max_size=3),
       st.floats(0, 1))
def test_set_objective_gains_match_differences(base, extra, beta):
    obj = SetObjective([3.0, 2.0, 1.0], 10, 0.5, beta)
    base, extra = np.array(base), np.array(extra)
    gain = obj.gains(base, extra[None, :])[0]
    assert gain == pytest.approx(obj.values(base + extra)[0] - obj.values(base)[0], abs=1e-12)
    assert obj.evaluate(base + extra).K == pytest.approx(obj.values(base + extra)[0], abs=1e-12)
