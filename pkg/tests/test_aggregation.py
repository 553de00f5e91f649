import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcprov.aggregation import (AggregatedTrace, aggregate, alpha_to_t_hat,
                                constrained_local_smooth, expand_schedule,
                                improved_local_smooth, local_smooth, optimal_partition,
                                overprovisioning_cost, rearrangement_amount, save_aggregated,
                                static_aggregate, strict_objective)
from dcprov.models import FleetSpec, evaluate_cost
from dcprov.solver import solve_hom_dp
from dcprov.workload import WorkloadTrace

traces = st.lists(st.one_of(st.floats(0, 100, allow_nan=False),
                            st.integers(0, 5).map(float)), min_size=1, max_size=40)


def test_static_examples():
    agg = static_aggregate([1, 3, 2, 5], 2, "max")
    assert agg.values.tolist() == [3, 5] and agg.sizes.tolist() == [2, 2]
    agg = static_aggregate([1, 3, 2, 5], 2, "mean")
    assert agg.values.tolist() == [2, 3.5]
    agg = static_aggregate([1, 3, 2, 5, 4], 2, "max")
    assert agg.sizes.tolist() == [2, 2, 1] and agg.values.tolist() == [3, 5, 4]
    with pytest.raises(ValueError):
        static_aggregate([1, 2], 3, "max")
    with pytest.raises(ValueError):
        static_aggregate([1, 2], 1, "median")


def test_local_smooth_examples():
    for fn in (local_smooth, improved_local_smooth):
        agg = fn([5, 5, 1, 9], 3, "max")
        assert agg.values.tolist() == [5, 1, 9] and agg.sizes.tolist() == [2, 1, 1]
        one = fn([5, 5, 1, 9], 1, "max")
        assert one.values.tolist() == [9] and one.sizes.tolist() == [4]
    assert overprovisioning_cost(local_smooth([5, 5, 1, 9], 3, "max")) == 0
    assert rearrangement_amount(local_smooth([5, 5, 1, 9], 3, "mean")) == 0
    with pytest.raises(ValueError):
        local_smooth([1, 2], 3, "max")
    with pytest.raises(ValueError):
        improved_local_smooth([1, 2], 0, "max")


def test_constrained_examples():
    agg = constrained_local_smooth([1, 1, 1, 1], 1, 2)
    assert agg.values.tolist() == [1, 1] and agg.sizes.tolist() == [2, 2]
    assert agg.relaxed
    ident = constrained_local_smooth([3, 1, 4, 1, 5], 2, 1, "max")
    assert ident.values.tolist() == [3, 1, 4, 1, 5] and ident.relaxed
    with pytest.raises(ValueError):
        constrained_local_smooth([1, 2], 1, 0)


def test_optimal_partition_examples():
    agg = optimal_partition([5, 5, 1, 9], 3, "max")
    assert agg.sizes.tolist() == [2, 1, 1] and strict_objective(agg) == 0
    assert strict_objective(optimal_partition([1, 3], 1, "mean")) == 2
    assert strict_objective(optimal_partition([4, 2, 7], 3, "mean")) == 0
    with pytest.raises(ValueError):
        optimal_partition(np.zeros(2000), 1000, "max")


def test_metrics_examples():
    assert overprovisioning_cost(static_aggregate([1, 3], 2, "max")) == 2
    assert rearrangement_amount(static_aggregate([1, 3], 2, "mean")) == 2
    assert overprovisioning_cost(static_aggregate([1, 3], 1, "max")) == 0
    priced = overprovisioning_cost(static_aggregate([1, 3], 2, "max"), price=7 / 120)
    assert priced == pytest.approx(2 * 7 / 120)
    with pytest.raises(ValueError):
        rearrangement_amount(static_aggregate([1, 3], 2, "max"))


def _brute_partition(d, T_hat, mode, S=None):
    T = len(d)
    best = math.inf
    for cuts in itertools.combinations(range(1, T), T_hat - 1):
        sizes = np.diff([0, *cuts, T])
        if S is not None and sizes.max() > S:
            continue
        agg = AggregatedTrace(np.zeros(T_hat), sizes, WorkloadTrace(d), mode)
        best = min(best, strict_objective(agg))
    return best


def test_optimal_partition_matches_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(150):
        T = int(rng.integers(1, 11))
        d = rng.uniform(0, 10, T) if rng.random() < 0.5 else rng.integers(0, 4, T) * 1.0
        T_hat = int(rng.integers(1, T + 1))
        mode = ("max", "mean")[int(rng.integers(2))]
        S = None if rng.random() < 0.5 else int(rng.integers(math.ceil(T / T_hat), T + 1))
        got = strict_objective(optimal_partition(d, T_hat, mode, S))
        assert got == pytest.approx(_brute_partition(d, T_hat, mode, S), abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(traces, st.data())
def test_heuristic_invariants(demands, data):
    T = len(demands)
    T_hat = data.draw(st.integers(1, T))
    mode = data.draw(st.sampled_from(["max", "mean"]))
    ref = local_smooth(demands, T_hat, mode)
    fast = improved_local_smooth(demands, T_hat, mode)
    assert np.array_equal(ref.values, fast.values)
    assert np.array_equal(ref.sizes, fast.sizes)
    assert fast.merges == T - T_hat
    assert fast.recomputations <= 2 * fast.merges
    assert fast.sizes.sum() == T
    d = np.asarray(demands)
    if mode == "max":
        assert np.all(fast.expanded_values() >= d)
    else:
        assert math.isclose(float(fast.values @ fast.sizes), math.fsum(d),
                            rel_tol=1e-12, abs_tol=1e-9)
    S = data.draw(st.integers(1, T))
    con = constrained_local_smooth(demands, T_hat, S, mode)
    ref_con = local_smooth(demands, T_hat, mode, S=S)
    assert np.array_equal(con.values, ref_con.values) and con.relaxed == ref_con.relaxed
    assert con.sizes.max() <= S
    assert con.relaxed == (con.T_hat > T_hat)


def test_alpha_one_is_identity_everywhere():
    d = [3.0, 1.5, 4.0, 1.0]
    for method in ("static", "local_smooth", "optimal"):
        for mode in ("max", "mean"):
            agg = aggregate(d, method, mode, alpha=1)
            assert agg.values.tolist() == d and agg.sizes.tolist() == [1] * 4
    assert alpha_to_t_hat(96, 12) == 8 and alpha_to_t_hat(96, 96) == 1
    assert alpha_to_t_hat(10, 3) == 4


def test_static_and_dynamic_mean_totals_agree():
    rng = np.random.default_rng(4)
    d = rng.uniform(0, 50, 96)
    for alpha in (2, 3, 6, 8, 12):
        s = aggregate(d, "static", "mean", alpha=alpha)
        l = aggregate(d, "local_smooth", "mean", alpha=alpha)
        assert s.T_hat == l.T_hat
        assert float(s.values @ s.sizes) == pytest.approx(float(l.values @ l.sizes), rel=1e-12)


def test_expand_schedule_identity_and_cost():
    rng = np.random.default_rng(6)
    fleet = FleetSpec.homogeneous(30)
    d = rng.uniform(0, 30, 24)
    ident = static_aggregate(d, 1, "max")
    s = solve_hom_dp(ident.as_trace(), fleet)
    assert np.array_equal(expand_schedule(s, ident).running, s.running)
    agg = static_aggregate(d, 5, "max")
    s_agg = solve_hom_dp(agg.as_trace(), fleet)
    full = expand_schedule(s_agg, agg)
    assert full.T == 24 and full.covers()
    assert evaluate_cost(full).F == evaluate_cost(s_agg).F
    with pytest.raises(ValueError):
        expand_schedule(s, agg)


def test_as_trace_slot_sizes():
    agg = static_aggregate([1, 2, 3, 4, 5], 2, "max")
    tr = agg.as_trace()
    assert tr.slot_sizes.tolist() == [2, 2, 1]
    assert tr.horizon_base_slots == 5


def test_save_aggregated(tmp_path):
    path = tmp_path / "a.csv"
    save_aggregated(local_smooth([5, 5, 1, 9], 3, "max"), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "agg_slot,value,size,first_base_slot"
    assert lines[1:] == ["1,5.0,2,1", "2,1.0,1,3", "3,9.0,1,4"]
