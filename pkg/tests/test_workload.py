import hashlib
import math

import numpy as np
import pytest

from dcprov.workload import (RandomWorkloadSpec, TraceError, WorkloadTrace, gen_random,
                             gen_sinusoidal, hyperexp2_params, load_trace, experiment_workload,
                             save_trace, truncate_to_capacity)


def test_sinusoid_mean_and_shape():
    for grid in ("index", "linspace"):
        tr = gen_sinusoidal(100, 96, grid=grid)
        assert tr.T == 96
        assert tr.demands.mean() == pytest.approx(20.0, abs=1e-12)
        assert tr.demands.min() >= 0


def test_sinusoid_linspace_endpoints():
    tr = gen_sinusoidal(100, 96, grid="linspace")
    raw0, raw_end = 0.0, math.sin(2 * math.pi / 3)
    # demand = (raw - mean(raw) + 1) * 20, so the ends differ by 20*sin(120deg)
    assert tr.demands[-1] - tr.demands[0] == pytest.approx(20 * (raw_end - raw0))


def test_sinusoid_rejects_unknown_grid():
    with pytest.raises(ValueError):
        gen_sinusoidal(10, grid="cosine")


@pytest.mark.parametrize("scv", [2.0, 4.0, 9.0])
def test_hyperexp_params_hit_moments(scv):
    p1, p2, m1, m2 = hyperexp2_params(3.0, scv)
    mean = p1 * m1 + p2 * m2
    second = 2 * (p1 * m1 ** 2 + p2 * m2 ** 2)
    assert p1 + p2 == pytest.approx(1.0)
    assert mean == pytest.approx(3.0)
    assert second / mean ** 2 - 1 == pytest.approx(scv)


def test_hyperexp_scv4_probabilities():
    p1, p2, _, _ = hyperexp2_params(1.0, 4.0)
    assert p1 == pytest.approx((1 + math.sqrt(3 / 5)) / 2)
    assert p2 == pytest.approx((1 - math.sqrt(3 / 5)) / 2)


@pytest.mark.parametrize("dist,scv", [("exponential", 1.0), ("erlang2", 0.5),
                                      ("hyperexp2", 4.0)])
def test_random_generators_match_moments(dist, scv):
    tr = gen_random(RandomWorkloadSpec(dist, 20.0, 200_000, seed=7))
    d = tr.demands
    assert d.mean() == pytest.approx(20.0, rel=0.02)
    assert d.var() / d.mean() ** 2 == pytest.approx(scv, rel=0.06)


def test_random_is_reproducible_and_seed_dependent():
    a = gen_random(RandomWorkloadSpec("exponential", 20.0, 96, seed=3))
    b = gen_random(RandomWorkloadSpec("exponential", 20.0, 96, seed=3))
    c = gen_random(RandomWorkloadSpec("exponential", 20.0, 96, seed=4))
    assert a == b
    assert a != c


def test_spec_validation():
    with pytest.raises(ValueError):
        RandomWorkloadSpec("pareto", 1.0, 10)
    with pytest.raises(ValueError):
        RandomWorkloadSpec("exponential", 0.0, 10)
    with pytest.raises(ValueError):
        RandomWorkloadSpec("exponential", 1.0, 0)


def test_truncation_caps_at_fleet_size():
    tr = experiment_workload("hyperexp2", 10, 500, seed=1)
    assert tr.demands.max() <= 10
    raw = gen_random(RandomWorkloadSpec("hyperexp2", 2.0, 500, seed=1))
    assert np.array_equal(truncate_to_capacity(raw, 10).demands, tr.demands)


def test_trace_validation():
    with pytest.raises(TraceError, match="at least one slot"):
        WorkloadTrace([])
    with pytest.raises(TraceError, match="slot 2"):
        WorkloadTrace([1.0, -1.0])
    with pytest.raises(TraceError):
        WorkloadTrace([1.0], [0])
    with pytest.raises(TraceError):
        WorkloadTrace([1.0, 2.0], [1])
    tr = WorkloadTrace([1.0, 2.0])
    with pytest.raises(ValueError):
        tr.demands[0] = 5.0


def test_csv_round_trip_is_exact(tmp_path):
    tr = experiment_workload("erlang2", 100, 96, seed=11)
    path = tmp_path / "t.csv"
    save_trace(tr, path)
    assert load_trace(path) == tr
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    save_trace(experiment_workload("erlang2", 100, 96, seed=11), path)
    assert hashlib.sha256(path.read_bytes()).hexdigest() == digest


@pytest.mark.parametrize("body,match", [
    ("slot,demand,slot_size\n1,abc,1\n", "row 2"),
    ("slot,demand,slot_size\n1,1.0,1\n2,-3,1\n", "row 3"),
    ("slot,demand,slot_size\n1,1.0,0\n", "slot size"),
    ("slot,demand,slot_size\n", "at least one slot"),
    ("", "at least one slot"),
])
def test_load_trace_errors(tmp_path, body, match):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(TraceError, match=match):
        load_trace(path)
