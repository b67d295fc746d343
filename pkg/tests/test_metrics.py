import pytest

from spdsim import compute_metrics, identify_slingshot, run_simulation
from spdsim.metrics import response_time_law_gap, time_weighted
from spdsim.sim import SimulationResult


def bare_result(samples, horizon=200.0):
    return SimulationResult(seed=0, horizon=horizon, response_times={"a.op": samples},
                            cycles=[], started={"a.op": len(samples)}, utilization={},
                            capacity=[], size_timeline={}, trace=[])


def test_p95_is_nearest_rank():
    m = compute_metrics(bare_result([(float(i), i / 1000) for i in range(1, 101)]))
    assert m.p95_rt == pytest.approx(0.095)
    assert m.mean_rt == pytest.approx(0.0505)


def test_deterministic_metrics(deterministic_arch):
    cfg = identify_slingshot(deterministic_arch, None)
    r = run_simulation(deterministic_arch, None, cfg, 105.0, 1)
    m = compute_metrics(r)
    assert m.mean_rt == m.p95_rt == 0.5
    assert m.throughput == pytest.approx(1 / 10.5)
    assert m.defined and m.adaptations == 0 and m.first_enactment is None


def test_empty_completion_set_is_undefined():
    m = compute_metrics(bare_result([]))
    assert not m.defined
    assert m.mean_rt is None and m.p95_rt is None
    assert m.throughput == 0.0


def test_warmup_drops_early_completions():
    m = compute_metrics(bare_result([(10.0, 5.0), (150.0, 1.0)]), warmup=100.0)
    assert m.completed == 1 and m.mean_rt == 1.0
    assert m.throughput == pytest.approx(1 / 100)


@pytest.mark.parametrize("warmup", [-1.0, 200.0, 500.0])
def test_warmup_must_precede_horizon(warmup):
    with pytest.raises(ValueError):
        compute_metrics(bare_result([]), warmup=warmup)


def test_time_weighted_step_function():
    steps = [(0.0, 1), (10.0, 3), (30.0, 2)]
    assert time_weighted(steps, 0.0, 40.0) == pytest.approx((10 + 60 + 20) / 40)
    assert time_weighted(steps, 20.0, 40.0) == pytest.approx((30 + 20) / 20)


def test_law_gap_on_closed_form_cycle(deterministic_arch):
    cfg = identify_slingshot(deterministic_arch, None)
    r = run_simulation(deterministic_arch, None, cfg, 210.0, 1)
    gap = response_time_law_gap(r, 0.0, 1)
    # 20 cycles of 10 s think and 0.5 s response fill the horizon exactly
    assert gap["throughput"] == pytest.approx(20 / 210)
    assert gap["relative_error"] == pytest.approx(0.0, abs=1e-9)
