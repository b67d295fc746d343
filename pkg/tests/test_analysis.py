import csv

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from spdsim import AnalysisError
from spdsim.analysis import (confidence_interval, mape, pairwise_comparison_score, pearson,
                             read_ground_truth, relative_absolute_error, speedup,
                             summarize_replications)


def test_ci_of_one_two_three():
    est = confidence_interval([1.0, 2.0, 3.0])
    assert est.mean == 2.0 and est.stddev == 1.0
    want = oracles.t_quantile(0.975, 2) / 3 ** 0.5
    assert est.half_width == pytest.approx(want, abs=1e-9)
    assert est.half_width == pytest.approx(2.484, abs=1e-3)


def test_identical_replications_have_zero_width():
    out = summarize_replications([4.2] * 5)
    assert out["value"].half_width == 0.0


def test_single_replication_is_rejected():
    with pytest.raises(AnalysisError):
        summarize_replications([1.0])


def test_mismatched_specs_are_rejected():
    with pytest.raises(AnalysisError):
        summarize_replications([1.0, 2.0], spec_ids=["a", "b"])


@pytest.mark.parametrize("gt,pred,want", [(2, 1, 0.5), (3.5, 3.5, 0.0), (1, 1.3, 0.3)])
def test_rae(gt, pred, want):
    assert relative_absolute_error(gt, pred) == pytest.approx(want)


def test_rae_needs_positive_truth():
    with pytest.raises(AnalysisError):
        relative_absolute_error(0, 1)


@pytest.mark.parametrize("pairs,want", [([(2, 1)], 50), ([(2, 1), (1, 1)], 25),
                                        ([(1, 1.27)], 27)])
def test_mape(pairs, want):
    assert mape(pairs) == pytest.approx(want)


def test_mape_of_nothing():
    with pytest.raises(AnalysisError):
        mape([])


def test_speedups():
    assert speedup(2.0, 1.0, "mean_rt") == 2.0
    assert speedup(1.7, 1.7, "p95_rt") == 1.0
    assert speedup(10.0, 15.0, "throughput") == 1.5
    with pytest.raises(AnalysisError):
        speedup({"mean_rt": None}, {"mean_rt": 1.0}, "mean_rt")


def test_pearson_examples():
    assert pearson([1, 2, 5, 7], [1, 2, 5, 7])[0] == pytest.approx(1.0)
    assert pearson([1, 2, 5, 7], [-1, -2, -5, -7])[0] == pytest.approx(-1.0)
    r, p = pearson([1, 2, 3], [1, 2, 4])
    assert r == pytest.approx(oracles.pearson_r([1, 2, 3], [1, 2, 4]))
    assert r == pytest.approx(0.982, abs=1e-3)
    assert p == pytest.approx(oracles.two_sided_p_df1(r), abs=1e-6)


def test_pearson_degenerate():
    with pytest.raises(AnalysisError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(AnalysisError):
        pearson([1, 2], [1, 2])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=20),
       st.floats(0.1, 10), finite)
def test_pearson_affine_invariance(pairs, a, b):
    xs, ys = [x for x, _ in pairs], [y for _, y in pairs]
    try:
        r = pearson(xs, ys)[0]
        r2 = pearson([a * x + b for x in xs], ys)[0]
    except AnalysisError:
        return
    if min(max(xs) - min(xs), max(ys) - min(ys)) > 1e-3:
        assert r2 == pytest.approx(r, abs=1e-6)


def test_kappa_two_policy_example():
    a = {"rt": 1.0, "util": 0.5}
    b = {"rt": 2.0, "util": 0.5}
    assert pairwise_comparison_score([a, b], {"rt": True, "util": False}) == [75.0, 25.0]


def test_kappa_all_ties():
    same = {"rt": 1.0}
    assert pairwise_comparison_score([same, same, same], {"rt": True}) == [50.0] * 3


def test_kappa_strict_order():
    pols = [{"x": 1.0}, {"x": 2.0}, {"x": 3.0}]
    assert pairwise_comparison_score(pols, {"x": True}) == [100.0, 50.0, 0.0]


def test_kappa_ties_after_rounding():
    pols = [{"x": 1.0000001}, {"x": 1.0000002}]
    assert pairwise_comparison_score(pols, {"x": True}) == [50.0, 50.0]


@given(st.lists(st.lists(st.floats(0.01, 100), min_size=3, max_size=3), min_size=2,
                max_size=7))
def test_kappa_sums_to_half_n(rows):
    pols = [dict(zip("abc", r)) for r in rows]
    scores = pairwise_comparison_score(pols, {"a": True, "b": False, "c": True})
    assert sum(scores) == pytest.approx(50.0 * len(pols))
    assert all(0 <= s <= 100 for s in scores)


def test_kappa_needs_defined_metrics():
    with pytest.raises(AnalysisError):
        pairwise_comparison_score([{"x": None}, {"x": 1.0}], {"x": True})


def _write(path, rows, header=("policy", "workload", "metric", "value", "unit")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def test_ground_truth_table(tmp_path):
    p = tmp_path / "gt.csv"
    _write(p, [("none", "High", "mean_rt", "0.4", "s"), ("max", "High", "mean_rt", "0.1", "s")])
    assert read_ground_truth(p) == {("none", "High", "mean_rt"): 0.4,
                                    ("max", "High", "mean_rt"): 0.1}


def test_ground_truth_rejects_duplicates_and_bad_header(tmp_path):
    p = tmp_path / "gt.csv"
    _write(p, [("none", "High", "mean_rt", "0.4", "s")] * 2)
    with pytest.raises(AnalysisError):
        read_ground_truth(p)
    _write(p, [], header=("policy", "metric", "value"))
    with pytest.raises(AnalysisError):
        read_ground_truth(p)
