import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from meshca.evaluation import (CPPMS, NPM_LABELS, EvaluationError, Relation, build_report,
                               degree_of_confidence, performance_relationship, prediction_error,
                               spearman, wrong_pairs)

from .oracles import inversions

SCHEMES = ["BFS", "MIS", "EC", "LP", "EIZM", "OIS"]


def test_relationship():
    assert performance_relationship(10, 5, True) is Relation.A_BETTER
    assert performance_relationship(10, 5, False) is Relation.B_BETTER
    assert performance_relationship(10, 10.4, True, eps=0.5) is Relation.TIE
    assert performance_relationship(10, 10, True) is Relation.TIE
    with pytest.raises(EvaluationError):
        performance_relationship(1, 2, True, eps=-1)


def test_pe_small_examples():
    # CA a has lower metric and higher throughput: prediction right
    assert prediction_error({"a": 1, "b": 2}, {"a": 20, "b": 10}, True) == 0
    assert prediction_error({"a": 1, "b": 2}, {"a": 10, "b": 20}, True) == 1
    # lower DFC is better
    assert prediction_error({"a": 1, "b": 2}, {"a": 0, "b": 3}, False) == 0
    # tie on one side only is wrong, on both sides right
    assert prediction_error({"a": 1, "b": 1}, {"a": 10, "b": 20}, True) == 1
    assert prediction_error({"a": 1, "b": 2}, {"a": 10, "b": 10}, True) == 1
    assert prediction_error({"a": 1, "b": 1}, {"a": 10, "b": 10}, True) == 0
    assert wrong_pairs({"a": 1, "b": 2, "c": 3}, {"a": 3, "b": 1, "c": 2}, True) == [("b", "c")]


def test_pe_errors():
    with pytest.raises(EvaluationError, match="mismatch"):
        prediction_error({"a": 1, "b": 2}, {"a": 1, "c": 2}, True)
    with pytest.raises(EvaluationError):
        prediction_error({"a": 1}, {"a": 1}, True)


@pytest.mark.parametrize("pe,doc", [(0, 100.0), (1, 93.33), (2, 86.67), (3, 80.0), (15, 0.0)])
def test_doc_values(pe, doc):
    assert degree_of_confidence(pe, 6) == doc


def test_doc_errors():
    with pytest.raises(EvaluationError):
        degree_of_confidence(16, 6)
    with pytest.raises(EvaluationError):
        degree_of_confidence(-1, 6)
    with pytest.raises(EvaluationError):
        degree_of_confidence(0, 1)


def _ranked_inputs():
    tput = [60, 50, 40, 30, 20, 10]
    dfc = [1, 2, 3, 4, 6, 5]
    cppm = {"TID": [2, 1, 3, 4, 5, 6], "CDAL": [2, 1, 4, 3, 6, 5], "CXLS": [1, 2, 3, 4, 5, 6]}
    metrics = {s: {c: cppm[c][i] for c in CPPMS} for i, s in enumerate(SCHEMES)}
    npms = {s: {"throughput": tput[i], "pdr": tput[i], "dfc": dfc[i], "eed": dfc[i] * 1000}
            for i, s in enumerate(SCHEMES)}
    return metrics, npms


def test_doc_grid_from_known_rankings():
    report = build_report(*_ranked_inputs(), npm_eps_fraction=0.0)
    expected = {"TID": [93.33, 86.67, 93.33, 86.67],
                "CDAL": [80.0, 86.67, 80.0, 86.67],
                "CXLS": [100.0, 93.33, 100.0, 93.33]}
    for c in CPPMS:
        assert [report.doc[(c, n)] for n in NPM_LABELS] == expected[c]
    rows = report.grid_csv("doc").splitlines()
    assert rows[0] == "npm,TID,CDAL,CXLS"
    assert rows[1] == "Throughput,93.33,80.00,100.00"
    assert report.grid_csv("pe").splitlines()[2] == "DFC,2,2,1"
    assert "Degree of Confidence" in report.doc_table()


def test_series_sorted_and_complete():
    report = build_report(*_ranked_inputs())
    assert len(report.series) == 12
    lines = report.series_csv("TID", "eed").splitlines()
    assert lines[0] == "metric_value,npm_value,scheme"
    assert lines[1:] == ["1,2000,MIS", "2,1000,BFS", "3,3000,EC", "4,4000,LP", "5,6000,EIZM", "6,5000,OIS"]


def test_build_report_errors():
    metrics, npms = _ranked_inputs()
    with pytest.raises(EvaluationError, match="schemes differ"):
        build_report(metrics, {k: v for k, v in npms.items() if k != "LP"})
    del metrics["LP"]["CDAL"]
    with pytest.raises(EvaluationError, match="missing"):
        build_report(metrics, npms)


def test_two_cas_doc_is_binary():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = rng.integers(0, 4, (2, 7))
        metrics = {s: dict(zip(CPPMS, map(float, v[i, :3]))) for i, s in enumerate("AB")}
        npms = {s: dict(zip(NPM_LABELS, map(float, v[i, 3:]))) for i, s in enumerate("AB")}
        assert set(build_report(metrics, npms).doc.values()) <= {0.0, 100.0}


@settings(max_examples=200, deadline=None)
@given(st.permutations(range(6)), st.permutations(range(6)))
def test_pe_counts_inversions(pred, obs):
    cppm = dict(zip(SCHEMES, pred))
    npm = dict(zip(SCHEMES, obs))
    assert prediction_error(cppm, npm, True) == inversions(pred, obs)
    # flipping NPM orientation flips every pair
    assert prediction_error(cppm, npm, False) == 15 - inversions(pred, obs)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=6, max_size=6),
       st.lists(st.integers(-50, 50), min_size=6, max_size=6),
       st.permutations(range(6)))
def test_pe_invariant_under_monotone_maps_and_order(pred, obs, order):
    cppm = dict(zip(SCHEMES, pred))
    npm = dict(zip(SCHEMES, obs))
    pe = prediction_error(cppm, npm, True)
    assert prediction_error({k: 3 * v + 7 for k, v in cppm.items()},
                            {k: math.exp(v / 10) for k, v in npm.items()}, True) == pe
    shuffled = [SCHEMES[i] for i in order]
    assert prediction_error({k: cppm[k] for k in shuffled}, {k: npm[k] for k in shuffled}, True) == pe
    assert 0 <= pe <= 15


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=3, max_size=10).flatmap(
    lambda x: st.tuples(st.just(x), st.lists(st.integers(0, 5), min_size=len(x), max_size=len(x)))))
def test_spearman_matches_scipy(xy):
    x, y = xy
    ours = spearman(x, y)
    if len(set(x)) == 1 or len(set(y)) == 1:
        assert math.isnan(ours)
    else:
        assert ours == pytest.approx(spearmanr(x, y).statistic, abs=1e-12)


def test_spearman_errors():
    with pytest.raises(EvaluationError):
        spearman([1], [1])
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1)
