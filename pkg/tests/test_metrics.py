import numpy as np
import pytest
from hypothesis import given, strategies as st

from carelab.metrics import Aggregate, aggregate, classification_metrics, lower_median

Y_TRUE = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1]
Y_PROB = [0.9, 0.2, 0.4, 0.7, 0.6, 0.1, 0.8, 0.3, 0.55, 0.45]


def test_matches_sklearn_frozen_values():
    # frozen from sklearn.metrics precision/recall/f1 at threshold 0.5
    r = classification_metrics(Y_TRUE, Y_PROB)
    assert (r.precision, r.recall, r.f1) == pytest.approx((0.8, 0.6666666666666666, 0.7272727272727273))


def test_undefined_metrics_flagged():
    r = classification_metrics([0, 0, 1], [0.1, 0.2, 0.3])
    assert r.precision == 0.0 and "precision_undefined" in r.flags
    r = classification_metrics([0, 0], [0.9, 0.1])
    assert r.recall == 0.0 and r.f1 == 0.0 and "recall_undefined" in r.flags


def test_lower_median():
    assert lower_median([0.5, 0.9]) == 0.5
    assert lower_median([0.3, 0.1, 0.2]) == 0.2


def test_aggregate_and_format():
    reps = [classification_metrics(Y_TRUE, np.asarray(Y_PROB) + s) for s in (-0.1, 0.0, 0.1)]
    agg = aggregate(reps)
    assert agg.n_runs == 3
    assert agg.f1.low <= agg.f1.median <= agg.f1.high
    assert str(Aggregate(0.755, 0.75, 0.7601)) == "0.76 [0.75, 0.76]"
    with pytest.raises(ValueError):
        aggregate([])


@given(st.lists(st.tuples(st.integers(0, 1), st.floats(0, 1)), min_size=1, max_size=40))
def test_bounded(pairs):
    y, p = zip(*pairs)
    r = classification_metrics(y, p)
    for v in (r.precision, r.recall, r.f1):
        assert 0.0 <= v <= 1.0
