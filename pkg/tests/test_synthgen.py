import numpy as np
import pytest

from carelab.fci import extract_mask, fci_from_tester
from carelab.citest import OracleTester
from carelab.synthgen import FEATURES, TRUE_MASK, SynthConfig, generate, ground_truth_graph, label_probability


def test_shapes_and_determinism():
    a = generate(SynthConfig(300, "train", 4))
    assert a.names == FEATURES and a.n == 300
    assert a == generate(SynthConfig(300, "train", 4))
    assert a != generate(SynthConfig(300, "train", 5))


def test_train_spur_tracks_label_test_spur_does_not():
    tr = generate(SynthConfig(20000, "train", 0))
    te = generate(SynthConfig(20000, "test", 0))
    shift = tr.column("Xspur")[tr.y == 1].mean() - tr.column("Xspur")[tr.y == 0].mean()
    assert shift == pytest.approx(4.0, abs=0.1)
    assert abs(np.corrcoef(te.column("Xspur"), te.y)[0, 1]) < 0.03
    assert te.column("Xspur").var() == pytest.approx(9.0, rel=0.05)
    # the causal mechanism is shared
    assert np.array_equal(tr.column("X1"), te.column("X1"))
    assert np.array_equal(tr.y, te.y)


def test_label_probability_values():
    assert label_probability(0.0, 0.0) == pytest.approx(0.5)
    assert label_probability(1.0, 1.0) == pytest.approx(1 / (1 + np.exp(-5.0)))


def test_label_rate_matches_mechanism():
    d = generate(SynthConfig(50000, "train", 1))
    expected = label_probability(d.column("X1"), d.column("X2")).mean()
    assert d.y.mean() == pytest.approx(expected, abs=0.01)


def test_oracle_fci_recovers_true_mask():
    names = list(FEATURES) + ["Y"]
    pag = fci_from_tester(OracleTester(graph=ground_truth_graph(), names=names), names)
    assert extract_mask(pag, "Y").as_dict() == TRUE_MASK


def test_bad_config():
    with pytest.raises(ValueError):
        SynthConfig(0)
    with pytest.raises(ValueError):
        SynthConfig(10, "validation")
