import itertools

import numpy as np
import pytest
from scipy import stats

from carelab.bayesnet import BIFError, ancestral_sample, binarize_target, parse_bif, read_bif
from conftest import alarm_path

# Hand-computed: P(either=yes) = 1 - (1 - 0.0104)(1 - 0.055) = 0.064828,
# P(dysp=yes) = 0.064828 * 0.8 + 0.935172 * 0.1.
P_DYSP_YES = 0.1453796


def exact_marginals(net):
    """Brute-force joint enumeration."""
    cards = [len(lv) for lv in net.levels]
    marg = [np.zeros(c) for c in cards]
    for assign in itertools.product(*[range(c) for c in cards]):
        p = 1.0
        for v, table in enumerate(net.cpt):
            idx = tuple(assign[q] for q in net.parents[v]) + (assign[v],)
            p *= table[idx]
        for v in range(len(cards)):
            marg[v][assign[v]] += p
    return marg


def test_parse_structure(asia_text):
    net = parse_bif(asia_text)
    assert net.names == ("asia", "tub", "smoke", "lung", "either", "dysp")
    assert [net.names[p] for p in net.parents[net.index("either")]] == ["lung", "tub"]
    # table rows are indexed by parent levels in declaration order
    either = net.cpt[net.index("either")]
    assert either[1, 1].tolist() == [0.0, 1.0]
    assert either[0, 1].tolist() == [1.0, 0.0]


def test_exact_marginal_oracle(asia_text):
    net = parse_bif(asia_text)
    marg = exact_marginals(net)
    assert marg[net.index("dysp")][0] == pytest.approx(P_DYSP_YES, abs=1e-12)


def test_sampler_matches_exact_marginals(asia_text):
    net = parse_bif(asia_text)
    n = 20000
    data = ancestral_sample(net, n, seed=3)
    marg = exact_marginals(net)
    for v, name in enumerate(net.names):
        counts = np.bincount(data.column(name).astype(int), minlength=len(net.levels[v]))
        expected = marg[v] * n
        keep = expected > 0
        assert counts[~keep].sum() == 0
        if keep.sum() < 2:
            continue
        pval = stats.chisquare(counts[keep], expected[keep]).pvalue
        assert pval > 0.01, name


def test_sampler_is_seeded(asia_text):
    net = parse_bif(asia_text)
    assert ancestral_sample(net, 50, 1) == ancestral_sample(net, 50, 1)
    assert ancestral_sample(net, 50, 1) != ancestral_sample(net, 50, 2)


def test_binarize_target(asia_text):
    data = ancestral_sample(parse_bif(asia_text), 200, 0)
    lab = binarize_target(data, "dysp", ["yes"])
    assert "dysp" not in lab.names and lab.target_name == "dysp"
    assert np.array_equal(lab.y, (data.column("dysp") == 0).astype(float))
    with pytest.raises(ValueError, match="unknown level"):
        binarize_target(data, "dysp", ["maybe"])


def test_row_sum_error_names_line(asia_text):
    bad = asia_text.replace("(yes) 0.8, 0.2;", "(yes) 0.8, 0.3;")
    with pytest.raises(BIFError, match="sums to 1.1"):
        parse_bif(bad)


def test_missing_parent_combination(asia_text):
    bad = asia_text.replace("  (no, no) 0.0, 1.0;\n", "")
    with pytest.raises(BIFError, match="missing"):
        parse_bif(bad)


def test_unknown_variable_rejected(asia_text):
    bad = asia_text.replace("probability ( dysp | either )", "probability ( dysp | ghost )")
    with pytest.raises(BIFError):
        parse_bif(bad)


def test_small_rounding_is_renormalized(asia_text):
    net = parse_bif(asia_text.replace("table 0.01, 0.99;", "table 0.01, 0.98995;"))
    assert net.cpt[0].sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.skipif(alarm_path() is None, reason="set CARELAB_ALARM_BIF to the ALARM network file")
def test_alarm_parses():
    net = read_bif(alarm_path())
    assert len(net.names) == 37
    assert {net.names[p] for p in net.parents[net.index("BP")]} == {"CO", "TPR"}
