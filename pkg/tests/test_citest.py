import numpy as np
import pytest
from scipy import stats

from carelab.citest import (
    OracleTester,
    PermutationConfig,
    fisher_z,
    g_squared,
    make_tester,
    predictive_permutation_test,
)
from carelab.dag import DAG


def fixed_gaussian():
    rng = np.random.default_rng(7)
    D = rng.standard_normal((50, 3))
    D[:, 2] += D[:, 0]
    D[:, 1] += 0.5 * D[:, 2]
    return D


def test_fisher_z_matches_precision_matrix_oracle():
    # frozen from the inverse-covariance partial correlation
    res = fisher_z(fixed_gaussian(), 0, 1, [2])
    assert res.statistic == pytest.approx(1.15910294653206, rel=1e-10)
    assert res.pvalue == pytest.approx(0.2464142249845559, rel=1e-10)
    assert fisher_z(fixed_gaussian(), 0, 1).pvalue == pytest.approx(0.000763029413240271, rel=1e-8)


def test_fisher_z_symmetric_and_singular():
    D = fixed_gaussian()
    assert fisher_z(D, 0, 1, [2]) == fisher_z(D, 1, 0, [2])
    Dd = np.column_stack([D, D[:, 2]])
    res = fisher_z(Dd, 0, 1, [2, 3])
    assert res.pvalue == 0.0 and res.flag == "singular"


def test_g_squared_matches_scipy_log_likelihood():
    table = [[30, 10], [12, 28]]
    rows = [[a, b] for a in range(2) for b in range(2) for _ in range(table[a][b])]
    res = g_squared(np.array(rows, dtype=float), 0, 1)
    # frozen from scipy.stats.chi2_contingency(lambda_="log-likelihood")
    assert res.statistic == pytest.approx(16.84750973891665, rel=1e-12)
    assert res.pvalue == pytest.approx(4.0506443841202555e-05, rel=1e-9)


def test_g_squared_perfect_dependence_and_sparse_flag():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 2, 100).astype(float)
    assert g_squared(np.column_stack([x, x]), 0, 1).pvalue < 1e-6
    wide = rng.integers(0, 4, size=(30, 5)).astype(float)
    res = g_squared(wide, 0, 1, [2, 3, 4])
    assert res.pvalue == 1.0 and res.flag == "untestable"


@pytest.mark.parametrize("kind", ["fisher_z", "g_squared"])
def test_null_pvalues_are_uniform(kind):
    rng = np.random.default_rng(2024)
    pvals = []
    for _ in range(300):
        if kind == "fisher_z":
            z = rng.standard_normal(200)
            D = np.column_stack([z + rng.standard_normal(200), z + rng.standard_normal(200), z])
            pvals.append(fisher_z(D, 0, 1, [2]).pvalue)
        else:
            z = rng.integers(0, 2, 400)
            a = (rng.random(400) < 0.3 + 0.4 * z).astype(float)
            b = (rng.random(400) < 0.6 - 0.3 * z).astype(float)
            pvals.append(g_squared(np.column_stack([a, b, z]), 0, 1, [2]).pvalue)
    assert stats.kstest(pvals, "uniform").pvalue > 0.01


def test_permutation_pvalues_are_uniform_under_null():
    rng = np.random.default_rng(99)
    pvals = []
    for r in range(120):
        D = rng.standard_normal((60, 2))
        pvals.append(predictive_permutation_test(D, 0, 1, (), PermutationConfig(49, 5, seed=r)).pvalue)
    # p-values live on the grid {1/50, ..., 1}; compare against the discrete uniform
    grid = np.arange(1, 51) / 50
    cdf = lambda x: np.floor(np.asarray(x) * 50 + 1e-9) / 50  # noqa: E731
    assert stats.kstest(pvals, cdf).pvalue > 0.01
    assert set(np.round(np.array(pvals) * 50)).issubset(set(np.round(grid * 50)))


def test_permutation_detects_dependence():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(150)
    D = np.column_stack([x, np.sin(2 * x) + 0.1 * rng.standard_normal(150)])
    res = predictive_permutation_test(D, 0, 1, (), PermutationConfig(99, 10, 0))
    assert res.pvalue == pytest.approx(0.01)


def test_oracle_tester_and_cache():
    g = DAG(["a", "b", "c"], [("a", "c"), ("b", "c")])
    t = OracleTester(graph=g, names=["a", "b", "c"])
    assert t(0, 1) == 1.0 and t(0, 1, [2]) == 0.0
    assert t(1, 0, [2]) == 0.0
    assert len(t.cache) == 2


def test_make_tester_rejects_unknown():
    with pytest.raises(ValueError):
        make_tester("bogus", np.zeros((5, 2)), [False, False])
