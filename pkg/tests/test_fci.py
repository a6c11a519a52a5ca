import numpy as np
import pytest

from carelab.citest import OracleTester
from carelab.dag import DAG
from carelab.fci import (
    ARROW,
    CIRCLE,
    PAG,
    TAIL,
    CausalMask,
    EdgeMark,
    extract_mask,
    fci_from_tester,
    run_fci,
)
from carelab.synthgen import TRUE_MASK, SynthConfig, generate

# Oracle PAGs frozen from causal-learn's FCI (d-separation test, rules R5-R10
# disabled to match the rule set implemented here). Node ids >= n_obs are
# latent. marks[i][j] is the mark at the j end of edge i-j
# (0 none, 1 tail, 2 arrow, 3 circle).
FROZEN = [
    # bidirected edges
    (5, 6, [(3, 4), (1, 2), (1, 0), (5, 4), (5, 0)],
     [[0, 3, 0, 0, 2], [2, 0, 3, 0, 0], [0, 3, 0, 0, 0], [0, 0, 0, 0, 2], [2, 0, 0, 3, 0]]),
    (6, 7, [(3, 2), (3, 4), (3, 5), (6, 1), (6, 4), (6, 5), (2, 0), (2, 1), (0, 1), (0, 4)],
     [[0, 2, 3, 0, 2, 0], [3, 0, 3, 0, 2, 2], [3, 2, 0, 3, 0, 0], [0, 0, 3, 0, 2, 2], [3, 2, 0, 3, 0, 3],
      [0, 2, 0, 3, 2, 0]]),
    (6, 8, [(7, 5), (7, 3), (7, 1), (6, 2), (2, 5), (2, 0), (4, 0), (0, 1)],
     [[0, 2, 3, 0, 3, 0], [1, 0, 0, 3, 0, 2], [2, 0, 0, 0, 0, 2], [0, 2, 0, 0, 0, 2], [2, 0, 0, 0, 0, 0],
      [0, 2, 3, 3, 0, 0]]),
    # discriminating-path rule fires
    (6, 6, [(5, 4), (5, 2), (0, 4), (0, 2), (0, 3), (0, 1), (4, 2), (2, 3), (3, 1)],
     [[0, 2, 2, 2, 2, 0], [1, 0, 0, 1, 0, 0], [3, 0, 0, 2, 3, 3], [1, 2, 1, 0, 0, 0], [3, 0, 3, 0, 0, 3],
      [0, 0, 2, 0, 2, 0]]),
    (5, 5, [(3, 2), (3, 1), (2, 0), (1, 0), (1, 4), (0, 4)],
     [[0, 3, 3, 0, 2], [2, 0, 0, 3, 2], [2, 0, 0, 3, 0], [0, 3, 3, 0, 0], [1, 1, 0, 0, 0]]),
    (6, 7, [(3, 4), (3, 1), (3, 2), (4, 5), (6, 5), (1, 0), (5, 0), (5, 2), (0, 2)],
     [[0, 3, 2, 0, 0, 3], [2, 0, 0, 3, 0, 0], [1, 0, 0, 3, 0, 1], [0, 3, 2, 0, 3, 0], [0, 0, 0, 3, 0, 3],
      [2, 0, 2, 0, 3, 0]]),
    # tails from R1/R2
    (4, 6, [(3, 1), (2, 1), (1, 0)], [[0, 1, 0, 0], [2, 0, 3, 3], [0, 2, 0, 0], [0, 2, 0, 0]]),
    (6, 7, [(5, 0), (5, 2), (5, 1), (4, 0), (4, 1), (0, 3)],
     [[0, 0, 0, 2, 3, 3], [0, 0, 0, 0, 3, 3], [0, 0, 0, 0, 0, 3], [1, 0, 0, 0, 0, 0], [2, 2, 0, 0, 0, 0],
      [2, 2, 3, 0, 0, 0]]),
    (6, 7, [(1, 0), (6, 4), (6, 3), (4, 3), (0, 3), (3, 2)],
     [[0, 3, 0, 2, 0, 0], [3, 0, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0], [3, 0, 2, 0, 3, 0], [0, 0, 0, 2, 0, 0],
      [0, 0, 0, 0, 0, 0]]),
]


def oracle_pag(n_obs, n_total, edges, max_depth=10):
    names = [f"v{i}" for i in range(n_total)]
    dag = DAG(names, [(names[a], names[b]) for a, b in edges])
    return fci_from_tester(OracleTester(graph=dag, names=names[:n_obs]), names[:n_obs], 0.05, max_depth)


@pytest.mark.parametrize("n_obs,n_total,edges,marks", FROZEN)
def test_oracle_pags_match_reference(n_obs, n_total, edges, marks):
    assert oracle_pag(n_obs, n_total, edges).marks.tolist() == marks


def test_collider_and_chain():
    pag = oracle_pag(3, 3, [(0, 2), (1, 2)])
    assert pag.edge_string("v0", "v2") == "v0 o-> v2"
    assert pag.edge_string("v1", "v2") == "v1 o-> v2"
    chain = oracle_pag(3, 3, [(0, 1), (1, 2)])
    assert chain.marks.tolist() == [[0, 3, 0], [3, 0, 3], [0, 3, 0]]


def test_rule1_orients_away_from_collider():
    # v0 -> v2 <- v1, v2 -> v3: R1 turns v2 o-o v3 into v2 --> v3
    pag = oracle_pag(4, 4, [(0, 2), (1, 2), (2, 3)])
    assert pag.mark("v2", "v3") == ARROW and pag.mark("v3", "v2") == TAIL


def test_latent_confounder_gives_bidirected_edge():
    # v0 -> v1 <- L -> v2 <- v3 with L latent
    pag = oracle_pag(4, 5, [(0, 1), (4, 1), (4, 2), (3, 2)])
    assert pag.edge_string("v1", "v2") == "v1 <-> v2"


def test_single_edge_stays_circles():
    pag = oracle_pag(2, 2, [(0, 1)])
    assert pag.mark("v0", "v1") == CIRCLE and pag.mark("v1", "v0") == CIRCLE


def test_mask_rule():
    names = ("a", "b", "c", "d", "y")
    M = np.zeros((5, 5), dtype=int)

    def edge(i, j, at_i, at_j):
        M[j, i], M[i, j] = at_i, at_j

    edge(0, 4, CIRCLE, ARROW)  # a o-> y
    edge(1, 4, ARROW, ARROW)   # b <-> y
    edge(2, 4, ARROW, TAIL)    # c <-- y
    edge(3, 4, CIRCLE, CIRCLE)  # d o-o y
    mask = extract_mask(PAG(names, M), "y")
    assert mask.as_dict() == {"a": 1, "b": 1, "c": 0, "d": 0}


def test_pag_json_round_trip_and_validation():
    pag = oracle_pag(5, 6, FROZEN[0][2])
    assert PAG.from_json(pag.to_json()) == pag
    with pytest.raises(ValueError):
        PAG(("a", "b"), [[0, 2], [0, 0]])
    assert CausalMask.from_json({"a": 1, "b": 0}).values == (1, 0)


def test_sample_fci_recovers_synthetic_mask():
    data = generate(SynthConfig(1000, "train", 0))
    pag = run_fci(data, "fisher_z", 0.1)
    assert extract_mask(pag, "Y").as_dict() == TRUE_MASK
    assert pag.mark("Y", "Xspur") == ARROW and pag.mark("Xspur", "Y") == TAIL


def test_deterministic():
    data = generate(SynthConfig(300, "train", 2))
    assert run_fci(data, "fisher_z") == run_fci(data, "fisher_z")


def test_edge_mark_names():
    assert [m.name for m in EdgeMark] == ["NONE", "TAIL", "ARROW", "CIRCLE"]
