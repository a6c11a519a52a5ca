import itertools

import pytest
from hypothesis import given, settings, strategies as st

from carelab.dag import DAG


def brute_force_d_separated(dag: DAG, x, y, Z):
    """Enumerate every simple path in the skeleton and check blocking."""
    Z = set(Z)
    anc_z = dag.ancestors(Z) | Z if Z else set()
    adj = {v: dag.parents(v) | dag.children(v) for v in dag.nodes}

    def paths(cur, seen):
        if cur == y:
            yield list(seen)
            return
        for nxt in adj[cur]:
            if nxt not in seen:
                yield from paths(nxt, seen + [nxt])

    for path in paths(x, [x]):
        open_path = True
        for a, b, c in zip(path, path[1:], path[2:]):
            collider = a in dag.parents(b) and c in dag.parents(b)
            if collider and b not in anc_z:
                open_path = False
            if not collider and b in Z:
                open_path = False
        if open_path:
            return False
    return True


def test_cycle_rejected():
    with pytest.raises(ValueError):
        DAG("abc", [("a", "b"), ("b", "c"), ("c", "a")])


def test_textbook_cases():
    g = DAG("abcd", [("a", "c"), ("b", "c"), ("c", "d")])
    assert g.d_separated("a", "b")
    assert not g.d_separated("a", "b", ["c"])
    assert not g.d_separated("a", "b", ["d"])  # descendant of the collider
    assert g.d_separated("a", "d", ["c"])


def test_topological_order_respects_edges():
    g = DAG("dcba", [("a", "b"), ("c", "b")])
    order = g.topological_order()
    assert order.index("a") < order.index("b") and order.index("c") < order.index("b")


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_d_separation_matches_path_enumeration(data):
    n = data.draw(st.integers(3, 6))
    nodes = [f"v{i}" for i in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    present = data.draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [(nodes[i], nodes[j]) for (i, j), on in zip(pairs, present) if on]
    g = DAG(nodes, edges)
    x, y = data.draw(st.sampled_from([(nodes[i], nodes[j]) for i, j in pairs]))
    rest = [v for v in nodes if v not in (x, y)]
    Z = [v for v in rest if data.draw(st.booleans())]
    assert g.d_separated(x, y, Z) == brute_force_d_separated(g, x, y, Z)
