"""Minimal directed acyclic graph with d-separation queries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class DAG:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]]):
        nodes = tuple(nodes)
        edges = frozenset((str(a), str(b)) for a, b in edges)
        unknown = {v for e in edges for v in e} - set(nodes)
        if unknown:
            raise ValueError(f"edges mention unknown nodes {sorted(unknown)}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        self.topological_order()  # raises on cycles

    def parents(self, v: str) -> set[str]:
        return {a for a, b in self.edges if b == v}

    def children(self, v: str) -> set[str]:
        return {b for a, b in self.edges if a == v}

    def degree(self, v: str) -> int:
        return len(self.parents(v)) + len(self.children(v))

    def ancestors(self, vs: Iterable[str]) -> set[str]:
        """``vs`` together with all of their ancestors."""
        out = set(vs)
        stack = list(out)
        while stack:
            for p in self.parents(stack.pop()):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def topological_order(self) -> list[str]:
        indeg = {v: len(self.parents(v)) for v in self.nodes}
        ready = [v for v in self.nodes if indeg[v] == 0]
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in sorted(self.children(v), key=self.nodes.index):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.nodes):
            raise ValueError("graph has a directed cycle")
        return order

    def d_separated(self, x: str, y: str, given: Iterable[str] = ()) -> bool:
        """Moralized-ancestral-graph test: x and y are d-separated by ``given``
        iff they are disconnected in the moral graph of An({x, y} ∪ given)
        after deleting ``given``."""
        given = set(given)
        if x == y:
            return False
        keep = self.ancestors({x, y} | given)
        adj: dict[str, set[str]] = {v: set() for v in keep}
        for a, b in self.edges:
            if a in keep and b in keep:
                adj[a].add(b)
                adj[b].add(a)
        for v in keep:
            ps = [p for p in self.parents(v) if p in keep]
            for i, p in enumerate(ps):
                for q in ps[i + 1 :]:
                    adj[p].add(q)
                    adj[q].add(p)
        seen, stack = {x}, [x]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w == y:
                    return False
                if w not in seen and w not in given:
                    seen.add(w)
                    stack.append(w)
        return True
