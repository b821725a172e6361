"""Shared fixtures and independent oracles.

The oracles here deliberately use brute-force formulations (path enumeration,
power series, exhaustive subset search) so they share no code path with the
implementations they check.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from firecausal import Column, ColumnSchema, Dag, Table


def path_enumeration_d_separated(dag: Dag, x: str, y: str, given) -> bool:
    """Exponential d-separation oracle: enumerate every simple undirected
    path and apply the chain/fork/collider blocking rules directly."""
    given = set(given)

    def descendants_inclusive(node):
        seen = {node}
        stack = [node]
        while stack:
            n = stack.pop()
            for c in dag.children(n):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def neighbors(node):
        return dag.children(node) | dag.parents(node)

    def path_open(path) -> bool:
        for i in range(1, len(path) - 1):
            prev, mid, nxt = path[i - 1], path[i], path[i + 1]
            is_collider = dag.has_edge(prev, mid) and dag.has_edge(nxt, mid)
            if is_collider:
                if not (descendants_inclusive(mid) & given):
                    return False
            else:
                if mid in given:
                    return False
        return True

    def search(path) -> bool:
        node = path[-1]
        if node == y:
            return path_open(path)
        for m in sorted(neighbors(node)):
            if m not in path:
                if search(path + [m]):
                    return True
        return False

    return not search([x])


def exhaustive_backdoor_sets(dag: Dag, treatment: str, outcome: str):
    """All valid backdoor adjustment sets by exhaustive subset search over
    non-descendants, validated with the path-enumeration oracle on the
    treatment-outgoing-edges-removed graph."""
    mutilated = dag
    for c in sorted(dag.children(treatment)):
        mutilated = mutilated.remove_edge(treatment, c)
    banned = dag.descendants(treatment) | {treatment, outcome}
    candidates = sorted(n for n in dag.nodes if n not in banned)
    valid = []
    for size in range(len(candidates) + 1):
        for z in combinations(candidates, size):
            if path_enumeration_d_separated(mutilated, treatment, outcome, z):
                valid.append(z)
    return valid


def random_dag(rng: np.random.Generator, n_nodes: int, edge_prob: float = 0.4) -> Dag:
    """Random DAG: random node permutation, edges only forward in it."""
    names = [f"N{i}" for i in range(n_nodes)]
    order = list(rng.permutation(names))
    edges = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_prob:
                edges.append((order[i], order[j]))
    return Dag(names, edges)


def make_table(columns: dict[str, np.ndarray], outcome: str | None = None) -> Table:
    names = list(columns)
    outcome = outcome if outcome is not None else names[-1]
    schema = ColumnSchema(
        tuple(
            Column(n, "", "outcome" if n == outcome else "input") for n in names
        )
    )
    return Table(schema, np.column_stack([np.asarray(columns[n], float) for n in names]))


@pytest.fixture
def fig3_dag() -> Dag:
    # Four-variable teaching DAG: W -> X, X -> Z, X -> Y, Z -> Y.
    return Dag(["W", "X", "Y", "Z"], [("W", "X"), ("X", "Z"), ("X", "Y"), ("Z", "Y")])
