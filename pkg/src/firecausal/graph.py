"""Immutable DAGs over named variables: construction, topological order,
d-separation queries, domain-knowledge constraints, DOT/JSON export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

__all__ = [
    "Dag",
    "ConstraintSet",
    "GraphError",
    "CycleError",
    "from_edge_list",
    "constraints_from_json",
]


class GraphError(ValueError):
    """Unknown nodes, duplicate edges, inconsistent constraints."""


class CycleError(GraphError):
    """Raised when an operation would create a directed cycle."""

    def __init__(self, path: list[str]):
        self.path = list(path)
        super().__init__("cycle: " + " -> ".join(self.path))


class Dag:
    """Directed acyclic graph with optional per-edge weights.

    Immutable: mutating operations return new graphs. Node and edge order in
    serialized output is lexicographic for byte-reproducibility.
    """

    def __init__(
        self,
        nodes: Iterable[str],
        edges: Iterable[tuple[str, str]] = (),
        weights: Optional[Mapping[tuple[str, str], float]] = None,
    ):
        self.nodes: tuple[str, ...] = tuple(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphError("duplicate node names")
        node_set = set(self.nodes)
        edge_list = [tuple(e) for e in edges]
        if len(set(edge_list)) != len(edge_list):
            raise GraphError("duplicate edges")
        for u, v in edge_list:
            if u == v:
                raise GraphError(f"self-loop on {u!r}")
            if u not in node_set or v not in node_set:
                raise GraphError(f"edge {u!r}->{v!r} references an undeclared node")
        self.edges: frozenset[tuple[str, str]] = frozenset(edge_list)
        self.weights: dict[tuple[str, str], float] = {
            e: float(w) for e, w in (weights or {}).items() if e in self.edges
        }
        self._children: dict[str, set[str]] = {n: set() for n in self.nodes}
        self._parents: dict[str, set[str]] = {n: set() for n in self.nodes}
        for u, v in self.edges:
            self._children[u].add(v)
            self._parents[v].add(u)
        cycle = self._find_cycle()
        if cycle is not None:
            raise CycleError(cycle)

    def _find_cycle(self) -> Optional[list[str]]:
        color = {n: 0 for n in self.nodes}  # 0 unvisited, 1 on stack, 2 done
        stack_path: list[str] = []

        def visit(n: str) -> Optional[list[str]]:
            color[n] = 1
            stack_path.append(n)
            for m in sorted(self._children[n]):
                if color[m] == 1:
                    i = stack_path.index(m)
                    return stack_path[i:] + [m]
                if color[m] == 0:
                    found = visit(m)
                    if found:
                        return found
            stack_path.pop()
            color[n] = 2
            return None

        for n in self.nodes:
            if color[n] == 0:
                found = visit(n)
                if found:
                    return found
        return None

    def parents(self, node: str) -> set[str]:
        self._require(node)
        return set(self._parents[node])

    def children(self, node: str) -> set[str]:
        self._require(node)
        return set(self._children[node])

    def descendants(self, node: str) -> set[str]:
        """All nodes reachable from `node` by directed edges (exclusive)."""
        self._require(node)
        seen: set[str] = set()
        frontier = [node]
        while frontier:
            n = frontier.pop()
            for m in self._children[n]:
                if m not in seen:
                    seen.add(m)
                    frontier.append(m)
        return seen

    def _require(self, *names: str) -> None:
        for name in names:
            if name not in self._children:
                raise GraphError(f"unknown node {name!r}")

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self.edges

    def add_edge(self, u: str, v: str, weight: Optional[float] = None) -> "Dag":
        self._require(u, v)
        if (u, v) in self.edges:
            raise GraphError(f"edge {u!r}->{v!r} already present")
        weights = dict(self.weights)
        if weight is not None:
            weights[(u, v)] = weight
        # Dag constructor re-checks acyclicity and raises CycleError with the path.
        return Dag(self.nodes, set(self.edges) | {(u, v)}, weights)

    def remove_edge(self, u: str, v: str) -> "Dag":
        if (u, v) not in self.edges:
            raise GraphError(f"edge {u!r}->{v!r} not present")
        weights = {e: w for e, w in self.weights.items() if e != (u, v)}
        return Dag(self.nodes, set(self.edges) - {(u, v)}, weights)

    def topological_order(self) -> list[str]:
        """Kahn's algorithm with lexicographic tie-breaking."""
        indeg = {n: len(self._parents[n]) for n in self.nodes}
        ready = sorted(n for n in self.nodes if indeg[n] == 0)
        order: list[str] = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            changed = False
            for m in self._children[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    ready.append(m)
                    changed = True
            if changed:
                ready.sort()
        return order

    def d_separated(self, x: str, y: str, given: Iterable[str] = ()) -> bool:
        """True iff every path between x and y is blocked given the
        conditioning set (reachability formulation of d-separation)."""
        given = set(given)
        self._require(x, y, *given)
        if x == y:
            raise GraphError("x and y must differ")
        if x in given or y in given:
            raise GraphError("x and y must not be in the conditioning set")

        # Ancestors of the conditioning set open colliders.
        anc_given: set[str] = set(given)
        frontier = list(given)
        while frontier:
            n = frontier.pop()
            for p in self._parents[n]:
                if p not in anc_given:
                    anc_given.add(p)
                    frontier.append(p)

        # Traverse (node, direction) states; direction "up" means the node was
        # entered against an edge (from a child), "down" along an edge.
        visited: set[tuple[str, str]] = set()
        frontier2: list[tuple[str, str]] = [(x, "up")]
        while frontier2:
            node, direction = frontier2.pop()
            if (node, direction) in visited:
                continue
            visited.add((node, direction))
            if node == y and node not in given:
                return False
            if direction == "up" and node not in given:
                for p in self._parents[node]:
                    frontier2.append((p, "up"))
                for c in self._children[node]:
                    frontier2.append((c, "down"))
            elif direction == "down":
                if node not in given:
                    for c in self._children[node]:
                        frontier2.append((c, "down"))
                if node in anc_given:
                    for p in self._parents[node]:
                        frontier2.append((p, "up"))
        return True

    def to_dot(self) -> str:
        lines = ["digraph {"]
        for n in sorted(self.nodes):
            lines.append(f'  "{n}";')
        for u, v in sorted(self.edges):
            if (u, v) in self.weights:
                lines.append(f'  "{u}" -> "{v}" [label="{self.weights[(u, v)]:.4g}"];')
            else:
                lines.append(f'  "{u}" -> "{v}";')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "nodes": sorted(self.nodes),
            "edges": [
                {"from": u, "to": v, "weight": self.weights.get((u, v))}
                for u, v in sorted(self.edges)
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Dag":
        payload = json.loads(text)
        edges = [(e["from"], e["to"]) for e in payload["edges"]]
        weights = {
            (e["from"], e["to"]): e["weight"]
            for e in payload["edges"]
            if e.get("weight") is not None
        }
        return cls(payload["nodes"], edges, weights)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dag)
            and set(self.nodes) == set(other.nodes)
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"Dag({len(self.nodes)} nodes, {len(self.edges)} edges)"


def from_edge_list(edges: Iterable[tuple[str, str]], extra_nodes: Iterable[str] = ()) -> Dag:
    edges = list(edges)
    nodes = sorted({n for e in edges for n in e} | set(extra_nodes))
    return Dag(nodes, edges)


@dataclass(frozen=True)
class ConstraintSet:
    required_edges: frozenset[tuple[str, str]] = field(default_factory=frozenset)
    forbidden_edges: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "required_edges", frozenset(map(tuple, self.required_edges)))
        object.__setattr__(self, "forbidden_edges", frozenset(map(tuple, self.forbidden_edges)))
        overlap = self.required_edges & self.forbidden_edges
        if overlap:
            raise GraphError(f"edges both required and forbidden: {sorted(overlap)}")
        # Required edges alone must not force a cycle.
        nodes = sorted({n for e in self.required_edges for n in e})
        Dag(nodes, self.required_edges)

    @classmethod
    def empty(cls) -> "ConstraintSet":
        return cls()


def constraints_from_json(text: str) -> ConstraintSet:
    """Parse `{"required": [[from, to], ...], "forbidden": [[from, to], ...]}`."""
    payload = json.loads(text)
    return ConstraintSet(
        required_edges=frozenset(tuple(e) for e in payload.get("required", [])),
        forbidden_edges=frozenset(tuple(e) for e in payload.get("forbidden", [])),
    )


def apply_constraints(dag: Dag, constraints: ConstraintSet) -> Dag:
    """Remove forbidden edges, then add required ones (lexicographic order).

    Raises CycleError if the required set cannot be added acyclically.
    """
    edges = {e for e in dag.edges if e not in constraints.forbidden_edges}
    weights = {e: w for e, w in dag.weights.items() if e in edges}
    new_nodes = sorted(
        {n for e in constraints.required_edges for n in e} - set(dag.nodes)
    )
    result = Dag(tuple(dag.nodes) + tuple(new_nodes), edges, weights)
    for u, v in sorted(constraints.required_edges):
        if not result.has_edge(u, v):
            result = result.add_edge(u, v)
    return result
