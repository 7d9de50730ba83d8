"""Heteroclinic connection graph from Morse indices and zero numbers.

Works on ``SturmData`` alone (a-values, Morse vector, zero-number matrix),
so synthetic data can be fed in directly. Node ids are 1-based curve
indices; an edge (s, t) means a heteroclinic orbit from e_s to e_t.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from graphlib import CycleError, TopologicalSorter

from .errors import InconsistencyError, InvalidParameterError


class Blocking(str, Enum):
    NONE = "none"
    MORSE = "morse"
    ZERO_NUMBER = "zero_number"


def _a(obj) -> float:
    return float(getattr(obj, "a", obj))


def is_between(star, lo, hi) -> bool:
    """True iff star(0) lies strictly between lo(0) and hi(0)."""
    s, l, h = _a(star), _a(lo), _a(hi)
    return l < s < h or l > s > h


def _between_ids(j: int, k: int, data):
    return [s for s in range(1, data.n + 1) if s not in (j, k) and is_between(data.a[s - 1], data.a[j - 1], data.a[k - 1])]


def adjacent(j: int, k: int, data, eqs=None) -> bool:
    """No equilibrium between e_j and e_k at x=0 has z(j,*) = z(j,k) = z(k,*)."""
    if j == k:
        raise InvalidParameterError("adjacency needs two distinct equilibria")
    zjk = data.z(j, k)
    return not any(data.z(j, s) == zjk == data.z(k, s) for s in _between_ids(j, k, data))


def blocked(source: int, target: int, data, eqs=None) -> Blocking:
    """Blocking verdict for a prospective heteroclinic source -> target.

    The caller is responsible for restricting to i(source) = i(target) + 1.
    """
    if source == target:
        raise InvalidParameterError("blocking needs two distinct equilibria")
    if data.z(source, target) != data.i(target):
        return Blocking.MORSE
    if not adjacent(source, target, data):
        return Blocking.ZERO_NUMBER
    return Blocking.NONE


@dataclass
class ConnectionGraph:
    nodes: tuple
    morse: dict
    edges: dict  # (s, t) -> "adjacency" | "cascade"
    hasse_edges: frozenset
    witnesses: dict = field(default_factory=dict)  # (s, t) -> hasse path [s, ..., t]

    def successors(self, s: int) -> set:
        return {t for (u, t) in self.edges if u == s}

    def sinks(self) -> list:
        return [v for v in self.nodes if not self.successors(v)]

    def is_dag(self) -> bool:
        ts = TopologicalSorter({v: set() for v in self.nodes})
        for s, t in self.edges:
            ts.add(t, s)
        try:
            tuple(ts.static_order())
        except CycleError:
            return False
        return True

    def is_transitive(self) -> bool:
        E = set(self.edges)
        return all((a, c) in E for (a, b) in E for (b2, c) in E if b == b2)

    def gradient_ok(self) -> bool:
        return all(self.morse[s] > self.morse[t] for s, t in self.edges)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": v, "morse": self.morse[v]} for v in self.nodes],
            "edges": [
                {
                    "source": s,
                    "target": t,
                    "provenance": self.edges[(s, t)],
                    "hasse": (s, t) in self.hasse_edges,
                    "witness": self.witnesses.get((s, t), [s, t]),
                }
                for (s, t) in sorted(self.edges)
            ],
            "adjacency": {str(v): sorted(self.successors(v)) for v in self.nodes},
        }

    def to_dot(self, name: str = "sturm_attractor") -> str:
        lines = [f"digraph {name} {{", "  rankdir=TB;"]
        for v in self.nodes:
            lines.append(f'  e{v} [label="e{v} [i={self.morse[v]}]"];')
        for s, t in sorted(self.edges):
            style = "solid" if (s, t) in self.hasse_edges else "dashed"
            lines.append(f"  e{s} -> e{t} [style={style}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def transitive_closure(nodes, edges) -> dict:
    """Reachability pairs with one witness path per pair."""
    succ = {v: sorted(t for (s, t) in edges if s == v) for v in nodes}
    paths = {}
    for root in nodes:
        stack = [(root, [root])]
        seen = {root}
        while stack:
            v, path = stack.pop()
            for w in succ[v]:
                if w not in seen:
                    seen.add(w)
                    paths[(root, w)] = path + [w]
                    stack.append((w, path + [w]))
    return paths


def build_connection_graph(data, eqs=None) -> ConnectionGraph:
    """Hasse edges by blocking, all edges two ways, checked against each other.

    The direct route takes every pair with i(s) > i(t) that is adjacent;
    the cascade route takes the transitive closure of unblocked
    index-difference-one edges. Any difference raises InconsistencyError.
    """
    nodes = tuple(range(1, data.n + 1))
    morse = {v: data.i(v) for v in nodes}
    hasse = set()
    for s in nodes:
        for t in nodes:
            if s != t and morse[s] == morse[t] + 1 and blocked(s, t, data) is Blocking.NONE:
                hasse.add((s, t))
    direct = {(s, t) for s in nodes for t in nodes if s != t and morse[s] > morse[t] and adjacent(s, t, data)}
    closure = transitive_closure(nodes, hasse)
    cascade = set(closure)
    if direct != cascade:
        only_d, only_c = direct - cascade, cascade - direct
        context = {}
        for s, t in sorted(only_d | only_c):
            context[f"e{s}->e{t}"] = {
                "z": data.z(s, t),
                "between": {f"e{w}": [data.z(s, w), data.z(t, w)] for w in _between_ids(s, t, data)},
            }
        raise InconsistencyError(
            f"adjacency edges and cascade closure differ: only direct {sorted(only_d)}, "
            f"only cascade {sorted(only_c)}",
            only_d,
            only_c,
            context,
        )
    edges = {e: ("adjacency" if e in hasse else "cascade") for e in sorted(direct)}
    return ConnectionGraph(nodes, morse, edges, frozenset(hasse), closure)


# -- DOT syntax check -----------------------------------------------------------------

_ID = r"[A-Za-z_][A-Za-z0-9_]*"
_ATTR = rf'{_ID}=(?:{_ID}|"[^"\\]*")'
_ATTRS = rf"\[\s*{_ATTR}(?:\s*[,;]?\s*{_ATTR})*\s*\]"
_STMT = re.compile(
    rf"^\s*(?:{_ID}\s*=\s*{_ID}|{_ID}(?:\s*->\s*{_ID})*(?:\s*{_ATTRS})?)\s*;\s*$"
)
_HEAD = re.compile(rf"^\s*(?:strict\s+)?digraph\s+{_ID}\s*\{{\s*$")


def validate_dot(text: str) -> None:
    """Minimal grammar check for the DOT subset this package writes."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) < 2 or not _HEAD.match(lines[0]) or lines[-1].strip() != "}":
        raise ValueError("DOT: expected 'digraph NAME {' ... '}'")
    declared = set()
    for n, ln in enumerate(lines[1:-1], start=2):
        if not _STMT.match(ln):
            raise ValueError(f"DOT: line {n} is not a valid statement: {ln.strip()!r}")
        m = re.match(rf"^\s*({_ID})\s*\[", ln)
        if m:
            declared.add(m.group(1))
        for a, b in re.findall(rf"({_ID})\s*->\s*({_ID})", ln):
            if a not in declared or b not in declared:
                raise ValueError(f"DOT: line {n} uses undeclared node")
