"""The transition graph: exploration, essential class, contraction and export."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .digraph import condensation_sinks, tarjan_scc
from .errors import BudgetExceeded, MultipleSinkComponents, OracleBudgetExceeded, TruncatedGraph
from .field import decimal_str, exact_str, sign
from .ifs import IFS
from .matrix import TransitionMatrix
from .netiv import (AttractorOracle, ChildRecord, NeighbourSet, _Key, children, covering_children,
                    root_neighbours)

CLOSED = "CLOSED"
TRUNCATED = "TRUNCATED"


@dataclass(frozen=True)
class Budget:
    max_vertices: int = 10_000
    max_oracle_states: int = 200_000
    max_cover_states: int = 2_000


@dataclass(frozen=True)
class Edge:
    """A labelled edge; ``parts`` lists the base edges a contracted edge stands for."""

    id: int
    name: str
    source: int
    target: int
    position: object
    diameter: object
    length: object
    sources: tuple | None = None
    parts: tuple = ()
    shape: tuple = (0, 0)       # matrix shape (source size, target size)

    def key(self):
        return (self.source, self.target, _Key(self.position))


@dataclass
class WSCStatistic:
    """Largest covering-set size seen while exploring."""

    max_cover: int = 0
    states: int = 0
    closed: bool = False

    def verdict(self) -> str:
        if self.closed:
            return "bounded within explored region"
        return f"observed maximum up to budget ({self.states} states)"


@dataclass
class TransitionGraph:
    ifs: IFS
    vertices: list
    names: list
    edges: list
    root: int
    status: str
    reason: str = ""
    wsc: WSCStatistic = field(default_factory=WSCStatistic)
    expanded: int = 0

    def __post_init__(self):
        self._matrix_cache: dict = {}
        self._out = [[] for _ in self.vertices]
        self._in = [[] for _ in self.vertices]
        for e in self.edges:
            self._out[e.source].append(e)
            self._in[e.target].append(e)
        self._essential = None

    # -- structure ------------------------------------------------------------
    @property
    def closed(self) -> bool:
        return self.status == CLOSED

    def out_edges(self, v: int) -> list[Edge]:
        return self._out[v]

    def in_edges(self, v: int) -> list[Edge]:
        return self._in[v]

    def successors(self) -> list[list[int]]:
        return [[e.target for e in self._out[v]] for v in range(len(self.vertices))]

    def edge(self, ref) -> Edge:
        if isinstance(ref, Edge):
            return ref
        if isinstance(ref, str):
            for e in self.edges:
                if e.name == ref:
                    return e
            raise KeyError(ref)
        return self.edges[ref]

    def vertex_id(self, ref) -> int:
        if isinstance(ref, int):
            return ref
        if isinstance(ref, str):
            return self.names.index(ref)
        return self.vertices.index(ref)

    # -- matrices -------------------------------------------------------------
    def matrix(self, ref) -> TransitionMatrix:
        e = self.edge(ref)
        m = self._matrix_cache.get(e.id)
        if m is None:
            m = edge_matrix(e, self.ifs.probabilities)
            self._matrix_cache[e.id] = m
        return m

    def with_probabilities(self, probabilities: Sequence) -> "TransitionGraph":
        """Same geometry, matrices re-evaluated for another weight vector."""
        return TransitionGraph(self.ifs.with_probabilities(probabilities), self.vertices, self.names,
                               self.edges, self.root, self.status, self.reason, self.wsc, self.expanded)

    # -- analysis -------------------------------------------------------------
    def require_closed(self):
        if not self.closed:
            raise TruncatedGraph(f"transition graph exploration was truncated: {self.reason}")

    def sccs(self) -> list[list[int]]:
        return tarjan_scc(len(self.vertices), self.successors())

    def essential_class(self) -> list[int]:
        """Vertex ids of the unique sink strongly connected component."""
        self.require_closed()
        if self._essential is None:
            sinks = condensation_sinks(len(self.vertices), self.successors())
            if len(sinks) != 1:
                raise MultipleSinkComponents(sinks)
            self._essential = sinks[0]
        return list(self._essential)


def edge_matrix(e: Edge, probabilities) -> TransitionMatrix:
    if e.parts:
        m = None
        for part in e.parts:
            pm = edge_matrix(part, probabilities)
            m = pm if m is None else m @ pm
        return m
    rows = [[Fraction(0)] * e.shape[1] for _ in range(e.shape[0])]
    for j, srcs in enumerate(e.sources):
        for i, letter in srcs:
            rows[i][j] += Fraction(1) if letter is None else probabilities[letter]
    return TransitionMatrix(tuple(tuple(r) for r in rows))


def build_graph(ifs: IFS, budget: Budget = Budget(), oracle: AttractorOracle | None = None) -> TransitionGraph:
    """Breadth-first exploration of neighbour sets from the root ``{identity}``.

    The IFS must already be hull-normalized.  Exploration stops with status
    TRUNCATED when the vertex budget or the attractor-oracle budget runs out.
    """
    if oracle is None:
        oracle = AttractorOracle(ifs, budget.max_oracle_states)
    root = root_neighbours(ifs)
    vertices = [root]
    ids = {root: 0}
    edges: list[Edge] = []
    records: dict[int, list[ChildRecord]] = {}
    queue = deque([0])
    status, reason = CLOSED, ""
    while queue:
        v = queue.popleft()
        try:
            recs = children(ifs, oracle, vertices[v])
        except OracleBudgetExceeded as exc:
            status, reason = TRUNCATED, str(exc)
            break
        records[v] = recs
        for rec in recs:
            w = ids.get(rec.neighbours)
            if w is None:
                if len(vertices) >= budget.max_vertices:
                    status, reason = TRUNCATED, f"more than {budget.max_vertices} vertices"
                    break
                w = ids[rec.neighbours] = len(vertices)
                vertices.append(rec.neighbours)
                queue.append(w)
            eid = len(edges)
            edges.append(Edge(eid, f"e{eid}", v, w, rec.position, rec.diameter, rec.length, rec.sources,
                              shape=(len(vertices[v]), len(rec.neighbours))))
        if status == TRUNCATED:
            break
    names = [f"v{i}" for i in range(len(vertices))]
    g = TransitionGraph(ifs, vertices, names, edges, 0, status, reason, expanded=len(records))
    for e in edges:
        m = g.matrix(e)
        if not m.columns_positive():
            raise AssertionError(f"edge {e.name} has a zero column")
        if not (sign(e.length) > 0 and sign(1 - e.length) > 0):
            raise AssertionError(f"edge {e.name} has length outside (0, 1)")
    g.wsc = _explore_covering(ifs, oracle, vertices, ids, records, budget.max_cover_states)
    return g


def _explore_covering(ifs, oracle, vertices, ids, records, max_states) -> WSCStatistic:
    """Closure of (neighbour set, covering set) pairs reachable from the root."""
    stat = WSCStatistic()
    start = (0, (ifs.identity(),))
    seen = {start}
    queue = deque([start])
    while queue:
        v, cover = queue.popleft()
        stat.max_cover = max(stat.max_cover, len(cover))
        recs = records.get(v)
        if recs is None:
            try:
                recs = children(ifs, oracle, vertices[v])
            except OracleBudgetExceeded:
                stat.states = len(seen)
                return stat
        for rec, kid_cover in zip(recs, covering_children(ifs, cover, vertices[v], recs)):
            w = ids.get(rec.neighbours)
            if w is None:
                stat.states = len(seen)
                return stat
            state = (w, kid_cover)
            if state not in seen:
                if len(seen) >= max_states:
                    stat.states = len(seen)
                    return stat
                seen.add(state)
                queue.append(state)
    stat.states = len(seen)
    stat.closed = True
    return stat


def single_child_vertices(g: TransitionGraph) -> list[int]:
    return [v for v in range(len(g.vertices))
            if v != g.root and len(g.out_edges(v)) == 1 and g.out_edges(v)[0].target != v
            and g.in_edges(v)]


def contract_single_child(g: TransitionGraph, vertices: Iterable | None = None) -> TransitionGraph:
    """Remove vertices with exactly one outgoing edge, composing edges through them.

    ``vertices`` selects which (ids or names); by default every eligible
    non-root vertex is removed, one at a time.
    """
    g.require_closed()
    if vertices is None:
        todo = [g.names[v] for v in single_child_vertices(g)]
    else:
        todo = [g.names[g.vertex_id(v)] for v in vertices]
    verts, names, edges = list(g.vertices), list(g.names), list(g.edges)
    for name in todo:
        x = names.index(name)
        outs = [e for e in edges if e.source == x]
        ins = [e for e in edges if e.target == x]
        if x == g.root or len(outs) != 1 or outs[0].target == x or not ins:
            raise ValueError(f"vertex {name} cannot be contracted")
        o = outs[0]
        kept = [e for e in edges if e.source != x and e.target != x]
        for e in ins:
            kept.append(Edge(-1, e.name + "'", e.source, o.target,
                             e.position + e.diameter * o.position, e.diameter * o.diameter,
                             e.length * o.length, None, (e.parts or (e,)) + (o.parts or (o,)),
                             (e.shape[0], o.shape[1])))
        # drop x and renumber
        remap = {old: new for new, old in enumerate(i for i in range(len(verts)) if i != x)}
        verts = [verts[i] for i in range(len(verts)) if i != x]
        names = [names[i] for i in range(len(names)) if i != x]
        kept.sort(key=lambda e: _edge_order(e))
        edges = [replace(e, id=k, source=remap[e.source], target=remap[e.target]) for k, e in enumerate(kept)]
    root = names.index(g.names[g.root])
    return TransitionGraph(g.ifs, verts, names, edges, root, g.status, g.reason, g.wsc, g.expanded)


def _edge_order(e: Edge):
    base = e.parts[0] if e.parts else e
    return (base.id, len(e.parts))


# -- export ---------------------------------------------------------------------

def _num(x) -> dict:
    return {"exact": exact_str(x), "approx": decimal_str(x, 12)}


def sorted_edges(g: TransitionGraph) -> list[Edge]:
    return sorted(g.edges, key=Edge.key)


def to_json_data(g: TransitionGraph) -> dict:
    data = {
        "format": "ifsgraph.transition_graph",
        "format_version": 1,
        "status": g.status,
        "reason": g.reason,
        "root": g.names[g.root],
        "probabilities": [exact_str(p) for p in g.ifs.probabilities],
        "vertices": [],
        "edges": [],
        "wsc": {"max_covering_set": g.wsc.max_cover, "states": g.wsc.states,
                "verdict": g.wsc.verdict()},
    }
    for i, v in enumerate(g.vertices):
        data["vertices"].append({
            "id": g.names[i],
            "lm": _num(v.lm),
            "neighbours": [{"ratio": _num(f.ratio), "offset": _num(f.offset)} for f in v.maps],
        })
    for e in sorted_edges(g):
        data["edges"].append({
            "id": e.name,
            "source": g.names[e.source],
            "target": g.names[e.target],
            "q": _num(e.position),
            "length": _num(e.length),
            "diameter": _num(e.diameter),
            "matrix": g.matrix(e).to_strings(),
        })
    if g.closed:
        try:
            data["essential_class"] = [g.names[v] for v in g.essential_class()]
        except MultipleSinkComponents as exc:
            data["essential_class"] = None
            data["sinks"] = [[g.names[v] for v in s] for s in exc.sinks]
    return data


def to_json(g: TransitionGraph) -> str:
    return json.dumps(to_json_data(g), indent=2) + "\n"


def to_dot(g: TransitionGraph) -> str:
    lines = ["digraph transition_graph {", "  rankdir=LR;"]
    essential = set()
    if g.closed:
        try:
            essential = set(g.essential_class())
        except MultipleSinkComponents:
            pass
    for i, v in enumerate(g.vertices):
        style = ", style=filled, fillcolor=lightpink" if i in essential else ""
        shape = "doublecircle" if i == g.root else "circle"
        lines.append(f'  {g.names[i]} [shape={shape}, label="{g.names[i]}\\n#{len(v)}"{style}];')
    for e in sorted_edges(g):
        m, n = g.matrix(e).shape
        label = f"{e.name}\\nq={decimal_str(e.position, 6)}\\nL={decimal_str(e.length, 6)}\\n{m}x{n}"
        lines.append(f'  {g.names[e.source]} -> {g.names[e.target]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
