"""Net intervals, neighbour sets and the children construction.

Everything here works in normalized coordinates: a net interval is
identified with ``[0, 1]`` and its neighbours are the maps
``T^{-1} o S_w`` for the words ``w`` whose image of the attractor meets
the interior.  The children of a net interval are computed from its
neighbour set alone.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import BudgetExceeded, OracleBudgetExceeded
from .field import sign
from .ifs import IFS, Similarity, rescale
from .matrix import TransitionMatrix

DEFAULT_ORACLE_STATES = 200_000


class AttractorOracle:
    """Decides whether an open interval meets the attractor of a hull-normalized IFS.

    The search pulls an interval back through every inverse map; an
    interval whose interior contains 0 or 1 meets the attractor (both are
    points of it), and one disjoint from ``(0, 1)`` does not.  Pulled-back
    intervals grow geometrically, so the search always closes.  Results are
    memoized on exact endpoints; the memo is shared by every query on this
    oracle.
    """

    def __init__(self, ifs: IFS, max_states: int = DEFAULT_ORACLE_STATES):
        self.ifs = ifs
        self.inverses = [m.inverse() for m in ifs.maps]
        self.positive = [sign(m.ratio) > 0 for m in ifs.maps]
        self.max_states = max_states
        self._memo: dict = {}
        self._lock = threading.Lock()
        self.zero = ifs.identity().offset
        self.one = ifs.identity().ratio

    def meets(self, a, b) -> bool:
        """``K`` meets the open interval ``(a, b)``."""
        if sign(b - a) <= 0:
            return False
        visited = [0]
        return self._search(a, b, visited)

    def meets_image(self, f: Similarity, lo, hi) -> bool:
        """``f(K)`` meets the open interval ``(lo, hi)``."""
        a, b = f.image()
        if sign(b - lo) <= 0 or sign(hi - a) <= 0:
            return False
        g = f.inverse()
        x, y = g(lo), g(hi)
        if sign(g.ratio) < 0:
            x, y = y, x
        return self.meets(x, y)

    def _search(self, a, b, visited) -> bool:
        key = (a, b)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if sign(b) <= 0 or sign(a - 1) >= 0:
            result = False
        elif sign(a) < 0 or sign(b - 1) > 0:
            # overlaps [0, 1] and sticks out on one side, so 0 or 1 is inside
            result = True
        else:
            visited[0] += 1
            if visited[0] > self.max_states:
                raise OracleBudgetExceeded(f"attractor oracle exceeded {self.max_states} states")
            result = False
            for g, pos in zip(self.inverses, self.positive):
                x, y = g(a), g(b)
                if not pos:
                    x, y = y, x
                if self._search(x, y, visited):
                    result = True
                    break
        with self._lock:
            self._memo[key] = result
        return result


@dataclass(frozen=True)
class NeighbourSet:
    """Canonically ordered neighbours of a net interval (sorted by offset, then ratio)."""

    maps: tuple

    @classmethod
    def of(cls, maps) -> "NeighbourSet":
        uniq = set(maps)
        if not uniq:
            raise ValueError("a neighbour set is never empty")
        return cls(tuple(sorted(uniq, key=Similarity.sort_key)))

    @property
    def lm(self):
        return max((abs(f.ratio) for f in self.maps), key=_Key)

    def __len__(self):
        return len(self.maps)

    def __iter__(self):
        return iter(self.maps)

    def index(self, f) -> int:
        return self.maps.index(f)


class _Key:
    """Sort key wrapper so ``max``/``sorted`` work on any exact value type."""

    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return sign(self.v - other.v) < 0


# provenance of a child neighbour: (row in the parent neighbour set, letter or None if carried)
Source = tuple


@dataclass(frozen=True)
class ChildRecord:
    """One child of a neighbour set, in the parent's normalized coordinates."""

    neighbours: NeighbourSet
    position: object          # left endpoint q
    diameter: object          # relative diameter
    length: object            # edge length L
    sources: tuple            # per child neighbour: tuple of Source
    parent_size: int

    def matrix(self, probabilities) -> TransitionMatrix:
        rows = [[Fraction(0)] * len(self.neighbours) for _ in range(self.parent_size)]
        for j, srcs in enumerate(self.sources):
            for i, letter in srcs:
                rows[i][j] += Fraction(1) if letter is None else probabilities[letter]
        return TransitionMatrix(tuple(tuple(r) for r in rows))

    @property
    def interval(self):
        return (self.position, self.position + self.diameter)


def root_neighbours(ifs: IFS) -> NeighbourSet:
    return NeighbourSet((ifs.identity(),))


def _candidates(ifs: IFS, oracle: AttractorOracle, v: NeighbourSet) -> dict:
    """Maps generating the next generation inside the net interval, with provenance."""
    lm = v.lm
    cands: dict = {}
    for i, f in enumerate(v.maps):
        if sign(abs(f.ratio) - lm) == 0:
            for letter, s in enumerate(ifs.maps):
                g = f.compose(s)
                if oracle.meets_image(g, oracle.zero, oracle.one):
                    cands.setdefault(g, []).append((i, letter))
        else:
            cands.setdefault(f, []).append((i, None))
    return cands


def children(ifs: IFS, oracle: AttractorOracle, v: NeighbourSet) -> list[ChildRecord]:
    """Children of any net interval with neighbour set ``v``, left to right."""
    zero, one = oracle.zero, oracle.one
    cands = _candidates(ifs, oracle, v)
    points = {zero, one}
    for g in cands:
        for x in (g(zero), g(one)):
            if sign(x) > 0 and sign(x - 1) < 0:
                points.add(x)
    hs = sorted(points, key=_Key)
    lm = v.lm
    out = []
    for h, h2 in zip(hs, hs[1:]):
        t_inv = rescale(h, h2).inverse()
        nbrs: dict = {}
        for g, srcs in cands.items():
            if oracle.meets_image(g, h, h2):
                nbrs.setdefault(t_inv.compose(g), []).extend(srcs)
        if not nbrs:
            # the local attractor is the union of the candidate images
            continue
        vs = NeighbourSet.of(nbrs)
        sources = tuple(tuple(sorted(nbrs[f], key=lambda s: (s[0], -1 if s[1] is None else s[1])))
                        for f in vs.maps)
        diam = h2 - h
        length = vs.lm * diam / lm
        out.append(ChildRecord(vs, h, diam, length, sources, len(v)))
    return out


def covering_children(ifs: IFS, cover: tuple, v: NeighbourSet, records: list[ChildRecord]) -> list[tuple]:
    """Covering sets of the children listed in ``records``.

    ``cover`` is the covering set of a net interval whose neighbour set is
    ``v``.  Covering maps are refined to the children's generation (ratio
    below ``lm(v)``) and kept when their image of ``[0, 1]`` contains the
    child.
    """
    lm = v.lm
    refined = []
    stack = list(cover)
    while stack:
        f = stack.pop()
        if sign(abs(f.ratio) - lm) < 0:
            refined.append(f)
        else:
            stack.extend(f.compose(s) for s in ifs.maps)
    refined = set(refined)
    out = []
    for rec in records:
        lo, hi = rec.interval
        t_inv = rescale(lo, hi).inverse()
        keep = []
        for f in refined:
            a, b = f.image()
            if sign(a - lo) <= 0 and sign(b - hi) >= 0:
                keep.append(t_inv.compose(f))
        out.append(tuple(sorted(set(keep), key=Similarity.sort_key)))
    return out


@dataclass(frozen=True)
class RealizedInterval:
    """A net interval in absolute coordinates together with its neighbour set."""

    lo: object
    hi: object
    neighbours: NeighbourSet
    tg: object                  # transition generation
    ag: object | None           # ancestral generation; None stands for infinity at the root
    depth: int
    path: tuple = field(default=())   # sequence of child indices from the root


def realize(ifs: IFS, oracle: AttractorOracle, t=None, max_depth: int | None = None,
            limit: int = 100_000) -> Iterator[RealizedInterval]:
    """Walk the tree of net intervals produced by :func:`children`.

    With ``t`` given, yields exactly the realized intervals of generation
    ``t`` (``tg < t <= ag``); otherwise yields every interval up to
    ``max_depth``.
    """
    zero, one = oracle.zero, oracle.one
    cache: dict = {}
    root = RealizedInterval(zero, one, root_neighbours(ifs), one, None, 0)
    stack = [root]
    count = 0
    while stack:
        node = stack.pop()
        count += 1
        if count > limit:
            raise BudgetExceeded(f"more than {limit} realized net intervals")
        if t is not None:
            if sign(node.tg - t) < 0:
                yield node
                continue
        else:
            yield node
            if max_depth is not None and node.depth >= max_depth:
                continue
        recs = cache.get(node.neighbours)
        if recs is None:
            recs = cache[node.neighbours] = children(ifs, oracle, node.neighbours)
        diam = node.hi - node.lo
        kids = []
        for k, rec in enumerate(recs):
            lo = node.lo + rec.position * diam
            hi = lo + rec.diameter * diam
            tg = rec.neighbours.lm * rec.diameter * diam
            kids.append(RealizedInterval(lo, hi, rec.neighbours, tg, node.tg, node.depth + 1, node.path + (k,)))
        stack.extend(reversed(kids))


def global_net_intervals(ifs: IFS, oracle: AttractorOracle, t, limit: int = 200_000) -> list[tuple]:
    """Net intervals of generation ``t`` computed straight from the definitions.

    Enumerates the whole word cut, collects the endpoints of generation
    ``t``, keeps the gaps meeting the attractor and computes each neighbour
    set from the words whose image of the attractor meets the interior.
    Independent of :func:`children`; used to cross-check it.
    """
    words = list(ifs.iter_cut(t, limit))
    pts = set()
    for _, f in words:
        pts.add(f(oracle.zero))
        pts.add(f(oracle.one))
    hs = sorted(pts, key=_Key)
    maps = {f for _, f in words}
    out = []
    for h, h2 in zip(hs, hs[1:]):
        if not oracle.meets(h, h2):
            continue
        t_inv = rescale(h, h2).inverse()
        nb = [t_inv.compose(f) for f in maps if oracle.meets_image(f, h, h2)]
        out.append(((h, h2), NeighbourSet.of(nb)))
    return out
