"""Small directed-graph algorithms on integer vertex ids."""

from __future__ import annotations

from collections import deque
from typing import Iterable, Mapping, Sequence


def tarjan_scc(n: int, succ: Mapping[int, Iterable[int]] | Sequence[Iterable[int]]) -> list[list[int]]:
    """Strongly connected components of the graph on ``range(n)``.

    Iterative Tarjan; components come out in reverse topological order of
    the condensation (sinks first) and each component is sorted.
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def condensation_sinks(n: int, succ, comps: list[list[int]] | None = None) -> list[list[int]]:
    """Components with no edge leaving them."""
    if comps is None:
        comps = tarjan_scc(n, succ)
    which = [0] * n
    for k, comp in enumerate(comps):
        for v in comp:
            which[v] = k
    sinks = []
    for k, comp in enumerate(comps):
        if all(which[w] == k for v in comp for w in succ[v]):
            sinks.append(comp)
    return sinks


def reachable(start: Iterable[int], succ) -> set[int]:
    seen = set(start)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen
