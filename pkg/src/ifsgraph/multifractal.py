"""Cycles, local dimensions, the formalism verdict and L^q estimates."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import networkx as nx
from sympy import integer_nthroot

from .errors import NotAdmissible, PathBudgetExceeded, ZeroSpectralRadius
from .field import ParamValue, decimal_str, exact_str, sign, to_mpf
from .graph import Edge, TransitionGraph
from .matrix import TransitionMatrix, spectral_radius

DPS = 40


# -- paths ----------------------------------------------------------------------

@dataclass(frozen=True)
class Path:
    """An admissible edge sequence with its length ``L`` and matrix ``T*``."""

    edges: tuple
    start: int
    end: int
    length: object
    matrix: TransitionMatrix

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.edges]

    @property
    def is_cycle(self) -> bool:
        return bool(self.edges) and self.start == self.end

    def __len__(self):
        return len(self.edges)


def path_data(g: TransitionGraph, edges: Sequence, start=None) -> Path:
    """Product of lengths and matrices along ``edges`` (ids, names or Edge objects).

    An empty path needs a ``start`` vertex and defaults to the root.
    """
    es = tuple(g.edge(e) for e in edges)
    if not es:
        v = g.root if start is None else g.vertex_id(start)
        one = g.ifs.identity().ratio
        return Path((), v, v, one, TransitionMatrix.identity(len(g.vertices[v])))
    if start is not None and g.vertex_id(start) != es[0].source:
        raise NotAdmissible(f"path does not start at {start}")
    for a, b in zip(es, es[1:]):
        if a.target != b.source:
            raise NotAdmissible(f"edge {b.name} does not leave the target of {a.name}")
    length = es[0].length
    m = g.matrix(es[0])
    for e in es[1:]:
        length = length * e.length
        m = m @ g.matrix(e)
    return Path(es, es[0].source, es[-1].target, length, m)


def vector_form(g: TransitionGraph, edges: Sequence) -> tuple:
    """Row vector ``(1) T*(eta)`` for a path leaving the root."""
    p = path_data(g, edges)
    if p.start != g.root:
        raise NotAdmissible("vector form needs a path starting at the root")
    return p.matrix.rows[0]


# -- periodic dimensions --------------------------------------------------------

@dataclass(frozen=True)
class PeriodicDimension:
    cycle: tuple              # edge names
    value: float
    error: float
    spr: tuple                # exact enclosure (lo, hi)
    length: object

    def to_dict(self) -> dict:
        return {"cycle": list(self.cycle), "dimension": self.value, "error": self.error,
                "spr": [exact_str(self.spr[0]), exact_str(self.spr[1])],
                "length": {"exact": exact_str(self.length), "approx": decimal_str(self.length, 12)}}


def _dimension(path: Path, tol=Fraction(1, 10 ** 15)) -> PeriodicDimension:
    lo, hi = spectral_radius(path.matrix, tol)
    if hi <= 0:
        raise ZeroSpectralRadius(f"cycle {' '.join(path.names)} has a nilpotent matrix")
    ctx = mpmath.MPContext()
    ctx.dps = DPS
    log_l = ctx.log(to_mpf(path.length, DPS + 10))
    lo_eff = lo if lo > 0 else hi / 2
    d_hi = ctx.log(ctx.mpf(lo_eff.numerator) / lo_eff.denominator) / log_l
    d_lo = ctx.log(ctx.mpf(hi.numerator) / hi.denominator) / log_l
    value = (d_lo + d_hi) / 2
    error = (d_hi - d_lo) / 2 + ctx.mpf(10) ** (-(DPS - 5))
    return PeriodicDimension(tuple(path.names), float(value), float(error), (lo, hi), path.length)


def periodic_dimension(g: TransitionGraph, cycle: Sequence) -> PeriodicDimension:
    """``log spr T*(theta) / log L(theta)`` for a cycle ``theta``."""
    p = cycle if isinstance(cycle, Path) else path_data(g, cycle)
    if not p.is_cycle:
        raise NotAdmissible("a cycle must end where it starts")
    return _dimension(p)


@dataclass
class PumpedFamily:
    points: list              # (n, PeriodicDimension)
    trend: str

    def to_dict(self) -> dict:
        return {"trend": self.trend,
                "members": [{"n": n, **d.to_dict()} for n, d in self.points]}


def _trend(values: list[float]) -> str:
    diffs = [b - a for a, b in zip(values, values[1:])]
    if all(d >= 0 for d in diffs):
        return "non-decreasing"
    if all(d <= 0 for d in diffs):
        return "non-increasing"
    return "not monotone"


def pumped_family(g: TransitionGraph, prefix: Sequence, pump: Sequence, suffix: Sequence,
                  n_range: Iterable[int]) -> PumpedFamily:
    """Dimensions of the cycles ``prefix pump^n suffix``."""
    pre, pu, suf = ([g.edge(e) for e in part] for part in (prefix, pump, suffix))
    pump_path = path_data(g, pu)
    if not pump_path.is_cycle:
        raise NotAdmissible("the pumped segment must be a cycle")
    points = []
    for n in n_range:
        cyc = path_data(g, pre + pu * n + suf)
        if not cyc.is_cycle:
            raise NotAdmissible(f"prefix, pump^{n} and suffix do not close up")
        points.append((n, _dimension(cyc)))
    return PumpedFamily(points, _trend([d.value for _, d in points]))


# -- cycles ---------------------------------------------------------------------

def simple_cycles(g: TransitionGraph, max_len: int | None = None) -> list[Path]:
    """All cycles that repeat no vertex, one per parallel-edge choice.

    Each cycle is rotated to start at its smallest vertex id; output is
    sorted by length and then edge ids.
    """
    g.require_closed()
    dg = nx.DiGraph()
    dg.add_nodes_from(range(len(g.vertices)))
    parallel: dict = {}
    for e in g.edges:
        parallel.setdefault((e.source, e.target), []).append(e)
        dg.add_edge(e.source, e.target)
    out = []
    for cyc in nx.simple_cycles(dg, length_bound=max_len):
        k = cyc.index(min(cyc))
        cyc = cyc[k:] + cyc[:k]
        hops = [parallel[(a, b)] for a, b in zip(cyc, cyc[1:] + cyc[:1])]
        for choice in itertools.product(*hops):
            out.append(path_data(g, choice))
    out.sort(key=lambda p: (len(p), [e.id for e in p.edges]))
    return out


def rotate(path: Path, g: TransitionGraph, vertex: int) -> Path:
    for k, e in enumerate(path.edges):
        if e.source == vertex:
            return path_data(g, path.edges[k:] + path.edges[:k])
    raise ValueError("vertex not on cycle")


@dataclass
class DimensionBounds:
    alpha_min: float | None
    alpha_max: float | None
    attained: list            # (kind, PeriodicDimension)
    nilpotent: list           # cycles skipped for a zero spectral radius
    note: str = ("attained values only: alpha_min_est bounds the true minimum from above and "
                 "alpha_max_est bounds the true maximum from below")

    def to_dict(self) -> dict:
        return {"alpha_min_est": self.alpha_min, "alpha_max_est": self.alpha_max, "note": self.note,
                "attained": [{"kind": k, **d.to_dict()} for k, d in self.attained],
                "nilpotent_cycles": self.nilpotent}


def dimension_bounds(g: TransitionGraph, max_cycle_len: int = 8, pump_depth: int = 3,
                     max_pairs: int = 2_000) -> DimensionBounds:
    """Extreme local dimensions attained on simple cycles and on pumped pairs of them."""
    cycles = simple_cycles(g, max_cycle_len)
    attained, nilpotent = [], []

    def add(kind, path):
        try:
            attained.append((kind, _dimension(path)))
        except ZeroSpectralRadius:
            nilpotent.append(path.names)

    for c in cycles:
        add("simple", c)
    pairs = 0
    for a, b in itertools.combinations(cycles, 2):
        shared = sorted({e.source for e in a.edges} & {e.source for e in b.edges})
        if not shared or pump_depth < 1:
            continue
        pairs += 1
        if pairs > max_pairs:
            break
        ra, rb = rotate(a, g, shared[0]), rotate(b, g, shared[0])
        for k in range(1, pump_depth + 1):
            add("pumped", path_data(g, ra.edges + rb.edges * k))
            if k > 1:
                add("pumped", path_data(g, ra.edges * k + rb.edges))
    values = [d.value for _, d in attained]
    return DimensionBounds(min(values) if values else None, max(values) if values else None,
                           attained, nilpotent)


# -- formalism verdict ----------------------------------------------------------

@dataclass
class FormalismVerdict:
    guaranteed: bool
    witness: list | None      # edge names of a shortest cycle outside the essential class
    essential: list           # vertex names
    note: str

    def to_dict(self) -> dict:
        return {"guaranteed": self.guaranteed, "witness": self.witness,
                "essential_class": self.essential, "note": self.note}


NOTE_GUARANTEED = ("every cycle of the transition graph lies in the essential class, "
                   "so the complete multifractal formalism holds for every weight vector")
NOTE_OPEN = ("a cycle lies outside the essential class; the sufficient condition fails, "
             "which does not show that the formalism fails")


def mf_formalism_check(g: TransitionGraph) -> FormalismVerdict:
    ess = set(g.essential_class())
    outside = [v for v in range(len(g.vertices)) if v not in ess]
    succ = {v: [e for e in g.out_edges(v) if e.target not in ess] for v in outside}
    best = None
    for v in outside:
        cyc = _shortest_cycle_through(v, succ)
        if cyc is not None and (best is None or len(cyc) < len(best)):
            best = cyc
    names = [g.names[v] for v in sorted(ess)]
    if best is None:
        return FormalismVerdict(True, None, names, NOTE_GUARANTEED)
    return FormalismVerdict(False, [e.name for e in best], names, NOTE_OPEN)


def _shortest_cycle_through(v: int, succ: dict) -> list[Edge] | None:
    prev: dict = {}
    queue = deque([v])
    seen = {v}
    while queue:
        u = queue.popleft()
        for e in succ[u]:
            if e.target == v:
                path = [e]
                while u != v:
                    pe = prev[u]
                    path.append(pe)
                    u = pe.source
                return path[::-1]
            if e.target not in seen:
                seen.add(e.target)
                prev[e.target] = e
                queue.append(e.target)
    return None


# -- L^q spectrum ----------------------------------------------------------------

def _log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def _logsumexp(xs: list[float]) -> float:
    if not xs:
        return -math.inf
    m = max(xs)
    return m + math.log(math.fsum(math.exp(x - m) for x in xs))


def schedule(t_min, n_scales: int) -> list:
    """Geometric schedule ``t_j = t_min^(j/n)``, kept exact whenever the root is rational."""
    t_min = Fraction(t_min)
    out = []
    for j in range(1, n_scales + 1):
        num, ok1 = integer_nthroot(t_min.numerator ** j, n_scales)
        den, ok2 = integer_nthroot(t_min.denominator ** j, n_scales)
        if ok1 and ok2:
            out.append(Fraction(int(num), int(den)))
        else:
            with mpmath.workdps(40):
                v = mpmath.power(mpmath.mpf(t_min.numerator) / t_min.denominator, mpmath.mpf(j) / n_scales)
                out.append(Fraction(int(v * 2 ** 100), 2 ** 100))
    return out


@dataclass
class LqReport:
    qs: list
    tau: list                 # slope estimates
    trend: list               # per q: list of (t, log S_t / log t)
    scales: list              # the t schedule (exact)
    log_sums: list            # per scale: list over q of log S_t(q)
    paths: list               # per scale: number of cut paths
    alpha_min_est: float | None
    alpha_max_est: float | None
    t_min: Fraction
    fit_from: int             # index of the first scale used by the fit

    def to_dict(self) -> dict:
        return {
            "q": self.qs, "tau": self.tau, "t_min": exact_str(self.t_min),
            "scales": [{"t": exact_str(t) if t.denominator < 10 ** 30 else decimal_str(t, 12),
                        "paths": n} for t, n in zip(self.scales, self.paths)],
            "fit_scales": len(self.scales) - self.fit_from,
            "trend": [[{"t": float(t), "ratio": r} for t, r in tr] for tr in self.trend],
            "alpha_min_est": self.alpha_min_est, "alpha_max_est": self.alpha_max_est,
        }


def _cut_masses(g: TransitionGraph, ts: list, max_paths: int):
    """Masses ``||T*(eta)||_1`` of the path cut at each ``t`` in ``ts`` (decreasing).

    A path ``eta`` is in the cut at ``t`` when ``L(eta) < t <= L(eta^-)``.
    Lengths are compared exactly.
    """
    buckets = [[] for _ in ts]
    t_min = ts[-1]
    exact = all(isinstance(e.length, Fraction) for e in g.edges)
    if not exact:
        # algebraic lengths: compare through high-precision decimals
        lengths = {e.id: to_mpf(e.length, 60) for e in g.edges}
        tv = [mpmath.mpf(t.numerator) / t.denominator for t in ts]
    count = 0
    stack = [(g.root, (Fraction(1),), Fraction(1) if exact else mpmath.mpf(1))]
    while stack:
        v, vec, length = stack.pop()
        for e in g.out_edges(v):
            m = g.matrix(e)
            new = tuple(sum((vec[i] * m.rows[i][j] for i in range(len(vec)) if vec[i]), Fraction(0))
                        for j in range(m.shape[1]))
            nl = length * (e.length if exact else lengths[e.id])
            count += 1
            if count > max_paths:
                raise PathBudgetExceeded(f"path cut down to t={float(t_min):.3g} needs more than {max_paths} paths")
            mass = None
            for k, t in enumerate(ts if exact else tv):
                if nl < t <= length:
                    if mass is None:
                        mass = _log_fraction(sum(new, Fraction(0)))
                    buckets[k].append(mass)
            if not nl < (t_min if exact else tv[-1]):
                stack.append((e.target, new, nl))
    return buckets


def lq_spectrum(g: TransitionGraph, qs: Sequence[float], t_min=Fraction(1, 3 ** 8), n_scales: int = 12,
                max_paths: int = 2_000_000) -> LqReport:
    """Estimate ``tau(q)`` from sums of ``||T*(eta)||_1^q`` over path cuts.

    The estimate is the least-squares slope of ``log S_t(q)`` against
    ``log t`` over the finer half of a geometric schedule of ``n_scales``
    values of ``t`` ending at ``t_min``.  The per-scale ratios
    ``log S_t(q) / log t`` are returned as the trend.
    """
    g.require_closed()
    t_min = Fraction(t_min)
    if t_min <= 0 or t_min >= 1:
        raise ValueError("t_min must lie in (0, 1)")
    qs = [float(q) for q in qs]
    ts = schedule(t_min, n_scales)
    buckets = _cut_masses(g, ts, max_paths)
    log_ts = [_log_fraction(t) for t in ts]
    log_sums = [[_logsumexp([q * lm for lm in b]) for q in qs] for b in buckets]
    fit_from = len(ts) // 2
    xs = log_ts[fit_from:]
    taus, trend = [], []
    for k, q in enumerate(qs):
        ys = [row[k] for row in log_sums[fit_from:]]
        taus.append(_slope(xs, ys) if len(xs) > 1 else ys[0] / xs[0])
        trend.append([(t, row[k] / lt) for t, lt, row in zip(ts, log_ts, log_sums)])
    qmax, qmin = max(qs), min(qs)
    amin = taus[qs.index(qmax)] / qmax if qmax > 0 else None
    amax = taus[qs.index(qmin)] / qmin if qmin < 0 else None
    return LqReport(qs, taus, trend, ts, log_sums, [len(b) for b in buckets], amin, amax, t_min, fit_from)


def _slope(xs: list[float], ys: list[float]) -> float:
    n = len(xs)
    mx, my = math.fsum(xs) / n, math.fsum(ys) / n
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    return sxy / sxx


def is_concave(qs: Sequence[float], tau: Sequence[float], tol: float = 1e-6) -> bool:
    pts = sorted(zip(qs, tau))
    for (q0, t0), (q1, t1), (q2, t2) in zip(pts, pts[1:], pts[2:]):
        interp = t0 + (t2 - t0) * (q1 - q0) / (q2 - q0)
        if t1 < interp - tol:
            return False
    return True


def concave_conjugate(report: LqReport, n_alpha: int = 41) -> list[tuple[float, float]]:
    """Discrete Legendre transform ``f(alpha) = min_q (alpha q - tau(q))``.

    The alpha grid spans the range of chord slopes of the sampled ``tau``;
    the chord slopes themselves are always included.
    """
    pts = sorted(zip(report.qs, report.tau))
    if len(pts) < 3:
        raise ValueError("need at least three q samples")
    slopes = [(t1 - t0) / (q1 - q0) for (q0, t0), (q1, t1) in zip(pts, pts[1:]) if q1 > q0]
    lo, hi = min(slopes), max(slopes)
    if hi - lo < 1e-12:
        alphas = [(lo + hi) / 2]
    else:
        alphas = sorted(set([lo + (hi - lo) * k / (n_alpha - 1) for k in range(n_alpha)] + slopes))
    return [(a, min(a * q - t for q, t in pts)) for a in alphas]


# -- emitters --------------------------------------------------------------------

def lq_to_json(report: LqReport, conjugate: list | None = None) -> str:
    d = report.to_dict()
    if conjugate is not None:
        d["conjugate"] = [{"alpha": a, "f": f} for a, f in conjugate]
    return json.dumps(d, indent=2) + "\n"


def lq_to_csv(report: LqReport, conjugate: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "x", "y"])
    for q, t in zip(report.qs, report.tau):
        w.writerow(["tau", repr(q), repr(t)])
    for a, f in conjugate:
        w.writerow(["f", repr(a), repr(f)])
    return buf.getvalue()
