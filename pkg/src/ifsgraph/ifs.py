"""Similarity maps, words, generation cuts and hull normalization."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import BudgetExceeded, InvalidIFS, SingletonAttractor
from .field import ParameterContext, sign


@dataclass(frozen=True)
class Similarity:
    """The affine map ``x -> ratio * x + offset``."""

    ratio: object
    offset: object

    def __call__(self, x):
        return self.ratio * x + self.offset

    def compose(self, other: "Similarity") -> "Similarity":
        """``self o other``."""
        return Similarity(self.ratio * other.ratio, self.ratio * other.offset + self.offset)

    def inverse(self) -> "Similarity":
        inv = 1 / self.ratio
        return Similarity(inv, -self.offset * inv)

    @property
    def contraction(self):
        return abs(self.ratio)

    def image(self, lo=0, hi=1):
        """Endpoints of the image of ``[lo, hi]``, in increasing order."""
        a, b = self(lo), self(hi)
        return (a, b) if sign(self.ratio) > 0 else (b, a)

    def sort_key(self):
        return (self.offset, self.ratio)


def identity_map(ctx: ParameterContext | None = None) -> Similarity:
    if ctx is None:
        return Similarity(Fraction(1), Fraction(0))
    return Similarity(ctx.const(1), ctx.const(0))


def rescale(lo, hi) -> Similarity:
    """The increasing similarity taking ``[0, 1]`` onto ``[lo, hi]``."""
    return Similarity(hi - lo, lo)


Word = tuple


@dataclass(frozen=True)
class IFS:
    """An iterated function system of similarities with rational weights."""

    maps: tuple
    probabilities: tuple
    context: ParameterContext

    def __post_init__(self):
        maps = tuple(self.maps)
        probs = tuple(Fraction(p) for p in self.probabilities)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "probabilities", probs)
        if len(maps) < 2:
            raise InvalidIFS("an IFS needs at least two maps")
        if len(probs) != len(maps):
            raise InvalidIFS(f"{len(maps)} maps but {len(probs)} probabilities")
        if any(p <= 0 for p in probs):
            raise InvalidIFS("probabilities must be strictly positive")
        if sum(probs) != 1:
            raise InvalidIFS(f"probabilities sum to {sum(probs)}, not 1")
        for i, m in enumerate(maps):
            c = abs(m.ratio)
            if sign(c) <= 0 or sign(1 - c) <= 0:
                raise InvalidIFS(f"map {i + 1} is not a contraction: need 0 < |ratio| < 1")

    def __len__(self):
        return len(self.maps)

    def with_probabilities(self, probs: Sequence) -> "IFS":
        return IFS(self.maps, tuple(probs), self.context)

    def identity(self) -> Similarity:
        return identity_map(None if self.context.is_rational else self.context)

    def compose(self, word: Sequence[int]) -> Similarity:
        """``S_{w_1} o ... o S_{w_n}`` (0-based indices); the empty word is the identity."""
        f = self.identity()
        for i in word:
            if not 0 <= i < len(self.maps):
                raise IndexError(f"map index {i} out of range")
            f = f.compose(self.maps[i])
        return f

    def word_probability(self, word: Sequence[int]) -> Fraction:
        p = Fraction(1)
        for i in word:
            p *= self.probabilities[i]
        return p

    def word_ratio(self, word: Sequence[int]):
        return self.compose(word).ratio

    def generation_cut(self, t, limit: int | None = None) -> list[Word]:
        """Words ``w`` with ``|r_w| < t <= |r_{w^-}|``, in lexicographic order."""
        if sign(t) <= 0 or sign(t - 1) > 0:
            raise ValueError("generation requires 0 < t <= 1")
        return [w for w, _ in self.iter_cut(t, limit)]

    def iter_cut(self, t, limit: int | None = None) -> Iterator[tuple[Word, Similarity]]:
        count = 0
        stack = [((), self.identity())]
        while stack:
            word, f = stack.pop()
            if word and sign(abs(f.ratio) - t) < 0:
                count += 1
                if limit is not None and count > limit:
                    raise BudgetExceeded(f"generation cut exceeds {limit} words")
                yield word, f
                continue
            for i in reversed(range(len(self.maps))):
                stack.append((word + (i,), f.compose(self.maps[i])))

    def fixed_point(self, i: int):
        m = self.maps[i]
        return m.offset / (1 - m.ratio)

    def hull(self):
        """Endpoints ``(a, b)`` of the convex hull of the attractor."""
        n = len(self.maps)
        # float iteration picks an initial min/max assignment
        maps_f = [(float(m.ratio), float(m.offset)) for m in self.maps]
        fps = [d / (1 - r) for r, d in maps_f]
        lo, hi = min(fps), max(fps)
        for _ in range(200):
            imgs = [(r * lo + d, r * hi + d) for r, d in maps_f]
            lo = min(min(x) for x in imgs)
            hi = max(max(x) for x in imgs)
        ia = min(range(n), key=lambda i: min(maps_f[i][0] * lo, maps_f[i][0] * hi) + maps_f[i][1])
        ib = max(range(n), key=lambda i: max(maps_f[i][0] * lo, maps_f[i][0] * hi) + maps_f[i][1])
        for _ in range(n * n + 1):
            a, b = self._solve_hull(ia, ib)
            cand_a = [self._low(i, a, b) for i in range(n)]
            cand_b = [self._high(i, a, b) for i in range(n)]
            better_a = [i for i in range(n) if sign(cand_a[i] - a) < 0]
            better_b = [i for i in range(n) if sign(cand_b[i] - b) > 0]
            if not better_a and not better_b:
                return a, b
            if better_a:
                ia = min(better_a, key=lambda i: float(cand_a[i]))
            if better_b:
                ib = max(better_b, key=lambda i: float(cand_b[i]))
        # policy iteration should settle long before this; fall back to exhaustive search
        for ia in range(n):
            for ib in range(n):
                try:
                    a, b = self._solve_hull(ia, ib)
                except ZeroDivisionError:
                    continue
                if all(sign(self._low(i, a, b) - a) >= 0 and sign(self._high(i, a, b) - b) <= 0
                       for i in range(n)):
                    return a, b
        raise InvalidIFS("could not determine the convex hull of the attractor")

    def _low(self, i, a, b):
        m = self.maps[i]
        return m.ratio * (a if sign(m.ratio) > 0 else b) + m.offset

    def _high(self, i, a, b):
        m = self.maps[i]
        return m.ratio * (b if sign(m.ratio) > 0 else a) + m.offset

    def _solve_hull(self, ia, ib):
        ra, da = self.maps[ia].ratio, self.maps[ia].offset
        rb, db = self.maps[ib].ratio, self.maps[ib].offset
        pa, pb = sign(ra) > 0, sign(rb) > 0
        if pa and pb:
            return da / (1 - ra), db / (1 - rb)
        if pa:
            a = da / (1 - ra)
            return a, rb * a + db
        if pb:
            b = db / (1 - rb)
            return ra * b + da, b
        a = (ra * db + da) / (1 - ra * rb)
        return a, rb * a + db

    def normalize_hull(self) -> "IFS":
        """Conjugate by an increasing affine map so that the hull of the attractor is [0, 1]."""
        n = len(self.maps)
        fps = [self.fixed_point(i) for i in range(n)]
        if all(sign(fp - fps[0]) == 0 for fp in fps):
            raise SingletonAttractor("all maps share a fixed point; the attractor is a singleton")
        a, b = self.hull()
        if sign(a) == 0 and sign(b - 1) == 0:
            return self
        width = b - a
        maps = tuple(Similarity(m.ratio, (m.ratio * a + m.offset - a) / width) for m in self.maps)
        return IFS(maps, self.probabilities, self.context)

    def is_normalized(self) -> bool:
        a, b = self.hull()
        return sign(a) == 0 and sign(b - 1) == 0
