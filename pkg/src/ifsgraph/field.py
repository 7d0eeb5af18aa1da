"""Exact arithmetic over a field of declared real parameters.

A :class:`ParameterContext` declares named generators.  Rational generators
are plain constants; generic generators are treated as algebraically
independent transcendentals with a numeric witness; algebraic generators
carry a minimal polynomial and an isolating interval.  Elements of the
resulting field are :class:`ParamValue` objects kept in a canonical normal
form, so equality is a structural test and never numeric.

Contexts with no symbolic generators hand out :class:`fractions.Fraction`
values instead; every consumer is written against the common numeric
protocol (``+ - * /``, ``abs``, comparisons, hashing) plus :func:`sign`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor, ceil
from numbers import Rational
from typing import Iterable, Sequence

import mpmath
import sympy
from sympy import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyRing

from .errors import ContextError, DivisionByZero, IndeterminateSign

RATIONAL = "rational"
GENERIC = "generic"
ALGEBRAIC = "algebraic"

START_PRECISION = 64
PRECISION_CAP = 4096


def _frac(x) -> Fraction:
    """Convert ints, Fractions, gmpy/sympy rationals and decimal strings."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        num, den = x.numerator, x.denominator
        if callable(num):  # sympy/gmpy variants expose methods
            num, den = num(), den()
        return Fraction(int(num), int(den))
    if hasattr(x, "p") and hasattr(x, "q"):
        return Fraction(int(x.p), int(x.q))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


class Interval:
    """Closed interval with exact rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        self.lo = lo
        self.hi = lo if hi is None else hi

    def __add__(self, other):
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __mul__(self, other):
        if isinstance(other, Interval):
            ps = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
            return Interval(min(ps), max(ps))
        if other >= 0:
            return Interval(self.lo * other, self.hi * other)
        return Interval(self.hi * other, self.lo * other)

    def __pow__(self, n: int):
        if n == 0:
            return Interval(Fraction(1))
        if n % 2 == 1 or self.lo >= 0:
            a, b = self.lo ** n, self.hi ** n
            return Interval(min(a, b), max(a, b))
        if self.hi <= 0:
            return Interval(self.hi ** n, self.lo ** n)
        return Interval(Fraction(0), max(self.lo ** n, self.hi ** n))

    def rounded(self, bits: int) -> "Interval":
        scale = 1 << bits
        return Interval(Fraction(floor(self.lo * scale), scale), Fraction(ceil(self.hi * scale), scale))

    def width(self):
        return self.hi - self.lo

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"


@dataclass(frozen=True)
class Generator:
    """A named generator of the parameter field.

    ``value`` is the exact value of a RATIONAL generator or the numeric
    witness of a GENERIC one.  ``minpoly`` holds the rational coefficients
    (leading first) of an ALGEBRAIC generator's minimal polynomial and
    ``interval`` its isolating interval.
    """

    name: str
    kind: str
    value: Fraction | None = None
    minpoly: tuple[Fraction, ...] | None = None
    interval: tuple[Fraction, Fraction] | None = None
    contraction: bool = False

    @classmethod
    def rational(cls, name, value):
        return cls(name, RATIONAL, value=_frac(value))

    @classmethod
    def generic(cls, name, witness, contraction=False):
        return cls(name, GENERIC, value=_frac(witness), contraction=contraction)

    @classmethod
    def algebraic(cls, name, minpoly, interval, contraction=False):
        return cls(
            name,
            ALGEBRAIC,
            minpoly=_parse_minpoly(minpoly),
            interval=(_frac(interval[0]), _frac(interval[1])),
            contraction=contraction,
        )


def _parse_minpoly(spec) -> tuple[Fraction, ...]:
    if isinstance(spec, str):
        expr = sympy.sympify(spec.replace("^", "**"))
        free = sorted(expr.free_symbols, key=str)
        if len(free) != 1:
            raise ContextError(f"minimal polynomial {spec!r} must be univariate")
        poly = sympy.Poly(expr, free[0], domain=QQ)
        coeffs = poly.all_coeffs()
    else:
        coeffs = list(spec)
    coeffs = [_frac(c) for c in coeffs]
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
    if len(coeffs) < 2:
        raise ContextError("minimal polynomial must have degree >= 1")
    lead = coeffs[0]
    return tuple(c / lead for c in coeffs)


def _horner(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * x + c
    return acc


def _check_algebraic(g: Generator) -> None:
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in g.minpoly], x, domain=QQ)
    lo, hi = g.interval
    if not lo < hi:
        raise ContextError(f"{g.name}: isolating interval must satisfy lo < hi")
    if sympy.degree(sympy.gcd(poly, poly.diff(x))) > 0:
        raise ContextError(f"{g.name}: minimal polynomial is not square-free")
    if not poly.is_irreducible:
        raise ContextError(f"{g.name}: minimal polynomial is reducible over Q")
    flo, fhi = _horner(g.minpoly, lo), _horner(g.minpoly, hi)
    if flo * fhi >= 0:
        raise ContextError(f"{g.name}: no sign change of the minimal polynomial on the isolating interval")
    if poly.count_roots(sympy.Rational(lo.numerator, lo.denominator), sympy.Rational(hi.numerator, hi.denominator)) != 1:
        raise ContextError(f"{g.name}: isolating interval does not contain exactly one root")


class ParameterContext:
    """Declared generators plus the machinery to decide signs exactly.

    Parameters
    ----------
    generators : iterable of Generator
        In declaration order; this order fixes the graded lexicographic
        term order of the normal form.
    assumptions : iterable of str
        Polynomial inequalities kept for reporting only.
    precision_cap : int
        Largest number of fractional bits tried before giving up on a sign.
    """

    def __init__(self, generators: Iterable[Generator] = (), assumptions: Iterable[str] = (),
                 precision_cap: int = PRECISION_CAP, start_precision: int = START_PRECISION):
        self.generators = tuple(generators)
        self.assumptions = tuple(assumptions)
        self.precision_cap = precision_cap
        self.start_precision = start_precision
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ContextError("duplicate generator names")
        for g in self.generators:
            if not g.name.isidentifier():
                raise ContextError(f"invalid generator name {g.name!r}")
            if g.kind == ALGEBRAIC:
                _check_algebraic(g)
            elif g.kind == GENERIC:
                if g.contraction and not (0 < g.value < 1):
                    raise ContextError(f"{g.name}: witness of a contraction ratio must lie in (0, 1)")
            elif g.kind != RATIONAL:
                raise ContextError(f"{g.name}: unknown generator kind {g.kind!r}")
        self.symbolic = tuple(g for g in self.generators if g.kind != RATIONAL)
        self.mixed = any(g.kind == ALGEBRAIC for g in self.symbolic) and any(
            g.kind == GENERIC for g in self.symbolic)
        self._by_name = {g.name: g for g in self.generators}
        self._refined: dict[int, tuple[Fraction, Fraction]] = {}
        if self.symbolic:
            self.ring = PolyRing([g.name for g in self.symbolic], QQ, grlex)
            self._minpolys = []
            for i, g in enumerate(self.symbolic):
                if g.kind == ALGEBRAIC:
                    v = self.ring.gens[i]
                    m = self.ring.zero
                    for c in g.minpoly:
                        m = m * v + self.ring.ground_new(QQ(c.numerator, c.denominator))
                    self._minpolys.append((i, m, len(g.minpoly) - 1))
        else:
            self.ring = None
            self._minpolys = []

    @property
    def is_rational(self) -> bool:
        return not self.symbolic

    def __repr__(self):
        return f"ParameterContext({[g.name + ':' + g.kind for g in self.generators]})"

    # -- element construction -------------------------------------------------
    def gen(self, name: str):
        g = self._by_name.get(name)
        if g is None:
            raise ContextError(f"unknown generator {name!r}")
        if g.kind == RATIONAL:
            return g.value
        idx = self.symbolic.index(g)
        return ParamValue._make(self, self.ring.gens[idx], self.ring.one)

    def const(self, x):
        """Embed an exact rational into the context's value type."""
        x = _frac(x)
        if self.ring is None:
            return x
        return ParamValue._make(self, self._ground(x), self.ring.one)

    def coerce(self, x):
        if isinstance(x, ParamValue):
            if x.ctx is not self:
                raise ContextError("values from different parameter contexts")
            return x
        return self.const(x)

    def _ground(self, x: Fraction):
        return self.ring.ground_new(QQ(x.numerator, x.denominator))

    # -- normal form ----------------------------------------------------------
    def _reduce(self, p):
        if self._minpolys and not p.is_ground:
            p = p.rem([m for _, m, _ in self._minpolys])
        return p

    def _rationalize(self, num, den):
        """Multiply through so that ``den`` is free of algebraic generators."""
        for idx, m, deg in self._minpolys:
            if den.degree(idx) <= 0:
                continue
            # columns: coordinates of den * a^j in the basis 1, a, ..., a^(deg-1)
            cols = []
            for j in range(deg):
                prod = self._reduce(den * self.ring.gens[idx] ** j)
                cols.append(_coords(prod, idx, deg, self.ring))
            mat = [[cols[j][k] for j in range(deg)] for k in range(deg)]
            det = _det(mat, self.ring)
            if det == 0:
                raise DivisionByZero("division by zero")
            cof = self.ring.zero
            a = self.ring.gens[idx]
            for k in range(deg):
                minor = [row[:k] + row[k + 1:] for row in mat[1:]]
                c = _det(minor, self.ring) if minor else self.ring.one
                if k % 2:
                    c = -c
                cof += c * a ** k
            num = self._reduce(num * cof)
            den = det
        return num, den

    def _normalize(self, num, den):
        num = self._reduce(num)
        den = self._reduce(den)
        if den == 0:
            raise DivisionByZero("division by zero")
        num, den = self._rationalize(num, den)
        if num == 0:
            return self.ring.zero, self.ring.one
        g = num.gcd(den)
        if g != 1:
            num = num.exquo(g)
            den = den.exquo(g)
        lc = den.LC
        if lc != 1:
            num = num.quo_ground(lc)
            den = den.quo_ground(lc)
        return num, den

    # -- numerics -------------------------------------------------------------
    def _enclosure(self, idx: int, bits: int) -> Interval:
        g = self.symbolic[idx]
        if g.kind == GENERIC:
            return Interval(g.value)
        lo, hi = self._refined.get(idx, g.interval)
        target = Fraction(1, 1 << bits)
        if hi - lo > target:
            flo = _horner(g.minpoly, lo)
            while hi - lo > target:
                mid = (lo + hi) / 2
                fm = _horner(g.minpoly, mid)
                if fm == 0:
                    lo = hi = mid
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            self._refined[idx] = (lo, hi)
        return Interval(lo, hi)

    def _evaluate(self, p, bits: int) -> Interval:
        encl = [self._enclosure(i, bits + 8) for i in range(len(self.symbolic))]
        total = Interval(Fraction(0))
        for monom, coeff in p.terms():
            term = Interval(Fraction(1))
            for i, e in enumerate(monom):
                if e:
                    term = term * (encl[i] ** e)
            term = term * _frac(coeff)
            total = (total + term).rounded(bits + 8)
        return total

    def poly_sign(self, p) -> int:
        if p.is_ground:
            c = _frac(p.LC) if p else Fraction(0)
            return (c > 0) - (c < 0)
        bits = self.start_precision
        while bits <= self.precision_cap:
            enc = self._evaluate(p, bits)
            if enc.lo > 0:
                return 1
            if enc.hi < 0:
                return -1
            bits *= 2
        raise IndeterminateSign(
            f"sign of {p} undecided at {self.precision_cap} bits; a generic witness may satisfy "
            "an algebraic relation (declare the generator as algebraic)")

    def poly_approx(self, p, bits: int) -> Fraction:
        enc = self._evaluate(p, bits)
        return (enc.lo + enc.hi) / 2


def _coords(p, idx, deg, ring):
    out = [ring.zero] * deg
    for monom, coeff in p.terms():
        e = monom[idx]
        rest = monom[:idx] + (0,) + monom[idx + 1:]
        out[e] += ring({rest: coeff})
    return out


def _det(mat, ring):
    n = len(mat)
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    total = ring.zero
    for k in range(n):
        if mat[0][k] == 0:
            continue
        minor = [row[:k] + row[k + 1:] for row in mat[1:]]
        term = mat[0][k] * _det(minor, ring)
        total = total - term if k % 2 else total + term
    return total


class ParamValue:
    """An element of the parameter field in canonical normal form."""

    __slots__ = ("ctx", "num", "den", "_sign", "_hash")

    def __init__(self, ctx: ParameterContext, num, den=None):
        if ctx.ring is None:
            raise ContextError("rational-only contexts use Fraction values")
        num = num if not isinstance(num, (int, Fraction)) else ctx._ground(_frac(num))
        den = ctx.ring.one if den is None else den
        num, den = ctx._normalize(num, den)
        self._init(ctx, num, den)

    def _init(self, ctx, num, den):
        self.ctx = ctx
        self.num = num
        self.den = den
        self._sign = None
        self._hash = None

    @classmethod
    def _make(cls, ctx, num, den):
        obj = cls.__new__(cls)
        num, den = ctx._normalize(num, den)
        obj._init(ctx, num, den)
        return obj

    @classmethod
    def _raw(cls, ctx, num, den):
        obj = cls.__new__(cls)
        obj._init(ctx, num, den)
        return obj

    # -- arithmetic -----------------------------------------------------------
    def _other(self, other):
        if isinstance(other, ParamValue):
            if other.ctx is not self.ctx:
                raise ContextError("values from different parameter contexts")
            return other.num, other.den
        if isinstance(other, (int, Rational)):
            return self.ctx._ground(_frac(other)), self.ctx.ring.one
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        n, d = o
        if d == self.den:
            return ParamValue._make(self.ctx, self.num + n, d)
        return ParamValue._make(self.ctx, self.num * d + n * self.den, self.den * d)

    __radd__ = __add__

    def __neg__(self):
        return ParamValue._raw(self.ctx, -self.num, self.den)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        n, d = o
        if d == self.den:
            return ParamValue._make(self.ctx, self.num - n, d)
        return ParamValue._make(self.ctx, self.num * d - n * self.den, self.den * d)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        n, d = o
        return ParamValue._make(self.ctx, self.num * n, self.den * d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        n, d = o
        if n == 0:
            raise DivisionByZero("division by zero")
        return ParamValue._make(self.ctx, self.num * d, self.den * n)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if self.num == 0:
            raise DivisionByZero("division by zero")
        n, d = o
        return ParamValue._make(self.ctx, n * self.den, d * self.num)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.ctx.const(1) / (self ** -k)
        return ParamValue._make(self.ctx, self.num ** k, self.den ** k)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- order and identity ---------------------------------------------------
    def sign(self) -> int:
        if self._sign is None:
            if self.num == 0:
                self._sign = 0
            else:
                self._sign = self.ctx.poly_sign(self.num) * self.ctx.poly_sign(self.den)
        return self._sign

    def is_zero(self) -> bool:
        return self.num == 0

    def _cmp(self, other) -> int:
        diff = self - other
        return diff.sign()

    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        n, d = o
        return self.num == n and self.den == d

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        if self._hash is None:
            if self.num.is_ground and self.den.is_ground:
                self._hash = hash(self.to_fraction())
            else:
                # PolyElement caches its own hash and can go stale; hash the terms instead
                self._hash = hash((tuple(sorted(self.num.terms())), tuple(sorted(self.den.terms()))))
        return self._hash

    def __bool__(self):
        return self.num != 0

    def is_constant(self) -> bool:
        return self.num.is_ground and self.den.is_ground

    def to_fraction(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a rational constant")
        n = _frac(self.num.LC) if self.num else Fraction(0)
        return n / _frac(self.den.LC)

    # -- numerics and display -------------------------------------------------
    def approx(self, bits: int = 80) -> Fraction:
        """Rational approximation, accurate to roughly ``bits`` bits."""
        if self.is_constant():
            return self.to_fraction()
        n = self.ctx.poly_approx(self.num, bits + 16)
        d = self.ctx.poly_approx(self.den, bits + 16)
        return n / d

    def __float__(self):
        a = self.approx(64)
        return a.numerator / a.denominator

    def expr(self) -> str:
        num = str(self.num).replace("**", "^")
        if self.den == 1:
            return num
        den = str(self.den).replace("**", "^")
        return f"({num})/({den})"

    def __str__(self):
        return self.expr()

    def __repr__(self):
        return f"ParamValue({self.expr()})"


def sign(x) -> int:
    """Exact sign of a ParamValue or rational number: -1, 0 or +1."""
    if isinstance(x, ParamValue):
        return x.sign()
    return (x > 0) - (x < 0)


def equals(a, b) -> bool:
    return sign(a - b) == 0 if isinstance(a, ParamValue) or isinstance(b, ParamValue) else a == b


def to_mpf(x, dps: int = 30):
    """Numeric value of an exact quantity as an mpmath float."""
    bits = int(dps * 3.33) + 16
    q = x.approx(bits) if isinstance(x, ParamValue) else _frac(x)
    with mpmath.workdps(dps + 5):
        return mpmath.mpf(q.numerator) / q.denominator


def decimal_str(x, digits: int = 12) -> str:
    """Decimal rendering with ``digits`` significant digits."""
    with mpmath.workdps(digits + 10):
        return mpmath.nstr(to_mpf(x, digits + 10), digits)


def exact_str(x) -> str:
    """Exact textual form: ``num/den`` for rationals, a polynomial expression otherwise."""
    if isinstance(x, ParamValue):
        if x.is_constant():
            x = x.to_fraction()
        else:
            return x.expr()
    x = _frac(x)
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
