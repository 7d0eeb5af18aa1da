"""Run configuration: TOML layout, expression grammar and validation.

Layout (``format_version = 1``)::

    format_version = 1
    probabilities = ["1/3", "1/3", "1/3"]
    assumptions = []                  # optional, reported only

    [[param]]
    name = "rho"
    kind = "rational"                 # rational | generic | algebraic
    value = "1/2"                     # rational value, or generic witness
    # minpoly = "x^2+x-1"             # algebraic only
    # interval = ["3/5", "7/10"]      # algebraic only

    [[map]]
    ratio = "rho"
    offset = "0"

    [budget]                          # optional
    max_vertices = 10000
    oracle_states = 200000
    cover_states = 2000
    path_budget = 2000000

    [analysis]                        # optional
    q = [-2, -1, 0, 1, 2]
    t_min = "1/6561"
    n_scales = 12
    max_cycle_len = 8
    pump_depth = 3

    [output]                          # optional; "-" means stdout
    json = "-"
    dot = "graph.dot"

Expressions accept integers, decimals, parameter names, ``+ - * / ^``
(integer exponents) and parentheses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
try:
    import tomllib
except ModuleNotFoundError:          # Python 3.10
    import tomli as tomllib

from .errors import ContextError, IFSGraphError, IndeterminateSign, ParseError, ValidationError
from .field import ALGEBRAIC, GENERIC, RATIONAL, Generator, ParameterContext, exact_str, sign
from .graph import Budget
from .ifs import IFS, Similarity

FORMAT_VERSION = 1


# -- expressions ------------------------------------------------------------------

_NUM = re.compile(r"\d+(?:\.\d*)?|\.\d+")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Expr:
    """Parsed arithmetic expression tree: ``('num', Fraction) | ('name', str) | (op, a, b) | ('neg', a)``."""

    tree: tuple
    text: str

    def names(self) -> set[str]:
        out: set[str] = set()

        def walk(t):
            if not isinstance(t, tuple):
                return
            if t[0] == "name":
                out.add(t[1])
            elif t[0] != "num":
                for sub in t[1:]:
                    walk(sub)
        walk(self.tree)
        return out

    def evaluate(self, env: dict, const=lambda x: x):
        def ev(t):
            op = t[0]
            if op == "num":
                return const(t[1])
            if op == "name":
                return env[t[1]]
            if op == "neg":
                return -ev(t[1])
            a = ev(t[1])
            if op == "^":
                return a ** t[2]
            b = ev(t[2])
            return {"+": a + b, "-": a - b, "*": a * b}[op] if op != "/" else a / b
        return ev(self.tree)


class _Parser:
    def __init__(self, text: str, line: int | None, col0: int):
        self.text, self.line, self.col0 = text, line, col0
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos].isspace():
                pos += 1
                continue
            m = _NUM.match(text, pos) or _NAME.match(text, pos)
            if m:
                kind = "num" if m.re is _NUM else "name"
                self.toks.append((kind, m.group(0), pos))
                pos = m.end()
            elif text[pos] in "+-*/^()":
                self.toks.append(("op", text[pos], pos))
                pos += 1
            else:
                self.fail(f"unexpected character {text[pos]!r}", pos)
        self.i = 0

    def fail(self, msg, pos=None):
        if pos is None:
            pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        raise ParseError(f"{msg} in expression {self.text!r}", self.line, self.col0 + pos + 1)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, value=None):
        t = self.peek()
        if t is None or (value is not None and t[1] != value):
            self.fail(f"expected {value!r}" if value else "unexpected end")
        self.i += 1
        return t

    def parse(self) -> tuple:
        if not self.toks:
            self.fail("empty expression", 0)
        tree = self.expr()
        if self.peek() is not None:
            self.fail(f"unexpected {self.peek()[1]!r}")
        return tree

    def expr(self):
        tree = self.term()
        while self.peek() and self.peek()[1] in "+-" and self.peek()[0] == "op":
            op = self.take()[1]
            tree = (op, tree, self.term())
        return tree

    def term(self):
        tree = self.unary()
        while self.peek() and self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            tree = (op, tree, self.unary())
        return tree

    def unary(self):
        t = self.peek()
        if t and t[0] == "op" and t[1] in "+-":
            self.take()
            inner = self.unary()
            return ("neg", inner) if t[1] == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        t = self.peek()
        if t and t[0] == "op" and t[1] == "^":
            self.take()
            neg = False
            if self.peek() and self.peek()[1] == "-":
                self.take()
                neg = True
            tok = self.peek()
            if tok is None or tok[0] != "num" or not tok[1].isdigit():
                self.fail("exponent must be an integer literal")
            self.take()
            return ("^", base, -int(tok[1]) if neg else int(tok[1]))
        return base

    def atom(self):
        t = self.peek()
        if t is None:
            self.fail("unexpected end")
        if t[0] == "num":
            self.take()
            return ("num", Fraction(t[1]))
        if t[0] == "name":
            self.take()
            return ("name", t[1])
        if t[1] == "(":
            self.take()
            tree = self.expr()
            self.take(")")
            return tree
        self.fail(f"unexpected {t[1]!r}")


def parse_expr(text, line: int | None = None, column: int = 0) -> Expr:
    """Parse an arithmetic expression; ``line``/``column`` locate it in the config file."""
    if isinstance(text, bool):
        raise ParseError(f"expected an expression, got {text!r}", line, column + 1)
    if isinstance(text, int):
        text = str(text)
    elif isinstance(text, float):
        text = repr(text)
    elif not isinstance(text, str):
        raise ParseError(f"expected an expression string, got {type(text).__name__}", line, column + 1)
    return Expr(_Parser(text, line, column).parse(), text)


# -- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class ParamDecl:
    name: str
    kind: str
    value: Fraction | None = None
    minpoly: str | None = None
    interval: tuple | None = None
    contraction: bool = False

    def generator(self) -> Generator:
        if self.kind == RATIONAL:
            return Generator.rational(self.name, self.value)
        if self.kind == GENERIC:
            return Generator.generic(self.name, self.value, self.contraction)
        return Generator.algebraic(self.name, self.minpoly, self.interval, self.contraction)


@dataclass
class Analysis:
    q: list = field(default_factory=lambda: [-2.0, -1.0, 0.0, 1.0, 2.0])
    t_min: Fraction = Fraction(1, 3 ** 8)
    n_scales: int = 12
    max_cycle_len: int = 8
    pump_depth: int = 3


@dataclass
class RunConfig:
    params: list
    maps: list                       # (ratio Expr, offset Expr)
    probabilities: list
    assumptions: list = field(default_factory=list)
    budget: Budget = field(default_factory=Budget)
    path_budget: int = 2_000_000
    analysis: Analysis = field(default_factory=Analysis)
    outputs: dict = field(default_factory=dict)

    def context(self) -> ParameterContext:
        return ParameterContext([p.generator() for p in self.params], self.assumptions)

    def build_ifs(self, normalize: bool = True) -> IFS:
        ctx = self.context()
        env = {p.name: ctx.gen(p.name) for p in self.params}
        maps = tuple(Similarity(ctx.coerce(r.evaluate(env, ctx.const)), ctx.coerce(d.evaluate(env, ctx.const)))
                     for r, d in self.maps)
        ifs = IFS(maps, tuple(self.probabilities), ctx)
        return ifs.normalize_hull() if normalize else ifs


_KNOWN_TOP = {"format_version", "probabilities", "assumptions", "param", "map", "budget", "analysis", "output"}
_BUDGET_KEYS = {"max_vertices", "oracle_states", "cover_states", "path_budget"}
_ANALYSIS_KEYS = {"q", "t_min", "n_scales", "max_cycle_len", "pump_depth"}


class _Locator:
    """Best-effort line/column lookup of values in the raw TOML text."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def find(self, key: str, value=None) -> tuple[int | None, int]:
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for n, line in enumerate(self.lines, 1):
            if pat.match(line):
                if value is None:
                    return n, 0
                if isinstance(value, str):
                    col = line.find(value)
                    if col >= 0:
                        return n, col
        return None, 0


def _fraction(x, where: str, errors: list):
    try:
        if isinstance(x, bool):
            raise ValueError
        if isinstance(x, float):
            return Fraction(repr(x))
        v = parse_expr(x).evaluate({})
        return Fraction(v)
    except (ValueError, ZeroDivisionError, KeyError, ParseError, TypeError):
        errors.append(f"{where}: expected a rational number, got {x!r}")
        return None


def _int(x, where: str, errors: list, minimum: int = 0):
    if isinstance(x, bool) or not isinstance(x, int) or x < minimum:
        errors.append(f"{where}: expected an integer >= {minimum}, got {x!r}")
        return None
    return x


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ParseError
        Malformed TOML or an expression that does not parse.
    ValidationError
        Every semantic problem found, collected into one error.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"config is not UTF-8: {exc.reason}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
        msg = getattr(exc, "msg", str(exc))
        raise ParseError(f"invalid TOML: {msg}", line, col) from None
    loc = _Locator(text)
    errors: list[str] = []

    for key in doc:
        if key not in _KNOWN_TOP:
            errors.append(f"unknown key {key!r}")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        errors.append(f"format_version must be {FORMAT_VERSION}, got {version!r}")

    params = _parse_params(doc.get("param", []), errors)
    names = {p.name for p in params}
    maps = _parse_maps(doc.get("map", []), names, loc, errors)

    probs_raw = doc.get("probabilities")
    probs: list = []
    if not isinstance(probs_raw, list) or not probs_raw:
        errors.append("probabilities: expected a non-empty list")
    else:
        probs = [_fraction(p, f"probabilities[{i}]", errors) for i, p in enumerate(probs_raw)]
        if all(p is not None for p in probs):
            if any(p <= 0 for p in probs):
                errors.append("probabilities must be strictly positive")
            if sum(probs) != 1:
                errors.append(f"probabilities sum to {exact_str(sum(probs))}, not 1")
        if maps and len(probs) != len(maps):
            errors.append(f"{len(maps)} maps but {len(probs)} probabilities")

    assumptions = doc.get("assumptions", [])
    if not isinstance(assumptions, list) or not all(isinstance(a, str) for a in assumptions):
        errors.append("assumptions: expected a list of strings")
        assumptions = []

    budget, path_budget = _parse_budget(doc.get("budget", {}), errors)
    analysis = _parse_analysis(doc.get("analysis", {}), errors)
    outputs = doc.get("output", {})
    if not isinstance(outputs, dict) or not all(k in ("json", "dot", "csv") and isinstance(v, str)
                                                for k, v in outputs.items()):
        errors.append("output: expected string entries json/dot/csv")
        outputs = {}

    if errors:
        raise ValidationError(errors)
    cfg = RunConfig(params, maps, probs, list(assumptions), budget, path_budget, analysis, dict(outputs))
    _validate_semantics(cfg)
    return cfg


def _parse_params(raw, errors: list) -> list[ParamDecl]:
    if not isinstance(raw, list):
        errors.append("param: expected an array of tables [[param]]")
        return []
    out = []
    for i, p in enumerate(raw):
        where = f"param[{i}]"
        if not isinstance(p, dict):
            errors.append(f"{where}: expected a table")
            continue
        name, kind = p.get("name"), p.get("kind", RATIONAL)
        if not isinstance(name, str) or not name.isidentifier():
            errors.append(f"{where}: invalid name {name!r}")
            continue
        extra = set(p) - {"name", "kind", "value", "minpoly", "interval", "contraction"}
        if extra:
            errors.append(f"{where}: unknown keys {sorted(extra)}")
        contraction = p.get("contraction", False)
        if not isinstance(contraction, bool):
            errors.append(f"{where}: contraction must be true or false")
            contraction = False
        if kind in (RATIONAL, GENERIC):
            v = _fraction(p.get("value"), f"{where}.value", errors)
            if v is not None:
                out.append(ParamDecl(name, kind, value=v, contraction=contraction))
        elif kind == ALGEBRAIC:
            mp, iv = p.get("minpoly"), p.get("interval")
            if not isinstance(mp, str):
                errors.append(f"{where}.minpoly: expected a polynomial string in x")
                continue
            if not isinstance(iv, list) or len(iv) != 2:
                errors.append(f"{where}.interval: expected [lo, hi]")
                continue
            lo, hi = (_fraction(x, f"{where}.interval", errors) for x in iv)
            if lo is not None and hi is not None:
                out.append(ParamDecl(name, kind, minpoly=mp, interval=(lo, hi), contraction=contraction))
        else:
            errors.append(f"{where}: unknown kind {kind!r}")
    seen = set()
    for p in out:
        if p.name in seen:
            errors.append(f"duplicate parameter {p.name!r}")
        seen.add(p.name)
    return out


def _parse_maps(raw, names: set, loc: _Locator, errors: list) -> list:
    if not isinstance(raw, list) or len(raw) < 2:
        errors.append("map: need at least two [[map]] tables")
        return []
    out = []
    for i, m in enumerate(raw):
        where = f"map[{i}]"
        if not isinstance(m, dict) or set(m) != {"ratio", "offset"}:
            errors.append(f"{where}: expected exactly the keys ratio and offset")
            continue
        pair = []
        for key in ("ratio", "offset"):
            val = m[key]
            line, col = loc.find(key, val if isinstance(val, str) else None)
            expr = parse_expr(val, line, col)
            unknown = expr.names() - names
            if unknown:
                errors.append(f"{where}.{key}: unknown parameter(s) {sorted(unknown)}")
            pair.append(expr)
        out.append(tuple(pair))
    return out


def _parse_budget(raw, errors: list) -> tuple[Budget, int]:
    if not isinstance(raw, dict):
        errors.append("budget: expected a table")
        return Budget(), 2_000_000
    for k in set(raw) - _BUDGET_KEYS:
        errors.append(f"budget: unknown key {k!r}")
    d = Budget()
    mv = _int(raw.get("max_vertices", d.max_vertices), "budget.max_vertices", errors, 1)
    os_ = _int(raw.get("oracle_states", d.max_oracle_states), "budget.oracle_states", errors, 1)
    cs = _int(raw.get("cover_states", d.max_cover_states), "budget.cover_states", errors, 1)
    pb = _int(raw.get("path_budget", 2_000_000), "budget.path_budget", errors, 1)
    return Budget(mv or d.max_vertices, os_ or d.max_oracle_states, cs or d.max_cover_states), pb or 2_000_000


def _parse_analysis(raw, errors: list) -> Analysis:
    a = Analysis()
    if not isinstance(raw, dict):
        errors.append("analysis: expected a table")
        return a
    for k in set(raw) - _ANALYSIS_KEYS:
        errors.append(f"analysis: unknown key {k!r}")
    if "q" in raw:
        qs = raw["q"]
        if not isinstance(qs, list) or not qs or not all(
                isinstance(q, (int, float)) and not isinstance(q, bool) for q in qs):
            errors.append("analysis.q: expected a non-empty list of numbers")
        else:
            a.q = [float(q) for q in qs]
    if "t_min" in raw:
        t = _fraction(raw["t_min"], "analysis.t_min", errors)
        if t is not None and not (0 < t < 1):
            errors.append("analysis.t_min must lie in (0, 1)")
        elif t is not None:
            a.t_min = t
    for key in ("n_scales", "max_cycle_len", "pump_depth"):
        if key in raw:
            v = _int(raw[key], f"analysis.{key}", errors, 1 if key != "pump_depth" else 0)
            if v is not None:
                setattr(a, key, v)
    return a


def _validate_semantics(cfg: RunConfig) -> None:
    """Build the context and check every ratio is a contraction."""
    errors = []
    try:
        ctx = cfg.context()
    except (ContextError, ValueError) as exc:
        raise ValidationError([f"param: {exc}"]) from None
    env = {p.name: ctx.gen(p.name) for p in cfg.params}
    for i, (r, d) in enumerate(cfg.maps):
        try:
            ratio = r.evaluate(env, ctx.const)
            d.evaluate(env, ctx.const)
        except ZeroDivisionError:
            errors.append(f"map[{i}]: division by zero")
            continue
        try:
            if not (sign(abs(ratio)) > 0 and sign(1 - abs(ratio)) > 0):
                errors.append(f"map[{i}].ratio: need 0 < |ratio| < 1, got {exact_str(ratio)}")
        except IndeterminateSign as exc:
            errors.append(f"map[{i}].ratio: {exc}")
    if errors:
        raise ValidationError(errors)


# -- writing --------------------------------------------------------------------

def _q(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(cfg: RunConfig) -> str:
    """TOML text that parses back to an equivalent configuration."""
    out = [f"format_version = {FORMAT_VERSION}",
           "probabilities = [" + ", ".join(_q(exact_str(p)) for p in cfg.probabilities) + "]"]
    if cfg.assumptions:
        out.append("assumptions = [" + ", ".join(_q(a) for a in cfg.assumptions) + "]")
    for p in cfg.params:
        out += ["", "[[param]]", f"name = {_q(p.name)}", f"kind = {_q(p.kind)}"]
        if p.kind == ALGEBRAIC:
            out += [f"minpoly = {_q(p.minpoly)}",
                    f"interval = [{_q(exact_str(p.interval[0]))}, {_q(exact_str(p.interval[1]))}]"]
        else:
            out.append(f"value = {_q(exact_str(p.value))}")
        if p.contraction:
            out.append("contraction = true")
    for r, d in cfg.maps:
        out += ["", "[[map]]", f"ratio = {_q(r.text)}", f"offset = {_q(d.text)}"]
    b = cfg.budget
    out += ["", "[budget]", f"max_vertices = {b.max_vertices}", f"oracle_states = {b.max_oracle_states}",
            f"cover_states = {b.max_cover_states}", f"path_budget = {cfg.path_budget}"]
    a = cfg.analysis
    out += ["", "[analysis]", "q = [" + ", ".join(repr(q) for q in a.q) + "]",
            f"t_min = {_q(exact_str(a.t_min))}", f"n_scales = {a.n_scales}",
            f"max_cycle_len = {a.max_cycle_len}", f"pump_depth = {a.pump_depth}"]
    if cfg.outputs:
        out += ["", "[output]"] + [f"{k} = {_q(v)}" for k, v in sorted(cfg.outputs.items())]
    return "\n".join(out) + "\n"


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ValidationError([f"cannot read {path}: {exc.strerror}"]) from None
    return parse_config(data)


__all__ = ["RunConfig", "ParamDecl", "Analysis", "Expr", "parse_expr", "parse_config", "dump_config",
           "load_config", "IFSGraphError"]
