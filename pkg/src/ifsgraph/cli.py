"""Command-line entry point: ``ifsgraph <subcommand> CONFIG [flags]``.

Exit status: 0 success (``check``: guaranteed), 1 ``check`` found a cycle
outside the essential class, 2 ``check`` could not decide, 3 any error
(reported as JSON on stdout), 4 internal failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .config import RunConfig, load_config, parse_expr
from .errors import (IFSGraphError, IndeterminateSign, MultipleSinkComponents, OracleBudgetExceeded,
                     TruncatedGraph, ValidationError)
from .graph import Budget, build_graph, contract_single_child, to_dot, to_json
from .multifractal import (concave_conjugate, dimension_bounds, is_concave, lq_to_csv, mf_formalism_check,
                           periodic_dimension, pumped_family, simple_cycles, lq_spectrum)

EXIT_OK, EXIT_NOT_GUARANTEED, EXIT_UNDETERMINED, EXIT_ERROR, EXIT_INTERNAL = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError([f"usage: {message}"])


def _q_list(text: str) -> list[float]:
    try:
        return [float(Fraction(parse_expr(x.strip()).evaluate({}))) for x in text.split(",") if x.strip()]
    except (IFSGraphError, KeyError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad q list {text!r}") from None


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(parse_expr(text).evaluate({}))
    except (IFSGraphError, KeyError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad number {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ifsgraph", description="Transition graphs and multifractal analysis of self-similar measures.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("config", help="TOML run configuration")
        sp.add_argument("--max-vertices", type=int, help="vertex budget for graph exploration")
        sp.add_argument("--json", metavar="PATH", help="write JSON here ('-' for stdout)")

    sp = sub.add_parser("analyze", help="build the graph and summarize it")
    common(sp)
    sp = sub.add_parser("graph", help="export the transition graph")
    common(sp)
    sp.add_argument("--dot", metavar="PATH", help="write Graphviz DOT here ('-' for stdout)")
    sp.add_argument("--contract", action="store_true", help="contract single-child vertices first")
    sp = sub.add_parser("dims", help="periodic local dimensions and attained extremes")
    common(sp)
    sp.add_argument("--max-cycle-len", type=int)
    sp.add_argument("--pump-depth", type=int)
    sp.add_argument("--contract", action="store_true")
    sp.add_argument("--family", action="append", default=[], metavar="PRE:PUMP:SUF",
                    help="pumped family as comma-separated edge names, e.g. \"e5':e11':e10\"")
    sp = sub.add_parser("lq", help="numeric L^q spectrum and its concave conjugate")
    common(sp)
    sp.add_argument("--q", type=_q_list, help="comma-separated q values")
    sp.add_argument("--t-min", type=_fraction, help="finest scale, e.g. 1/6561")
    sp.add_argument("--csv", metavar="PATH", help="write (q, tau) and (alpha, f) rows here")
    sp = sub.add_parser("check", help="formalism verdict only (exit 0/1/2)")
    common(sp)
    return p


def _emit(text: str, path: str | None, stdout) -> None:
    if path is None or path == "-":
        stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _dumps(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def _graph(cfg: RunConfig, args):
    budget = cfg.budget
    if getattr(args, "max_vertices", None):
        budget = Budget(args.max_vertices, budget.max_oracle_states, budget.max_cover_states)
    return build_graph(cfg.build_ifs(), budget)


MIXED_NOTE = ("unverified: generic generators are assumed algebraically independent of the "
              "algebraic ones")


def _assumptions(cfg: RunConfig, ifs) -> list[str]:
    out = list(cfg.assumptions)
    if ifs.context.mixed:
        out.append(MIXED_NOTE)
    return out


def cmd_analyze(cfg, args, out):
    g = _graph(cfg, args)
    data = {"vertices": len(g.vertices), "edges": len(g.edges), "fnc": g.status, "reason": g.reason,
            "wsc": {"max_covering_set": g.wsc.max_cover, "states": g.wsc.states, "verdict": g.wsc.verdict()},
            "assumptions": _assumptions(cfg, g.ifs)}
    if g.closed:
        try:
            data["essential_class"] = [g.names[v] for v in g.essential_class()]
            data["formalism"] = mf_formalism_check(g).to_dict()
        except MultipleSinkComponents as exc:
            data["essential_class"] = None
            data["formalism"] = None
            data["sinks"] = [[g.names[v] for v in s] for s in exc.sinks]
    else:
        data["essential_class"] = None
        data["formalism"] = None
    _emit(_dumps(data), args.json, out)
    return EXIT_OK


def cmd_graph(cfg, args, out):
    g = _graph(cfg, args)
    if args.contract:
        g = contract_single_child(g)
    if args.dot is None and args.json is None:
        args.json = "-"
    if args.json is not None:
        _emit(to_json(g), args.json, out)
    if args.dot is not None:
        _emit(to_dot(g), args.dot, out)
    return EXIT_OK


def cmd_dims(cfg, args, out):
    g = _graph(cfg, args)
    g.require_closed()
    if args.contract:
        g = contract_single_child(g)
    max_len = args.max_cycle_len or cfg.analysis.max_cycle_len
    depth = cfg.analysis.pump_depth if args.pump_depth is None else args.pump_depth
    cycles = []
    for c in simple_cycles(g, max_len):
        try:
            cycles.append(periodic_dimension(g, c).to_dict())
        except IFSGraphError as exc:
            cycles.append({"cycle": c.names, "error": exc.to_dict()})
    bounds = dimension_bounds(g, max_len, depth)
    families = []
    for spec in args.family:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError([f"--family expects PRE:PUMP:SUF, got {spec!r}"])
        pre, pump, suf = ([x for x in part.split(",") if x] for part in parts)
        try:
            fam = pumped_family(g, pre, pump, suf, range(0, max(depth, 1) + 1))
        except KeyError as exc:
            raise ValidationError([f"--family: unknown edge {exc.args[0]!r}"]) from None
        families.append({"family": spec, **fam.to_dict()})
    data = {"cycles": cycles, "bounds": bounds.to_dict(), "families": families}
    _emit(_dumps(data), args.json, out)
    return EXIT_OK


def cmd_lq(cfg, args, out):
    g = _graph(cfg, args)
    qs = args.q or cfg.analysis.q
    t_min = args.t_min or cfg.analysis.t_min
    rep = lq_spectrum(g, qs, t_min, cfg.analysis.n_scales, cfg.path_budget)
    conj = concave_conjugate(rep) if len(qs) >= 3 else None
    data = rep.to_dict()
    data["concave_on_grid"] = is_concave(rep.qs, rep.tau)
    if conj is not None:
        data["conjugate"] = [{"alpha": a, "f": f} for a, f in conj]
    _emit(_dumps(data), args.json, out)
    if args.csv:
        _emit(lq_to_csv(rep, conj or []), args.csv, out)
    return EXIT_OK


def cmd_check(cfg, args, out):
    try:
        g = _graph(cfg, args)
        verdict = mf_formalism_check(g)
    except (TruncatedGraph, MultipleSinkComponents, OracleBudgetExceeded, IndeterminateSign) as exc:
        _emit(_dumps({"verdict": "undetermined", "reason": exc.to_dict()}), args.json, out)
        return EXIT_UNDETERMINED
    data = {"verdict": "guaranteed" if verdict.guaranteed else "not-guaranteed", **verdict.to_dict(),
            "assumptions": _assumptions(cfg, g.ifs)}
    _emit(_dumps(data), args.json, out)
    return EXIT_OK if verdict.guaranteed else EXIT_NOT_GUARANTEED


COMMANDS = {"analyze": cmd_analyze, "graph": cmd_graph, "dims": cmd_dims, "lq": cmd_lq, "check": cmd_check}


def main(argv=None, stdout=None) -> int:
    out = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args, out)
    except IFSGraphError as exc:
        out.write(_dumps(exc.to_dict()))
        return EXIT_ERROR
    except argparse.ArgumentTypeError as exc:
        out.write(_dumps({"error": "usage", "message": str(exc)}))
        return EXIT_ERROR
    except SystemExit as exc:            # --help
        return int(exc.code or 0)
    except (OSError, RecursionError, ZeroDivisionError, ValueError) as exc:
        out.write(_dumps({"error": "runtime", "message": f"{type(exc).__name__}: {exc}"}))
        return EXIT_ERROR
    except Exception as exc:             # noqa: BLE001 - last-resort structured report
        out.write(_dumps({"error": "internal", "message": f"{type(exc).__name__}: {exc}"}))
        return EXIT_INTERNAL


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
