"""Command-line experiment runner.

Exit status: 0 when the run passes, 1 on usage or input errors, 2 when a
statistical or numerical check fails.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import appendix, certify, flows, io as rio, reinforced
from .builders import (free_group_cayley_ball, loop_graph, tree_with_half_line, two_cycle_graph,
                       two_vertex_full_graph, zd_truncation)
from .chain import green_function, green_via_reversal, green_via_reversal_batch, green_diagonal_batch
from .estimators import SIGNIFICANCE, hill_sweep, mc_moment, tail_exponent_hill
from .graph import DirectedMultigraph, GraphError, truncate_to_cemetery
from .rng import stream

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
NAMED_GRAPHS = ("loop", "two-cycle", "two-vertex", "free-group", "tree-half-line")
PSI_NAMES = ("1", "p_e0", "prod")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- graph and weight specs -------------------------------------------------------------

def _floats(value, what: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        vals = [float(value)]
    elif isinstance(value, (list, tuple)):
        vals = [float(v) for v in value]
    else:
        try:
            vals = [float(v) for v in str(value).split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"{what}: expected a number or comma-separated numbers, got {value!r}") from None
    if not vals:
        raise UsageError(f"{what}: empty")
    arr = np.array(vals)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise UsageError(f"{what}: weights must be positive and finite")
    return arr


def _per_edge(graph: DirectedMultigraph, a: np.ndarray) -> np.ndarray:
    if a.size == 1:
        return np.full(graph.n_edges, a[0])
    if a.size != graph.n_edges:
        raise UsageError(f"--alpha: need 1 or {graph.n_edges} values, got {a.size}")
    return a


def build_graph(args, need_cemetery: bool, default: str | None = None):
    """Resolve the graph spec to ``(graph, x0)``."""
    alpha = None if args.alpha is None else _floats(args.alpha, "--alpha")
    sources = [s for s in (args.zd, args.graph, args.edge_list) if s is not None]
    if len(sources) > 1:
        raise UsageError("give only one of --zd, --graph, --edge-list")
    if not sources:
        if default is None:
            raise UsageError("a graph is required: --zd D, --graph NAME or --edge-list PATH")
        args.graph = default
    if args.zd is not None:
        d = int(args.zd)
        if d < 1:
            raise UsageError("--zd must be at least 1")
        a = np.ones(1) if alpha is None else alpha
        if a.size not in (1, 2 * d):
            raise UsageError(f"--alpha: need 1 or {2 * d} values for Z^{d}")
        g = zd_truncation(d, int(args.radius), a if a.size > 1 else float(a[0]))
        x0 = (0,) * d
    elif args.edge_list is not None:
        g = rio.read_edge_list(args.edge_list)
        if args.weights is not None:
            g = g.with_weights(rio.weights_from_edge_list(g, rio.read_edge_list(args.weights)))
        if alpha is not None:
            g = g.with_weights(_per_edge(g, alpha))
        x0 = rio.decode_vertex(args.x0) if args.x0 is not None else g.root
        if x0 is None:
            raise UsageError("edge list has no root: pass --x0")
    else:
        name = args.graph
        if name == "loop":
            g = loop_graph(args.alpha_loop, args.alpha_exit)
        elif name == "two-cycle":
            a, c, e = _floats(args.cycle_weights, "--cycle-weights")
            g = two_cycle_graph(a, c, e)
        elif name == "two-vertex":
            g = two_vertex_full_graph(1.0)
        elif name == "free-group":
            r = int(args.rank)
            a = 1.0 if alpha is None else (alpha if alpha.size > 1 else float(alpha[0]))
            ball = free_group_cayley_ball(r, int(args.radius) + (1 if need_cemetery else 0), a)
            g = truncate_to_cemetery(ball, (), int(args.radius)) if need_cemetery else ball
            alpha = None
        elif name == "tree-half-line":
            t = tree_with_half_line(int(args.depth), int(args.line_length))
            g = truncate_to_cemetery(t, t.root, int(args.radius)) if need_cemetery else t
        else:
            raise UsageError(f"--graph must be one of {', '.join(NAMED_GRAPHS)}")
        if alpha is not None:
            g = g.with_weights(_per_edge(g, alpha))
        x0 = rio.decode_vertex(args.x0) if args.x0 is not None else g.root
    if need_cemetery and g.cemetery is None:
        raise UsageError("this command needs a graph with a cemetery")
    if not g.has_vertex(x0):
        raise UsageError(f"x0 {x0!r} is not a vertex")
    return g, x0


# -- commands ---------------------------------------------------------------------------

def _report_rows(reports):
    return [(r.name, r.statistic, r.p_value, r.n, r.passed, r.level) for r in reports]


REPORT_COLS = ["name", "statistic", "p_value", "n", "passed", "level"]


def cmd_kappa(args):
    if args.zd is not None:
        d = int(args.zd)
        a = np.ones(2 * d) if args.alpha is None else _floats(args.alpha, "--alpha")
        a = np.full(2 * d, a[0]) if a.size == 1 else a
        if a.size != 2 * d:
            raise UsageError(f"--alpha: need 1 or {2 * d} values for Z^{d}")
        closed = flows.kappa_zd(a, d)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = flows.kappa_min_cut_zd(a, d, int(args.max_size))
        ok = abs(closed.value - res.value) <= 1e-9 * max(1.0, closed.value)
        payload = {**res.to_dict(), "kappa_closed_form": closed.value}
    else:
        if args.graph == "free-group":
            # every K of the cap size, and its boundary, must fit in the ball
            args.radius = max(int(args.radius), int(args.max_size))
        g, x0 = build_graph(args, need_cemetery=False)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = flows.kappa_min_cut(g, x0, int(args.max_size))
        ok = True
        payload = res.to_dict()
    table = {"kappa": (["kappa", "minimizer_vertices", "attained_at_cap"],
                       [(res.value, sorted(res.minimizer, key=repr), res.attained_at_cap)])}
    return payload, table, ok


def _green_samples(args):
    g, x0 = build_graph(args, need_cemetery=True)
    samples = certify.sample_green(g, x0, _count(args), args.seed)
    return g, x0, samples


def _count(args) -> int:
    n = int(args.n)
    if n < 1:
        raise UsageError("-n must be at least 1")
    return n


def cmd_tail(args):
    g, x0, G = _green_samples(args)
    try:
        est = tail_exponent_hill(G, args.k)
        sweep = hill_sweep(G)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    payload = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in est.to_dict().items()}
    if args.zd is not None and args.alpha is not None:
        d = int(args.zd)
        a = _floats(args.alpha, "--alpha")
        payload["kappa_formula"] = flows.kappa_zd(np.full(2 * d, a[0]) if a.size == 1 else a, d).value
    payload["sweep"] = [e.to_dict() for e in sweep]
    ok = True
    if args.expect_range is not None:
        lo, hi = (float(v) for v in str(args.expect_range).split(","))
        ok = lo <= est.kappa_hat <= hi
        payload["expect_range"] = [lo, hi]
        payload["pass"] = ok
    tables = {
        "tail": (["kappa_hat", "k", "ci_lo", "ci_hi", "n"],
                 [(est.kappa_hat, est.k, est.ci_low, est.ci_high, est.n)]),
        "tail_sweep": (["k", "kappa_hat", "ci_lo", "ci_hi"],
                       [(e.k, e.kappa_hat, e.ci_low, e.ci_high) for e in sweep]),
    }
    return payload, tables, ok


def cmd_moment(args):
    _, _, G = _green_samples(args)
    half = G[: max(1, G.size // 2)]
    rows = []
    for s in _floats_nonneg(args.s):
        m_half, _ = mc_moment(half, s)
        m, share = mc_moment(G, s)
        rows.append((s, m_half, m, abs(m / m_half - 1.0), share))
    cols = ["s", "mean_half", "mean", "rel_change", "max_share"]
    return [dict(zip(cols, r)) for r in rows], {"moment": (cols, rows)}, True


def _floats_nonneg(value):
    try:
        vals = [float(v) for v in str(value).split(",")] if not isinstance(value, list) else [float(v) for v in value]
    except ValueError:
        raise UsageError(f"--s: expected comma-separated numbers, got {value!r}") from None
    if any(v < 0 for v in vals):
        raise UsageError("--s: moments must be nonnegative")
    return vals


def cmd_verify_reversal(args):
    g, _ = build_graph(args, need_cemetery=False, default="two-vertex")
    reports, ok = certify.certify_reversal(g, _count(args), args.seed, level=args.level)
    payload = {"reports": [r.to_dict() for r in reports], "pass": ok}
    return payload, {"verify_reversal": (REPORT_COLS, _report_rows(reports))}, ok


def cmd_verify_w(args):
    g, x0 = build_graph(args, need_cemetery=True, default="loop")
    mode = args.mode
    if mode == "auto":
        try:
            certify.green_law_params(g, x0)
            mode = "law"
        except GraphError:
            mode = "domination"
    if mode == "law":
        rep, params, _ = certify.certify_green_law(g, x0, _count(args), args.seed, level=args.level)
    else:
        rep, params, _ = certify.certify_green_domination(g, x0, _count(args), args.seed, args.gamma,
                                                          level=args.level)
    payload = {"mode": mode, "beta": [params.a, params.b], **rep.to_dict()}
    return payload, {"verify_w": (REPORT_COLS, _report_rows([rep]))}, rep.passed


def _capacities(g: DirectedMultigraph):
    w = g.weights
    if np.all(w == np.round(w)):
        return [int(v) for v in w]
    return [float(v) for v in w]


def _flow_table(g, flow_values, caps):
    return (["edge_id", "flow", "capacity"],
            [(int(e), float(f), float(c)) for e, f, c in zip(g.edge_ids, flow_values, caps)])


def cmd_maxflow(args):
    g, x0 = build_graph(args, need_cemetery=True)
    caps = _capacities(g)
    flow, cut, value = flows.max_flow_min_cut(g, caps, x0)
    ok = cut.certified and cut.value == value
    cut_ids = [int(g.edge_ids[e]) for e in cut.edges]
    payload = {"value": float(value), "exact": isinstance(caps[0], int), "cut_edge_ids": cut_ids,
               "cut_value": float(cut.value), "certified": cut.certified,
               "flow": {str(int(e)): float(v) for e, v in zip(g.edge_ids, flow.values)}}
    tables = {"maxflow_flow": _flow_table(g, flow.values, caps),
              "maxflow_cut": (["cut_edge_ids", "cut_value"], [(cut_ids, float(cut.value))])}
    return payload, tables, ok


def cmd_maxflow_l2(args):
    g, x0 = build_graph(args, need_cemetery=True)
    if args.zd is not None:
        theta = flows.radial_unit_flow_zd(int(args.zd), int(args.radius), g)
    else:
        seed_flow, _, value = flows.max_flow_min_cut(g, np.ones(g.n_edges), x0)
        theta = seed_flow.scaled(1.0 / float(value))
    caps = g.weights
    try:
        res = flows.l2_compatible_maxflow(g, caps, x0, theta)
    except flows.ShellConditionError as exc:
        raise UsageError(f"refused: {exc}") from None
    f = res.flow
    ok = abs(f.strength - res.min_cut) <= 1e-9 * max(1.0, res.min_cut) and bool(np.all(f.values <= caps + 1e-9))
    payload = {"strength": f.strength, "energy": f.energy, "min_cut": res.min_cut, "n0": res.n0,
               "n1": res.n1, "n1_bound": res.n1_bound, "radii": list(res.radii),
               "seed_energy": float(np.sum(theta.values ** 2)),
               "kappa0_lower_bound": flows.kappa0_lower_bound(caps, f)}
    tables = {"maxflow_l2_flow": _flow_table(g, f.values, caps),
              "maxflow_l2_summary": (list(payload), [tuple(payload.values())])}
    return payload, tables, ok


def cmd_derrw(args):
    g, x0 = build_graph(args, need_cemetery=False, default="two-vertex")
    try:
        rep, rows = reinforced.equivalence_test(g, x0, int(args.length), _count(args),
                                                stream(args.seed, 3), tolerance=args.tolerance)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cols = ["path", "exact", "derrw", "rwde"]
    payload = {**rep.to_dict(), "tolerance": args.tolerance,
               "paths": [dict(zip(cols, (list(p), a, b, c))) for p, a, b, c in rows]}
    table_rows = [(";".join(rio.encode_vertex(v) for v in p), a, b, c) for p, a, b, c in rows]
    return payload, {"derrw_paths": (cols, table_rows)}, rep.passed


def _psi(graph, name: str, e0: int):
    m = np.zeros(graph.n_edges)
    if name == "p_e0":
        m[e0] = 1
    elif name == "prod":
        m[:] = 1
    elif name != "1":
        raise UsageError(f"--psi entries must be among {', '.join(PSI_NAMES)}")
    return appendix.monomial(m)


def cmd_appendix(args):
    g, _ = build_graph(args, need_cemetery=False, default="two-vertex")
    e0 = None if args.e0 is None else g.edge_position(int(args.e0))
    if e0 is None:
        e0 = next(i for i in range(g.n_edges) if g.tails[i] != g.heads[i])
    graph_id = args.edge_list or args.graph or "graph"
    rows, reports = [], []
    try:
        for name in str(args.psi).split(","):
            rep = appendix.verify_identity(g, _psi(g, name, e0), e0=e0, graph_id=graph_id, psi_name=name,
                                           tol=args.tolerance)
            reports.append(rep)
            rows.append(tuple(rep.values()))
    except GraphError as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ok = all(r["pass"] for r in reports)
    cols = ["graph_id", "alpha", "psi", "lhs", "rhs", "rel_err", "pass"]
    return reports, {"appendix": (cols, rows)}, ok


def cmd_sample_env(args):
    g, _ = build_graph(args, need_cemetery=False)
    p = certify.sample_environments(g, 1, args.seed)[0]
    payload = {"edge_probabilities": {str(int(e)): float(v) for e, v in zip(g.edge_ids, p)}}
    return payload, {"environment": (["edge_id", "probability"],
                                     [(int(e), float(v)) for e, v in zip(g.edge_ids, p)])}, True


def cmd_green(args):
    g, x0 = build_graph(args, need_cemetery=True)
    if args.env is not None:
        try:
            text = Path(args.env).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"{args.env}: {exc.strerror}") from None
        p = rio.parse_environment_csv(text, g)
        y = x0 if args.y is None else rio.decode_vertex(args.y)
        direct = green_function(g, p, x0, y)
        row = {"x": rio.encode_vertex(x0), "y": rio.encode_vertex(y), "green": direct}
        if y == x0:
            row["green_reversal"] = green_via_reversal(g, p, x0)
        return row, {"green": (list(row), [tuple(row.values())])}, True
    P = certify.sample_environments(g, _count(args), args.seed)
    direct = green_diagonal_batch(g, P, x0)
    rev = green_via_reversal_batch(g, P, x0)
    ok = bool(np.all(np.abs(direct - rev) <= 1e-8 * np.abs(direct)))
    rows = [(i, a, b) for i, (a, b) in enumerate(zip(direct, rev))]
    cols = ["replicate", "green_direct", "green_reversal"]
    return {"rows": [dict(zip(cols, r)) for r in rows], "routes_agree": ok}, {"green": (cols, rows)}, ok


COMMANDS = {
    "kappa": (cmd_kappa, "critical exponent by min-cut enumeration (closed form on Z^d)"),
    "tail": (cmd_tail, "Hill estimate of the tail of G(x0,x0)"),
    "moment": (cmd_moment, "Monte Carlo moments of G(x0,x0) with a max-share diagnostic"),
    "verify-reversal": (cmd_verify_reversal, "KS test of the time-reversed environment"),
    "verify-w": (cmd_verify_w, "law or domination of G(x0,x0) by an inverse beta"),
    "maxflow": (cmd_maxflow, "max-flow / min-cut to the cemetery"),
    "maxflow-l2": (cmd_maxflow_l2, "finite-energy maximum compatible flow"),
    "derrw": (cmd_derrw, "reinforced walk versus annealed Dirichlet walk path laws"),
    "appendix": (cmd_appendix, "quadrature check of the occupation-density identity"),
    "sample-env": (cmd_sample_env, "draw one Dirichlet environment"),
    "green": (cmd_green, "Green function by direct solve and by time reversal"),
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (default: print)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--config", default=None, help="JSON file whose keys mirror the long flags")
    p.add_argument("--level", type=float, default=SIGNIFICANCE, help="significance level")
    g = p.add_argument_group("graph")
    g.add_argument("--zd", type=int, default=None, help="Z^d truncation of dimension D")
    g.add_argument("--radius", type=int, default=1)
    g.add_argument("--graph", default=None, help="|".join(NAMED_GRAPHS))
    g.add_argument("--edge-list", default=None)
    g.add_argument("--weights", default=None, help="edge-list file supplying weights by edge id")
    g.add_argument("--alpha", default=None, help="scalar, per-direction or per-edge weights")
    g.add_argument("--alpha-loop", type=float, default=2.0)
    g.add_argument("--alpha-exit", type=float, default=1.0)
    g.add_argument("--cycle-weights", default="2,1,1", help="a,c,e of the two-cycle graph")
    g.add_argument("--rank", type=int, default=2)
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--line-length", type=int, default=6)
    g.add_argument("--x0", default=None)
    p.add_argument("-n", type=int, default=10_000, help="sample count")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rwde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_)
        _add_common(p)
        if name == "kappa":
            p.add_argument("--max-size", type=int, default=4)
        if name == "tail":
            p.add_argument("-k", type=int, default=None, help="Hill order statistics (default n^0.6)")
            p.add_argument("--expect-range", default=None, help="lo,hi: exit 2 if the estimate falls outside")
        if name == "moment":
            p.add_argument("--s", default="1,3")
        if name == "verify-w":
            p.add_argument("--mode", choices=("auto", "law", "domination"), default="auto")
            p.add_argument("--gamma", type=float, default=None)
        if name == "derrw":
            p.add_argument("-L", "--length-steps", dest="length", type=int, default=3)
            p.add_argument("--tolerance", type=float, default=0.02)
        if name == "appendix":
            p.add_argument("--psi", default=",".join(PSI_NAMES))
            p.add_argument("--e0", type=int, default=None, help="edge id of e0")
            p.add_argument("--tolerance", type=float, default=1e-3)
        if name == "green":
            p.add_argument("--env", default=None, help="environment CSV (edge_id,probability)")
            p.add_argument("--y", default=None)
    return parser


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise UsageError(f"unknown command {name!r}")


def _key_line(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_config(path: str, sub: argparse.ArgumentParser) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}:1: config must be a JSON object")
    dests = {a.dest: a for a in sub._actions}
    out = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if key == "command":
            continue
        if dest not in dests or dest in ("help", "config"):
            raise UsageError(f"{path}:{_key_line(text, key)}: unknown key {key!r}")
        action = dests[dest]
        if action.type is not None and val is not None:
            try:
                val = action.type(val)
            except (TypeError, ValueError):
                raise UsageError(f"{path}:{_key_line(text, key)}: bad value for {key!r}: {val!r}") from None
        if action.choices is not None and val not in action.choices:
            raise UsageError(f"{path}:{_key_line(text, key)}: {key!r} must be one of {sorted(action.choices)}")
        out[dest] = val
    return out


def parse_args(argv):
    parser = make_parser()
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is not None:
        try:
            raw = json.loads(Path(known.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            raw = {}
        if isinstance(raw, dict) and "command" in raw and not any(a in COMMANDS for a in argv):
            argv = [str(raw["command"])] + argv
    if not argv or argv[0] not in COMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            parser.print_help()
            raise SystemExit(0)
        raise UsageError(f"expected a command: {', '.join(COMMANDS)}")
    sub = _subparser(parser, argv[0])
    if known.config is not None:
        sub.set_defaults(**load_config(known.config, sub))
    return parser.parse_args(argv)


def _config_for_digest(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config", "format")}


def run(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        fn, _ = COMMANDS[args.command]
        if not 0 < args.level < 1:
            raise UsageError("--level must lie in (0, 1)")
        payload, tables, ok = fn(args)
        cfg = _config_for_digest(args)
        try:
            docs = rio.emit_report(tables, payload, args.seed, cfg, args.format, args.out,
                                   name=args.command.replace("-", "_"))
        except OSError as exc:
            raise UsageError(f"cannot write to {args.out}: {exc.strerror}") from None
        if args.out is None:
            for i, (fname, text) in enumerate(docs.items()):
                if len(docs) > 1:
                    stdout.write(("\n" if i else "") + f"# file={fname}\n")
                stdout.write(text)
        return EXIT_OK if ok else EXIT_FAIL
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (rio.FormatError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> None:
    raise SystemExit(run(argv))
