"""Text formats: edge lists, environment dumps and deterministic CSV/JSON reports.

Vertex labels are written as whitespace-free tokens. Integers and tuples use
their Python literal form with spaces removed (``(1,0,-1)``); strings are
written bare unless they would parse as a literal, in which case they are
quoted. Parsing inverts this exactly.
"""
from __future__ import annotations

import ast
import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .graph import DirectedMultigraph, GraphError


class FormatError(ValueError):
    """Malformed input; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def encode_vertex(v) -> str:
    if isinstance(v, str):
        if not v or any(c.isspace() or c in "=#," for c in v):
            raise GraphError(f"vertex label {v!r} cannot be written as a token")
        try:
            ast.literal_eval(v)
        except (ValueError, SyntaxError):
            return v
        return repr(v)
    if isinstance(v, (bool, float)) or not isinstance(v, (int, tuple)):
        raise GraphError(f"unsupported vertex label {v!r}")
    token = repr(v).replace(" ", "")
    if any(c.isspace() or c in "=#" for c in token):
        raise GraphError(f"vertex label {v!r} cannot be written as a token")
    return token


def decode_vertex(token: str):
    try:
        return ast.literal_eval(token)
    except (ValueError, SyntaxError):
        return token


# -- edge lists -----------------------------------------------------------------------

def format_edge_list(graph: DirectedMultigraph, weights=None) -> str:
    w = graph.weights if weights is None else np.asarray(weights, dtype=float)
    head = []
    if graph.cemetery is not None:
        head.append(f"cemetery={encode_vertex(graph.cemetery)}")
    if graph.root is not None:
        head.append(f"root={encode_vertex(graph.root)}")
    lines = [" ".join(head)] if head else []
    for pos in range(graph.n_edges):
        t, h = graph.edge_labels(pos)
        lines.append(f"{int(graph.edge_ids[pos])} {encode_vertex(t)} {encode_vertex(h)} {fmt_float(w[pos])}")
    return "\n".join(lines) + "\n"


def write_edge_list(graph: DirectedMultigraph, path, weights=None) -> None:
    Path(path).write_text(format_edge_list(graph, weights), encoding="utf-8", newline="\n")


def parse_edge_list(text: str, source: str | None = None) -> DirectedMultigraph:
    """Parse ``edge_id tail head weight`` lines; an optional header holds
    ``cemetery=<id>`` and/or ``root=<id>``. Blank lines and ``#`` comments are ignored.
    """
    edges, ids, weights = [], [], []
    meta = {}
    seen_edge = False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if all("=" in tok for tok in tokens):
            if seen_edge:
                raise FormatError("header must precede the edges", lineno, source)
            for tok in tokens:
                key, _, val = tok.partition("=")
                if key not in ("cemetery", "root") or not val:
                    raise FormatError(f"unknown header field {tok!r}", lineno, source)
                if key in meta:
                    raise FormatError(f"duplicate header field {key!r}", lineno, source)
                meta[key] = decode_vertex(val)
            continue
        if len(tokens) != 4:
            raise FormatError(f"expected 'edge_id tail head weight', got {len(tokens)} fields", lineno, source)
        seen_edge = True
        try:
            eid = int(tokens[0])
        except ValueError:
            raise FormatError(f"edge id {tokens[0]!r} is not an integer", lineno, source) from None
        try:
            w = float(tokens[3])
        except ValueError:
            raise FormatError(f"weight {tokens[3]!r} is not a number", lineno, source) from None
        if not w > 0 or not np.isfinite(w):
            raise FormatError(f"weight must be positive and finite, got {tokens[3]}", lineno, source)
        if eid in ids:
            raise FormatError(f"duplicate edge id {eid}", lineno, source)
        edges.append((decode_vertex(tokens[1]), decode_vertex(tokens[2])))
        ids.append(eid)
        weights.append(w)
    if not edges:
        raise FormatError("no edges", None, source)
    try:
        return DirectedMultigraph.from_edges(edges, weights=weights, edge_ids=ids,
                                             cemetery=meta.get("cemetery"), root=meta.get("root"))
    except GraphError as exc:
        raise FormatError(str(exc), None, source) from None


def read_edge_list(path) -> DirectedMultigraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read: {exc.strerror}", None, str(path)) from None
    return parse_edge_list(text, str(path))


def weights_from_edge_list(graph: DirectedMultigraph, other: DirectedMultigraph) -> np.ndarray:
    """Weights of ``other`` matched to ``graph`` by edge id."""
    by_id = {int(e): float(w) for e, w in zip(other.edge_ids, other.weights)}
    missing = [int(e) for e in graph.edge_ids if int(e) not in by_id]
    if missing:
        raise FormatError(f"weights file lacks edge id {missing[0]}")
    return np.array([by_id[int(e)] for e in graph.edge_ids])


# -- reports ------------------------------------------------------------------------

def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return fmt_float(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (tuple, list, frozenset, set)) and not isinstance(x, str):
        return encode_vertex(tuple(x)) if isinstance(x, tuple) else ";".join(_cell(v) for v in x)
    return str(x)


def format_csv(columns, rows, seed: int, digest: str) -> str:
    buf = io.StringIO()
    buf.write(f"# seed={seed}\n# config={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (frozenset, set)):
        return sorted((_jsonable(v) for v in x), key=repr)
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def format_json(payload, seed: int, digest: str) -> str:
    doc = {"seed": seed, "config_digest": digest, "results": _jsonable(payload)}
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"


def emit_report(tables: dict, payload, seed: int, config: dict, fmt: str, out_dir=None, name: str = "report"):
    """Write ``payload`` as JSON or ``tables`` (``{stem: (columns, rows)}``) as CSV.

    With ``out_dir`` the files are ``<name>.json`` or ``<stem>.csv``; otherwise the
    text is returned for printing. Floats use 17 significant digits in CSV and
    the shortest round-trip form in JSON (same value).
    """
    digest = config_digest(config)
    docs = {}
    if fmt == "json":
        docs[f"{name}.json"] = format_json(payload, seed, digest)
    elif fmt == "csv":
        for stem, (columns, rows) in tables.items():
            docs[f"{stem}.csv"] = format_csv(columns, rows, seed, digest)
    else:
        raise FormatError(f"unknown format {fmt!r}")
    if out_dir is None:
        return docs
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for fname, text in docs.items():
        with open(out / fname, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return docs


def format_environment_csv(graph: DirectedMultigraph, p) -> str:
    lines = ["edge_id,probability"]
    for e, v in zip(graph.edge_ids, np.asarray(p, dtype=float)):
        lines.append(f"{int(e)},{fmt_float(v)}")
    return "\n".join(lines) + "\n"


def parse_environment_csv(text: str, graph: DirectedMultigraph) -> np.ndarray:
    rows = [(k, ln) for k, ln in enumerate(text.split("\n"), start=1)
            if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0][1].strip() != "edge_id,probability":
        raise FormatError("missing 'edge_id,probability' header", rows[0][0] if rows else 1)
    by_id = {}
    for k, ln in rows[1:]:
        try:
            e, v = ln.split(",")
            by_id[int(e)] = float(v)
        except ValueError:
            raise FormatError(f"bad row {ln!r}", k) from None
    missing = [int(e) for e in graph.edge_ids if int(e) not in by_id]
    if missing:
        raise FormatError(f"environment lacks edge id {missing[0]}")
    return np.array([by_id[int(e)] for e in graph.edge_ids])
