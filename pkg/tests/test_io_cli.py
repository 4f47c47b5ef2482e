import json

import numpy as np
import pytest

from rwde import cli
from rwde.builders import free_group_cayley_ball, tree_with_half_line, zd_truncation
from rwde.dirichlet import sample_environment_array
from rwde.graph import DirectedMultigraph
from rwde.io import (FormatError, decode_vertex, emit_report, encode_vertex, format_edge_list,
                     format_environment_csv, parse_edge_list, parse_environment_csv)
from rwde.rng import stream


def same_graph(a, b):
    assert a.cemetery == b.cemetery and a.root == b.root
    assert [a.edge_labels(i) for i in range(a.n_edges)] == [b.edge_labels(i) for i in range(b.n_edges)]
    assert np.array_equal(a.edge_ids, b.edge_ids) and np.array_equal(a.weights, b.weights)


@pytest.mark.parametrize("g", [zd_truncation(3, 2, [0.2, 1 / 3, 1, 1, 1, 1]), free_group_cayley_ball(2, 2),
                               tree_with_half_line(2, 3)])
def test_edge_list_round_trip(g):
    same_graph(parse_edge_list(format_edge_list(g)), g)


def test_vertex_tokens():
    for v in [(1, 0, -1), (), (2,), 7, "x0", "5", ("t", (0, 1))]:
        assert decode_vertex(encode_vertex(v)) == v
    assert encode_vertex((1, 0, -1)) == "(1,0,-1)"


def test_edge_list_errors_carry_line_numbers():
    bad = "root=a\n0 a b 1.0\n1 b a\n"
    with pytest.raises(FormatError, match=":3:"):
        parse_edge_list(bad, "g.txt")
    with pytest.raises(FormatError, match="weight"):
        parse_edge_list("0 a b -1\n")
    with pytest.raises(FormatError, match="duplicate"):
        parse_edge_list("0 a b 1\n0 b a 1\n")
    with pytest.raises(FormatError, match="header"):
        parse_edge_list("0 a b 1\nroot=a\n")


def test_environment_dump_round_trips_exactly():
    g = zd_truncation(3, 1, 0.2)
    p = sample_environment_array(g, stream(1), 1)[0]
    text = format_environment_csv(g, p)
    assert text.splitlines()[0] == "edge_id,probability"
    assert np.array_equal(parse_environment_csv(text, g), p)


def test_reports(tmp_path):
    docs = emit_report({"t": (["a", "b"], [])}, {}, 3, {"x": 1}, "csv")
    lines = docs["t.csv"].splitlines()
    assert lines[0] == "# seed=3" and lines[1].startswith("# config=") and lines[2] == "a,b" and len(lines) == 3
    payload = {"v": 0.1 + 0.2, "n": 3, "ok": True}
    js = emit_report({}, payload, 3, {"x": 1}, "json")["report.json"]
    doc = json.loads(js)
    assert doc["results"] == payload and doc["seed"] == 3
    assert json.dumps(json.loads(js), indent=2) + "\n" == js
    emit_report({}, payload, 3, {"x": 1}, "json", tmp_path / "a")
    emit_report({}, payload, 3, {"x": 1}, "json", tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def run(args, capsys):
    code = cli.run(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_kappa(capsys):
    code, out, _ = run(["kappa", "--zd", "3", "--alpha", "1.0"], capsys)
    res = json.loads(out)["results"]
    assert code == 0 and res["kappa"] == 10
    assert sorted(map(tuple, res["minimizer_vertices"])) == [(0, 0, 0), (1, 0, 0)]


def test_cli_verify_w(capsys):
    code, out, _ = run(["verify-w", "--graph", "loop", "--alpha-loop", "2", "--alpha-exit", "1", "-n", "10000"],
                       capsys)
    assert code == 0 and json.loads(out)["results"]["passed"]


def test_cli_statistical_failure_exits_2(capsys):
    code, _, _ = run(["derrw", "--graph", "two-vertex", "-n", "1000", "--tolerance", "1e-9"], capsys)
    assert code == 2


def test_cli_usage_errors_exit_1(capsys, tmp_path):
    assert run(["nope"], capsys)[0] == 1
    assert run(["kappa", "--zd", "x"], capsys)[0] == 1
    assert run(["tail"], capsys)[0] == 1
    assert run(["maxflow-l2", "--graph", "tree-half-line", "--depth", "4", "--radius", "4"], capsys)[0] == 1
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["kappa", "--zd", "3", "--out", str(blocker / "sub")], capsys)[0] == 1


def test_cli_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "kappa", "zd": 3, "alpha": "3,1,1,1,1,1"}, indent=1))
    code, out, _ = run(["--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["results"]["kappa"] == 12
    code2, out2, _ = run(["kappa", "--zd", "3", "--alpha", "3,1,1,1,1,1"], capsys)
    assert json.loads(out2)["results"] == json.loads(out)["results"]


def test_cli_config_errors_are_line_numbered(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "zd": 3,\n  "bogus": 1\n}\n')
    code, _, err = run(["kappa", "--config", str(cfg)], capsys)
    assert code == 1 and "c.json:3:" in err
    cfg.write_text('{\n  "zd": 3,\n  "alpha" 1\n}\n')
    code, _, err = run(["kappa", "--config", str(cfg)], capsys)
    assert code == 1 and "c.json:3:" in err


def test_cli_edge_list_input(capsys, tmp_path):
    g = DirectedMultigraph.from_edges([("s", "a"), ("a", "d"), ("s", "d")], weights=[3, 1, 2],
                                      cemetery="d", root="s")
    path = tmp_path / "g.txt"
    path.write_text(format_edge_list(g))
    code, out, _ = run(["maxflow", "--edge-list", str(path), "--format", "csv"], capsys)
    assert code == 0
    assert "cut_edge_ids,cut_value\n1;2,3\n" in out


def test_cli_green_from_environment_file(capsys, tmp_path):
    env = tmp_path / "env.csv"
    run(["sample-env", "--graph", "two-cycle", "--format", "csv", "--out", str(tmp_path)], capsys)
    env = tmp_path / "environment.csv"
    code, out, _ = run(["green", "--graph", "two-cycle", "--env", str(env)], capsys)
    res = json.loads(out)["results"]
    p = parse_environment_csv(env.read_text(), cli.build_graph(cli.parse_args(["green", "--graph", "two-cycle"]),
                                                               True)[0])
    assert code == 0 and res["green"] == pytest.approx(1 / p[2]) and res["green_reversal"] == pytest.approx(res["green"])


def test_cli_is_deterministic_across_threads(capsys, tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("RWDE_THREADS", threads)
        d = tmp_path / threads
        assert run(["tail", "--zd", "3", "--alpha", "0.5", "-n", "9000", "--format", "csv", "--out", str(d)],
                   capsys)[0] == 0
        outs.append({f.name: f.read_bytes() for f in sorted(d.iterdir())})
    assert outs[0] == outs[1]
