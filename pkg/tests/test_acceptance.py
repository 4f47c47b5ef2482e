"""Acceptance criteria, one test (or group) per criterion, with their runtime budgets."""
import json
import time

import numpy as np
import pytest

from rwde import cli
from rwde.builders import loop_graph, random_graph, tree_with_half_line, two_cycle_graph, two_vertex_full_graph, \
    zd_truncation
from rwde.certify import certify_green_law, certify_reversal, sample_green
from rwde.dirichlet import BetaParams
from rwde.estimators import hill_sweep, mc_moment, tail_exponent_hill
from rwde.flows import (ShellConditionError, kappa_min_cut_zd, kappa_zd, l2_compatible_maxflow, max_flow_min_cut,
                        min_cut_by_enumeration, radial_unit_flow_zd)
from rwde.graph import truncate_to_cemetery
from rwde.reinforced import equivalence_test
from rwde.rng import stream

SEED = 20240601


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


@pytest.mark.criterion(1, "loop graph: G(x0,x0) ~ 1/Beta(1,2), KS p > 0.01, n=1e4, < 5 s")
def test_criterion_1_loop_graph_law():
    with Timer() as t:
        rep, params, _ = certify_green_law(loop_graph(2, 1), "x0", 10_000, SEED)
    assert params == BetaParams(1, 2)
    assert rep.p_value > 0.01
    assert t.elapsed < 5


@pytest.mark.criterion(2, "two-cycle graph: G(x0,x0) ~ 1/Beta(1,1), KS p > 0.01, n=1e4, < 10 s")
def test_criterion_2_two_cycle_law():
    with Timer() as t:
        rep, params, _ = certify_green_law(two_cycle_graph(2, 1, 1), "x0", 10_000, SEED)
    assert params == BetaParams(1, 1)
    assert rep.p_value > 0.01
    assert t.elapsed < 10


@pytest.mark.criterion(3, "time reversal on the 2-vertex graph: Beta(1,1) blocks, Bonferroni 0.01, < 30 s")
def test_criterion_3_reversal():
    with Timer() as t:
        reports, ok = certify_reversal(two_vertex_full_graph(1.0), 10_000, SEED)
    assert len(reports) == 4
    assert all(r.p_value > 0.01 / len(reports) for r in reports)
    assert ok and t.elapsed < 30


@pytest.mark.criterion(4, "kappa on Z^3: 10 with minimizer {0,e_i}; formula = enumeration on 10 random weights")
def test_criterion_4_kappa():
    with Timer() as t:
        closed = kappa_zd([1.0] * 6, 3)
        enum = kappa_min_cut_zd([1.0] * 6, 3, max_size=4)
        assert closed.value == 10 and enum.value == 10
        assert len(enum.minimizer) == 2 and (0, 0, 0) in enum.minimizer
        (other,) = enum.minimizer - {(0, 0, 0)}
        assert sorted(map(abs, other)) == [0, 0, 1]
        rng = stream(SEED, 4)
        for _ in range(10):
            a = rng.uniform(0.2, 3.0, 6)
            c, e = kappa_zd(a, 3), kappa_min_cut_zd(a, 3, max_size=4)
            assert e.value == pytest.approx(c.value, rel=1e-12)
            assert e.minimizer == c.minimizer
    assert t.elapsed < 60


@pytest.mark.criterion(5, "max-flow = exhaustive min-cut on 20 random graphs (<= 12 edges, caps <= 5), exact")
def test_criterion_5_maxflow_mincut():
    rng = stream(SEED, 5)
    with Timer() as t:
        for _ in range(20):
            n = int(rng.integers(3, 7))
            m = int(rng.integers(4, 13))
            g = random_graph(n, m, rng)
            caps = [int(c) for c in rng.integers(0, 6, size=m)]
            _, cut, value = max_flow_min_cut(g, caps, 0, n - 1)
            best, _ = min_cut_by_enumeration(g, caps, 0, n - 1)
            assert value == best and cut.value == best
    assert t.elapsed < 10


@pytest.mark.criterion(6, "finite-energy max-flow on Z^3, N=3..6: strength 6, energy ratio < 1.5, tree-plus-half-line graph refused")
def test_criterion_6_l2_maxflow():
    with Timer() as t:
        energies = []
        for N in range(3, 7):
            g = zd_truncation(3, N)
            res = l2_compatible_maxflow(g, np.ones(g.n_edges), (0, 0, 0), radial_unit_flow_zd(3, N, g))
            res.flow.check()
            assert res.flow.strength == pytest.approx(6.0, abs=1e-9)
            assert np.all(res.flow.values <= 1.0 + 1e-12)
            energies.append(res.flow.energy)
        assert max(energies) / min(energies) < 1.5
        tree = tree_with_half_line(5, 10)
        tg = truncate_to_cemetery(tree, tree.root, 6)
        with pytest.raises(ShellConditionError):
            l2_compatible_maxflow(tg, np.ones(tg.n_edges), tree.root, np.zeros(tg.n_edges))
    assert t.elapsed < 60


@pytest.fixture(scope="module")
def tail_samples():
    g = zd_truncation(3, 2, 0.2)
    t0 = time.perf_counter()
    samples = sample_green(g, (0, 0, 0), 50_000, SEED)
    return samples, time.perf_counter() - t0


@pytest.mark.criterion(7, "tail on Z^3, alpha=0.2, radius 2, n=5e4: Hill estimate in [1.5, 2.5], < 10 min")
def test_criterion_7_tail(tail_samples):
    G, elapsed = tail_samples
    assert kappa_zd([0.2] * 6, 3).value == pytest.approx(2.0)
    est = tail_exponent_hill(G)
    sweep = hill_sweep(G)
    assert len(sweep) > 0
    assert 1.5 <= est.kappa_hat <= 2.5
    assert elapsed < 600


@pytest.mark.criterion(8, "moments on the same samples: s=1 stable within 5% under doubling; s=3 max share > 0.5")
def test_criterion_8_moments(tail_samples):
    G, _ = tail_samples
    half, _ = mc_moment(G[: G.size // 2], 1.0)
    full, _ = mc_moment(G, 1.0)
    assert abs(full / half - 1.0) < 0.05
    _, share = mc_moment(G, 3.0)
    assert share > 0.5, f"max-contribution share {share:.3f}"


@pytest.mark.criterion(9, "DERRW = annealed RWDE = exact path law, TV < 0.02, n=1e5, < 2 min")
@pytest.mark.parametrize("which", ["two-vertex", "z3-ball"])
def test_criterion_9_derrw(which):
    if which == "two-vertex":
        g, x0 = two_vertex_full_graph(1.0), "a"
    else:
        g, x0 = zd_truncation(3, 1, 1.0), (0, 0, 0)
    with Timer() as t:
        for L in (3, 4):
            rep, _ = equivalence_test(g, x0, L, 100_000, stream(SEED, 9, L))
            assert rep.statistic < 0.02, rep
    assert t.elapsed < 120


@pytest.mark.criterion(10, "occupation-density identity on the 2-vertex graph: |lhs - rhs|/lhs < 1e-3, < 1 min")
def test_criterion_10_appendix(capsys):
    with Timer() as t:
        for alpha in ("1,1,1,1", "2,1,1,2"):
            code = cli.run(["appendix", "--graph", "two-vertex", "--alpha", alpha, "--psi", "1,p_e0,prod"])
            assert code == 0
            for rep in json.loads(capsys.readouterr().out)["results"]:
                assert rep["rel_err"] < 1e-3 and rep["pass"]
    assert t.elapsed < 60


COMMANDS = [
    ["kappa", "--zd", "3", "--alpha", "1.0"],
    ["kappa", "--graph", "free-group", "--max-size", "3"],
    ["tail", "--zd", "3", "--alpha", "0.2", "--radius", "2", "-n", "10000"],
    ["moment", "--zd", "3", "--alpha", "0.2", "--radius", "2", "-n", "10000"],
    ["verify-reversal", "-n", "10000"],
    ["verify-w", "--graph", "loop", "-n", "10000"],
    ["maxflow", "--zd", "3", "--radius", "2"],
    ["maxflow-l2", "--zd", "3", "--radius", "3"],
    ["derrw", "--graph", "two-vertex", "-L", "3", "-n", "20000"],
    ["appendix", "--graph", "two-vertex", "--psi", "1"],
    ["sample-env", "--zd", "3", "--radius", "1"],
    ["green", "--graph", "two-cycle", "-n", "9000"],
]


@pytest.mark.criterion(11, "determinism: identical seed, different thread counts, byte-identical outputs")
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_criterion_11_determinism(tmp_path, monkeypatch, fmt):
    snapshots = []
    for threads in ("1", "4"):
        monkeypatch.setenv("RWDE_THREADS", threads)
        files = {}
        for i, args in enumerate(COMMANDS):
            out = tmp_path / f"{threads}-{i}"
            code = cli.run(args + ["--seed", "7", "--format", fmt, "--out", str(out)])
            assert code in (0, 2)
            files.update({f"{i}/{f.name}": f.read_bytes() for f in out.iterdir()})
        snapshots.append(files)
    assert snapshots[0].keys() == snapshots[1].keys()
    for name in snapshots[0]:
        assert snapshots[0][name] == snapshots[1][name], name
