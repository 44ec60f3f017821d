import math
import pathlib
import sys

import numpy as np
import pytest

# Ensure src/ is importable
REPO_ROOT = pathlib.Path(__file__).resolve().parents[2]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import acceptance  # type: ignore
import artifacts  # type: ignore
import graph_core as gc  # type: ignore
import magic_measure as mm  # type: ignore
import sampler_oracle  # type: ignore
import walker  # type: ignore
from errors import DiagnosticError  # type: ignore


def test_first_steps_on_the_window():
    g = gc.build_window_graph(2, 4)
    origin = g.index((0, 0))
    for a in (0.5, 1.0, 3.0):
        w = gc.InitialWeights.constant(g, a)
        for nb in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
            assert walker.errw_path_probability(g, w, origin, [origin, g.index(nb)]) == pytest.approx(0.25)
        right = g.index((1, 0))
        back = walker.errw_path_probability(g, w, origin, [origin, right, origin])
        on = walker.errw_path_probability(g, w, origin, [origin, right, g.index((2, 0))])
        assert back == pytest.approx(0.25 * (a + 1) / (2 * a + 1), rel=1e-14)
        assert on == pytest.approx(0.25 * a / (2 * a + 1), rel=1e-14)


def test_path_probability_examples():
    tri = gc.build_cycle(3)
    a = gc.InitialWeights.constant(tri, 1.0)
    assert walker.errw_path_probability(tri, a, 0, [0, 1, 2]) == pytest.approx(1 / 6)
    assert walker.errw_path_probability(tri, a, 0, [0]) == 1.0
    assert walker.errw_path_probability(tri, a, 0, [0, 0]) == 0.0
    with pytest.raises(ValueError):
        walker.errw_path_probability(tri, a, 0, [1, 2])

    sq = gc.build_cycle(4)
    assert walker.errw_path_probability(sq, gc.InitialWeights.constant(sq, 1.0), 0, [0, 2]) == 0.0
    assert walker.markov_path_probability(sq, mm.Environment.uniform(sq), 0, [0, 1, 2]) == pytest.approx(0.25)


def test_errw_path_probabilities_sum_to_one():
    g = gc.build_cycle(5)
    a = gc.InitialWeights.constant(g, 0.7)
    total = sum(walker.errw_path_probability(g, a, 0, p) for p in sampler_oracle.admissible_paths(g, 0, 4))
    assert total == pytest.approx(1.0, rel=1e-12)


def test_markov_transition_row():
    tri = gc.build_cycle(3)
    x = mm.Environment.from_weights([2.0, 1.0, 1.0])
    row = walker.markov_transition_row(tri, x, 0)
    assert row[1] == pytest.approx(2 / 3)
    assert row[2] == pytest.approx(1 / 3)


def test_markov_chain_is_reversible():
    g = gc.build_cycle(5)
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = mm.Environment(rng.uniform(-2.0, 2.0, size=g.n_edges))
        xv = np.exp(x.vertex_log_weights(g))
        path = [0, 1, 2, 1, 0, 4, 3]
        fwd = xv[path[0]] * walker.markov_path_probability(g, x, path[0], path)
        rev = xv[path[-1]] * walker.markov_path_probability(g, x, path[-1], path[::-1])
        assert fwd == pytest.approx(rev, rel=1e-12)


def test_errw_step_updates_weights():
    tri = gc.build_cycle(3)
    a = gc.InitialWeights.constant(tri, 0.5)
    state = walker.WalkState.start(tri, 0)
    nxt = walker.errw_step(tri, a, state, walker.make_rng(1))
    assert nxt.t == 1 and nxt.position in (1, 2)
    assert int(nxt.crossings.sum()) == 1
    e = tri.edge_between(0, nxt.position)
    assert nxt.weights(a)[e] == 1.5
    assert state.crossings.sum() == 0


def test_batch_frequencies_match_path_probabilities():
    tri = gc.build_cycle(3)
    a = gc.InitialWeights.constant(tri, 1.0)
    n = 200_000
    paths = walker.simulate_errw_batch(tri, a, 0, 3, n, 11)
    assert paths.shape == (n, 4)
    freq = acceptance.path_frequency_table(paths, tri.n_vertices)
    for p in sampler_oracle.admissible_paths(tri, 0, 3):
        prob = walker.errw_path_probability(tri, a, 0, p)
        sd = math.sqrt(prob * (1 - prob) / n)
        assert abs(freq.get(p, 0) / n - prob) <= 4 * sd


def test_batch_is_independent_of_threads():
    g = gc.build_cycle(6)
    a = gc.InitialWeights.constant(g, 0.8)
    one = walker.simulate_errw_batch(g, a, 0, 10, 1000, 5, block_size=128, threads=1)
    three = walker.simulate_errw_batch(g, a, 0, 10, 1000, 5, block_size=128, threads=3)
    assert np.array_equal(one, three)


def test_hitting_neighbours_is_certain():
    g = gc.build_cycle(6)
    a = gc.InitialWeights.constant(g, 1.0)
    est = walker.hit_before_return(g, a, 0, [1, 5], 10, 100, 3)
    assert est.estimate == 1.0
    assert est.std_error == 0.0
    assert est.n_hits == 100 and est.n_censored == 0
    with pytest.raises(ValueError, match="v0"):
        walker.hit_before_return(g, a, 0, [0, 3], 10, 100, 3)
    with pytest.raises(ValueError):
        walker.hit_before_return(g, a, 0, [], 10, 100, 3)


def test_fixed_environment_hitting_on_four_cycle():
    g = gc.build_cycle(4)
    a = gc.InitialWeights.constant(g, 1.0)
    n = 20_000
    est = walker.hit_before_return(g, a, 0, [2], 100, n, 9, environment=mm.Environment.uniform(g))
    assert est.n_censored == 0
    assert est.n_hits + est.n_returned == n
    assert abs(est.estimate - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_reinforced_hitting_on_four_cycle():
    # from 0 the walk steps to a neighbour, then moves on with a/(2a+1)
    g = gc.build_cycle(4)
    a_val = 1.0
    a = gc.InitialWeights.constant(g, a_val)
    n = 20_000
    est = walker.hit_before_return(g, a, 0, [2], 100, n, 10)
    p = a_val / (2 * a_val + 1)
    assert abs(est.estimate - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_censoring_raises():
    g = gc.build_cycle(10)
    a = gc.InitialWeights.constant(g, 1.0)
    with pytest.raises(DiagnosticError) as exc:
        walker.hit_before_return(g, a, 0, [5], 2, 100, 1)
    assert exc.value.code == "CENSORING_ABOVE_THRESHOLD"
    est = walker.hit_before_return(g, a, 0, [5], 2, 100, 1, censor_threshold=1.0)
    assert est.n_censored > 0
    assert est.estimate == est.n_hits / (est.n_walks - est.n_censored)


def test_hitting_is_independent_of_threads():
    g = gc.build_cycle(6)
    a = gc.InitialWeights.constant(g, 0.5)
    kw = dict(block_size=64, censor_threshold=1.0)
    one = walker.hit_before_return(g, a, 0, [3], 50, 500, 21, threads=1, **kw)
    four = walker.hit_before_return(g, a, 0, [3], 50, 500, 21, threads=4, **kw)
    assert one == four


def test_boundary_hitting_curve():
    ests = walker.boundary_hitting_curve(2, 1.0, [1, 2], 2000, 3, max_steps=10_000)
    assert [e.target for e in ests] == ["level:1", "level:2"]
    assert all(0.0 < e.estimate <= 1.0 for e in ests)
    assert all(e.n_censored == 0 for e in ests)
    assert ests[1].estimate <= ests[0].estimate + 4 * (ests[0].std_error + ests[1].std_error)
    row = ests[0].to_row()
    assert list(row) == walker.HITTING_COLUMNS
    with pytest.raises(ValueError):
        walker.boundary_hitting_curve(2, 1.0, [0], 10, 3)


def test_lattice_point_hitting_grows_the_window():
    est = walker.lattice_point_hitting(2, 1.0, (1, 0), 100, 8, max_steps=200, censor_threshold=1.0)
    assert est.target == "1,0"
    assert est.n_hits + est.n_returned + est.n_censored == 100
    assert 0.0 < est.estimate < 1.0
    with pytest.raises(ValueError):
        walker.lattice_point_hitting(2, 1.0, (0, 0), 10, 8)
    with pytest.raises(ValueError):
        walker.lattice_point_hitting(2, 1.0, (1, 1), 10, 8)


def test_trajectory_bookkeeping(tmp_path):
    tri = gc.build_cycle(3)
    a = gc.InitialWeights.constant(tri, 1.0)
    rows, state = walker.simulate_trajectory(tri, a, 0, 200, 4)
    assert len(rows) == 201
    assert int(state.crossings.sum()) == state.t == 200
    assert np.all(state.weights(a) - a.values == state.crossings)
    for prev, cur in zip(rows[:-1], rows[1:]):
        assert tri.edge_between(prev["vertex"], cur["vertex"]) == cur["edge_crossed"]
    out = tmp_path / "trajectory.csv"
    walker.export_trajectory_csv(rows, str(out))
    back = artifacts.read_csv(str(out))
    assert len(back) == 201 and back[0]["edge_crossed"] == ""


def test_make_rng_streams():
    a = walker.make_rng(5, 1, 2).random(4)
    b = walker.make_rng(5, 1, 2).random(4)
    c = walker.make_rng(5, 2, 1).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        walker.make_rng(-1)


def test_fully_censored_run_raises_even_with_unit_threshold():
    g = gc.build_cycle(10)
    a = gc.InitialWeights.constant(g, 1.0)
    with pytest.raises(DiagnosticError) as exc:
        walker.hit_before_return(g, a, 0, [5], 1, 20, 1, censor_threshold=1.0)
    assert exc.value.code == "CENSORING_ABOVE_THRESHOLD"
    assert exc.value.details["n_censored"] == exc.value.details["n_walks"] == 20


def test_lattice_point_streams_use_both_coordinates():
    assert [walker.zigzag(k) for k in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
    keys = {walker.lattice_point_stream(ell) for ell in [(4, 0), (0, 4), (-4, 0), (0, -4), (4, 4), (4, -4)]}
    assert len(keys) == 6
    assert all(k >= 0 for key in keys for k in key)
    assert walker.lattice_point_stream((3, -1))[0] == 0
    left = walker.make_rng(9, *walker.lattice_point_stream((2, 0)), 0).random(4)
    right = walker.make_rng(9, *walker.lattice_point_stream((0, 2)), 0).random(4)
    assert not np.array_equal(left, right)


@pytest.mark.parametrize("a_val", [1e-6, 0.5, 3.0])
def test_walk_always_has_a_positive_exit(a_val):
    g = gc.build_window_graph(2, 2)
    a = gc.InitialWeights.constant(g, a_val)
    state = walker.WalkState.start(g, g.index((0, 0)))
    rng = walker.make_rng(13)
    for _ in range(500):
        w = state.weights(a)
        out = w[list(g.adjacency[state.position])]
        assert np.all(out > 0.0) and out.sum() > 0.0
        state = walker.errw_step(g, a, state, rng)
    assert int(state.crossings.sum()) == 500
