import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rangelab import walks
from rangelab.errors import ResourceLimitError
from rangelab.graphs import COORD_LIMIT, SquareLattice, Vertex, make_graph
from rangelab.walks import RngStream

from conftest import GRAPH_KINDS

SQ = SquareLattice()


def oracle_walk(spec, x, u):
    """Scalar reference: pick neighbor floor(u * deg) in canonical order."""
    v = Vertex(*x) if not isinstance(x, Vertex) else x
    out = [v.encode()]
    for uk in u:
        nb = spec.neighbors(v)
        v = nb[int(uk * len(nb))]
        out.append(v.encode())
    return np.array(out)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(GRAPH_KINDS)), st.integers(0, 400), st.integers(0, 2 ** 32),
       st.integers(-6, 6), st.integers(-6, 6))
def test_vectorized_walk_matches_oracle(name, n, seed, i, j):
    kind, params = GRAPH_KINDS[name]
    g = make_graph(kind, params)
    x = Vertex(i, j)
    if not g.contains(x):
        return
    u = np.random.default_rng(seed).random(n)
    assert np.array_equal(walks.walk_from_uniforms(g, x, u), oracle_walk(g, x, u))


def test_long_walk_matches_oracle_on_hybrid():
    # long enough to cross several annulus boundaries with large segments
    g = make_graph("hybrid-annuli", {"radii": "3,9,81"})
    u = RngStream(5).generator().random(20_000)
    assert np.array_equal(walks.walk_from_uniforms(g, (8, 8), u), oracle_walk(g, Vertex(8, 8), u))


def test_walk_adjacency(any_graph):
    tr = walks.simulate(any_graph, (0, 0), 2000, RngStream(1, 3))
    assert walks.adjacency_ok(any_graph, tr)
    assert tr.positions()[0] == Vertex(0, 0)


def test_stream_identity_and_independence():
    a = RngStream(7, 2, 0)
    assert a.identity == "philox:7:2:0"
    assert a.sibling(1) == RngStream(7, 2, 1)
    x = a.generator().random(5)
    assert np.array_equal(x, RngStream(7, 2, 0).generator().random(5))
    assert not np.array_equal(x, RngStream(7, 3, 0).generator().random(5))
    assert not np.array_equal(x, a.sibling(1).generator().random(5))
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 0, 256)


def test_simulate_reproducible():
    a = walks.simulate(SQ, (0, 0), 5000, RngStream(42, 9))
    b = walks.simulate(SQ, (0, 0), 5000, RngStream(42, 9))
    assert np.array_equal(a.codes, b.codes) and a.R == b.R


def test_range_process():
    tr = walks.simulate(SQ, (0, 0), 3000, RngStream(3), range_series=True)
    counts = tr.range.counts
    assert counts[0] == 1 and counts[-1] == tr.R
    assert np.all(np.diff(counts) >= 0) and np.all(np.diff(counts) <= 1)
    assert Vertex(0, 0) in tr.range
    assert tr.R == len(set(tr.positions()))


def test_windowed_long_walk_matches_retained():
    n = (1 << 20) + 12345
    kept = walks.simulate(SQ, (0, 0), n, RngStream(8), keep_path=True)
    windowed = walks.simulate(SQ, (0, 0), n, RngStream(8), keep_path=False)
    assert not windowed.retained
    assert np.array_equal(kept.range.visited, windowed.range.visited)
    assert kept.first_return == windowed.first_return
    with pytest.raises(ValueError):
        windowed.positions()


def test_pathwise_last_exit(any_graph):
    for r in range(10):
        tr = walks.simulate(any_graph, (0, 0), 500, RngStream(11, r))
        assert walks.pathwise_last_exit_check(tr)


def test_first_return_time():
    tr = walks.simulate(SQ, (0, 0), 1000, RngStream(2))
    k = walks.first_return_time(tr, (0, 0))
    pos = tr.positions()
    if k is None:
        assert Vertex(0, 0) not in pos[1:]
    else:
        assert pos[k] == Vertex(0, 0) and Vertex(0, 0) not in pos[1:k]
    with pytest.raises(ValueError):
        walks.first_return_time(tr, (1, 0))


def test_intersections():
    tr = walks.simulate(SQ, (0, 0), 200, RngStream(4))
    m = 100
    a, b = set(tr.positions()[: m + 1]), set(tr.positions()[m:])
    assert walks.self_intersection(tr) == len(a & b) >= 1
    x = np.array([1, 3, 5, 9])
    y = np.array([2, 3, 9, 10, 11])
    assert walks.intersect_count(x, y) == 2
    s = RngStream(6)
    assert walks.two_walk_intersection(SQ, (0, 0), 300, s) >= 1
    with pytest.raises(ValueError):
        walks.two_walk_intersection(SQ, (0, 0), 10, s, s)


def test_horizon_guard():
    with pytest.raises(ResourceLimitError):
        walks.walk_codes(SQ, (COORD_LIMIT - 5, 0), 10, RngStream(0))
