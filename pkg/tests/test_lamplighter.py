import math

import numpy as np
import pytest

from rangelab import lamplighter as L
from rangelab import walks
from rangelab.errors import DomainError, ResourceLimitError
from rangelab.graphs import FiniteGraph, SquareLattice, Vertex, path_graph

SQ = SquareLattice()


def test_exact_distance_small_cases():
    g = path_graph(3)
    a = L.WreathState.make((0, 0))
    # walk to 2 and toggle it: 2 moves + 1 switch
    assert L.wreath_distance_exact(a, L.WreathState.make((2, 0), [(2, 0)]), g) == 3
    # toggle 0 and 2 and come back: 2 switches + 4 moves
    assert L.wreath_distance_exact(a, L.WreathState.make((0, 0), [(0, 0), (2, 0)]), g) == 6
    assert L.wreath_distance_exact(a, a, g) == 0


def test_bracket_contains_exact_distance():
    rng = np.random.default_rng(5)
    cyc = FiniteGraph([(i, 0) for i in range(6)], [((i, 0), ((i + 1) % 6, 0)) for i in range(6)], "cycle6")
    for g in (path_graph(7), cyc):
        vs = sorted(g._adj)
        for _ in range(40):
            a = L.WreathState.make(vs[rng.integers(len(vs))], [v for v in vs if rng.random() < 0.4])
            b = L.WreathState.make(vs[rng.integers(len(vs))], [v for v in vs if rng.random() < 0.4])
            d = L.wreath_distance_exact(a, b, g)
            lb, ub = L.distance_bracket(a, b, g)
            assert lb <= d <= ub


def test_exact_oracle_limits():
    with pytest.raises(ResourceLimitError):
        L.wreath_distance_exact(L.WreathState.make((0, 0)), L.WreathState.make((0, 0)), SQ)
    with pytest.raises(ResourceLimitError):
        big = path_graph(11)
        L.wreath_distance_exact(L.WreathState.make((0, 0)), L.WreathState.make((0, 0)), big)
    with pytest.raises(DomainError):
        L.wreath_distance_exact(L.WreathState.make((0, 0)), L.WreathState.make((9, 0)), path_graph(3))


def test_vectorized_run_matches_stepper():
    stream = walks.RngStream(17, 4)
    run = L.simulate_sws(SQ, (0, 0), 300, stream)
    rng = stream.generator()
    s = L.WreathState.make((0, 0))
    for n in range(1, 301):
        s = L.sws_step(s, SQ, rng)
        if n in (1, 2, 50, 300):
            assert run.state(n) == s


def test_lamps_live_on_the_range():
    run = L.simulate_sws(SQ, (0, 0), 2000, walks.RngStream(3))
    lit = run.lit(2000)
    assert np.isin(lit, run.codes).all()
    assert lit.size <= np.unique(run.codes).size


def test_bracket_on_lattice_is_ordered():
    s0 = L.WreathState.make((0, 0))
    s1 = L.WreathState.make((3, 0), [(0, 0), (1, 2), (-2, -2)])
    lb, ub = L.distance_bracket(s0, s1, SQ)
    assert 3 + 10 <= lb <= ub
    assert L.distance_bracket(s0, L.WreathState.make((2, 3)), SQ) == (5, 5)


def test_sws_replicas_and_scaling():
    data = L.sws_replicas(SQ, (0, 0), [100, 400], 100, seed=6)
    assert (data["LB"] <= data["UB"]).all()
    assert data["support_ok"].all()
    recs = L.scaled_displacement(data)
    assert all(r.method == "mc" and r.replicas == 100 for r in recs)
    with pytest.raises(DomainError):
        L.scaled_displacement({k: (v[:10] if isinstance(v, np.ndarray) else v) for k, v in data.items()})
