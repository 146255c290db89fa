import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rangelab.errors import InvalidGraphError, InvalidVertexError, MalformedInputError, ResourceLimitError
from rangelab.graphs import (
    COORD_LIMIT,
    AnnulusSchedule,
    FiniteModification,
    KingLattice,
    SquareLattice,
    Vertex,
    ball,
    decode_array,
    encode_array,
    format_patch,
    graph_distance,
    in_king_annulus,
    make_graph,
    make_patch,
    parse_patch,
    parse_vertex,
    path_graph,
)

coord = st.integers(-COORD_LIMIT + 1, COORD_LIMIT - 1)


@given(coord, coord, st.integers(0, 127))
def test_encode_roundtrip(i, j, tag):
    v = Vertex(i, j, tag)
    assert Vertex.decode(v.encode()) == v
    code = encode_array([i], [j], tag)
    assert code[0] == v.encode()
    assert [int(a[0]) for a in decode_array(code)] == [i, j, tag]


def test_encode_rejects_out_of_horizon():
    with pytest.raises(InvalidVertexError):
        Vertex(COORD_LIMIT, 0).encode()
    with pytest.raises(InvalidVertexError):
        encode_array([0, -COORD_LIMIT], [0, 0])


def test_parse_vertex_forms():
    assert parse_vertex("3,-4") == Vertex(3, -4)
    assert parse_vertex("(1, 2)") == Vertex(1, 2)
    assert parse_vertex("1:2:5") == Vertex(1, 2, 5)
    with pytest.raises(MalformedInputError):
        parse_vertex("a,b")


def test_neighbors_symmetric_and_simple(any_graph):
    for v in ball(any_graph, (0, 0), 4):
        nb = any_graph.neighbors(v)
        assert len(set(nb)) == len(nb)
        assert v not in nb
        for w in nb:
            assert v in any_graph.neighbors(w)


def test_neighbor_order_is_canonical(any_graph):
    for v in ball(any_graph, (0, 0), 3):
        nb = any_graph.neighbors(v)
        keys = [(w.i - v.i, w.j - v.j, w.tag) for w in nb]
        assert keys == sorted(keys)


def test_degrees():
    assert SquareLattice().degree((5, -7)) == 4
    assert KingLattice().degree((0, 0)) == 8
    assert make_graph("periodic-isoradial", {"lattice": "triangular"}).degree((2, 3)) == 6
    hexa = make_graph("periodic-isoradial", {"lattice": "hexagonal"})
    assert {hexa.degree((i, j)) for i in range(-3, 4) for j in range(-3, 4)} == {3}


def test_hexagonal_bipartite():
    hexa = make_graph("periodic-isoradial", {"lattice": "hexagonal"})
    for v in ball(hexa, (0, 0), 5):
        for w in hexa.neighbors(v):
            assert (v.i + v.j) % 2 != (w.i + w.j) % 2


def test_local_graph_matches_ball(any_graph):
    r = 6
    local = any_graph.local_graph((0, 0), r)
    dist = ball(any_graph, (0, 0), r)
    assert local.size == len(dist)
    assert local.codes[0] == Vertex(0, 0).encode()
    assert np.all(np.diff(local.dist) >= 0)
    for code, d in zip(local.codes.tolist(), local.dist.tolist()):
        assert dist[Vertex.decode(code)] == d
    # CSR rows of interior vertices list exactly the oracle neighbors
    for idx in range(int(local.layer_end[r - 1])):
        v = local.vertex(idx)
        row = local.indices[local.indptr[idx]:local.indptr[idx + 1]]
        got = sorted(Vertex.decode(local.codes[k]) for k in row)
        assert got == sorted(any_graph.neighbors(v))
        assert local.degree[idx] == any_graph.degree(v)


def test_metric_matches_bfs():
    rng = np.random.default_rng(0)
    for g in (SquareLattice(), KingLattice(), make_graph("periodic-isoradial", {"lattice": "triangular"})):
        for _ in range(20):
            x = Vertex(*rng.integers(-6, 7, 2).tolist())
            y = Vertex(*rng.integers(-6, 7, 2).tolist())
            assert g.distance(x, y) == graph_distance(g, x, y, cap=100)


def test_graph_distance_cap():
    assert graph_distance(SquareLattice(), (0, 0), (5, 5), cap=9) is None
    assert graph_distance(SquareLattice(), (0, 0), (5, 5), cap=10) == 10
    assert graph_distance(path_graph(4), (0, 0), (3, 0), cap=5) == 3


def test_ball_sizes():
    assert len(ball(SquareLattice(), (0, 0), 3)) == 25
    assert len(ball(KingLattice(), (0, 0), 3)) == 49
    with pytest.raises(ResourceLimitError):
        ball(SquareLattice(), (0, 0), 50, max_vertices=100)


def test_annulus_schedule():
    s = AnnulusSchedule(base=2)
    assert s.radii[:3] == (4, 16, 256)
    assert not in_king_annulus(s, (3, 0))
    assert in_king_annulus(s, (4, 0)) and in_king_annulus(s, (15, -15))
    assert not in_king_annulus(s, (16, 0))
    assert in_king_annulus(s, (0, 300))
    with pytest.raises(InvalidGraphError):
        AnnulusSchedule(radii=(4, 10))


def test_hybrid_diagonals_only_inside_annuli():
    g = make_graph("hybrid-annuli", {"radii": "3,9,81"})
    assert g.degree((0, 0)) == 4
    assert g.degree((5, 5)) == 8
    assert g.degree((20, 0)) == 4
    # a diagonal crossing the inner boundary needs both ends in the annulus
    assert Vertex(2, 2) not in g.neighbors((3, 3))
    assert Vertex(2, 4) in g.neighbors((3, 3))
    assert Vertex(9, 9) not in g.neighbors((8, 8))


def test_patch_roundtrip():
    p = make_patch(remove=[(0, 1)], add=[(2, 2, 1)], edges=[((0, 0), (2, 2, 1)), ((1, 1), (2, 2, 1))])
    text = format_patch(p)
    q = parse_patch(text)
    assert q == p and q.digest == p.digest
    assert "REMOVE" in text and "ADD" in text and "EDGES" in text


def test_parse_patch_errors():
    with pytest.raises(MalformedInputError):
        parse_patch("0,0\n")
    with pytest.raises(MalformedInputError):
        parse_patch("EDGES\n0,0 1,1 2,2\n")
    with pytest.raises(MalformedInputError):
        parse_patch("HULL x\n")


def test_finite_modification(holey):
    assert not holey.contains((1, 0))
    assert holey.contains((1, 0, 1))
    assert Vertex(1, 0, 1) in holey.neighbors((0, 0))
    assert holey.degree((0, 0)) == 4
    assert holey.neighbors((1, 0, 1)) == (Vertex(0, 0), Vertex(2, 0))
    with pytest.raises(InvalidVertexError):
        holey.neighbors((1, 0))
    # far from the hull it is the square lattice
    assert holey.neighbors((10, 10)) == SquareLattice().neighbors((10, 10))
    local = holey.local_graph((0, 0), 5)
    assert local.size == len(ball(holey, (0, 0), 5))


def test_finite_modification_validation():
    sq = SquareLattice()
    with pytest.raises(InvalidGraphError, match="duplicates"):
        FiniteModification(sq, make_patch(edges=[((0, 0), (0, 1))]))
    with pytest.raises(InvalidGraphError, match="removed"):
        FiniteModification(sq, make_patch(remove=[(0, 0)], edges=[((0, 0), (1, 1))]))
    with pytest.raises(InvalidGraphError, match="disconnected"):
        FiniteModification(sq, make_patch(add=[(0, 0, 1)], hull_radius=2))
    with pytest.raises(InvalidGraphError):
        FiniteModification(make_graph("periodic-isoradial", {"lattice": "hexagonal"}), make_patch())


def test_make_graph_errors():
    with pytest.raises(InvalidGraphError):
        make_graph("moebius")
    with pytest.raises(InvalidGraphError):
        make_graph("finite-modification", {})
    with pytest.raises(InvalidGraphError):
        make_graph("periodic-isoradial", {"lattice": "kagome"})


@settings(max_examples=30, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(0, 5))
def test_local_graph_off_center(i, j, r):
    g = make_graph("hybrid-annuli", {"radii": "3,9,81"})
    local = g.local_graph((i, j), r)
    assert local.size == len(ball(g, (i, j), r))
