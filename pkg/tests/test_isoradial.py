import math

import pytest

from rangelab import isoradial as iso
from rangelab.errors import DomainError, MalformedInputError
from rangelab.graphs import SquareLattice

# theta sits at an endpoint between the edge and the radius, so |xy| = 2 cos(theta); frozen per tiling
EDGE = {"square": math.sqrt(2), "triangular": math.sqrt(3), "hexagonal": 1.0}
DUAL = {"square": math.sqrt(2), "triangular": 1.0, "hexagonal": math.sqrt(3)}


@pytest.mark.parametrize("kind", sorted(EDGE))
def test_periodic_tilings_pass(kind):
    g = iso.generate_isoradial(kind, 3)
    cert = iso.verify_isoradial(g)
    assert cert.passed, cert.summary()
    lo, hi = cert.theta_range
    assert 2 * math.cos(lo) == pytest.approx(EDGE[kind], abs=1e-9)
    assert lo == pytest.approx(hi, abs=1e-9)
    c1, c2, d1, d2 = iso.edge_and_dual_bounds(cert)
    assert c1 == pytest.approx(EDGE[kind]) and c2 == pytest.approx(EDGE[kind])
    assert d1 == pytest.approx(DUAL[kind]) and d2 == pytest.approx(DUAL[kind])
    assert cert.rhombus_side_dev < 1e-9


def test_displaced_vertex_fails():
    g = iso.generate_isoradial("square", 2)
    bad = iso.displace(g, 0, (1e-3, 0))
    cert = iso.verify_isoradial(bad)
    assert not cert.passed
    assert cert.bad_faces
    with pytest.raises(DomainError):
        iso.edge_and_dual_bounds(cert)


def test_literal_window_rejects_square():
    # half-angles of the square tiling are exactly pi/4
    cert = iso.verify_isoradial(iso.generate_isoradial("square", 2), window_upper=iso.LITERAL_UPPER)
    assert cert.circles_ok and not cert.angles_ok


def test_text_roundtrip():
    g = iso.generate_isoradial("triangular", 2)
    h = iso.parse_embedded(iso.format_embedded(g))
    assert h.coords == g.coords and h.faces == g.faces and h.tau == g.tau


def test_parse_errors():
    with pytest.raises(MalformedInputError):
        iso.parse_embedded("V 0 0 0\nV 0 1 1\n")
    with pytest.raises(MalformedInputError):
        iso.parse_embedded("V 0 0 0\nV 1 1 0\nF 0 0 1\n")
    with pytest.raises(MalformedInputError):
        iso.parse_embedded("V 0 0 0\nV 1 1 0\nF 0 0 1 7\n")
    with pytest.raises(MalformedInputError):
        iso.parse_embedded("Q 0\n")
    with pytest.raises(MalformedInputError):
        iso.EmbeddedPlanarGraph({0: (0.0, 0.0)}, [], tau=0)


def test_isoperimetry_square_blocks():
    out = iso.isoperimetric_scan(SquareLattice(), iso.square_blocks(6))
    # a k x k block has 4k boundary edges, so the ratio is constant 4
    assert [r[1] for r in out["rows"]] == [4 * k for k in range(1, 7)]
    assert out["min_ratio"] == pytest.approx(4.0)
    emb = iso.generate_isoradial("square", 4)
    assert iso.isoperimetric_scan(emb, [[0, 1]])["rows"][0][0] == 2
    with pytest.raises(DomainError):
        iso.isoperimetric_scan(SquareLattice(), [[]])


def test_generator_errors():
    with pytest.raises(DomainError):
        iso.generate_isoradial("penrose", 2)
    with pytest.raises(DomainError):
        iso.generate_isoradial("square", 0)
