import pytest

from rangelab.graphs import diagonal_patch, make_graph, make_patch, FiniteModification, SquareLattice

GRAPH_KINDS = {
    "square": ("square", {}),
    "king": ("king", {}),
    "triangular": ("periodic-isoradial", {"lattice": "triangular"}),
    "hexagonal": ("periodic-isoradial", {"lattice": "hexagonal"}),
    "hybrid": ("hybrid-annuli", {"radii": "3,9,81"}),
    "patched": ("finite-modification", {"patch": "diagonals:3"}),
}


@pytest.fixture(params=sorted(GRAPH_KINDS))
def any_graph(request):
    kind, params = GRAPH_KINDS[request.param]
    return make_graph(kind, params)


@pytest.fixture
def holey():
    """Square lattice with the origin's east neighbor removed and a tagged bridge vertex."""
    patch = make_patch(remove=[(1, 0)], add=[(1, 0, 1)], edges=[((0, 0), (1, 0, 1)), ((1, 0, 1), (2, 0))], hull_radius=3)
    return FiniteModification(SquareLattice(), patch)


@pytest.fixture(autouse=True)
def _no_worker_env(monkeypatch):
    monkeypatch.delenv("RANGELAB_WORKERS", raising=False)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(LINES):
            terminalreporter.write_line(LINES[number])
