"""Infinite bounded-degree graphs on Z^2 given as pure neighbor oracles.

Every graph in the catalog lives on lattice points ``(i, j)`` plus, for
finite modifications, a handful of extra vertices carrying a small ``tag``.
Besides the scalar oracle (:meth:`Graph.neighbors`) each graph exposes a
vectorized description of its lattice part, which is what the exact-kernel
and walk engines use at scale.
"""

from __future__ import annotations

import hashlib
import math
import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ._fast import bfs_csr
from .errors import InvalidGraphError, InvalidVertexError, MalformedInputError, ResourceLimitError

COORD_BITS = 28
COORD_LIMIT = 1 << (COORD_BITS - 1)
TAG_LIMIT = 128
_OFF = COORD_LIMIT
_MASK = (1 << COORD_BITS) - 1

# measured peak footprint of building a lattice window, per lattice point
WINDOW_BYTES_PER_POINT = 480


def _default_window_limit(cap: int = 20_000_000, share: float = 0.6) -> int:
    """Largest window that fits in ``share`` of physical memory, at most ``cap``."""
    try:
        phys = os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        return cap
    return int(min(cap, share * phys / WINDOW_BYTES_PER_POINT))


DEFAULT_MAX_VERTICES = _default_window_limit()


class Vertex(NamedTuple):
    i: int
    j: int
    tag: int = 0

    def encode(self) -> int:
        if not (-COORD_LIMIT < self.i < COORD_LIMIT and -COORD_LIMIT < self.j < COORD_LIMIT):
            raise InvalidVertexError(f"vertex {self} outside the coordinate horizon |i|,|j| < 2**27")
        if not 0 <= self.tag < TAG_LIMIT:
            raise InvalidVertexError(f"tag of {self} outside [0, {TAG_LIMIT})")
        return (self.tag << (2 * COORD_BITS)) | ((self.i + _OFF) << COORD_BITS) | (self.j + _OFF)

    @classmethod
    def decode(cls, code: int) -> "Vertex":
        code = int(code)
        return cls(((code >> COORD_BITS) & _MASK) - _OFF, (code & _MASK) - _OFF, code >> (2 * COORD_BITS))

    def __str__(self) -> str:
        return f"{self.i},{self.j}" if self.tag == 0 else f"{self.i},{self.j},{self.tag}"


def as_vertex(v) -> Vertex:
    if isinstance(v, Vertex):
        return v
    if isinstance(v, str):
        return parse_vertex(v)
    parts = tuple(int(c) for c in v)
    if len(parts) not in (2, 3):
        raise InvalidVertexError(f"cannot interpret {v!r} as a vertex")
    return Vertex(*parts)


def parse_vertex(text: str) -> Vertex:
    parts = text.strip().strip("()").replace(":", ",").split(",")
    try:
        return as_vertex([int(p) for p in parts])
    except ValueError:
        raise MalformedInputError(f"bad vertex literal {text!r}") from None


def encode_array(i, j, tag=0) -> np.ndarray:
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    if i.size and (np.abs(i).max() >= COORD_LIMIT or np.abs(j).max() >= COORD_LIMIT):
        raise InvalidVertexError("coordinates outside the simulation horizon")
    tag = np.asarray(tag, dtype=np.int64)
    return (tag << (2 * COORD_BITS)) | ((i + _OFF) << COORD_BITS) | (j + _OFF)


def decode_array(codes):
    codes = np.asarray(codes, dtype=np.int64)
    return (((codes >> COORD_BITS) & _MASK) - _OFF, (codes & _MASK) - _OFF, codes >> (2 * COORD_BITS))


def linf(v: Vertex) -> int:
    return max(abs(v.i), abs(v.j))


SQUARE_OFFSETS = np.array([(-1, 0), (0, -1), (0, 1), (1, 0)], dtype=np.int64)
KING_OFFSETS = np.array(
    [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)], dtype=np.int64
)
TRIANGULAR_OFFSETS = np.array([(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)], dtype=np.int64)


@dataclass
class LocalGraph:
    """Finite window around ``center`` holding every vertex within ``radius``.

    Vertices are indexed in breadth-first order, so ``layer_end[r]`` vertices
    form the ball ``B(center, r)``.  ``degree`` is the degree in the infinite
    graph, which is what the transition probabilities need; adjacency is
    restricted to the window.
    """

    center: Vertex
    radius: int
    codes: np.ndarray
    dist: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    degree: np.ndarray
    layer_end: np.ndarray

    @property
    def size(self) -> int:
        return int(self.codes.size)

    @cached_property
    def _sorted(self):
        order = np.argsort(self.codes, kind="stable")
        return self.codes[order], order

    def index_of(self, v) -> int:
        idx = self.indices_of([as_vertex(v).encode()])[0]
        if idx < 0:
            raise InvalidVertexError(f"{v} is not inside the local window")
        return int(idx)

    def indices_of(self, codes) -> np.ndarray:
        keys, order = self._sorted
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(keys, codes)
        pos = np.minimum(pos, keys.size - 1)
        hit = keys[pos] == codes
        return np.where(hit, order[pos], -1)

    def vertex(self, idx: int) -> Vertex:
        return Vertex.decode(self.codes[idx])


class Graph:
    """Base class: a connected, simple, undirected, bounded-degree graph."""

    kind = "abstract"
    max_degree = 0
    vertex_transitive = False
    offsets: np.ndarray = np.zeros((0, 2), dtype=np.int64)

    @property
    def identity(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.identity}>"

    # -- scalar oracle ---------------------------------------------------
    def contains(self, v) -> bool:
        v = as_vertex(v)
        return v.tag == 0

    def _neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        raise NotImplementedError

    def neighbors(self, v) -> tuple[Vertex, ...]:
        v = as_vertex(v)
        if not self.contains(v):
            raise InvalidVertexError(f"{v} is not a vertex of {self.identity}")
        return self._neighbors(v)

    def degree(self, v) -> int:
        return len(self.neighbors(v))

    def metric(self, x: Vertex, y: Vertex) -> int | None:
        """Closed-form graph distance when one is known, else ``None``."""
        return None

    def distance(self, x, y) -> int:
        x, y = as_vertex(x), as_vertex(y)
        d = self.metric(x, y)
        if d is not None:
            return d
        d = graph_distance(self, x, y, cap=COORD_LIMIT)
        if d is None:
            raise InvalidGraphError(f"{x} and {y} are not connected")
        return d

    # -- vectorized lattice description --------------------------------
    def _edge_mask(self, I: np.ndarray, J: np.ndarray, k: int) -> np.ndarray | bool:
        """Whether the lattice edge ``v -- v + offsets[k]`` exists."""
        return True

    def _excluded(self, I: np.ndarray, J: np.ndarray) -> np.ndarray | bool:
        """Lattice points that are not vertices."""
        return False

    def _irregular(self, box) -> list[Vertex]:
        """Vertices in ``box`` (plus tagged ones) whose adjacency comes from the oracle."""
        return []

    def _box_for(self, center: Vertex, radius: int):
        return (center.i - radius, center.i + radius, center.j - radius, center.j + radius)

    def regions(self, I: np.ndarray, J: np.ndarray) -> np.ndarray:
        """Region id per lattice point; every vertex in region ``c`` has neighbors
        ``v + region_tables[c]`` in canonical order.  ``-1`` means irregular."""
        return np.zeros(np.shape(I), dtype=np.int64)

    @property
    def region_tables(self) -> dict[int, np.ndarray]:
        return {0: self.offsets}

    def closed_form_kernel(self, k, di, dj):
        """``p_k(x, x + (di, dj))`` in closed form, or ``None`` if unavailable."""
        return None

    def local_graph(self, center, radius: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> LocalGraph:
        center = as_vertex(center)
        if not self.contains(center):
            raise InvalidVertexError(f"{center} is not a vertex of {self.identity}")
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        return _lattice_local_graph(self, center, int(radius), max_vertices)


def _lattice_local_graph(g: Graph, center: Vertex, radius: int, max_vertices: int) -> LocalGraph:
    i0, i1, j0, j1 = g._box_for(center, radius)
    W = j1 - j0 + 1
    nbox = (i1 - i0 + 1) * W
    if nbox > max_vertices:
        raise ResourceLimitError(
            f"window of {nbox} lattice points for radius {radius} exceeds the guard of {max_vertices}"
        )
    I = np.repeat(np.arange(i0, i1 + 1, dtype=np.int64), W)
    J = np.tile(np.arange(j0, j1 + 1, dtype=np.int64), i1 - i0 + 1)
    excluded = np.broadcast_to(g._excluded(I, J), I.shape)
    irregular = g._irregular((i0, i1, j0, j1))
    tagged = [v for v in irregular if v.tag != 0]
    ntot = nbox + len(tagged)
    tag_index = {v: nbox + t for t, v in enumerate(tagged)}

    def index_of(v: Vertex) -> int:
        if v.tag:
            return tag_index.get(v, -1)
        if i0 <= v.i <= i1 and j0 <= v.j <= j1:
            return (v.i - i0) * W + (v.j - j0)
        return -1

    K = len(g.offsets)
    table = np.full((nbox, K), -1, dtype=np.int32)
    degree = np.zeros(ntot, dtype=np.int32)
    for k, (di, dj) in enumerate(g.offsets):
        mask = np.broadcast_to(g._edge_mask(I, J, k), I.shape) & ~excluded
        degree[:nbox] += mask
        ni, nj = I + di, J + dj
        inside = (ni >= i0) & (ni <= i1) & (nj >= j0) & (nj <= j1)
        ok = mask & inside
        target = (ni - i0) * W + (nj - j0)
        ok[ok] &= ~excluded[target[ok]]
        table[ok, k] = target[ok]
    degree[:nbox][excluded] = 0

    if irregular:
        irr_rows = np.array([index_of(v) for v in irregular], dtype=np.int64)
        lattice_rows = irr_rows[irr_rows < nbox]
        table[lattice_rows] = -1
        row_of, col_of = np.nonzero(table >= 0)
        cols = table[row_of, col_of].astype(np.int64)
        extra_r, extra_c = [], []
        for v, r in zip(irregular, irr_rows):
            nbs = g.neighbors(v)
            degree[r] = len(nbs)
            for w in nbs:
                c = index_of(w)
                if c >= 0:
                    extra_r.append(r)
                    extra_c.append(c)
        rows = np.concatenate([row_of.astype(np.int64), np.array(extra_r, dtype=np.int64)])
        cols = np.concatenate([cols, np.array(extra_c, dtype=np.int64)])
        order = np.argsort(rows, kind="stable")
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(ntot + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=ntot), out=indptr[1:])
        indices = cols.astype(np.int32)
    else:
        valid = table >= 0
        indptr = np.zeros(ntot + 1, dtype=np.int64)
        np.cumsum(valid.sum(axis=1), out=indptr[1:])
        indices = table[valid]
    del table

    src = index_of(center)
    dist, order = bfs_csr(indptr, indices, src, radius)
    codes_all = np.empty(ntot, dtype=np.int64)
    codes_all[:nbox] = encode_array(I, J)
    for v, t in tag_index.items():
        codes_all[t] = v.encode()
    return _restrict(center, radius, dist, order, indptr, indices, degree, codes_all)


def _restrict(center, radius, dist, order, indptr, indices, degree, codes_all) -> LocalGraph:
    m = order.size
    new_of_old = np.full(indptr.size - 1, -1, dtype=np.int64)
    new_of_old[order] = np.arange(m)
    starts = indptr[order]
    lens = indptr[order + 1] - starts
    total = int(lens.sum())
    row_start = np.concatenate([[0], np.cumsum(lens)[:-1]])
    pos = np.repeat(starts - row_start, lens) + np.arange(total)
    cols = new_of_old[indices[pos]]
    rows = np.repeat(np.arange(m), lens)
    keep = cols >= 0
    new_indptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows[keep], minlength=m), out=new_indptr[1:])
    d = dist[order]
    layer_end = np.searchsorted(d, np.arange(radius + 1), side="right")
    return LocalGraph(
        center=center,
        radius=radius,
        codes=codes_all[order],
        dist=d,
        indptr=new_indptr,
        indices=cols[keep].astype(np.int32),
        degree=degree[order].astype(np.float64),
        layer_end=layer_end,
    )


class SquareLattice(Graph):
    kind = "square"
    max_degree = 4
    vertex_transitive = True
    offsets = SQUARE_OFFSETS

    def _neighbors(self, v):
        return tuple(Vertex(v.i + di, v.j + dj) for di, dj in SQUARE_OFFSETS.tolist())

    def metric(self, x, y):
        if x.tag or y.tag:
            return None
        return abs(x.i - y.i) + abs(x.j - y.j)

    def closed_form_kernel(self, k, di, dj):
        # rotating by 45 degrees splits the walk into two independent 1D walks
        return _binomial_walk(k, di + dj) * _binomial_walk(k, di - dj)


def _binomial_walk(k, m):
    from scipy.special import gammaln

    k = np.asarray(k, dtype=np.int64)
    m = np.abs(np.asarray(m, dtype=np.int64))
    ok = ((k + m) % 2 == 0) & (m <= k)
    a = np.where(ok, (k + m) // 2, 0)
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.exp(gammaln(k + 1) - gammaln(a + 1) - gammaln(k - a + 1) - k * math.log(2.0))
    return np.where(ok, v, 0.0)


class KingLattice(Graph):
    kind = "king"
    max_degree = 8
    vertex_transitive = True
    offsets = KING_OFFSETS

    def _neighbors(self, v):
        return tuple(Vertex(v.i + di, v.j + dj) for di, dj in KING_OFFSETS.tolist())

    def metric(self, x, y):
        if x.tag or y.tag:
            return None
        return max(abs(x.i - y.i), abs(x.j - y.j))


class TriangularLattice(Graph):
    """Triangular lattice in axial coordinates: ``(i, j)`` sits at ``i*a + j*b``."""

    kind = "periodic-isoradial"
    max_degree = 6
    vertex_transitive = True
    offsets = TRIANGULAR_OFFSETS

    @property
    def identity(self):
        return "periodic-isoradial(triangular)"

    def _neighbors(self, v):
        return tuple(Vertex(v.i + di, v.j + dj) for di, dj in TRIANGULAR_OFFSETS.tolist())

    def metric(self, x, y):
        di, dj = x.i - y.i, x.j - y.j
        return max(abs(di), abs(dj), abs(di + dj))


class HexagonalLattice(Graph):
    """Honeycomb in brick-wall coordinates: vertical edge up from ``i + j`` even."""

    kind = "periodic-isoradial"
    max_degree = 3
    vertex_transitive = True
    offsets = SQUARE_OFFSETS

    @property
    def identity(self):
        return "periodic-isoradial(hexagonal)"

    def _neighbors(self, v):
        vertical = (0, 1) if (v.i + v.j) % 2 == 0 else (0, -1)
        out = [(-1, 0), vertical, (1, 0)]
        return tuple(Vertex(v.i + di, v.j + dj) for di, dj in sorted(out))

    def _edge_mask(self, I, J, k):
        di, dj = SQUARE_OFFSETS[k]
        if dj == 0:
            return True
        even = (I + J) % 2 == 0
        return even if dj == 1 else ~even

    def regions(self, I, J):
        return ((np.asarray(I) + np.asarray(J)) % 2).astype(np.int64)

    @property
    def region_tables(self):
        return {0: np.array([(-1, 0), (0, 1), (1, 0)]), 1: np.array([(-1, 0), (0, -1), (1, 0)])}


def periodic_isoradial(lattice: str = "square") -> Graph:
    if lattice == "square":
        return SquareLattice()
    if lattice == "triangular":
        return TriangularLattice()
    if lattice == "hexagonal":
        return HexagonalLattice()
    raise InvalidGraphError(f"unknown periodic lattice {lattice!r}")


@dataclass(frozen=True)
class AnnulusSchedule:
    """Doubly exponential radii ``R_j = base ** (2 ** (j + 1))``; king edges live in
    ``R_{2j} <= |v|_inf < R_{2j+1}``."""

    base: int = 2
    radii: tuple[int, ...] = ()
    rule: str = "odd-annuli-king"

    def __post_init__(self):
        if not self.radii:
            if self.base < 2:
                raise InvalidGraphError("schedule base must be >= 2")
            radii, j = [], 0
            while True:
                r = self.base ** (2 ** (j + 1))
                radii.append(r)
                if r >= COORD_LIMIT:
                    break
                j += 1
            object.__setattr__(self, "radii", tuple(radii))
        r = self.radii
        if r[0] < 2:
            raise InvalidGraphError("R_0 must be >= 2")
        for a, b in zip(r, r[1:]):
            if b < a * a:
                raise InvalidGraphError(f"schedule violates R_(j+1) >= R_j^2 at {a} -> {b}")
        if r[-1] < COORD_LIMIT:
            object.__setattr__(self, "radii", r + (max(COORD_LIMIT, r[-1] ** 2),))

    @cached_property
    def _radii_array(self) -> np.ndarray:
        return np.array(self.radii, dtype=np.int64)

    def king_norm(self, m):
        """Vectorized membership by sup-norm ``m``."""
        return np.searchsorted(self._radii_array, m, side="right") % 2 == 1


def in_king_annulus(schedule: AnnulusSchedule, v) -> bool:
    v = as_vertex(v)
    return bool(schedule.king_norm(linf(v)))


class HybridAnnuli(Graph):
    """Z^2 with every nearest-neighbor edge, plus diagonal edges whose two
    endpoints both lie in a king annulus of the schedule."""

    kind = "hybrid-annuli"
    max_degree = 8
    offsets = KING_OFFSETS

    def __init__(self, schedule: AnnulusSchedule | None = None):
        self.schedule = schedule or AnnulusSchedule()

    @property
    def identity(self):
        s = self.schedule
        head = ",".join(str(r) for r in s.radii[:4])
        return f"hybrid-annuli(R={head},...)"

    def _king(self, i, j):
        return self.schedule.king_norm(np.maximum(np.abs(i), np.abs(j)))

    def _neighbors(self, v):
        here = bool(self._king(v.i, v.j))
        out = []
        for di, dj in KING_OFFSETS.tolist():
            if di == 0 or dj == 0 or (here and bool(self._king(v.i + di, v.j + dj))):
                out.append(Vertex(v.i + di, v.j + dj))
        return tuple(out)

    def _edge_mask(self, I, J, k):
        di, dj = KING_OFFSETS[k]
        if di == 0 or dj == 0:
            return True
        return self._king(I, J) & self._king(I + di, J + dj)

    def regions(self, I, J):
        m = np.maximum(np.abs(I), np.abs(J))
        here = self.schedule.king_norm(m)
        inner = self.schedule.king_norm(np.maximum(m - 1, 1))
        outer = self.schedule.king_norm(m + 1)
        return np.where(~here, 0, np.where(inner & outer, 1, -1))

    @property
    def region_tables(self):
        return {0: SQUARE_OFFSETS, 1: KING_OFFSETS}


@dataclass(frozen=True)
class PatchSpec:
    """Explicit finite modification: vertices removed, vertices added, and
    extra edges, all inside the sup-norm hull ``|v|_inf <= hull_radius``."""

    remove: frozenset = frozenset()
    add: frozenset = frozenset()
    edges: tuple = ()
    hull_radius: int = 0

    @property
    def digest(self) -> str:
        return hashlib.sha256(format_patch(self).encode()).hexdigest()[:12]


def make_patch(remove=(), add=(), edges=(), hull_radius=None) -> PatchSpec:
    remove = frozenset(as_vertex(v) for v in remove)
    add = frozenset(as_vertex(v) for v in add)
    edges = tuple(sorted({tuple(sorted((as_vertex(a), as_vertex(b)))) for a, b in edges}))
    if hull_radius is None:
        norms = [linf(v) + 1 for v in remove] + [linf(v) for v in add]
        norms += [linf(v) for e in edges for v in e]
        hull_radius = max(norms, default=0)
    return PatchSpec(remove, add, edges, int(hull_radius))


def diagonal_patch(radius: int = 5) -> PatchSpec:
    """All diagonal edges with both endpoints in the L1 ball ``B(0, radius)``."""
    edges = []
    for i in range(-radius, radius + 1):
        for j in range(-radius, radius + 1):
            if abs(i) + abs(j) > radius:
                continue
            for dj in (-1, 1):
                a, b = (i + 1, j + dj), (i, j)
                if abs(a[0]) + abs(a[1]) <= radius:
                    edges.append((a, b))
    return make_patch(edges=edges)


class FiniteModification(Graph):
    kind = "finite-modification"

    def __init__(self, base: Graph, patch: PatchSpec):
        if not isinstance(base, (SquareLattice, KingLattice)):
            raise InvalidGraphError("finite modifications are supported over square and king bases")
        self.base = base
        self.patch = patch
        self.offsets = base.offsets
        self._adj = self._validate()
        hull_deg = max((len(self._neighbors(v)) for v in self._hull_vertices()), default=0)
        self.max_degree = max(base.max_degree, hull_deg)

    @property
    def identity(self):
        return f"finite-modification({self.base.identity};{self.patch.digest})"

    def _in_hull(self, v: Vertex) -> bool:
        return v.tag != 0 or linf(v) <= self.patch.hull_radius

    def _validate(self):
        p = self.patch
        N0 = p.hull_radius
        for v in p.remove:
            if v.tag != 0 or linf(v) > N0 - 1:
                raise InvalidGraphError(f"removed vertex {v} must be a lattice point with |v|_inf <= N0 - 1")
        for v in p.add:
            if v.tag == 0 or linf(v) > N0:
                raise InvalidGraphError(f"added vertex {v} needs a tag >= 1 and a position inside the hull")
        adj: dict[Vertex, set] = {}
        for a, b in p.edges:
            if a == b:
                raise InvalidGraphError(f"self-loop at {a}")
            for v in (a, b):
                if v in p.remove:
                    raise InvalidGraphError(f"edge endpoint {v} was removed")
                if v.tag and v not in p.add:
                    raise InvalidGraphError(f"edge endpoint {v} is not an added vertex")
                if linf(v) > N0:
                    raise InvalidGraphError(f"edge endpoint {v} lies outside the hull")
            if a.tag == 0 and b.tag == 0 and b in self.base._neighbors(a):
                raise InvalidGraphError(f"edge {a}-{b} duplicates a base edge")
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        self._adj = adj
        # connectivity of the hull plus its outer ring
        ring = N0 + 1
        start = Vertex(ring, 0)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in self._neighbors(u):
                if w not in seen and (w.tag or linf(w) <= ring):
                    seen.add(w)
                    queue.append(w)
        for v in self._hull_vertices():
            if v not in seen:
                raise InvalidGraphError(f"modified graph is disconnected at {v}")
        return adj

    def _hull_vertices(self):
        N0 = self.patch.hull_radius
        out = [
            Vertex(i, j)
            for i in range(-N0, N0 + 1)
            for j in range(-N0, N0 + 1)
            if Vertex(i, j) not in self.patch.remove
        ]
        return out + sorted(self.patch.add)

    def contains(self, v):
        v = as_vertex(v)
        if v.tag:
            return v in self.patch.add
        return v not in self.patch.remove

    def _neighbors(self, v):
        if not self._in_hull(v):
            return self.base._neighbors(v)
        out = set(self._adj.get(v, ()))
        if v.tag == 0:
            out.update(w for w in self.base._neighbors(v) if w not in self.patch.remove)
        return tuple(sorted(out, key=lambda w: (w.i - v.i, w.j - v.j, w.tag)))

    def _excluded(self, I, J):
        if not self.patch.remove:
            return False
        rem = encode_array([v.i for v in self.patch.remove], [v.j for v in self.patch.remove])
        return np.isin(encode_array(I, J), rem)

    def _irregular(self, box):
        i0, i1, j0, j1 = box
        return [v for v in self._hull_vertices() if v.tag or (i0 <= v.i <= i1 and j0 <= v.j <= j1)]

    def _box_for(self, center, radius):
        N0 = self.patch.hull_radius
        i0, i1, j0, j1 = center.i - radius, center.i + radius, center.j - radius, center.j + radius
        if max(abs(center.i), abs(center.j)) - N0 <= radius:
            # patch edges can jump across the hull
            i0, i1 = min(i0, -N0 - radius), max(i1, N0 + radius)
            j0, j1 = min(j0, -N0 - radius), max(j1, N0 + radius)
        return i0, i1, j0, j1

    def regions(self, I, J):
        m = np.maximum(np.abs(I), np.abs(J))
        return np.where(m > self.patch.hull_radius, 0, -1)


class FiniteGraph(Graph):
    """Explicit finite graph; used as the base of exact lamplighter distances."""

    kind = "finite"

    def __init__(self, vertices: Sequence, edges: Iterable, name: str = "finite"):
        self.vertex_list = [as_vertex(v) for v in vertices]
        if len(set(self.vertex_list)) != len(self.vertex_list):
            raise InvalidGraphError("duplicate vertices")
        self._adj = {v: set() for v in self.vertex_list}
        for a, b in edges:
            a, b = as_vertex(a), as_vertex(b)
            if a == b or a not in self._adj or b not in self._adj:
                raise InvalidGraphError(f"bad edge {a}-{b}")
            self._adj[a].add(b)
            self._adj[b].add(a)
        self.name = name
        self.max_degree = max((len(s) for s in self._adj.values()), default=0)

    @property
    def identity(self):
        return f"finite({self.name};{len(self.vertex_list)})"

    def contains(self, v):
        return as_vertex(v) in self._adj

    def _neighbors(self, v):
        return tuple(sorted(self._adj[v], key=lambda w: (w.i - v.i, w.j - v.j, w.tag)))

    def local_graph(self, center, radius, max_vertices=DEFAULT_MAX_VERTICES):
        center = as_vertex(center)
        dists = ball(self, center, radius, max_vertices=max_vertices)
        verts = sorted(dists, key=lambda v: (dists[v], v))
        index = {v: k for k, v in enumerate(verts)}
        indptr, indices = [0], []
        for v in verts:
            indices.extend(index[w] for w in self._neighbors(v) if w in index)
            indptr.append(len(indices))
        d = np.array([dists[v] for v in verts], dtype=np.int32)
        return LocalGraph(
            center=center,
            radius=radius,
            codes=np.array([v.encode() for v in verts], dtype=np.int64),
            dist=d,
            indptr=np.array(indptr, dtype=np.int64),
            indices=np.array(indices, dtype=np.int32),
            degree=np.array([len(self._adj[v]) for v in verts], dtype=np.float64),
            layer_end=np.searchsorted(d, np.arange(radius + 1), side="right"),
        )

    def regions(self, I, J):
        return np.full(np.shape(I), -1, dtype=np.int64)


def path_graph(n: int) -> FiniteGraph:
    return FiniteGraph([(k, 0) for k in range(n)], [((k, 0), (k + 1, 0)) for k in range(n - 1)], f"path{n}")


# -- generic oracle algorithms ---------------------------------------------

def neighbors(spec: Graph, v) -> tuple[Vertex, ...]:
    return spec.neighbors(v)


def ball(spec: Graph, x, r: int, max_vertices: int = 2_000_000) -> dict[Vertex, int]:
    """Breadth-first closed ball: every vertex within distance ``r`` with its distance."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    x = as_vertex(x)
    if not spec.contains(x):
        raise InvalidVertexError(f"{x} is not a vertex of {spec.identity}")
    dist = {x: 0}
    frontier = [x]
    for d in range(1, r + 1):
        nxt = []
        for u in frontier:
            for w in spec._neighbors(u):
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        if len(dist) > max_vertices:
            raise ResourceLimitError(f"ball of radius {r} exceeds {max_vertices} vertices")
        frontier = nxt
        if not frontier:
            break
    return dist


def graph_distance(spec: Graph, x, y, cap: int) -> int | None:
    """Bidirectional breadth-first distance, or ``None`` when it exceeds ``cap``."""
    x, y = as_vertex(x), as_vertex(y)
    for v in (x, y):
        if not spec.contains(v):
            raise InvalidVertexError(f"{v} is not a vertex of {spec.identity}")
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    if x == y:
        return 0
    seen = [{x: 0}, {y: 0}]
    fronts = [[x], [y]]
    depth = [0, 0]
    while fronts[0] and fronts[1]:
        side = 0 if len(fronts[0]) <= len(fronts[1]) else 1
        if depth[0] + depth[1] >= cap:
            return None
        depth[side] += 1
        mine, other = seen[side], seen[1 - side]
        nxt = []
        best = None
        for u in fronts[side]:
            for w in spec._neighbors(u):
                if w in other:
                    cand = depth[side] + other[w]
                    best = cand if best is None else min(best, cand)
                if w not in mine:
                    mine[w] = depth[side]
                    nxt.append(w)
        if best is not None:
            return best if best <= cap else None
        fronts[side] = nxt
    return None


# -- patch files ---------------------------------------------------------------

def parse_patch(text: str) -> PatchSpec:
    section = None
    remove, add, edges, hull = [], [], [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0].upper()
        if head in ("REMOVE", "ADD", "EDGES"):
            section = head
            continue
        if head == "HULL":
            try:
                hull = int(line.split()[1])
            except (IndexError, ValueError):
                raise MalformedInputError(f"line {lineno}: HULL needs an integer") from None
            continue
        try:
            if section == "REMOVE":
                remove.append(parse_vertex(line))
            elif section == "ADD":
                add.append(parse_vertex(line))
            elif section == "EDGES":
                parts = [p for p in line.split() if p != "-"]
                if len(parts) != 2:
                    raise MalformedInputError(f"line {lineno}: an edge needs two vertices")
                edges.append((parse_vertex(parts[0]), parse_vertex(parts[1])))
            else:
                raise MalformedInputError(f"line {lineno}: data outside a section")
        except InvalidVertexError as exc:
            raise MalformedInputError(f"line {lineno}: {exc}") from None
    return make_patch(remove, add, edges, hull)


def format_patch(patch: PatchSpec) -> str:
    lines = [f"HULL {patch.hull_radius}", "REMOVE"]
    lines += [str(v) for v in sorted(patch.remove)]
    lines.append("ADD")
    lines += [str(v) for v in sorted(patch.add)]
    lines.append("EDGES")
    lines += [f"{a} {b}" for a, b in patch.edges]
    return "\n".join(lines) + "\n"


# -- catalog -------------------------------------------------------------------

CATALOG = {
    "square": "Z^2 with nearest-neighbor edges (degree 4)",
    "king": "Z^2 with all sup-norm-1 edges (degree 8)",
    "hybrid-annuli": "Z^2 plus diagonal edges inside doubly exponential annuli (params: schedule_base, radii)",
    "finite-modification": "square or king lattice with an explicit finite patch (params: base, patch_file | patch)",
    "periodic-isoradial": "square, triangular or hexagonal lattice (params: lattice)",
}


def make_graph(kind: str, params: dict | None = None) -> Graph:
    params = dict(params or {})
    kind = {"hybrid": "hybrid-annuli", "fm": "finite-modification"}.get(kind, kind)
    if kind == "square":
        return SquareLattice()
    if kind == "king":
        return KingLattice()
    if kind == "periodic-isoradial":
        return periodic_isoradial(str(params.get("lattice", "square")))
    if kind == "hybrid-annuli":
        radii = params.get("radii")
        if radii:
            if isinstance(radii, str):
                radii = [int(r) for r in radii.split(",")]
            return HybridAnnuli(AnnulusSchedule(radii=tuple(int(r) for r in radii)))
        return HybridAnnuli(AnnulusSchedule(base=int(params.get("schedule_base", 2))))
    if kind == "finite-modification":
        base = make_graph(str(params.get("base", "square")))
        if "patch_file" in params:
            try:
                with open(params["patch_file"], encoding="utf-8") as fh:
                    patch = parse_patch(fh.read())
            except OSError as exc:
                raise InvalidGraphError(f"cannot read patch file: {exc}") from None
        elif "patch" in params:
            name, _, arg = str(params["patch"]).partition(":")
            if name != "diagonals":
                raise InvalidGraphError(f"unknown patch preset {name!r}")
            patch = diagonal_patch(int(arg or 5))
        else:
            raise InvalidGraphError("finite-modification needs a patch_file or a patch preset")
        return FiniteModification(base, patch)
    raise InvalidGraphError(f"unknown graph kind {kind!r}")
