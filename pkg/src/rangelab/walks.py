"""Seeded simple random walks with range and intersection statistics.

Each step draws one uniform ``u`` from the replica's stream and moves to
``neighbors(v)[floor(u * deg(v))]``.  Inside regions where the graph looks
like a lattice the steps are taken in vectorized segments; elsewhere the
neighbor oracle is called one step at a time.  Both paths consume the same
uniforms in the same way, so a trace depends only on ``(seed, replica)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceLimitError
from .graphs import COORD_LIMIT, Graph, Vertex, as_vertex, decode_array, encode_array

log = logging.getLogger(__name__)

PATH_LIMIT = 10_000_000
_MIN_SEGMENT = 64
_MAX_SEGMENT = 1 << 16
_BLOCK = 1 << 20


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream for ``(seed, replica, lane)``.

    Lane 0 drives the walk; other lanes feed companion randomness such as a
    second independent walk or lamp bits.
    """

    seed: int
    replica: int = 0
    lane: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.replica < 0 or not 0 <= self.lane < 256:
            raise ValueError("seed and replica must be nonnegative, lane in [0, 256)")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, (self.replica << 8) | self.lane], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def sibling(self, lane: int) -> "RngStream":
        return RngStream(self.seed, self.replica, lane)

    @property
    def identity(self) -> str:
        return f"philox:{self.seed}:{self.replica}:{self.lane}"


@dataclass
class RangeProcess:
    """Visited set (sorted unique codes) plus optionally ``R_t`` for every ``t``."""

    visited: np.ndarray
    counts: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.visited.size)

    def __contains__(self, v) -> bool:
        code = as_vertex(v).encode()
        pos = np.searchsorted(self.visited, code)
        return bool(pos < self.visited.size and self.visited[pos] == code)


@dataclass
class WalkTrace:
    graph: str
    start: Vertex
    n: int
    stream: str
    codes: np.ndarray | None
    range: RangeProcess
    first_return: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def retained(self) -> bool:
        return self.codes is not None

    def positions(self) -> list[Vertex]:
        if self.codes is None:
            raise ValueError("trace is windowed; positions were not kept")
        return [Vertex.decode(c) for c in self.codes.tolist()]

    @property
    def R(self) -> int:
        return self.range.size


class _Walker:
    """Incremental generator of walk positions for one graph."""

    def __init__(self, spec: Graph, x: Vertex, u: np.ndarray):
        self.spec = spec
        self.tables = spec.region_tables
        self.degs = {c: t.shape[0] for c, t in self.tables.items()}
        self.pos = x
        self.u = u
        self.t = 0
        self.seg = _MIN_SEGMENT

    def _region(self, v: Vertex) -> int:
        if v.tag:
            return -1
        return int(self.spec.regions(np.array([v.i]), np.array([v.j]))[0])

    def run(self, steps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Advance ``steps`` steps; returns ``(i, j, tag)`` of positions after each step."""
        I = np.empty(steps, np.int64)
        J = np.empty(steps, np.int64)
        T = np.zeros(steps, np.int64)
        done = 0
        while done < steps:
            v = self.pos
            c = self._region(v)
            if c < 0:
                nbs = self.spec.neighbors(v)
                w = nbs[int(self.u[self.t] * len(nbs))]
                I[done], J[done], T[done] = w.i, w.j, w.tag
                self.pos = w
                self.t += 1
                done += 1
                self.seg = _MIN_SEGMENT
                continue
            L = min(self.seg, steps - done)
            uu = self.u[self.t:self.t + L]
            R = np.full(L, c, np.int64)
            accepted = 0
            for _ in range(8):
                D = np.empty((L, 2), np.int64)
                for r in np.unique(R):
                    sel = R == r
                    D[sel] = self.tables[int(r)][(uu[sel] * self.degs[int(r)]).astype(np.int64)]
                Pi = v.i + np.cumsum(D[:, 0])
                Pj = v.j + np.cumsum(D[:, 1])
                before = np.empty(L, np.int64)
                before[0] = c
                if L > 1:
                    before[1:] = self.spec.regions(Pi[:-1], Pj[:-1])
                bad = np.nonzero(before != R)[0]
                if bad.size == 0:
                    accepted = L
                    break
                s = int(bad[0])
                accepted = s
                if before[s] < 0:
                    break
                R = before
            I[done:done + accepted] = Pi[:accepted]
            J[done:done + accepted] = Pj[:accepted]
            self.pos = Vertex(int(Pi[accepted - 1]), int(Pj[accepted - 1]))
            self.t += accepted
            done += accepted
            self.seg = min(2 * self.seg, _MAX_SEGMENT) if accepted == L else _MIN_SEGMENT
        return I, J, T


def _check_horizon(x: Vertex, n: int):
    if max(abs(x.i), abs(x.j)) + n >= COORD_LIMIT:
        raise ResourceLimitError(f"a walk of {n} steps from {x} could leave the encodable coordinate range")


def walk_codes(spec: Graph, x, n: int, stream: RngStream) -> np.ndarray:
    """Encoded positions ``S_0..S_n``."""
    return walk_from_uniforms(spec, x, stream.generator().random(n))


def walk_from_uniforms(spec: Graph, x, u: np.ndarray) -> np.ndarray:
    """Encoded positions driven by the given step uniforms (one per step)."""
    x = as_vertex(x)
    n = int(u.size)
    _check_horizon(x, n)
    spec.neighbors(x)
    I, J, T = _Walker(spec, x, np.ascontiguousarray(u)).run(n)
    out = np.empty(n + 1, np.int64)
    out[0] = x.encode()
    out[1:] = encode_array(I, J, T)
    return out


def range_counts(codes: np.ndarray) -> np.ndarray:
    """``R_t`` for ``t = 0..n`` from encoded positions."""
    _, first = np.unique(codes, return_index=True)
    new = np.zeros(codes.size, np.int64)
    new[first] = 1
    return np.cumsum(new)


def _first_return(codes: np.ndarray) -> int | None:
    hit = np.nonzero(codes[1:] == codes[0])[0]
    return int(hit[0]) + 1 if hit.size else None


def simulate(spec: Graph, x, n: int, stream: RngStream, keep_path: bool | None = None,
             range_series: bool = False) -> WalkTrace:
    """Run ``n`` steps from ``x``.

    Paths are retained by default up to ``PATH_LIMIT`` steps; longer walks
    keep only the visited set, merged block by block.
    """
    x = as_vertex(x)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if keep_path is None:
        keep_path = n <= PATH_LIMIT
    if keep_path or n <= _BLOCK:
        codes = walk_codes(spec, x, n, stream)
        rp = RangeProcess(np.unique(codes), range_counts(codes) if range_series else None)
        return WalkTrace(spec.identity, x, n, stream.identity, codes if keep_path else None, rp,
                         first_return=_first_return(codes))
    if range_series:
        raise ValueError("R_t series needs the retained path")
    _check_horizon(x, n)
    u = stream.generator().random(n)
    walker = _Walker(spec, x, u)
    visited = np.array([x.encode()], np.int64)
    x_code = x.encode()
    t_ret = None
    done = 0
    while done < n:
        m = min(_BLOCK, n - done)
        I, J, T = walker.run(m)
        block = encode_array(I, J, T)
        if t_ret is None:
            hit = np.nonzero(block == x_code)[0]
            if hit.size:
                t_ret = done + int(hit[0]) + 1
        visited = np.union1d(visited, block)
        done += m
    return WalkTrace(spec.identity, x, n, stream.identity, None, RangeProcess(visited), first_return=t_ret)


def adjacency_ok(spec: Graph, trace: WalkTrace) -> bool:
    pos = trace.positions()
    return all(b in spec.neighbors(a) for a, b in zip(pos, pos[1:]))


def pathwise_last_exit_check(trace: WalkTrace) -> bool:
    """``R_n = 1 + sum_{i<n} 1{S_i not in {S_{i+1}..S_n}}`` on the realized path."""
    if not trace.retained:
        raise ValueError("pathwise check needs the full position sequence")
    codes = trace.codes
    n = codes.size - 1
    # S_i is a last visit iff no later index carries the same code
    rev = codes[::-1]
    _, first_in_rev = np.unique(rev, return_index=True)
    last_idx = n - first_in_rev
    lhs = np.unique(codes).size
    rhs = 1 + int(np.count_nonzero(last_idx < n))
    return lhs == rhs


def first_return_time(trace: WalkTrace, x=None) -> int | None:
    """First ``k >= 1`` with ``S_k = x``; ``None`` means censored at ``n``."""
    if x is not None and as_vertex(x) != trace.start:
        raise ValueError("trace does not start at x")
    return trace.first_return


def self_intersection(trace: WalkTrace) -> int:
    """``|{S_0..S_m} & {S_m..S_2m}|`` for a retained trace of ``2m`` steps."""
    if not trace.retained:
        raise ValueError("self intersection needs the full position sequence")
    if trace.n % 2:
        raise ValueError("trace length must be even")
    m = trace.n // 2
    a = np.unique(trace.codes[: m + 1])
    b = np.unique(trace.codes[m:])
    return int(np.intersect1d(a, b, assume_unique=True).size)


def intersect_count(a: np.ndarray, b: np.ndarray) -> int:
    """Size of the intersection of two sorted unique code arrays; probes the smaller."""
    small, large = (a, b) if a.size <= b.size else (b, a)
    pos = np.searchsorted(large, small)
    pos = np.minimum(pos, large.size - 1)
    return int(np.count_nonzero(large[pos] == small))


def two_walk_intersection(spec: Graph, x, n: int, stream: RngStream, other: RngStream | None = None) -> int:
    """``|{S1_0..S1_n} & {S2_0..S2_n}|`` for independent walks from ``x``."""
    other = other if other is not None else stream.sibling(1)
    if other == stream:
        raise ValueError("the two walks need distinct streams")
    a = simulate(spec, x, n, stream, keep_path=False).range.visited
    b = simulate(spec, x, n, other, keep_path=False).range.visited
    return intersect_count(a, b)


def positions_ij(trace: WalkTrace):
    i, j, _ = decode_array(trace.codes)
    return i, j
