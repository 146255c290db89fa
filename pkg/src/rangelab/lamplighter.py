"""Switch-walk-switch walk on the lamplighter graph over a base graph.

A step draws three uniforms ``(a, m, b)``: the lamp at the walker is set to
``a < 1/2``, the walker moves using ``m`` exactly as the simple random walk
does, and the lamp at the new position is set to ``b < 1/2``.

Distances use the standard lamplighter generators (toggle the lamp under the
walker, or move the walker along an edge, each of cost 1).  Computing that
distance is a travelling-salesman problem, so large instances get a bracket
``LB <= d <= UB`` and small ones an exact breadth-first oracle.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from . import walks
from .errors import DomainError, ResourceLimitError
from .estimators import EstimateRecord
from .graphs import FiniteGraph, Graph, Vertex, as_vertex, decode_array
from .parallel import map_replicas

EXACT_LIMIT = 10


@dataclass(frozen=True)
class WreathState:
    walker: Vertex
    lamps: frozenset = frozenset()

    @classmethod
    def make(cls, walker, lamps=()) -> "WreathState":
        return cls(as_vertex(walker), frozenset(as_vertex(v) for v in lamps))


def sws_step(state: WreathState, spec: Graph, rng: np.random.Generator) -> WreathState:
    """One switch-walk-switch step."""
    a, m, b = rng.random(3)
    lamps = set(state.lamps)
    _set(lamps, state.walker, a < 0.5)
    nbs = spec.neighbors(state.walker)
    w = nbs[int(m * len(nbs))]
    _set(lamps, w, b < 0.5)
    return WreathState(w, frozenset(lamps))


def _set(lamps: set, v: Vertex, on: bool):
    if on:
        lamps.add(v)
    else:
        lamps.discard(v)


@dataclass
class SwsRun:
    codes: np.ndarray
    touch_codes: np.ndarray
    touch_bits: np.ndarray

    def state(self, n: int) -> WreathState:
        """Wreath state after ``n`` steps, from the last switch at each vertex."""
        codes, bits = self.lit_codes(n)
        return WreathState(Vertex.decode(self.codes[n]), frozenset(Vertex.decode(c) for c in codes[bits].tolist()))

    def lit_codes(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        tc = self.touch_codes[: 2 * n][::-1]
        tb = self.touch_bits[: 2 * n][::-1]
        uniq, last = np.unique(tc, return_index=True)
        return uniq, tb[last]

    def lit(self, n: int) -> np.ndarray:
        uniq, bits = self.lit_codes(n)
        return uniq[bits]


def simulate_sws(spec: Graph, x, n: int, stream: walks.RngStream) -> SwsRun:
    """Vectorized run that consumes the stream exactly as ``n`` calls of :func:`sws_step`."""
    u = stream.generator().random(3 * n).reshape(n, 3) if n else np.zeros((0, 3))
    codes = walks.walk_from_uniforms(spec, x, u[:, 1])
    touch_codes = np.empty(2 * n, np.int64)
    touch_codes[0::2] = codes[:-1]
    touch_codes[1::2] = codes[1:]
    touch_bits = np.empty(2 * n, bool)
    touch_bits[0::2] = u[:, 0] < 0.5
    touch_bits[1::2] = u[:, 2] < 0.5
    return SwsRun(codes, touch_codes, touch_bits)


# -- distances ------------------------------------------------------------------

def _pairwise(spec: Graph, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Distances ``d(src[k], dst[l])`` as a matrix; closed form on the lattices."""
    si, sj, st = decode_array(src)
    di, dj, dt = decode_array(dst)
    if spec.kind in ("square", "king") and not st.any() and not dt.any():
        a = np.abs(si[:, None] - di[None, :])
        b = np.abs(sj[:, None] - dj[None, :])
        return a + b if spec.kind == "square" else np.maximum(a, b)
    out = np.empty((src.size, dst.size), np.int64)
    for k, s in enumerate(src.tolist()):
        for l, d in enumerate(dst.tolist()):
            out[k, l] = spec.distance(Vertex.decode(s), Vertex.decode(d))
    return out


def distance_bracket(initial: WreathState, final: WreathState, spec: Graph) -> tuple[int, int]:
    """Lower and upper bounds on the lamplighter distance between two states."""
    delta = np.array(sorted(v.encode() for v in initial.lamps ^ final.lamps), dtype=np.int64)
    return _bracket_codes(spec, initial.walker.encode(), final.walker.encode(), delta)


def _bracket_codes(spec: Graph, x0: int, xn: int, delta: np.ndarray) -> tuple[int, int]:
    ends = np.array([x0, xn], dtype=np.int64)
    if delta.size == 0:
        d = int(_pairwise(spec, ends[:1], ends[1:])[0, 0])
        return d, d
    to_ends = _pairwise(spec, ends, delta)
    lb = int(delta.size + (to_ends[0] + to_ends[1]).max())
    # nearest-neighbour tour x0 -> all lamps -> xn
    remaining = delta.copy()
    cur = np.array([x0])
    travel = 0
    while remaining.size:
        d = _pairwise(spec, cur, remaining)[0]
        k = int(np.argmin(d))
        travel += int(d[k])
        cur = remaining[k:k + 1]
        remaining = np.delete(remaining, k)
    travel += int(_pairwise(spec, cur, ends[1:])[0, 0])
    return lb, int(delta.size + travel)


def wreath_distance_exact(initial: WreathState, final: WreathState, base: Graph) -> int:
    """Exact lamplighter distance by breadth-first search over (walker, lamps)."""
    if not isinstance(base, FiniteGraph):
        raise ResourceLimitError("the exact oracle needs an explicit finite base graph")
    verts = sorted(base._adj)
    if len(verts) > EXACT_LIMIT:
        raise ResourceLimitError(f"base graph has {len(verts)} > {EXACT_LIMIT} vertices")
    index = {v: k for k, v in enumerate(verts)}
    for s in (initial, final):
        if s.walker not in index or any(v not in index for v in s.lamps):
            raise DomainError("state refers to vertices outside the base graph")
    nbrs = [[index[w] for w in base.neighbors(v)] for v in verts]

    def mask(s):
        return sum(1 << index[v] for v in s.lamps)

    start = (index[initial.walker], mask(initial))
    goal = (index[final.walker], mask(final))
    seen = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        d = seen[node]
        if node == goal:
            return d
        w, m = node
        for nxt in [(w, m ^ (1 << w))] + [(u, m) for u in nbrs[w]]:
            if nxt not in seen:
                seen[nxt] = d + 1
                queue.append(nxt)
    raise DomainError("target state unreachable")


# -- Monte Carlo ------------------------------------------------------------------

def _sws_job(spec: Graph, x, n_grid: tuple, seed: int, replica: int) -> list[tuple]:
    run = simulate_sws(spec, x, n_grid[-1], walks.RngStream(seed, replica))
    x0 = run.codes[0]
    rows = []
    for n in n_grid:
        lit = run.lit(n)
        lb, ub = _bracket_codes(spec, x0, run.codes[n], lit)
        rows.append((lb, ub, int(lit.size), int(np.unique(run.codes[: n + 1]).size),
                     bool(np.isin(lit, run.codes[: n + 1]).all())))
    return rows


def sws_replicas(spec: Graph, x, n_grid: Sequence[int], replicas: int, seed: int, workers: int | None = None) -> dict:
    grid = tuple(sorted(int(n) for n in n_grid))
    out = np.array(map_replicas(partial(_sws_job, spec, as_vertex(x), grid, seed), replicas, workers))
    return {"n_grid": grid, "LB": out[:, :, 0], "UB": out[:, :, 1], "lit": out[:, :, 2], "R": out[:, :, 3],
            "support_ok": out[:, :, 4].astype(bool), "seed": seed, "graph": spec.identity}


def scaled_displacement(data: dict) -> list[EstimateRecord]:
    """Scaled bracket means ``LB log n / n`` and ``UB log n / n`` plus the scaled lit count."""
    m = data["LB"].shape[0]
    if m < 100:
        raise DomainError("scaled displacement needs at least 100 replicas")
    out = []
    for k, n in enumerate(data["n_grid"]):
        s = math.log(n) / n
        for name, key in (("wreath_lb", "LB"), ("wreath_ub", "UB"), ("lit_lamps", "lit")):
            v = data[key][:, k] * s
            out.append(EstimateRecord(f"scaled_{name}", data["graph"], n, float(v.mean()),
                                      float(v.std(ddof=1) / math.sqrt(m)), m, data["seed"], "mc"))
    return out
