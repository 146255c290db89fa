"""Exact (non-sampled) heat kernels, first-return laws and hitting quantities.

The evolution domain is the ball ``B(x, n)`` itself: a walk of ``n`` steps
cannot leave it, so nothing is truncated.  Masses are float64; the only
exact-rational paths are the small enumeration oracles.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from ._fast import range_sum_paths, spread
from .errors import DomainError, ResourceLimitError
from .graphs import DEFAULT_MAX_VERTICES, Graph, LocalGraph, Vertex, as_vertex
from .series import renewal_first_passage, series_inverse, series_mul

log = logging.getLogger(__name__)

EPS = np.finfo(np.float64).eps
F_FLOOR = -1e-12
DIRECT_RENEWAL_LIMIT = 4096
ENUMERATION_BUDGET = 1 << 21
LATTICE_ENUMERATION_BUDGET = 1 << 31
# first-step orbit representatives under the symmetries of the lattice
LATTICE_SYMMETRY = {
    "square": [((1, 0), 4)],
    "king": [((1, 0), 4), ((1, 1), 4)],
}


@dataclass
class KernelVector:
    origin: Vertex
    t: int
    masses: np.ndarray
    codes: np.ndarray

    def total(self) -> float:
        return float(self.masses.sum())

    def at(self, v) -> float:
        code = as_vertex(v).encode()
        hit = np.nonzero(self.codes == code)[0]
        return float(self.masses[hit[0]]) if hit.size else 0.0


@dataclass
class ReturnSeries:
    graph: str
    origin: Vertex
    values: np.ndarray
    overlap_residual: float | None = None

    @property
    def n(self) -> int:
        return self.values.size - 1


@dataclass
class FirstReturnDistribution:
    """``values[k] = P^x(T_x = k)`` for ``k = 0..n`` (``values[0] = 0``)."""

    values: np.ndarray
    clipped: int = 0
    floor_violations: int = 0


@dataclass
class SurvivalSeries:
    """``values[m] = P^x(T_x > m)`` for ``m = 0..n``."""

    values: np.ndarray


@dataclass
class KilledGreenTable:
    origin: Vertex
    codes: np.ndarray
    values: np.ndarray
    residual: float

    def at(self, v) -> float:
        code = as_vertex(v).encode()
        hit = np.nonzero(self.codes == code)[0]
        return float(self.values[hit[0]]) if hit.size else 0.0


class KernelEvolution:
    """Step-by-step evolution of ``p_t(x, .)`` on the ball ``B(x, n)``."""

    def __init__(self, spec: Graph, x, n: int, max_vertices: int = DEFAULT_MAX_VERTICES,
                 local: LocalGraph | None = None):
        self.spec = spec
        self.x = as_vertex(x)
        self.n = int(n)
        self.local = local if local is not None else spec.local_graph(self.x, self.n, max_vertices)
        if self.local.radius < self.n or self.local.center != self.x:
            raise ValueError("local window does not cover B(x, n)")
        size = self.local.size
        self.mu = np.zeros(size)
        self.mu[0] = 1.0
        self._w = np.zeros(size)
        self._inv_deg = 1.0 / self.local.degree
        self.t = 0
        self.absorbed = 0.0

    def _support(self, t: int) -> int:
        return int(self.local.layer_end[min(t, self.local.radius)])

    def step(self, absorb: int | None = None) -> None:
        if self.t >= self.n:
            raise ValueError("evolution horizon reached")
        m_prev = self._support(self.t)
        m_new = self._support(self.t + 1)
        np.multiply(self.mu[:m_prev], self._inv_deg[:m_prev], out=self._w[:m_prev])
        spread(self.local.indptr, self.local.indices, self._w, self.mu, m_new)
        self.t += 1
        if absorb is not None:
            self.absorbed += self.mu[absorb]
            self.mu[absorb] = 0.0

    def vector(self) -> KernelVector:
        m = self._support(self.t)
        return KernelVector(self.x, self.t, self.mu[:m].copy(), self.local.codes[:m])


def iter_heat_kernel(spec: Graph, x, n: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> Iterator[KernelVector]:
    """Yield ``p_t(x, .)`` for ``t = 0..n``."""
    ev = KernelEvolution(spec, x, n, max_vertices)
    yield ev.vector()
    for _ in range(n):
        ev.step()
        yield ev.vector()


def heat_kernel_row(spec: Graph, x, n: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> list[KernelVector]:
    return list(iter_heat_kernel(spec, x, n, max_vertices))


def kernel_trajectories(spec: Graph, x, n: int, targets: Sequence, max_vertices: int = DEFAULT_MAX_VERTICES,
                        local: LocalGraph | None = None) -> np.ndarray:
    """``out[t, k] = p_t(x, targets[k])`` for ``t = 0..n``."""
    ev = KernelEvolution(spec, x, n, max_vertices, local=local)
    idx = ev.local.indices_of([as_vertex(v).encode() for v in targets])
    out = np.zeros((n + 1, len(idx)))
    present = idx >= 0
    out[0, present] = ev.mu[idx[present]]
    for t in range(1, n + 1):
        ev.step()
        out[t, present] = ev.mu[idx[present]]
    return out


def return_series(spec: Graph, x, n: int, max_vertices: int = DEFAULT_MAX_VERTICES,
                  exact_upto: int | None = None) -> ReturnSeries:
    """``p_k(x, x)`` for ``k = 0..n``.

    With ``exact_upto`` set and a closed-form kernel available (square
    lattice), the evolution runs to ``exact_upto`` and the closed form fills in
    the rest; ``overlap_residual`` records their disagreement on the overlap.
    """
    x = as_vertex(x)
    if exact_upto is not None and exact_upto < n:
        k = np.arange(n + 1)
        closed = spec.closed_form_kernel(k, 0, 0)
        if closed is None:
            raise ResourceLimitError(f"{spec.identity} has no closed form to extend past n={exact_upto}")
        head = return_series(spec, x, exact_upto, max_vertices).values
        resid = float(np.max(np.abs(head - closed[: exact_upto + 1])))
        values = np.concatenate([head, closed[exact_upto + 1:]])
        return ReturnSeries(spec.identity, x, values, overlap_residual=resid)
    ev = KernelEvolution(spec, x, n, max_vertices)
    values = np.empty(n + 1)
    values[0] = 1.0
    for t in range(1, n + 1):
        ev.step()
        values[t] = ev.mu[0]
    return ReturnSeries(spec.identity, x, values)


def square_return_closed_form(j: int) -> Fraction:
    """Exact ``p_{2j}(0, 0)`` on Z^2: ``C(2j, j)^2 / 16^j``."""
    return Fraction(math.comb(2 * j, j) ** 2, 16 ** j)


def first_return(series: ReturnSeries | np.ndarray, method: str = "auto") -> FirstReturnDistribution:
    """First-return law from ``p_n = sum_k f_k p_{n-k}``.

    ``method`` is ``"direct"`` (forward substitution), ``"series"`` (Newton
    inversion of the return generating function) or ``"auto"``.
    """
    p = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=np.float64)
    if p[0] != 1.0:
        raise ValueError("return series must start at p_0 = 1")
    if method == "auto":
        method = "direct" if p.size <= DIRECT_RENEWAL_LIMIT else "series"
    if method == "direct":
        f = renewal_first_passage(p, p)
    elif method == "series":
        # F(s) = 1 - 1/P(s)
        f = -series_inverse(p, p.size)
        f[0] = 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    negative = f < 0
    severe = int(np.count_nonzero(f < F_FLOOR))
    clipped = int(np.count_nonzero(negative))
    if clipped:
        log.info("clipped %d negative first-return terms (min %.3e)", clipped, f.min())
    if severe:
        log.warning("%d first-return terms fell below the %.0e floor", severe, F_FLOOR)
    f = np.where(negative, 0.0, f)
    return FirstReturnDistribution(f, clipped=clipped, floor_violations=severe)


def survival(f: FirstReturnDistribution) -> SurvivalSeries:
    q = 1.0 - np.cumsum(f.values)
    return SurvivalSeries(np.clip(q, 0.0, 1.0))


def last_exit_residuals(series: ReturnSeries, surv: SurvivalSeries, n: int | None = None) -> np.ndarray:
    """``|sum_{k<=m} p_k(x,x) q(m-k) - 1|`` for ``m = 0..n``."""
    n = series.n if n is None else n
    conv = series_mul(series.values[: n + 1], surv.values[: n + 1], n + 1)
    return np.abs(conv - 1.0)


def last_exit_identity_check(series: ReturnSeries, surv: SurvivalSeries, n: int | None = None) -> float:
    return float(last_exit_residuals(series, surv, n).max())


def renewal_identity_residual(series: ReturnSeries, f: FirstReturnDistribution) -> float:
    """How well ``sum_{k=1..n} f_k p_{n-k}`` reproduces ``p_n`` for ``n >= 1``."""
    p = series.values
    rebuilt = series_mul(f.values, p, p.size)
    return float(np.max(np.abs(rebuilt[1:] - p[1:]))) if p.size > 1 else 0.0


# -- hitting probabilities ---------------------------------------------------

def hitting_series(spec: Graph, x, y, n: int, max_vertices: int = DEFAULT_MAX_VERTICES,
                   local: LocalGraph | None = None) -> np.ndarray:
    """``out[k] = P^x(T_y = k)`` for ``k = 0..n`` with ``T_y = inf{k >= 1: S_k = y}``."""
    x, y = as_vertex(x), as_vertex(y)
    ev = KernelEvolution(spec, x, n, max_vertices, local=local)
    out = np.zeros(n + 1)
    target = ev.local.indices_of([y.encode()])[0]
    if target < 0:
        return out
    for t in range(1, n + 1):
        before = ev.absorbed
        ev.step(absorb=int(target))
        out[t] = ev.absorbed - before
    return out


def hitting_probability(spec: Graph, x, y, n: int, include_start: bool = False,
                        max_vertices: int = DEFAULT_MAX_VERTICES, local: LocalGraph | None = None) -> float:
    """``P^x(T_y <= n)``; ``include_start`` switches to ``T^0_y`` (times ``k >= 0``)."""
    x, y = as_vertex(x), as_vertex(y)
    if include_start and x == y:
        return 1.0
    return float(hitting_series(spec, x, y, n, max_vertices, local).sum())


def hitting_probabilities(spec: Graph, x, targets: Sequence, n: int,
                          max_vertices: int = DEFAULT_MAX_VERTICES) -> np.ndarray:
    """``P^x(T_y <= n)`` for several ``y != x``.

    On vertex-transitive graphs with a closed-form kernel this uses the
    first-passage decomposition ``P_xy(s) = F_xy(s) P_yy(s)``; otherwise one
    absorbing evolution per target.
    """
    x = as_vertex(x)
    targets = [as_vertex(v) for v in targets]
    k = np.arange(n + 1)
    diag = spec.closed_form_kernel(k, 0, 0) if spec.vertex_transitive else None
    if diag is not None:
        inv = series_inverse(diag, n + 1)
        out = []
        for y in targets:
            if y == x:
                raise ValueError("targets must differ from the start")
            pxy = spec.closed_form_kernel(k, y.i - x.i, y.j - x.j)
            out.append(series_mul(pxy, inv, n + 1).sum())
        return np.clip(np.array(out), 0.0, 1.0)
    local = spec.local_graph(x, n, max_vertices)
    return np.array([hitting_probability(spec, x, y, n, local=local) for y in targets])


# -- killed Green functions and exit times ---------------------------------

def _restricted_system(spec: Graph, domain: Sequence[Vertex]):
    index = {v: k for k, v in enumerate(domain)}
    rows, cols = [], []
    deg = np.empty(len(domain))
    for k, v in enumerate(domain):
        nbs = spec.neighbors(v)
        deg[k] = len(nbs)
        for w in nbs:
            c = index.get(w)
            if c is not None:
                rows.append(k)
                cols.append(c)
    adj = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(domain), len(domain)))
    return index, adj, deg


def _ball_system(spec: Graph, x, r: int, max_vertices: int):
    local = spec.local_graph(x, r, max_vertices)
    m = local.size
    adj = sparse.csr_matrix((np.ones(local.indices.size), local.indices, local.indptr), shape=(m, m))
    return local, adj, local.degree


def _solve_laplacian(adj, deg, rhs, tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Solve ``(D - A) h = rhs`` on the killed domain; symmetric positive definite."""
    M = (sparse.diags(deg) - adj).tocsr()
    if M.shape[0] == 1:
        h = rhs / M.toarray()[0, 0]
        return h, float(np.abs(M @ h - rhs).max())
    h = np.zeros_like(rhs)
    resid = np.inf
    for _ in range(8):
        h, _info = cg(M, rhs, x0=h, rtol=1e-15, atol=tol * 1e-2, maxiter=20 * M.shape[0] + 1000)
        resid = float(np.abs(M @ h - rhs).max())
        # the residual is measured relative to the size of the solution
        scale = max(1.0, float(np.abs(rhs).max()), float(np.abs(h).max()))
        if resid <= tol * scale:
            break
    if resid > tol * scale:
        raise ResourceLimitError(f"killed solve stalled at residual {resid:.3e}")
    return h, resid


def killed_green(spec: Graph, A: Iterable, x, max_vertices: int = 2_000_000) -> KilledGreenTable:
    """``G_A(x, y)`` for every ``y`` in the finite set ``A``."""
    x = as_vertex(x)
    domain = sorted({as_vertex(v) for v in A})
    if len(domain) > max_vertices:
        raise ResourceLimitError("killed domain too large")
    index, adj, deg = _restricted_system(spec, domain)
    if x not in index:
        raise DomainError(f"{x} is not in the killed domain")
    rhs = np.zeros(len(domain))
    rhs[index[x]] = 1.0
    h, resid = _solve_laplacian(adj, deg, rhs)
    codes = np.array([v.encode() for v in domain], dtype=np.int64)
    return KilledGreenTable(x, codes, h * deg, resid)


def killed_green_ball(spec: Graph, x, r: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> KilledGreenTable:
    local, adj, deg = _ball_system(spec, x, r, max_vertices)
    rhs = np.zeros(local.size)
    rhs[0] = 1.0
    h, resid = _solve_laplacian(adj, deg, rhs)
    return KilledGreenTable(as_vertex(x), local.codes, h * deg, resid)


def expected_exit_time(spec: Graph, x, r: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> float:
    """``E^x[T_{B(x,r)^c}]`` with ``T`` counting from step 1."""
    local, adj, deg = _ball_system(spec, x, r, max_vertices)
    h, _ = _solve_laplacian(adj, deg, deg.copy())
    return float(h[0])


# -- expected range ------------------------------------------------------------

def expected_range_enumeration(spec: Graph, x, n: int, budget: int | None = None) -> Fraction:
    """Exact ``E^x[R_n]`` by summing ``R_n`` over every ``n``-step path.

    Square and king lattices use a compiled depth-first walk over all
    ``deg^n`` paths (first step reduced by the dihedral symmetry); other
    graphs use the oracle with integer path weights.
    """
    x = as_vertex(x)
    if spec.kind in LATTICE_SYMMETRY and x.tag == 0:
        budget = LATTICE_ENUMERATION_BUDGET if budget is None else budget
        deg = spec.offsets.shape[0]
        if deg ** n > budget:
            raise ResourceLimitError(f"{deg}^{n} paths exceed the enumeration budget {budget}")
        if n == 0:
            return Fraction(1)
        offsets = np.ascontiguousarray(spec.offsets, dtype=np.int64)
        total = 0
        for first, mult in LATTICE_SYMMETRY[spec.kind]:
            k = [tuple(o) for o in offsets.tolist()].index(first)
            total += mult * int(range_sum_paths(offsets, n, k))
        return Fraction(total, deg ** n)
    budget = ENUMERATION_BUDGET if budget is None else budget
    if spec.max_degree ** n > budget:
        raise ResourceLimitError(f"{spec.max_degree}^{n} paths exceed the enumeration budget {budget}")
    cache: dict[Vertex, tuple] = {}

    def nbrs(v):
        got = cache.get(v)
        if got is None:
            got = cache[v] = spec.neighbors(v)
        return got

    lcm = 1
    for v in spec.local_graph(x, n).codes:
        lcm = math.lcm(lcm, len(nbrs(Vertex.decode(v))))
    counts = {x: 1}

    def walk(v, steps_left, weight, distinct):
        if steps_left == 0:
            return weight * distinct
        nb = nbrs(v)
        w = weight * (lcm // len(nb))
        total = 0
        for u in nb:
            c = counts.get(u, 0)
            counts[u] = c + 1
            total += walk(u, steps_left - 1, w, distinct + (c == 0))
            counts[u] = c
        return total

    return Fraction(walk(x, n, 1, 1), lcm ** n)


def expected_range_exact(spec: Graph, x, n: int, method: str = "transitive-renewal",
                         max_vertices: int = DEFAULT_MAX_VERTICES, exact_upto: int | None = None) -> float:
    """``E^x[R_n]`` by path enumeration, renewal (transitive graphs) or per-target hitting."""
    x = as_vertex(x)
    if method == "enumeration":
        return float(expected_range_enumeration(spec, x, n))
    if method == "transitive-renewal":
        if not spec.vertex_transitive:
            raise ResourceLimitError(f"{spec.identity} is not declared vertex-transitive")
        return float(expected_range_series(spec, x, n, max_vertices, exact_upto)[n])
    if method == "per-target":
        local = spec.local_graph(x, n, max_vertices)
        work = local.size * n * local.size
        if work > 5e9:
            raise ResourceLimitError(f"per-target method needs ~{work:.2e} updates")
        total = 1.0
        for idx in range(1, local.size):
            total += hitting_probability(spec, x, local.vertex(idx), n, local=local)
        return total
    raise ValueError(f"unknown method {method!r}")


def expected_range_series(spec: Graph, x, n: int, max_vertices: int = DEFAULT_MAX_VERTICES,
                          exact_upto: int | None = None) -> np.ndarray:
    """``E^x[R_m] = sum_{k<=m} q(k)`` for ``m = 0..n`` (last-exit decomposition)."""
    q = survival(first_return(return_series(spec, x, n, max_vertices, exact_upto))).values
    return np.cumsum(q)


# -- hitting bound scan ------------------------------------------------------

RADIUS_RULES = {
    "strict": lambda n: (n / math.log(n) ** 4) ** 0.5,
    "critical": lambda n: (n / math.log(n) ** 2) ** 0.5,
}


@dataclass
class HitBoundResult:
    n: int
    radius: int
    constant: float
    rows: list = field(default_factory=list)


def hit_bound_check(spec: Graph, x, n: int, radius_rule: str = "critical", per_radius: int = 4,
                    multiples: Sequence[int] = (1, 2, 4)) -> HitBoundResult:
    """Realized ``max_y P^x(T_y <= n) log n / log log n`` over ``y`` at and beyond
    the critical radius given by ``radius_rule``."""
    if n < 16:
        raise ValueError("n must be at least 16")
    x = as_vertex(x)
    radius = max(1, math.ceil(RADIUS_RULES[radius_rule](n)))
    reach = radius * max(multiples)
    local = spec.local_graph(x, reach)
    targets, dists = [], []
    for mult in multiples:
        d = radius * mult
        lo, hi = int(local.layer_end[d - 1]), int(local.layer_end[d])
        picks = np.unique(np.linspace(lo, hi - 1, per_radius).round().astype(int))
        for p in picks:
            targets.append(local.vertex(int(p)))
            dists.append(d)
    probs = hitting_probabilities(spec, x, targets, n)
    scale = math.log(n) / math.log(math.log(n))
    rows = [(str(v), d, float(p)) for v, d, p in zip(targets, dists, probs)]
    return HitBoundResult(n, radius, float(probs.max() * scale), rows)
