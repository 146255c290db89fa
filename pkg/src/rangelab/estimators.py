"""Estimates built from exact series and Monte Carlo replicas.

Every number leaves this module as an :class:`EstimateRecord` carrying its
method tag (``exact``, ``mc`` or ``enumeration``) and seed lineage.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
from scipy import stats

from . import kernels, walks
from .errors import DomainError, ResourceLimitError
from .graphs import Graph, as_vertex
from .parallel import map_replicas

CSV_FIELDS = ("graph", "statistic", "method", "n", "value", "dispersion", "replicas", "seed")
METHODS = ("exact", "mc", "enumeration")


@dataclass
class EstimateRecord:
    statistic: str
    graph: str
    n: int
    value: float
    dispersion: float = 0.0
    replicas: int = 0
    seed: int | None = None
    method: str = "exact"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if self.method == "mc" and self.replicas < 2:
            raise ValueError("mc records need at least 2 replicas")
        if self.method != "mc" and self.dispersion != 0.0:
            raise ValueError("exact records carry zero dispersion")

    def row(self) -> dict:
        return {
            "graph": self.graph,
            "statistic": self.statistic,
            "method": self.method,
            "n": self.n,
            "value": _fmt(self.value),
            "dispersion": _fmt(self.dispersion),
            "replicas": self.replicas,
            "seed": "" if self.seed is None else self.seed,
        }

    def to_json(self) -> dict:
        return asdict(self)


def _fmt(x: float) -> str:
    return repr(float(x))


def mc_record(statistic, graph, n, samples, seed, scale: float = 1.0, **extra) -> EstimateRecord:
    samples = np.asarray(samples, dtype=np.float64) * scale
    m = samples.size
    return EstimateRecord(statistic, graph, int(n), float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(m)),
                          m, seed, "mc", dict(extra))


def _log_scale(n: int) -> float:
    if n < 3:
        raise DomainError("scaled statistics need n >= 3")
    return math.log(n) / n


# -- Monte Carlo replica jobs -------------------------------------------------

def _range_job(spec: Graph, x, n_grid: tuple, seed: int, replica: int) -> dict:
    N = n_grid[-1]
    tr = walks.simulate(spec, x, N, walks.RngStream(seed, replica), range_series=True)
    return {"R": tr.range.counts[list(n_grid)].tolist(), "T": tr.first_return, "RN": tr.R}


def range_replicas(spec: Graph, x, n_grid: Sequence[int], replicas: int, seed: int, workers: int | None = None) -> dict:
    """Per-replica ``R_n`` at every grid point from one walk of length ``max(n_grid)``."""
    grid = tuple(sorted(int(n) for n in n_grid))
    out = map_replicas(partial(_range_job, spec, as_vertex(x), grid, seed), replicas, workers)
    R = np.array([o["R"] for o in out], dtype=np.int64)
    T = np.array([-1 if o["T"] is None else o["T"] for o in out], dtype=np.int64)
    return {"n_grid": grid, "R": R, "T": T, "seed": seed, "graph": spec.identity}


def scaled_range(samples, n: int, graph: str, seed: int | None = None, exact: float | None = None,
                 method: str | None = None) -> list[EstimateRecord]:
    """``R_n log n / n`` (per-replica mean) and ``E[R_n] log n / n``."""
    s = _log_scale(n)
    out = []
    if samples is not None:
        rec = mc_record("scaled_range", graph, n, samples, seed, scale=s)
        out.append(rec)
        out.append(EstimateRecord("scaled_expected_range", graph, n, rec.value, rec.dispersion, rec.replicas, seed, "mc"))
    if exact is not None:
        out.append(EstimateRecord("scaled_expected_range", graph, n, exact * s, method=method or "exact"))
    return out


def exact_scaled_range(spec: Graph, x, n_grid: Sequence[int], exact_upto: int | None = None) -> list[EstimateRecord]:
    N = max(n_grid)
    if exact_upto is None and spec.closed_form_kernel(np.arange(2), 0, 0) is not None and N > 1000:
        exact_upto = 1000
    er = kernels.expected_range_series(spec, x, N, exact_upto=exact_upto)
    return [EstimateRecord("scaled_expected_range", spec.identity, n, float(er[n]) * _log_scale(n)) for n in n_grid]


def r_bounds_estimate(spec: Graph, sample: Sequence, n_grid: Sequence[int]) -> list[dict]:
    """Per ``n``: ``log n * min_z q_z(n)`` and ``log n * max_z q_z(n)`` over the sample."""
    sample = [as_vertex(v) for v in sample]
    if not sample:
        raise DomainError("empty vertex sample")
    if spec.vertex_transitive:
        sample = sample[:1]
    N = max(n_grid)
    qs = [kernels.survival(kernels.first_return(kernels.return_series(spec, z, N))).values for z in sample]
    rows = []
    for n in n_grid:
        vals = [q[n] * math.log(n) for q in qs]
        rows.append({"n": n, "r_inf": min(vals), "r_sup": max(vals)})
    return rows


def tail_probability(samples, n: int, a: float, graph: str = "", seed: int | None = None, confidence: float = 0.95) -> dict:
    """Empirical ``P(R_n <= a n / log n)`` with a Wilson interval.

    The threshold is inclusive; ``a = log n`` gives the threshold ``n`` and
    since ``R_n <= n + 1`` only the injective paths can exceed it.
    """
    samples = np.asarray(samples)
    if samples.size < 100:
        raise DomainError("tail probability needs at least 100 replicas")
    thr = a * n / math.log(n)
    k = int(np.count_nonzero(samples <= thr))
    ci = stats.binomtest(k, samples.size).proportion_ci(confidence, method="wilson")
    return {"n": n, "a": a, "threshold": thr, "p": k / samples.size, "lo": ci.low, "hi": ci.high,
            "replicas": int(samples.size), "graph": graph, "seed": seed}


# -- intersections --------------------------------------------------------------

def _intersection_job(spec: Graph, x, n_grid: tuple, seed: int, replica: int) -> dict:
    N = n_grid[-1]
    stream = walks.RngStream(seed, replica)
    c = walks.walk_codes(spec, x, 2 * N, stream)
    a = walks.walk_codes(spec, x, N, stream.sibling(1))
    b = walks.walk_codes(spec, x, N, stream.sibling(2))
    I, J = [], []
    for n in n_grid:
        I.append(walks.intersect_count(np.unique(c[: n + 1]), np.unique(c[n: 2 * n + 1])))
        J.append(walks.intersect_count(np.unique(a[: n + 1]), np.unique(b[: n + 1])))
    return {"I": I, "J": J}


def intersection_replicas(spec: Graph, x, n_grid: Sequence[int], replicas: int, seed: int,
                          workers: int | None = None) -> dict:
    """Per-replica ``I_n`` (one walk of ``2n`` steps) and ``J_n`` (two fresh walks)."""
    grid = tuple(sorted(int(n) for n in n_grid))
    out = map_replicas(partial(_intersection_job, spec, as_vertex(x), grid, seed), replicas, workers)
    return {"n_grid": grid, "I": np.array([o["I"] for o in out]), "J": np.array([o["J"] for o in out]),
            "seed": seed, "graph": spec.identity}


def intersection_moment_scan(data: dict, powers: Sequence[int] = (2, 3), cushion: float = 3.0) -> dict:
    """Normalized intersection moments and the factorial moment-method check."""
    I, J = np.asarray(data["I"], float), np.asarray(data["J"], float)
    if I.shape[0] < 200:
        raise DomainError("intersection scan needs at least 200 replicas per n")
    m = I.shape[0]
    rows = []
    for k, n in enumerate(data["n_grid"]):
        L, LL = math.log(n), math.log(math.log(n))
        i2 = I[:, k] ** 2
        j = J[:, k]
        ej, se = j.mean(), j.std(ddof=1) / math.sqrt(m)
        row = {
            "n": n,
            "I2_ratio": i2.mean() * L ** 4 / (n ** 2 * LL ** 2),
            "I2_se": i2.std(ddof=1) / math.sqrt(m) * L ** 4 / (n ** 2 * LL ** 2),
            "J_ratio": ej * L ** 2 / (n * LL),
            "J_se": se * L ** 2 / (n * LL),
            "EJ": ej,
        }
        for p in powers:
            lhs = float((j ** p).mean())
            rhs = math.factorial(p) ** 2 * (ej + cushion * se) ** p
            row[f"J{p}_moment"] = lhs
            row[f"J{p}_bound"] = rhs
            row[f"J{p}_ok"] = bool(lhs <= rhs)
        rows.append(row)
    spread = {}
    for key in ("I2_ratio", "J_ratio"):
        vals = [r[key] for r in rows]
        spread[key] = max(vals) / min(vals)
    return {"rows": rows, "spread": spread, "replicas": m, "seed": data.get("seed"), "graph": data.get("graph")}


# -- regularity --------------------------------------------------------------

@dataclass
class RegularityReport:
    alpha: float | None = None
    c1: float | None = None
    c2: float | None = None
    window_min: float | None = None
    window_max: float | None = None
    beta: float | None = None
    c3: float | None = None
    c4: float | None = None
    c5: float | None = None
    c6: float | None = None
    exit_min: float | None = None
    exit_max: float | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.c1 is not None and self.c2 is not None and self.c1 > self.c2:
            raise ValueError("c1 must not exceed c2")
        if self.window_min is not None and self.window_max is not None and self.window_min > self.window_max:
            raise ValueError("window min must not exceed window max")

    def to_json(self) -> dict:
        return asdict(self)


def ahlfors_fit(spec: Graph, sample: Sequence, r_grid: Sequence[int]) -> dict:
    """Fit ``|B(x, r)| ~ r^alpha`` by least squares; ``c1``/``c2`` are the realized envelope."""
    r_grid = sorted(int(r) for r in r_grid)
    if len(r_grid) < 4:
        raise DomainError("ahlfors fit needs at least 4 radii")
    logs_r, logs_b, sizes = [], [], []
    for z in sample:
        local = spec.local_graph(z, r_grid[-1])
        for r in r_grid:
            b = int(local.layer_end[r])
            sizes.append((r, b))
            logs_r.append(math.log(r))
            logs_b.append(math.log(b))
    alpha = float(np.polyfit(logs_r, logs_b, 1)[0])
    ratios = [b / r ** alpha for r, b in sizes]
    return {"alpha": alpha, "c1": min(ratios), "c2": max(ratios), "sizes": sizes}


def on_diagonal_window(spec: Graph, sample: Sequence, n_grid: Sequence[int]) -> dict:
    """Range of ``n (p_n(x,x) + p_{n+1}(x,x))`` over the sample and grid."""
    N = max(n_grid) + 1
    vals = []
    for z in sample:
        p = kernels.return_series(spec, z, N).values
        vals.extend(n * (p[n] + p[n + 1]) for n in n_grid)
    return {"min": float(min(vals)), "max": float(max(vals)), "values": vals}


def subgaussian_fit(spec: Graph, x, n_grid: Sequence[int], max_pairs: int = 4000, beta: float = 2.0,
                    max_scaled: float = 8.0) -> dict:
    """Gaussian-type envelope fit of exact off-diagonal kernels with ``beta`` fixed.

    For sampled ``y`` with ``d(x, y) <= n`` regress
    ``-log((p_n(x,y) + p_{n+1}(x,y)) |B(x, sqrt n)|)`` on ``d^2/n``; the slope
    is ``c4``, and ``c3``/``c5`` are the realized upper/lower prefactors.
    Pairs beyond ``d^2/n = max_scaled`` sit in the large-deviation regime and
    are excluded (and counted) together with the zero-kernel pairs.
    """
    x = as_vertex(x)
    N = max(n_grid) + 1
    local = spec.local_graph(x, N)
    ev = kernels.KernelEvolution(spec, x, N, local=local)
    rng = np.random.default_rng(0)
    grid = sorted(set(int(n) for n in n_grid))
    saved = {}
    for t in range(1, N + 1):
        ev.step()
        if t in grid or t - 1 in grid:
            saved[t] = ev.mu.copy()
    X, Y = [], []
    excluded = 0
    for n in grid:
        m = int(local.layer_end[n])
        both = saved[n][:m] + saved[n + 1][:m]
        keep = (both > 0) & (local.dist[:m].astype(float) ** 2 / n <= max_scaled)
        idx = np.nonzero(keep)[0]
        excluded += m - idx.size
        if idx.size > max_pairs:
            idx = np.sort(rng.choice(idx, max_pairs, replace=False))
        vol = int(local.layer_end[min(math.isqrt(n), local.radius)])
        d = local.dist[idx].astype(float)
        X.extend(d ** 2 / n)
        Y.extend(-np.log(both[idx] * vol))
    X, Y = np.array(X), np.array(Y)
    if X.size < 10:
        raise DomainError("too few admissible pairs for the envelope fit")
    slope, intercept = np.polyfit(X, Y, 1)
    # envelopes: both * vol <= c3 exp(-c4 d^2/n) and >= c5 exp(-c6 d^2/n) on the near range
    resid = -Y + slope * X
    near = X <= 1.0
    c3 = float(np.exp(resid.max()))
    c5 = float(np.exp(resid[near].min())) if near.any() else float("nan")
    return {"beta": beta, "c4": float(slope), "c6": float(slope), "c3": c3, "c5": c5,
            "pairs": int(X.size), "excluded": int(excluded), "intercept": float(intercept)}


def exit_time_profile(spec: Graph, sample: Sequence, r_grid: Sequence[int]) -> dict:
    """Realized min/max of ``E^x[T_exit(B(x, r))] / r^2``; ``r = 0`` is reported raw."""
    ratios, raw = [], []
    for z in sample:
        for r in r_grid:
            t = kernels.expected_exit_time(spec, z, r)
            raw.append((str(as_vertex(z)), r, t))
            if r > 0:
                ratios.append(t / r ** 2)
    return {"min": min(ratios) if ratios else None, "max": max(ratios) if ratios else None, "values": raw}


def regularity_report(spec: Graph, sample: Sequence, r_grid=(4, 8, 16, 32, 64), n_grid=(64, 128, 256, 512),
                      exit_grid=(4, 8, 16, 32)) -> RegularityReport:
    af = ahlfors_fit(spec, sample, r_grid)
    win = on_diagonal_window(spec, sample, n_grid)
    sg = subgaussian_fit(spec, sample[0], n_grid[:2])
    ex = exit_time_profile(spec, sample, exit_grid)
    return RegularityReport(af["alpha"], af["c1"], af["c2"], win["min"], win["max"], sg["beta"], sg["c3"], sg["c4"],
                            sg["c5"], sg["c6"], ex["min"], ex["max"], notes={"excluded_pairs": sg["excluded"]})


# -- range fluctuation proxies and paired comparisons ------------------------------

def range_extremes_proxy(data: dict) -> dict:
    """Per-replica running min/max of ``R_n log n / n`` along the grid, averaged.

    These are stand-ins for the almost-sure liminf/limsup constants; no claim
    is made that they converge to them.
    """
    grid = np.array(data["n_grid"], float)
    scaled = data["R"] * (np.log(grid) / grid)
    lo, hi = scaled.min(axis=1), scaled.max(axis=1)
    m = scaled.shape[0]
    return {"inf_proxy": float(lo.mean()), "inf_se": float(lo.std(ddof=1) / math.sqrt(m)),
            "sup_proxy": float(hi.mean()), "sup_se": float(hi.std(ddof=1) / math.sqrt(m)), "replicas": m}


def _paired_job(spec_a: Graph, spec_b: Graph, x, n: int, seed: int, replica: int) -> tuple[int, int]:
    s = walks.RngStream(seed, replica)
    return walks.simulate(spec_a, x, n, s, keep_path=False).R, walks.simulate(spec_b, x, n, s, keep_path=False).R


def paired_range_difference(spec_a: Graph, spec_b: Graph, x, n: int, replicas: int, seed: int,
                            workers: int | None = None) -> dict:
    """Common-seed comparison of ``R_n log n / n`` on two graphs (``a - b``)."""
    if replicas < 2:
        raise ResourceLimitError("paired comparison needs at least 2 replicas")
    out = np.array(map_replicas(partial(_paired_job, spec_a, spec_b, as_vertex(x), n, seed), replicas, workers), float)
    s = _log_scale(n)
    a, b = out[:, 0] * s, out[:, 1] * s
    d = a - b
    return {"a_mean": float(a.mean()), "b_mean": float(b.mean()), "diff": float(d.mean()),
            "diff_se": float(d.std(ddof=1) / math.sqrt(replicas)), "replicas": replicas, "n": n, "seed": seed,
            "a": spec_a.identity, "b": spec_b.identity}
