"""The verification suite: twelve numbered checks with ``quick`` and ``full`` sizes.

``full`` runs every check at its acceptance size; ``quick`` shrinks the
expensive ones (exact identities stay at ``n <= 512``, Monte Carlo runs get
fewer replicas) so the whole suite stays within a couple of minutes.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import estimators as est
from . import isoradial, kernels, lamplighter, walks
from .config import parse_config
from .graphs import (
    SQUARE_OFFSETS,
    FiniteGraph,
    SquareLattice,
    Vertex,
    make_graph,
    path_graph,
)
from .parallel import map_replicas
from .report import estimates_csv, csv_text, REPLICA_FIELDS
from .runner import run_config

PROFILES = ("quick", "full")
KING_LIMIT = 2 / (3 * math.pi)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _size(profile: str, quick, full):
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    return quick if profile == "quick" else full


# 1 -----------------------------------------------------------------------------

def check_square_diagonal(profile: str = "full") -> CriterionResult:
    n = _size(profile, 256, 500)
    sq = make_graph("square")
    p = kernels.return_series(sq, (0, 0), 2 * n).values
    value = n * p[2 * n]
    err = abs(value - 1 / math.pi)
    oracle = max(abs(float(kernels.square_return_closed_form(j)) - p[2 * j]) for j in range(0, n + 1))
    ok = err <= 1e-3 and oracle <= 1e-12
    return CriterionResult(1, "Z2 on-diagonal constant", ok,
                           f"n={n}: |n p_2n - 1/pi| = {err:.2e} (<= 1e-3), closed-form gap {oracle:.1e} (<= 1e-12)",
                           {"n": n, "value": value, "error": err, "closed_form_gap": oracle})


# 2 -----------------------------------------------------------------------------

def extrapolate_limit(ns: np.ndarray, vals: np.ndarray) -> float:
    """Fit ``vals = L + a/n + b/n^2`` by least squares and return ``L``."""
    A = np.column_stack([np.ones_like(ns, dtype=float), 1.0 / ns, 1.0 / ns ** 2])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return float(coef[0])


def check_king_constant(profile: str = "full") -> CriterionResult:
    N = _size(profile, 400, 1000)
    kg = make_graph("king")
    p = kernels.return_series(kg, (0, 0), N).values
    ns = np.arange(N // 2, N + 1)
    limit = extrapolate_limit(ns.astype(float), ns * p[ns])
    rel_limit = abs(limit / KING_LIMIT - 1)
    partial_sum = float(p[1:].sum()) / math.log(N)
    rel_sum = abs(partial_sum / KING_LIMIT - 1)
    even = (N // 2) * p[2 * (N // 2)]
    ok = rel_limit <= 0.05 and rel_sum <= 0.15
    detail = (f"n={N}: extrapolated lim n p_n = {limit:.5f} ({100 * rel_limit:.2f}% from 2/(3pi), <= 5%); "
              f"sum_(1<=k<=n) p_k / log n = {partial_sum:.4f} ({100 * rel_sum:.1f}%, <= 15%); "
              f"even-time normalization m p_2m = {even:.5f} ~ 1/(3pi) = {1 / (3 * math.pi):.5f}, "
              f"not 2/(3pi) [flagged]")
    return CriterionResult(2, "king-lattice constant", ok, detail,
                           {"limit": limit, "partial_sum_ratio": partial_sum, "even_normalized": even,
                            "normalization_flag": "n*p_2n tends to 1/(3pi); n*p_n tends to 2/(3pi)"})


# 3 -----------------------------------------------------------------------------

def last_exit_cases():
    hybrid = make_graph("hybrid", {"schedule_base": 2})
    return [
        ("square", make_graph("square"), Vertex(0, 0)),
        ("king", make_graph("king"), Vertex(0, 0)),
        ("finite-modification", make_graph("fm", {"base": "square", "patch": "diagonals:5"}), Vertex(0, 0)),
        ("hybrid/king-annulus", hybrid, Vertex(10, 0)),
        ("hybrid/square-gap", hybrid, Vertex(100, 0)),
    ]


def check_last_exit(profile: str = "full") -> CriterionResult:
    m = 512
    worst, parts = 0.0, []
    for name, g, x in last_exit_cases():
        rs = kernels.return_series(g, x, m)
        r = kernels.last_exit_identity_check(rs, kernels.survival(kernels.first_return(rs)), m)
        worst = max(worst, r)
        parts.append(f"{name}@{x} {r:.1e}")
    return CriterionResult(3, "last-exit identity", worst <= 1e-10,
                           f"max residual over m <= {m}: {worst:.2e} (<= 1e-10); " + ", ".join(parts),
                           {"max_residual": worst})


# 4 -----------------------------------------------------------------------------

def check_range_identity(profile: str = "full") -> CriterionResult:
    n_max = {"square": 10, "king": _size(profile, 8, 10)}
    worst = 0.0
    for kind, top in n_max.items():
        g = make_graph(kind)
        for n in range(top + 1):
            enum = float(kernels.expected_range_enumeration(g, (0, 0), n))
            per = kernels.expected_range_exact(g, (0, 0), n, method="per-target")
            ren = kernels.expected_range_exact(g, (0, 0), n, method="transitive-renewal")
            worst = max(worst, abs(enum - per), abs(enum - ren), abs(per - ren))
    er2 = kernels.expected_range_enumeration(make_graph("square"), (0, 0), 2)
    ok = worst <= 1e-10 and er2 == Fraction(11, 4)
    return CriterionResult(4, "range identity three-way agreement", ok,
                           f"square n<=10, king n<={n_max['king']}: max disagreement {worst:.1e} (<= 1e-10); "
                           f"E[R_2] = {er2} (exactly 11/4)", {"max_gap": worst, "ER2": str(er2)})


# 5 -----------------------------------------------------------------------------

def check_scaled_range_trend(profile: str = "full") -> CriterionResult:
    grid = _size(profile, (10 ** 3, 10 ** 4, 10 ** 5), (10 ** 4, 10 ** 5, 10 ** 6))
    upto = _size(profile, 512, 1000)
    er = kernels.expected_range_series(make_graph("square"), (0, 0), grid[-1], exact_upto=upto)
    vals = [float(er[n]) * math.log(n) / n for n in grid]
    gaps = [abs(v - math.pi) for v in vals]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    rel = gaps[-1] / math.pi
    ok = decreasing and rel <= 0.25
    return CriterionResult(5, "scaled range trend toward pi", ok,
                           "E[R_n] log n / n = " + ", ".join(f"{v:.4f}@{n:.0e}" for v, n in zip(vals, grid))
                           + f"; gap to pi decreasing={decreasing}, final {100 * rel:.1f}% (<= 25%)",
                           {"values": vals, "grid": list(grid)})


# 6 -----------------------------------------------------------------------------

def check_finite_modification(profile: str = "full", seed: int = 20240601, workers=None) -> CriterionResult:
    n = _size(profile, 10 ** 4, 10 ** 5)
    reps = _size(profile, 100, 200)
    fm = make_graph("fm", {"base": "square", "patch": "diagonals:5"})
    res = est.paired_range_difference(fm, make_graph("square"), (0, 0), n, reps, seed, workers)
    bound = max(3 * res["diff_se"], 0.02 * res["b_mean"])
    ok = abs(res["diff"]) <= bound
    return CriterionResult(6, "finite-modification stability", ok,
                           f"n={n}, {reps} paired replicas: scaled difference {res['diff']:+.4f}, "
                           f"bound max(3 se, 2% plain) = {bound:.4f}", res)


# 7 -----------------------------------------------------------------------------

def check_hybrid_locality(profile: str = "full") -> CriterionResult:
    hybrid = make_graph("hybrid", {"schedule_base": 2})
    cases = [("king annulus", Vertex(1000, 0), make_graph("king"), _size(profile, 64, 256)),
             ("square gap", Vertex(100, 0), make_graph("square"), 64)]
    worst, parts = 0.0, []
    for name, v, ref, k in cases:
        m = int(max(abs(v.i), abs(v.j)))
        radii = hybrid.schedule.radii
        lo = max([r for r in radii if r <= m], default=0)
        hi = min(r for r in radii if r > m)
        depth = min(m - lo, hi - 1 - m)
        if depth < k:
            raise AssertionError(f"{v} has depth {depth} < {k}")
        a = kernels.return_series(hybrid, v, k).values
        b = kernels.return_series(ref, v, k).values
        gap = float(np.abs(a - b).max())
        worst = max(worst, gap)
        parts.append(f"{name} v={v} depth={depth} k={k}: {gap:.1e}")
    return CriterionResult(7, "hybrid locality", worst <= 1e-12, "; ".join(parts) + " (<= 1e-12)",
                           {"max_gap": worst})


# 8 -----------------------------------------------------------------------------

def check_hit_bound(profile: str = "full") -> CriterionResult:
    grid = (2 ** 8, 2 ** 10, 2 ** 12)
    sq = make_graph("square")
    res = {rule: [kernels.hit_bound_check(sq, (0, 0), n, radius_rule=rule) for n in grid]
           for rule in ("critical", "strict")}
    consts = [r.constant for r in res["critical"]]
    growth = max(consts) / consts[0]
    ok = max(consts) <= 10 and growth <= 1.2
    strict = [r.constant for r in res["strict"]]
    detail = (f"critical radius (n/log^2 n)^(1/2): constants {', '.join(f'{c:.3f}' for c in consts)}, "
              f"max {max(consts):.3f} (<= 10), growth {growth:.3f} (<= 1.2); "
              f"strict radius (n/log^4 n)^(1/2) [info only]: {', '.join(f'{c:.3f}' for c in strict)} "
              f"at radii {[r.radius for r in res['strict']]}")
    return CriterionResult(8, "hitting bound", ok, detail,
                           {"critical": consts, "strict": strict, "radii": [r.radius for r in res["critical"]]})


# 9 -----------------------------------------------------------------------------

def _short_job(spec, n, seed, replica):
    s = walks.RngStream(seed, replica)
    c = walks.walk_codes(spec, (0, 0), 2 * n, s)
    a = walks.walk_codes(spec, (0, 0), n, s.sibling(1))
    b = walks.walk_codes(spec, (0, 0), n, s.sibling(2))
    inter_self = walks.intersect_count(np.unique(c[: n + 1]), np.unique(c[n:]))
    inter_two = walks.intersect_count(np.unique(a), np.unique(b))
    return (int(c[2] == c[0]), int(np.unique(c[:3]).size), inter_self, inter_two)


def small_n_samples(replicas: int, seed: int, workers=None, spec=None) -> np.ndarray:
    """Per replica: ``1{S_2 = S_0}``, ``R_2``, ``I_1``, ``J_1`` on Z^2."""
    from functools import partial

    spec = spec or make_graph("square")
    return np.array(map_replicas(partial(_short_job, spec, 1, seed), replicas, workers))


def _within(samples, target, k=4.0):
    m = samples.size
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(m))
    return abs(mean - target) <= k * se, mean, se


def check_intersections(profile: str = "full", seed: int = 777, workers=None) -> CriterionResult:
    reps = _size(profile, 200, 500)
    top = _size(profile, 12, 16)
    grid = [2 ** k for k in range(10, top + 1)]
    data = est.intersection_replicas(make_graph("square"), (0, 0), grid, reps, seed, workers)
    scan = est.intersection_moment_scan(data)
    moments_ok = all(row[f"J{p}_ok"] for row in scan["rows"] for p in (2, 3))
    small = small_n_samples(_size(profile, 20_000, 100_000), seed + 1, workers)
    j_ok, j_mean, j_se = _within(small[:, 3].astype(float), 1.25)
    sp = scan["spread"]
    ok = sp["I2_ratio"] <= 4 and sp["J_ratio"] <= 4 and moments_ok and j_ok
    detail = (f"{reps} replicas, n in 2^10..2^{top}: grid max/min I-ratio {sp['I2_ratio']:.2f}, "
              f"J-ratio {sp['J_ratio']:.2f} (<= 4); (p!)^2 moment check p=2,3 {'holds' if moments_ok else 'FAILS'}; "
              f"E[J_1] = {j_mean:.4f} +- {j_se:.4f} vs 5/4 (4 se)")
    return CriterionResult(9, "intersection moment scans", ok, detail, {"scan": scan, "J1": (j_mean, j_se)})


# 10 ----------------------------------------------------------------------------

EXPECTED_LENGTHS = {
    "square": (math.sqrt(2), math.sqrt(2), math.sqrt(2), math.sqrt(2)),
    "triangular": (math.sqrt(3), math.sqrt(3), 1.0, 1.0),
    "hexagonal": (1.0, 1.0, math.sqrt(3), math.sqrt(3)),
}


def check_isoradial(profile: str = "full") -> CriterionResult:
    tau = 1e-9
    parts, ok, metrics = [], True, {}
    for kind, expect in EXPECTED_LENGTHS.items():
        cert = isoradial.verify_isoradial(isoradial.generate_isoradial(kind, 3, tau=tau))
        if not cert.passed:
            ok = False
            parts.append(f"{kind} fails verification")
            continue
        got = isoradial.edge_and_dual_bounds(cert)
        gap = max(abs(a - b) for a, b in zip(got, expect))
        ok &= gap <= 1e-9
        metrics[kind] = {"bounds": got, "gap": gap, "theta": cert.theta_range}
        parts.append(f"{kind} gap {gap:.1e}")
    iso = isoradial.isoperimetric_scan(make_graph("square"), isoradial.square_blocks(32))["min_ratio"]
    ok &= iso == 4.0
    literal = isoradial.verify_isoradial(isoradial.generate_isoradial("square", 3), window_upper=isoradial.LITERAL_UPPER)
    detail = (", ".join(parts) + f" (<= 1e-9); Z2 block min ratio {iso} (exactly 4); "
              f"literal pi/4 - c window on square: {'passes' if literal.passed else 'fails'} [reported]")
    metrics["block_min_ratio"] = iso
    return CriterionResult(10, "isoradial geometry", ok, detail, metrics)


# 11 ----------------------------------------------------------------------------

def small_bases() -> list[FiniteGraph]:
    out = [path_graph(k) for k in (2, 4, 6, 10)]
    for k in (3, 5, 8):
        out.append(FiniteGraph([(i, 0) for i in range(k)], [((i, 0), ((i + 1) % k, 0)) for i in range(k)], f"cycle{k}"))
    grid = [(i, j) for i in range(2) for j in range(5)]
    out.append(FiniteGraph(grid, [(a, b) for a in grid for b in grid
                                  if a < b and abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1], "grid2x5"))
    block = [(i, j) for i in range(3) for j in range(3)]
    out.append(FiniteGraph(block, [(a, b) for a in block for b in block
                                   if a < b and max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1], "king3x3"))
    star = [(0, 0)] + [(k, 1) for k in range(1, 7)]
    out.append(FiniteGraph(star, [((0, 0), v) for v in star[1:]], "star7"))
    return out


def bracket_trials(count: int, seed: int = 11) -> tuple[int, int]:
    rnd = random.Random(seed)
    bases = small_bases()
    bad = 0
    for t in range(count):
        g = bases[t % len(bases)]
        vs = sorted(g._adj)
        p = rnd.random()
        a = lamplighter.WreathState.make(rnd.choice(vs), [v for v in vs if rnd.random() < p])
        b = lamplighter.WreathState.make(rnd.choice(vs), [v for v in vs if rnd.random() < p])
        d = lamplighter.wreath_distance_exact(a, b, g)
        lb, ub = lamplighter.distance_bracket(a, b, g)
        bad += not (lb <= d <= ub)
    return count - bad, count


def check_lamplighter(profile: str = "full", seed: int = 4242, workers=None) -> CriterionResult:
    trials = _size(profile, 300, 1000)
    good, total = bracket_trials(trials)
    top = _size(profile, 2500, 10 ** 4)
    grid = [top // 2 ** k for k in range(4, -1, -1)]
    data = lamplighter.sws_replicas(make_graph("square"), (0, 0), grid, 100, seed, workers)
    ub = [float((data["UB"][:, k] * math.log(n) / n).mean()) for k, n in enumerate(grid)]
    spread = max(ub) / min(ub)
    lit_ok = bool((data["lit"] <= data["R"]).all() and data["support_ok"].all())
    ordered = bool((data["LB"] <= data["UB"]).all())
    ok = good == total and spread <= 3 and lit_ok and ordered
    detail = (f"bracket contains BFS distance in {good}/{total} pairs; Z2 base n={grid}: scaled UB "
              + ", ".join(f"{v:.3f}" for v in ub) + f", max/min {spread:.3f} (<= 3); lit <= R_n on every replica: {lit_ok}")
    return CriterionResult(11, "lamplighter bracket soundness", ok, detail,
                           {"good": good, "total": total, "scaled_ub": ub, "grid": grid})


# 12 ----------------------------------------------------------------------------

class PerturbedSquare(SquareLattice):
    """Square lattice whose neighbor order is rotated by one slot: a deliberate fault.

    (Reversing the order would only reflect every path through the start,
    which leaves the range unchanged.)
    """

    offsets = np.roll(SQUARE_OFFSETS, 1, axis=0)

    def _neighbors(self, v):
        return tuple(Vertex(v.i + di, v.j + dj) for di, dj in self.offsets.tolist())

    @property
    def region_tables(self):
        return {0: self.offsets}


DETERMINISM_CONFIG = """\
graph.kind = square
run.operations = range-mc
run.n_grid = 64, 256, 1024
run.replicas = 48
run.seed = 31337
"""


def check_determinism(profile: str = "full", fault: str | None = None, worker_counts=(1, 4, 16)) -> CriterionResult:
    cfg = parse_config(DETERMINISM_CONFIG)
    bodies = []
    for w in worker_counts:
        spec = PerturbedSquare() if fault == "neighbor-order" and w != worker_counts[0] else None
        rep = run_config(cfg, workers=w, spec=spec)
        bodies.append(estimates_csv(rep.records) + csv_text(REPLICA_FIELDS, rep.replica_rows))
    identical = all(b == bodies[0] for b in bodies)
    sq = make_graph("square")
    held = sum(walks.pathwise_last_exit_check(walks.simulate(sq, (0, 0), 10 ** 4, walks.RngStream(99, r)))
               for r in range(100))
    reps = _size(profile, 20_000, 100_000)
    small = small_n_samples(reps, 2024)
    checks = {
        "p2": _within(small[:, 0].astype(float), 0.25),
        "f2": _within(small[:, 0].astype(float), 0.25),
        "ER2": _within(small[:, 1].astype(float), 2.75),
        "EI1": _within(small[:, 2].astype(float), 1.25),
    }
    small_ok = all(c[0] for c in checks.values())
    ok = identical and held == 100 and small_ok
    detail = (f"CSV bodies identical across workers {list(worker_counts)}: {identical}; pathwise last-exit "
              f"{held}/100; at {reps} replicas " + ", ".join(f"{k}={v[1]:.4f}+-{v[2]:.4f}" for k, v in checks.items()))
    return CriterionResult(12, "determinism and identity suite", ok, detail,
                           {"identical": identical, "pathwise": held, "small": {k: v[1:] for k, v in checks.items()}})


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: check_square_diagonal,
    2: check_king_constant,
    3: check_last_exit,
    4: check_range_identity,
    5: check_scaled_range_trend,
    6: check_finite_modification,
    7: check_hybrid_locality,
    8: check_hit_bound,
    9: check_intersections,
    10: check_isoradial,
    11: check_lamplighter,
    12: check_determinism,
}


def run_criterion(number: int, profile: str = "full", **kwargs) -> CriterionResult:
    t = time.perf_counter()
    res = CRITERIA[number](profile, **kwargs)
    res.seconds = time.perf_counter() - t
    return res


def verify_suite(profile: str = "quick", only=None, echo: Callable[[str], None] | None = print,
                 fault: str | None = None) -> list[CriterionResult]:
    out = []
    for number in sorted(CRITERIA):
        if only and number not in only:
            continue
        kwargs = {"fault": fault} if number == 12 and fault else {}
        try:
            res = run_criterion(number, profile, **kwargs)
        except Exception as exc:  # a crash is a failed criterion, not a crashed suite
            res = CriterionResult(number, CRITERIA[number].__name__, False, f"raised {type(exc).__name__}: {exc}")
        out.append(res)
        if echo:
            echo(res.line())
    return out
