"""Execute the operations listed in an experiment config."""

from __future__ import annotations

import logging

from . import estimators as est
from . import isoradial, kernels, lamplighter, walks
from .config import ExperimentConfig
from .errors import ConfigError
from .estimators import EstimateRecord
from .graphs import DEFAULT_MAX_VERTICES, WINDOW_BYTES_PER_POINT, Graph, make_graph
from .parallel import worker_count
from .report import RunReport

log = logging.getLogger(__name__)



def vertex_guard(cfg: ExperimentConfig) -> int:
    limit = cfg.get("guards.max_ball", DEFAULT_MAX_VERTICES)
    mem = cfg.get("guards.max_memory_mb")
    if mem is not None:
        limit = min(limit, mem * 2 ** 20 // WINDOW_BYTES_PER_POINT)
    return int(limit)


def build_graph(cfg: ExperimentConfig, section: str = "graph") -> Graph:
    kind, params = cfg.graph_params(section)
    return make_graph(kind, params)


def _need_grid(cfg: ExperimentConfig, op: str) -> list[int]:
    grid = cfg.n_grid
    if not grid:
        raise ConfigError(f"missing required field 'run.n' or 'run.n_grid' (needed by {op})")
    return grid


def _need(cfg: ExperimentConfig, key: str, op: str):
    value = cfg.get(key)
    if value is None:
        raise ConfigError(f"missing required field {key!r} (needed by {op})")
    return value


def run_config(cfg: ExperimentConfig, workers: int | None = None, spec: Graph | None = None) -> RunReport:
    """Run every listed operation; ``workers=None`` resolves the environment and config."""
    report = RunReport(cfg.echo(), cfg.hash)
    with report.phase("build-graph"):
        spec = spec if spec is not None else build_graph(cfg)
    workers = workers if workers is not None else worker_count(cfg.get("run.workers"))
    for op in cfg.operations:
        with report.phase(op):
            OPS[op](cfg, spec, report, workers)
    return report


def _origin(v) -> str:
    # colon form keeps vertex labels free of CSV delimiters
    return str(v).replace(",", ":")


def _series(cfg, spec: Graph, report: RunReport, n: int):
    guard = vertex_guard(cfg)
    out = []
    for x in cfg.vertices:
        rs = kernels.return_series(spec, x, n, max_vertices=guard)
        out.append((x, rs))
    return out


def op_return_series(cfg, spec, report, workers):
    grid = _need_grid(cfg, "return-series")
    for x, rs in _series(cfg, spec, report, max(grid)):
        report.series_rows += [{"graph": spec.identity, "origin": _origin(x), "k": k, "value": repr(float(v)), "kind": "p"}
                               for k, v in enumerate(rs.values)]
        for n in grid:
            report.add([EstimateRecord(f"return_prob@{_origin(x)}", spec.identity, n, float(rs.values[n]))])


def op_first_return(cfg, spec, report, workers):
    grid = _need_grid(cfg, "first-return")
    for x, rs in _series(cfg, spec, report, max(grid)):
        f = kernels.first_return(rs)
        q = kernels.survival(f)
        report.quality["clipped_f"] += f.clipped
        report.quality["floor_violations"] += f.floor_violations
        for kind, vals in (("f", f.values), ("q", q.values)):
            report.series_rows += [{"graph": spec.identity, "origin": _origin(x), "k": k, "value": repr(float(v)),
                                    "kind": kind} for k, v in enumerate(vals)]
        for n in grid:
            report.add([EstimateRecord(f"first_return_prob@{_origin(x)}", spec.identity, n, float(f.values[n])),
                        EstimateRecord(f"survival@{_origin(x)}", spec.identity, n, float(q.values[n]))])


def op_last_exit(cfg, spec, report, workers):
    grid = _need_grid(cfg, "last-exit-check")
    n = max(grid)
    for x, rs in _series(cfg, spec, report, n):
        f = kernels.first_return(rs)
        q = kernels.survival(f)
        report.quality["clipped_f"] += f.clipped
        resid = kernels.last_exit_identity_check(rs, q, n)
        report.residuals[f"last_exit@{_origin(x)}"] = resid
        report.residuals[f"renewal@{_origin(x)}"] = kernels.renewal_identity_residual(rs, f)
        report.add([EstimateRecord(f"last_exit_residual@{_origin(x)}", spec.identity, n, resid)])


def op_expected_range(cfg, spec, report, workers):
    grid = _need_grid(cfg, "expected-range")
    method = cfg.get("run.method") or ("transitive-renewal" if spec.vertex_transitive else "per-target")
    tag = "enumeration" if method == "enumeration" else "exact"
    for x in cfg.vertices:
        for n in grid:
            v = kernels.expected_range_exact(spec, x, n, method=method, max_vertices=vertex_guard(cfg))
            report.add([EstimateRecord(f"expected_range:{method}@{_origin(x)}", spec.identity, n, v, method=tag)])


def op_scaled_range_exact(cfg, spec, report, workers):
    grid = _need_grid(cfg, "scaled-range-exact")
    for x in cfg.vertices:
        report.add(est.exact_scaled_range(spec, x, grid))


def op_hit_bound(cfg, spec, report, workers):
    grid = _need_grid(cfg, "hit-bound")
    rule = cfg.get("run.radius_rule", "critical")
    if rule not in kernels.RADIUS_RULES:
        raise ConfigError(f"run.radius_rule: unknown rule {rule!r}")
    for n in grid:
        res = kernels.hit_bound_check(spec, cfg.vertices[0], n, radius_rule=rule)
        report.add([EstimateRecord(f"hit_bound_constant:{rule}", spec.identity, n, res.constant)])


def op_killed_green(cfg, spec, report, workers):
    r = _need(cfg, "run.radius", "killed-green")
    for x in cfg.vertices:
        tab = kernels.killed_green_ball(spec, x, r, max_vertices=vertex_guard(cfg))
        report.residuals[f"killed_green@{_origin(x)}"] = tab.residual
        report.add([EstimateRecord(f"killed_green_diag@{_origin(x)}", spec.identity, r, tab.at(x))])


def op_exit_time(cfg, spec, report, workers):
    r_grid = cfg.get("run.r_grid") or [_need(cfg, "run.radius", "exit-time")]
    prof = est.exit_time_profile(spec, cfg.vertices, r_grid)
    for z, r, t in prof["values"]:
        report.add([EstimateRecord(f"exit_time@{_origin(z)}", spec.identity, r, t)])


def op_r_bounds(cfg, spec, report, workers):
    grid = _need_grid(cfg, "r-bounds")
    for row in est.r_bounds_estimate(spec, cfg.vertices, grid):
        report.add([EstimateRecord("r_inf_estimate", spec.identity, row["n"], float(row["r_inf"])),
                    EstimateRecord("r_sup_estimate", spec.identity, row["n"], float(row["r_sup"]))])


def op_regularity(cfg, spec, report, workers):
    grid = cfg.n_grid or [64, 128, 256, 512]
    r_grid = cfg.get("run.r_grid") or [4, 8, 16, 32]
    reg = est.regularity_report(spec, cfg.vertices, r_grid=r_grid, n_grid=grid, exit_grid=r_grid)
    report.quality["excluded_pairs"] += reg.notes.get("excluded_pairs", 0)
    report.sections["regularity"] = reg.to_json()


def op_isoradial(cfg, spec, report, workers):
    extent = cfg.get("run.extent", 3)
    upper = {"conventional": isoradial.CONVENTIONAL_UPPER, "literal": isoradial.LITERAL_UPPER}
    window = cfg.get("run.window_upper", "conventional")
    if window not in upper:
        raise ConfigError(f"run.window_upper: expected conventional or literal, got {window!r}")
    out = {}
    for kind in cfg.get("run.tilings") or ["square", "triangular", "hexagonal"]:
        g = isoradial.generate_isoradial(kind, extent)
        cert = isoradial.verify_isoradial(g, window_upper=upper[window])
        out[kind] = cert.summary()
        if cert.passed:
            c1, c2, d1, d2 = isoradial.edge_and_dual_bounds(cert)
            out[kind].update({"c1": c1, "c2": c2, "c1_dual": d1, "c2_dual": d2})
            for name, v in (("edge_min", c1), ("edge_max", c2), ("dual_min", d1), ("dual_max", d2)):
                report.add([EstimateRecord(f"isoradial_{name}", f"{kind}-patch", extent, v)])
    report.sections["isoradial"] = out


def op_range_mc(cfg, spec, report, workers):
    grid = _need_grid(cfg, "range-mc")
    reps = cfg.get("run.replicas", 100)
    seed = cfg.seed
    data = est.range_replicas(spec, cfg.vertices[0], grid, reps, seed, workers)
    a = cfg.get("run.threshold", 2.0)
    tails = []
    for k, n in enumerate(data["n_grid"]):
        if n >= 3:
            report.add(est.scaled_range(data["R"][:, k], n, spec.identity, seed))
            if reps >= 100:
                tails.append(est.tail_probability(data["R"][:, k], n, a, spec.identity, seed))
        report.replica_rows += [{"replica": r, "n": n, "statistic": "R", "value": int(v)}
                                for r, v in enumerate(data["R"][:, k])]
    report.replica_rows += [{"replica": r, "n": data["n_grid"][-1], "statistic": "T_return", "value": int(t)}
                            for r, t in enumerate(data["T"])]
    if all(n >= 3 for n in data["n_grid"]) and reps >= 2:
        report.sections["range_extremes_proxy"] = est.range_extremes_proxy(data)
    report.sections["tail_probability"] = tails


def op_intersections(cfg, spec, report, workers):
    grid = _need_grid(cfg, "intersections")
    reps = cfg.get("run.replicas", 200)
    data = est.intersection_replicas(spec, cfg.vertices[0], grid, reps, cfg.seed, workers)
    scan = est.intersection_moment_scan(data)
    for row in scan["rows"]:
        n = row["n"]
        report.add([EstimateRecord("I2_normalized", spec.identity, n, float(row["I2_ratio"]), float(row["I2_se"]), reps,
                                   cfg.seed, "mc"),
                    EstimateRecord("J_normalized", spec.identity, n, float(row["J_ratio"]), float(row["J_se"]), reps,
                                   cfg.seed, "mc")])
    report.sections["intersection_scan"] = scan


def op_paired(cfg, spec, report, workers):
    other = build_graph(cfg, "compare")
    n = max(_need_grid(cfg, "paired-difference"))
    reps = cfg.get("run.replicas", 200)
    res = est.paired_range_difference(spec, other, cfg.vertices[0], n, reps, cfg.seed, workers)
    report.add([EstimateRecord("paired_scaled_range_difference", f"{spec.identity}-vs-{other.identity}", n,
                               res["diff"], res["diff_se"], reps, cfg.seed, "mc")])
    report.sections["paired_difference"] = res


def op_lamplighter(cfg, spec, report, workers):
    grid = _need_grid(cfg, "lamplighter")
    reps = cfg.get("run.replicas", 100)
    data = lamplighter.sws_replicas(spec, cfg.vertices[0], grid, reps, cfg.seed, workers)
    report.add(lamplighter.scaled_displacement(data))
    report.sections["lamplighter"] = {
        "bracket_ordered": bool((data["LB"] <= data["UB"]).all()),
        "lit_within_range": bool((data["lit"] <= data["R"]).all()),
        "support_in_visited": bool(data["support_ok"].all()),
    }


def op_pathwise(cfg, spec, report, workers):
    n = max(_need_grid(cfg, "pathwise-last-exit"))
    reps = cfg.get("run.replicas", 100)
    ok = 0
    for r in range(reps):
        tr = walks.simulate(spec, cfg.vertices[0], n, walks.RngStream(cfg.seed, r), keep_path=True)
        ok += walks.pathwise_last_exit_check(tr)
    report.sections["pathwise_last_exit"] = {"held": ok, "traces": reps}
    report.residuals["pathwise_last_exit_failures"] = reps - ok


OPS = {
    "return-series": op_return_series,
    "first-return": op_first_return,
    "last-exit-check": op_last_exit,
    "expected-range": op_expected_range,
    "scaled-range-exact": op_scaled_range_exact,
    "hit-bound": op_hit_bound,
    "killed-green": op_killed_green,
    "exit-time": op_exit_time,
    "r-bounds": op_r_bounds,
    "regularity": op_regularity,
    "isoradial": op_isoradial,
    "range-mc": op_range_mc,
    "intersections": op_intersections,
    "paired-difference": op_paired,
    "lamplighter": op_lamplighter,
    "pathwise-last-exit": op_pathwise,
}
