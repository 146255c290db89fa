import math

import numpy as np
import pytest

from rangelab import estimators as est
from rangelab import kernels
from rangelab.errors import DomainError
from rangelab.graphs import KingLattice, SquareLattice, make_graph
from rangelab.parallel import map_replicas, worker_count

SQ = SquareLattice()


def test_record_validation():
    r = est.EstimateRecord("x", "square", 10, 1.5)
    assert r.row()["seed"] == "" and r.row()["dispersion"] == "0.0"
    assert tuple(r.row()) == est.CSV_FIELDS
    with pytest.raises(ValueError):
        est.EstimateRecord("x", "square", 10, 1.5, method="guess")
    with pytest.raises(ValueError):
        est.EstimateRecord("x", "square", 10, 1.5, dispersion=0.1)
    with pytest.raises(ValueError):
        est.EstimateRecord("x", "square", 10, 1.5, replicas=1, method="mc")


def test_mc_record():
    rec = est.mc_record("R", "square", 4, [1, 2, 3, 4], seed=3)
    assert rec.value == 2.5 and rec.replicas == 4 and rec.method == "mc"
    assert rec.dispersion == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)


def test_scaled_range_needs_n3():
    with pytest.raises(DomainError):
        est.scaled_range([1, 2], 2, "square")


def test_range_replicas_match_direct_walks():
    from rangelab import walks
    data = est.range_replicas(SQ, (0, 0), [10, 100], 5, seed=9)
    for r in range(5):
        tr = walks.simulate(SQ, (0, 0), 100, walks.RngStream(9, r), range_series=True)
        assert data["R"][r].tolist() == [tr.range.counts[10], tr.range.counts[100]]


def test_range_replicas_worker_independent():
    a = est.range_replicas(SQ, (0, 0), [64, 256], 12, seed=5, workers=1)
    b = est.range_replicas(SQ, (0, 0), [64, 256], 12, seed=5, workers=3)
    assert np.array_equal(a["R"], b["R"]) and np.array_equal(a["T"], b["T"])


def test_mc_range_agrees_with_exact():
    n = 200
    data = est.range_replicas(SQ, (0, 0), [n], 400, seed=1)
    exact = kernels.expected_range_series(SQ, (0, 0), n)[n]
    mean = data["R"][:, 0].mean()
    se = data["R"][:, 0].std(ddof=1) / math.sqrt(400)
    assert abs(mean - exact) < 4 * se


def test_exact_scaled_range():
    recs = est.exact_scaled_range(SQ, (0, 0), [100, 1000])
    assert all(r.method == "exact" and r.dispersion == 0 for r in recs)
    er = kernels.expected_range_series(SQ, (0, 0), 1000)
    assert recs[1].value == pytest.approx(er[1000] * math.log(1000) / 1000)


def test_r_bounds_transitive():
    rows = est.r_bounds_estimate(SQ, [(0, 0), (3, 3)], [100, 400])
    assert [r["n"] for r in rows] == [100, 400]
    for r in rows:
        assert r["r_inf"] == r["r_sup"]
        assert 0.5 < r["r_inf"] < 3.5


def test_tail_probability():
    samples = np.arange(1, 201)
    out = est.tail_probability(samples, 100, a=math.log(100))  # threshold = n
    assert out["p"] == pytest.approx(0.5)
    assert out["lo"] < 0.5 < out["hi"]
    with pytest.raises(DomainError):
        est.tail_probability(samples[:50], 100, 1.0)


def test_intersection_job_definitions():
    from rangelab import walks
    data = est.intersection_replicas(SQ, (0, 0), [20], 3, seed=4)
    for r in range(3):
        s = walks.RngStream(4, r)
        c = walks.walk_codes(SQ, (0, 0), 40, s)
        assert data["I"][r, 0] == len(set(c[:21]) & set(c[20:]))
        a = walks.walk_codes(SQ, (0, 0), 20, s.sibling(1))
        b = walks.walk_codes(SQ, (0, 0), 20, s.sibling(2))
        assert data["J"][r, 0] == len(set(a) & set(b))


def test_intersection_scan_shape():
    data = est.intersection_replicas(SQ, (0, 0), [64, 256], 200, seed=2)
    scan = est.intersection_moment_scan(data)
    assert len(scan["rows"]) == 2
    for row in scan["rows"]:
        assert row["J2_ok"] and row["J3_ok"]
        assert row["EJ"] >= 1
    with pytest.raises(DomainError):
        est.intersection_moment_scan({"I": data["I"][:10], "J": data["J"][:10], "n_grid": data["n_grid"]})


def test_regularity_square():
    rep = est.regularity_report(SQ, [(0, 0)], n_grid=(32, 64), exit_grid=(4, 8))
    assert rep.alpha == pytest.approx(2.0, abs=0.1)
    assert rep.c1 <= rep.c2
    assert 0.5 < rep.window_min <= rep.window_max < 1.0  # n(p_n + p_{n+1}) -> 2/pi
    assert rep.c4 > 0
    assert 0.4 < rep.exit_min <= rep.exit_max < 1.0
    with pytest.raises(ValueError):
        est.RegularityReport(c1=2, c2=1)


def test_ahlfors_needs_radii():
    with pytest.raises(DomainError):
        est.ahlfors_fit(SQ, [(0, 0)], [2, 4])


def test_paired_difference_common_seed():
    out = est.paired_range_difference(SQ, SQ, (0, 0), 500, 10, seed=3)
    assert out["diff"] == 0 and out["diff_se"] == 0
    king = est.paired_range_difference(KingLattice(), SQ, (0, 0), 2000, 40, seed=3)
    assert king["diff"] > 0


def test_range_extremes_proxy():
    data = est.range_replicas(SQ, (0, 0), [100, 1000, 5000], 20, seed=8)
    out = est.range_extremes_proxy(data)
    assert out["inf_proxy"] <= out["sup_proxy"]


def test_worker_count(monkeypatch):
    assert worker_count() == 1
    assert worker_count(3) == 3
    monkeypatch.setenv("RANGELAB_WORKERS", "5")
    assert worker_count(3) == 5
    monkeypatch.setenv("RANGELAB_WORKERS", "zero")
    with pytest.raises(ValueError):
        worker_count()


def _square(k):
    return k * k


def test_map_replicas_ordered():
    assert map_replicas(_square, 10, workers=3) == [k * k for k in range(10)]
    assert map_replicas(_square, [4, 2], workers=1) == [16, 4]


def test_hybrid_local_kernel_agrees_with_king_inside_annulus():
    # inside a wide king annulus the short-time kernel is the king kernel
    g = make_graph("hybrid-annuli", {"radii": "4,400"})
    p = kernels.return_series(g, (100, 100), 50).values
    q = kernels.return_series(KingLattice(), (0, 0), 50).values
    assert np.allclose(p, q, atol=1e-15)
