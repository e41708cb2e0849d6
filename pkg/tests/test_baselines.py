import pytest

from rcstream import baselines, topology as topo

import fluid

# Short sweeps here; the 300 s acceptance runs live in test_acceptance.
DUR = 40.0


@pytest.fixture(scope="module")
def wct_sweep():
    return baselines.sweep_static(topo.builtin("wct"), DUR, seed=1)


def test_run_default_has_bp_time(wct_sweep):
    default = wct_sweep.report_for(1.0)
    assert default.bp_time_total > 0


def test_wct_default_below_service_capacity(wct_sweep):
    # count's service capacity bounds the default scheme's throughput
    cap = 1.0 / topo.builtin("wct").component("count").service_s
    assert wct_sweep.report_for(1.0).thr_mean < cap


def test_default_latency_worse_than_throttled(wct_sweep):
    default = wct_sweep.report_for(1.0)
    throttled = wct_sweep.report_for(0.8)
    assert default.latency_mean > 2 * throttled.latency_mean
    assert max(default.latency_series) > max(throttled.latency_series)


def test_series_lengths(wct_sweep):
    for r in wct_sweep.reports:
        assert len(r.thr_series) == int(DUR)
        assert len(r.latency_series) == int(DUR)


def test_sweep_best_fraction_wct(wct_sweep):
    assert wct_sweep.best.fraction == pytest.approx(0.8)


def test_sweep_stable_fractions_match_fluid(wct_sweep):
    spec = topo.builtin("wct")
    for r in wct_sweep.reports:
        if fluid.max_utilization(spec, r.fraction) <= 0.95:
            assert r.thr_mean == pytest.approx(
                fluid.stable_throughput(spec, r.fraction), rel=0.02), r.fraction


def test_compare_identity(wct_sweep):
    d = wct_sweep.report_for(1.0)
    out = baselines.compare(d, d)
    assert out == {"thr_gain_pct": 0.0, "latency_drop_pct": 0.0}


def test_compare_arithmetic():
    a = baselines.RunReport("t", "a", 10.0, 1.0, None, 110.0, (110.0,) * 10,
                            0.01, (0.01,) * 10, (0.0,) * 10, 0.0)
    b = baselines.RunReport("t", "b", 10.0, 1.0, None, 100.0, (100.0,) * 10,
                            0.02, (0.02,) * 10, (0.0,) * 10, 0.0)
    out = baselines.compare(a, b)
    assert out["thr_gain_pct"] == pytest.approx(10.0)
    assert out["latency_drop_pct"] == pytest.approx(50.0)


def test_compare_mismatch_rejected():
    a = baselines.RunReport("t1", "a", 10.0, 1.0, None, 1.0, (1.0,), 0.0, (0.0,), (0.0,), 0.0)
    b = baselines.RunReport("t2", "b", 10.0, 1.0, None, 1.0, (1.0,), 0.0, (0.0,), (0.0,), 0.0)
    with pytest.raises(ValueError):
        baselines.compare(a, b)
    c = baselines.RunReport("t1", "c", 20.0, 1.0, None, 1.0, (1.0,), 0.0, (0.0,), (0.0,), 0.0)
    with pytest.raises(ValueError):
        baselines.compare(a, c)


def test_common_seeds_reproducible():
    spec = topo.builtin("lspt")
    a = baselines.run_static(spec, 0.9, 10.0, seed=5)
    b = baselines.run_static(spec, 0.9, 10.0, seed=5)
    assert a == b


def test_run_csv_round_trip(tmp_path):
    spec = topo.builtin("wct")
    r = baselines.run_static(spec, 0.8, 5.0, seed=2)
    path = tmp_path / "run.csv"
    baselines.write_run_csv(r, path)
    back = baselines.read_run_csv(path)
    assert back["summary"]["thr_mean"] == r.thr_mean
    assert len(back["windows"]) == 5
