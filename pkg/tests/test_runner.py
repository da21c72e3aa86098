"""Sweep orchestration: determinism, aggregation, and CSV round-trips."""
import numpy as np
import pytest

from dmimo.config import ConfigError, load_config
from dmimo.runner import (
    CSV_HEADER,
    SweepResult,
    SweepSpec,
    emit_csv,
    read_csv,
    run_point,
    run_sweep,
    _worker_count,
)

TINY = {"ues": 3, "aps": 4, "antennas_per_ap": 2, "side_m": 250.0}


def tiny_config(n_net=3, n_ch=40, seed=2, **overrides):
    raw = dict(TINY)
    raw.update(overrides)
    raw["monte_carlo"] = {"networks": n_net, "channels": n_ch, "seed": seed}
    return load_config(raw)


def tiny_spec(q_list=(1, 4), side_list=(100.0, 200.0), n_net=2, n_ch=20, seed=5):
    base = load_config({"ues": 3, "antennas_per_ap": 2, "aps": 4})
    return SweepSpec(base=base, m_total=8, q_list=q_list, side_list=side_list,
                     n_net=n_net, n_ch=n_ch, seed=seed)


def test_run_point_is_deterministic():
    cfg = tiny_config()
    a = run_point(cfg)
    b = run_point(cfg)
    assert a.mean_se == b.mean_se
    assert np.array_equal(a.per_user_se, b.per_user_se)
    assert (a.se_p5, a.se_p50, a.se_p95) == (b.se_p5, b.se_p50, b.se_p95)


def test_run_point_single_realization():
    cfg = tiny_config(n_net=1, n_ch=1)
    res = run_point(cfg)
    assert res.stderr == 0.0
    assert res.per_user_se.shape == (1, 3)
    assert res.mean_se == pytest.approx(res.per_user_se.mean())


def test_run_point_aggregation_definitions():
    cfg = tiny_config()
    res = run_point(cfg)
    assert res.mean_se == pytest.approx(float(res.per_user_se.mean()))
    p5, p50, p95 = np.percentile(res.per_user_se, [5.0, 50.0, 95.0])
    assert (res.se_p5, res.se_p50, res.se_p95) == pytest.approx((p5, p50, p95))
    net_means = res.per_user_se.mean(axis=1)
    assert res.stderr == pytest.approx(net_means.std(ddof=1) / np.sqrt(3))
    assert res.density == pytest.approx(4 / (0.25**2))
    assert (res.n_net, res.n_ch, res.seed) == (3, 40, 2)


def test_doubling_channel_count_stays_within_noise():
    a = run_point(tiny_config(n_net=6, n_ch=100, ues=4))
    b = run_point(tiny_config(n_net=6, n_ch=200, ues=4))
    tol = 3.0 * max(a.stderr, b.stderr)
    assert abs(a.mean_se - b.mean_se) < tol


def test_noise_dominated_limit_collapses_se():
    cfg = tiny_config(noise_power_watts=1e6)
    res = run_point(cfg)
    assert res.mean_se < 1e-9


def test_worker_count_does_not_change_numbers():
    cfg = tiny_config()
    serial = run_point(cfg, workers=1)
    parallel = run_point(cfg, workers=2)
    assert np.array_equal(serial.per_user_se, parallel.per_user_se)
    assert serial.mean_se == parallel.mean_se
    assert serial.stderr == parallel.stderr


def test_worker_env_variable_only_selects_pool_size(monkeypatch):
    monkeypatch.delenv("DMIMO_WORKERS", raising=False)
    assert _worker_count(None) == 1
    monkeypatch.setenv("DMIMO_WORKERS", "3")
    assert _worker_count(None) == 3
    assert _worker_count(2) == 2  # explicit argument wins
    cfg = tiny_config(n_net=2, n_ch=10)
    via_env = run_point(cfg)
    monkeypatch.delenv("DMIMO_WORKERS")
    assert np.array_equal(via_env.per_user_se, run_point(cfg).per_user_se)


def test_average_sinr_first_changes_aggregation_only():
    plain = run_point(tiny_config())
    flipped = run_point(tiny_config(average_sinr_before_log=True))
    assert np.array_equal(plain.per_user_se, flipped.per_user_se)
    assert flipped.mean_se != plain.mean_se


def test_sweep_row_grid_and_order():
    res = run_sweep(tiny_spec())
    assert res.m_total == 8
    keys = [(p.Q, p.side) for p in res.points]
    assert keys == [(1, 100.0), (1, 200.0), (4, 100.0), (4, 200.0)]
    assert all(p.M == 8 for p in res.points)
    assert all(p.S == 8 // p.Q for p in res.points)


def test_sweep_rejects_invalid_points_with_context():
    with pytest.raises(ConfigError, match="not divisible"):
        run_sweep(tiny_spec(q_list=(1, 3)))
    with pytest.raises(ConfigError, match="Q=2"):
        run_sweep(tiny_spec(q_list=(2,)))
    with pytest.raises(ConfigError, match="at least one Q"):
        run_sweep(tiny_spec(q_list=()))


def test_point_results_do_not_depend_on_sweep_composition():
    full = run_sweep(tiny_spec(q_list=(1, 4)))
    solo = run_sweep(tiny_spec(q_list=(4,)))
    full_q4 = [p for p in full.points if p.Q == 4]
    for a, b in zip(full_q4, solo.points):
        assert a.mean_se == b.mean_se
        assert np.array_equal(a.per_user_se, b.per_user_se)


def test_csv_header_is_pinned():
    assert CSV_HEADER == ("Q,S,l_m,M,density_aps_per_km2,mean_se_bps_hz,stderr,"
                          "se_p5,se_p50,se_p95,n_net,n_ch,seed")


def test_csv_emission_and_round_trip(tmp_path):
    res = run_sweep(tiny_spec())
    path = tmp_path / "out.csv"
    emit_csv(res, path)
    lines = path.read_text().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 4 + 1  # header, rows, trailing newline
    assert lines[-1] == ""
    rows = read_csv(path)
    for row, point in zip(rows, res.points):
        assert row["Q"] == point.Q
        assert row["mean_se_bps_hz"] == float(f"{point.mean_se:.9g}")
        assert row["density_aps_per_km2"] == float(f"{point.density:.9g}")
        assert row["seed"] == 5


def test_csv_refuses_empty_result(tmp_path):
    empty = SweepResult(points=(), m_total=8, seed=0, wall_s=0.0)
    path = tmp_path / "never.csv"
    with pytest.raises(ValueError, match="empty"):
        emit_csv(empty, path)
    assert not path.exists()


def test_csv_reader_rejects_foreign_header(tmp_path):
    path = tmp_path / "foreign.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="header"):
        read_csv(path)


def test_identical_seeds_give_identical_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_sweep(tiny_spec()), a)
    emit_csv(run_sweep(tiny_spec()), b)
    assert a.read_bytes() == b.read_bytes()
    emit_csv(run_sweep(tiny_spec(seed=6)), b)
    assert a.read_bytes() != b.read_bytes()
