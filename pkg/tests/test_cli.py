"""CLI contract: argument handling, precedence rules, exit codes."""
import yaml
import pytest

from dmimo.cli import DESK_SCALE, PAPER_SCALE, build_parser, main, _resolve_counts
from dmimo.runner import read_csv

TINY_SCENARIO = {"ues": 2, "aps": 1, "antennas_per_ap": 4, "side_m": 100.0}


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(TINY_SCENARIO))
    return path


def run_cli(*args):
    return main([str(a) for a in args])


def test_help_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--help")
    assert exc.value.code == 0
    assert "--paper-scale" in capsys.readouterr().out


def test_config_argument_is_required():
    with pytest.raises(SystemExit) as exc:
        run_cli("--seed", "1")
    assert exc.value.code == 2


def test_minimal_run_writes_csv(scenario, tmp_path, capsys):
    out = tmp_path / "res.csv"
    code = run_cli("--config", scenario, "--q-list", "1", "--l-list", "100",
                   "--n-net", "2", "--n-ch", "10", "--seed", "3", "--out", out)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 1
    assert (rows[0]["Q"], rows[0]["l_m"]) == (1, 100.0)
    assert (rows[0]["n_net"], rows[0]["n_ch"], rows[0]["seed"]) == (2, 10, 3)
    assert "wrote 1 points" in capsys.readouterr().out


def test_repeat_runs_are_byte_identical(scenario, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ("--config", scenario, "--q-list", "1", "--l-list", "100", "150",
            "--n-net", "2", "--n-ch", "8", "--seed", "9")
    assert run_cli(*args, "--out", a) == 0
    assert run_cli(*args, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_invalid_config_exits_2_with_diagnostic(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"aps": 3}))
    assert run_cli("--config", bad, "--n-net", "1", "--n-ch", "1") == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert run_cli("--config", tmp_path / "nope.yaml") == 2
    assert "error:" in capsys.readouterr().err


def test_sweep_file_drives_the_grid(scenario, tmp_path):
    sweep = tmp_path / "sweep.yaml"
    sweep.write_text(yaml.safe_dump({
        "m_total": 4, "q_list": [1, 4], "side_list_m": [100.0],
        "networks": 2, "channels": 6, "seed": 11,
    }))
    out = tmp_path / "res.csv"
    assert run_cli("--config", scenario, "--sweep", sweep, "--out", out) == 0
    rows = read_csv(out)
    assert [(r["Q"], r["S"]) for r in rows] == [(1, 4), (4, 1)]
    assert all((r["n_net"], r["n_ch"], r["seed"]) == (2, 6, 11) for r in rows)


def test_sweep_file_unknown_keys_rejected(scenario, tmp_path, capsys):
    sweep = tmp_path / "sweep.yaml"
    sweep.write_text(yaml.safe_dump({"qlist": [1]}))
    assert run_cli("--config", scenario, "--sweep", sweep) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_negative_seed_rejected(scenario, tmp_path, capsys):
    assert run_cli("--config", scenario, "--seed", "-1",
                   "--out", tmp_path / "x.csv") == 2
    assert "seed" in capsys.readouterr().err


def test_count_precedence_chain():
    parser = build_parser()
    base = ["--config", "x.yaml"]

    args = parser.parse_args(base)
    assert _resolve_counts(args, {}, {}) == DESK_SCALE

    # config file counts beat the desk default
    assert _resolve_counts(args, {}, {"networks": 7, "channels": 70}) == (7, 70)

    # sweep file beats config file
    assert _resolve_counts(args, {"networks": 8}, {"networks": 7, "channels": 70}) == (8, 70)

    # paper scale beats both files
    args = parser.parse_args(base + ["--paper-scale"])
    assert _resolve_counts(args, {"networks": 8}, {"networks": 7}) == PAPER_SCALE

    # explicit flags beat everything, including paper scale
    args = parser.parse_args(base + ["--paper-scale", "--n-net", "4"])
    assert _resolve_counts(args, {}, {}) == (4, PAPER_SCALE[1])
    args = parser.parse_args(base + ["--n-net", "4", "--n-ch", "44"])
    assert _resolve_counts(args, {"networks": 8}, {"networks": 7}) == (4, 44)


def test_mode_flags_are_recorded_in_run(scenario, tmp_path):
    # perfect CSI must not crash and must change the numbers
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ("--config", scenario, "--q-list", "1", "--l-list", "100",
            "--n-net", "2", "--n-ch", "10", "--seed", "3")
    assert run_cli(*args, "--out", out_a) == 0
    assert run_cli(*args, "--perfect-csi", "--out", out_b) == 0
    a, b = read_csv(out_a)[0], read_csv(out_b)[0]
    assert a["mean_se_bps_hz"] != b["mean_se_bps_hz"]
