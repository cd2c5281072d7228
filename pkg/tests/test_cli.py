"""Command-line interface: config resolution, artifacts, exit codes."""

from __future__ import annotations

import configparser
import csv
import json

import pytest

from macrojumps.cli import _RUNNERS, ConfigError, RunConfig, main, parse_config
from macrojumps.lindblad import EvolutionError
from macrojumps.model import ModelParams


# ---------------------------------------------------------------------------
# configuration resolution


def test_defaults_round_trip_through_ini():
    cfg = RunConfig(kind="simulate", model=ModelParams())
    assert parse_config(cfg.to_ini(), kind="simulate") == cfg


def test_nondefault_round_trip_through_ini():
    cfg = RunConfig(
        kind="fidelity", model=ModelParams(omega_m=0.25, delta=-30.0, n_max=1),
        seed=9, workers=3, n_traj=25, horizon_tdark=7.5,
        eta=(0.2, 1.0), t_wait=(0.1, 0.9), out="elsewhere",
    )
    assert parse_config(cfg.to_ini(), kind="fidelity") == cfg


def test_explicit_overrides_beat_the_file():
    text = "[model]\nomega_m = 0.2\n[run]\nseed = 4\n"
    cfg = parse_config(text, overrides={"omega_m": 0.1, "n_traj": 3}, kind="simulate")
    assert cfg.model.omega_m == 0.1
    assert cfg.seed == 4
    assert cfg.n_traj == 3


def test_empty_config_is_the_reference_parameter_set():
    cfg = parse_config("", kind="analytic")
    assert cfg.model.g == 1.0
    assert cfg.model.omega_m == 0.1
    assert cfg.model.delta == 50.0
    assert cfg.eta == (1.0,)


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[model]\nbogus = 1\n", "bogus"),
        ("[run]\nfrobnicate = 2\n", "frobnicate"),
        ("[nosuch]\nx = 1\n", "nosuch"),
        ("[model]\nomega_m = fast\n", "omega_m"),
    ],
)
def test_unknown_or_malformed_keys_are_named(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text, kind="simulate")


@pytest.mark.parametrize(
    "overrides, needle",
    [
        ({"eta": (1.5,)}, "eta"),
        ({"eta": (0.0,)}, "eta"),
        ({"t_wait": (-1.0,)}, "t_wait"),
        ({"n_traj": 0}, "n_traj"),
        ({"workers": 0}, "workers"),
        ({"g": -1.0}, "g"),
    ],
)
def test_range_violations_are_config_errors(overrides, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config("", overrides=overrides, kind="simulate")


# ---------------------------------------------------------------------------
# exit codes


def test_bad_flag_value_exits_one(tmp_path, capsys):
    code = main(["fidelity", "--eta", "1.5", "--out", str(tmp_path / "o")])
    assert code == 1
    assert "eta" in capsys.readouterr().err


def test_unknown_flag_exits_one(tmp_path, capsys):
    code = main(["simulate", "--frobnicate", "--out", str(tmp_path / "o")])
    assert code == 1


def test_missing_subcommand_exits_one(capsys):
    assert main([]) == 1


def test_help_exits_zero():
    assert main(["--help"]) == 0


def test_insufficient_statistics_exits_three(tmp_path, capsys):
    code = main([
        "telegraph", "--n-traj", "2", "--horizon-tdark", "0.01",
        "--seed", "1", "--out", str(tmp_path / "o"),
    ])
    assert code == 3
    assert "insufficient statistics" in capsys.readouterr().err


def test_undefined_derived_quantities_exit_one(tmp_path, capsys):
    code = main([
        "validate", "--omega-l", "0", "--omega-m", "0",
        "--out", str(tmp_path / "o"),
    ])
    assert code == 1
    assert "omega" in capsys.readouterr().err


def test_numerical_failures_exit_two(tmp_path, capsys, monkeypatch):
    def boom(cfg, out):
        raise EvolutionError("integration diverged")

    monkeypatch.setitem(_RUNNERS, "analytic", boom)
    code = main(["analytic", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# artifacts


def test_analytic_writes_summary_json(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["analytic", "--out", str(out)]) == 0
    table = capsys.readouterr().out
    assert "cooperativity" in table and "t_dark" in table
    summary = json.loads((out / "analytic.json").read_text())
    assert summary["effective"]["cooperativity"] == pytest.approx(10.0)
    assert summary["timescales"]["t_dark"] == pytest.approx(133333.33333333334)
    assert summary["timescales"]["ratio_dark_cav"] == pytest.approx(70.87486157253599)


def test_every_run_echoes_its_resolved_config(tmp_path):
    out = tmp_path / "o"
    assert main(["analytic", "--omega-m", "0.2", "--out", str(out)]) == 0
    cp = configparser.ConfigParser()
    cp.read(out / "config.ini")
    assert float(cp["model"]["omega_m"]) == 0.2
    assert cp["run"]["kind"] == "analytic"


def test_validate_reports_identity_checks(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["validate", "--out", str(out)]) == 0
    report = json.loads((out / "validate.json").read_text())
    assert report["identities"], "expected at least one identity check"
    assert all(c["pass"] for c in report["identities"])
    names = {c["check"] for c in report["identities"]}
    assert "collective_reset_equivalence" in names
    assert "jump_channels_annihilate_dark_state" in names
    assert report["regime"], "expected regime conditions"


def test_simulate_is_reproducible_across_worker_counts(tmp_path):
    args = ["simulate", "--n-traj", "4", "--horizon-tdark", "0.05", "--seed", "12"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--workers", "1", "--out", str(out1)]) == 0
    assert main(args + ["--workers", "2", "--out", str(out2)]) == 0
    events1 = (out1 / "events.csv").read_bytes()
    events2 = (out2 / "events.csv").read_bytes()
    assert events1 == events2
    with open(out1 / "events.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ["trajectory_id", "time", "channel"]


def test_fidelity_writes_one_row_per_grid_point(tmp_path, capsys):
    out = tmp_path / "o"
    code = main([
        "fidelity", "--eta", "0.8,1.0", "--t-wait", "0.005", "--n-traj", "4",
        "--seed", "2", "--out", str(out),
    ])
    assert code == 0
    with open(out / "fidelity.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eta", "t_over_Tdark", "F", "stderr", "n_samples", "mean_prep_time"]
    assert len(rows) == 3
    assert [r[0] for r in rows[1:]] == [repr(0.8), repr(1.0)]


def test_telegraph_writes_counts_and_stats(tmp_path, capsys):
    out = tmp_path / "o"
    code = main([
        "telegraph", "--n-traj", "2", "--horizon-tdark", "8",
        "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    report = json.loads((out / "telegraph.json").read_text())
    assert report[0]["eta"] == 1.0
    assert report[0]["dark"]["n"] >= 1
    with open(out / "counts_eta1.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ["bin_start", "count"]
