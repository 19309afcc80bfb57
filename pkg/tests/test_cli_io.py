import csv
import json
import logging

import pytest
from click.testing import CliRunner

from rake_select.cli import main
from rake_select.config import ConfigParseError, emit_config, parse_config
from rake_select.montecarlo import run_experiment, scenario_1, scenario_2, scenario_3
from rake_select.report import CSV_HEADER, emit_results, results_csv, solve_instance

SMALL = """\
[scenario]
name = "tiny"

[system]
K = 3
L = 6
M = 2
N_c = 9
ebn0_db = 10.0
seed = 5

[run]
trials = 3
selectors = ["conventional", "exhaustive", "hybrid_sphere"]
"""


def test_preset_names():
    assert parse_config("fig3") == scenario_1()
    assert parse_config("fig4") == scenario_2()
    assert parse_config("fig5") == scenario_3()
    assert parse_config('[scenario]\npreset = "fig3"\n') == scenario_1()


def test_override_precedence():
    assert parse_config("fig3", ["trials=50"]).trials == 50
    assert parse_config("fig3", ["run.trials=50"]).trials == 50
    text = '[scenario]\npreset = "fig4"\n[run]\ntrials = 20\n'
    assert parse_config(text).trials == 20
    assert parse_config(text, ["trials=7"]).trials == 7


def test_m_greater_than_l_names_both_values():
    bad = SMALL.replace("M = 2", "M = 9")
    with pytest.raises(ConfigParseError, match=r"M=9, L=6") as err:
        parse_config(bad)
    assert err.value.line == 7


@pytest.mark.parametrize(
    "text, line",
    [
        (SMALL + "\n[bogus]\nx = 1\n", 16),
        (SMALL.replace("seed = 5", "sede = 5"), 10),
        (SMALL.replace("K = 3", "K = = 3"), 5),
    ],
)
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigParseError) as err:
        parse_config(text)
    assert err.value.line == line
    assert f":{line}:" in str(err.value)


def test_unknown_override_rejected():
    with pytest.raises(ConfigParseError):
        parse_config("fig3", ["tirals=5"])


def test_defaults_are_logged(caplog):
    with caplog.at_level(logging.INFO, logger="rake_select.config"):
        plan = parse_config(SMALL)
    assert plan.base.decay_lambda == 0.1
    assert "default system.decay_lambda = 0.1" in caplog.text
    assert "default run.exhaustive_budget" in caplog.text


@pytest.mark.parametrize("plan", [scenario_1(17), scenario_2(3), scenario_3(9)])
def test_round_trip(plan):
    assert parse_config(emit_config(plan)) == plan


def test_round_trip_custom():
    plan = parse_config(SMALL)
    assert parse_config(emit_config(plan)) == plan


def test_csv_contract(tmp_path):
    plan = parse_config(SMALL)
    res = run_experiment(plan)
    paths = emit_results(res, tmp_path)
    raw = paths["results.csv"].read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + len(plan.selectors)
    assert rows[1][:4] == ["tiny", "none", "", "conventional"]
    assert float(rows[1][4]) == pytest.approx(res.rows[0].mean_linear, rel=1e-11)
    man = json.loads(paths["manifest.json"].read_text())
    assert man["seed"] == 5 and man["ridge_eps"] == 1e-10
    assert len(man["config_sha256"]) == 64
    assert "results.csv" in paths["plot_results.py"].read_text()
    assert parse_config(paths["config.toml"].read_text()) == plan


def test_fig3_csv_layout():
    res = run_experiment(scenario_1(trials=2))
    rows = list(csv.DictReader(results_csv(res).splitlines()))
    xs = sorted({float(r["sweep_value"]) for r in rows})
    assert xs == [0, 4, 8, 12, 16, 20, 24]
    assert {r["sweep_param"] for r in rows} == {"ebn0_db"}
    assert {r["selector"] for r in rows} == {s.value for s in scenario_1().selectors}


def test_solve_report_is_deterministic():
    plan = parse_config(SMALL)
    a, outs = solve_instance(plan, trial_index=1)
    b, _ = solve_instance(plan, trial_index=1)
    assert a == b
    for word in ("per-path SINR", "P/sigma_n2", "kkt stat", "gap bound", "exhaustive"):
        assert word in a
    assert "sphere_dual" in a and "hypercube_dual" in a


def test_cli_run_twice_is_byte_identical(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL)
    runner = CliRunner()
    for name in ("a", "b"):
        r = runner.invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path / name)])
        assert r.exit_code == 0, r.output
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    r = runner.invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "6"])
    assert (tmp_path / "c" / "results.csv").read_bytes() != (tmp_path / "a" / "results.csv").read_bytes()


def test_cli_exit_codes(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["run", "--config", "fig3", "--set", "trials=1", "--set", "exhaustive_budget=10",
                             "--out", str(tmp_path)])
    assert r.exit_code == 2
    r = runner.invoke(main, ["run", "--config", "fig3", "--set", "M=40", "--out", str(tmp_path)])
    assert r.exit_code == 1 and "M=40, L=15" in r.output
    r = runner.invoke(main, ["run", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)])
    assert r.exit_code == 1


def test_cli_solve():
    r = CliRunner().invoke(main, ["solve", "--config", "fig3", "--point", "5", "--trial", "2"])
    assert r.exit_code == 0, r.output
    assert "Eb/N0=20.000 dB" in r.output
