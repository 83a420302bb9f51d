"""End-to-end tests of the command-line interface."""

import json

import jsonschema
import pytest
from click.testing import CliRunner

from app import cli, main
from config.settings import Settings
from core.optimizers import design_point_schema
from core.tradeoff import ModelTable, TradeoffModel, TradeoffPoint, predicted_log_complexity, write_points


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def models_file(tmp_path):
    path = tmp_path / "models.json"
    ModelTable.of([TradeoffModel(n=32, a=0.1, b=0.05)], "nearest").save(path)
    return str(path)


def test_bounds_csv_header(runner):
    result = runner.invoke(cli, ["bounds", "--n", "128", "--eps", "1e-5", "--snr-db-range", "0:1:4"])
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "snr_db,C,V,R"
    assert len(lines) == 6


def test_bounds_with_constrained_rate(runner, models_file):
    result = runner.invoke(cli, ["bounds", "--n", "32", "--eps", "1e-3", "--snr-db-range", "0:2:8",
                                 "--lmax", "1e-4", "--models", models_file, "--ts", "1e-6", "--tb", "1e-9"])
    assert result.exit_code == 0
    assert result.stdout.splitlines()[0] == "snr_db,C,V,R,M"


def test_complexity_json(runner):
    result = runner.invoke(cli, ["complexity", "--n", "128", "--k", "64", "--s", "2.5", "--json"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["tep_count"] == 22913
    assert report["order"]["order"].startswith("O(n*k^")


def test_latency_report(runner):
    result = runner.invoke(cli, ["latency", "--n", "128", "--k", "64", "--ts", "1e-6", "--tb", "1e-9",
                                 "--lmax", "1e-3"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["L_A"] == pytest.approx(656.64e-6)
    assert report["K_budget"] == pytest.approx(13625.0)
    assert report["order_bound"]["s_max_exact"] >= 0


def test_codes_gen_and_info(runner, tmp_path):
    path = tmp_path / "code.json"
    result = runner.invoke(cli, ["codes", "gen", "--ebch", "16", "11", "--out", str(path)])
    assert result.exit_code == 0
    info = runner.invoke(cli, ["codes", "info", str(path)])
    assert json.loads(info.stdout)["d_min"] == 4
    assert json.loads(info.stdout)["required_order"] == 0


def test_codes_gen_unachievable(runner):
    result = runner.invoke(cli, ["codes", "gen", "--ebch", "8", "5"])
    assert result.exit_code == 1
    assert "achievable" in result.stderr


def test_bad_flag_exit_code(capsys):
    assert main(["bounds", "--n", "128", "--eps", "2"]) == 1


def test_infeasible_exit_code(capsys, models_file):
    code = main(["optimize", "latency", "--k", "16", "--eps", "1e-3", "--rho-max-db", "-20",
                 "--ts", "1e-6", "--tb", "1e-9", "--models", models_file, "--n-range", "17:40"])
    assert code == 2
    payload = json.loads(capsys.readouterr().out)
    assert payload["feasible"] is False
    assert payload["reason"]


def test_optimize_output_matches_schema(runner, models_file, tmp_path):
    curve = tmp_path / "curve.csv"
    result = runner.invoke(cli, ["optimize", "latency", "--k", "16", "--eps", "1e-3", "--rho-max-db", "10",
                                 "--ts", "1e-6", "--tb", "1e-9", "--models", models_file,
                                 "--n-range", "17:60", "--csv-curve", str(curve)])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    payload.pop("interpolation")
    jsonschema.validate(payload, design_point_schema())
    assert payload["feasible"] is True
    assert curve.read_text().startswith("n,k,rho_r_db")


def test_optimize_schema_command(runner):
    result = runner.invoke(cli, ["optimize", "schema"])
    assert "properties" in json.loads(result.stdout)


def test_simulation_reproducible_across_workers(runner):
    args = ["simulate", "cep", "--n", "8", "--k", "4", "--s", "1", "--snr-db", "2", "--seed", "7",
            "--max-trials", "500", "--target-errors", "1000"]
    one = runner.invoke(cli, args + ["--workers", "1"])
    eight = runner.invoke(cli, args + ["--workers", "8"])
    assert one.exit_code == 0
    assert one.stdout == eight.stdout
    assert json.loads(one.stdout)["trials"] == 500


def test_simulation_needs_a_code(runner):
    result = runner.invoke(cli, ["simulate", "cep", "--snr-db", "2", "--seed", "1"])
    assert result.exit_code != 0


def test_config_file_defaults(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"complexity": {"n": 128, "k": 64, "s": "2"}}))
    result = runner.invoke(cli, ["--config", str(config), "complexity"])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["tep_count"] == 2081


def test_environment_defaults(monkeypatch, capsys):
    monkeypatch.setenv("URLLC_COMPLEXITY_N", "128")
    monkeypatch.setenv("URLLC_COMPLEXITY_K", "64")
    monkeypatch.setenv("URLLC_COMPLEXITY_S", "0")
    assert main(["complexity"]) == 0
    assert json.loads(capsys.readouterr().out)["K"] == 8260


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("URLLC_WORKERS", "3")
    monkeypatch.setenv("URLLC_MODEL_INTERPOLATION", "linear")
    loaded = Settings(_env_file=None)
    assert loaded.workers == 3
    assert loaded.model_interpolation == "linear"


def _printed_schema(runner) -> dict:
    result = runner.invoke(cli, ["optimize", "schema"])
    assert result.exit_code == 0
    return json.loads(result.stdout)


def test_codes_gen_ebch_pair(runner, tmp_path):
    path = tmp_path / "ebch16_7.json"
    result = runner.invoke(cli, ["codes", "gen", "--ebch", "16", "7", "--out", str(path)])
    assert result.exit_code == 0
    summary = json.loads(result.stdout)
    assert (summary["n"], summary["k"], summary["d_min"]) == (16, 7, 6)
    assert json.loads(path.read_text())["G"]["rows"] == 7


def test_fit_then_optimize_pipeline(runner, tmp_path):
    """Points file to model table to a feasible, schema-valid design point."""
    truth = TradeoffModel(n=32, a=0.08, b=0.05)
    points_path = tmp_path / "points.csv"
    write_points([TradeoffPoint(n=32, k=16, s=float(i), delta_rho_db=d,
                                log2_K=predicted_log_complexity(truth, d))
                  for i, d in enumerate([3.0, 1.5, 0.6, 0.2])], points_path)
    models_path = tmp_path / "models.json"
    fitted = runner.invoke(cli, ["fit", "--points", str(points_path), "--out", str(models_path)])
    assert fitted.exit_code == 0
    assert json.loads(fitted.stdout)[0]["a"] == pytest.approx(0.08, abs=1e-6)
    result = runner.invoke(cli, ["optimize", "energy", "--k", "16", "--eps", "1e-3", "--rho-max-db", "10",
                                 "--lmax", "1e-3", "--ts", "1e-6", "--tb", "1e-9",
                                 "--models", str(models_path), "--n-range", "17:90"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    jsonschema.validate(payload, _printed_schema(runner))
    assert payload["feasible"] is True
    assert 17 <= payload["n"] <= 90
    assert payload["k"] == 16


def test_code_to_design_pipeline(runner, tmp_path):
    """codes gen, simulate tradeoff, fit and optimize chained through files."""
    code = tmp_path / "ebch16_7.json"
    assert runner.invoke(cli, ["codes", "gen", "--ebch", "16", "7", "--out", str(code)]).exit_code == 0
    points = tmp_path / "points.csv"
    sim = runner.invoke(cli, ["simulate", "tradeoff", "--code", str(code), "--orders", "0,1",
                              "--eps", "1e-1", "--seed", "3", "--target-errors", "50",
                              "--max-trials", "20000", "--tol-db", "0.1", "--out", str(points)])
    assert sim.exit_code == 0
    models = tmp_path / "models.json"
    fitted = runner.invoke(cli, ["fit", "--points", str(points), "--out", str(models)])
    assert fitted.exit_code == 0
    assert json.loads(fitted.stdout)[0]["n"] == 16
    result = runner.invoke(cli, ["optimize", "latency", "--k", "7", "--eps", "1e-1", "--rho-max-db", "10",
                                 "--ts", "1e-6", "--tb", "1e-9", "--models", str(models),
                                 "--n-range", "8:40"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    jsonschema.validate(payload, _printed_schema(runner))
    assert payload["feasible"] is True
    assert payload["k"] == 7
    assert payload["L_A"] > payload["n"] * 1e-6


@pytest.mark.slow
def test_measured_pipeline(runner, tmp_path):
    """Simulate a trade-off dataset for eBCH(16,11), fit it and optimise energy."""
    code = tmp_path / "ebch16_11.json"
    assert runner.invoke(cli, ["codes", "gen", "--ebch", "16", "11", "--out", str(code)]).exit_code == 0
    points = tmp_path / "points.csv"
    sim = runner.invoke(cli, ["simulate", "tradeoff", "--code", str(code), "--orders", "0,1,2",
                              "--eps", "1e-2", "--seed", "5", "--target-errors", "100",
                              "--workers", "8", "--out", str(points)])
    assert sim.exit_code == 0
    models = tmp_path / "models.json"
    assert runner.invoke(cli, ["fit", "--points", str(points), "--out", str(models)]).exit_code == 0
    result = runner.invoke(cli, ["optimize", "energy", "--k", "11", "--eps", "1e-2", "--rho-max-db", "10",
                                 "--lmax", "1e-3", "--ts", "1e-6", "--tb", "1e-9", "--models", str(models),
                                 "--n-range", "12:100"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    jsonschema.validate(payload, _printed_schema(runner))
    assert payload["feasible"] is True
