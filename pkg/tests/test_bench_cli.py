import csv
import json

import pytest

from src.main import main
from src.models.run_models import RunConfig
from src.services.config_loader import apply_scenario
from src.services.game_core import evaluate_attack
from tests.conftest import fixture_path, write_config


def run(capsys, *argv: str):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err

def read_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


class TestSolve:
    def test_defaults_match_direct_composition(self, tmp_path, capsys):
        code, out, _ = run(capsys, "solve", "--out", str(tmp_path))
        assert code == 0

        record = json.loads((tmp_path / "solution.json").read_text(encoding="utf-8"))
        assert json.loads(out) == record

        defender, game = apply_scenario(RunConfig())
        outcome = evaluate_attack(defender, game, 50, 0.1)
        assert record["k_star"] == outcome.k_star
        assert record["a"] == outcome.a
        assert record["eta"] == outcome.eta
        assert record["degenerate"] is False
        assert record["strategy"] == {"k": outcome.k_star, "L": 50, "epsilon": 0.1}

    def test_degenerate_is_not_an_error(self, tmp_path, capsys):
        config = write_config(tmp_path, {"game": {"c": 5.0}})
        code, _, _ = run(capsys, "solve", "--config", config, "--out", str(tmp_path))
        record = json.loads((tmp_path / "solution.json").read_text(encoding="utf-8"))
        assert code == 0
        assert record["k_star"] == 0.0
        assert record["degenerate"] is True

    def test_invalid_parameters_exit_code(self, tmp_path, capsys):
        config = write_config(tmp_path, {"game": {"alpha": -0.6, "c": 0.5}})
        code, _, err = run(capsys, "solve", "--config", config, "--out", str(tmp_path))
        assert code == 2
        assert "InvalidParametersError" in err

    def test_config_error_exit_code(self, tmp_path, capsys):
        config = write_config(tmp_path, {"attacker": {"k_grid": [1.5]}})
        code, _, err = run(capsys, "solve", "--config", config, "--out", str(tmp_path))
        assert code == 2
        assert "attacker.k_grid[0]" in err

    def test_baseline_preset_is_a_no_op(self, tmp_path, capsys):
        plain, preset = tmp_path / "plain", tmp_path / "preset"
        run(capsys, "solve", "--out", str(plain))
        run(capsys, "solve", "--scenario", "baseline", "--out", str(preset))
        assert (plain / "solution.json").read_bytes() == (preset / "solution.json").read_bytes()


class TestSimulate:
    def test_row_count_and_sidecar(self, tmp_path, capsys):
        code, _, _ = run(capsys, "simulate", "--out", str(tmp_path))
        assert code == 0

        rows = read_rows(tmp_path / "curve.csv")
        assert len(rows) == 35
        assert sum(1 for row in rows if float(row["k"]) == 0.0) == 5

        meta = json.loads((tmp_path / "curve.meta.json").read_text(encoding="utf-8"))
        assert meta["scenario"] == "baseline"
        assert len(meta["config_hash"]) == 64
        assert meta["rows"] == 35

    def test_identical_runs_identical_files(self, tmp_path, capsys):
        for name in ("first", "second"):
            run(capsys, "simulate", "--seeds", "0,1", "--out", str(tmp_path / name))
        for file_name in ("curve.csv", "curve.meta.json"):
            assert (tmp_path / "first" / file_name).read_bytes() == (tmp_path / "second" / file_name).read_bytes()

    def test_data_free_keeps_more_watermark(self, tmp_path, capsys):
        def wsr_at(scenario: str) -> float:
            out_dir = tmp_path / scenario
            run(capsys, "simulate", "--scenario", scenario, "--out", str(out_dir))
            values = [float(row["wsr"]) for row in read_rows(out_dir / "curve.csv") if float(row["k"]) > 0.0]
            return sum(values) / len(values)

        assert wsr_at("data-free") > wsr_at("baseline")


class TestFit:
    def test_reference_fixture(self, tmp_path, capsys):
        code, out, _ = run(capsys, "fit", "--curve", fixture_path("reference_curve.csv"), "--out", str(tmp_path))
        assert code == 0

        rows = read_rows(tmp_path / "fit_report.csv")
        assert len(rows) == 1
        assert list(rows[0].keys()) == [
            "curve", "alpha", "alpha_stderr", "a", "eps_res", "r2", "k_star_theory", "k_best_empirical", "n_points",
        ]
        assert 1.1 <= float(rows[0]["a"]) <= 1.4
        assert float(rows[0]["r2"]) >= 0.96
        assert json.loads(out)["failures"] == []

    def test_percent_fixture_matches_fraction_fixture(self, tmp_path, capsys):
        run(capsys, "fit", "--curve", fixture_path("reference_curve.csv"), "--out", str(tmp_path / "fraction"))
        run(capsys, "fit", "--curve", fixture_path("reference_curve_percent.csv"), "--out", str(tmp_path / "percent"))
        fraction = read_rows(tmp_path / "fraction" / "fit_report.csv")[0]
        percent = read_rows(tmp_path / "percent" / "fit_report.csv")[0]
        assert float(percent["a"]) == pytest.approx(float(fraction["a"]), rel=1e-6)

    def test_layer_table(self, tmp_path, capsys):
        curves = ["layer1.unit1.conv2.csv", "layer3.unit0.conv1.csv", "layer4.unit0.out.csv"]
        argv = ["fit", "--out", str(tmp_path)]
        for name in curves:
            argv += ["--curve", fixture_path("layers", name)]
        code, _, _ = run(capsys, *argv)
        assert code == 0

        rows = {row["curve"]: row for row in read_rows(tmp_path / "fit_report.csv")}
        assert set(rows) == {"layer1.unit1.conv2", "layer3.unit0.conv1", "layer4.unit0.out"}
        assert float(rows["layer1.unit1.conv2"]["a"]) == 0.0
        assert float(rows["layer1.unit1.conv2"]["k_star_theory"]) == 0.0
        assert float(rows["layer4.unit0.out"]["alpha"]) == pytest.approx(-0.04, abs=1e-9)

    def test_failures_do_not_stop_other_curves(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, "fit",
            "--curve", fixture_path("missing_anchor_curve.csv"),
            "--curve", fixture_path("flat_curve.csv"),
            "--out", str(tmp_path),
        )
        assert code == 3
        assert [row["curve"] for row in read_rows(tmp_path / "fit_report.csv")] == ["flat_curve"]
        failures = json.loads(out)["failures"]
        assert failures[0]["type"] == "MissingAnchorError"

    def test_unreadable_curve_is_a_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("k,acc,wsr,seed\n0.02,0.79,abc,1\n", encoding="utf-8")
        code, _, _ = run(capsys, "fit", "--curve", str(bad), "--out", str(tmp_path))
        assert code == 2

    def test_simulated_seeds_give_multiseed_table(self, tmp_path, capsys):
        run(capsys, "simulate", "--out", str(tmp_path))
        code, _, _ = run(capsys, "fit", "--out", str(tmp_path))
        assert code == 0

        table = read_rows(tmp_path / "multiseed_table.csv")
        assert [row["seed"] for row in table] == ["0", "1", "2", "3", "4", "mean", "std"]
        assert all(row["wsr_at_k"] != "" for row in table)

        reports = [row["curve"] for row in read_rows(tmp_path / "fit_report.csv")]
        assert reports == [f"curve:seed{seed}" for seed in range(5)] + ["curve:pooled"]

        summary = json.loads((tmp_path / "fit_report.json").read_text(encoding="utf-8"))["aggregate"]["curve"]
        assert set(summary) == {"mean", "std"}

    def test_simulate_then_fit_is_byte_identical(self, tmp_path, capsys):
        for name in ("first", "second"):
            out_dir = str(tmp_path / name)
            run(capsys, "simulate", "--seeds", "0,1,2", "--out", out_dir)
            run(capsys, "fit", "--out", out_dir)
        for file_name in ("curve.csv", "fit_report.csv", "multiseed_table.csv"):
            assert (tmp_path / "first" / file_name).read_bytes() == (tmp_path / "second" / file_name).read_bytes()


class TestSweep:
    def test_rho_regime_table(self, tmp_path, capsys):
        code, _, _ = run(capsys, "sweep", "--sweep", "defender.rho=0.004,0.008,0.016", "--out", str(tmp_path))
        assert code == 0

        rows = read_rows(tmp_path / "sweep.csv")
        assert [float(row["defender.rho"]) for row in rows] == [0.004, 0.008, 0.016]
        for row in rows:
            # a = gamma / rho * eta
            assert float(row["a"]) * float(row["defender.rho"]) / float(row["eta"]) == pytest.approx(0.01, rel=1e-9)
        for small, large in zip(rows, rows[1:]):
            ratio = float(small["a"]) / float(large["a"])
            assert ratio == pytest.approx(2.0 * float(small["eta"]) / float(large["eta"]), rel=1e-9)

    def test_k_star_non_decreasing_in_beta1(self, tmp_path, capsys):
        run(capsys, "sweep", "--sweep", "game.beta1=0.5,1,2,5,10", "--out", str(tmp_path))
        k_stars = [float(row["k_star"]) for row in read_rows(tmp_path / "sweep.csv")]
        assert k_stars == sorted(k_stars)

    def test_two_axes_cross_product(self, tmp_path, capsys):
        run(capsys, "sweep", "--sweep", "defender.rho=0.004,0.008", "--sweep", "defender.delta=0,1,2", "--out", str(tmp_path))
        rows = read_rows(tmp_path / "sweep.csv")
        assert len(rows) == 6
        assert list(rows[0].keys())[:2] == ["defender.rho", "defender.delta"]

    def test_empirical_mode(self, tmp_path, capsys):
        config = write_config(tmp_path, {"simulator": {"n": 2000}, "seeds": [0, 1]})
        code, _, _ = run(capsys, "sweep", "--config", config, "--sweep", "attacker.L=1,50", "--mode", "empirical", "--out", str(tmp_path))
        assert code == 0
        rows = read_rows(tmp_path / "sweep.csv")
        assert len(rows) == 2
        assert {"alpha", "a", "r2", "k_star_theory", "wsr_at_k"} <= set(rows[0])

    def test_empty_values(self, tmp_path, capsys):
        code, _, _ = run(capsys, "sweep", "--sweep", "defender.rho=", "--out", str(tmp_path))
        assert code == 2

    def test_unknown_key(self, tmp_path, capsys):
        code, _, err = run(capsys, "sweep", "--sweep", "defender.sparsity=0.1", "--out", str(tmp_path))
        assert code == 2
        assert "defender.sparsity" in err
