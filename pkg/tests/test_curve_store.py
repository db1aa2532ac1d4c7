import json

import pytest

from src.errors import CurveFormatError
from src.models.run_models import REFERENCE_K_GRID
from src.models.sim_models import AttackSpec, ModelSpec
from src.services.curve_store import read_curve_csv, write_curve_csv, write_json
from src.services.prune_simulator import run_attack_curve
from tests.conftest import fixture_path


def write_text(tmp_path, name: str, text: str) -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestCurveCsv:
    def test_round_trip_is_lossless(self, tmp_path):
        curve = run_attack_curve(ModelSpec(n=400, eps_res_true=0.0063), AttackSpec(), REFERENCE_K_GRID, [0, 1, 2, 3, 4])
        path = str(tmp_path / "curve.csv")
        write_curve_csv(curve, path)
        loaded = read_curve_csv(path)
        assert len(loaded.points) == 35
        assert loaded.points == curve.points

    def test_output_format(self, tmp_path, reference_curve):
        path = tmp_path / "curve.csv"
        write_curve_csv(reference_curve, str(path))
        raw = path.read_bytes()
        assert raw.startswith(b"k,acc,wsr,seed\n")
        assert b"\r" not in raw
        assert len(raw.decode("utf-8").splitlines()) == 4

    def test_rows_sorted_by_seed_then_budget(self, tmp_path):
        path = write_text(tmp_path, "c.csv", "k,acc,wsr,seed\n0.05,0.7,0.8,1\n0,0.8,0.9,1\n0.05,0.7,0.8,0\n0,0.8,0.9,0\n")
        curve = read_curve_csv(path)
        assert [(p.seed, p.k) for p in curve.points] == [(0, 0.0), (0, 0.05), (1, 0.0), (1, 0.05)]

    def test_percent_flag(self):
        curve = read_curve_csv(fixture_path("reference_curve_percent.csv"))
        assert curve.points[0].wsr == pytest.approx(0.9039, abs=1e-15)
        assert curve.points[0].acc == pytest.approx(0.7947, abs=1e-15)
        assert curve.metadata["units"] == "percent"

    def test_units_override(self, tmp_path):
        path = write_text(tmp_path, "c.csv", "k,acc,wsr,seed\n0,79.47,90.39,0\n")
        assert read_curve_csv(path, units="percent").points[0].wsr == pytest.approx(0.9039, abs=1e-15)

    def test_seed_column_optional(self, tmp_path):
        path = write_text(tmp_path, "c.csv", "k,acc,wsr\n0,0.79,0.9\n0.05,0.78,0.85\n")
        assert {p.seed for p in read_curve_csv(path).points} == {0}

    def test_malformed_value_names_line(self, tmp_path):
        path = write_text(tmp_path, "c.csv", "k,acc,wsr,seed\n0,0.79,0.9,1\n0.02,0.79,abc,1\n")
        with pytest.raises(CurveFormatError) as exc_info:
            read_curve_csv(path)
        assert exc_info.value.line == 3
        assert "line 3" in str(exc_info.value)

    def test_out_of_range_names_line(self, tmp_path):
        path = write_text(tmp_path, "c.csv", "k,acc,wsr,seed\n0,0.79,1.2,0\n")
        with pytest.raises(CurveFormatError) as exc_info:
            read_curve_csv(path)
        assert exc_info.value.line == 2

    def test_percent_values_without_flag_rejected(self, tmp_path):
        path = write_text(tmp_path, "c.csv", "k,acc,wsr,seed\n0,79.47,90.39,0\n")
        with pytest.raises(CurveFormatError):
            read_curve_csv(path)

    @pytest.mark.parametrize(
        "text",
        [
            "k,wsr,acc,seed\n0,0.9,0.79,0\n",
            "0,0.79,0.9,0\n",
            "",
            "k,acc,wsr,seed\n0,0.79,0.9\n",
            "k,acc,wsr,seed\n0,0.79,0.9,x\n",
        ],
    )
    def test_rejects_bad_files(self, tmp_path, text):
        with pytest.raises(CurveFormatError):
            read_curve_csv(write_text(tmp_path, "c.csv", text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CurveFormatError):
            read_curve_csv(str(tmp_path / "absent.csv"))


class TestJson:
    def test_sorted_and_terminated(self, tmp_path):
        path = tmp_path / "out" / "x.json"
        write_json({"b": 1, "a": [1.5, None]}, str(path))
        text = path.read_text(encoding="utf-8")
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [1.5, None], "b": 1}
        assert [p.name for p in path.parent.iterdir()] == ["x.json"]
