import csv
import io
import json
import math
import subprocess
import sys

import pytest

import multicopy.strategies as strategies
from multicopy.cli import BOUNDS_COLUMNS, SWEEP_COLUMNS, run
from multicopy.ensemble import MeasurementAngle, collective_error, make_ensemble


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, buf.getvalue()


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestBounds:
    def test_header_and_row(self):
        code, out = call("bounds", "--c", "0.5", "--q0", "0.6", "--n", "2")
        assert code == 0
        assert out.splitlines()[0] == ",".join(BOUNDS_COLUMNS)
        (row,) = table(out)
        assert float(row["pbar_unanimity"]) == pytest.approx(0.025, abs=1e-15)
        assert float(row["chernoff_lambda"]) == pytest.approx(0.25, abs=1e-15)

    def test_orthogonal_rows(self):
        _, out = call("bounds", "--c", "0", "--q0", "0.5", "--n-min", "1", "--n-max", "3")
        rows = table(out)
        assert [r["n"] for r in rows] == ["1", "2", "3"]
        for r in rows:
            for k in ("pbar_collective", "pbar_unanimity", "pbar_majority"):
                assert float(r[k]) < 1e-30

    def test_collective_value(self):
        _, out = call("bounds", "--c", "0.8", "--q0", "0.5", "--n", "3")
        assert float(table(out)[0]["pbar_collective"]) == pytest.approx(0.07050727596384138, abs=1e-15)

    def test_seventeen_digits(self):
        _, out = call("bounds", "--c", "0.8", "--q0", "0.5", "--n", "3")
        row = out.splitlines()[1].split(",")
        value = collective_error(make_ensemble(0.8, 0.5), 3)
        assert row[3] == format(value, ".17g")
        assert float(row[3]) == value

    def test_enum_cap_blanks_majority(self):
        _, out = call("bounds", "--c", "0.5", "--q0", "0.5", "--n-min", "2", "--n-max", "3", "--enum-cap", "2")
        rows = table(out)
        assert rows[0]["pbar_majority"] != "" and rows[1]["pbar_majority"] == ""

    def test_byte_for_byte(self):
        a = call("bounds", "--c", "0.3", "--q0", "0.7", "--n-min", "1", "--n-max", "6")
        assert a == call("bounds", "--c", "0.3", "--q0", "0.7", "--n-min", "1", "--n-max", "6")


class TestAdaptive:
    def test_equal_priors(self):
        _, out = call("adaptive", "--c", "0.5", "--q0", "0.5", "--n", "3")
        rows = table(out)
        assert float(rows[0]["phi_given_last0"]) == pytest.approx(math.pi / 4, abs=1e-15)
        assert float(rows[0]["phi_given_last1"]) == pytest.approx(math.pi / 4, abs=1e-15)
        assert float(rows[1]["r_r"]) == pytest.approx(math.sqrt(0.9375), abs=1e-15)
        assert float(rows[1]["p_r"]) == pytest.approx(0.9330127018922193, abs=1e-15)

    def test_final_row_is_collective(self):
        _, out = call("adaptive", "--c", "0.8", "--q0", "0.5", "--n", "3")
        assert float(table(out)[-1]["pbar_after_r"]) == pytest.approx(0.07050727596384138, abs=1e-15)

    def test_single_n_only(self):
        assert call("adaptive", "--c", "0.5", "--q0", "0.5", "--n-min", "1", "--n-max", "3")[0] == 1


class TestSweep:
    def test_single_cell_matches_bounds(self):
        _, sweep = call("sweep", "--grid-c", "0.4", "--grid-q0", "0.3", "--n", "4")
        _, bounds = call("bounds", "--c", "0.4", "--q0", "0.3", "--n", "4")
        assert sweep.splitlines()[0] == ",".join(SWEEP_COLUMNS)
        assert sweep.splitlines()[1].startswith(bounds.splitlines()[1] + ",")

    def test_adaptive_equals_collective(self):
        _, out = call("sweep", "--grid-c", "0.5", "--grid-q0", "0.5", "--n-min", "1", "--n-max", "5")
        rows = table(out)
        assert len(rows) == 5
        for r in rows:
            assert abs(float(r["pbar_adaptive_exact"]) - float(r["pbar_collective"])) < 1e-10

    def test_cross_product(self):
        _, out = call("sweep", "--grid-c", "0.2,0.6", "--grid-q0", "0.5,0.7,0.9", "--n", "2")
        assert len(table(out)) == 6

    def test_empty_grid(self):
        assert call("sweep", "--grid-c", "", "--n", "2")[0] == 1


class TestFormats:
    def test_json_matches_csv(self):
        argv = ("sweep", "--grid-c", "0.3,0.8", "--grid-q0", "0.25", "--n-min", "1", "--n-max", "4")
        _, text = call(*argv)
        _, js = call(*argv, "--format", "json")
        payload = json.loads(js)
        assert payload["spec"]["command"] == "sweep"
        assert payload["spec"]["grid_c"] == [0.3, 0.8]
        for crow, jrow in zip(table(text), payload["rows"], strict=True):
            assert list(jrow) == SWEEP_COLUMNS
            for k, v in jrow.items():
                if isinstance(v, float):
                    assert abs(float(crow[k]) - v) <= 1e-15
                    assert float(crow[k]) == v
                else:
                    assert crow[k] == str(v)

    def test_out_path(self, tmp_path):
        target = tmp_path / "t.csv"
        code, out = call("bounds", "--c", "0.5", "--q0", "0.5", "--n", "1", "--out", str(target))
        assert code == 0 and out == ""
        assert target.read_bytes().startswith(b"n,c,q0,")


class TestEnumerateSimulate:
    def test_enumerate_unanimity(self):
        _, out = call("enumerate", "--c", "0.5", "--q0", "0.6", "--n", "2", "--strategy", "unanimity")
        (row,) = table(out)
        assert row["strategy"] == "unanimity"
        assert float(row["pbar_exact"]) == pytest.approx(0.025, abs=1e-15)

    def test_simulate_deterministic(self):
        argv = ("simulate", "--c", "0.5", "--q0", "0.5", "--n", "3", "--strategy", "unanimity", "--trials", "2000", "--seed", "42")
        a, b = call(*argv), call(*argv)
        assert a == b and a[0] == 0
        (row,) = table(a[1])
        assert row["trials"] == "2000" and row["seed"] == "42"
        assert float(row["exact_reference"]) == pytest.approx(0.0078125, abs=1e-16)


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ("bounds", "--c", "1.0", "--q0", "0.5", "--n", "2"),
            ("bounds", "--c", "0.5", "--q0", "1.5", "--n", "2"),
            ("bounds", "--c", "0.5", "--n", "2"),
            ("bounds", "--c", "0.5", "--q0", "0.5"),
            ("bounds", "--c", "0.5", "--q0", "0.5", "--n", "2", "--n-max", "4"),
            ("bounds", "--c", "0.5", "--q0", "0.5", "--n-min", "4", "--n-max", "2"),
            ("enumerate", "--c", "0.5", "--q0", "0.5", "--n", "30"),
            ("simulate", "--c", "0.5", "--q0", "0.5", "--n", "2", "--trials", "0"),
            ("simulate", "--c", "0.5", "--q0", "0.5", "--n", "2", "--seed", "-3"),
            ("verify", "--grid-c", "0.5,abc"),
            ("verify", "--n", "20"),
            ("bounds", "--c", "0.5", "--q0", "0.5", "--n", "2", "--format", "xml"),
            ("collective",),
            (),
        ],
    )
    def test_exit_one(self, argv, capsys):
        assert call(*argv)[0] == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("multicopy: error:")


class TestVerify:
    def test_small_grid_passes(self):
        code, out = call("verify", "--grid-c", "0.0,0.5", "--grid-q0", "0.5,0.75", "--n", "5")
        assert code == 0
        lines = out.splitlines()
        names = [line.split()[0] for line in lines]
        assert "check=adaptive_equals_collective" in names
        assert "check=stationarity" in names
        assert all(" status=PASS " in line for line in lines)

    def test_default_grid(self):
        assert call("verify")[0] == 0

    def test_orthogonal_residuals_vanish(self):
        _, js = call("verify", "--grid-c", "0", "--grid-q0", "0.3", "--n", "6", "--format", "json")
        for row in json.loads(js)["rows"]:
            assert row["max_residual"] < 1e-30, row

    def test_sign_mutation_detected(self, monkeypatch):
        real = strategies.adaptive_angle_closed

        def flipped(e, r, last):
            phi = real(e, r, last).phi
            # Negate cos(2 phi) for r >= 1 while keeping sin(2 phi).
            return MeasurementAngle(math.pi / 2 - phi) if r >= 1 else MeasurementAngle(phi)

        monkeypatch.setattr(strategies, "adaptive_angle_closed", flipped)
        code, out = call("verify", "--grid-c", "0.5", "--grid-q0", "0.5", "--n", "4")
        assert code == 2
        status = {line.split()[0]: line.split()[1] for line in out.splitlines()}
        assert status["check=adaptive_equals_collective"] == "status=FAIL"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "multicopy", "bounds", "--c", "0.5", "--q0", "0.6", "--n", "2"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("n,c,q0,pbar_collective")
