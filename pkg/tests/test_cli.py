import json

import pandas as pd
import pytest

from app.main import main
from app.models.domain_models import OuParams
from app.utils.helpers import file_digest, parse_month
from tests.conftest import DATA_DIR, carry_ratio_table, forward_csv, spot_csv, synthetic_history, write_text

FIXTURE = OuParams(k=2.0, theta=4 / 3, nu=0.2)


@pytest.fixture(scope="module")
def fixture_spot(tmp_path_factory):
    spot, _ = synthetic_history(FIXTURE, 20_000, seed=123, ratios=carry_ratio_table(), start_month=parse_month("0100-01"))
    return write_text(tmp_path_factory.mktemp("calib") / "spot.csv", spot_csv(spot))


@pytest.fixture
def history(tmp_path, base_params):
    spot, curves = synthetic_history(
        base_params, 48, seed=3, ratios=carry_ratio_table(), start_month=parse_month("2010-01")
    )
    return write_text(tmp_path / "spot.csv", spot_csv(spot)), write_text(tmp_path / "fwd.csv", forward_csv(curves))


def test_calibrate_recovers_fixture(fixture_spot, tmp_path):
    out = tmp_path / "out"
    assert main(["calibrate", "--spot", str(fixture_spot), "--output-dir", str(out)]) == 0
    params = json.loads((out / "params.json").read_text())
    assert params["k"] == pytest.approx(FIXTURE.k, rel=0.1)
    assert params["theta"] == pytest.approx(FIXTURE.theta, rel=0.1)
    assert params["nu"] == pytest.approx(FIXTURE.nu, rel=0.1)
    assert params["observations"] == 20_000
    assert params["start"] == "0100-01"

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "calibrate"
    assert manifest["inputs"]["spot"]["sha256"] == file_digest(fixture_spot)
    assert manifest["outputs"] == ["params.json"]


def test_calibrate_constant_series_fails(tmp_path):
    spot = write_text(tmp_path / "spot.csv", "month,spot\n2010-01,1.3\n2010-02,1.3\n2010-03,1.3\n")
    assert main(["calibrate", "--spot", str(spot), "--output-dir", str(tmp_path / "out")]) == 1
    assert not (tmp_path / "out").exists()


def test_sensitivity_budget_sweep(tmp_path):
    out = tmp_path / "out"
    code = main(["sensitivity", "--sweep", "L", "--values", "0.05,0.02,0.01", "--output-dir", str(out)])
    assert code == 0
    frame = pd.read_csv(out / "sensitivity.csv")
    assert list(frame.columns) == ["sweep_value", "tenor_months", "nominal"]
    assert len(frame) == 3 * 120
    occupied = frame[frame["nominal"].abs() > 1e-12].groupby("sweep_value")["tenor_months"].max()
    assert occupied[0.05] < occupied[0.02] < occupied[0.01]


def test_allocate_json_tables(tmp_path):
    out = tmp_path / "out"
    assert main(["allocate", "-L", "0.05", "--format", "json", "--output-dir", str(out)]) == 0
    rows = json.loads((out / "allocation.json").read_text())
    assert [r["tenor_months"] for r in rows] == [1, 2, 3, 4]
    assert sum(r["nominal"] for r in rows) == pytest.approx(1.0)
    assert len(json.loads((out / "profile.json").read_text())) == 120
    assert len(json.loads((out / "book.json").read_text())) == 4


def test_allocate_bad_cost_file(tmp_path, capsys):
    costs = write_text(tmp_path / "costs.csv", "tenor_months,annualized_cost\n3,0.0001\n12,oops\n")
    out = tmp_path / "out"
    code = main(["allocate", "--costs", str(costs), "--format", "json", "--output-dir", str(out)])
    assert code == 1
    assert not out.exists()
    err = capsys.readouterr().err
    assert '"error_code": "csv_format"' in err
    assert '"line": 3' in err


def test_calibrate_ragged_row_is_reported(tmp_path, capsys):
    spot = write_text(tmp_path / "spot.csv", "month,spot\n2020-01,1.2\n2020-02,1.3,9\n2020-03,1.4\n")
    code = main(["calibrate", "--spot", str(spot), "--format", "json", "--output-dir", str(tmp_path / "out")])
    assert code == 1
    err = capsys.readouterr().err
    assert '"error_code": "csv_format"' in err
    assert '"line": 3' in err


def test_allocate_rejects_positive_lower_bound(tmp_path):
    assert main(["allocate", "--a-lower", "0.5", "--output-dir", str(tmp_path / "out")]) == 1


def test_simulate_rejects_zero_paths(tmp_path):
    assert main(["simulate", "--paths", "0", "--output-dir", str(tmp_path)]) == 2


def test_simulate_needs_spot_and_forwards_together(history, tmp_path):
    spot, _ = history
    assert main(["simulate", "--spot", str(spot), "--output-dir", str(tmp_path / "out")]) == 2


def test_missing_input_file(tmp_path):
    assert main(["calibrate", "--spot", str(tmp_path / "nope.csv")]) == 2


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate", "--paths", "6", "--months", "24", "--seed", "9"]
    assert main(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--output-dir", str(tmp_path / "b"), "--workers", "2"]) == 0
    for name in ("cash_flows.csv", "nominals.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["paths"] == 6
    assert summary["max_hedge_deviation"] <= 1e-9
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 9
    assert manifest["runtime_seconds"] >= 0.0


def test_simulate_with_history_ratios(history, tmp_path):
    spot, forwards = history
    out = tmp_path / "out"
    code = main(
        ["simulate", "--paths", "2", "--months", "12", "--spot", str(spot), "--forwards", str(forwards),
         "--ranking", "ranked", "--costs", str(DATA_DIR / "reference_costs.csv"), "--output-dir", str(out)]
    )
    assert code == 0
    assert set(json.loads((out / "manifest.json").read_text())["inputs"]) == {"spot", "forwards", "costs"}


def test_backtest_equal_weight(history, tmp_path):
    spot, forwards = history
    out = tmp_path / "out"
    code = main(
        ["backtest", "--spot", str(spot), "--forwards", str(forwards), "--strategy", "equal_weight",
         "--ladder", "12", "--k", "0.4", "--theta", "1.3333", "--nu", "0.2", "--output-dir", str(out)]
    )
    assert code == 0
    summary = pd.read_csv(out / "summary.csv")
    assert summary["strategy"].tolist() == ["Eq 12M"]
    assert summary["n_months"].iloc[0] == 47
    monthly = pd.read_csv(out / "monthly_eq_12m.csv")
    assert len(monthly) == 48
    book = pd.read_csv(out / "book_eq_12m.csv")
    assert book["nominal"].sum() == pytest.approx(1.0)


def test_backtest_optimal_calibrates_in_sample(history, tmp_path):
    spot, forwards = history
    out = tmp_path / "out"
    code = main(
        ["backtest", "--spot", str(spot), "--forwards", str(forwards),
         "--costs", str(DATA_DIR / "reference_costs.csv"), "--output-dir", str(out)]
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["parameters"]["params"]) == {"k", "theta", "nu"}
    assert (out / "monthly_opt_l_0_01.csv").exists()


def test_help_states_units(capsys):
    assert main(["simulate", "--help"]) == 0
    text = " ".join(capsys.readouterr().out.split())
    assert "domestic currency per unit hedged" in text
    assert "horizon in months" in text


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "hedge-tenor" in capsys.readouterr().out
