import math

import pytest
import yaml

from netharvest import cli
from netharvest.growth_policy import growth_model
from netharvest.verify import CheckResult


def test_parser_reads_flags(tmp_path):
    args = cli.build_parser().parse_args(
        ["simulate", "-f", "s.yaml", "--out", str(tmp_path), "--regime", "game", "--theta", "0.1"])
    assert args.subcommand == "simulate"
    assert args.regime == "game"
    assert args.theta == pytest.approx(0.1)
    assert args.format == "both"


def test_parser_rejects_unknown_subcommand():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["plot", "--config", "s.yaml"])


def test_sweep_outputs_leave_missing_equilibrium_as_nan():
    out = cli.sweep_outputs(growth_model("S2", sigma=0.5, delta=0.1), 2, 0.05)
    assert math.isnan(out["theta_hat"])
    assert math.isnan(out["delta_f"])
    assert out["m_bar"] == pytest.approx(100.0)


def test_sweep_outputs_on_s1():
    out = cli.sweep_outputs(growth_model("S1", Gamma=1.0, K=10.0, sigma=2.0), 2, 0.05)
    assert out["theta_star"] == pytest.approx(0.2625)
    assert out["delta_f"] == pytest.approx(0.175)


@pytest.mark.parametrize("f", [1, 2, 3, 4, 5])
def test_s3_aggregate_gap_grows_with_players(f):
    out = cli.sweep_outputs(growth_model("S3", Gamma=1.0, K=2.0), f, 0.05)
    assert out["delta_f"] == pytest.approx((f - 1) * (0.05 + 0.5), abs=1e-12)


def test_analyze_exits_zero(reference_scenarios, tmp_path):
    code = cli.main(["analyze", "--config", str(reference_scenarios["s1_reference"]), "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    lines = (tmp_path / "report.kv").read_text(encoding="utf-8").splitlines()
    assert "policy.planner.theta=0.2625" in lines
    assert (tmp_path / "report.txt").exists()


def test_failed_check_exits_three_after_writing_reports(reference_scenarios, tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "run_suite", lambda *args: [CheckResult("hjb.planner", False, 1.0, 1e-8)])
    code = cli.main(["verify", "--config", str(reference_scenarios["s1_reference"]), "--out", str(tmp_path),
                     "--format", "keyvalue"])
    assert code == cli.EXIT_VERIFICATION
    lines = (tmp_path / "report.kv").read_text(encoding="utf-8").splitlines()
    assert "verification.hjb.planner.passed=false" in lines


def test_missing_config_exits_two(tmp_path):
    code = cli.main(["analyze", "--config", str(tmp_path / "absent.yaml"), "--out", str(tmp_path)])
    assert code == cli.EXIT_VALIDATION
    assert "Invalid scenario" in (tmp_path / "netharvest.log").read_text(encoding="utf-8")


def test_fractional_player_sweep_is_rejected(reference_scenarios, tmp_path):
    document = yaml.safe_load(reference_scenarios["s3_reference"].read_text(encoding="utf-8"))
    document["sweep"]["values"] = [1, 2.7]
    config = tmp_path / "fractional.yaml"
    config.write_text(yaml.safe_dump(document), encoding="utf-8")
    code = cli.main(["sweep", "--config", str(config), "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_VALIDATION
    assert "whole player counts" in (tmp_path / "out" / "netharvest.log").read_text(encoding="utf-8")
    assert not (tmp_path / "out" / "sweep.csv").exists()
