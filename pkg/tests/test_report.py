import math

from netharvest.report import RunReport, emit_report, render_keyvalue, render_text


def _report():
    report = RunReport(subcommand="analyze")
    report.extend("policy", [
        {"name": "planner", "theta": 0.2625, "interior": True, "globally_admissible": None},
        {"name": "game", "theta": 0.35, "interior": True, "globally_admissible": False},
    ])
    report.add("eigenvalues", {"real": -0.8, "imag": 0.070710678118654752})
    report.sections["unused"] = []
    report.artifacts.append("trajectory_planner.csv")
    return report


def test_keyvalue_lines_are_sorted_and_named():
    lines = render_keyvalue(_report()).splitlines()
    assert lines == sorted(lines)
    assert "policy.planner.theta=0.2625" in lines
    assert "policy.game.globally_admissible=false" in lines
    assert "policy.planner.globally_admissible=NA" in lines
    assert "eigenvalues.0.imag=0.0707106781187" in lines
    assert "artifacts.0=trajectory_planner.csv" in lines


def test_text_report_has_header_sections_and_artifacts():
    text = render_text(_report())
    assert text.startswith("netharvest analyze\n")
    assert "[policy]" in text
    assert "0.0707107" in text
    assert "[unused]" not in text
    assert text.rstrip().endswith("[artifacts]\ntrajectory_planner.csv")


def test_nan_renders_as_nan():
    report = RunReport(subcommand="verify")
    report.add("verification", {"name": "game.deviation", "value": math.nan, "skipped": True})
    assert "verification.game.deviation.value=nan" in render_keyvalue(report).splitlines()
    assert "nan" in render_text(report)


def test_emit_report_is_deterministic(tmp_path):
    first = emit_report(_report(), tmp_path / "a", "keyvalue").read_bytes()
    second = emit_report(_report(), tmp_path / "b", "keyvalue").read_bytes()
    assert first == second
    assert (tmp_path / "a" / "report.kv").exists()
    assert emit_report(_report(), tmp_path / "a", "text").name == "report.txt"
