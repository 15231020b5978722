import textwrap

import pytest

from netharvest.config import build_run_config, load_document, parse_config
from netharvest.errors import InvalidParameter, NotStronglyConnected, ParseError

BASE = textwrap.dedent("""\
    network:
      weights: [[0, 1], [1, 0]]
    active_nodes: [1]
    growth: {family: S1, Gamma: 1.0, K: 10.0, sigma: 2.0}
    rho: 0.05
    initial_stock: [1.0, 1.0]
""")


def test_defaults_fill_sim_and_verify_sections():
    run = build_run_config(load_document(BASE))
    assert run.sim.horizon == 100.0
    assert run.sim.step_cap == pytest.approx(1.0)
    assert run.sim.quadrature_points == 2048
    assert run.verify.grid_points == 41
    assert run.verify.multipliers == (0.5, 0.9, 1.1, 1.5)
    assert run.verify.seeds == tuple(range(20))
    assert run.sweep is None


def test_reference_scenarios_parse(reference_scenarios):
    run = parse_config(reference_scenarios["s1_reference"])
    sc = run.scenario
    assert sc.n == 3
    assert sc.pattern.labels == (1, 2)
    assert sc.network.b[1, 0] == pytest.approx(0.8)
    assert sc.m0 == pytest.approx(1.0)
    assert run.sweep.parameter == "rho"


def test_fick_network_parses(reference_scenarios):
    sc = parse_config(reference_scenarios["s3_reference"]).scenario
    assert sc.n == 2
    assert sc.growth.utility == "Log"


def test_missing_field_names_the_field():
    text = BASE.replace("rho: 0.05\n", "")
    with pytest.raises(ParseError) as excinfo:
        load_document(text)
    assert excinfo.value.field == "rho"


def test_schema_error_reports_the_line():
    text = BASE.replace("family: S1", "family: S9")
    with pytest.raises(ParseError) as excinfo:
        load_document(text)
    assert excinfo.value.field == "growth.family"
    assert excinfo.value.line == 4


def test_unknown_key_is_rejected():
    with pytest.raises(ParseError) as excinfo:
        load_document(BASE + "extra: 1\n")
    assert excinfo.value.field == "extra"
    assert excinfo.value.line == 7


def test_yaml_syntax_error_reports_the_line():
    with pytest.raises(ParseError) as excinfo:
        load_document("network:\n  weights: [[0, 1], [1, 0]\nrho: 0.05\n")
    assert excinfo.value.line is not None


def test_both_matrices_is_a_schema_error():
    text = BASE.replace("weights: [[0, 1], [1, 0]]", "weights: [[0, 1], [1, 0]]\n  fick: [[0, 1], [1, 0]]")
    with pytest.raises(ParseError):
        load_document(text)


def test_utility_pairing_is_a_domain_error():
    doc = load_document(BASE.replace("sigma: 2.0", "sigma: 0.5"))
    with pytest.raises(InvalidParameter):
        build_run_config(doc)


def test_disconnected_network_is_a_domain_error():
    text = BASE.replace("weights: [[0, 1], [1, 0]]", "weights: [[0, 1, 0], [1, 0, 0], [0, 0, 0]]") \
        .replace("initial_stock: [1.0, 1.0]", "initial_stock: [1.0, 1.0, 1.0]")
    with pytest.raises(NotStronglyConnected) as excinfo:
        build_run_config(load_document(text))
    assert excinfo.value.target == 3


def test_unreadable_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError):
        parse_config(tmp_path / "missing.yaml")
