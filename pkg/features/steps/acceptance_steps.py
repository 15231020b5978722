import math

import numpy as np
from behave import given, when, then

from netharvest.config import RunConfig
from netharvest.dynamics import SimConfig, build_scenario
from netharvest.growth_policy import growth_model
from netharvest.network_model import build_network, extraction_pattern
from netharvest.spectral import long_run_shares
from netharvest.verify import VerifySettings
from scenario_utils import parse_labels, parse_parameters, run_cli

EXAMPLE_WEIGHTS = [[0.0, 0.3, 0.2], [0.4, 0.0, 0.1], [0.25, 0.35, 0.0]]
EXAMPLE_STOCK = [0.4, 0.3, 0.3]
REPORT_FILES = ("report.txt", "report.kv")


@given('the three-node example scenario with growth {family} "{parameters}" on nodes "{nodes}"')
def step_given_example_scenario(context, family, parameters, nodes):
    network = build_network(EXAMPLE_WEIGHTS)
    sc = build_scenario(network, extraction_pattern(network.n, parse_labels(nodes)),
                        growth_model(family, **parse_parameters(parameters)), 0.05, EXAMPLE_STOCK)
    context.run = RunConfig(scenario=sc, sim=SimConfig(), verify=VerifySettings())
    context.sc = sc


@when('I run netharvest "{command}" twice on the reference scenario "{name}"')
def step_run_twice(context, command, name):
    context.reports = []
    for _ in range(2):
        code = run_cli(context, command, context.scenario_files[name])
        assert code == 0, f"Run of {command} on {name} exited with {code}"
        context.reports.append({file: (context.out_dir / file).read_bytes() for file in REPORT_FILES})


@then('the reference quantities should match to twelve digits')
def step_assert_reference_quantities(context):
    mismatched = []
    for row in context.table:
        actual = context.values[row['quantity']]
        expected = float(row['value'])
        if not math.isclose(actual, expected, rel_tol=1e-12):
            mismatched.append(f"{row['quantity']}={actual!r} (expected {expected})")
    assert len(mismatched) == 0, f"Found {len(mismatched)} reference quantities off at 12 digits: {mismatched}"


@then('the final shares should match the long-run shares within {tol:g}')
def step_assert_final_shares_long_run(context, tol):
    expected = long_run_shares(context.sc.operator, context.sc.pattern, context.theta)
    final = context.traj.shares[-1]
    gap = float(np.linalg.norm(final - expected))
    assert gap <= tol, f"Final shares {final} are {gap:.3g} away from the long-run shares {expected}"


@then('both runs should produce byte-identical reports')
def step_assert_identical_reports(context):
    first, second = context.reports
    different = [file for file in REPORT_FILES if first[file] != second[file]]
    assert len(different) == 0, f"Reports differ between runs: {different}"
