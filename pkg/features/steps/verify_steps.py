import math

import numpy as np
from behave import when, then

from netharvest.dynamics import integrate_closed_loop
from netharvest.growth_policy import Regime, game_policy, planner_policy
from netharvest.verify import (
    cone_admissibility_probe,
    deviation_test,
    fundamental_identity_gap,
    gradient_transport_check,
    growth_bound_check,
    hjb_coefficient_residuals,
    hjb_parameter_sweep,
    hjb_residual_planner,
    hjb_residual_player,
    intercept_arbitration,
    log_grid,
    strategy_admissibility,
    transversality_monitor,
    value_vs_payoff,
)
from scenario_utils import capture_error, parse_vector, tolerance


@when('I evaluate the HJB residuals on the log-spaced mass grid')
def step_hjb_residuals(context):
    sc = context.sc
    identity_tol = tolerance(context, 'IDENTITY_TOL')
    grid = log_grid(sc.growth, context.run.verify.grid_points)
    context.planner = planner_policy(sc.growth, sc.f, sc.rho)
    context.game = game_policy(sc.growth, sc.f, sc.rho)
    context.residual_reports = [
        hjb_residual_planner(sc, context.planner, grid, identity_tol),
        hjb_residual_player(sc, context.game, grid, identity_tol),
    ]


@when('I sweep the HJB residuals over {seeds:d} parameter seeds')
def step_hjb_sweep(context, seeds):
    context.sweep_failures = hjb_parameter_sweep(context.sc, range(seeds), tolerance(context, 'IDENTITY_TOL'))


@when('I arbitrate the equilibrium intercept')
def step_arbitrate_intercept(context):
    context.arbitration = intercept_arbitration(context.sc, tolerance=tolerance(context, 'IDENTITY_TOL'))


@when('I compare the {regime} value with the simulated payoff')
def step_value_vs_payoff(context, regime):
    context.comparison = value_vs_payoff(context.sc, Regime(regime), context.run.sim, tolerance(context, 'PAYOFF_TOL'))


@when('I check the fundamental identity at {fraction:g} times the planner rate')
def step_fundamental_identity(context, fraction):
    sc = context.sc
    planner = planner_policy(sc.growth, sc.f, sc.rho)
    traj = integrate_closed_loop(sc, fraction * planner.theta, context.run.sim)
    assert traj.admissible, f"Feedback at {fraction} x theta* leaves the orthant at t={traj.violation_time}"
    context.identity_gap = fundamental_identity_gap(traj, sc, planner)


@when('I test unilateral deviations with multipliers "{multipliers}"')
def step_deviation_test(context, multipliers):
    capture_error(context, deviation_test, context.sc, tuple(parse_vector(multipliers)), context.run.sim,
                  tolerance(context, 'PAYOFF_TOL'))
    context.deviation = context.result


@when('I check strategy admissibility at the planner rate')
def step_strategy_admissibility(context):
    sc = context.sc
    theta = planner_policy(sc.growth, sc.f, sc.rho).theta
    context.admissibility = strategy_admissibility(sc.network, sc.pattern, theta)


@when('I probe the admissibility cone at the planner rate with radii "{radii}"')
def step_cone_probe_planner(context, radii):
    sc = context.sc
    theta = planner_policy(sc.growth, sc.f, sc.rho).theta
    context.radii = list(parse_vector(radii))
    context.probe = cone_admissibility_probe(sc, theta, context.radii, context.run.sim)


@when('I probe the admissibility cone at theta {theta:g} with radii "{radii}"')
def step_cone_probe(context, theta, radii):
    context.radii = list(parse_vector(radii))
    context.probe = capture_error(context, cone_admissibility_probe, context.sc, theta, context.radii, context.run.sim)


@then('the planner and player residuals should be within tolerance')
def step_assert_residuals(context):
    failed = [f"{r.regime.value}: {r.max_rel_residual:.3g}" for r in context.residual_reports if not r.passed]
    assert len(failed) == 0, f"Found {len(failed)} HJB residuals above tolerance: {failed}"


@then('the matched coefficient residuals should vanish')
def step_assert_coefficient_residuals(context):
    failed = []
    for pc in (context.planner, context.game):
        scale = max(1.0, abs(pc.A), abs(pc.B))
        for term, residual in hjb_coefficient_residuals(context.sc, pc).items():
            if abs(residual) > 1e-10 * scale:
                failed.append(f"{pc.regime.value}.{term}={residual:.3g}")
    assert len(failed) == 0, f"Found {len(failed)} nonzero coefficient residuals: {failed}"


@then('the value gradient should be orthogonal to migration')
def step_assert_gradient_transport(context):
    worst = gradient_transport_check(context.sc, context.planner)
    assert worst <= tolerance(context, 'IDENTITY_TOL'), f"<grad V, (D + B^T) x> reaches {worst:.3g} relative"


@then('no parameter seed should leave a residual above tolerance')
def step_assert_sweep(context):
    failed = context.sweep_failures
    assert len(failed) == 0, f"Found {len(failed)} failing parameter draws: {failed}"


@then('the derived intercept should pass and the tabulated intercept should fail')
def step_assert_arbitration(context):
    arbitration = context.arbitration
    assert arbitration.derived_passes, f"Derived intercept residual {arbitration.derived_residual:.3g}"
    assert not arbitration.printed_passes, f"Tabulated intercept residual {arbitration.printed_residual:.3g}"
    assert arbitration.adopted == "derived"


@then('the relative payoff gap should be within tolerance')
def step_assert_payoff_gap(context):
    comparison = context.comparison
    assert comparison.passed, \
        f"{comparison.regime.value} value {comparison.candidate} vs simulated {comparison.with_tail}: " \
        f"relative gap {comparison.rel_gap:.3g}"


@then('the candidate value should be about {value:g}')
def step_assert_candidate_value(context, value):
    candidate = context.comparison.candidate
    assert math.isclose(candidate, value, rel_tol=1e-5), f"Candidate value {candidate}, expected about {value}"


@then('the identity gap should be within tolerance')
def step_assert_identity_gap(context):
    payoff_tol = tolerance(context, 'PAYOFF_TOL')
    assert context.identity_gap <= payoff_tol, f"Fundamental identity gap {context.identity_gap:.3g} > {payoff_tol}"


@then('no deviation should gain more than the tolerance')
def step_assert_no_profitable_deviation(context):
    report = context.deviation
    assert report is not None, f"Deviation test failed: {context.error}"
    gains = [(o.multiplier, o.gain) for o in report.deviations if o.gain > 0]
    assert report.passed, f"Profitable deviations for player {report.player}: {gains} (baseline {report.baseline_payoff})"


@then('node {node:d} should fail admissibility with binding source {source:d}')
def step_assert_node_fails(context, node, source):
    found = next(n for n in context.admissibility.nodes if n.node == node)
    assert not found.passed, f"Node {node} passes with min inflow {found.min_inflow}"
    assert found.binding_source == source, f"Node {node} binds on source {found.binding_source}, expected {source}"


@then('node {node:d} should pass admissibility')
def step_assert_node_passes(context, node):
    found = next(n for n in context.admissibility.nodes if n.node == node)
    assert found.passed, f"Node {node} fails with min inflow {found.min_inflow} below {context.admissibility.theta}"


@then('the sampled admissibility should agree with the closed form')
def step_assert_admissibility_agrees(context):
    mismatched = [n.node for n in context.admissibility.nodes if n.passed != n.sampled_passed]
    assert len(mismatched) == 0, f"Sampled and closed-form admissibility disagree at nodes {mismatched}"


@then('the radius {radius:g} should be verified')
def step_assert_radius_verified(context, radius):
    verified = dict(context.probe.verified)
    assert verified.get(radius), f"Radius {radius} not verified: {context.probe.verified}"


@then('the largest verified radius should be one of the candidates')
def step_assert_largest_radius(context):
    largest = context.probe.largest_verified
    assert largest in context.radii, f"Largest verified radius {largest} not among {context.radii}"
    assert np.isclose(context.probe.center.sum(), 1.0), f"Probe center {context.probe.center} is not a share vector"


@then('the largest verified radius should be {radius:g}')
def step_assert_largest_radius_value(context, radius):
    assert context.probe is not None, f"Cone probe failed: {context.error}"
    largest = context.probe.largest_verified
    assert largest == radius, f"Largest verified radius is {largest}, expected {radius}: {context.probe.verified}"


@then('the largest verified radius should be below {radius:g}')
def step_assert_largest_radius_below(context, radius):
    assert context.probe is not None, f"Cone probe failed: {context.error}"
    largest = context.probe.largest_verified
    assert largest < radius, f"Largest verified radius {largest} is not below {radius}: {context.probe.verified}"


@then('the worst propagated share should be negative')
def step_assert_worst_share_negative(context):
    worst = context.probe.worst_share
    assert worst < 0, f"Worst propagated share is {worst}; no sampled start leaves the orthant"


@then('the growth bound should hold')
def step_assert_growth_bound(context):
    ok, reason = growth_bound_check(context.traj, context.sc)
    assert ok, f"Growth bound violated: {reason}"


@then('the discounted value should stay inside the decay envelope')
def step_assert_transversality(context):
    sc = context.sc
    report = transversality_monitor(context.traj, sc, planner_policy(sc.growth, sc.f, sc.rho))
    assert report.passed, f"e^(-rho t) V(X(t)) leaves its envelope; last value {report.last:.3g}"
