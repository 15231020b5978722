from dataclasses import replace

import numpy as np
import pandas as pd
from behave import given, when, then

from netharvest.config import RunConfig
from netharvest.dynamics import (
    SimConfig,
    build_scenario,
    discounted_payoff,
    integrate_closed_loop,
    integrate_feedback,
    integrate_share_dynamics,
    long_run_state,
    write_trajectory_csv,
)
from netharvest.growth_policy import game_policy, growth_model, mass_closed_form, planner_policy
from netharvest.network_model import extraction_pattern, symmetric_ring
from netharvest.verify import VerifySettings
from scenario_utils import capture_error, load_reference, parse_vector, short_horizon, tolerance


def regime_rate(sc, regime: str) -> float:
    """Extraction rate per active node for "none", "planner" or "game"."""
    if regime == "none":
        return 0.0
    if regime == "planner":
        return planner_policy(sc.growth, sc.f, sc.rho).theta
    if regime == "game":
        return game_policy(sc.growth, sc.f, sc.rho).theta
    raise AssertionError(f"Unknown regime {regime}")


@given('the reference scenario "{name}"')
def step_given_reference(context, name):
    context.run = load_reference(context, name)
    context.sc = context.run.scenario


@given('the reference scenario "{name}" with rho {rho:g}')
def step_given_reference_with_rho(context, name, rho):
    run = load_reference(context, name)
    context.run = replace(run, scenario=replace(run.scenario, rho=rho))
    context.sc = context.run.scenario


@given('a symmetric ring scenario with {n:d} nodes and uniform stock')
def step_given_ring_scenario(context, n):
    sc = build_scenario(symmetric_ring(n), extraction_pattern(n, [1]),
                        growth_model("S1", Gamma=1.0, K=10.0, sigma=2.0), 0.05, np.full(n, 1.0 / n))
    context.run = RunConfig(scenario=sc, sim=SimConfig(), verify=VerifySettings())
    context.sc = sc


@when('I integrate the closed loop at the {regime} rate up to time {horizon:g}')
def step_integrate_closed_loop(context, regime, horizon):
    context.theta = regime_rate(context.sc, regime)
    context.cfg = short_horizon(context.run, horizon)
    context.traj = capture_error(context, integrate_closed_loop, context.sc, context.theta, context.cfg)


@when('I integrate the feedback rates "{rates}" up to time {horizon:g}')
def step_integrate_feedback(context, rates, horizon):
    context.cfg = short_horizon(context.run, horizon)
    context.traj = integrate_feedback(context.sc, parse_vector(rates), context.cfg)


@when('I integrate mass and shares separately at the planner rate using the {method} path')
def step_integrate_shares(context, method):
    context.theta = regime_rate(context.sc, "planner")
    context.cfg = short_horizon(context.run, 50.0)
    context.parts = integrate_share_dynamics(context.sc, context.theta, context.cfg, method=method)
    context.traj = integrate_closed_loop(context.sc, context.theta, context.cfg)


@when('I write the trajectory to "{file_name}"')
def step_write_trajectory(context, file_name):
    context.csv_path = write_trajectory_csv(context.traj, context.workdir / "dynamics" / file_name)


@when('I compute the discounted payoff with the stationary tail')
def step_discounted_payoff(context):
    capture_error(context, discounted_payoff, context.traj, context.sc, tail="stationary")


@then('the integrated mass should match the closed form within tolerance')
def step_assert_mass_closed_form(context):
    sc, traj = context.sc, context.traj
    assert traj is not None, f"Integration failed: {context.error}"
    exact = mass_closed_form(sc.growth, sc.m0, sc.f, context.theta, traj.times)
    gap = float(np.max(np.abs(traj.masses - exact) / exact))
    mass_tol = tolerance(context, 'MASS_TOL')
    assert gap <= mass_tol, f"Integrated mass deviates from the closed form by {gap:.3g} (tolerance {mass_tol})"


@then('the product of mass and shares should match the full closed loop within tolerance')
def step_assert_reconstruction(context):
    full, parts = context.traj.states, context.parts.states
    scale = np.abs(full).max(axis=1, keepdims=True)
    gap = float(np.max(np.abs(full - parts) / scale))
    mass_tol = tolerance(context, 'MASS_TOL')
    assert gap <= mass_tol, f"{context.parts.method} reconstruction is off by {gap:.3g} (tolerance {mass_tol})"


@then('the final state should match the long-run state within {tol:g}')
def step_assert_long_run_state(context, tol):
    expected = long_run_state(context.sc, context.theta)
    final = context.traj.states[-1]
    gap = float(np.abs(final - expected).max() / np.abs(expected).max())
    assert gap <= tol, f"Final state {final} differs from the long-run state {expected} by {gap:.3g}"


@then('the final mass should be {mass:g}')
def step_assert_final_mass(context, mass):
    final = context.traj.masses[-1]
    assert np.isclose(final, mass, rtol=1e-6), f"Final mass {final}, expected {mass}"


@then('the trajectory should stay in the nonnegative orthant')
def step_assert_admissible(context):
    traj = context.traj
    assert traj.admissible, f"Trajectory leaves the orthant at t={traj.violation_time} (node {traj.violation_node})"


@then('the trajectory should be flagged inadmissible at node {node:d}')
def step_assert_inadmissible(context, node):
    traj = context.traj
    assert not traj.admissible, "Trajectory was expected to leave the nonnegative orthant"
    assert traj.violation_node == node, f"Violation at node {traj.violation_node}, expected node {node}"
    assert traj.violation_time > 0, f"Violation time {traj.violation_time}"


@then('every share should stay at {share:g}')
def step_assert_uniform_shares(context, share):
    shares = context.traj.shares
    assert np.allclose(shares, share, atol=1e-9), f"Shares drift to {shares.min()}..{shares.max()}"


@then('the CSV should have the columns "{columns}"')
def step_assert_csv_columns(context, columns):
    context.frame = pd.read_csv(context.csv_path)
    expected = columns.split(",")
    assert list(context.frame.columns) == expected, f"Columns {list(context.frame.columns)} != {expected}"


@then('the CSV should have one row per quadrature point')
def step_assert_csv_rows(context):
    rows = len(context.frame)
    assert rows == context.cfg.quadrature_points, f"{rows} rows, expected {context.cfg.quadrature_points}"
