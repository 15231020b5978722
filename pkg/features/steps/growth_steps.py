import math
import warnings

import numpy as np
from behave import given, when, then

from netharvest.errors import NegativeStockWarning
from netharvest.growth_policy import (
    Family,
    comparative_statics,
    game_policy,
    growth_model,
    phi_eval,
    planner_policy,
    printed_game_intercept,
    steady_mass_for_rate,
    steady_masses,
    utility_at_zero,
    value_from_coefficients,
)
from scenario_utils import capture_error, count, for_each_case, parse_parameters, tolerance


def _draw(family: Family, f: int, rng: np.random.Generator):
    """Random valid parameters; S2 sigma is kept above 1 - 1/f so the equilibrium stays interior."""
    if family is Family.S1:
        g = growth_model(family, Gamma=rng.uniform(0.5, 2.0), K=rng.uniform(2.0, 20.0), sigma=rng.uniform(1.2, 4.0))
        return g, rng.uniform(0.01, 0.2) * g.Gamma
    if family is Family.S2:
        low = max(0.2, 1 - 1 / f + 0.05)
        return growth_model(family, sigma=rng.uniform(low, 0.95), delta=rng.uniform(0.05, 0.5)), rng.uniform(0.01, 0.2)
    return growth_model(family, Gamma=rng.uniform(0.5, 2.0), K=rng.uniform(0.5, 5.0)), rng.uniform(0.01, 0.2)


def _draws(context, family: str, players=None):
    family = Family(family)
    cases = []
    for seed in range(count(context, 'PARAMETER_DRAWS')):
        rng = np.random.default_rng(seed)
        f = players if players is not None else int(rng.integers(1, 5))
        g, rho = _draw(family, f, rng)
        cases.append((seed, f, g, rho))
    return cases


@given('the growth family S1 with Gamma {Gamma:g}, K {K:g} and sigma {sigma:g}')
def step_given_s1(context, Gamma, K, sigma):
    context.growth = growth_model("S1", Gamma=Gamma, K=K, sigma=sigma)


@given('the growth family S3 with Gamma {Gamma:g} and K {K:g}')
def step_given_s3(context, Gamma, K):
    context.growth = growth_model("S3", Gamma=Gamma, K=K)


@given('the growth model {family} with parameters "{parameters}"')
def step_given_growth_model(context, family, parameters):
    context.growth = growth_model(family, **parse_parameters(parameters))


@when('I build the growth model {family} with parameters "{parameters}"')
def step_build_growth_model(context, family, parameters):
    capture_error(context, growth_model, family, **parse_parameters(parameters))


@when('I compute the policies for {f:d} players with rho {rho:g}')
def step_compute_policies(context, f, rho):
    g = context.growth
    planner = planner_policy(g, f, rho)
    game = game_policy(g, f, rho)
    steady = steady_masses(g, f, rho)
    context.planner = planner
    context.values = {
        "theta_star": planner.theta, "theta_hat": game.theta,
        "A_planner": planner.A, "B_planner": planner.B, "A_game": game.A, "B_game": game.B,
        "m_bar": steady.m_bar, "m_star": steady.m_star, "m_hat": steady.m_hat, "delta_f": steady.delta_f,
    }


@when('I compute the equilibrium policy for {f:d} players with rho {rho:g}')
def step_compute_game_policy(context, f, rho):
    capture_error(context, game_policy, context.growth, f, rho)


@when('I ask for the steady mass at aggregate rate {rate:g}')
def step_steady_mass(context, rate):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        context.steady_mass = steady_mass_for_rate(context.growth, rate)
    context.caught_warnings = [w.category for w in caught]


@when('I compute the comparative statics for {f:d} players with rho {rho:g}')
def step_comparative_statics(context, f, rho):
    context.statics = comparative_statics(context.growth, f, rho)


@when('I draw random {family} parameters and players')
def step_draw_parameters(context, family):
    identity_tol = tolerance(context, 'IDENTITY_TOL')

    def check(case):
        seed, f, g, rho = case
        steady = steady_masses(g, f, rho)
        planner, game = planner_policy(g, f, rho), game_policy(g, f, rho)
        for label, m, rate in (("m_bar", steady.m_bar, 0.0), ("m_star", steady.m_star, f * planner.theta),
                               ("m_hat", steady.m_hat, f * game.theta)):
            gap = abs(phi_eval(g, m) - rate)
            if gap > identity_tol * max(1.0, rate):
                return False, f"phi({label}) - rate = {gap:.3g} (seed={seed}, f={f})"
        return True, None

    for_each_case(context, _draws(context, family), check, 'steady_state_failures')


@when('I draw random {family} parameters with {f:d} players')
def step_draw_parameters_with_players(context, family, f):
    context.draws = _draws(context, family, players=f)


@then('the policy values should be')
def step_assert_policy_values(context):
    mismatched = []
    for row in context.table:
        actual = context.values[row['quantity']]
        expected = float(row['value'])
        if not math.isclose(actual, expected, rel_tol=1e-6, abs_tol=1e-12):
            mismatched.append(f"{row['quantity']}={actual!r} (expected {expected})")
    assert len(mismatched) == 0, f"Found {len(mismatched)} mismatched policy values: {mismatched}"


@then('the planner value at mass {m:g} should be about {value:g}')
def step_assert_planner_value(context, m, value):
    actual = value_from_coefficients(context.growth, context.planner, m)
    assert math.isclose(actual, value, rel_tol=1e-5), f"V({m}) = {actual}, expected about {value}"


@then('the planner long-run mass should be exp({exponent:g})')
def step_assert_m_star(context, exponent):
    assert math.isclose(context.values["m_star"], math.exp(exponent), rel_tol=1e-12), \
        f"m_star = {context.values['m_star']}, expected exp({exponent})"


@then('the equilibrium long-run mass should be exp({exponent:g})')
def step_assert_m_hat(context, exponent):
    assert math.isclose(context.values["m_hat"], math.exp(exponent), rel_tol=1e-12), \
        f"m_hat = {context.values['m_hat']}, expected exp({exponent})"


@then('the tabulated equilibrium intercept for {f:d} players with rho {rho:g} should differ from the derived one')
def step_assert_printed_intercept_differs(context, f, rho):
    derived = game_policy(context.growth, f, rho).B
    printed = printed_game_intercept(context.growth, f, rho)
    assert not math.isclose(derived, printed, rel_tol=1e-6), f"Both intercepts equal {derived}"


@then('the growth rate at mass {mass:g} should be {rate:g}')
def step_assert_growth_rate(context, mass, rate):
    actual = phi_eval(context.growth, mass)
    assert math.isclose(actual, rate, rel_tol=1e-9, abs_tol=1e-6), f"phi({mass}) = {actual}, expected {rate}"


@then('the utility at zero should be {value} for {family}')
def step_assert_utility_at_zero(context, value, family):
    parameters = {"S1": dict(Gamma=1, K=10, sigma=2), "S2": dict(sigma=0.5, delta=0.1), "S3": dict(Gamma=1, K=2)}
    actual = utility_at_zero(growth_model(family, **parameters[family]))
    assert actual == float(value), f"u(0) for {family} is {actual}, expected {value}"


@then('a negative-stock warning should be issued')
def step_assert_negative_stock_warning(context):
    assert NegativeStockWarning in context.caught_warnings, f"Warnings issued: {context.caught_warnings}"


@then('the steady mass should be {value:g}')
def step_assert_steady_mass(context, value):
    assert context.steady_mass == value, f"Steady mass is {context.steady_mass}, expected {value}"


@then('every draw should satisfy the steady-state identities')
def step_assert_steady_states(context):
    failed = context.steady_state_failures
    assert len(failed) == 0, f"Found {len(failed)} draws violating the steady-state identities: {failed}"


@then('every draw should extract more in equilibrium than under the planner')
def step_assert_overextraction(context):
    def check(case):
        seed, f, g, rho = case
        steady = steady_masses(g, f, rho)
        if not steady.delta_f > 0:
            return False, f"delta_f = {steady.delta_f:.3g}"
        if not steady.m_hat < steady.m_star:
            return False, f"m_hat {steady.m_hat:.6g} >= m_star {steady.m_star:.6g}"
        return True, None

    for_each_case(context, context.draws, check, 'overextraction_failures')
    failed = context.overextraction_failures
    assert len(failed) == 0, f"Found {len(failed)} draws where competition does not deplete the stock: {failed}"


@then('every draw should coincide with the planner')
def step_assert_single_player(context):
    def check(case):
        seed, f, g, rho = case
        planner, game = planner_policy(g, f, rho), game_policy(g, f, rho)
        if not (math.isclose(planner.theta, game.theta, rel_tol=1e-12)
                and math.isclose(planner.B, game.B, rel_tol=1e-12, abs_tol=1e-12)):
            return False, f"planner ({planner.theta}, {planner.B}) vs game ({game.theta}, {game.B})"
        return True, None

    for_each_case(context, context.draws, check, 'single_player_failures')
    failed = context.single_player_failures
    assert len(failed) == 0, f"Found {len(failed)} single-player draws differing from the planner: {failed}"


@then('the long-run mass should fall with rho and rise with K')
def step_assert_comparative_statics(context):
    statics = context.statics
    assert statics["rho"] < 0, f"dm*/drho = {statics['rho']}"
    assert statics["K"] > 0, f"dm*/dK = {statics['K']}"
