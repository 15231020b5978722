import math

import numpy as np
import pytest

from netharvest.errors import InvalidParameter, NonpositiveMass, NoninteriorPolicy, SideConditionViolated
from netharvest.growth_policy import (
    Family,
    Regime,
    candidate_value,
    game_policy,
    growth_model,
    mass_closed_form,
    max_hamiltonian,
    maximizing_control,
    phi_eval,
    planner_policy,
    printed_game_intercept,
    steady_masses,
    utility_eval,
)


@pytest.fixture
def s1():
    return growth_model("S1", Gamma=1.0, K=10.0, sigma=2.0)


@pytest.fixture
def s3():
    return growth_model("S3", Gamma=1.0, K=2.0)


def test_s1_reference_policies(s1):
    planner = planner_policy(s1, 2, 0.05)
    game = game_policy(s1, 2, 0.05)
    assert planner.theta == pytest.approx(0.2625, rel=1e-12)
    assert game.theta == pytest.approx(0.35, rel=1e-12)
    assert planner.A == pytest.approx(1 / 0.2625 ** 2, rel=1e-12)
    assert planner.B == pytest.approx(-2 * planner.A, rel=1e-12)


def test_s1_reference_steady_states(s1):
    steady = steady_masses(s1, 2, 0.05)
    assert steady.m_bar == pytest.approx(10.0, rel=1e-12)
    assert steady.m_star == pytest.approx(4.75, rel=1e-12)
    assert steady.m_hat == pytest.approx(3.0, rel=1e-12)
    assert steady.delta_f == pytest.approx(0.175, rel=1e-12)


def test_s1_reference_value_at_unit_mass(s1):
    assert candidate_value(s1, 2, 0.05, Regime.PLANNER, [0.4, 0.3, 0.3]) == pytest.approx(-43.5374, rel=1e-5)


def test_s3_steady_states_solve_growth_identity(s3):
    steady = steady_masses(s3, 2, 0.05)
    assert steady.m_star == pytest.approx(math.exp(0.9), rel=1e-12)
    assert steady.m_hat == pytest.approx(math.exp(-0.2), rel=1e-12)
    assert phi_eval(s3, steady.m_star) == pytest.approx(0.55, rel=1e-12)
    assert phi_eval(s3, steady.m_hat) == pytest.approx(1.1, rel=1e-12)


def test_s3_printed_intercept_only_agrees_for_unit_capacity(s3):
    assert printed_game_intercept(s3, 2, 0.05) != pytest.approx(game_policy(s3, 2, 0.05).B)
    unit = growth_model("S3", Gamma=1.0, K=1.0)
    assert printed_game_intercept(unit, 2, 0.05) == pytest.approx(game_policy(unit, 2, 0.05).B, rel=1e-12)


@pytest.mark.parametrize("family, params, mass, rate", [
    ("S1", dict(Gamma=1, K=10, sigma=2), 5.0, 0.5),
    ("S2", dict(sigma=0.5, delta=0.1), 4.0, 0.4),
    ("S3", dict(Gamma=1, K=2), math.e ** 2, 0.0),
])
def test_phi_examples(family, params, mass, rate):
    assert phi_eval(growth_model(family, **params), mass) == pytest.approx(rate, abs=1e-12)


def test_phi_is_vectorized(s1):
    values = phi_eval(s1, np.array([1.0, 10.0, 20.0]))
    assert values == pytest.approx([0.9, 0.0, -1.0])


def test_phi_rejects_nonpositive_mass(s1):
    with pytest.raises(NonpositiveMass):
        phi_eval(s1, 0.0)


def test_utility_pairings(s1, s3):
    assert utility_eval(s1, 2.0) == pytest.approx(-0.5)
    assert utility_eval(s3, math.e) == pytest.approx(1.0)
    assert utility_eval(growth_model("S2", sigma=0.5, delta=0.1), 4.0) == pytest.approx(4.0)


def test_hamiltonian_is_attained_at_the_maximizing_control(s1, s3):
    for g in (s1, s3):
        p = 0.7
        c = maximizing_control(g, p)
        assert max_hamiltonian(g, p) == pytest.approx(utility_eval(g, c) - c * p, rel=1e-12)


@pytest.mark.parametrize("family, params", [
    ("S1", dict(Gamma=1, K=10, sigma=0.5)),
    ("S2", dict(sigma=2.0, delta=0.1)),
    ("S3", dict(Gamma=1, K=2, delta=0.1)),
    ("S1", dict(Gamma=1, K=10)),
])
def test_growth_model_enforces_pairing(family, params):
    with pytest.raises(InvalidParameter):
        growth_model(family, **params)


def test_s2_equilibrium_needs_few_players():
    g = growth_model("S2", sigma=0.5, delta=0.1)
    assert game_policy(g, 1, 0.05).theta == pytest.approx(0.2)
    with pytest.raises(NoninteriorPolicy):
        game_policy(g, 2, 0.05)


def test_single_player_equilibrium_is_the_planner(s3):
    planner, game = planner_policy(s3, 1, 0.05), game_policy(s3, 1, 0.05)
    assert game.theta == pytest.approx(planner.theta)
    assert game.B == pytest.approx(planner.B)
    assert planner.family is Family.S3


def test_policy_threshold_flags_admissibility(s1):
    assert planner_policy(s1, 2, 0.05, threshold=0.25).globally_admissible is False
    assert game_policy(s1, 2, 0.05, threshold=0.5).globally_admissible is True


def test_mass_closed_form_limits(s1):
    assert mass_closed_form(s1, 1.0, 2, 0.2625, 0.0) == 1.0
    assert mass_closed_form(s1, 1.0, 2, 0.2625, 500.0) == pytest.approx(4.75, rel=1e-12)
    assert mass_closed_form(s1, 1.0, 2, 0.0, 500.0) == pytest.approx(10.0, rel=1e-12)


def test_mass_closed_form_side_condition(s1):
    with pytest.raises(SideConditionViolated):
        mass_closed_form(s1, 1.0, 2, 0.6, 1.0)


def test_zero_discount_rate_is_rejected(s1):
    with pytest.raises(InvalidParameter):
        planner_policy(s1, 2, 0.0)


@pytest.mark.parametrize("family, params, f, theta, m0", [
    ("S1", dict(Gamma=1, K=10, sigma=2), 2, 0.2625, 1.0),
    ("S1", dict(Gamma=1, K=10, sigma=2), 2, 0.0, 15.0),
    ("S2", dict(sigma=0.5, delta=0.1), 1, 0.2, 1.0),
    ("S3", dict(Gamma=1, K=2), 2, 0.3, 1.0),
    ("S3", dict(Gamma=1, K=2), 1, 0.1, 5.0),
])
def test_mass_closed_form_solves_the_mass_equation(family, params, f, theta, m0):
    g = growth_model(family, **params)
    h = 1e-5
    for t in (0.5, 1.0, 5.0, 20.0):
        m = mass_closed_form(g, m0, f, theta, t)
        slope = (mass_closed_form(g, m0, f, theta, t + h) - mass_closed_form(g, m0, f, theta, t - h)) / (2 * h)
        rhs = (phi_eval(g, m) - f * theta) * m
        assert slope == pytest.approx(rhs, abs=1e-6 * max(1.0, m)), f"residual at t={t}"
