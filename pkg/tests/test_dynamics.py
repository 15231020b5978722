import numpy as np
import pytest

from netharvest.config import parse_config
from netharvest.dynamics import SimConfig, discounted_payoff, integrate_closed_loop, integrate_feedback
from netharvest.growth_policy import game_policy
from netharvest.spectral import share_propagator


@pytest.fixture
def s1(reference_scenarios):
    return parse_config(reference_scenarios["s1_reference"]).scenario


@pytest.fixture
def s1_threshold(reference_scenarios):
    return parse_config(reference_scenarios["s1_threshold"]).scenario


def test_shares_follow_the_linear_share_equation_for_uneven_rates(s1):
    rates = np.array([0.05, 0.02, 0.0])
    cfg = SimConfig(horizon=10.0, quadrature_points=101)
    traj = integrate_feedback(s1, rates, cfg)

    # Y' = (D + B^T - r e^T + <e, r> I) Y, independent of the growth term
    share_matrix = s1.operator.matrix - np.outer(rates, np.ones(s1.n)) + rates.sum() * np.eye(s1.n)
    expected = share_propagator(share_matrix, traj.shares[0], traj.times[::10])
    assert np.abs(traj.shares[::10] - expected).max() < 1e-7


def test_orthant_exit_is_timed_between_grid_points(s1_threshold):
    cfg = SimConfig(horizon=2.0, quadrature_points=3)
    traj = integrate_feedback(s1_threshold, np.array([5.0, 0.0, 0.0]), cfg)
    assert not traj.admissible
    assert traj.violation_node == 1
    assert traj.violation_time < 0.5


def test_symmetric_equilibrium_pays_every_player_the_same(s1):
    game = game_policy(s1.growth, s1.f, s1.rho)
    traj = integrate_closed_loop(s1, game.theta, SimConfig(horizon=50.0))
    assert traj.admissible
    payoffs = discounted_payoff(traj, s1, per_player=True, pc=game)
    assert payoffs.shape == (s1.f,)
    assert payoffs == pytest.approx(np.full(s1.f, payoffs[0]), rel=1e-12)
