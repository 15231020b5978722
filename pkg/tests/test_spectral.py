import math

import numpy as np
import pytest

from netharvest.network_model import extraction_pattern, migration_operator, random_network, symmetric_ring
from netharvest.spectral import long_run_shares, shifted_matrix, theta_limits, zeta_theta

DENSE_POINTS = 20000


def _random_case(rng):
    n = int(rng.integers(3, 7))
    op = migration_operator(random_network(n, rng))
    labels = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
    return op, extraction_pattern(n, [1 + int(k) for k in labels])


def _dense_min_share(op, pat, thetas):
    """Smallest entry of each zeta_theta relative to its largest magnitude."""
    systems = op.matrix[None] + pat.f * thetas[:, None, None] * np.eye(op.n)[None]
    z = np.linalg.solve(systems, thetas[:, None, None] * np.asarray(pat.xi)[None, :, None])[:, :, 0]
    return z.min(axis=1) / np.abs(z).max(axis=1)


@pytest.mark.parametrize("seed", range(40))
def test_theta2_is_the_first_loss_of_positivity(seed):
    op, pat = _random_case(np.random.default_rng(seed))
    theta1, theta2 = theta_limits(op, pat)
    assert theta1 > 0
    if math.isinf(theta2):
        return
    assert not zeta_theta(op, pat, theta2)[1]

    thetas = np.linspace(0.0, theta2, DENSE_POINTS + 1)[1:-1]
    thetas = thetas[thetas < theta2 * (1 - 1e-6)]
    worst = _dense_min_share(op, pat, thetas)
    assert worst.min() >= -1e-6, f"zeta_theta loses positivity at {thetas[worst.argmin()]:.6g} < theta2={theta2:.6g}"


def test_positive_window_before_theta2_is_never_skipped():
    rng = np.random.default_rng(1)
    for _ in range(60):
        op, pat = _random_case(rng)
        _, theta2 = theta_limits(op, pat)
        if math.isinf(theta2):
            continue
        for theta in np.linspace(0.0, theta2, 401)[1:-1]:
            assert zeta_theta(op, pat, float(theta))[1], f"zeta_theta not positive at {theta:.6g} < {theta2:.6g}"


def test_long_run_shares_are_continuous_in_theta():
    rng = np.random.default_rng(7)
    for _ in range(20):
        op, pat = _random_case(rng)
        theta1, theta2 = theta_limits(op, pat)
        upper = min(theta1, theta2)
        thetas = np.linspace(0.0, 0.9 * upper, 200)
        shares = np.array([long_run_shares(op, pat, float(t)) for t in thetas])
        jumps = np.abs(np.diff(shares, axis=0)).max(axis=1)
        assert jumps.max() < 0.05, f"Share path jumps by {jumps.max():.3g} between grid points"
        assert np.allclose(shares.sum(axis=1), 1.0)


def test_theta2_closes_the_positive_window_from_zero():
    rng = np.random.default_rng(5)
    for _ in range(30):
        op, pat = _random_case(rng)
        _, theta2 = theta_limits(op, pat)
        if math.isinf(theta2):
            continue
        flags = [shifted_matrix(op, pat, float(theta)).positive for theta in np.linspace(0.0, theta2, 300)[:-1]]
        assert all(flags), f"zeta_theta not positive on [0, {theta2:.6g})"
        assert not shifted_matrix(op, pat, theta2).positive


def test_ring_harvested_everywhere_never_loses_positivity():
    op = migration_operator(symmetric_ring(5))
    pat = extraction_pattern(5, range(1, 6))
    theta1, theta2 = theta_limits(op, pat)
    assert math.isinf(theta2)
    assert long_run_shares(op, pat, 3 * theta1) == pytest.approx(np.full(5, 0.2))
