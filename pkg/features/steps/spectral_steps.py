import numpy as np
from behave import given, when, then

from netharvest.errors import SpectralError
from netharvest.network_model import extraction_pattern, migration_operator, random_network, symmetric_ring
from netharvest.spectral import (
    ZERO_EIGENVALUE_TOL,
    eigen_decompose,
    long_run_shares,
    shift_matrix,
    shifted_matrix,
    theta_limits,
    uniform_share_propagator,
    verify_spectral_shift,
)
from scenario_utils import count, for_each_case, parse_vector, tolerance


def _operator(context):
    return migration_operator(context.network)


@given('the symmetric ring with {n:d} nodes')
def step_given_ring(context, n):
    context.network = symmetric_ring(n)


@when('I decompose the migration operator')
def step_decompose(context):
    context.spectral = eigen_decompose(_operator(context))


@when('I compute the extraction-rate limits')
def step_theta_limits(context):
    context.theta1, context.theta2 = theta_limits(_operator(context), context.pattern)


@when('I build the shifted matrix for theta {theta:g}')
def step_shifted_matrix(context, theta):
    context.shifted = shifted_matrix(_operator(context), context.pattern, theta)


@when('I propagate the shares "{shares}" under theta {theta:g} up to time {horizon:g}')
def step_propagate_shares(context, shares, theta, horizon):
    op = _operator(context)
    steps = 400
    context.theta = theta
    context.propagated = uniform_share_propagator(shift_matrix(op, context.pattern, theta), parse_vector(shares),
                                                  horizon / steps, steps)


@when('I decompose random strongly connected networks')
def step_random_networks(context):
    spectral_tol = tolerance(context, 'SPECTRAL_TOL')

    def check(seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 11))
        op = migration_operator(random_network(n, rng, density=0.6))
        try:
            spectral = eigen_decompose(op)
        except SpectralError as e:
            return False, str(e)
        residual = np.abs(op.matrix @ spectral.zeta).max()
        if residual > ZERO_EIGENVALUE_TOL:
            return False, f"|M zeta| = {residual:.3g}"
        if np.any(spectral.eigenvalues[1:].real >= 0):
            return False, f"nonnegative eigenvalue among {spectral.eigenvalues[1:]}"
        theta = float(rng.uniform(0.0, 1.0))
        pattern = extraction_pattern(n, [1 + int(k) for k in rng.choice(n, size=int(rng.integers(1, n + 1)),
                                                                          replace=False)])
        report = verify_spectral_shift(op, pattern, theta, spectral_tol)
        if not report.passed:
            return False, f"shift identity off by {report.max_deviation:.3g} at theta={theta:.4f}"
        return True, None

    for_each_case(context, range(count(context, 'RANDOM_NETWORKS')), check, 'random_network_failures')


@then('the leading eigenvalue should be zero')
def step_assert_leading_zero(context):
    leading = context.spectral.eigenvalues[0]
    assert leading == 0, f"Leading eigenvalue is {leading}"


@then('the second eigenvalue should have real part {value:g}')
def step_assert_lambda2(context, value):
    assert np.isclose(context.spectral.lambda2_real, value, atol=1e-12), \
        f"Second eigenvalue real part {context.spectral.lambda2_real} != {value}"
    assert np.isclose(context.spectral.spectral_gap, abs(value), atol=1e-12)


@then('the long-run shares should be strictly positive and sum to one')
def step_assert_zeta(context):
    zeta = context.spectral.zeta
    assert zeta.min() > 0, f"Long-run shares {zeta} are not strictly positive"
    assert np.isclose(zeta.sum(), 1.0, atol=1e-14), f"Long-run shares sum to {zeta.sum()}"
    residual = np.abs(_operator(context).matrix @ zeta).max()
    assert residual < 1e-12, f"Long-run shares are not in the null space, residual {residual}"


@then('every long-run share should be {value:g}')
def step_assert_uniform_shares(context, value):
    assert np.allclose(context.spectral.zeta, value, atol=1e-12), f"Long-run shares {context.spectral.zeta}"


@then('theta1 should be {value:g}')
def step_assert_theta1(context, value):
    assert np.isclose(context.theta1, value, atol=1e-12), f"theta1 is {context.theta1}, expected {value}"


@then('theta2 should lie between {low:g} and {high:g}')
def step_assert_theta2(context, low, high):
    assert low < context.theta2 < high, f"theta2 is {context.theta2}, expected in ({low}, {high})"


@then('the spectrum shifted by theta {theta:g} should match within tolerance')
def step_assert_spectral_shift(context, theta):
    report = verify_spectral_shift(_operator(context), context.pattern, theta, tolerance(context, 'SPECTRAL_TOL'))
    assert report.passed, f"Shifted spectrum deviates by {report.max_deviation:.3g} at theta={theta}"


@then('the shifted matrix should be Metzler')
def step_assert_metzler(context):
    assert context.shifted.metzler, f"Shifted matrix at theta={context.shifted.theta} has negative off-diagonals"


@then('the shifted matrix should not be Metzler')
def step_assert_not_metzler(context):
    assert not context.shifted.metzler, f"Shifted matrix at theta={context.shifted.theta} is still Metzler"


@then('the shifted long-run shares should be positive')
def step_assert_zeta_theta_positive(context):
    shifted = context.shifted
    assert shifted.positive, f"zeta_theta {shifted.zeta_theta} is not positive at theta={shifted.theta}"
    residual = np.abs(shifted.matrix @ shifted.zeta_theta).max()
    assert residual < 1e-12, f"zeta_theta is not a null vector, residual {residual}"
    assert np.isclose(shifted.zeta_theta.sum(), 1.0)


@then('the shifted long-run shares should not be positive')
def step_assert_zeta_theta_not_positive(context):
    shifted = context.shifted
    assert not shifted.positive, f"zeta_theta {shifted.zeta_theta} is positive at theta={shifted.theta}"


@then('the propagated shares should keep unit sum')
def step_assert_unit_sum(context):
    sums = context.propagated.sum(axis=1)
    assert np.allclose(sums, 1.0, atol=1e-12), f"Share sums drift to {sums.min()}..{sums.max()}"


@then('the final shares should match the shifted long-run shares')
def step_assert_final_shares(context):
    expected = long_run_shares(_operator(context), context.pattern, context.theta)
    final = context.propagated[-1]
    assert np.allclose(final, expected, atol=1e-10), f"Final shares {final} != long-run shares {expected}"


@then('every random network should have a simple zero eigenvalue and positive shares')
def step_assert_random_networks(context):
    failed = context.random_network_failures
    assert len(failed) == 0, f"Found {len(failed)} failing random networks: {failed}"
