import numpy as np
import pytest

from netharvest.network_model import (
    build_network,
    extraction_pattern,
    inflow_threshold,
    migration_operator,
    random_network,
    scaled,
    symmetric_ring,
)
from netharvest.verify import strategy_admissibility

RANDOM_NETWORKS = 50


def _pattern(rng, n):
    labels = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
    return extraction_pattern(n, [1 + int(k) for k in labels])


def test_sampled_admissibility_agrees_with_the_inflow_bound():
    rng = np.random.default_rng(11)
    disagreements = []
    for k in range(RANDOM_NETWORKS):
        n = int(rng.integers(2, 8))
        net = random_network(n, rng, density=0.7)
        pat = _pattern(rng, n)
        theta = float(rng.uniform(0.0, 1.0))
        report = strategy_admissibility(net, pat, theta, seed=k)
        if not report.agree:
            disagreements.append((k, theta, [(node.node, node.min_inflow) for node in report.nodes]))
    assert len(disagreements) == 0, f"Closed-form and sampled admissibility disagree on {disagreements}"


@pytest.mark.parametrize("seed", range(10))
def test_fick_operator_is_negative_semidefinite(seed):
    rng = np.random.default_rng(seed)
    net = random_network(int(rng.integers(2, 9)), rng, density=0.6, symmetric=True)
    matrix = migration_operator(net).matrix
    assert np.allclose(matrix, matrix.T)
    assert np.linalg.eigvalsh(matrix).max() <= 1e-12


def test_ring_operator_is_negative_semidefinite():
    assert np.linalg.eigvalsh(migration_operator(symmetric_ring(6)).matrix).max() <= 1e-12


def test_inflow_threshold_grows_with_the_weights():
    rng = np.random.default_rng(3)
    for _ in range(RANDOM_NETWORKS):
        n = int(rng.integers(2, 7))
        net = random_network(n, rng, density=0.8)
        pat = _pattern(rng, n)
        base = inflow_threshold(net, pat)

        extra = rng.uniform(0.0, 0.5, size=(n, n))
        np.fill_diagonal(extra, 0.0)
        assert inflow_threshold(build_network(net.b + extra), pat) >= base
        assert inflow_threshold(scaled(net, 2.0), pat) == pytest.approx(2 * base)
