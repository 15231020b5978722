"""Spatial network, migration operator and extraction pattern.

Node labels are 1-based wherever they cross the public surface (arguments, error
attributes, reports); arrays are indexed from 0 internally.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import networkx as nx
import numpy as np

from netharvest.errors import (
    DimensionMismatch,
    InvalidParameter,
    NegativeWeight,
    NonzeroDiagonal,
    NotStronglyConnected,
    NotSymmetric,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Network:
    """Nonnegative flow weights b[i, j] from node i to node j, zero diagonal, strongly connected."""

    b: np.ndarray

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @cached_property
    def outflow(self) -> np.ndarray:
        return _frozen(self.b.sum(axis=1))


@dataclass(frozen=True)
class MigrationOperator:
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ExtractionPattern:
    n: int
    active: tuple[int, ...]

    @property
    def f(self) -> int:
        return len(self.active)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in self.active)

    @cached_property
    def xi(self) -> np.ndarray:
        """Indicator vector of the active nodes."""
        xi = np.zeros(self.n)
        xi[list(self.active)] = 1.0
        return _frozen(xi)

    @cached_property
    def e_matrix(self) -> np.ndarray:
        return _frozen(np.outer(self.xi, np.ones(self.n)))


def build_network(weights) -> Network:
    b = np.asarray(weights, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DimensionMismatch(f"Weight matrix must be square, got shape {b.shape}")
    n = b.shape[0]
    if n < 2:
        raise InvalidParameter(f"A network needs at least 2 nodes, got {n}")
    if not np.all(np.isfinite(b)):
        raise InvalidParameter("Weight matrix contains non-finite entries")

    negative = np.argwhere(b < 0)
    if negative.size:
        i, j = negative[0]
        raise NegativeWeight(int(i) + 1, int(j) + 1, float(b[i, j]))
    diagonal = np.flatnonzero(np.diag(b) != 0)
    if diagonal.size:
        i = diagonal[0]
        raise NonzeroDiagonal(int(i) + 1, float(b[i, i]))

    _check_strongly_connected(b)
    logger.debug("Accepted network with %d nodes and %d edges", n, int(np.count_nonzero(b)))
    return Network(b=_frozen(b))


def _check_strongly_connected(b: np.ndarray) -> None:
    """Forward and backward reachability from node 1 must both cover every node."""
    graph = nx.from_numpy_array((b > 0).astype(int), create_using=nx.DiGraph)
    nodes = set(graph.nodes)
    reachable = nx.descendants(graph, 0) | {0}
    unreachable = sorted(nodes - reachable)
    if unreachable:
        raise NotStronglyConnected(1, unreachable[0] + 1)
    reaching = nx.ancestors(graph, 0) | {0}
    stranded = sorted(nodes - reaching)
    if stranded:
        raise NotStronglyConnected(stranded[0] + 1, 1)


def migration_operator(net: Network) -> MigrationOperator:
    """D + B^T, with D the diagonal of negated row sums."""
    return MigrationOperator(matrix=_frozen(np.diag(-net.outflow) + net.b.T))


def net_inflow(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n,):
        raise DimensionMismatch(f"State has shape {x.shape}, network has {net.n} nodes")
    return migration_operator(net).matrix @ x


def fick_from_weights(w) -> Network:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch(f"Weight matrix must be square, got shape {w.shape}")
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    asymmetric = np.argwhere(np.abs(w - w.T) > SYMMETRY_TOL * scale)
    if asymmetric.size:
        i, j = asymmetric[0]
        raise NotSymmetric(int(i) + 1, int(j) + 1)
    return build_network(w)


def scaled(net: Network, factor: float) -> Network:
    if not factor > 0:
        raise InvalidParameter(f"Scale factor must be positive, got {factor}")
    return build_network(net.b * factor)


def extraction_pattern(n: int, nodes: Iterable[int]) -> ExtractionPattern:
    labels = list(nodes)
    if not labels:
        raise InvalidParameter("At least one active node is required")
    if len(set(labels)) != len(labels):
        raise InvalidParameter(f"Duplicate active nodes in {labels}")
    outside = [k for k in labels if not (1 <= k <= n)]
    if outside:
        raise InvalidParameter(f"Active nodes {outside} outside 1..{n}")
    return ExtractionPattern(n=n, active=tuple(sorted(k - 1 for k in labels)))


def min_inflow_weight(matrix: np.ndarray, pat: ExtractionPattern) -> float:
    """Smallest off-diagonal entry on the active rows of a migration-type matrix."""
    rows = np.array(matrix, dtype=float)[list(pat.active)]
    mask = np.ones_like(rows, dtype=bool)
    for k, i in enumerate(pat.active):
        mask[k, i] = False
    return float(rows[mask].min())


def binding_inflow(net: Network, node: int) -> tuple[float, int]:
    """(smallest inflow weight into `node`, its 1-based source) for a 1-based node label."""
    i = node - 1
    inflows = np.delete(net.b[:, i], i)
    sources = np.delete(np.arange(net.n), i)
    k = int(np.argmin(inflows))
    return float(inflows[k]), int(sources[k]) + 1


def inflow_threshold(net: Network, pat: ExtractionPattern) -> float:
    return min_inflow_weight(migration_operator(net).matrix, pat)


def stated_inflow_threshold(net: Network, pat: ExtractionPattern) -> float:
    """Same bound with the row orientation, min over i in F, j != i of b[i, j]."""
    return min_inflow_weight(net.b, pat)


def symmetric_ring(n: int, weight: float = 1.0) -> Network:
    w = np.zeros((n, n))
    for i in range(n):
        w[i, (i + 1) % n] = weight
        w[(i + 1) % n, i] = weight
    return fick_from_weights(w)


def random_network(n: int, rng: np.random.Generator, density: float = 0.5,
                   low: float = 0.05, high: float = 1.0, symmetric: bool = False,
                   max_tries: int = 100) -> Network:
    """Random strongly connected network; retried until connectivity holds."""
    for _ in range(max_tries):
        w = rng.uniform(low, high, size=(n, n)) * (rng.random((n, n)) < density)
        np.fill_diagonal(w, 0.0)
        if symmetric:
            w = np.triu(w) + np.triu(w).T
        try:
            return fick_from_weights(w) if symmetric else build_network(w)
        except NotStronglyConnected:
            continue
    raise InvalidParameter(f"No strongly connected network drawn in {max_tries} tries (n={n}, density={density})")
