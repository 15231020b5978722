"""Eigen-analysis of the migration operator and its extraction-shifted versions."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from netharvest.errors import (
    DominantEigenvalueNotZero,
    DominantVectorNotPositive,
    InvalidParameter,
    MatchingFailed,
    NullSpaceDimensionNot1,
)
from netharvest.network_model import ExtractionPattern, MigrationOperator, min_inflow_weight

logger = logging.getLogger(__name__)

ZERO_EIGENVALUE_TOL = 1e-9
NEGATIVE_ENTRY_TOL = 1e-9
CLAMP_TOL = 1e-12
SINGULAR_COND = 1e12
THETA2_BISECTION_TOL = 1e-8
THETA2_SCAN_POINTS = 20000
POLE_OFFSET = 1e-6


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    zeta: np.ndarray
    lambda2_real: float
    spectral_gap: float


@dataclass(frozen=True)
class ShiftedSpectralData:
    theta: float
    matrix: np.ndarray
    zeta_theta: np.ndarray
    eigenvalues: np.ndarray
    metzler: bool
    positive: bool


@dataclass(frozen=True)
class SpectralShiftReport:
    theta: float
    max_deviation: float
    tolerance: float
    passed: bool


def sort_spectrum(values: np.ndarray) -> np.ndarray:
    """Descending real part; ties broken by descending imaginary part."""
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((-values.imag, -values.real))
    return values[order]


def _normalize_share(vec: np.ndarray) -> tuple[np.ndarray, bool]:
    """Scale so the largest-magnitude entry is positive and entries sum to one.

    Returns the vector and whether it is nonnegative up to NEGATIVE_ENTRY_TOL. Tiny
    negatives are clamped to zero only for vectors that pass.
    """
    vec = np.asarray(vec)
    vec = np.real(vec / vec[np.argmax(np.abs(vec))])
    positive = bool(vec.min() >= -NEGATIVE_ENTRY_TOL)
    if positive:
        vec = np.where(vec < 0, 0.0, vec)
    total = vec.sum()
    if total > 0:
        vec = vec / total
    return vec, positive


def eigen_decompose(op: MigrationOperator) -> SpectralData:
    values, vectors = linalg.eig(op.matrix)
    scale = max(1.0, float(np.abs(op.matrix).max()))
    distance = np.abs(values.real) + np.abs(values.imag)
    k = int(np.argmin(distance))
    if distance[k] > ZERO_EIGENVALUE_TOL * scale:
        raise DominantEigenvalueNotZero(f"No eigenvalue within {ZERO_EIGENVALUE_TOL} of 0; nearest is {values[k]}")
    if np.count_nonzero(distance <= ZERO_EIGENVALUE_TOL * scale) > 1:
        raise DominantEigenvalueNotZero("Eigenvalue 0 is not simple; the network is not strongly connected")

    others = sort_spectrum(np.delete(values, k))
    if others.size and others[0].real >= 0:
        raise DominantEigenvalueNotZero(f"Eigenvalue {others[0]} has nonnegative real part")

    zeta, positive = _normalize_share(vectors[:, k])
    if not positive or zeta.min() <= 0:
        raise DominantVectorNotPositive(f"Dominant vector {zeta} is not strictly positive")
    zeta.setflags(write=False)

    eigenvalues = np.concatenate([[0.0 + 0.0j], others])
    eigenvalues.setflags(write=False)
    lambda2_real = float(others[0].real)
    return SpectralData(eigenvalues=eigenvalues, zeta=zeta, lambda2_real=lambda2_real, spectral_gap=abs(lambda2_real))


def shift_matrix(op: MigrationOperator, pat: ExtractionPattern, theta: float) -> np.ndarray:
    """M_theta = D + B^T - theta E + f theta I."""
    return op.matrix - theta * pat.e_matrix + pat.f * theta * np.eye(op.n)


def zeta_theta(op: MigrationOperator, pat: ExtractionPattern, theta: float) -> tuple[np.ndarray, bool]:
    """Null vector of M_theta with unit sum, and its positivity flag.

    For theta > 0 this solves (D + B^T + f theta I) z = theta xi, whose solution sums to one.
    """
    if theta < 0:
        raise InvalidParameter(f"theta must be nonnegative, got {theta}")
    if theta == 0:
        return np.array(eigen_decompose(op).zeta), True
    shifted = op.matrix + pat.f * theta * np.eye(op.n)
    if np.linalg.cond(shifted) > SINGULAR_COND:
        raise NullSpaceDimensionNot1(f"-f*theta = {-pat.f * theta} is an eigenvalue of D + B^T")
    vec = linalg.solve(shifted, theta * pat.xi)
    return _normalize_share(vec)


def shifted_matrix(op: MigrationOperator, pat: ExtractionPattern, theta: float) -> ShiftedSpectralData:
    matrix = shift_matrix(op, pat, theta)
    zeta, positive = zeta_theta(op, pat, theta)
    off_diagonal = matrix[~np.eye(op.n, dtype=bool)]
    return ShiftedSpectralData(
        theta=theta,
        matrix=matrix,
        zeta_theta=zeta,
        eigenvalues=sort_spectrum(linalg.eigvals(matrix)),
        metzler=bool(off_diagonal.min() >= -CLAMP_TOL),
        positive=positive,
    )


def long_run_shares(op: MigrationOperator, pat: ExtractionPattern, theta: float) -> np.ndarray:
    zeta, _ = zeta_theta(op, pat, theta)
    return zeta / zeta.sum()


def _positive_at(op: MigrationOperator, pat: ExtractionPattern, theta: float) -> bool:
    try:
        return zeta_theta(op, pat, theta)[1]
    except NullSpaceDimensionNot1:
        return zeta_theta(op, pat, theta * (1 + 1e-9))[1]


def _positive_on_grid(op: MigrationOperator, pat: ExtractionPattern, thetas: np.ndarray) -> np.ndarray:
    """Positivity flags of zeta_theta for every positive theta in `thetas`, solved as one batch."""
    shifted = op.matrix[None, :, :] + pat.f * thetas[:, None, None] * np.eye(op.n)[None, :, :]
    rhs = thetas[:, None, None] * np.asarray(pat.xi)[None, :, None]
    try:
        vecs = np.linalg.solve(shifted, rhs)[:, :, 0]
    except np.linalg.LinAlgError:
        return np.array([_positive_at(op, pat, float(t)) for t in thetas])
    pivots = vecs[np.arange(thetas.size), np.argmax(np.abs(vecs), axis=1)]
    return (vecs / pivots[:, None]).min(axis=1) >= -NEGATIVE_ENTRY_TOL


def theta_limits(op: MigrationOperator, pat: ExtractionPattern,
                 spectral: Optional[SpectralData] = None) -> tuple[float, float]:
    """(theta1, theta2): the spectral-gap bound and the supremum of positivity of zeta_theta.

    Positivity can be lost and regained, so theta2 is the first loss on a uniform grid over
    [0, cap], refined by bisection. The grid also carries the points -Re(lambda_i)/f from both
    sides, where D + B^T + f theta I comes close to singular. math.inf is returned when
    positivity holds across the whole scan.
    """
    spectral = spectral or eigen_decompose(op)
    theta1 = spectral.spectral_gap / pat.f
    cap = 10 * max(min_inflow_weight(op.matrix, pat), 0.0) + 10 * theta1

    poles = -spectral.eigenvalues[1:].real / pat.f
    poles = poles[(poles > 0) & (poles <= cap)]
    grid = np.unique(np.concatenate([
        np.linspace(0.0, cap, THETA2_SCAN_POINTS + 1)[1:],
        poles * (1 - POLE_OFFSET),
        poles * (1 + POLE_OFFSET),
    ]))
    failing = np.flatnonzero(~_positive_on_grid(op, pat, grid))
    if not failing.size:
        logger.debug("zeta_theta stays positive up to the scan cap %.6g", cap)
        return theta1, math.inf

    k = int(failing[0])
    lo, hi = (float(grid[k - 1]) if k else 0.0), float(grid[k])
    while hi - lo > THETA2_BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _positive_at(op, pat, mid):
            lo = mid
        else:
            hi = mid
    logger.debug("theta2 bracketed in [%.10g, %.10g]", lo, hi)
    return theta1, hi


def _greedy_match(expected: np.ndarray, observed: np.ndarray) -> list[tuple[int, int]]:
    if expected.size != observed.size:
        raise MatchingFailed(f"Cannot match {expected.size} eigenvalues against {observed.size}")
    distance = np.abs(expected[:, None] - observed[None, :])
    pairs = []
    for _ in range(expected.size):
        i, j = np.unravel_index(np.argmin(distance), distance.shape)
        pairs.append((int(i), int(j)))
        distance[i, :] = np.inf
        distance[:, j] = np.inf
    return pairs


def verify_spectral_shift(op: MigrationOperator, pat: ExtractionPattern, theta: float,
                          tolerance: float = 1e-8) -> SpectralShiftReport:
    """Max distance between the nonzero spectrum of M_theta and {lambda_i + f theta}."""
    base = eigen_decompose(op).eigenvalues
    expected = np.concatenate([[0.0], base[1:] + pat.f * theta])
    observed = linalg.eigvals(shift_matrix(op, pat, theta))
    deviations = [abs(expected[i] - observed[j]) for i, j in _greedy_match(expected, observed) if i != 0]
    max_deviation = float(max(deviations, default=0.0))
    return SpectralShiftReport(theta=theta, max_deviation=max_deviation, tolerance=tolerance,
                               passed=max_deviation <= tolerance)


def share_propagator(matrix: np.ndarray, y0: Sequence[float], times: Sequence[float]) -> np.ndarray:
    """Rows e^{M t} y0 for each t in `times`."""
    y0 = np.asarray(y0, dtype=float)
    return np.array([linalg.expm(matrix * t) @ y0 for t in times])


def uniform_share_propagator(matrix: np.ndarray, y0: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """e^{M k dt} y0 for k = 0..steps via powers of one exponential; y0 may hold several columns."""
    step = linalg.expm(matrix * dt)
    out = np.empty((steps + 1,) + np.shape(y0))
    out[0] = y0
    for k in range(steps):
        out[k + 1] = step @ out[k]
    return out
