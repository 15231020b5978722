"""Growth families, utilities and the closed-form planner and equilibrium policies.

Family S1 pairs with CRRA utility (sigma > 1), S2 with CRRA (0 < sigma < 1) and S3 with
log utility. Powers of the mass are evaluated as exponentials of logarithms.
"""
import logging
import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np

from netharvest.errors import (
    InvalidParameter,
    NegativeStockWarning,
    NonpositiveConsumption,
    NonpositiveMass,
    NoninteriorPolicy,
    SideConditionViolated,
    ZeroTotalMass,
)
from netharvest.network_model import ExtractionPattern

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class Family(str, Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"


class Regime(str, Enum):
    PLANNER = "planner"
    GAME = "game"


PARAMETERS = {
    Family.S1: ("Gamma", "K", "sigma"),
    Family.S2: ("sigma", "delta"),
    Family.S3: ("Gamma", "K"),
}


@dataclass(frozen=True)
class GrowthModel:
    family: Family
    Gamma: Optional[float] = None
    K: Optional[float] = None
    sigma: float = 1.0
    delta: Optional[float] = None

    @property
    def utility(self) -> str:
        return "Log" if self.family is Family.S3 else "CRRA"

    def parameters(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAMETERS[self.family]}


@dataclass(frozen=True)
class PolicyCoefficients:
    regime: Regime
    family: Family
    f: int
    rho: float
    theta: float
    A: float
    B: float
    interior: bool
    globally_admissible: Optional[bool] = None

    def with_threshold(self, threshold: float) -> "PolicyCoefficients":
        return replace(self, globally_admissible=bool(self.theta < threshold))


@dataclass(frozen=True)
class SteadyStates:
    m_bar: float
    m_star: float
    m_hat: float
    delta_f: float


def growth_model(family: Union[str, Family], Gamma: Optional[float] = None, K: Optional[float] = None,
                 sigma: Optional[float] = None, delta: Optional[float] = None) -> GrowthModel:
    family = Family(family)
    given = {"Gamma": Gamma, "K": K, "sigma": sigma, "delta": delta}
    allowed = PARAMETERS[family]
    extra = [name for name, value in given.items() if value is not None and name not in allowed]
    if extra:
        raise InvalidParameter(f"{family.value} does not take parameters {extra}")
    missing = [name for name in allowed if given[name] is None]
    if missing:
        raise InvalidParameter(f"{family.value} requires parameters {missing}")

    if family in (Family.S1, Family.S3):
        if not Gamma > 0:
            raise InvalidParameter(f"{family.value} requires Gamma > 0, got {Gamma}")
        if not K > 0:
            raise InvalidParameter(f"{family.value} requires K > 0, got {K}")
    if family is Family.S1 and not sigma > 1:
        raise InvalidParameter(f"S1 requires sigma > 1 (CRRA pairing), got {sigma}")
    if family is Family.S2:
        if not 0 < sigma < 1:
            raise InvalidParameter(f"S2 requires 0 < sigma < 1 (CRRA pairing), got {sigma}")
        if not delta > 0:
            raise InvalidParameter(f"S2 requires delta > 0, got {delta}")
    return GrowthModel(
        family=family,
        Gamma=None if Gamma is None else float(Gamma),
        K=None if K is None else float(K),
        sigma=1.0 if family is Family.S3 else float(sigma),
        delta=None if delta is None else float(delta),
    )


def _positive(values: ArrayLike, error: type, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise error(f"{what} must be positive, got {values if values.ndim == 0 else values.min()}")
    return values


def _scalar(values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(values) == 0 else values


def _power(values: np.ndarray, exponent: float) -> np.ndarray:
    return np.exp(exponent * np.log(values))


def phi_eval(g: GrowthModel, m: ArrayLike) -> ArrayLike:
    m = _positive(m, NonpositiveMass, "Mass")
    if g.family is Family.S1:
        out = g.Gamma * (1 - _power(m, g.sigma - 1) / g.K)
    elif g.family is Family.S2:
        out = _power(m, g.sigma - 1) - g.delta
    else:
        out = g.Gamma * (1 - np.log(m) / g.K)
    return _scalar(out)


def utility_eval(g: GrowthModel, c: ArrayLike) -> ArrayLike:
    c = _positive(c, NonpositiveConsumption, "Consumption")
    if g.family is Family.S3:
        return _scalar(np.log(c))
    return _scalar(_power(c, 1 - g.sigma) / (1 - g.sigma))


def utility_at_zero(g: GrowthModel) -> float:
    """u(0): -inf for log and sigma > 1, zero for sigma < 1."""
    return 0.0 if g.family is Family.S2 else -math.inf


def marginal_utility(g: GrowthModel, c: ArrayLike) -> ArrayLike:
    c = _positive(c, NonpositiveConsumption, "Consumption")
    return _scalar(_power(c, -g.sigma))


def max_hamiltonian(g: GrowthModel, p: ArrayLike) -> ArrayLike:
    """sup over c > 0 of u(c) - c p."""
    p = _positive(p, InvalidParameter, "Costate")
    if g.family is Family.S3:
        return _scalar(-np.log(p) - 1)
    return _scalar(g.sigma / (1 - g.sigma) * _power(p, 1 - 1 / g.sigma))


def maximizing_control(g: GrowthModel, p: ArrayLike) -> ArrayLike:
    p = _positive(p, InvalidParameter, "Costate")
    return _scalar(_power(p, -1 / g.sigma))


def _check_common(f: int, rho: float) -> None:
    if int(f) != f or f < 1:
        raise InvalidParameter(f"f must be a positive integer, got {f}")
    if rho == 0:
        raise InvalidParameter("rho must be nonzero for the value-function intercept")


def _slope(g: GrowthModel, theta: float) -> float:
    return 1 / theta if g.family is Family.S3 else theta ** -g.sigma


def planner_policy(g: GrowthModel, f: int, rho: float, threshold: Optional[float] = None) -> PolicyCoefficients:
    _check_common(f, rho)
    if g.family is Family.S1:
        theta = (rho + g.Gamma * (g.sigma - 1)) / (g.sigma * f)
    elif g.family is Family.S2:
        theta = (rho + g.delta * (1 - g.sigma)) / (g.sigma * f)
    else:
        theta = (rho + g.Gamma / g.K) / f
    if not theta > 0:
        raise NoninteriorPolicy(f"Planner extraction rate {theta:.6g} is not positive for {g.family.value}")

    A = _slope(g, theta)
    if g.family is Family.S1:
        B = -g.Gamma * A / (g.K * rho)
    elif g.family is Family.S2:
        B = A / rho
    else:
        B = (g.Gamma - f * theta + f * theta * math.log(theta)) / (theta * rho)
    pc = PolicyCoefficients(Regime.PLANNER, g.family, int(f), rho, theta, A, B, interior=True)
    return pc if threshold is None else pc.with_threshold(threshold)


def _game_theta(g: GrowthModel, f: int, rho: float) -> float:
    if g.family is Family.S1:
        return (rho + g.Gamma * (g.sigma - 1)) / (1 + f * (g.sigma - 1))
    if g.family is Family.S2:
        if not f * (1 - g.sigma) < 1:
            raise NoninteriorPolicy(f"S2 equilibrium needs f < 1/(1 - sigma) = {1 / (1 - g.sigma):.6g}, got f={f}")
        return (rho + g.delta * (1 - g.sigma)) / (1 - f * (1 - g.sigma))
    return rho + g.Gamma / g.K


def game_policy(g: GrowthModel, f: int, rho: float, threshold: Optional[float] = None) -> PolicyCoefficients:
    _check_common(f, rho)
    theta = _game_theta(g, f, rho)
    if not theta > 0:
        raise NoninteriorPolicy(f"Equilibrium extraction rate {theta:.6g} is not positive for {g.family.value}")

    A = _slope(g, theta)
    if g.family is Family.S1:
        B = -g.Gamma * A / (g.K * rho)
    elif g.family is Family.S2:
        B = A / rho
    else:
        B = (g.Gamma - f * theta + theta * math.log(theta)) / (theta * rho)
    pc = PolicyCoefficients(Regime.GAME, g.family, int(f), rho, theta, A, B, interior=True)
    return pc if threshold is None else pc.with_threshold(threshold)


def policy(g: GrowthModel, f: int, rho: float, regime: Union[str, Regime],
           threshold: Optional[float] = None) -> PolicyCoefficients:
    if Regime(regime) is Regime.PLANNER:
        return planner_policy(g, f, rho, threshold)
    return game_policy(g, f, rho, threshold)


def printed_game_intercept(g: GrowthModel, f: int, rho: float) -> float:
    """Equilibrium intercept in its tabulated form; S3 carries Gamma*K in place of Gamma."""
    pc = game_policy(g, f, rho)
    if g.family is not Family.S3:
        return pc.B
    theta = pc.theta
    return (g.Gamma * g.K - f * theta + theta * math.log(theta)) / (theta * rho)


def steady_mass_for_rate(g: GrowthModel, rate: float) -> float:
    """Mass m with phi(m) = rate; 0.0 with a NegativeStockWarning when no positive root exists."""
    if g.family is Family.S1:
        base = g.K * (1 - rate / g.Gamma)
        if base <= 0:
            warnings.warn(f"Aggregate extraction {rate:.6g} >= Gamma drives the S1 stock to extinction",
                          NegativeStockWarning, stacklevel=2)
            return 0.0
        return float(math.exp(math.log(base) / (g.sigma - 1)))
    if g.family is Family.S2:
        return float(math.exp(math.log(rate + g.delta) / (g.sigma - 1)))
    return float(math.exp(g.K * (1 - rate / g.Gamma)))


def steady_masses(g: GrowthModel, f: int, rho: float) -> SteadyStates:
    planner = planner_policy(g, f, rho)
    game = game_policy(g, f, rho)
    return SteadyStates(
        m_bar=steady_mass_for_rate(g, 0.0),
        m_star=steady_mass_for_rate(g, f * planner.theta),
        m_hat=steady_mass_for_rate(g, f * game.theta),
        delta_f=f * (game.theta - planner.theta),
    )


def mass_closed_form(g: GrowthModel, m0: float, f: int, theta: float, t: ArrayLike) -> ArrayLike:
    """Total mass under aggregate extraction f*theta*m, solved in the linearizing variable.

    S1 and S2 use mu = m^(1 - sigma), S3 uses mu = ln m; in each case mu relaxes
    exponentially to its limit.
    """
    if not m0 > 0:
        raise NonpositiveMass(f"Initial mass must be positive, got {m0}")
    if theta < 0:
        raise InvalidParameter(f"theta must be nonnegative, got {theta}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidParameter("Times must be nonnegative")
    rate = f * theta

    if g.family is Family.S1:
        if theta > 0 and not g.Gamma > rate:
            raise SideConditionViolated(f"S1 mass formula needs Gamma > f*theta ({g.Gamma} <= {rate})")
        mu0 = m0 ** (1 - g.sigma)
        mu_inf = g.Gamma / (g.K * (g.Gamma - rate))
        mu = mu_inf + (mu0 - mu_inf) * np.exp(-(g.Gamma - rate) * (g.sigma - 1) * t)
        m = np.exp(np.log(mu) / (1 - g.sigma))
    elif g.family is Family.S2:
        if theta > 0 and not f * (1 - g.sigma) < 1:
            raise SideConditionViolated(f"S2 mass formula needs f*(1 - sigma) < 1, got {f * (1 - g.sigma):.6g}")
        mu0 = m0 ** (1 - g.sigma)
        mu_inf = 1 / (g.delta + rate)
        mu = mu_inf + (mu0 - mu_inf) * np.exp(-(g.delta + rate) * (1 - g.sigma) * t)
        m = np.exp(np.log(mu) / (1 - g.sigma))
    else:
        mu_inf = g.K * (1 - rate / g.Gamma)
        m = np.exp(mu_inf + (math.log(m0) - mu_inf) * np.exp(-g.Gamma * t / g.K))
    return _scalar(np.where(t == 0, m0, m))


def value_from_coefficients(g: GrowthModel, pc: PolicyCoefficients, m: ArrayLike) -> ArrayLike:
    return _scalar(pc.A * np.asarray(utility_eval(g, m)) + pc.B)


def candidate_value(g: GrowthModel, f: int, rho: float, regime: Union[str, Regime], x) -> float:
    m = float(np.sum(x))
    if not m > 0:
        raise ZeroTotalMass(f"Total mass must be positive, got {m}")
    return float(value_from_coefficients(g, policy(g, f, rho, regime), m))


def feedback_control(pc: PolicyCoefficients, pat: ExtractionPattern, x) -> np.ndarray:
    return pc.theta * float(np.sum(x)) * np.asarray(pat.xi)


def comparative_statics(g: GrowthModel, f: int, rho: float, step: float = 1e-6) -> dict[str, float]:
    """Central-difference derivatives of the planner long-run mass in rho and the growth parameters."""
    def m_star(model: GrowthModel, discount: float) -> float:
        return steady_masses(model, f, discount).m_star

    out = {"rho": (m_star(g, rho + step) - m_star(g, rho - step)) / (2 * step)}
    for name in ("Gamma", "K"):
        value = getattr(g, name)
        if value is None:
            continue
        up = replace(g, **{name: value + step})
        down = replace(g, **{name: value - step})
        out[name] = (m_star(up, rho) - m_star(down, rho)) / (2 * step)
    return out
