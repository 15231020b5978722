"""Closed-loop integration of the networked stock, mass/share decomposition and payoffs."""
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.integrate import cumulative_simpson, solve_ivp

from netharvest.errors import (
    DimensionMismatch,
    HorizonNonpositive,
    IntegrationError,
    InvalidParameter,
    NonconvergentTail,
    StepSizeUnderflow,
    ZeroTotalMass,
)
from netharvest.growth_policy import (
    GrowthModel,
    PolicyCoefficients,
    Regime,
    phi_eval,
    steady_mass_for_rate,
    utility_at_zero,
    utility_eval,
    value_from_coefficients,
)
from netharvest.network_model import ExtractionPattern, MigrationOperator, Network, migration_operator
from netharvest.spectral import long_run_shares, shift_matrix

logger = logging.getLogger(__name__)

SPECTRAL_COND_LIMIT = 1e10


@dataclass(frozen=True)
class Scenario:
    network: Network
    pattern: ExtractionPattern
    growth: GrowthModel
    rho: float
    x0: np.ndarray

    @cached_property
    def operator(self) -> MigrationOperator:
        return migration_operator(self.network)

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def f(self) -> int:
        return self.pattern.f

    @property
    def m0(self) -> float:
        return float(self.x0.sum())


def build_scenario(network: Network, pattern: ExtractionPattern, growth: GrowthModel,
                   rho: float, x0) -> Scenario:
    x0 = np.array(x0, dtype=float)
    if x0.shape != (network.n,):
        raise DimensionMismatch(f"Initial stock has shape {x0.shape}, network has {network.n} nodes")
    if pattern.n != network.n:
        raise DimensionMismatch(f"Extraction pattern covers {pattern.n} nodes, network has {network.n}")
    if np.any(x0 < 0):
        raise InvalidParameter(f"Initial stock must be nonnegative, node {int(np.argmin(x0)) + 1} is {x0.min()}")
    if not x0.sum() > 0:
        raise ZeroTotalMass("Initial stock has zero total mass")
    x0.setflags(write=False)
    return Scenario(network=network, pattern=pattern, growth=growth, rho=float(rho), x0=x0)


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 100.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: Optional[float] = None
    negativity_tol: float = 1e-9
    quadrature_points: int = 2048

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise InvalidParameter("max_step must be positive")
        if self.negativity_tol < 0:
            raise InvalidParameter("negativity_tol must be nonnegative")
        if self.quadrature_points < 3:
            raise InvalidParameter("quadrature_points must be at least 3")

    @property
    def step_cap(self) -> float:
        return self.max_step if self.max_step is not None else self.horizon / 100


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    masses: np.ndarray
    shares: np.ndarray
    controls: np.ndarray
    payoff_partials: np.ndarray
    rates: np.ndarray
    active: tuple[int, ...]
    admissible: bool = True
    violation_time: Optional[float] = None
    violation_node: Optional[int] = None
    stats: dict = field(default_factory=dict)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class ShareTrajectory:
    times: np.ndarray
    masses: np.ndarray
    shares: np.ndarray
    method: str

    @property
    def states(self) -> np.ndarray:
        return self.masses[:, None] * self.shares


def vector_field(sc: Scenario, x, c) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    m = float(x.sum())
    if not m > 0:
        raise ZeroTotalMass(f"Total mass must be positive, got {m}")
    return phi_eval(sc.growth, m) * x + sc.operator.matrix @ x - np.asarray(c, dtype=float)


def _solve(rhs, y0: np.ndarray, cfg: SimConfig):
    if not cfg.horizon > 0:
        raise HorizonNonpositive(f"Horizon must be positive, got {cfg.horizon}")
    sol = solve_ivp(rhs, (0.0, cfg.horizon), y0, method="RK45", rtol=cfg.rel_tol, atol=cfg.abs_tol,
                    max_step=cfg.step_cap, dense_output=True)
    if not sol.success:
        if "step size" in sol.message.lower():
            raise StepSizeUnderflow(sol.message)
        raise IntegrationError(sol.message)
    logger.debug("RK45 finished: %d steps, %d evaluations", sol.t.size - 1, sol.nfev)
    return sol


def _grid(cfg: SimConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.horizon, cfg.quadrature_points)


def _discounted_utility(g: GrowthModel, rho: float, times: np.ndarray, controls: np.ndarray) -> np.ndarray:
    """Cumulative Simpson integral of e^(-rho t) u(c(t)) for one control path."""
    if np.all(controls > 0):
        integrand = np.exp(-rho * times) * utility_eval(g, controls)
        return cumulative_simpson(integrand, x=times, initial=0.0)
    if np.all(controls == 0):
        u0 = utility_at_zero(g)
        if math.isinf(u0):
            out = np.full(times.shape, u0)
            out[0] = 0.0
            return out
        return np.zeros(times.shape)
    raise InvalidParameter("Controls must be either strictly positive or identically zero along a path")


def integrate_feedback(sc: Scenario, rates, cfg: SimConfig) -> Trajectory:
    """Integrate X' = phi(m) X + (D + B^T) X - c under the affine feedback c_i = rates_i * m.

    Orthant exits are looked for on the output grid and at every accepted solver step;
    the earlier of the two sets the violation time.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (sc.n,):
        raise DimensionMismatch(f"Feedback rates have shape {rates.shape}, network has {sc.n} nodes")
    if np.any(rates < 0):
        raise InvalidParameter("Feedback rates must be nonnegative")
    closed_loop = sc.operator.matrix - np.outer(rates, np.ones(sc.n))
    g = sc.growth

    def rhs(_, x):
        return phi_eval(g, x.sum()) * x + closed_loop @ x

    sol = _solve(rhs, np.array(sc.x0), cfg)
    times = _grid(cfg)
    states = sol.sol(times).T
    states[0] = sc.x0
    masses = states.sum(axis=1)
    shares = states / masses[:, None]
    controls = np.outer(masses, rates)

    active = sc.pattern.active
    partials = np.column_stack([_discounted_utility(g, sc.rho, times, controls[:, i]) for i in active])

    admissible, violation_time, violation_node = True, None, None
    exits = []
    for when, path in ((times, states), (sol.t, sol.y.T)):
        rows = np.flatnonzero((path < -cfg.negativity_tol).any(axis=1))
        if rows.size:
            k = int(rows[0])
            exits.append((float(when[k]), int(np.argmin(path[k])) + 1))
    if exits:
        admissible = False
        violation_time, violation_node = min(exits)
        logger.warning("Trajectory leaves the nonnegative orthant at t=%.6g (node %d)", violation_time,
                       violation_node)

    return Trajectory(
        times=times, states=states, masses=masses, shares=shares, controls=controls,
        payoff_partials=partials, rates=rates, active=active, admissible=admissible,
        violation_time=violation_time, violation_node=violation_node,
        stats={"steps": int(sol.t.size - 1), "nfev": int(sol.nfev)},
    )


def integrate_closed_loop(sc: Scenario, theta: float, cfg: SimConfig) -> Trajectory:
    if theta < 0:
        raise InvalidParameter(f"theta must be nonnegative, got {theta}")
    return integrate_feedback(sc, theta * np.asarray(sc.pattern.xi), cfg)


def integrate_mass(sc: Scenario, theta: float, cfg: SimConfig) -> np.ndarray:
    """Scalar mass equation m' = (phi(m) - f theta) m on the uniform grid."""
    g, rate = sc.growth, sc.f * theta
    sol = _solve(lambda _, m: (phi_eval(g, m[0]) - rate) * m, np.array([sc.m0]), cfg)
    masses = sol.sol(_grid(cfg))[0]
    masses[0] = sc.m0
    return masses


def integrate_share_dynamics(sc: Scenario, theta: float, cfg: SimConfig,
                             method: Literal["ode", "spectral"] = "ode") -> ShareTrajectory:
    """Integrate the shares Y' = M_theta Y and the mass separately."""
    if theta < 0:
        raise InvalidParameter(f"theta must be nonnegative, got {theta}")
    matrix = shift_matrix(sc.operator, sc.pattern, theta)
    y0 = np.array(sc.x0) / sc.m0
    times = _grid(cfg)
    masses = integrate_mass(sc, theta, cfg)

    if method == "spectral":
        values, vectors = linalg.eig(matrix)
        if np.linalg.cond(vectors) < SPECTRAL_COND_LIMIT:
            coefficients = linalg.solve(vectors, y0.astype(complex))
            shares = np.real((vectors[None, :, :] * (np.exp(np.outer(times, values)) * coefficients)[:, None, :])
                             .sum(axis=2))
            return ShareTrajectory(times=times, masses=masses, shares=shares, method="spectral")
        logger.debug("M_theta is close to defective; falling back to the ODE path")

    sol = _solve(lambda _, y: matrix @ y, y0, cfg)
    shares = sol.sol(times).T
    shares[0] = y0
    return ShareTrajectory(times=times, masses=masses, shares=shares, method="ode")


def long_run_state(sc: Scenario, theta: float) -> np.ndarray:
    m_inf = steady_mass_for_rate(sc.growth, sc.f * theta)
    return m_inf * long_run_shares(sc.operator, sc.pattern, theta)


def discounted_payoff(traj: Trajectory, sc: Scenario, per_player: bool = False,
                      pc: Optional[PolicyCoefficients] = None,
                      tail: Literal["candidate", "stationary", "none"] = "candidate") -> Union[float, np.ndarray]:
    """Discounted utility over the horizon plus a tail estimate beyond it.

    The candidate tail splits e^(-rho T) V(X(T)) evenly over the players for the planner
    value and assigns the full equilibrium value to each player. The stationary tail
    freezes each control at its final value.
    """
    if not sc.rho > 0:
        raise NonconvergentTail(f"Discounted payoff needs rho > 0, got {sc.rho}")
    T = traj.horizon
    values = np.array(traj.payoff_partials[-1], dtype=float)
    if tail == "candidate":
        if pc is None:
            raise InvalidParameter("The candidate tail needs policy coefficients")
        v_end = float(value_from_coefficients(sc.growth, pc, traj.masses[-1]))
        share = v_end / sc.f if pc.regime is Regime.PLANNER else v_end
        values = values + math.exp(-sc.rho * T) * share
    elif tail == "stationary":
        final = traj.controls[-1, list(traj.active)]
        for k, c in enumerate(final):
            u_end = float(utility_eval(sc.growth, c)) if c > 0 else utility_at_zero(sc.growth)
            values[k] = values[k] + math.exp(-sc.rho * T) * u_end / sc.rho
    elif tail != "none":
        raise InvalidParameter(f"Unknown tail {tail!r}")
    return values if per_player else float(values.sum())


def write_trajectory_csv(traj: Trajectory, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = traj.states.shape[1]
    frame = pd.DataFrame({"time": traj.times})
    for i in range(n):
        frame[f"X_{i + 1}"] = traj.states[:, i]
    frame["m"] = traj.masses
    for i in range(n):
        frame[f"Y_{i + 1}"] = traj.shares[:, i]
    for i in range(n):
        frame[f"c_{i + 1}"] = traj.controls[:, i]
    frame["payoff"] = traj.payoff_partials.sum(axis=1)
    frame.to_csv(path, index=False, float_format="%.12g")
    logger.info("Wrote trajectory %s", path)
    return path


def with_horizon(cfg: SimConfig, horizon: float) -> SimConfig:
    return replace(cfg, horizon=horizon)
