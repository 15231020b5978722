"""Numerical arbitration of the closed-form claims.

Residual-type checks return report dataclasses with a `passed` flag; bound-type checks
return `(passed, reason)` pairs. `run_suite` assembles everything into the verification
matrix consumed by the CLI.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson

from netharvest.dynamics import (
    Scenario,
    SimConfig,
    Trajectory,
    discounted_payoff,
    integrate_closed_loop,
    integrate_feedback,
    integrate_share_dynamics,
    with_horizon,
)
from netharvest.errors import (
    InvalidParameter,
    NonconvergentTail,
    NoninteriorPolicy,
    NotGloballyAdmissible,
    SideConditionViolated,
)
from netharvest.growth_policy import (
    Family,
    GrowthModel,
    PolicyCoefficients,
    Regime,
    game_policy,
    growth_model,
    marginal_utility,
    mass_closed_form,
    max_hamiltonian,
    phi_eval,
    planner_policy,
    printed_game_intercept,
    steady_mass_for_rate,
    utility_eval,
    value_from_coefficients,
)
from netharvest.network_model import (
    ExtractionPattern,
    Network,
    binding_inflow,
    inflow_threshold,
    stated_inflow_threshold,
)
from netharvest.spectral import (
    eigen_decompose,
    long_run_shares,
    shift_matrix,
    theta_limits,
    uniform_share_propagator,
    verify_spectral_shift,
)

logger = logging.getLogger(__name__)

ADMISSIBILITY_TOL = 1e-12
GROWTH_BOUND_SLACK = 1e-6
DEVIATION_FAMILY_NOTE = "deviations restricted to affine feedbacks kappa * theta_hat * <e, x>"


@dataclass(frozen=True)
class VerifySettings:
    grid_points: int = 41
    multipliers: Tuple[float, ...] = (0.5, 0.9, 1.1, 1.5)
    seeds: Tuple[int, ...] = tuple(range(20))
    identity_tol: float = 1e-10
    integration_tol: float = 1e-4
    mass_tol: float = 1e-6
    spectral_tol: float = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    skipped: bool = False


@dataclass(frozen=True)
class ResidualReport:
    grid: np.ndarray
    residuals: np.ndarray
    max_abs_residual: float
    max_rel_residual: float
    tolerance: float
    passed: bool
    regime: Regime
    family: Family


@dataclass(frozen=True)
class DeviationOutcome:
    multiplier: float
    theta: float
    payoff: float
    gain: float
    admissible: bool


@dataclass(frozen=True)
class DeviationReport:
    player: int
    baseline_payoff: float
    deviations: list[DeviationOutcome]
    max_gain: float
    tolerance: float
    passed: bool
    note: str = DEVIATION_FAMILY_NOTE


@dataclass(frozen=True)
class NodeAdmissibility:
    node: int
    min_inflow: float
    binding_source: int
    passed: bool
    sampled_passed: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    theta: float
    nodes: list[NodeAdmissibility]

    @property
    def passed(self) -> bool:
        return all(node.passed for node in self.nodes)

    @property
    def agree(self) -> bool:
        return all(node.passed == node.sampled_passed for node in self.nodes)


@dataclass(frozen=True)
class ConeProbeReport:
    theta: float
    center: np.ndarray
    verified: list[tuple[float, bool]]
    largest_verified: float
    worst_share: float


@dataclass(frozen=True)
class InterceptArbitration:
    derived_B: float
    printed_B: float
    derived_residual: float
    printed_residual: float
    derived_passes: bool
    printed_passes: bool

    @property
    def adopted(self) -> Optional[str]:
        if self.derived_passes:
            return "derived"
        return "printed" if self.printed_passes else None


@dataclass(frozen=True)
class PayoffComparison:
    regime: Regime
    candidate: float
    with_tail: float
    doubled_no_tail: float
    rel_gap: float
    doubled_rel_gap: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class TransversalityReport:
    times: np.ndarray
    values: np.ndarray
    envelope: np.ndarray
    last: float
    passed: bool


def log_grid(g: GrowthModel, points: int) -> np.ndarray:
    """Log-spaced masses over [m_bar / 100, 100 m_bar]."""
    m_bar = steady_mass_for_rate(g, 0.0)
    return np.geomspace(m_bar / 100, 100 * m_bar, points)


def _residual_terms(g: GrowthModel, pc: PolicyCoefficients, rho: float, f: int,
                    grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """HJB residual on a mass grid and the magnitude scale it is measured against."""
    value = pc.A * utility_eval(g, grid) + pc.B
    costate = pc.A * marginal_utility(g, grid)
    transport = costate * phi_eval(g, grid) * grid
    if pc.regime is Regime.PLANNER:
        hamiltonian = f * max_hamiltonian(g, costate)
        others = np.zeros_like(grid)
    else:
        hamiltonian = max_hamiltonian(g, costate)
        others = (f - 1) * costate * pc.theta * grid
    residual = rho * value - (hamiltonian + transport - others)
    scale = np.maximum.reduce([np.abs(rho * value), np.abs(hamiltonian), np.abs(transport), np.abs(others)])
    return residual, np.where(scale > 0, scale, 1.0)


def _residual_report(sc: Scenario, pc: PolicyCoefficients, grid, tolerance: float) -> ResidualReport:
    if not pc.interior:
        raise NoninteriorPolicy(f"{pc.regime.value} coefficients are not interior")
    grid = np.asarray(grid, dtype=float)
    residual, scale = _residual_terms(sc.growth, pc, sc.rho, sc.f, grid)
    max_rel = float(np.max(np.abs(residual) / scale))
    return ResidualReport(
        grid=grid, residuals=residual, max_abs_residual=float(np.max(np.abs(residual))),
        max_rel_residual=max_rel, tolerance=tolerance, passed=max_rel <= tolerance,
        regime=pc.regime, family=pc.family,
    )


def hjb_residual_planner(sc: Scenario, pc: PolicyCoefficients, grid, tolerance: float = 1e-10) -> ResidualReport:
    if pc.regime is not Regime.PLANNER:
        raise InvalidParameter("Planner residual needs planner coefficients")
    return _residual_report(sc, pc, grid, tolerance)


def hjb_residual_player(sc: Scenario, pc: PolicyCoefficients, grid, tolerance: float = 1e-10) -> ResidualReport:
    if pc.regime is not Regime.GAME:
        raise InvalidParameter("Player residual needs equilibrium coefficients")
    return _residual_report(sc, pc, grid, tolerance)


def hjb_coefficient_residuals(sc: Scenario, pc: PolicyCoefficients) -> dict[str, float]:
    """Residuals of the matched coefficients: the power (or log) term and the constant term."""
    g, rho, f, A = sc.growth, sc.rho, sc.f, pc.A
    players = f if pc.regime is Regime.PLANNER else 1
    others = 0.0 if pc.regime is Regime.PLANNER else (f - 1) * A * pc.theta
    if g.family is Family.S3:
        return {
            "log": rho * A - (players - A * g.Gamma / g.K),
            "constant": rho * pc.B - (-players * math.log(A) - players + A * g.Gamma - others),
        }
    hamiltonian = players * g.sigma / (1 - g.sigma) * A ** (1 - 1 / g.sigma)
    if g.family is Family.S1:
        power = rho * A / (1 - g.sigma) - (hamiltonian + A * g.Gamma - others)
        constant = rho * pc.B + A * g.Gamma / g.K
    else:
        power = rho * A / (1 - g.sigma) - (hamiltonian - g.delta * A - others)
        constant = rho * pc.B - A
    return {"power": power, "constant": constant}


def gradient_transport_check(sc: Scenario, pc: PolicyCoefficients, samples: int = 100, seed: int = 0) -> float:
    """Max of |<grad V(x), (D + B^T) x>| relative to |A u'(m)| * |(D + B^T) x|_1 over random states."""
    rng = np.random.default_rng(seed)
    m_bar = steady_mass_for_rate(sc.growth, 0.0)
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(0.0, 1.0, sc.n) * m_bar
        flow = sc.operator.matrix @ x
        gradient = pc.A * marginal_utility(sc.growth, x.sum()) * np.ones(sc.n)
        scale = abs(gradient[0]) * np.abs(flow).sum()
        if scale > 0:
            worst = max(worst, abs(gradient @ flow) / scale)
    return worst


def intercept_arbitration(sc: Scenario, grid=None, tolerance: float = 1e-10) -> InterceptArbitration:
    """Player residual with the derived intercept against the tabulated one."""
    pc = game_policy(sc.growth, sc.f, sc.rho)
    grid = log_grid(sc.growth, 41) if grid is None else grid
    printed = replace(pc, B=printed_game_intercept(sc.growth, sc.f, sc.rho))
    derived_report = hjb_residual_player(sc, pc, grid, tolerance)
    printed_report = hjb_residual_player(sc, printed, grid, tolerance)
    if not math.isclose(pc.B, printed.B, rel_tol=1e-12, abs_tol=0.0):
        logger.warning("Tabulated equilibrium intercept %.12g differs from the derived %.12g", printed.B, pc.B)
    return InterceptArbitration(
        derived_B=pc.B, printed_B=printed.B,
        derived_residual=derived_report.max_rel_residual, printed_residual=printed_report.max_rel_residual,
        derived_passes=derived_report.passed, printed_passes=printed_report.passed,
    )


def hamiltonian_deficit(traj: Trajectory, sc: Scenario, pc: PolicyCoefficients) -> np.ndarray:
    """Cumulative integral of e^(-rho t) sum_i [H(p) - u(c_i) + p c_i] with p = A u'(m)."""
    g = sc.growth
    costate = pc.A * marginal_utility(g, traj.masses)
    gap = np.zeros_like(traj.times)
    for i in traj.active:
        c = traj.controls[:, i]
        gap += max_hamiltonian(g, costate) - utility_eval(g, c) + costate * c
    return cumulative_simpson(np.exp(-sc.rho * traj.times) * gap, x=traj.times, initial=0.0)


def fundamental_identity_gap(traj: Trajectory, sc: Scenario, pc: PolicyCoefficients) -> float:
    """Max over grid times T of the relative gap in

    V(x0) = int_0^T e^(-rho s) [H - h] ds + int_0^T e^(-rho s) sum_i u(c_i) ds + e^(-rho T) V(X(T)).
    """
    if not sc.rho > 0:
        raise NonconvergentTail(f"Fundamental identity needs rho > 0, got {sc.rho}")
    if pc.regime is not Regime.PLANNER:
        raise InvalidParameter("Fundamental identity is stated for the planner value function")
    v0 = float(value_from_coefficients(sc.growth, pc, traj.masses[0]))
    continuation = np.exp(-sc.rho * traj.times) * value_from_coefficients(sc.growth, pc, traj.masses)
    total = hamiltonian_deficit(traj, sc, pc) + traj.payoff_partials.sum(axis=1) + continuation
    gaps = np.abs(v0 - total) / abs(v0)
    if not np.all(np.isfinite(gaps)):
        return math.inf
    return float(gaps.max())


def _check_game_admissible(sc: Scenario) -> tuple[PolicyCoefficients, float]:
    threshold = inflow_threshold(sc.network, sc.pattern)
    pc = game_policy(sc.growth, sc.f, sc.rho, threshold)
    if not pc.globally_admissible:
        raise NotGloballyAdmissible(
            f"Equilibrium rate {pc.theta:.6g} is not below the inflow threshold {threshold:.6g}")
    return pc, threshold


def deviation_test(sc: Scenario, multipliers: Sequence[float], cfg: SimConfig, tolerance: float = 1e-4,
                   player: Optional[int] = None) -> DeviationReport:
    """Unilateral affine deviations of one player against the equilibrium feedback.

    The deviating player (1-based label, default the first active node) uses
    kappa * theta_hat; everyone else keeps theta_hat. Payoffs use the stationary tail.
    """
    pc, _ = _check_game_admissible(sc)
    label = player if player is not None else sc.pattern.labels[0]
    if label not in sc.pattern.labels:
        raise InvalidParameter(f"Player {label} is not an active node")
    node = label - 1
    position = sc.pattern.active.index(node)
    base_rates = pc.theta * np.asarray(sc.pattern.xi)

    def payoff(rates: np.ndarray) -> tuple[float, bool]:
        traj = integrate_feedback(sc, rates, cfg)
        return float(discounted_payoff(traj, sc, per_player=True, tail="stationary")[position]), traj.admissible

    baseline, _ = payoff(base_rates)
    outcomes = []
    for kappa in multipliers:
        rates = base_rates.copy()
        rates[node] = kappa * pc.theta
        value, admissible = payoff(rates)
        if not admissible:
            logger.warning("Deviation kappa=%.6g leaves the orthant; excluded from the gain maximum", kappa)
        outcomes.append(DeviationOutcome(kappa, kappa * pc.theta, value, value - baseline, admissible))

    gains = [o.gain for o in outcomes if o.admissible]
    max_gain = max(gains, default=0.0)
    return DeviationReport(
        player=label, baseline_payoff=baseline, deviations=outcomes, max_gain=max_gain, tolerance=tolerance,
        passed=max_gain <= tolerance * abs(baseline),
    )


def strategy_admissibility(net: Network, pat: ExtractionPattern, theta: float, samples: int = 1000,
                           seed: int = 0) -> AdmissibilityReport:
    """Boundary condition theta * <e, x> <= sum_j b_ji x_j at x_i = 0, per active node.

    The closed form compares theta with the smallest inflow weight; the sampled form
    evaluates the condition on the face x_i = 0 of the simplex, vertices included.
    """
    rng = np.random.default_rng(seed)
    nodes = []
    for label in pat.labels:
        i = label - 1
        min_inflow, source = binding_inflow(net, label)
        others = [j for j in range(net.n) if j != i]
        points = np.zeros((samples, net.n))
        vertices = min(len(others), samples)
        for k in range(vertices):
            points[k, others[k]] = 1.0
        if samples > vertices:
            points[vertices:, others] = rng.dirichlet(np.ones(len(others)), size=samples - vertices)
        slack = points @ net.b[:, i] - theta * points.sum(axis=1)
        nodes.append(NodeAdmissibility(
            node=label, min_inflow=min_inflow, binding_source=source,
            passed=theta <= min_inflow + ADMISSIBILITY_TOL,
            sampled_passed=bool(slack.min() >= -ADMISSIBILITY_TOL),
        ))
    return AdmissibilityReport(theta=theta, nodes=nodes)


def _probe_pool(center: np.ndarray, samples: int, rng: np.random.Generator) -> np.ndarray:
    n = center.size
    eye = np.eye(n)
    midpoints = [(eye[j] + eye[k]) / 2 for j in range(n) for k in range(j + 1, n)]
    random_points = rng.dirichlet(np.ones(n), size=samples)
    return np.vstack([center[None, :], eye, np.array(midpoints).reshape(-1, n), random_points])


def cone_admissibility_probe(sc: Scenario, theta: float, L_candidates: Sequence[float], cfg: SimConfig,
                             samples: int = 200, seed: int = 0) -> ConeProbeReport:
    """Largest candidate radius L around the long-run shares with no nonnegativity violation.

    Initial shares are drawn on the simplex (vertices, edge midpoints and Dirichlet samples)
    and propagated by the share dynamics; the result is a sampled lower bound.
    """
    theta1, theta2 = theta_limits(sc.operator, sc.pattern)
    if not theta < min(theta1, theta2):
        raise InvalidParameter(f"theta={theta:.6g} must be below min(theta1, theta2) = {min(theta1, theta2):.6g}")
    center = long_run_shares(sc.operator, sc.pattern, theta)
    pool = _probe_pool(center, samples, np.random.default_rng(seed))
    steps = cfg.quadrature_points - 1
    path = uniform_share_propagator(shift_matrix(sc.operator, sc.pattern, theta), pool.T, cfg.horizon / steps, steps)
    lowest = path.min(axis=(0, 1))
    violating = lowest < -cfg.negativity_tol
    distance = np.linalg.norm(pool - center, axis=1)

    verified = []
    for L in sorted(L_candidates):
        inside = distance <= L + 1e-15
        verified.append((float(L), not bool(np.any(violating & inside))))
    passing = [L for L, ok in verified if ok]
    largest = max(passing, default=0.0)
    logger.debug("Cone probe at theta=%.6g: largest verified L=%.6g, worst share %.3g", theta, largest, lowest.min())
    return ConeProbeReport(theta=theta, center=center, verified=verified, largest_verified=largest,
                           worst_share=float(lowest.min()))


def value_vs_payoff(sc: Scenario, regime: Regime, cfg: SimConfig, tolerance: float = 1e-4) -> PayoffComparison:
    """Candidate value against the simulated payoff, with the candidate tail and with a doubled horizon."""
    pc = planner_policy(sc.growth, sc.f, sc.rho) if regime is Regime.PLANNER else game_policy(sc.growth, sc.f, sc.rho)
    candidate = float(value_from_coefficients(sc.growth, pc, sc.m0))
    per_player = regime is Regime.GAME

    def simulated(config: SimConfig, tail: str) -> float:
        traj = integrate_closed_loop(sc, pc.theta, config)
        result = discounted_payoff(traj, sc, per_player=per_player, pc=pc, tail=tail)
        return float(result[0]) if per_player else float(result)

    with_tail = simulated(cfg, "candidate")
    doubled = simulated(with_horizon(cfg, 2 * cfg.horizon), "none")
    rel_gap = abs(with_tail - candidate) / abs(candidate)
    return PayoffComparison(
        regime=regime, candidate=candidate, with_tail=with_tail, doubled_no_tail=doubled,
        rel_gap=rel_gap, doubled_rel_gap=abs(doubled - candidate) / abs(candidate),
        tolerance=tolerance, passed=rel_gap <= tolerance,
    )


def mass_consistency(sc: Scenario, theta: float, cfg: SimConfig) -> float:
    traj = integrate_closed_loop(sc, theta, cfg)
    exact = np.asarray(mass_closed_form(sc.growth, sc.m0, sc.f, theta, traj.times))
    return float(np.max(np.abs(traj.masses - exact) / exact))


def share_reconstruction_gap(sc: Scenario, theta: float, cfg: SimConfig, method: str = "ode") -> float:
    """Max relative gap between the full closed loop and m * Y from the decomposed system."""
    full = integrate_closed_loop(sc, theta, cfg)
    parts = integrate_share_dynamics(sc, theta, cfg, method=method)
    scale = np.maximum(np.abs(full.states).max(axis=1, keepdims=True), 1e-300)
    return float(np.max(np.abs(full.states - parts.states) / scale))


def growth_bound_check(traj: Trajectory, sc: Scenario) -> Tuple[bool, Optional[str]]:
    m_bar = steady_mass_for_rate(sc.growth, 0.0)
    bound = max(traj.masses[0], m_bar) * (1 + GROWTH_BOUND_SLACK)
    peak = float(traj.masses.max())
    if peak > bound:
        return False, f"mass reaches {peak:.6g} above max(m(0), m_bar) = {bound:.6g}"
    norm_bound = math.sqrt(sc.n) * max(1.0, m_bar) * (1 + float(np.abs(traj.states[0]).sum()))
    peak_norm = float(np.linalg.norm(traj.states, axis=1).max())
    if peak_norm > norm_bound:
        return False, f"state norm reaches {peak_norm:.6g} above {norm_bound:.6g}"
    return True, None


def transversality_monitor(traj: Trajectory, sc: Scenario, pc: PolicyCoefficients,
                           slack: float = 1e-6) -> TransversalityReport:
    """Track e^(-rho t) V(X(t)) against the envelope e^(-rho t) max(|V(m(0))|, |V(m_inf)|).

    Under an affine feedback the mass moves monotonically between m(0) and its limit,
    so the monitored term must stay inside the envelope and decay at rate rho.
    """
    values = np.exp(-sc.rho * traj.times) * value_from_coefficients(sc.growth, pc, traj.masses)
    total_rate = float(traj.rates.sum())
    m_inf = steady_mass_for_rate(sc.growth, total_rate)
    bound = abs(float(value_from_coefficients(sc.growth, pc, traj.masses[0])))
    if m_inf > 0:
        bound = max(bound, abs(float(value_from_coefficients(sc.growth, pc, m_inf))))
    else:
        bound = math.inf
    envelope = np.exp(-sc.rho * traj.times) * bound * (1 + slack)
    return TransversalityReport(times=traj.times, values=values, envelope=envelope, last=float(values[-1]),
                                passed=bool(np.all(np.abs(values) <= envelope)))


def _random_growth(family: Family, rng: np.random.Generator) -> tuple[GrowthModel, float]:
    if family is Family.S1:
        g = growth_model(family, Gamma=rng.uniform(0.5, 2.0), K=rng.uniform(2.0, 20.0), sigma=rng.uniform(1.2, 4.0))
        return g, rng.uniform(0.01, 0.2) * g.Gamma
    if family is Family.S2:
        return growth_model(family, sigma=rng.uniform(0.2, 0.8), delta=rng.uniform(0.05, 0.5)), rng.uniform(0.01, 0.2)
    return growth_model(family, Gamma=rng.uniform(0.5, 2.0), K=rng.uniform(0.5, 5.0)), rng.uniform(0.01, 0.2)


def hjb_parameter_sweep(sc: Scenario, seeds: Sequence[int], tolerance: float,
                        players: Sequence[int] = (1, 2, 3), points: int = 41) -> list[str]:
    """Planner and player residuals over randomized parameters of the scenario's family.

    Returns descriptions of failing draws; S2 draws skip player counts with f >= 1/(1 - sigma).
    """
    failures = []
    for seed in seeds:
        g, rho = _random_growth(sc.growth.family, np.random.default_rng(seed))
        grid = log_grid(g, points)
        for f in players:
            for regime in Regime:
                try:
                    pc = planner_policy(g, f, rho) if regime is Regime.PLANNER else game_policy(g, f, rho)
                except NoninteriorPolicy:
                    continue
                residual, scale = _residual_terms(g, pc, rho, f, grid)
                worst = float(np.max(np.abs(residual) / scale))
                if worst > tolerance:
                    failures.append(f"seed={seed} f={f} {regime.value}: {worst:.3g}")
    return failures


def _check(name: str, passed: bool, value: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), value=float(value), tolerance=float(tolerance), detail=detail)


def _skip(name: str, reason: str) -> CheckResult:
    logger.warning("Skipping %s: %s", name, reason)
    return CheckResult(name=name, passed=True, value=math.nan, tolerance=math.nan, detail=reason, skipped=True)


def _mass_check(name: str, sc: Scenario, theta: float, cfg: SimConfig, tolerance: float) -> CheckResult:
    try:
        gap = mass_consistency(sc, theta, cfg)
    except SideConditionViolated as exc:
        return _skip(name, str(exc))
    return _check(name, gap <= tolerance, gap, tolerance)


def run_suite(sc: Scenario, cfg: SimConfig, settings: VerifySettings = VerifySettings()) -> list[CheckResult]:
    """Every numerical check applicable to the scenario, in a fixed order."""
    g = sc.growth
    threshold = inflow_threshold(sc.network, sc.pattern)
    planner = planner_policy(g, sc.f, sc.rho, threshold)
    game = _guarded_policy(g, sc)
    grid = log_grid(g, settings.grid_points)
    thetas = [("planner", planner.theta)] + ([("game", game.theta)] if game else [])
    results: list[CheckResult] = []

    spectral = eigen_decompose(sc.operator)
    results.append(_check("spectral.dominant_zero", spectral.zeta.min() > 0, spectral.lambda2_real,
                          0.0, "lambda2 real part; zeta strictly positive"))
    for label, theta in thetas:
        report = verify_spectral_shift(sc.operator, sc.pattern, theta, settings.spectral_tol)
        results.append(_check(f"spectral.shift.{label}", report.passed, report.max_deviation, report.tolerance))

    report = hjb_residual_planner(sc, planner, grid, settings.identity_tol)
    results.append(_check("hjb.planner", report.passed, report.max_rel_residual, report.tolerance))
    if game:
        report = hjb_residual_player(sc, game, grid, settings.identity_tol)
        results.append(_check("hjb.player", report.passed, report.max_rel_residual, report.tolerance))
        arbitration = intercept_arbitration(sc, grid, settings.identity_tol)
        results.append(_check(
            "hjb.intercept_arbitration", arbitration.adopted == "derived", arbitration.derived_residual,
            settings.identity_tol,
            f"derived B={arbitration.derived_B:.12g} passes={arbitration.derived_passes}; "
            f"tabulated B={arbitration.printed_B:.12g} passes={arbitration.printed_passes}"))
    else:
        results.append(_skip("hjb.player", "no interior equilibrium"))

    transport = gradient_transport_check(sc, planner)
    results.append(_check("hjb.gradient_transport", transport <= settings.identity_tol, transport,
                          settings.identity_tol))

    failures = hjb_parameter_sweep(sc, settings.seeds, settings.identity_tol, points=settings.grid_points)
    results.append(_check("hjb.parameter_sweep", not failures, len(failures), 0, "; ".join(failures[:5])))

    for label, theta in [("none", 0.0)] + thetas:
        results.append(_mass_check(f"dynamics.mass.{label}", sc, theta, cfg, settings.mass_tol))

    gap = share_reconstruction_gap(sc, planner.theta, cfg)
    results.append(_check("dynamics.share_reconstruction", gap <= settings.mass_tol, gap, settings.mass_tol))

    optimal = integrate_closed_loop(sc, planner.theta, cfg)
    for regime in ([Regime.PLANNER] + ([Regime.GAME] if game else [])):
        name = f"payoff.value.{regime.value}"
        if not sc.rho > 0:
            results.append(_skip(name, "rho <= 0"))
            continue
        comparison = value_vs_payoff(sc, regime, cfg, settings.integration_tol)
        results.append(_check(name, comparison.passed, comparison.rel_gap, comparison.tolerance,
                              f"candidate={comparison.candidate:.12g} simulated={comparison.with_tail:.12g} "
                              f"doubled_horizon_gap={comparison.doubled_rel_gap:.3g}"))

    if sc.rho > 0:
        for label, theta in (("optimal", planner.theta), ("half", planner.theta / 2)):
            traj = optimal if label == "optimal" else integrate_closed_loop(sc, theta, cfg)
            name = f"payoff.fundamental_identity.{label}"
            if not traj.admissible:
                results.append(_skip(name, f"trajectory leaves the orthant at t={traj.violation_time:.6g}"))
                continue
            identity_gap = fundamental_identity_gap(traj, sc, planner)
            results.append(_check(name, identity_gap <= settings.integration_tol, identity_gap,
                                  settings.integration_tol))

    if game and game.globally_admissible and sc.rho > 0:
        deviation = deviation_test(sc, settings.multipliers, cfg, settings.integration_tol)
        results.append(_check("game.deviation", deviation.passed, deviation.max_gain / abs(deviation.baseline_payoff),
                              deviation.tolerance, deviation.note))
    else:
        results.append(_skip("game.deviation", "equilibrium rate not below the inflow threshold"))

    for label, theta in thetas:
        admissibility = strategy_admissibility(sc.network, sc.pattern, theta)
        results.append(_check(f"admissibility.cross_check.{label}", admissibility.agree, float(admissibility.passed),
                              ADMISSIBILITY_TOL, f"threshold={threshold:.12g} "
                              f"stated={stated_inflow_threshold(sc.network, sc.pattern):.12g}"))

    free = integrate_closed_loop(sc, 0.0, cfg)
    for label, traj in (("none", free), ("planner", optimal)):
        ok, reason = growth_bound_check(traj, sc)
        results.append(_check(f"bounds.growth.{label}", ok, float(traj.masses.max()), GROWTH_BOUND_SLACK,
                              reason or ""))

    if sc.rho > 0:
        monitor = transversality_monitor(optimal, sc, planner)
        results.append(_check("bounds.transversality", monitor.passed, monitor.last, 0.0,
                              "e^(-rho T) V(X(T)) inside the decay envelope"))

    failed = [r.name for r in results if not r.passed]
    logger.info("Verification: %d checks, %d failed, %d skipped", len(results), len(failed),
                sum(r.skipped for r in results))
    return results


def _guarded_policy(g: GrowthModel, sc: Scenario) -> Optional[PolicyCoefficients]:
    try:
        return game_policy(g, sc.f, sc.rho, inflow_threshold(sc.network, sc.pattern))
    except NoninteriorPolicy as exc:
        logger.warning("No interior equilibrium: %s", exc)
        return None
