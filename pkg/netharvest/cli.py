"""Command-line surface: analyze, simulate, verify, compare and sweep a scenario document."""
import argparse
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv

from netharvest.config import SWEEP_OUTPUTS, RunConfig, default_out_dir, parse_config
from netharvest.dynamics import (
    Scenario,
    discounted_payoff,
    integrate_closed_loop,
    write_trajectory_csv,
)
from netharvest.errors import (
    InvalidParameter,
    NetharvestError,
    NoninteriorPolicy,
    ValidationError,
    VerificationFailed,
)
from netharvest.growth_policy import (
    GrowthModel,
    PolicyCoefficients,
    Regime,
    comparative_statics,
    game_policy,
    growth_model,
    mass_closed_form,
    planner_policy,
    steady_mass_for_rate,
)
from netharvest.network_model import inflow_threshold, stated_inflow_threshold
from netharvest.report import RunReport, emit_report
from netharvest.spectral import eigen_decompose, long_run_shares, theta_limits
from netharvest.verify import run_suite, strategy_admissibility

logger = logging.getLogger("netharvest.cli")

SUBCOMMANDS = ("analyze", "simulate", "verify", "compare", "sweep")
EXIT_OK, EXIT_VALIDATION, EXIT_VERIFICATION, EXIT_RUNTIME = 0, 2, 3, 4


def setup_logging(level: str = "INFO", out_dir: Optional[Path] = None) -> None:
    handlers = [logging.StreamHandler(sys.stdout)]
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(out_dir / "netharvest.log", encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s | %(levelname)-9s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=handlers,
        force=True,
    )
    logging.captureWarnings(True)


def shutdown_logging() -> None:
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        handler.close()
        root_logger.removeHandler(handler)


def _policy_or_none(fn: Callable[..., PolicyCoefficients], *args) -> Optional[PolicyCoefficients]:
    try:
        return fn(*args)
    except NoninteriorPolicy as exc:
        logger.warning("%s", exc)
        return None


def _policy_row(name: str, pc: Optional[PolicyCoefficients], f: int) -> dict:
    if pc is None:
        return {"name": name, "theta": None, "aggregate": None, "A": None, "B": None, "interior": False,
                "globally_admissible": None}
    return {"name": name, "theta": pc.theta, "aggregate": f * pc.theta, "A": pc.A, "B": pc.B,
            "interior": pc.interior, "globally_admissible": pc.globally_admissible}


def _policies(sc: Scenario) -> tuple[PolicyCoefficients, Optional[PolicyCoefficients], float]:
    threshold = inflow_threshold(sc.network, sc.pattern)
    planner = planner_policy(sc.growth, sc.f, sc.rho, threshold)
    game = _policy_or_none(game_policy, sc.growth, sc.f, sc.rho, threshold)
    return planner, game, threshold


def _steady_row(sc: Scenario, planner: PolicyCoefficients, game: Optional[PolicyCoefficients]) -> dict:
    g, f = sc.growth, sc.f
    return {
        "name": "masses",
        "m_bar": steady_mass_for_rate(g, 0.0),
        "m_star": steady_mass_for_rate(g, f * planner.theta),
        "m_hat": None if game is None else steady_mass_for_rate(g, f * game.theta),
        "delta_f": None if game is None else f * (game.theta - planner.theta),
    }


def analyze(run: RunConfig, report: RunReport) -> None:
    sc = run.scenario
    spectral = eigen_decompose(sc.operator)
    theta1, theta2 = theta_limits(sc.operator, sc.pattern, spectral)
    planner, game, threshold = _policies(sc)

    report.add("spectral", {
        "name": "summary", "lambda2_real": spectral.lambda2_real, "spectral_gap": spectral.spectral_gap,
        "theta1": theta1, "theta2": theta2, "inflow_threshold": threshold,
        "stated_threshold": stated_inflow_threshold(sc.network, sc.pattern),
    })
    report.extend("eigenvalues", [
        {"name": f"lambda_{k + 1}", "real": float(value.real), "imag": float(value.imag)}
        for k, value in enumerate(spectral.eigenvalues)
    ])
    shares = {"zeta": spectral.zeta, "zeta_theta_planner": long_run_shares(sc.operator, sc.pattern, planner.theta)}
    if game is not None:
        shares["zeta_theta_game"] = long_run_shares(sc.operator, sc.pattern, game.theta)
    report.extend("shares", [
        {"name": f"node_{i + 1}", **{key: float(vec[i]) for key, vec in shares.items()}} for i in range(sc.n)
    ])
    report.extend("policy", [_policy_row("planner", planner, sc.f), _policy_row("game", game, sc.f)])
    report.add("steady_states", _steady_row(sc, planner, game))
    report.add("comparative_statics", {"name": "m_star", **{
        f"d_{key}": value for key, value in comparative_statics(sc.growth, sc.f, sc.rho).items()}})
    for label, pc in (("planner", planner), ("game", game)):
        if pc is None:
            continue
        for node in strategy_admissibility(sc.network, sc.pattern, pc.theta).nodes:
            report.add("admissibility", {
                "name": f"{label}_node_{node.node}", "theta": pc.theta, "min_inflow": node.min_inflow,
                "binding_source": node.binding_source, "passed": node.passed, "sampled_passed": node.sampled_passed,
            })


def _trajectory_row(name: str, sc: Scenario, run: RunConfig, theta: float,
                    pc: Optional[PolicyCoefficients], out_dir: Path, report: RunReport) -> None:
    traj = integrate_closed_loop(sc, theta, run.sim)
    csv_name = f"trajectory_{name}.csv"
    write_trajectory_csv(traj, out_dir / csv_name)
    report.artifacts.append(csv_name)
    row = {
        "name": name, "theta": theta, "horizon": traj.horizon, "final_mass": float(traj.masses[-1]),
        "admissible": traj.admissible, "violation_time": traj.violation_time,
    }
    try:
        row["closed_form_mass"] = float(mass_closed_form(sc.growth, sc.m0, sc.f, theta, traj.horizon))
    except NetharvestError as exc:
        logger.warning("No closed-form mass for %s: %s", name, exc)
        row["closed_form_mass"] = None
    if sc.rho > 0:
        tail = "candidate" if pc is not None else "stationary"
        row["payoff_total"] = float(discounted_payoff(traj, sc, pc=pc, tail=tail))
        row["payoff_tail"] = tail
    report.add("trajectories", row)


def simulate(run: RunConfig, report: RunReport, out_dir: Path, regime: Regime, theta: Optional[float]) -> None:
    sc = run.scenario
    planner, game, _ = _policies(sc)
    if theta is not None:
        _trajectory_row(f"theta_{theta:g}", sc, run, theta, None, out_dir, report)
        return
    pc = planner if regime is Regime.PLANNER else game
    if pc is None:
        raise NoninteriorPolicy(f"No interior {regime.value} policy to simulate")
    _trajectory_row(regime.value, sc, run, pc.theta, pc, out_dir, report)


def verify(run: RunConfig, report: RunReport) -> list[str]:
    results = run_suite(run.scenario, run.sim, run.verify)
    report.extend("verification", [asdict(result) for result in results])
    return [result.name for result in results if not result.passed]


def compare(run: RunConfig, report: RunReport, out_dir: Path) -> None:
    sc = run.scenario
    planner, game, _ = _policies(sc)
    if game is None:
        raise NoninteriorPolicy("No interior equilibrium to compare against the planner")
    steady = _steady_row(sc, planner, game)
    report.add("comparison", {
        "name": "planner_vs_game", "theta_star": planner.theta, "theta_hat": game.theta,
        "aggregate_planner": sc.f * planner.theta, "aggregate_game": sc.f * game.theta,
        "delta_f": steady["delta_f"], "m_star": steady["m_star"], "m_hat": steady["m_hat"],
    })
    _trajectory_row("planner", sc, run, planner.theta, planner, out_dir, report)
    _trajectory_row("game", sc, run, game.theta, game, out_dir, report)


def sweep_outputs(g: GrowthModel, f: int, rho: float) -> dict[str, float]:
    """Scalar policy outputs at one parameter point; NaN where no interior policy exists."""
    out = dict.fromkeys(SWEEP_OUTPUTS, math.nan)
    out["m_bar"] = steady_mass_for_rate(g, 0.0)
    for regime, pc in ((Regime.PLANNER, _policy_or_none(planner_policy, g, f, rho)),
                       (Regime.GAME, _policy_or_none(game_policy, g, f, rho))):
        if pc is None:
            continue
        key = "planner" if regime is Regime.PLANNER else "game"
        out[f"A_{key}"], out[f"B_{key}"] = pc.A, pc.B
        out[f"aggregate_{key}"] = f * pc.theta
        out["theta_star" if regime is Regime.PLANNER else "theta_hat"] = pc.theta
        out["m_star" if regime is Regime.PLANNER else "m_hat"] = steady_mass_for_rate(g, f * pc.theta)
    out["delta_f"] = out["aggregate_game"] - out["aggregate_planner"]
    return out


def sweep(run: RunConfig, report: RunReport, out_dir: Path) -> None:
    if run.sweep is None:
        raise ValidationError("sweep subcommand needs a 'sweep' section in the scenario document")
    sc, spec = run.scenario, run.sweep
    rows = []
    for value in spec.values:
        g, f, rho = sc.growth, sc.f, sc.rho
        if spec.parameter == "f":
            if not float(value).is_integer():
                raise InvalidParameter(f"Sweep over f needs whole player counts, got {value:g}")
            f = int(value)
        elif spec.parameter == "rho":
            rho = value
        else:
            g = growth_model(g.family, **{**g.parameters(), spec.parameter: value})
        outputs = sweep_outputs(g, f, rho)
        rows.append({"name": f"{spec.parameter}={value:g}", spec.parameter: value,
                     **{key: outputs[key] for key in spec.outputs}})
    frame = pd.DataFrame(rows).drop(columns="name")
    out_dir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_dir / "sweep.csv", index=False, float_format="%.12g")
    report.artifacts.append("sweep.csv")
    report.extend("sweep", rows)


def run_scenario(subcommand: str, run: RunConfig, out_dir: Path, regime: Regime = Regime.PLANNER,
                 theta: Optional[float] = None) -> RunReport:
    """Run one subcommand; raises VerificationFailed after the report is complete if checks fail."""
    report = RunReport(subcommand=subcommand)
    logger.info("Running %s", subcommand)
    if subcommand == "analyze":
        analyze(run, report)
    elif subcommand == "simulate":
        simulate(run, report, out_dir, regime, theta)
    elif subcommand == "verify":
        failed = verify(run, report)
        if failed:
            report.sections.setdefault("failed", []).extend({"name": name} for name in failed)
    elif subcommand == "compare":
        compare(run, report, out_dir)
    elif subcommand == "sweep":
        sweep(run, report, out_dir)
    else:
        raise ValidationError(f"Unknown subcommand {subcommand!r}")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netharvest", description="Networked renewable-resource extraction engine")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", "-f", required=True, type=Path)
    parser.add_argument("--out", "-o", type=Path, default=None)
    parser.add_argument("--regime", choices=[r.value for r in Regime], default=Regime.PLANNER.value)
    parser.add_argument("--theta", type=float, default=None)
    parser.add_argument("--format", choices=("text", "keyvalue", "both"), default="both")
    parser.add_argument("--log-level", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    out_dir = args.out or default_out_dir()
    setup_logging(args.log_level or os.getenv("NETHARVEST_LOG_LEVEL", "INFO"), out_dir)
    try:
        run = parse_config(args.config)
        report = run_scenario(args.subcommand, run, out_dir, Regime(args.regime), args.theta)
        formats = ("text", "keyvalue") if args.format == "both" else (args.format,)
        for fmt in formats:
            emit_report(report, out_dir, fmt)
        failed = [row["name"] for row in report.sections.get("failed", [])]
        if failed:
            raise VerificationFailed(failed)
        return EXIT_OK
    except ValidationError as exc:
        logger.error("Invalid scenario: %s", exc)
        return EXIT_VALIDATION
    except VerificationFailed as exc:
        logger.error("%s", exc)
        return EXIT_VERIFICATION
    except (NetharvestError, OSError) as exc:
        logger.error("Run failed: %s", exc)
        return EXIT_RUNTIME
    finally:
        shutdown_logging()


if __name__ == "__main__":
    sys.exit(main())
