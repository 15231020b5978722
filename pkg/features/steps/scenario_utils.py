import shlex
import tempfile
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Tuple

import numpy as np

from netharvest.cli import main
from netharvest.config import RunConfig, parse_config
from netharvest.dynamics import SimConfig


def for_each_case(
    context: Any,
    cases: Iterable[Any],
    check_fn: Callable[[Any], Tuple[bool, Optional[str]]],
    fail_attr: str
) -> None:
    """
    Apply a check function to every case and store the failures on the context.
    Each failure is recorded as "<case>: <reason>".
    """
    failed = []
    for case in cases:
        ok, reason = check_fn(case)
        if not ok:
            failed.append(f"{case}: {reason}")
    setattr(context, fail_attr, failed)


def tolerance(context: Any, key: str) -> float:
    return float(context.config.userdata[key])


def count(context: Any, key: str) -> int:
    return int(context.config.userdata[key])


def parse_vector(text: str) -> np.ndarray:
    return np.array([float(value) for value in text.split(",")])


def parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ";", entries by ","."""
    return np.array([[float(value) for value in row.split(",")] for row in text.split(";")])


def parse_parameters(text: str) -> dict[str, float]:
    """Parameter lists such as Gamma=1,K=10."""
    pairs = (item.split("=") for item in text.split(","))
    return {name.strip(): float(value) for name, value in pairs}


def parse_labels(text: str) -> list[int]:
    return [int(value) for value in text.split(",")]


def load_reference(context: Any, name: str) -> RunConfig:
    if name not in context.scenario_files:
        raise AssertionError(f"Unknown reference scenario {name}; have {sorted(context.scenario_files)}")
    return parse_config(context.scenario_files[name])


def short_horizon(run: RunConfig, horizon: float) -> SimConfig:
    return SimConfig(horizon=horizon, rel_tol=run.sim.rel_tol, abs_tol=run.sim.abs_tol,
                     negativity_tol=run.sim.negativity_tol, quadrature_points=run.sim.quadrature_points)


def capture_error(context: Any, fn: Callable[..., Any], *args, **kwargs) -> Any:
    """Run fn and keep either its result or the raised engine error on the context."""
    context.error = None
    context.result = None
    try:
        context.result = fn(*args, **kwargs)
    except Exception as e:
        context.error = e
    return context.result


def assert_error(context: Any, error_name: str) -> None:
    assert context.error is not None, f"Expected {error_name} but the call succeeded with {context.result!r}"
    names = [cls.__name__ for cls in type(context.error).__mro__]
    assert error_name in names, f"Expected {error_name}, got {type(context.error).__name__}: {context.error}"


def run_cli(context: Any, command: str, config: Path) -> int:
    """Run the CLI into a fresh output directory under the scratch workspace."""
    context.out_dir = Path(tempfile.mkdtemp(prefix="run-", dir=context.workdir))
    argv = shlex.split(command) + ["--config", str(config), "--out", str(context.out_dir)]
    context.exit_code = main(argv)
    return context.exit_code
