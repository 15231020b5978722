"""Scenario documents: YAML syntax, pydantic schema, domain construction."""
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError as SchemaError, model_validator

from netharvest.dynamics import Scenario, SimConfig, build_scenario
from netharvest.errors import ParseError
from netharvest.growth_policy import growth_model
from netharvest.network_model import build_network, extraction_pattern, fick_from_weights, scaled
from netharvest.verify import VerifySettings

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = "out"
SWEEP_PARAMETERS = ("f", "rho", "Gamma", "K", "delta", "sigma")
SWEEP_OUTPUTS = (
    "theta_star", "theta_hat", "aggregate_planner", "aggregate_game", "delta_f", "m_bar", "m_star", "m_hat",
    "A_planner", "B_planner", "A_game", "B_game",
)


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NetworkSection(Section):
    weights: Optional[list[list[float]]] = None
    fick: Optional[list[list[float]]] = None
    scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def exactly_one_matrix(self) -> "NetworkSection":
        if (self.weights is None) == (self.fick is None):
            raise ValueError("give exactly one of 'weights' or 'fick'")
        return self


class GrowthSection(Section):
    family: Literal["S1", "S2", "S3"]
    Gamma: Optional[float] = None
    K: Optional[float] = None
    sigma: Optional[float] = None
    delta: Optional[float] = None


class SimSection(Section):
    horizon: float = Field(100.0, gt=0)
    rel_tol: float = Field(1e-9, gt=0)
    abs_tol: float = Field(1e-12, gt=0)
    max_step: Optional[float] = Field(None, gt=0)
    negativity_tol: float = Field(1e-9, ge=0)
    quadrature_points: int = Field(2048, ge=3)


class VerifySection(Section):
    grid_points: int = Field(41, ge=2)
    multipliers: list[float] = [0.5, 0.9, 1.1, 1.5]
    seeds: list[int] = list(range(20))
    identity_tol: float = Field(1e-10, gt=0)
    integration_tol: float = Field(1e-4, gt=0)
    mass_tol: float = Field(1e-6, gt=0)
    spectral_tol: float = Field(1e-8, gt=0)


class SweepSection(Section):
    parameter: Literal["f", "rho", "Gamma", "K", "delta", "sigma"]
    values: list[float] = Field(min_length=1)
    outputs: list[Literal[SWEEP_OUTPUTS]] = list(SWEEP_OUTPUTS)


class ScenarioDocument(Section):
    network: NetworkSection
    active_nodes: list[int] = Field(min_length=1)
    growth: GrowthSection
    rho: float
    initial_stock: list[float]
    sim: SimSection = SimSection()
    verify: VerifySection = VerifySection()
    sweep: Optional[SweepSection] = None


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    sim: SimConfig
    verify: VerifySettings
    sweep: Optional[SweepSection] = None
    document: Optional[ScenarioDocument] = None
    source: Optional[Path] = None


def default_out_dir() -> Path:
    return Path(os.getenv("NETHARVEST_OUT_DIR", DEFAULT_OUT_DIR))


def _node_line(root: Optional[yaml.Node], loc: tuple) -> Optional[int]:
    """1-based line of the deepest YAML node reachable along a schema error location."""
    node, line = root, None
    for key in loc:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            node = None
    if node is not None:
        line = node.start_mark.line + 1
    return line


def _schema_error(exc: SchemaError, root: Optional[yaml.Node]) -> ParseError:
    first = exc.errors()[0]
    loc = tuple(first["loc"])
    field = ".".join(str(part) for part in loc) or None
    return ParseError(first["msg"], line=_node_line(root, loc), field=field)


def load_document(text: str) -> ScenarioDocument:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(getattr(exc, "problem", exc)), line=None if mark is None else mark.line + 1) from exc
    if not isinstance(data, dict):
        raise ParseError("document must be a mapping of sections", line=1)
    try:
        return ScenarioDocument.model_validate(data)
    except SchemaError as exc:
        raise _schema_error(exc, root) from exc


def build_run_config(doc: ScenarioDocument, source: Optional[Path] = None) -> RunConfig:
    """Domain objects from a schema-valid document; domain errors propagate unchanged."""
    if doc.network.weights is not None:
        network = build_network(doc.network.weights)
    else:
        network = fick_from_weights(doc.network.fick)
    if doc.network.scale != 1.0:
        network = scaled(network, doc.network.scale)
    growth = growth_model(doc.growth.family, Gamma=doc.growth.Gamma, K=doc.growth.K,
                          sigma=doc.growth.sigma, delta=doc.growth.delta)
    pattern = extraction_pattern(network.n, doc.active_nodes)
    scenario = build_scenario(network, pattern, growth, doc.rho, doc.initial_stock)
    sim = SimConfig(**doc.sim.model_dump())
    verify = VerifySettings(
        grid_points=doc.verify.grid_points,
        multipliers=tuple(doc.verify.multipliers),
        seeds=tuple(doc.verify.seeds),
        identity_tol=doc.verify.identity_tol,
        integration_tol=doc.verify.integration_tol,
        mass_tol=doc.verify.mass_tol,
        spectral_tol=doc.verify.spectral_tol,
    )
    return RunConfig(scenario=scenario, sim=sim, verify=verify, sweep=doc.sweep, document=doc, source=source)


def parse_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    run = build_run_config(load_document(text), source=path)
    sc = run.scenario
    logger.info("Loaded %s: n=%d, F=%s, %s, rho=%g", path, sc.n, list(sc.pattern.labels),
                sc.growth.family.value, sc.rho)
    return run
