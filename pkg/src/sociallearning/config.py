"""Scenario configuration: JSON schema, validation, and compilation.

A scenario file fully determines a run: the weight matrix, the hypothesis
labels with the true index, one observation model per node, and run
controls (horizon, replications, seed, protocol, quantization).  Node and
hypothesis indices are zero-based everywhere.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, PositiveInt, ValidationError

from .engine import QuantizationSpec
from .models import (BernoulliModel, CategoricalModel, GammaModel,
                     GaussianMixtureModel, GaussianModel, HypothesisSet,
                     NodeModel)
from .network import StochasticMatrix, validate_stochastic


class ConfigError(ValueError):
    """Scenario file is malformed or internally inconsistent."""


class NetworkSpec(BaseModel):
    w: list[list[float]]


class HypothesesSpec(BaseModel):
    labels: list[str]
    true_index: int


class BernoulliSpec(BaseModel):
    family: Literal["bernoulli"]
    node: int
    p: list[float]


class CategoricalSpec(BaseModel):
    family: Literal["categorical"]
    node: int
    table: list[list[float]]


class GaussianSpec(BaseModel):
    family: Literal["gaussian"]
    node: int
    mean: list[float]
    sigma: float


class GaussianMixtureSpec(BaseModel):
    family: Literal["gaussian_mixture"]
    node: int
    weights: list[list[float]]
    means: list[list[float]]
    sigma: float


class GammaSpec(BaseModel):
    family: Literal["gamma"]
    node: int
    shape: list[float]
    rate: float


ModelSpec = Annotated[
    Union[BernoulliSpec, CategoricalSpec, GaussianSpec, GaussianMixtureSpec,
          GammaSpec],
    Field(discriminator="family"),
]


class QuantizationConfig(BaseModel):
    enabled: bool = False
    d_levels: int = 0


class RunSpec(BaseModel):
    horizon: PositiveInt
    replications: PositiveInt = 1
    seed: int = 42
    protocol: Literal["log", "linear"] = "log"
    quantization: QuantizationConfig = QuantizationConfig()


class ScenarioConfig(BaseModel):
    schema_version: Literal[1]
    name: str
    description: str = ""
    network: NetworkSpec
    hypotheses: HypothesesSpec
    models: list[ModelSpec]
    run: RunSpec
    prior: list[list[float]] | None = None


@dataclass(frozen=True)
class CompiledScenario:
    """Validated runtime objects built from a ScenarioConfig."""
    config: ScenarioConfig
    matrix: StochasticMatrix
    hyp: HypothesisSet
    models: tuple[NodeModel, ...]
    quant: QuantizationSpec | None


def _build_model(spec) -> NodeModel:
    if spec.family == "bernoulli":
        return BernoulliModel(spec.node, tuple(spec.p))
    if spec.family == "categorical":
        return CategoricalModel(spec.node, tuple(map(tuple, spec.table)))
    if spec.family == "gaussian":
        return GaussianModel(spec.node, tuple(spec.mean), spec.sigma)
    if spec.family == "gaussian_mixture":
        return GaussianMixtureModel(spec.node, tuple(map(tuple, spec.weights)),
                                    tuple(map(tuple, spec.means)), spec.sigma)
    if spec.family == "gamma":
        return GammaModel(spec.node, tuple(spec.shape), spec.rate)
    raise ConfigError(f"unknown model family {spec.family!r}")


def compile_scenario(config: ScenarioConfig) -> CompiledScenario:
    """Cross-validate the pieces and build runtime objects."""
    try:
        matrix = validate_stochastic(config.network.w)
    except ValueError as exc:
        raise ConfigError(f"network: {exc}") from exc
    n = matrix.n
    if len(config.models) != n:
        raise ConfigError(f"{len(config.models)} models for {n} nodes")
    if sorted(spec.node for spec in config.models) != list(range(n)):
        raise ConfigError("model node indices must cover 0..n-1 exactly once")

    m = len(config.hypotheses.labels)
    try:
        hyp = HypothesisSet(m=m, labels=tuple(config.hypotheses.labels),
                            true_index=config.hypotheses.true_index)
    except ValueError as exc:
        raise ConfigError(f"hypotheses: {exc}") from exc

    ordered = sorted(config.models, key=lambda spec: spec.node)
    try:
        models = tuple(_build_model(spec) for spec in ordered)
    except ValueError as exc:
        raise ConfigError(f"models: {exc}") from exc
    for mod in models:
        if mod.m != m:
            raise ConfigError(
                f"node {mod.node} parameterizes {mod.m} hypotheses, not {m}")

    if config.prior is not None:
        rows = config.prior
        if len(rows) != n or any(len(r) != m for r in rows):
            raise ConfigError("prior must be n rows of m entries")
        if any(p <= 0 for r in rows for p in r):
            raise ConfigError("prior entries must be strictly positive")

    qc = config.run.quantization
    try:
        quant = QuantizationSpec(True, qc.d_levels) if qc.enabled else None
    except ValueError as exc:
        raise ConfigError(f"quantization: {exc}") from exc
    return CompiledScenario(config=config, matrix=matrix, hyp=hyp,
                            models=models, quant=quant)


def load_scenario(path) -> CompiledScenario:
    """Read and validate a scenario JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return compile_from_dict(raw)


def compile_from_dict(raw: dict) -> CompiledScenario:
    try:
        config = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return compile_scenario(config)


def bundled_names() -> list[str]:
    """Names of the scenario files shipped with the package."""
    root = resources.files("sociallearning").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> CompiledScenario:
    root = resources.files("sociallearning").joinpath("scenarios")
    path = root.joinpath(f"{name}.json")
    if not path.is_file():
        raise ConfigError(f"no bundled scenario named {name!r}; "
                          f"available: {', '.join(bundled_names())}")
    return compile_from_dict(json.loads(path.read_text(encoding="utf-8")))
