"""Request and response shapes for the HTTP service and report files.

Reports carry a ``sources`` map describing how each quantity was computed;
the strings are plain descriptions, not citations, so a report is
self-explanatory without any external material.
"""
from __future__ import annotations

from pydantic import BaseModel

from .config import ScenarioConfig


class ValidateRequest(BaseModel):
    config: dict


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str] = []
    name: str | None = None
    nodes: int | None = None
    hypotheses: int | None = None
    strongly_connected: bool | None = None
    period: int | None = None
    globally_identifiable: bool | None = None


class SimulateRequest(BaseModel):
    config: dict
    seed: int | None = None
    horizon: int | None = None
    replications: int | None = None
    protocol: str | None = None
    out_dir: str | None = None


class SimulateResponse(BaseModel):
    name: str
    seed: int
    protocol: str
    horizon: int
    replications: int
    final_belief_true: list[float]        # per node, averaged over reps
    converged_reps: int                   # reps with every node above 0.99
    events: list[dict]
    elapsed_seconds: float
    trace_path: str | None = None
    trace_rows: int | None = None


class SlopeEstimate(BaseModel):
    node: int
    hypothesis: int
    slope: float
    stderr: float
    predicted: float


class AnalysisReport(BaseModel):
    name: str
    seed: int
    horizon: int
    replications: int
    fit_start: int
    centrality: list[float]
    k_vec: list[float]
    mu_lower: float
    rho_l_lower: float
    slopes: list[SlopeEstimate]
    globally_identifiable: bool
    equivalent_sets: list[list[int]]
    sources: dict[str, str]


class AnalyzeRequest(BaseModel):
    config: dict
    trace_path: str | None = None


class LdpPoint(BaseModel):
    hypothesis: int
    epsilon: float
    rate_below: float | None          # conjugate rate at K - eps
    rate_above: float | None          # conjugate rate at K + eps
    hoeffding_below: float | None
    hoeffding_above: float | None


class LdpReport(BaseModel):
    name: str
    k_vec: list[float]
    l_bound: float | None             # None when ratios are unbounded
    period: int
    points: list[LdpPoint]
    sources: dict[str, str]


class LdpRequest(BaseModel):
    config: dict
    epsilons: list[float]


class ReproduceRequest(BaseModel):
    figure_id: str
    out_dir: str


class FigureReport(BaseModel):
    figure_id: str
    claim: str
    passed: bool
    metrics: dict[str, float]
    artifacts: list[str]


class ScenarioListResponse(BaseModel):
    scenarios: list[str]


def scenario_dict(config: ScenarioConfig) -> dict:
    return config.model_dump(mode="json")
