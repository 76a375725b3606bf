"""HTTP service exposing validation, simulation, analysis, and reproduction.

Scenario configs travel in request bodies, so a remote server needs no
shared filesystem except for trace and figure output paths.  Malformed
configs come back as 422; runtime failures as 500 with a detail string.
"""
from __future__ import annotations

from importlib.metadata import version

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ConfigError, bundled_names, compile_from_dict
from .figures import reproduce
from .network import NotStronglyConnected
from .reports import (analyze_run, build_analysis, build_ldp, build_simulate,
                      build_validate)
from .runner import read_trace, run
from .schemas import (AnalysisReport, AnalyzeRequest, FigureReport,
                      LdpReport, LdpRequest, ReproduceRequest,
                      ScenarioListResponse, SimulateRequest, SimulateResponse,
                      ValidateRequest, ValidateResponse)

app = FastAPI(title="sociallearning",
              description="Distributed hypothesis testing simulator")


@app.exception_handler(ConfigError)
async def _config_error(_request: Request, exc: ConfigError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(NotStronglyConnected)
async def _not_connected(_request: Request, exc: NotStronglyConnected):
    # a valid scenario whose analysis prerequisites fail is a runtime error
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.exception_handler(ValueError)
async def _value_error(_request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(ArithmeticError)
async def _runtime_error(_request: Request, exc: ArithmeticError):
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": version("sociallearning")}


@app.get("/scenarios", response_model=ScenarioListResponse)
def scenarios() -> ScenarioListResponse:
    return ScenarioListResponse(scenarios=bundled_names())


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    return build_validate(req.config)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    scn = compile_from_dict(req.config)
    return build_simulate(scn, seed=req.seed, horizon=req.horizon,
                          replications=req.replications,
                          protocol=req.protocol, out_dir=req.out_dir)


@app.post("/analyze", response_model=AnalysisReport)
def analyze(req: AnalyzeRequest) -> AnalysisReport:
    scn = compile_from_dict(req.config)
    if req.trace_path is not None:
        log_q = read_trace(req.trace_path)
        return build_analysis(scn, log_q, scn.config.run.seed)
    return analyze_run(run(scn))


@app.post("/ldp", response_model=LdpReport)
def ldp(req: LdpRequest) -> LdpReport:
    if not req.epsilons or any(e <= 0 for e in req.epsilons):
        raise ConfigError("epsilons must be a non-empty list of positives")
    return build_ldp(compile_from_dict(req.config), req.epsilons)


@app.post("/reproduce", response_model=list[FigureReport])
def reproduce_figures(req: ReproduceRequest) -> list[FigureReport]:
    return reproduce(req.figure_id, req.out_dir)
