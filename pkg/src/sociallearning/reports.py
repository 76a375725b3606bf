"""Builders turning runs and scenarios into serializable reports."""
from __future__ import annotations

import math
import os

import numpy as np

from .analysis import (UnboundedRatios, empirical_rejection,
                       hoeffding_exponents, predict_rates)
from .config import CompiledScenario, ConfigError, compile_from_dict
from .ldp import SupremumAtInfinity, fenchel_legendre, lambda_tilde
from .models import distinguishability
from .network import is_strongly_connected, period
from .runner import RunResult, run, write_trace
from .schemas import (AnalysisReport, FigureReport, LdpPoint, LdpReport,
                      SimulateResponse, SlopeEstimate, ValidateResponse)

_ANALYSIS_SOURCES = {
    "centrality": "left unit eigenvector of the weight matrix, normalized",
    "k_vec": "centrality-weighted KL divergence from the true hypothesis",
    "mu_lower": "smallest wrong-hypothesis entry of k_vec",
    "rho_l_lower": "smallest off-diagonal entry of the pairwise divergence table",
    "slopes": "least-squares fit of -log belief over the final half of steps",
}

_LDP_SOURCES = {
    "rate_below/rate_above": "convex conjugate of the weighted log-ratio "
                             "cumulant function at K -/+ epsilon",
    "hoeffding_below": "epsilon^2 / (2 L^2 d)",
    "hoeffding_above": "three-case bounded-ratio formula at K + epsilon",
}


def build_validate(raw: dict) -> ValidateResponse:
    try:
        scn = compile_from_dict(raw)
    except ConfigError as exc:
        return ValidateResponse(valid=False, errors=[str(exc)])
    connected = is_strongly_connected(scn.matrix)
    report = distinguishability(list(scn.models), scn.hyp)
    return ValidateResponse(
        valid=True,
        name=scn.config.name,
        nodes=scn.matrix.n,
        hypotheses=scn.hyp.m,
        strongly_connected=connected,
        period=period(scn.matrix) if connected else None,
        globally_identifiable=report.globally_identifiable,
    )


def build_simulate(scn: CompiledScenario, seed=None, horizon=None,
                   replications=None, protocol=None,
                   out_dir: str | None = None) -> SimulateResponse:
    result = run(scn, seed=seed, horizon=horizon, replications=replications,
                 protocol=protocol)
    reps, steps, n, _ = result.log_q.shape
    final_true = np.exp(result.log_q[:, -1, :, scn.hyp.true_index])
    trace_path = trace_rows = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        trace_path = os.path.join(out_dir, f"{scn.config.name}_trace.csv")
        trace_rows = write_trace(result, trace_path)
    return SimulateResponse(
        name=scn.config.name,
        seed=result.seed,
        protocol=result.protocol,
        horizon=steps - 1,
        replications=reps,
        final_belief_true=[float(x) for x in final_true.mean(axis=0)],
        converged_reps=int((final_true > 0.99).all(axis=1).sum()),
        events=[{"rep": e.rep, "t": e.t, "kind": e.kind}
                for e in result.events],
        elapsed_seconds=result.elapsed,
        trace_path=trace_path,
        trace_rows=trace_rows,
    )


def build_analysis(scn: CompiledScenario, log_q: np.ndarray,
                   seed: int) -> AnalysisReport:
    prediction = predict_rates(list(scn.models), scn.hyp, scn.matrix)
    fit = empirical_rejection(log_q)
    report = distinguishability(list(scn.models), scn.hyp)
    reps, steps, n, m = np.asarray(log_q).shape if np.asarray(log_q).ndim == 4 \
        else (1, *np.asarray(log_q).shape)
    slopes = [
        SlopeEstimate(node=i, hypothesis=k,
                      slope=float(fit.mean_slope[i, k]),
                      stderr=float(fit.stderr[i, k]),
                      predicted=float(prediction.k_vec[k]))
        for i in range(n) for k in range(m) if k != scn.hyp.true_index
    ]
    return AnalysisReport(
        name=scn.config.name,
        seed=seed,
        horizon=steps - 1,
        replications=reps,
        fit_start=fit.fit_start,
        centrality=[float(x) for x in prediction.v],
        k_vec=[float(x) for x in prediction.k_vec],
        mu_lower=prediction.mu_lower,
        rho_l_lower=prediction.rho_l_lower,
        slopes=slopes,
        globally_identifiable=report.globally_identifiable,
        equivalent_sets=[list(s) for s in report.equivalent_sets],
        sources=dict(_ANALYSIS_SOURCES),
    )


def analyze_run(result: RunResult) -> AnalysisReport:
    return build_analysis(result.scenario, result.log_q, result.seed)


def _finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def build_ldp(scn: CompiledScenario, epsilons) -> LdpReport:
    prediction = predict_rates(list(scn.models), scn.hyp, scn.matrix)
    models = list(scn.models)
    eps = [float(e) for e in epsilons]
    try:
        hoeff = hoeffding_exponents(models, scn.hyp, scn.matrix, eps)
        l_bound: float | None = hoeff.l_bound
        d = hoeff.period
    except UnboundedRatios:
        hoeff = None
        l_bound = None
        d = period(scn.matrix)

    points = []
    for k in range(scn.hyp.m):
        if k == scn.hyp.true_index:
            continue
        evaluator = lambda_tilde(models, scn.hyp, prediction.v, k)
        kk = float(prediction.k_vec[k])
        for j, e in enumerate(eps):
            rates = {}
            for side, x in (("below", kk - e), ("above", kk + e)):
                try:
                    rates[side] = fenchel_legendre(evaluator, x).rate
                except SupremumAtInfinity:
                    rates[side] = None
            points.append(LdpPoint(
                hypothesis=k,
                epsilon=e,
                rate_below=_finite_or_none(rates["below"]),
                rate_above=_finite_or_none(rates["above"]),
                hoeffding_below=float(hoeff.below[j]) if hoeff else None,
                hoeffding_above=float(hoeff.above[j, k]) if hoeff else None,
            ))
    return LdpReport(
        name=scn.config.name,
        k_vec=[float(x) for x in prediction.k_vec],
        l_bound=l_bound,
        period=d,
        points=points,
        sources=dict(_LDP_SOURCES),
    )


def figure_report(figure_id: str, claim: str, passed: bool,
                  metrics: dict[str, float],
                  artifacts: list[str]) -> FigureReport:
    return FigureReport(figure_id=figure_id, claim=claim, passed=bool(passed),
                        metrics={k: float(v) for k, v in metrics.items()},
                        artifacts=artifacts)
