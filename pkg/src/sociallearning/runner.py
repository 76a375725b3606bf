"""Replicated simulation driver and trace emission.

Each replication draws its generator from SeedSequence(seed, spawn_key=(rep,))
so results are independent of how many replications run and in what order.
Unquantized runs are vectorized across replications; quantized runs go one
replication at a time so an all-zero message terminates only its own run.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .config import CompiledScenario
from .engine import (AllZeroMessage, BeliefState, StepInput,
                     baseline_linear_step, init_beliefs, step)


@dataclass(frozen=True)
class RunEvent:
    rep: int
    t: int
    kind: str


@dataclass(frozen=True)
class RunResult:
    """Full log-belief history, shape (reps, horizon+1, n, m).

    For replications terminated early (quantization zeroed a message) the
    trajectory holds the last reachable state from that step onward and an
    event records where it happened.
    """
    scenario: CompiledScenario
    seed: int
    protocol: str
    log_q: np.ndarray
    events: tuple[RunEvent, ...]
    elapsed: float


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def _sample_log_likelihoods(scn: CompiledScenario, seed: int, reps: int,
                            horizon: int) -> np.ndarray:
    """Observation log-likelihood tables, shape (reps, horizon, n, m)."""
    n, m = scn.matrix.n, scn.hyp.m
    tables = np.empty((reps, horizon, n, m))
    for r in range(reps):
        rng = _rep_rng(seed, r)
        for i, mod in enumerate(scn.models):
            obs = mod.sample(scn.hyp.true_index, rng, size=horizon)
            tables[r, :, i, :] = mod.log_likelihood_all(np.asarray(obs))
    return tables


def run(scn: CompiledScenario, seed: int | None = None,
        horizon: int | None = None, replications: int | None = None,
        protocol: str | None = None) -> RunResult:
    """Simulate the scenario; keyword arguments override the run block."""
    cfg = scn.config.run
    seed = cfg.seed if seed is None else seed
    horizon = cfg.horizon if horizon is None else horizon
    reps = cfg.replications if replications is None else replications
    protocol = cfg.protocol if protocol is None else protocol
    if protocol not in ("log", "linear"):
        raise ValueError("protocol must be 'log' or 'linear'")
    n, m = scn.matrix.n, scn.hyp.m
    w = scn.matrix.w
    prior = np.asarray(scn.config.prior) if scn.config.prior is not None else None

    start = time.perf_counter()
    tables = _sample_log_likelihoods(scn, seed, reps, horizon)
    traj = np.empty((reps, horizon + 1, n, m))
    events: list[RunEvent] = []
    init = init_beliefs(n, m, prior)

    if scn.quant is None:
        state = BeliefState(
            log_q=np.broadcast_to(init.log_q, (reps, n, m)).copy(),
            log_b=np.broadcast_to(init.log_b, (reps, n, m)).copy(), t=0)
        traj[:, 0] = state.log_q
        advance = step if protocol == "log" else baseline_linear_step
        for t in range(horizon):
            state = advance(state, w, StepInput(tables[:, t]))
            traj[:, t + 1] = state.log_q
    else:
        for r in range(reps):
            state = init
            traj[r, 0] = state.log_q
            for t in range(horizon):
                try:
                    state = step(state, w, StepInput(tables[r, t]), scn.quant)
                except AllZeroMessage:
                    events.append(RunEvent(rep=r, t=t + 1,
                                           kind="all_zero_message"))
                    traj[r, t + 1:] = state.log_q
                    break
                traj[r, t + 1] = state.log_q
    elapsed = time.perf_counter() - start
    traj.setflags(write=False)
    return RunResult(scenario=scn, seed=seed, protocol=protocol, log_q=traj,
                     events=tuple(events), elapsed=elapsed)


TRACE_HEADER = ("rep", "t", "node", "hypothesis", "log_belief", "rho")


def write_trace(result: RunResult, path) -> int:
    """Write the full trajectory as CSV, one row per (rep, t, node, hyp).

    Steps start at t=1; rho = -log_belief / t.  Returns the row count,
    reps * horizon * n * m.
    """
    reps, steps, n, m = result.log_q.shape
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in range(reps):
            for t in range(1, steps):
                block = result.log_q[r, t]
                for i in range(n):
                    for k in range(m):
                        lq = block[i, k]
                        writer.writerow((r, t, i, k, repr(float(lq)),
                                         repr(float(-lq / t))))
                        rows += 1
    return rows


def read_trace(path) -> np.ndarray:
    """Reassemble a trace CSV into a (reps, horizon+1, n, m) array.

    The t=0 slice is not stored in traces; it is reconstructed as uniform.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        raw = [(int(r), int(t), int(i), int(k), float(lq))
               for r, t, i, k, lq, _rho in reader]
    if not raw:
        raise ValueError("trace file contains no rows")
    reps = max(r for r, *_ in raw) + 1
    horizon = max(t for _, t, *_ in raw)
    n = max(i for _, _, i, *_ in raw) + 1
    m = max(k for _, _, _, k, _ in raw) + 1
    out = np.full((reps, horizon + 1, n, m), np.nan)
    out[:, 0] = -np.log(m)
    for r, t, i, k, lq in raw:
        out[r, t, i, k] = lq
    if np.isnan(out).any():
        raise ValueError("trace file is missing rows")
    return out
