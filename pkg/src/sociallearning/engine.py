"""Belief update engine: local Bayes step plus log-linear consensus.

All belief vectors live in log space as arrays of shape (..., n, m); leading
axes broadcast, so one code path serves a single network, a batch of
replications, and the exhaustive path enumeration used by the tail analysis.
A -inf entry marks a hypothesis with exactly zero belief; positive mixing
weights propagate it through consensus.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .models import NodeModel

ROW_NORM_TOL = 1e-9


class ZeroPrior(ValueError):
    """Initial beliefs must put positive mass on every hypothesis."""


class AllZeroPosterior(ArithmeticError):
    """An observation had zero likelihood under every hypothesis."""


class AllZeroMessage(ArithmeticError):
    """Quantization rounded an entire outgoing message to zero."""


@dataclass(frozen=True)
class QuantizationSpec:
    """Messages are rounded to multiples of 1/d_levels before sending."""
    enabled: bool
    d_levels: int = 0

    def __post_init__(self):
        if self.enabled and self.d_levels < 1:
            raise ValueError("d_levels must be at least 1 when enabled")


@dataclass(frozen=True)
class BeliefState:
    """Log-beliefs after consensus (log_q) and after Bayes (log_b) at step t."""
    log_q: np.ndarray
    log_b: np.ndarray
    t: int


@dataclass(frozen=True)
class StepInput:
    """Per-node log-likelihood table for one round, shape (..., n, m)."""
    log_likelihoods: np.ndarray

    @classmethod
    def from_observations(cls, models: list[NodeModel], observations) -> "StepInput":
        cols = [mod.log_likelihood_all(np.asarray(observations[i]))
                for i, mod in enumerate(models)]
        return cls(np.stack(cols, axis=-2))


def _normalize_rows(log_p: np.ndarray, mutate: bool = False) -> np.ndarray:
    """Shift each row so its exponentials sum to 1; hand-rolled because this
    sits on the hot path of the exhaustive enumerations."""
    mx = np.max(log_p, axis=-1, keepdims=True)
    if np.isneginf(mx).any():
        raise AllZeroPosterior("a belief row lost all its mass")
    out = log_p if mutate else log_p.copy()
    out -= mx                      # -inf entries stay -inf: mx is finite
    total = np.exp(out).sum(axis=-1, keepdims=True)
    out -= np.log(total)
    return out


def init_beliefs(n: int, m: int, prior=None) -> BeliefState:
    """Uniform (or supplied) strictly positive prior, rows summing to 1."""
    if prior is None:
        log_q = np.full((n, m), -np.log(m))
    else:
        p = np.asarray(prior, dtype=float)
        if p.shape != (n, m):
            raise ValueError(f"prior must have shape ({n}, {m})")
        if (p <= 0).any():
            raise ZeroPrior("prior must be strictly positive everywhere")
        if np.abs(p.sum(axis=1) - 1.0).max() > ROW_NORM_TOL:
            raise ValueError("prior rows must sum to 1")
        log_q = _normalize_rows(np.log(p))
    return BeliefState(log_q=log_q, log_b=log_q.copy(), t=0)


def bayes_step(log_q: np.ndarray, log_likelihoods: np.ndarray) -> np.ndarray:
    """Multiply prior beliefs by likelihoods and renormalize, in log space."""
    return _normalize_rows(log_q + log_likelihoods, mutate=True)


def consensus_step(w: np.ndarray, log_b: np.ndarray) -> np.ndarray:
    """Weighted geometric pooling: log q_i = sum_j W_ij log b_j + const.

    -inf entries cannot enter a matmul directly (0 * inf), so the finite
    part and the absorbing mask are combined separately; the mask pass is
    skipped entirely while all beliefs are positive.
    """
    w = np.asarray(w, dtype=log_b.dtype)
    dead = np.isneginf(log_b)
    if dead.any():
        finite = np.where(dead, 0.0, log_b)
        pooled = np.matmul(w, finite)
        killed = np.matmul((w > 0).astype(log_b.dtype),
                           dead.astype(log_b.dtype)) > 0
        pooled[killed] = -np.inf
    else:
        pooled = np.matmul(w, log_b)
    return _normalize_rows(pooled, mutate=True)


def quantize_message(log_b: np.ndarray, d_levels: int) -> np.ndarray:
    """Integer message counts, nearest multiple of 1/d_levels, ties down.

    Any coordinate below 1/(2 d_levels) rounds to an exact zero.
    """
    scaled = d_levels * np.exp(log_b)
    base = np.floor(scaled)
    return (base + (scaled - base > 0.5)).astype(np.int64)


def dequantize_normalize(counts: np.ndarray) -> np.ndarray:
    """Log of counts renormalized per sender row; zero counts become -inf."""
    totals = counts.sum(axis=-1, keepdims=True)
    if (totals == 0).any():
        raise AllZeroMessage("all message coordinates quantized to zero")
    with np.errstate(divide="ignore"):
        return np.log(counts) - np.log(totals)


def step(state: BeliefState, w: np.ndarray, inp: StepInput,
         quant: QuantizationSpec | None = None) -> BeliefState:
    """One protocol round: Bayes update, (optional) quantize, consensus."""
    log_b = bayes_step(state.log_q, inp.log_likelihoods)
    sent = log_b
    if quant is not None and quant.enabled:
        sent = dequantize_normalize(quantize_message(log_b, quant.d_levels))
    return BeliefState(log_q=consensus_step(w, sent), log_b=log_b, t=state.t + 1)


def baseline_linear_step(state: BeliefState, w: np.ndarray,
                         inp: StepInput) -> BeliefState:
    """Arithmetic pooling q_i = sum_j W_ij b_j, evaluated without leaving
    log space so centuries-deep trajectories cannot underflow."""
    log_b = bayes_step(state.log_q, inp.log_likelihoods)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    stacked = log_w[..., :, :, None] + log_b[..., None, :, :]
    log_q = _normalize_rows(logsumexp(stacked, axis=-2))
    return BeliefState(log_q=log_q, log_b=log_b, t=state.t + 1)
