"""Convergence-rate predictions and empirical rate extraction.

The central quantity is the centrality-weighted divergence
K(a, b) = sum_i v_i D(f_i(.; a) || f_i(.; b)); wrong-hypothesis beliefs decay
at K(true, k) per step and several lower bounds derive from the same table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import HypothesisSet, NodeModel
from .network import StochasticMatrix, period, stationary_distribution


class AbsorbedBelief(ArithmeticError):
    """The fit window contains beliefs that are exactly zero."""


class UnboundedRatios(ValueError):
    """Hoeffding-style exponents need a finite log-likelihood-ratio bound."""


@dataclass(frozen=True)
class RatePrediction:
    """Predicted asymptotics for a scenario.

    k_vec[k] is the decay exponent of the belief in hypothesis k (zero at
    the true index), mu_lower bounds every node's rate from below by the
    smallest wrong-hypothesis exponent, and rho_l_lower bounds the network
    learning rate by the smallest entry of the pairwise divergence table.
    """
    k_vec: np.ndarray
    mu_lower: float
    rho_l_lower: float
    v: np.ndarray
    pair_table: np.ndarray


@dataclass(frozen=True)
class RejectionTrace:
    """Least-squares slopes of -log q over the tail of a trajectory."""
    slopes: np.ndarray        # (reps, n, m)
    mean_slope: np.ndarray    # (n, m)
    stderr: np.ndarray        # (n, m)
    fit_start: int
    horizon: int


def _as_matrix(w) -> np.ndarray:
    return w.w if isinstance(w, StochasticMatrix) else np.asarray(w, dtype=float)


def network_divergence(models: list[NodeModel], hyp: HypothesisSet,
                       v: np.ndarray) -> np.ndarray:
    """Centrality-weighted KL from the true hypothesis to each other one."""
    k_vec = np.zeros(hyp.m)
    for i, mod in enumerate(models):
        for k in range(hyp.m):
            if k != hyp.true_index:
                k_vec[k] += v[i] * mod.kl(hyp.true_index, k)
    k_vec.setflags(write=False)
    return k_vec


def divergence_table(models: list[NodeModel], m: int,
                     v: np.ndarray) -> np.ndarray:
    """Pairwise table K[a, b] = sum_i v_i D(f_i(.; a) || f_i(.; b))."""
    table = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            if a != b:
                table[a, b] = sum(v[i] * mod.kl(a, b)
                                  for i, mod in enumerate(models))
    table.setflags(write=False)
    return table


def predict_rates(models: list[NodeModel], hyp: HypothesisSet,
                  w) -> RatePrediction:
    matrix = _as_matrix(w)
    v = stationary_distribution(StochasticMatrix(matrix)).v
    k_vec = network_divergence(models, hyp, v)
    wrong = [k_vec[k] for k in range(hyp.m) if k != hyp.true_index]
    table = divergence_table(models, hyp.m, v)
    off_diag = table[~np.eye(hyp.m, dtype=bool)]
    return RatePrediction(
        k_vec=k_vec,
        mu_lower=float(min(wrong)),
        rho_l_lower=float(off_diag.min()),
        v=v,
        pair_table=table,
    )


def empirical_rejection(log_q_traj: np.ndarray, fit_fraction: float = 0.5
                        ) -> RejectionTrace:
    """Fit -log q_i^t(k) = a + slope * t over the final fit_fraction of steps.

    log_q_traj has shape (reps, T+1, n, m) or (T+1, n, m); the slope
    estimates the per-step rejection rate of each hypothesis at each node.
    Standard errors come from the spread across replications, falling back
    to the single-fit residual formula when there is only one.
    """
    traj = np.asarray(log_q_traj, dtype=float)
    if traj.ndim == 3:
        traj = traj[None]
    reps, steps, n, m = traj.shape
    horizon = steps - 1
    fit_start = int(math.floor(horizon * (1.0 - fit_fraction)))
    window = traj[:, fit_start:]
    if np.isneginf(window).any():
        raise AbsorbedBelief("zero beliefs inside the fit window")

    t = np.arange(fit_start, steps, dtype=float)
    t_c = t - t.mean()
    denom = float(np.dot(t_c, t_c))
    y = -window                                        # (reps, len, n, m)
    slopes = np.einsum("l,rlnm->rnm", t_c, y) / denom
    mean_slope = slopes.mean(axis=0)
    if reps > 1:
        stderr = slopes.std(axis=0, ddof=1) / math.sqrt(reps)
    else:
        fitted = (y.mean(axis=1, keepdims=True)
                  + t_c[None, :, None, None] * slopes[:, None])
        ssr = ((y - fitted) ** 2).sum(axis=1)
        dof = max(len(t) - 2, 1)
        stderr = np.sqrt(ssr[0] / dof / denom)
    return RejectionTrace(slopes=slopes, mean_slope=mean_slope,
                          stderr=stderr, fit_start=fit_start, horizon=horizon)


def residual_variance(log_q_traj: np.ndarray, fit_fraction: float = 0.5
                      ) -> np.ndarray:
    """Residual variance of the per-replication tail fits, shape (reps, n, m).

    Large values mean -log q wobbles around its asymptotic line; a periodic
    weight matrix produces visibly larger wobble than an aperiodic one.
    """
    traj = np.asarray(log_q_traj, dtype=float)
    if traj.ndim == 3:
        traj = traj[None]
    steps = traj.shape[1]
    fit_start = int(math.floor((steps - 1) * (1.0 - fit_fraction)))
    window = traj[:, fit_start:]
    if np.isneginf(window).any():
        raise AbsorbedBelief("zero beliefs inside the fit window")
    t = np.arange(fit_start, steps, dtype=float)
    t_c = t - t.mean()
    denom = float(np.dot(t_c, t_c))
    y = -window
    slopes = np.einsum("l,rlnm->rnm", t_c, y) / denom
    fitted = (y.mean(axis=1, keepdims=True)
              + t_c[None, :, None, None] * slopes[:, None])
    dof = max(len(t) - 2, 1)
    return ((y - fitted) ** 2).sum(axis=1) / dof


@dataclass(frozen=True)
class HoeffdingBounds:
    """Finite-ratio concentration exponents for the empirical rate.

    below[e] bounds P(rate <= K_k - eps_e); above[e, k] bounds
    P(rate_k >= K_k + eps_e), switching formula when eps reaches
    l_bound - K_k.  Entries at the true hypothesis are NaN.
    """
    epsilons: tuple[float, ...]
    l_bound: float
    period: int
    k_vec: np.ndarray
    below: np.ndarray
    above: np.ndarray


def hoeffding_exponents(models: list[NodeModel], hyp: HypothesisSet, w,
                        epsilons) -> HoeffdingBounds:
    matrix = _as_matrix(w)
    l_bound = max(mod.log_ratio_bound() for mod in models)
    if not math.isfinite(l_bound):
        raise UnboundedRatios("some node has unbounded log-likelihood ratios")
    d = period(StochasticMatrix(matrix))
    v = stationary_distribution(StochasticMatrix(matrix)).v
    k_vec = network_divergence(models, hyp, v)
    wrong = np.array([k_vec[k] for k in range(hyp.m) if k != hyp.true_index])
    min_k_sq = float((wrong ** 2).min())

    eps = tuple(float(e) for e in epsilons)
    if any(e <= 0 for e in eps):
        raise ValueError("epsilons must be positive")
    scale = 2.0 * l_bound ** 2 * d
    below = np.array([e * e / scale for e in eps])
    above = np.full((len(eps), hyp.m), np.nan)
    for j, e in enumerate(eps):
        for k in range(hyp.m):
            if k == hyp.true_index:
                continue
            if e <= l_bound - k_vec[k]:
                above[j, k] = min(e * e, min_k_sq) / scale
            else:
                above[j, k] = min_k_sq / scale
    below.setflags(write=False)
    above.setflags(write=False)
    return HoeffdingBounds(epsilons=eps, l_bound=float(l_bound), period=d,
                           k_vec=k_vec, below=below, above=above)
