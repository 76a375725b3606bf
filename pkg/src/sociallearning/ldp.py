"""Large-deviation machinery for the weighted log-likelihood-ratio rates.

For each wrong hypothesis k the scalar Z_k = sum_j v_j log(f_j(X; true) /
f_j(X; k)) has mean K_k; lambda_tilde builds its cumulant generating
function, fenchel_legendre computes the convex conjugate, and
rate_function_j pushes the vector rate through the asymptotic map linking
log-belief ratios to the rejection rates.  brute_force_tail cross-checks the
exponents by enumerating every observation path of a finite-alphabet
scenario through the real engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .engine import BeliefState, StepInput, init_beliefs, step
from .models import HypothesisSet, MgfDiverges, NodeModel

_LAMBDA_CAP = 2.0 ** 40
_SHIFT_CAP = 2.0 ** 20
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_PATHS = 2 ** 24
_CHUNK = 2 ** 17
PREIMAGE_TOL = 1e-12


class SupremumAtInfinity(ArithmeticError):
    """The conjugate supremum is not attained at any finite exponent."""


class InfeasiblePreimage(ValueError):
    """The requested point lies outside the image of the rate map."""


class PathSpaceTooLarge(ValueError):
    """Exhaustive enumeration would exceed the path budget."""


@dataclass(frozen=True)
class ConjugatePair:
    """One Fenchel-Legendre evaluation: rate = lambda_star * x - f(lambda_star).

    lambda_grid and values record every probe of the cumulant function made
    during the search (inf where it diverged); evaluator is the probed
    function itself.
    """
    x: float
    rate: float
    lambda_star: float
    lambda_grid: np.ndarray
    values: np.ndarray
    evaluator: Callable[[float], float]


def lambda_tilde(models: list[NodeModel], hyp: HypothesisSet, v: np.ndarray,
                 k: int) -> Callable[[float], float]:
    """Cumulant generating function of Z_k = sum_j v_j log(f_true/f_k)."""
    if k == hyp.true_index:
        raise ValueError("k must differ from the true hypothesis")
    truth = hyp.true_index

    def evaluator(lam: float) -> float:
        return sum(mod.pair_log_mgf(k, truth, -lam * v[j])
                   for j, mod in enumerate(models))

    return evaluator


def fenchel_legendre(evaluator: Callable[[float], float], x: float,
                     certify_tol: float | None = 1e-6) -> ConjugatePair:
    """sup over lambda of lambda * x - evaluator(lambda).

    The bracket doubles outward until the maximum moves inside; hitting the
    exponent cap with the best value still on the boundary raises
    SupremumAtInfinity.  When certify_tol is set, a central difference must
    confirm evaluator'(lambda_star) = x; the check is skipped if the
    cumulant function diverges next to the optimum (boundary supremum).
    """
    probes: list[tuple[float, float]] = []

    def f(lam: float) -> float:
        try:
            val = evaluator(lam)
        except MgfDiverges:
            val = math.inf
        probes.append((lam, val))
        return val

    def g(lam: float) -> float:
        val = f(lam)
        return -math.inf if math.isinf(val) else lam * x - val

    lo, hi = -1.0, 1.0
    g_lo, g_mid, g_hi = g(lo), g(0.0), g(hi)
    while g_hi >= max(g_mid, g_lo):
        if hi >= _LAMBDA_CAP:
            raise SupremumAtInfinity(f"objective still rising at lambda={hi}")
        lo, g_lo = 0.0, g_mid
        hi *= 2.0
        g_mid, g_hi = g_hi, g(hi)
    while g_lo >= max(g_mid, g_hi):
        if -lo >= _LAMBDA_CAP:
            raise SupremumAtInfinity(f"objective still rising at lambda={lo}")
        hi, g_hi = 0.0, g_mid
        lo *= 2.0
        g_mid, g_lo = g_lo, g(lo)

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    g_c, g_d = g(c), g(d)
    while b - a > 1e-10:
        if g_c >= g_d:
            b, d, g_d = d, c, g_c
            c = b - _GOLDEN * (b - a)
            g_c = g(c)
        else:
            a, c, g_c = c, d, g_d
            d = a + _GOLDEN * (b - a)
            g_d = g(d)
    lam_star = 0.5 * (a + b)
    rate = g(lam_star)

    if certify_tol is not None:
        h = 1e-4
        try:
            deriv = (evaluator(lam_star + h) - evaluator(lam_star - h)) / (2 * h)
        except MgfDiverges:
            deriv = None
        if deriv is not None and abs(deriv - x) > certify_tol:
            raise ArithmeticError(
                f"stationarity certificate failed: slope {deriv} vs target {x}")

    grid = np.array([p[0] for p in probes])
    vals = np.array([p[1] for p in probes])
    order = np.argsort(grid)
    return ConjugatePair(x=float(x), rate=float(rate),
                         lambda_star=float(lam_star),
                         lambda_grid=grid[order], values=vals[order],
                         evaluator=evaluator)


def g_map(x: np.ndarray) -> np.ndarray:
    """x_k - max(0, x_1, ..., x_{M-1}); the image is the nonpositive orthant."""
    xs = np.asarray(x, dtype=float)
    return xs - max(0.0, float(xs.max()))


@dataclass(frozen=True)
class RateFunctionValue:
    value: float
    shift: float                       # offset along the all-ones direction
    per_hypothesis: tuple[float, ...]  # coordinate rates at the minimizer


def rate_function_j(models: list[NodeModel], hyp: HypothesisSet,
                    v: np.ndarray, y) -> RateFunctionValue:
    """Rate of the mapped coordinates at y, minimizing over the preimage.

    The preimage of y under the max-shift map is {y} when max(y) < 0 and the
    ray {y + c * ones, c >= 0} when max(y) = 0; anything with max(y) > 0 is
    infeasible.  Coordinate rates add, and along the ray the sum is convex
    in c, so a one-dimensional search is exact for any hypothesis count.
    """
    ys = np.asarray(y, dtype=float)
    wrong = [k for k in range(hyp.m) if k != hyp.true_index]
    if ys.shape != (len(wrong),):
        raise ValueError(f"y must have one coordinate per wrong hypothesis "
                         f"({len(wrong)})")
    top = float(ys.max())
    if top > PREIMAGE_TOL:
        raise InfeasiblePreimage(f"max(y) = {top} is positive")

    evals = {k: lambda_tilde(models, hyp, v, k) for k in wrong}

    def coord_rate(k: int, z: float) -> float:
        try:
            return fenchel_legendre(evals[k], z, certify_tol=None).rate
        except SupremumAtInfinity:
            return math.inf

    def total(c: float) -> float:
        return sum(coord_rate(k, -ys[j] + c) for j, k in enumerate(wrong))

    if top < -PREIMAGE_TOL:
        rates = tuple(coord_rate(k, -ys[j]) for j, k in enumerate(wrong))
        return RateFunctionValue(value=float(sum(rates)), shift=0.0,
                                 per_hypothesis=rates)

    # ray branch: minimize the convex total over the shift c >= 0
    lo, hi = 0.0, 1.0
    f_lo, f_hi = total(lo), total(hi)
    while f_hi <= f_lo and hi < _SHIFT_CAP:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi = total(hi)
    a, b = max(0.0, lo / 2.0 if lo > 0 else 0.0), hi
    c1 = b - _GOLDEN * (b - a)
    d1 = a + _GOLDEN * (b - a)
    f_c, f_d = total(c1), total(d1)
    while b - a > 1e-9:
        if f_c <= f_d:
            b, d1, f_d = d1, c1, f_c
            c1 = b - _GOLDEN * (b - a)
            f_c = total(c1)
        else:
            a, c1, f_c = c1, d1, f_d
            d1 = a + _GOLDEN * (b - a)
            f_d = total(d1)
    c_star = 0.5 * (a + b)
    rates = tuple(coord_rate(k, -ys[j] + c_star) for j, k in enumerate(wrong))
    return RateFunctionValue(value=float(sum(rates)), shift=float(c_star),
                             per_hypothesis=rates)


def brute_force_tail(models: list[NodeModel], hyp: HypothesisSet,
                     w: np.ndarray, horizon: int, hypothesis: int, node: int,
                     threshold: float, side: str = "below") -> float:
    """Exact tail probability of the empirical rate by path enumeration.

    Every joint observation path over the horizon is pushed through the
    actual engine; rho = -log q_node(hypothesis) / horizon at the end and
    the probabilities of qualifying paths are summed.  Only finite-alphabet
    scenarios are supported and the path count is capped at 2^24.

    Paths sharing an observation prefix share engine work: the walk keeps a
    frontier of distinct prefixes, widening it one step at a time and
    switching to per-symbol streaming once the frontier hits the memory
    cap.  Frontier states run in single precision (path log-probabilities
    accumulate in double); the ~1e-5 state error is orders of magnitude
    below the spacing between distinct path rates.
    """
    if side not in ("below", "above"):
        raise ValueError("side must be 'below' or 'above'")
    matrix = np.asarray(w, dtype=float)
    n, m = len(models), hyp.m
    alphabets = []
    for mod in models:
        if mod.alphabet is None:
            raise ValueError(f"node {mod.node} has a continuous alphabet")
        alphabets.append(np.asarray(mod.alphabet))
    bases = [len(a) for a in alphabets]
    per_step = int(np.prod(bases))
    if per_step ** horizon > _MAX_PATHS:
        raise PathSpaceTooLarge(
            f"{per_step}^{horizon} paths exceed the 2^24 budget")

    # one StepInput and log-probability increment per joint symbol
    inputs: list[StepInput] = []
    increments: list[float] = []
    for combo in range(per_step):
        rem, cols, inc = combo, [], 0.0
        for i, mod in enumerate(models):
            obs = alphabets[i][rem % bases[i]]
            rem //= bases[i]
            ll = mod.log_likelihood_all(np.asarray(obs))
            inc += float(ll[hyp.true_index])
            cols.append(ll.astype(np.float32))
        inputs.append(StepInput(np.stack(cols, axis=-2)))
        increments.append(inc)

    cap = max(_CHUNK, (2 ** 25) // (n * m))
    base = init_beliefs(n, m)
    frontier = BeliefState(base.log_q.astype(np.float32)[None].copy(),
                           base.log_b.astype(np.float32)[None].copy(), 0)
    tail_lse: list[float] = []

    def accumulate(state: BeliefState, logp: np.ndarray) -> None:
        with np.errstate(invalid="ignore"):
            rho = -state.log_q[:, node, hypothesis].astype(float) / horizon
        if side == "below":
            mask = rho <= threshold + 1e-12
        else:
            mask = rho >= threshold - 1e-12
        if mask.any():
            tail_lse.append(float(logsumexp(logp[mask])))

    def walk(state: BeliefState, logp: np.ndarray, remaining: int) -> None:
        if remaining == 0:
            accumulate(state, logp)
            return
        if logp.shape[0] * per_step <= cap:
            children = [(step(state, matrix, inputs[c]), logp + increments[c])
                        for c in range(per_step)]
            merged = BeliefState(
                log_q=np.concatenate([ch.log_q for ch, _ in children]),
                log_b=np.concatenate([ch.log_b for ch, _ in children]),
                t=children[0][0].t)
            merged_logp = np.concatenate([lp for _, lp in children])
            del children
            walk(merged, merged_logp, remaining - 1)
        else:
            # frontier too wide to widen again: stream one symbol at a time
            for c in range(per_step):
                walk(step(state, matrix, inputs[c]), logp + increments[c],
                     remaining - 1)

    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    walk(frontier, np.zeros(1), horizon)
    if not tail_lse:
        return 0.0
    return float(min(math.exp(logsumexp(np.array(tail_lse))), 1.0))
