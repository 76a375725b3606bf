"""Per-node observation likelihood families.

Every family evaluates log-likelihoods, KL divergences between hypothesis
pairs, the worst-case log-likelihood-ratio bound, and pairwise log moment
generating functions.  All results are in nats; all belief-path math stays in
log space because the engine multiplies hundreds of densities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import digamma, gammaln, logsumexp

KL_ZERO_TOL = 1e-12
_QUAD_RTOL = 1e-8
_LOG2PI = math.log(2.0 * math.pi)


class OutOfSupport(ValueError):
    """Observation lies outside the model's support."""


class QuadratureNotConverged(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class MgfDiverges(ArithmeticError):
    """The moment generating function is infinite at this exponent."""


@dataclass(frozen=True)
class HypothesisSet:
    """Finite hypothesis set with the designated true index."""
    m: int
    labels: tuple[str, ...]
    true_index: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least two hypotheses")
        if len(self.labels) != self.m:
            raise ValueError("label count must equal m")
        if len(set(self.labels)) != self.m:
            raise ValueError("labels must be distinct")
        if not 0 <= self.true_index < self.m:
            raise ValueError("true_index out of range")


@dataclass(frozen=True)
class DistinguishabilityReport:
    """Which hypotheses each node can tell apart from the true one.

    equivalent_sets[i] lists the hypothesis indices whose local distribution
    at node i matches the true one (KL below ``KL_ZERO_TOL``); the true index
    always belongs to every set.  kl_table[i, k] = D(f_i(true) || f_i(k)).
    """
    equivalent_sets: tuple[tuple[int, ...], ...]
    globally_identifiable: bool
    kl_table: np.ndarray


class NodeModel:
    """Base class; subclasses hold per-hypothesis parameters for one node."""

    node: int
    family = "abstract"

    @property
    def m(self) -> int:
        raise NotImplementedError

    # finite observation alphabet, or None for continuous families
    @property
    def alphabet(self):
        return None

    def sample(self, hypothesis: int, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def log_likelihood(self, hypothesis: int, x):
        raise NotImplementedError

    def log_likelihood_all(self, x) -> np.ndarray:
        """Log-density of x under every hypothesis, shape x.shape + (m,)."""
        xs = np.asarray(x, dtype=float)
        out = np.stack([np.broadcast_to(self.log_likelihood(k, xs), xs.shape)
                        for k in range(self.m)], axis=-1)
        return out

    def kl(self, a: int, b: int) -> float:
        raise NotImplementedError

    def log_ratio_bound(self) -> float:
        raise NotImplementedError

    def pair_log_mgf(self, k: int, truth: int, exponent: float) -> float:
        raise NotImplementedError

    def _check_hyp(self, *idx):
        for k in idx:
            if not 0 <= k < self.m:
                raise ValueError(f"hypothesis index {k} out of range (m={self.m})")


def _finite_kl(pa: np.ndarray, pb: np.ndarray) -> float:
    """KL between two finite distributions; inf on support mismatch."""
    mask = pa > 0
    if (pb[mask] == 0).any():
        return math.inf
    return float(np.sum(pa[mask] * (np.log(pa[mask]) - np.log(pb[mask]))))


def _finite_log_mgf(pt: np.ndarray, pk: np.ndarray, e: float) -> float:
    """log sum_x pt(x) * (pk(x)/pt(x))^e over the support of pt."""
    mask = pt > 0
    pt, pk = pt[mask], pk[mask]
    if (pk == 0).any() and e < 0:
        raise MgfDiverges("zero likelihood ratio raised to a negative exponent")
    with np.errstate(divide="ignore"):
        terms = np.log(pt) + e * (np.log(pk) - np.log(pt))
    return float(logsumexp(terms))


def _finite_ratio_bound(table: np.ndarray) -> float:
    """sup over symbols and hypothesis pairs of |log f(x;a)/f(x;b)|.

    Only symbols inside both supports count; a one-sided zero makes the
    bound infinite.
    """
    m = table.shape[0]
    bound = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            pa, pb = table[a], table[b]
            active = (pa > 0) | (pb > 0)
            if ((pa[active] == 0) != (pb[active] == 0)).any():
                return math.inf
            both = (pa > 0) & (pb > 0)
            if both.any():
                r = np.abs(np.log(pa[both]) - np.log(pb[both]))
                bound = max(bound, float(r.max()))
    return bound


@dataclass(frozen=True)
class BernoulliModel(NodeModel):
    node: int
    p: tuple[float, ...]
    family = "bernoulli"

    def __post_init__(self):
        if any(not 0.0 <= q <= 1.0 for q in self.p):
            raise ValueError("bernoulli parameters must lie in [0, 1]")

    @property
    def m(self):
        return len(self.p)

    @property
    def alphabet(self):
        return (0, 1)

    def _table(self) -> np.ndarray:
        p = np.asarray(self.p)
        return np.stack([1.0 - p, p], axis=1)       # (m, 2): columns x=0, x=1

    def sample(self, hypothesis, rng, size=None):
        self._check_hyp(hypothesis)
        draw = rng.random(size) < self.p[hypothesis]
        return draw.astype(np.int64) if size is not None else int(draw)

    def log_likelihood(self, hypothesis, x):
        self._check_hyp(hypothesis)
        xs = np.asarray(x)
        if not np.isin(xs, (0, 1)).all():
            raise OutOfSupport("bernoulli observations must be 0 or 1")
        q = self.p[hypothesis]
        with np.errstate(divide="ignore"):
            out = np.where(xs == 1, np.log(q), np.log1p(-q))
        return out if out.ndim else float(out)

    def log_likelihood_all(self, x):
        xs = np.asarray(x)
        p = np.asarray(self.p)
        with np.errstate(divide="ignore"):
            return np.where(xs[..., None] == 1, np.log(p), np.log1p(-p))

    def kl(self, a, b):
        self._check_hyp(a, b)
        return _finite_kl(self._table()[a], self._table()[b])

    def log_ratio_bound(self):
        return _finite_ratio_bound(self._table())

    def pair_log_mgf(self, k, truth, exponent):
        self._check_hyp(k, truth)
        return _finite_log_mgf(self._table()[truth], self._table()[k], exponent)


@dataclass(frozen=True)
class CategoricalModel(NodeModel):
    node: int
    table: tuple[tuple[float, ...], ...]     # m rows over a finite alphabet
    family = "categorical"

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=float)
        if arr.ndim != 2:
            raise ValueError("categorical table must be m x alphabet")
        if (arr < 0).any() or (arr > 1).any():
            raise ValueError("categorical probabilities must lie in [0, 1]")
        if np.abs(arr.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("categorical rows must sum to 1")

    @property
    def m(self):
        return len(self.table)

    @property
    def alphabet(self):
        return tuple(range(len(self.table[0])))

    def _arr(self):
        a = np.asarray(self.table, dtype=float)
        return a / a.sum(axis=1, keepdims=True)

    def sample(self, hypothesis, rng, size=None):
        self._check_hyp(hypothesis)
        out = rng.choice(len(self.table[0]), size=size, p=self._arr()[hypothesis])
        return out if size is not None else int(out)

    def log_likelihood(self, hypothesis, x):
        self._check_hyp(hypothesis)
        xs = np.asarray(x, dtype=np.int64)
        if (xs < 0).any() or (xs >= len(self.table[0])).any():
            raise OutOfSupport("categorical observation outside alphabet")
        with np.errstate(divide="ignore"):
            out = np.log(self._arr())[hypothesis, xs]
        return out if out.ndim else float(out)

    def log_likelihood_all(self, x):
        xs = np.asarray(x, dtype=np.int64)
        with np.errstate(divide="ignore"):
            return np.log(self._arr()).T[xs]

    def kl(self, a, b):
        self._check_hyp(a, b)
        return _finite_kl(self._arr()[a], self._arr()[b])

    def log_ratio_bound(self):
        return _finite_ratio_bound(self._arr())

    def pair_log_mgf(self, k, truth, exponent):
        self._check_hyp(k, truth)
        return _finite_log_mgf(self._arr()[truth], self._arr()[k], exponent)


@dataclass(frozen=True)
class GaussianModel(NodeModel):
    node: int
    mean: tuple[float, ...]
    sigma: float
    family = "gaussian"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def m(self):
        return len(self.mean)

    def sample(self, hypothesis, rng, size=None):
        self._check_hyp(hypothesis)
        out = rng.normal(self.mean[hypothesis], self.sigma, size=size)
        return out if size is not None else float(out)

    def log_likelihood(self, hypothesis, x):
        self._check_hyp(hypothesis)
        xs = np.asarray(x, dtype=float)
        z = (xs - self.mean[hypothesis]) / self.sigma
        out = -0.5 * z * z - math.log(self.sigma) - 0.5 * _LOG2PI
        return out if out.ndim else float(out)

    def log_likelihood_all(self, x):
        xs = np.asarray(x, dtype=float)
        mu = np.asarray(self.mean)
        z = (xs[..., None] - mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - 0.5 * _LOG2PI

    def kl(self, a, b):
        self._check_hyp(a, b)
        d = self.mean[a] - self.mean[b]
        return d * d / (2.0 * self.sigma ** 2)

    def log_ratio_bound(self):
        # the log ratio grows linearly in |x| whenever two means differ
        mu = np.asarray(self.mean)
        return math.inf if np.ptp(mu) > 0 else 0.0

    def pair_log_mgf(self, k, truth, exponent):
        """Exact quadratic-exponent algebra: KL * e * (e - 1)."""
        self._check_hyp(k, truth)
        return self.kl(truth, k) * exponent * (exponent - 1.0)


def _quad_log_integral(log_f, lo: float, hi: float) -> float:
    """log of integral exp(log_f) over [lo, hi] with a max shift."""
    grid = np.linspace(lo, hi, 513)
    shift = float(np.max(log_f(grid)))
    if not math.isfinite(shift):
        raise QuadratureNotConverged("integrand is not finite on the window")
    val, err = quad(lambda x: math.exp(log_f(x) - shift), lo, hi, limit=200)
    if val <= 0 or err > max(1e-12, _QUAD_RTOL * val):
        raise QuadratureNotConverged(
            f"quadrature error {err} too large for integral {val}")
    return shift + math.log(val)


@dataclass(frozen=True)
class GaussianMixtureModel(NodeModel):
    node: int
    weights: tuple[tuple[float, ...], ...]   # m x components
    means: tuple[tuple[float, ...], ...]
    sigma: float
    family = "gaussian_mixture"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        if w.shape != mu.shape or w.ndim != 2:
            raise ValueError("weights and means must share shape m x components")
        if (w < 0).any() or np.abs(w.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("mixture weights must be nonnegative and sum to 1")

    @property
    def m(self):
        return len(self.weights)

    def sample(self, hypothesis, rng, size=None):
        self._check_hyp(hypothesis)
        w = np.asarray(self.weights[hypothesis])
        mu = np.asarray(self.means[hypothesis])
        comp = rng.choice(len(w), size=size, p=w / w.sum())
        out = rng.normal(mu[comp], self.sigma)
        return out if size is not None else float(out)

    def log_likelihood(self, hypothesis, x):
        self._check_hyp(hypothesis)
        xs = np.asarray(x, dtype=float)
        w = np.asarray(self.weights[hypothesis])
        mu = np.asarray(self.means[hypothesis])
        z = (xs[..., None] - mu) / self.sigma
        comp = -0.5 * z * z - math.log(self.sigma) - 0.5 * _LOG2PI
        with np.errstate(divide="ignore"):
            out = logsumexp(comp, axis=-1, b=w)
        return out if np.ndim(out) else float(out)

    def log_likelihood_all(self, x):
        xs = np.asarray(x, dtype=float)
        return np.stack([self.log_likelihood(k, xs) for k in range(self.m)],
                        axis=-1)

    def _window(self, pad: float) -> tuple[float, float]:
        mu = np.asarray(self.means)
        return float(mu.min() - pad), float(mu.max() + pad)

    def kl(self, a, b):
        """Mixture KL by adaptive quadrature on a 12-sigma window."""
        self._check_hyp(a, b)
        if self.weights[a] == self.weights[b] and self.means[a] == self.means[b]:
            return 0.0
        lo, hi = self._window(12.0 * self.sigma)

        def integrand(x):
            la = self.log_likelihood(a, x)
            return math.exp(la) * (la - self.log_likelihood(b, x))

        val, err = quad(integrand, lo, hi, limit=200)
        if err > max(1e-12, _QUAD_RTOL * max(abs(val), 1.0)):
            raise QuadratureNotConverged(f"mixture KL error estimate {err}")
        return max(val, 0.0)

    def log_ratio_bound(self):
        same = all(self.weights[a] == self.weights[0]
                   and self.means[a] == self.means[0] for a in range(self.m))
        return 0.0 if same else math.inf

    def pair_log_mgf(self, k, truth, exponent):
        """Quadrature with an exponent-widened window.

        |log ratio| <= c1|x| + c2 with c1 = span/sigma^2, so the tilted
        integrand is negligible beyond 12 sigma + |e| * span past the means.
        """
        self._check_hyp(k, truth)
        mu = np.asarray(self.means)
        span = float(mu.max() - mu.min())
        lo, hi = self._window(12.0 * self.sigma + abs(exponent) * span)

        def log_f(x):
            lt = self.log_likelihood(truth, x)
            return lt + exponent * (self.log_likelihood(k, x) - lt)

        return _quad_log_integral(np.vectorize(log_f), lo, hi)


@dataclass(frozen=True)
class GammaModel(NodeModel):
    """Gamma family with per-hypothesis shape and one shared rate."""
    node: int
    shape: tuple[float, ...]
    rate: float
    family = "gamma"

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if any(a <= 0 for a in self.shape):
            raise ValueError("shapes must be positive")

    @property
    def m(self):
        return len(self.shape)

    def sample(self, hypothesis, rng, size=None):
        self._check_hyp(hypothesis)
        out = rng.gamma(self.shape[hypothesis], 1.0 / self.rate, size=size)
        return out if size is not None else float(out)

    def log_likelihood(self, hypothesis, x):
        self._check_hyp(hypothesis)
        xs = np.asarray(x, dtype=float)
        if (xs <= 0).any():
            raise OutOfSupport("gamma observations must be positive")
        a, b = self.shape[hypothesis], self.rate
        out = (a - 1.0) * np.log(xs) - b * xs + a * math.log(b) - gammaln(a)
        return out if out.ndim else float(out)

    def log_likelihood_all(self, x):
        xs = np.asarray(x, dtype=float)
        a = np.asarray(self.shape)
        return ((a - 1.0) * np.log(xs)[..., None] - self.rate * xs[..., None]
                + a * math.log(self.rate) - gammaln(a))

    def kl(self, a, b):
        """(alpha_a - alpha_b) psi(alpha_a) + ln G(alpha_b) - ln G(alpha_a)."""
        self._check_hyp(a, b)
        aa, ab = self.shape[a], self.shape[b]
        return float((aa - ab) * digamma(aa) + gammaln(ab) - gammaln(aa))

    def log_ratio_bound(self):
        # |log ratio| grows like |alpha_a - alpha_b| * |log x|
        return math.inf if np.ptp(np.asarray(self.shape)) > 0 else 0.0

    def pair_log_mgf(self, k, truth, exponent):
        """Quadrature on (0, inf); diverges when the x->0 power drops to -1.

        The integrand behaves like x^(a-1) near zero; the local exponent is
        estimated numerically so the divergence test stays on the quadrature
        route rather than reusing closed-form algebra.
        """
        self._check_hyp(k, truth)
        if k == truth:
            return 0.0

        def log_f(x):
            lt = self.log_likelihood(truth, x)
            return lt + exponent * (self.log_likelihood(k, x) - lt)

        x1, x2 = 1e-9, 1e-8
        local_pow = (log_f(x2) - log_f(x1)) / (math.log(x2) - math.log(x1)) + 1.0
        if local_pow <= 1e-9:
            raise MgfDiverges(
                f"integrand power {local_pow - 1.0:.3f} near 0 is not integrable")
        mean_scale = max(self.shape) / self.rate
        hi = mean_scale * (40.0 + 10.0 * abs(exponent))
        grid = np.linspace(math.log(1e-12), math.log(hi), 513)

        def log_g(u):                     # substitute x = e^u, du-measure
            return log_f(math.exp(u)) + u

        shift = float(np.max([log_g(u) for u in grid]))
        val, err = quad(lambda u: math.exp(log_g(u) - shift),
                        math.log(1e-12), math.log(hi), limit=200)
        if val <= 0 or err > max(1e-12, _QUAD_RTOL * val):
            raise QuadratureNotConverged(f"gamma mgf quadrature error {err}")
        return shift + math.log(val)


# ---------------------------------------------------------------------------
# module-level operation wrappers

def sample(model: NodeModel, hypothesis: int, rng: np.random.Generator,
           size=None):
    """Draw from f_model(. ; hypothesis); deterministic given the generator."""
    return model.sample(hypothesis, rng, size=size)


def log_likelihood(model: NodeModel, hypothesis: int, x):
    """Natural log of the density/mass of x under one hypothesis."""
    return model.log_likelihood(hypothesis, x)


def kl_divergence(model: NodeModel, a: int, b: int) -> float:
    """D(f(. ; a) || f(. ; b)) in nats; never negative."""
    return model.kl(a, b)


def log_ratio_bound(model: NodeModel) -> float:
    """Worst-case |log f(x;j)/f(x;k)| over x and hypothesis pairs.

    Finite only for finite-alphabet families; unbounded families report inf.
    """
    return model.log_ratio_bound()


def pair_log_mgf(model: NodeModel, k: int, truth: int, exponent: float) -> float:
    """log E_truth[(f(X;k)/f(X;truth))^exponent]."""
    return model.pair_log_mgf(k, truth, exponent)


def distinguishability(models: list[NodeModel],
                       hyp: HypothesisSet) -> DistinguishabilityReport:
    """Per-node locally-equivalent hypothesis sets and global identifiability."""
    if any(mod.m != hyp.m for mod in models):
        raise ValueError("all node models must share the hypothesis count")
    n = len(models)
    table = np.zeros((n, hyp.m))
    sets = []
    for i, mod in enumerate(models):
        for k in range(hyp.m):
            table[i, k] = mod.kl(hyp.true_index, k)
        sets.append(tuple(int(k) for k in range(hyp.m)
                          if table[i, k] <= KL_ZERO_TOL))
    common = set(sets[0])
    for s in sets[1:]:
        common &= set(s)
    table.setflags(write=False)
    return DistinguishabilityReport(
        equivalent_sets=tuple(sets),
        globally_identifiable=(common == {hyp.true_index}),
        kl_table=table,
    )
