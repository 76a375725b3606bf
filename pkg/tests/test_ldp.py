"""Cumulant functions, convex conjugates, rate maps, and exact tail checks."""
import itertools
import math

import numpy as np
import pytest

from sociallearning import (BernoulliModel, GaussianModel, HypothesisSet,
                            InfeasiblePreimage, PathSpaceTooLarge,
                            SupremumAtInfinity, brute_force_tail,
                            fenchel_legendre, g_map, lambda_tilde,
                            load_bundled, predict_rates, rate_function_j)
from sociallearning.models import MgfDiverges

HYP4 = HypothesisSet(m=4, labels=("t1", "t2", "t3", "t4"), true_index=3)
BERN_MODELS = [BernoulliModel(0, (0.8, 0.25, 0.8, 0.25)),
               BernoulliModel(1, (1 / 3, 1 / 3, 0.25, 0.25))]
GAUSS_MODELS = [GaussianModel(0, (1.0, 0.0, 1.0, 0.0), 1.0),
                GaussianModel(1, (1.0, 1.0, 0.0, 0.0), 1.0)]
V = np.array([0.8, 0.2])


class TestLambdaTilde:
    def test_zero_at_origin(self):
        for k in range(3):
            assert abs(lambda_tilde(BERN_MODELS, HYP4, V, k)(0.0)) < 1e-14

    def test_zero_at_minus_one_single_node(self):
        # lambda = -1 evaluates E[f_k / f_true] = 1
        hyp = HypothesisSet(m=2, labels=("a", "b"), true_index=0)
        ev = lambda_tilde([BernoulliModel(0, (0.3, 0.7))], hyp,
                          np.array([1.0]), 1)
        assert abs(ev(-1.0)) < 1e-12

    def test_slope_at_origin_is_network_divergence(self):
        ev = lambda_tilde(BERN_MODELS, HYP4, V, 0)
        h = 1e-5
        slope = (ev(h) - ev(-h)) / (2 * h)
        assert slope == pytest.approx(0.5637066937541241, abs=1e-6)

    def test_true_hypothesis_rejected(self):
        with pytest.raises(ValueError):
            lambda_tilde(BERN_MODELS, HYP4, V, HYP4.true_index)


# exact conjugates for the gaussian pair: rate(K +- eps) = eps^2 / (4 a)
# with a = sum_j kl_j v_j^2 and K = sum_j kl_j v_j
GAUSS_CASES = [  # (k, K_k, a_k, eps, rate, lambda_star_magnitude)
    (0, 0.5, 0.34, 0.05, 0.0018382352941176470, 0.05 / 0.68),
    (1, 0.1, 0.02, 0.05, 0.03125, 1.25),
    (2, 0.4, 0.32, 0.05, 0.001953125, 0.078125),
]


class TestFenchelLegendre:
    @pytest.mark.parametrize("k,k_val,a,eps,rate,lam", GAUSS_CASES)
    def test_gaussian_closed_form(self, k, k_val, a, eps, rate, lam):
        ev = lambda_tilde(GAUSS_MODELS, HYP4, V, k)
        below = fenchel_legendre(ev, k_val - eps)
        above = fenchel_legendre(ev, k_val + eps)
        assert below.rate == pytest.approx(rate, rel=1e-9)
        assert above.rate == pytest.approx(rate, rel=1e-9)
        assert below.lambda_star == pytest.approx(-lam, abs=1e-6)
        assert above.lambda_star == pytest.approx(lam, abs=1e-6)

    def test_gaussian_quadratic_identity(self):
        ev = lambda_tilde(GAUSS_MODELS, HYP4, V, 0)
        for x in (0.1, 0.35, 0.5, 0.62, 0.9, 1.4):
            pair = fenchel_legendre(ev, x)
            assert pair.rate == pytest.approx((x - 0.5) ** 2 / 1.36,
                                              rel=1e-7, abs=1e-12)

    def test_probe_bookkeeping(self):
        ev = lambda_tilde(GAUSS_MODELS, HYP4, V, 0)
        pair = fenchel_legendre(ev, 0.45)
        assert pair.evaluator is ev
        assert len(pair.lambda_grid) == len(pair.values)
        assert (np.diff(pair.lambda_grid) >= 0).all()
        recomputed = pair.lambda_star * pair.x - ev(pair.lambda_star)
        assert pair.rate == pytest.approx(recomputed, abs=1e-15)

    def test_certificate_rejects_kinked_objective(self):
        # abs() has no stationary point with slope 0.5 anywhere
        with pytest.raises(ArithmeticError, match="certificate"):
            fenchel_legendre(abs, 0.5)

    def test_supremum_at_infinity_both_directions(self):
        linear = lambda lam: 2.0 * lam
        with pytest.raises(SupremumAtInfinity):
            fenchel_legendre(linear, 3.0)
        with pytest.raises(SupremumAtInfinity):
            fenchel_legendre(linear, 1.0)

    def test_boundary_divergence_supremum(self):
        # cumulant finite only on [-1, 1]; sup of 4 lam - lam^2 sits at the wall
        def bounded(lam):
            if abs(lam) > 1.0:
                raise MgfDiverges("outside the strip")
            return lam * lam

        pair = fenchel_legendre(bounded, 4.0)
        assert pair.rate == pytest.approx(3.0, abs=1e-6)
        assert pair.lambda_star == pytest.approx(1.0, abs=1e-6)
        assert np.isinf(pair.values).any()


class TestGMap:
    def test_identity_when_negative(self):
        y = np.array([-0.5, -0.2])
        np.testing.assert_allclose(g_map(y), y, atol=0)

    def test_shifts_by_max(self):
        np.testing.assert_allclose(g_map([0.3, -0.1]), [0.0, -0.4],
                                   atol=1e-15)
        np.testing.assert_allclose(g_map([2.0, 5.0]), [-3.0, 0.0], atol=0)

    def test_image_is_nonpositive(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            x = rng.normal(size=rng.integers(1, 6))
            out = g_map(x)
            assert out.max() <= 0.0
            assert (out.max() == 0.0) == (x.max() >= 0.0)


def coord_rate(models, hyp, v, k, z):
    try:
        return fenchel_legendre(lambda_tilde(models, hyp, v, k), z,
                                certify_tol=None).rate
    except SupremumAtInfinity:
        return math.inf


class TestRateFunction:
    def test_interior_point_decomposes(self):
        y = np.array([-0.5, -0.01, -0.45])
        rf = rate_function_j(BERN_MODELS, HYP4, V, y)
        direct = [coord_rate(BERN_MODELS, HYP4, V, k, -y[j])
                  for j, k in enumerate((0, 1, 2))]
        assert rf.shift == 0.0
        np.testing.assert_allclose(rf.per_hypothesis, direct, atol=1e-12)
        assert rf.value == pytest.approx(sum(direct), abs=1e-12)

    def test_ray_branch_matches_grid_search(self):
        y = np.array([-0.3, 0.0, -0.25])
        rf = rate_function_j(BERN_MODELS, HYP4, V, y)
        assert rf.shift > 0.0

        def total(c):
            return sum(coord_rate(BERN_MODELS, HYP4, V, k, -y[j] + c)
                       for j, k in enumerate((0, 1, 2)))

        coarse = np.linspace(0.0, 0.6, 61)
        c0 = coarse[np.argmin([total(c) for c in coarse])]
        fine = np.linspace(max(0.0, c0 - 0.02), c0 + 0.02, 201)
        best = min(total(c) for c in fine)
        assert rf.value <= best + 1e-8
        assert rf.value == pytest.approx(best, abs=1e-4)

    def test_infeasible_point(self):
        with pytest.raises(InfeasiblePreimage):
            rate_function_j(BERN_MODELS, HYP4, V, [0.1, -0.2, -0.3])

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            rate_function_j(BERN_MODELS, HYP4, V, [-0.1, -0.2])

    def test_many_hypotheses_closed_form(self):
        # 64 hypotheses, gaussian nodes: rate at y = -K/2 is sum K^2/(16 a)
        scn = load_bundled("sensor_net")
        models, hyp = list(scn.models), scn.hyp
        pred = predict_rates(models, hyp, scn.matrix)
        wrong = [k for k in range(hyp.m) if k != hyp.true_index]
        kw = np.array([pred.k_vec[k] for k in wrong])
        rf = rate_function_j(models, hyp, pred.v, -0.5 * kw)
        assert rf.shift == 0.0
        assert np.isfinite(rf.per_hypothesis).all()
        expected = sum(
            kw[j] ** 2 / (16 * sum(pred.v[i] ** 2 * mod.kl(hyp.true_index, k)
                                   for i, mod in enumerate(models)))
            for j, k in enumerate(wrong))
        assert rf.value == pytest.approx(expected, rel=1e-6)


W_TWO = np.array([[0.9, 0.1], [0.4, 0.6]])
HYP2 = HypothesisSet(m=2, labels=("a", "b"), true_index=0)
PAIR_MODELS = [BernoulliModel(0, (0.8, 0.25)), BernoulliModel(1, (1 / 3, 0.25))]


def enumerate_paths():
    """Direct probability-space protocol over every horizon-2 path."""
    tables = [np.array([[0.2, 0.75], [0.8, 0.25]]),
              np.array([[2 / 3, 0.75], [1 / 3, 0.25]])]
    rhos, probs = [], []
    for path in itertools.product(range(2), repeat=4):
        q = np.full((2, 2), 0.5)
        prob = 1.0
        for t in range(2):
            xs = path[2 * t: 2 * t + 2]
            like = np.array([tables[i][xs[i]] for i in range(2)])
            prob *= like[0, 0] * like[1, 0]
            b = like * q
            b /= b.sum(axis=1, keepdims=True)
            q = np.exp(W_TWO @ np.log(b))
            q /= q.sum(axis=1, keepdims=True)
        rhos.append(-math.log(q[0, 1]) / 2)
        probs.append(prob)
    return np.array(rhos), np.array(probs)


class TestBruteForceTail:
    def test_single_node_single_step(self):
        models = [BernoulliModel(0, (0.3, 0.7))]
        w = np.array([[1.0]])
        cases = [("below", 0.5, 0.3), ("above", 0.5, 0.7),
                 ("above", -math.inf, 1.0), ("below", -math.inf, 0.0),
                 ("below", math.inf, 1.0)]
        for side, tau, want in cases:
            got = brute_force_tail(models, HYP2, w, 1, 1, 0, tau, side)
            assert got == pytest.approx(want, abs=1e-12), (side, tau)

    def test_matches_exhaustive_enumeration(self):
        rhos, probs = enumerate_paths()
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        uniq = np.unique(np.round(rhos, 10))
        mids = (uniq[:-1] + uniq[1:]) / 2
        below = []
        for tau in mids:
            got_b = brute_force_tail(PAIR_MODELS, HYP2, W_TWO, 2, 1, 0,
                                     float(tau), "below")
            got_a = brute_force_tail(PAIR_MODELS, HYP2, W_TWO, 2, 1, 0,
                                     float(tau), "above")
            assert got_b == pytest.approx(probs[rhos <= tau].sum(), abs=1e-9)
            assert got_b + got_a == pytest.approx(1.0, abs=1e-9)
            below.append(got_b)
        assert all(b2 >= b1 for b1, b2 in zip(below, below[1:]))
        assert below[0] > 0.0 and below[-1] < 1.0

    def test_path_budget(self):
        with pytest.raises(PathSpaceTooLarge):
            brute_force_tail(PAIR_MODELS, HYP2, W_TWO, 13, 1, 0, 0.5)

    def test_continuous_alphabet_rejected(self):
        models = [GaussianModel(0, (0.0, 1.0), 1.0)]
        with pytest.raises(ValueError, match="continuous"):
            brute_force_tail(models, HYP2, np.array([[1.0]]), 2, 1, 0, 0.5)

    def test_bad_side(self):
        with pytest.raises(ValueError, match="side"):
            brute_force_tail(PAIR_MODELS, HYP2, W_TWO, 2, 1, 0, 0.5, "inside")

    def test_bad_horizon(self):
        with pytest.raises(ValueError, match="horizon"):
            brute_force_tail(PAIR_MODELS, HYP2, W_TWO, 0, 1, 0, 0.5)
