"""Weight-matrix validation, connectivity, period, and centrality."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sociallearning import (NegativeWeight, NotStronglyConnected,
                            RowSumViolation, cyclic_classes,
                            is_strongly_connected, period,
                            stationary_distribution, validate_stochastic)

W_TWO_NODE = [[0.9, 0.1], [0.4, 0.6]]


def ring(n, self_weight=0.0):
    """Each node listens to its successor (and optionally itself)."""
    w = (1.0 - self_weight) * np.roll(np.eye(n), 1, axis=1)
    return w + self_weight * np.eye(n)


class TestValidateStochastic:
    def test_accepts_and_freezes(self):
        m = validate_stochastic(W_TWO_NODE)
        assert m.n == 2
        np.testing.assert_allclose(m.w, W_TWO_NODE)
        with pytest.raises(ValueError):
            m.w[0, 0] = 0.5

    def test_renormalizes_within_tolerance(self):
        m = validate_stochastic([[0.5, 0.5 + 5e-10], [0.25, 0.75]])
        np.testing.assert_allclose(m.w.sum(axis=1), 1.0, rtol=0, atol=1e-15)

    def test_negative_weight(self):
        with pytest.raises(NegativeWeight):
            validate_stochastic([[1.1, -0.1], [0.5, 0.5]])

    def test_row_sum_violation(self):
        with pytest.raises(RowSumViolation):
            validate_stochastic([[0.9, 0.2], [0.5, 0.5]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            validate_stochastic([[0.5, 0.5]])

    def test_single_node(self):
        m = validate_stochastic([[1.0]])
        assert m.n == 1 and is_strongly_connected(m) and period(m) == 1


class TestConnectivity:
    def test_two_node_connected(self):
        assert is_strongly_connected(validate_stochastic(W_TWO_NODE))

    def test_one_way_chain_not_connected(self):
        # node 0 never hears from node 1
        m = validate_stochastic([[1.0, 0.0], [0.5, 0.5]])
        assert not is_strongly_connected(m)
        with pytest.raises(NotStronglyConnected):
            period(m)
        with pytest.raises(NotStronglyConnected):
            stationary_distribution(m)
        with pytest.raises(NotStronglyConnected):
            cyclic_classes(m)


class TestPeriod:
    def test_self_loops_make_aperiodic(self):
        assert period(validate_stochastic(W_TWO_NODE)) == 1

    def test_pure_swap_has_period_two(self):
        assert period(validate_stochastic([[0.0, 1.0], [1.0, 0.0]])) == 2

    def test_directed_cycle_period_equals_length(self):
        assert period(validate_stochastic(ring(5))) == 5

    def test_cycle_with_self_loops_aperiodic(self):
        assert period(validate_stochastic(ring(6, self_weight=0.5))) == 1

    def test_two_cycles_gcd(self):
        # lengths 2 and 4 coexist: period gcd(2, 4) = 2
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0       # 0 <-> 1
        w[1, 2] = w[2, 3] = w[3, 0] = 1.0
        w[0, 3] = 1.0
        w = w / w.sum(axis=1, keepdims=True)
        assert period(validate_stochastic(w)) == 2


class TestCyclicClasses:
    def test_aperiodic_single_class(self):
        g = cyclic_classes(validate_stochastic(W_TWO_NODE))
        assert g.period == 1
        assert g.cyclic_classes == ((0, 1),)

    def test_cycle_partition(self):
        g = cyclic_classes(validate_stochastic(ring(4)))
        assert g.period == 4
        cells = g.cyclic_classes
        assert sorted(sum(cells, ())) == [0, 1, 2, 3]
        assert all(len(c) == 1 for c in cells)
        # reference node closes the cycle in the last cell
        assert cells[-1] == (0,)

    def test_edges_advance_one_class(self):
        m = validate_stochastic(ring(6))
        g = cyclic_classes(m)
        cell_of = {j: r for r, cell in enumerate(g.cyclic_classes)
                   for j in cell}
        # every edge j -> i moves one class closer to the reference
        for i in range(m.n):
            for j in np.nonzero(m.w[i])[0]:
                assert cell_of[int(j)] == (cell_of[i] + 1) % g.period

    def test_reference_node_invariance(self):
        m = validate_stochastic(ring(6))
        base = {frozenset(c) for c in cyclic_classes(m, ref_node=0).cyclic_classes}
        for ref in range(1, 6):
            other = {frozenset(c)
                     for c in cyclic_classes(m, ref_node=ref).cyclic_classes}
            assert other == base

    def test_ref_node_out_of_range(self):
        with pytest.raises(ValueError):
            cyclic_classes(validate_stochastic(W_TWO_NODE), ref_node=2)


class TestStationaryDistribution:
    def test_two_node_closed_form(self):
        v = stationary_distribution(validate_stochastic(W_TWO_NODE)).v
        np.testing.assert_allclose(v, [0.8, 0.2], rtol=0, atol=1e-12)

    def test_frozen_readonly(self):
        v = stationary_distribution(validate_stochastic(W_TWO_NODE)).v
        with pytest.raises(ValueError):
            v[0] = 0.0

    def test_periodic_chain_supported(self):
        # power iteration would oscillate here; the solve must not
        v = stationary_distribution(validate_stochastic([[0, 1], [1, 0]])).v
        np.testing.assert_allclose(v, [0.5, 0.5], rtol=0, atol=1e-12)

    def test_doubly_stochastic_uniform(self):
        v = stationary_distribution(validate_stochastic(ring(6, 0.5))).v
        np.testing.assert_allclose(v, np.full(6, 1 / 6), atol=1e-12)

    @settings(max_examples=40, derandomize=True, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 7))
    def test_fixed_point_property(self, seed, n):
        rng = np.random.default_rng(seed)
        w = rng.uniform(0.05, 1.0, size=(n, n))
        w /= w.sum(axis=1, keepdims=True)
        v = stationary_distribution(validate_stochastic(w)).v
        np.testing.assert_allclose(v @ w, v, rtol=0, atol=1e-10)
        assert abs(v.sum() - 1.0) < 1e-12
        assert (v > 0).all()
