"""Counts, views, marginalized likelihoods, and the roll simulator."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxent_agents import (
    AgentView,
    CountVector,
    ThetaPoint,
    log_factorial,
    log_multinomial,
    log_view_likelihood,
    simulate_rolls,
)
from maxent_agents.multinomial import view_log_likelihood_nodes

from oracles import compositions, view_loglik_brute

# log of 2520 * 0.5^5 * 0.3^3 * 0.2^2, checked with 50-digit arithmetic
LOG_PMF_532 = -2.4645159601402662834


class TestLogFactorial:
    def test_small_values(self):
        assert log_factorial(0) == 0.0
        assert log_factorial(1) == 0.0
        assert log_factorial(5) == pytest.approx(math.log(120), abs=1e-12)

    def test_matches_lgamma(self):
        for n in [3, 171, 1000, 5000, 2_000_000]:
            assert log_factorial(n) == pytest.approx(math.lgamma(n + 1), rel=1e-10)

    def test_vectorized(self):
        out = log_factorial(np.array([0, 2, 10]))
        assert out.shape == (3,)
        assert out[1] == pytest.approx(math.log(2))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            log_factorial(-1)


class TestCountVector:
    def test_basic(self):
        m = CountVector.of([5, 3, 2])
        assert (m.k, m.n) == (3, 10)

    def test_rejects(self):
        with pytest.raises(ValueError):
            CountVector.of([5])
        with pytest.raises(ValueError):
            CountVector.of([1, -1])


class TestAgentView:
    def test_full_and_empty(self):
        m = CountVector.of([5, 3, 2])
        full = AgentView.full(m)
        assert full.is_full and full.visible_total == 10
        empty = AgentView.empty(3, 10)
        assert empty.visible == () and empty.n == 10

    def test_validation(self):
        with pytest.raises(ValueError, match="distinct"):
            AgentView(k=3, n=5, visible=((1, 2), (1, 1)))
        with pytest.raises(ValueError, match=r"\[1, 3\]"):
            AgentView.from_mapping(3, 5, {4: 1})
        with pytest.raises(ValueError, match="> n"):
            AgentView.from_mapping(3, 5, {1: 4, 2: 3})


class TestLogMultinomial:
    def test_uniform_unit_counts(self):
        val = log_multinomial(CountVector.of([1, 1, 1]), ThetaPoint.of([1 / 3] * 3))
        assert val == pytest.approx(math.log(2 / 9), abs=1e-12)

    def test_certain_outcome(self):
        val = log_multinomial(CountVector.of([5, 0, 0]), ThetaPoint.of([1.0, 0.0, 0.0]))
        assert val == 0.0

    def test_frozen_value(self):
        val = log_multinomial(CountVector.of([5, 3, 2]), ThetaPoint.of([0.5, 0.3, 0.2]))
        assert val == pytest.approx(LOG_PMF_532, rel=1e-13)

    def test_impossible_is_minus_inf(self):
        val = log_multinomial(CountVector.of([4, 1, 0]), ThetaPoint.of([1.0, 0.0, 0.0]))
        assert val == float("-inf")

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            log_multinomial(CountVector.of([1, 1]), ThetaPoint.of([0.5, 0.3, 0.2]))

    def test_normalization_sums_to_one(self):
        theta = ThetaPoint.of([0.5, 0.3, 0.2])
        for n in range(7):
            total = math.fsum(
                math.exp(log_multinomial(CountVector.of(c), theta))
                for c in compositions(n, 3)
            )
            assert total == pytest.approx(1.0, abs=1e-12)

    @given(st.permutations([0, 1, 2, 3]), st.lists(st.integers(0, 9), min_size=4, max_size=4))
    @settings(max_examples=60, deadline=None)
    def test_permutation_equivariance_exact(self, perm, counts):
        theta = (0.4, 0.3, 0.2, 0.1)
        base = log_multinomial(CountVector.of(counts), ThetaPoint.of(theta))
        permuted = log_multinomial(
            CountVector.of([counts[p] for p in perm]),
            ThetaPoint.of([theta[p] for p in perm]),
        )
        assert permuted == base


class TestViewLikelihood:
    def test_single_side_example(self):
        view = AgentView.from_mapping(3, 2, {1: 1})
        val = log_view_likelihood(view, ThetaPoint.of([0.5, 0.3, 0.2]))
        assert val == pytest.approx(math.log(0.5), abs=1e-12)

    def test_empty_view_is_certain(self):
        view = AgentView.empty(3, 7)
        assert log_view_likelihood(view, ThetaPoint.of([0.5, 0.3, 0.2])) == 0.0

    def test_full_view_matches_multinomial(self):
        m = CountVector.of([4, 2, 3])
        theta = ThetaPoint.of([0.2, 0.5, 0.3])
        assert log_view_likelihood(AgentView.full(m), theta) == pytest.approx(
            log_multinomial(m, theta), rel=1e-14
        )

    def test_seven_of_ten_sides_vs_brute_force(self):
        rng = np.random.default_rng(99)
        theta = rng.dirichlet(np.ones(10))
        counts = rng.multinomial(12, theta)
        visible = {s: int(counts[s - 1]) for s in range(1, 8)}
        view = AgentView.from_mapping(10, 12, visible)
        ours = log_view_likelihood(view, ThetaPoint.of(theta))
        brute = view_loglik_brute(10, 12, visible, theta)
        assert ours == pytest.approx(brute, rel=1e-12)

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_aggregation_identity_random(self, data):
        k = data.draw(st.integers(2, 5))
        n = data.draw(st.integers(0, 8))
        counts = data.draw(
            st.lists(st.integers(0, n), min_size=k, max_size=k).filter(
                lambda c: sum(c) == n
            )
        )
        sides = data.draw(st.sets(st.integers(1, k), max_size=k))
        weights = data.draw(
            st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k)
        )
        theta = tuple(w / sum(weights) for w in weights)
        visible = {s: counts[s - 1] for s in sides}
        ours = log_view_likelihood(
            AgentView.from_mapping(k, n, visible), ThetaPoint.of(theta)
        )
        brute = view_loglik_brute(k, n, visible, theta)
        assert ours == pytest.approx(brute, rel=1e-12, abs=1e-12)

    def test_nodes_variant_matches_pointwise(self):
        view = AgentView.from_mapping(4, 9, {2: 3, 4: 1})
        pts = np.random.default_rng(5).dirichlet(np.ones(4), size=20)
        vec = view_log_likelihood_nodes(view, pts)
        for j, p in enumerate(pts):
            assert vec[j] == pytest.approx(
                log_view_likelihood(view, ThetaPoint.of(p)), rel=1e-12
            )


class TestSimulateRolls:
    def test_degenerate_die(self):
        counts = simulate_rolls(ThetaPoint.of([1.0, 0.0, 0.0]), 10, seed=1)
        assert counts.counts == (10, 0, 0)

    def test_zero_rolls(self):
        assert simulate_rolls(ThetaPoint.of([0.5, 0.5]), 0, seed=1).counts == (0, 0)

    def test_deterministic(self):
        a = simulate_rolls(ThetaPoint.of([0.5, 0.3, 0.2]), 50, seed=42)
        b = simulate_rolls(ThetaPoint.of([0.5, 0.3, 0.2]), 50, seed=42)
        assert a == b
        c = simulate_rolls(ThetaPoint.of([0.5, 0.3, 0.2]), 50, seed=43)
        assert c != a

    def test_law_of_large_numbers(self):
        theta = (0.5, 0.3, 0.2)
        counts = simulate_rolls(ThetaPoint.of(theta), 100_000, seed=42)
        freqs = counts.as_array() / counts.n
        assert np.abs(freqs - np.array(theta)).max() <= 0.01

    def test_rejects_negative_n(self):
        with pytest.raises(ValueError):
            simulate_rolls(ThetaPoint.of([0.5, 0.5]), -1, seed=0)
