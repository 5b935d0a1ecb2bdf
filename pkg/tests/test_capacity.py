import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aselcap.capacity import (select_by_norm, select_exhaustive, select_greedy,
                              sum_rate, upper_bound_rate)
from aselcap.errors import CapExceededError, DomainError, NumericalError

from oracles import brute_force_selection, logdet_rate_eig, random_channel, stepwise_greedy


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


class TestSumRate:
    def test_zero_channel(self):
        assert sum_rate(np.zeros((4, 2)), 3.0) == 0.0

    def test_single_user(self):
        g = np.array([[1.0], [1.0], [1.0]])
        assert sum_rate(g, 1.0) == pytest.approx(2.0, rel=1e-14)

    def test_matches_eigen_oracle(self, rng):
        for _ in range(50):
            g = random_channel(rng, 4, 2)
            assert sum_rate(g, 2.5) == pytest.approx(logdet_rate_eig(g, 2.5), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 8), k=st.integers(1, 5),
           logrho=st.floats(-3, 4))
    def test_determinant_identity(self, seed, n, k, logrho):
        g = random_channel(np.random.default_rng(seed), n, k)
        rho = 10.0 ** logrho
        assert sum_rate(g, rho) == pytest.approx(logdet_rate_eig(g, rho), abs=1e-9, rel=1e-12)

    def test_nan_rejected(self):
        with pytest.raises(NumericalError):
            sum_rate(np.array([[np.nan, 1.0]]), 1.0)

    def test_negative_rho(self):
        with pytest.raises(DomainError):
            sum_rate(np.ones((2, 1)), -1.0)


class TestExhaustive:
    def test_single_best_antenna(self):
        g = np.array([[1.0], [2.0]])
        res = select_exhaustive(g, 1, 1.0)
        assert res.indices == (1,)
        assert res.rate == pytest.approx(math.log2(5), rel=1e-14)

    def test_no_selection(self, rng):
        g = random_channel(rng, 5, 2)
        res = select_exhaustive(g, 5, 1.0)
        assert res.indices == (0, 1, 2, 3, 4)
        assert res.rate == pytest.approx(sum_rate(g, 1.0), rel=1e-14)

    def test_brute_force_oracle(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 11))
            k = int(rng.integers(1, 4))
            l = int(rng.integers(1, min(3, n) + 1))
            g = random_channel(rng, n, k, m=float(rng.choice([0.5, 1.0, 2.0])))
            res = select_exhaustive(g, l, 3.0)
            idx, rate = brute_force_selection(g, l, 3.0)
            assert res.indices == idx
            assert res.rate == pytest.approx(rate, abs=1e-9)

    def test_ties_pick_lexicographic_smallest(self):
        g = np.array([[1.0], [2.0], [2.0], [1.0]])
        assert select_exhaustive(g, 1, 1.0).indices == (1,)
        assert select_exhaustive(g, 2, 1.0).indices == (1, 2)
        assert select_exhaustive(np.ones((4, 2)), 2, 1.0).indices == (0, 1)

    def test_cap(self, rng):
        g = random_channel(rng, 30, 2)
        with pytest.raises(CapExceededError, match='greedy'):
            select_exhaustive(g, 10, 1.0, cap=1000)

    def test_monotone_in_l(self, rng):
        for _ in range(20):
            g = random_channel(rng, 10, 2)
            rates = [select_exhaustive(g, l, 5.0).rate for l in range(1, 6)]
            assert np.all(np.diff(rates) >= -1e-12)

    def test_row_permutation_invariance(self, rng):
        for _ in range(20):
            g = random_channel(rng, 8, 3)
            perm = rng.permutation(8)
            a = select_exhaustive(g, 3, 2.0)
            b = select_exhaustive(g[perm], 3, 2.0)
            assert b.rate == pytest.approx(a.rate, abs=1e-12)
            assert tuple(sorted(perm[list(b.indices)])) == a.indices

    def test_result_invariants(self, rng):
        g = random_channel(rng, 9, 2)
        res = select_exhaustive(g, 4, 1.0)
        assert len(set(res.indices)) == 4 and list(res.indices) == sorted(res.indices)
        assert res.rate == sum_rate(g[list(res.indices)], 1.0)

    def test_batches_span_chunks(self, rng, monkeypatch):
        import aselcap.capacity as cap
        g = random_channel(rng, 12, 2)
        expected = select_exhaustive(g, 4, 2.0)
        monkeypatch.setattr(cap, '_BATCH_ELEMENTS', 16)
        assert select_exhaustive(g, 4, 2.0) == expected


class TestGreedy:
    def test_first_step_exact(self, rng):
        for _ in range(20):
            g = random_channel(rng, 9, 3)
            assert select_greedy(g, 1, 2.0) == select_exhaustive(g, 1, 2.0)

    def test_stepwise_oracle(self, rng):
        for _ in range(20):
            g = random_channel(rng, 8, 2)
            assert select_greedy(g, 3, 4.0).indices == stepwise_greedy(g, 3, 4.0)

    def test_below_exhaustive(self, rng):
        for _ in range(50):
            g = random_channel(rng, 10, 3)
            assert select_greedy(g, 4, 2.0).rate <= select_exhaustive(g, 4, 2.0).rate + 1e-12

    def test_ties_smallest_index(self):
        assert select_greedy(np.ones((5, 1)), 2, 1.0).indices == (0, 1)


class TestNorm:
    def test_single_user_is_optimal(self, rng):
        for _ in range(20):
            g = random_channel(rng, 10, 1)
            assert select_by_norm(g, 3, 1.0).indices == select_exhaustive(g, 3, 1.0).indices

    def test_sort_oracle(self, rng):
        for _ in range(20):
            g = random_channel(rng, 8, 3)
            norms = [float(np.vdot(row, row).real) for row in g]
            top = sorted(sorted(range(8), key=lambda i: -norms[i])[:3])
            assert select_by_norm(g, 3, 1.0).indices == tuple(top)

    def test_below_exhaustive(self, rng):
        for _ in range(50):
            g = random_channel(rng, 10, 3)
            assert select_by_norm(g, 4, 2.0).rate <= select_exhaustive(g, 4, 2.0).rate + 1e-12

    def test_ties(self):
        g = np.array([[1.0], [3.0], [3.0], [1.0]])
        assert select_by_norm(g, 1, 1.0).indices == (1,)


class TestUpperBound:
    def test_top_two(self):
        h = np.sqrt(np.array([[1.0], [4.0], [9.0]]))
        assert upper_bound_rate(h, np.ones(1), 2, 1.0) == pytest.approx(math.log2(14), rel=1e-14)

    def test_single_user_equality(self, rng):
        for _ in range(200):
            h = random_channel(rng, 12, 1)
            beta = 10.0 ** rng.uniform(-2, 1, 1)
            ub = upper_bound_rate(h, beta, 4, 3.0)
            es = select_exhaustive(h * np.sqrt(beta), 4, 3.0).rate
            assert abs(ub - es) < 1e-9

    def test_dominates_exhaustive(self, rng):
        for _ in range(50):
            h = random_channel(rng, 6, 2)
            beta = np.array([0.5, 2.0])
            assert upper_bound_rate(h, beta, 3, 2.0) >= select_exhaustive(h * np.sqrt(beta), 3, 2.0).rate

    def test_dominance_chain(self, rng):
        for _ in range(300):
            h = random_channel(rng, 16, 4, m=float(rng.choice([0.5, 1.0, 2.0])))
            beta = 10.0 ** rng.uniform(-1, 1, 4)
            g = h * np.sqrt(beta)
            ub = upper_bound_rate(h, beta, 4, 1.0)
            es = select_exhaustive(g, 4, 1.0).rate
            gr = select_greedy(g, 4, 1.0).rate
            nm = select_by_norm(g, 4, 1.0).rate
            assert ub >= es - 1e-12
            assert es >= gr - 1e-12 and gr >= 0
            assert ub >= nm - 1e-12

    def test_mismatch(self):
        with pytest.raises(ValueError):
            upper_bound_rate(np.ones((3, 2)), np.ones(3), 1, 1.0)
