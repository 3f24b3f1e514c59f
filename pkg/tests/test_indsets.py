import itertools
import math

import numpy as np
import pytest

from blockchroma import BlockModel, enumerate_max_types, exponent_gap, find_typed_set, is_independent, log_expected_count, natural_class_size, sample, type_of
from blockchroma.indsets import SearchBudget, count_typed_sets, has_typed_set, search_typed_set
from blockchroma.model import g_value
from blockchroma.region import ray_exit
from blockchroma.sampler import BlockGraph

THREE = BlockModel([0.2, 0.3, 0.5], [[0.3, 0.7, 0.1], [0.7, 0.5, 0.4], [0.1, 0.4, 0.6]])


def brute_count(g, t):
    A = g.dense()
    total = 0
    pools = [range(a, b) for a, b in g.part_ranges]
    for combo in itertools.product(*(itertools.combinations(p, ti) for p, ti in zip(pools, t))):
        vs = [v for part in combo for v in part]
        if not any(A[u, v] for u, v in itertools.combinations(vs, 2)):
            total += 1
    return total


def brute_max_types(g):
    A = g.dense()
    n = g.n
    out = set()
    for mask in range(1 << n):
        vs = [v for v in range(n) if mask >> v & 1]
        if any(A[u, v] for u, v in itertools.combinations(vs, 2)):
            continue
        if all(v in vs or any(A[v, u] for u in vs) for v in range(n)):
            out.add(tuple(int(x) for x in type_of(g, np.array(vs, dtype=int))))
    return out


class TestQueries:
    def test_basic(self):
        g = sample(THREE, 20, 1)
        assert is_independent(g, np.zeros(20, dtype=bool))
        assert is_independent(g, [5])
        u, v = next(g.edges())
        assert not is_independent(g, [u, v])
        assert type_of(g, np.zeros(20, dtype=bool)).tolist() == [0, 0, 0]
        assert type_of(g, g.part_mask(0)).tolist() == [4, 0, 0]

    def test_partition_identity(self):
        g = sample(THREE, 40, 2)
        s = np.random.default_rng(0).random(40) < 0.4
        assert type_of(g, s).sum() == s.sum()


class TestExpectation:
    def test_empty(self, union_model):
        assert log_expected_count(union_model, [5, 5], [0, 0]) == 0.0

    def test_cross_pairs(self):
        m = BlockModel([0.5, 0.5], [[0.5, 0.3], [0.3, 0.5]])
        assert log_expected_count(m, [2, 2], [1, 1]) == pytest.approx(math.log(2.8), rel=1e-9)

    def test_within_part(self, k1):
        assert log_expected_count(k1, [3], [2]) == pytest.approx(math.log(1.5), rel=1e-9)

    def test_too_many(self, k1):
        with pytest.raises(ValueError):
            log_expected_count(k1, [3], [4])

    def test_huge_n_is_finite(self, union_model):
        value = log_expected_count(union_model, [5e5, 5e5], [100, 30])
        assert math.isfinite(value)

    @pytest.mark.parametrize("t", [(2, 1), (1, 2), (3, 0), (2, 2)])
    def test_brute_force_mean(self, t):
        m = BlockModel([0.5, 0.5], [[0.4, 0.6], [0.6, 0.3]])
        n, trials = 8, 600
        counts = np.array([count_typed_sets(sample(m, n, s), t) for s in range(trials)])
        mu = math.exp(log_expected_count(m, [4, 4], t))
        se = counts.std(ddof=1) / math.sqrt(trials)
        assert abs(counts.mean() - mu) < 5 * se

    @pytest.mark.parametrize("seed", range(5))
    def test_count_matches_brute(self, seed):
        g = sample(THREE, 11, seed)
        for t in [(1, 1, 1), (2, 0, 2), (0, 2, 3), (1, 3, 2)]:
            assert count_typed_sets(g, t) == brute_count(g, t)


class TestExponentGap:
    def test_zero(self, union_model):
        assert exponent_gap(union_model, [0, 0], 1000) == 0.0

    def test_k1_decreasing(self, k1):
        gaps = [abs(exponent_gap(k1, [1.0], 10**j)) for j in range(3, 7)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_outside_negative(self, k1):
        c = natural_class_size(0.5) + 0.5
        n = 10**6
        assert g_value(k1, [c], [0]) < 0
        t = round(c * math.log(n))
        assert log_expected_count(k1, [n], [t]) < 0

    def test_errors(self, k1):
        with pytest.raises(ValueError):
            exponent_gap(k1, [-1.0], 100)
        with pytest.raises(ValueError):
            exponent_gap(k1, [1.0], 2)
        with pytest.raises(ValueError):
            exponent_gap(k1, [50.0], 10)


class TestSearch:
    def test_empty_target(self):
        g = sample(THREE, 30, 0)
        s = find_typed_set(g, np.ones(30, dtype=bool), [0, 0, 0])
        assert s is not None and not s.any()

    def test_unit_target(self):
        g = sample(THREE, 30, 0)
        s = find_typed_set(g, np.ones(30, dtype=bool), [0, 1, 0])
        assert type_of(g, s).tolist() == [0, 1, 0]

    def test_rejects_excess(self):
        g = sample(THREE, 30, 0)
        with pytest.raises(ValueError):
            find_typed_set(g, g.part_mask(0), [1, 1, 0])

    def test_success_rate_vs_exact(self):
        m = BlockModel([1.0], [[0.3]])
        hits = exist = 0
        for seed in range(200):
            g = sample(m, 60, seed)
            full = np.ones(60, dtype=bool)
            if not has_typed_set(g, full, [4]):
                continue
            exist += 1
            s = find_typed_set(g, full, [4], seed=seed)
            if s is not None:
                assert is_independent(g, s) and type_of(g, s).tolist() == [4]
                hits += 1
        assert exist > 0 and hits / exist >= 0.99

    @pytest.mark.parametrize("seed", range(15))
    def test_agrees_with_exact_multi_part(self, seed):
        g = sample(THREE, 28, seed)
        rng = np.random.default_rng(seed)
        avail = rng.random(28) < 0.8
        cap = type_of(g, avail)
        t = np.minimum(cap, rng.integers(0, 4, size=3))
        s = find_typed_set(g, avail, t, seed=seed)
        if s is None:
            assert not has_typed_set(g, avail, t)
        else:
            assert is_independent(g, s) and np.array_equal(type_of(g, s), t)
            assert not (s & ~avail).any()

    def test_deterministic(self):
        g = sample(THREE, 300, 3)
        avail = np.ones(300, dtype=bool)
        a = find_typed_set(g, avail, [2, 3, 4], seed=9)
        b = find_typed_set(g, avail, [2, 3, 4], seed=9)
        assert np.array_equal(a, b)

    def test_best_partial_is_independent(self):
        g = sample(BlockModel([1.0], [[0.5]]), 400, 1)
        found, best = search_typed_set(g, np.ones(400, dtype=bool), [40], SearchBudget(max_restarts=3, ils_steps=200))
        assert found is None
        assert 0 < best.sum() < 40 and is_independent(g, best)

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            SearchBudget(max_restarts=0)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["k1", "union"])
    def test_no_sets_beyond_boundary(self, name, k1, union_model):
        # types 10% beyond the boundary along alpha never show up at n = 10^4
        model = k1 if name == "k1" else union_model
        n = 10_000
        point = ray_exit(model, model.alpha).point
        t = np.floor(1.1 * point * math.log(n)).astype(int)
        budget = SearchBudget(max_restarts=100, ils_steps=8000)
        for seed in range(10):
            g = sample(model, n, seed)
            assert find_typed_set(g, np.ones(n, dtype=bool), t, budget, seed) is None


class TestMaxTypes:
    def test_edgeless(self):
        g = BlockGraph.from_dense(np.zeros((5, 5), dtype=int), [2, 3])
        assert enumerate_max_types(g) == {(2, 3)}

    def test_complete(self):
        A = np.ones((5, 5), dtype=int) - np.eye(5, dtype=int)
        g = BlockGraph.from_dense(A, [2, 3])
        assert enumerate_max_types(g) == {(1, 0), (0, 1)}

    def test_c4(self):
        # cycle a-b-c-d-a with parts {a, c} and {b, d}
        A = np.zeros((4, 4), dtype=int)
        for u, v in [(0, 2), (2, 1), (1, 3), (3, 0)]:
            A[u, v] = A[v, u] = 1
        g = BlockGraph.from_dense(A, [2, 2])
        assert enumerate_max_types(g) == {(2, 0), (0, 2)}

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_brute(self, seed):
        g = sample(THREE, 13, seed)
        assert enumerate_max_types(g) == brute_max_types(g)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            enumerate_max_types(sample(THREE, 31, 0))
