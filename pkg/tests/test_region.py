import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from blockchroma import BlockModel, ModelError, c_star, g_value, homogeneous_cstar, ray_exit, region_contains, union_case_cstar
from blockchroma.model import g_all_subsets, subset_masks
from blockchroma.region import PreconditionViolated, boundary_cloud, boundary_export, caratheodory_reduce

from conftest import C_FIFTH, C_HALF, random_model, two_part

UNION_CSTAR = 4.365426671749166
HOMOG_CSTAR = 3.810169272161341
RAY_CONVEX = 5.009344329361488
RAY_CONCAVE = 1.335232802781336


def bisect_exit(model, d, hi=50.0, iters=200):
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if region_contains(model, mid * d, tol=0.0):
            lo = mid
        else:
            hi = mid
    return lo


def hull_oracle(model, m=1500):
    """Ray intersection with the hull of a bisection-traced boundary (k = 2)."""
    pts = [np.zeros(2)]
    for a in np.linspace(0, 1, m):
        d = np.array([a, 1 - a])
        pts.append(bisect_exit(model, d, hi=60.0, iters=80) * d)
    hull = ConvexHull(np.array(pts))
    alpha = model.alpha
    best = math.inf
    for eq in hull.equations:
        nrm, off = eq[:2], eq[2]
        if nrm @ alpha > 1e-15:
            best = min(best, -off / (nrm @ alpha))
    return best


class TestRayExit:
    def test_k1(self, k1):
        s = ray_exit(k1, [1.0])
        assert s.exit_t == pytest.approx(C_HALF, abs=1e-12)
        assert s.binding_subset == (0,)

    def test_convex_example(self):
        s = ray_exit(two_part(0.5, 0.5, 0.1), [0.5, 0.5])
        assert s.exit_t == pytest.approx(RAY_CONVEX, abs=1e-9)
        assert s.binding_subset == (0, 1)

    def test_concave_example(self):
        s = ray_exit(two_part(0.5, 0.5, 0.9), [0.5, 0.5])
        assert s.exit_t == pytest.approx(RAY_CONCAVE, abs=1e-9)
        assert s.binding_subset == (0, 1)

    def test_direction_normalised(self, union_model):
        a = ray_exit(union_model, [1.0, 3.0])
        b = ray_exit(union_model, [0.25, 0.75])
        assert np.allclose(a.point, b.point)
        assert a.exit_t == pytest.approx(b.exit_t)
        assert np.isclose(b.direction.sum(), 1.0)

    @pytest.mark.parametrize("seed", range(12))
    def test_bisection_agreement(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, int(rng.integers(1, 5)))
        d = rng.dirichlet(np.ones(model.k))
        if seed % 3 == 0 and model.k > 1:
            d[rng.integers(model.k)] = 0.0
            d /= d.sum()
        s = ray_exit(model, d)
        assert s.exit_t == pytest.approx(bisect_exit(model, d), abs=1e-9)
        assert abs(np.min(g_all_subsets(model, s.point)[_support_rows(model.k, d)])) <= 1e-9

    def test_rejects_bad_direction(self, union_model):
        with pytest.raises(ValueError):
            ray_exit(union_model, [0.0, 0.0])
        with pytest.raises(ValueError):
            ray_exit(union_model, [-1.0, 2.0])


def _support_rows(k, d):
    M = subset_masks(k)
    return ~(((d <= 0).astype(float) @ M.T) > 0)


class TestBoundary:
    def test_k1_single_sample(self, k1):
        cloud = boundary_cloud(k1, 17)
        assert len(cloud) == 1
        assert cloud[0].exit_t == pytest.approx(C_HALF)

    @pytest.mark.parametrize("r", [1, 4, 33])
    def test_k2_count_and_axes(self, union_model, r):
        cloud = boundary_cloud(union_model, r)
        assert len(cloud) == r + 1
        pts = np.array([s.point for s in cloud])
        assert np.allclose(pts[0], [C_FIFTH, 0.0])
        assert np.allclose(pts[-1], [0.0, C_HALF])

    def test_samples_on_boundary(self):
        model = BlockModel([0.2, 0.3, 0.5], [[0.3, 0.6, 0.1], [0.6, 0.5, 0.2], [0.1, 0.2, 0.7]])
        for s in boundary_cloud(model, 8):
            assert s.exit_t > 0
            g = g_all_subsets(model, s.point)
            assert g.min() >= -1e-9
            assert g_value(model, s.point, s.binding_subset) == pytest.approx(0.0, abs=1e-9)

    def test_line_case(self):
        m = two_part(0.5, 0.5, 0.5)
        caps = m.caps()
        for c1, c2, _ in boundary_export(m, 64):
            assert c1 / caps[0] + c2 / caps[1] == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("p12,concave", [(0.9, True), (0.75, True), (0.3, False), (0.1, False)])
    def test_midpoint_vs_chord(self, p12, concave):
        m = two_part(0.5, 0.5, p12)
        caps = m.caps()
        rows = boundary_export(m, 64)
        c1, c2, _ = rows[32]
        chord = c1 / caps[0] + c2 / caps[1]
        assert (chord < 1 - 1e-9) == concave
        if not concave:
            assert chord >= 1 - 1e-9

    def test_export_needs_two_parts(self, k1):
        with pytest.raises(ValueError):
            boundary_export(k1, 4)


class TestClosedForms:
    def test_union_value(self, union_model):
        assert union_case_cstar(union_model) == pytest.approx(UNION_CSTAR, abs=1e-12)

    def test_union_equal_parts(self):
        assert union_case_cstar(two_part(0.5, 0.5, 0.9)) == pytest.approx(C_HALF, abs=1e-12)

    def test_union_k1(self, k1):
        assert union_case_cstar(k1) == pytest.approx(C_HALF)

    def test_union_precondition(self):
        with pytest.raises(PreconditionViolated):
            union_case_cstar(two_part(0.5, 0.5, 0.1))

    def test_homogeneous_value(self):
        assert homogeneous_cstar(BlockModel.homogeneous(2, 0.5, 0.3)) == pytest.approx(HOMOG_CSTAR, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 3, 5])
    def test_homogeneous_collapses(self, k):
        assert homogeneous_cstar(BlockModel.homogeneous(k, 0.4, 0.4)) == pytest.approx(natural_c(0.4))

    def test_homogeneous_matches_numeric(self):
        m = BlockModel.homogeneous(2, 0.5, 0.5)
        res = c_star(m, closed_form=False)
        assert res.lower - 1e-6 <= C_HALF <= res.upper + 1e-6

    def test_homogeneous_precondition(self, union_model):
        with pytest.raises(PreconditionViolated):
            homogeneous_cstar(union_model)
        with pytest.raises(PreconditionViolated):
            homogeneous_cstar(BlockModel.homogeneous(2, 0.3, 0.5))


def natural_c(p):
    return -2 / math.log(1 - p)


class TestCStar:
    def test_k1(self, k1):
        res = c_star(k1)
        assert res.regime == "closed_form_k1"
        assert res.lower == res.upper == pytest.approx(C_HALF, abs=1e-12)

    def test_convex_numeric(self):
        res = c_star(two_part(0.5, 0.5, 0.1), closed_form=False)
        assert res.width <= 1e-6
        assert res.lower == pytest.approx(RAY_CONVEX, abs=1e-6)
        assert res.regime == "in_region"
        assert len(res.certificate) == 1

    def test_union_numeric(self, union_model):
        res = c_star(union_model, closed_form=False)
        assert res.width <= 1e-6
        assert res.lower - 1e-6 <= UNION_CSTAR <= res.upper + 1e-6
        assert res.regime == "on_hull"

    @pytest.mark.parametrize("seed", range(6))
    def test_against_hull_oracle(self, seed):
        rng = np.random.default_rng(100 + seed)
        model = random_model(rng, 2)
        res = c_star(model, closed_form=False)
        assert res.lower - 1e-4 <= hull_oracle(model) <= res.upper + 1e-4

    @pytest.mark.parametrize("seed", range(8))
    def test_certificate_and_ray(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(rng, int(rng.integers(2, 4)))
        res = c_star(model, closed_form=False)
        assert 0 < res.lower <= res.upper
        assert res.lower >= ray_exit(model, model.alpha).exit_t - 1e-9
        w = np.array([x for x, _ in res.certificate])
        P = np.array([p for _, p in res.certificate])
        assert len(w) <= model.k + 1
        assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-9
        assert all(region_contains(model, p, 1e-7) for p in P)
        assert np.max(np.abs(w @ P - res.lower * model.alpha)) <= 1e-6

    @pytest.mark.parametrize("seed", range(6))
    def test_monotone_in_p(self, seed):
        rng = np.random.default_rng(200 + seed)
        model = random_model(rng, int(rng.integers(2, 4)), high=0.85)
        i, j = rng.integers(model.k, size=2)
        P = model.P.copy()
        P[i, j] = P[j, i] = P[i, j] + 0.1
        bigger = BlockModel(model.alpha, P)
        assert c_star(bigger, closed_form=False).upper <= c_star(model, closed_form=False).upper + 1e-6

    def test_convex_k2_equals_ray(self):
        for seed in range(5):
            rng = np.random.default_rng(300 + seed)
            p1, p2 = rng.uniform(0.1, 0.9, 2)
            thr = 1 - math.sqrt((1 - p1) * (1 - p2))
            m = two_part(p1, p2, thr * rng.uniform(0.1, 0.95), alpha=rng.dirichlet([2, 2]))
            res = c_star(m)
            assert abs(res.lower - ray_exit(m, m.alpha).exit_t) <= 1e-6

    def test_numeric_cap(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ModelError):
            c_star(random_model(rng, 7), closed_form=False)

    def test_budget_flag(self):
        m = BlockModel([0.3, 0.3, 0.4], [[0.3, 0.7, 0.2], [0.7, 0.5, 0.6], [0.2, 0.6, 0.4]])
        res = c_star(m, resolution=2, tol=1e-14, max_doublings=0, max_rounds=1)
        assert res.budget_exceeded
        assert res.lower <= res.upper

    def test_bad_args(self, k1):
        with pytest.raises(ValueError):
            c_star(k1, tol=0)
        with pytest.raises(ValueError):
            c_star(k1, resolution=0)


def test_caratheodory_reduce():
    rng = np.random.default_rng(0)
    X = rng.random((12, 3))
    w = rng.dirichlet(np.ones(12))
    Y, v = caratheodory_reduce(X, w)
    assert len(v) <= 4
    assert np.all(v >= 0)
    assert v.sum() == pytest.approx(1.0)
    assert np.allclose(v @ Y, w @ X)
