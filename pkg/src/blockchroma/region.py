"""Geometry of the admissible region and the chromatic constant ``c*``.

Along a ray ``t * d`` every constraint ``g(t d, I)`` is a concave quadratic in
``t`` vanishing at zero, so the exit point of a ray is the smallest positive
root over all subsets and needs no iteration.  ``c*`` is bracketed from
below by a linear program over boundary points (a column-generation master
problem) and from above by support-function values along dual directions.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog, minimize

from .model import (
    BlockModel,
    ModelError,
    PairShape,
    classify_pair,
    format_subset,
    g_all_subsets,
    mask_to_subset,
    natural_class_size,
    region_contains,
    subset_masks,
)

logger = logging.getLogger(__name__)

MAX_NUMERIC_K = 6
MAX_CLOUD_POINTS = 20000
REGIMES = ("in_region", "on_hull", "closed_form_union", "closed_form_homogeneous", "closed_form_k1")


class BudgetExceeded(RuntimeError):
    """Raised only when the caller asks for a strict bracket."""


class PreconditionViolated(ValueError):
    pass


@dataclass(frozen=True)
class BoundarySample:
    direction: np.ndarray
    exit_t: float
    point: np.ndarray
    binding_subset: tuple[int, ...]


@dataclass
class CStarResult:
    """Bracket ``[lower, upper]`` on ``c*`` with a convex-combination certificate.

    ``certificate`` is a list of ``(weight, point)`` pairs; the weighted sum of
    the points equals ``lower * alpha``.
    """

    lower: float
    upper: float
    certificate: list[tuple[float, np.ndarray]]
    regime: str
    budget_exceeded: bool = False
    resolution: int = 0
    rounds: int = 0
    info: dict = field(default_factory=dict)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "regime": self.regime,
            "budget_exceeded": self.budget_exceeded,
            "certificate": [
                {"weight": float(w), "point": [float(x) for x in p]} for w, p in self.certificate
            ],
        }


# ---------------------------------------------------------------------------
# ray exits and boundary sampling


def ray_exits(model: BlockModel, directions) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ray exit: returns ``(exit_t, binding_row)`` for each direction.

    ``binding_row`` indexes :func:`subset_masks`; only subsets inside the
    support of the direction are considered, so ties resolve to the smallest
    subset in enumeration order.
    """
    D = np.atleast_2d(np.asarray(directions, dtype=float))
    if np.any(D < 0):
        raise ValueError("directions must be nonnegative")
    if np.any(D.sum(axis=1) <= 0):
        raise ValueError("directions must be nonzero")
    M = subset_masks(model.k)
    num = D @ M.T
    DM = D[:, None, :] * M[None, :, :]
    quad = np.einsum("nsk,kl,nsl->ns", DM, model.log_nonedge, DM)
    outside = ((D <= 0).astype(float) @ M.T) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(outside, np.inf, -2.0 * num / quad)
    row = np.argmin(t, axis=1)
    return t[np.arange(len(D)), row], row


def ray_exit(model: BlockModel, d) -> BoundarySample:
    """Exact exit point of the ray ``{t d : t >= 0}`` from the admissible region."""
    d = np.asarray(d, dtype=float)
    if d.shape != (model.k,):
        raise ValueError(f"direction must have shape ({model.k},)")
    t, row = ray_exits(model, d[None, :])
    direction = d / d.sum()
    exit_t = float(t[0] * d.sum())
    return BoundarySample(
        direction=direction,
        exit_t=exit_t,
        point=exit_t * direction,
        binding_subset=mask_to_subset(subset_masks(model.k)[row[0]]),
    )


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All points of the unit 1-norm simplex with coordinates in ``(1/resolution) Z``."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if k == 1:
        return np.ones((1, 1))
    rows = []
    total = resolution + k - 1
    for bars in combinations(range(total), k - 1):
        edges = (-1,) + bars + (total,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.array(rows, dtype=float)[::-1] / resolution


def grid_size(k: int, resolution: int) -> int:
    return math.comb(resolution + k - 1, k - 1)


def cloud_points(model: BlockModel, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Boundary points along the simplex grid; returns ``(points, binding_rows)``."""
    D = simplex_grid(model.k, resolution)
    t, rows = ray_exits(model, D)
    return D * t[:, None], rows


def boundary_cloud(model: BlockModel, resolution: int) -> list[BoundarySample]:
    """Deterministic boundary samples over a simplex grid of directions.

    The grid has ``resolution`` subdivisions per axis and contains the ``k``
    coordinate axes, whose exits are the caps ``c(p_i) e_i``.
    """
    D = simplex_grid(model.k, resolution)
    t, rows = ray_exits(model, D)
    M = subset_masks(model.k)
    return [
        BoundarySample(direction=d, exit_t=float(ti), point=d * ti, binding_subset=mask_to_subset(M[r]))
        for d, ti, r in zip(D, t, rows)
    ]


def boundary_export(model: BlockModel, resolution: int) -> list[tuple[float, float, str]]:
    """Rows ``(c1, c2, binding_subset)`` tracing the boundary of a two-part region."""
    if model.k != 2:
        raise ValueError("boundary export is only defined for k = 2")
    return [
        (float(s.point[0]), float(s.point[1]), format_subset(s.binding_subset))
        for s in boundary_cloud(model, resolution)
    ]


# ---------------------------------------------------------------------------
# closed forms


def union_case_applies(model: BlockModel) -> bool:
    k = model.k
    return all(
        classify_pair(model, i, j) is not PairShape.CONVEX_COMPATIBLE
        for i in range(k)
        for j in range(i + 1, k)
    )


def union_case_cstar(model: BlockModel) -> float:
    """``1 / sum_j alpha_j / c(p_j)``: parts colored separately."""
    if not union_case_applies(model):
        raise PreconditionViolated("union case needs every pair concave or on the boundary")
    caps = model.caps()
    return float(1.0 / np.sum(model.alpha / caps))


def union_case_certificate(model: BlockModel) -> list[tuple[float, np.ndarray]]:
    caps = model.caps()
    h = float(np.sum(model.alpha / caps))
    cert = []
    for i in range(model.k):
        point = np.zeros(model.k)
        point[i] = caps[i]
        cert.append((float(model.alpha[i] / (h * caps[i])), point))
    return cert


def homogeneous_applies(model: BlockModel, tol: float = 1e-12) -> bool:
    k = model.k
    P = model.P
    p = P[0, 0]
    if np.any(np.abs(np.diag(P) - p) > tol):
        return False
    if np.any(np.abs(model.alpha - 1.0 / k) > tol):
        return False
    if k == 1:
        return True
    off = P[~np.eye(k, dtype=bool)]
    q = off[0]
    return bool(np.all(np.abs(off - q) <= tol) and p >= q - tol)


def homogeneous_cstar(model: BlockModel) -> float:
    """``-2 / ((1/k) ln(1-p) + ((k-1)/k) ln(1-q))`` for the balanced two-value model."""
    if not homogeneous_applies(model):
        raise PreconditionViolated(
            "homogeneous case needs equal diagonal p, equal off-diagonal q <= p and alpha_i = 1/k"
        )
    k = model.k
    lp = math.log1p(-model.P[0, 0])
    lq = math.log1p(-model.P[0, 1]) if k > 1 else 0.0
    return -2.0 / (lp / k + (k - 1) / k * lq)


# ---------------------------------------------------------------------------
# Caratheodory reduction


def caratheodory_reduce(points, weights, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Rewrite a convex combination using at most ``dim + 1`` of its points.

    The weighted sum and the total weight are preserved.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float).copy()
    keep = w > tol
    X, w = X[keep], w[keep]
    dim = X.shape[1]
    while len(w) > dim + 1:
        A = np.vstack([X.T, np.ones(len(w))])
        v = np.linalg.svd(A)[2][-1]
        if not np.any(v > tol):
            v = -v
        pos = v > tol
        ratios = w[pos] / v[pos]
        j = np.flatnonzero(pos)[np.argmin(ratios)]
        w = w - ratios.min() * v
        w[j] = 0.0
        keep = w > tol
        X, w = X[keep], w[keep]
    return X, w


# ---------------------------------------------------------------------------
# c* bracket


def _master_lp(points: np.ndarray, alpha: np.ndarray):
    """max t s.t. t * alpha in conv(points); returns (t, weights, dual direction)."""
    N, k = points.shape
    cost = np.zeros(N + 1)
    cost[-1] = -1.0
    A = np.zeros((k + 1, N + 1))
    A[:k, :N] = points.T
    A[:k, -1] = -alpha
    A[k, :N] = 1.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    res = linprog(cost, A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"hull LP failed: {res.message}")
    u = np.asarray(res.eqlin.marginals[:k], dtype=float)
    return float(res.x[-1]), res.x[:N], u


def _refine_support(model: BlockModel, u: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Local ascent of ``<u, c>`` over the region from ``start``; result lies on the boundary."""
    M = subset_masks(model.k)
    L = model.log_nonedge

    def jac(c):
        return M * (1.0 + (M * c) @ L)

    res = minimize(
        lambda c: -float(u @ c),
        start,
        jac=lambda c: -u,
        method="SLSQP",
        bounds=[(0.0, cap) for cap in model.caps()],
        constraints=[{"type": "ineq", "fun": lambda c: g_all_subsets(model, c), "jac": jac}],
        options={"ftol": 1e-15, "maxiter": 200},
    )
    c = np.maximum(np.asarray(res.x, dtype=float), 0.0)
    if c.sum() <= 0:
        return start
    t, _ = ray_exits(model, c[None, :])
    return c * t[0]


def support_value(model: BlockModel, u, points: np.ndarray, starts: int = 3):
    """Estimate ``max_{c in region} <u, c>``: best cloud point, refined by multi-start ascent.

    Returns ``(value, new_points)`` where ``new_points`` are exact boundary
    points found by the refinement.
    """
    u = np.maximum(np.asarray(u, dtype=float), 0.0)
    vals = points @ u
    best = float(vals.max())
    order = np.argsort(-vals, kind="stable")
    seen: list[np.ndarray] = []
    found = []
    for idx in order:
        if len(seen) >= starts:
            break
        x = points[idx]
        if x.sum() <= 0 or any(np.linalg.norm(x - s) < 1e-3 for s in seen):
            continue
        seen.append(x)
        y = _refine_support(model, u, x)
        val = float(u @ y)
        if val > best:
            best = val
        found.append(y)
    return best, found


def _candidate_duals(model: BlockModel, lp_dual: np.ndarray, ray_point: BoundarySample) -> list[np.ndarray]:
    """LP dual plus outward normals of the binding constraints at the ray point."""
    cands = [np.maximum(lp_dual, 0.0)]
    M = subset_masks(model.k)
    g = g_all_subsets(model, ray_point.point)
    scale = max(1.0, float(np.abs(ray_point.point).max()))
    for row in np.flatnonzero(np.abs(g) <= 1e-9 * scale):
        m = M[row]
        grad = m * (1.0 + model.log_nonedge @ (m * ray_point.point))
        cands.append(np.maximum(-grad, 0.0))
    out = []
    for u in cands:
        if float(u @ model.alpha) > 1e-14:
            out.append(u / float(u @ model.alpha))
    return out


def _effective_resolution(k: int, resolution: int) -> int:
    r = resolution
    while r > 1 and grid_size(k, r) > MAX_CLOUD_POINTS:
        r //= 2
    return r


def _numeric_cstar(model: BlockModel, resolution: int, tol: float, max_doublings: int, max_rounds: int) -> CStarResult:
    k = model.k
    alpha = model.alpha
    ray = ray_exit(model, alpha)
    r = _effective_resolution(k, resolution)
    cloud, _ = cloud_points(model, r)
    extra = [np.zeros(k), ray.point]
    dual_grid = simplex_grid(k, 4 if k <= 3 else 2)
    lower, upper = ray.exit_t, math.inf
    weights = None
    points = None
    rounds = 0
    doublings = 0
    first = True
    while True:
        for _ in range(max_rounds):
            rounds += 1
            points = np.vstack([cloud] + [np.atleast_2d(e) for e in extra])
            t_lp, weights, u_lp = _master_lp(points, alpha)
            lower = max(t_lp, ray.exit_t)
            duals = _candidate_duals(model, u_lp, ray)
            if first:
                duals += [u / float(u @ alpha) for u in dual_grid]
                first = False
            added = 0
            for u in duals:
                h, found = support_value(model, u, points)
                upper = min(upper, h / float(u @ alpha))
                for y in found:
                    if float(u @ y) > float((points @ u).max()) + 1e-13:
                        extra.append(y)
                        added += 1
            upper = max(upper, lower)
            if upper - lower <= tol or added == 0:
                break
        if upper - lower <= tol or doublings >= max_doublings:
            break
        new_r = _effective_resolution(k, 2 * r)
        if new_r == r:
            break
        r = new_r
        doublings += 1
        cloud, _ = cloud_points(model, r)
    converged = upper - lower <= tol

    if lower - ray.exit_t <= 1e-12 * max(1.0, ray.exit_t):
        lower = ray.exit_t
        certificate = [(1.0, ray.point.copy())]
    else:
        X, w = caratheodory_reduce(points, weights)
        w = w / w.sum()
        certificate = [(float(wi), x.copy()) for wi, x in zip(w, X)]
    upper = max(upper, lower)
    regime = "in_region" if region_contains(model, lower * alpha, 1e-9) else "on_hull"
    if not converged:
        logger.warning("c* bracket width %.3g above tol %.3g after %d rounds", upper - lower, tol, rounds)
    return CStarResult(
        lower=float(lower),
        upper=float(upper),
        certificate=certificate,
        regime=regime,
        budget_exceeded=not converged,
        resolution=r,
        rounds=rounds,
        info={"ray_exit": ray.exit_t},
    )


def c_star(
    model: BlockModel,
    resolution: int = 64,
    tol: float = 1e-6,
    closed_form: bool = True,
    max_doublings: int = 12,
    max_rounds: int = 40,
) -> CStarResult:
    """Bracket the chromatic constant ``c* = max{|c| : c in conv(region), c parallel to alpha}``.

    Closed forms (one part, union case, balanced homogeneous case) are used
    when they apply and ``closed_form`` is true.  Otherwise the numeric path
    runs; it supports ``k <= 6``.  When the bracket cannot be closed within
    the doubling budget the result carries ``budget_exceeded=True``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    k = model.k
    if closed_form:
        if k == 1:
            c = natural_class_size(model.P[0, 0])
            return CStarResult(c, c, [(1.0, np.array([c]))], "closed_form_k1")
        if union_case_applies(model):
            c = union_case_cstar(model)
            return CStarResult(c, c, union_case_certificate(model), "closed_form_union")
        if homogeneous_applies(model):
            c = homogeneous_cstar(model)
            return CStarResult(c, c, [(1.0, c * model.alpha)], "closed_form_homogeneous")
    if k > MAX_NUMERIC_K:
        raise ModelError(f"numeric c* path supports k <= {MAX_NUMERIC_K}, got k={k}")
    return _numeric_cstar(model, resolution, tol, max_doublings, max_rounds)
