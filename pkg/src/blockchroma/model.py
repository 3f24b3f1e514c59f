"""Block model parameters and the closed-form scalar functions on them.

Scaled types ``c`` are measured in units of ``ln n``: a vertex set meeting
part ``i`` in ``c_i ln n`` vertices has scaled type ``c``.  The admissible
region is the set of nonnegative ``c`` with ``g(c, I) >= 0`` for every
nonempty subset ``I`` of the parts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np

MAX_REGION_K = 20
PROB_EDGE = 1e-12


class ModelError(ValueError):
    """Raised when model parameters violate an invariant."""


class PairShape(str, Enum):
    CONVEX_COMPATIBLE = "convex_compatible"
    BOUNDARY = "boundary"
    CONCAVE = "concave"


@dataclass(frozen=True, eq=False)
class BlockModel:
    """Parameters ``(alpha, P)`` of the random block graph ``G(n, alpha, P)``.

    Parameters
    ----------
    alpha : array-like of shape (k,)
        Partition weights, each in ``(0, 1]``, summing to one.
    P : array-like of shape (k, k)
        Symmetric edge-probability matrix with entries strictly in ``(0, 1)``.
    """

    alpha: np.ndarray
    P: np.ndarray
    log_nonedge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if alpha.ndim != 1 or alpha.size < 1:
            raise ModelError("k >= 1: alpha must be a nonempty vector")
        k = alpha.size
        if P.shape != (k, k):
            raise ModelError(f"P must be a {k}x{k} matrix, got shape {P.shape}")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0) or np.any(alpha > 1):
            raise ModelError("alpha_i in (0, 1] violated")
        if abs(alpha.sum() - 1.0) > 1e-12:
            raise ModelError(f"sum(alpha) = 1 violated (sum = {alpha.sum()!r})")
        if not np.all(np.isfinite(P)):
            raise ModelError("P entries must be finite")
        if np.max(np.abs(P - P.T)) > 1e-15:
            raise ModelError("P symmetric violated")
        if np.any(P <= PROB_EDGE) or np.any(P >= 1 - PROB_EDGE):
            raise ModelError("p_ij in (0, 1) strictly violated")
        alpha.setflags(write=False)
        P = P.copy()
        P.setflags(write=False)
        L = np.log1p(-P)
        L.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "log_nonedge", L)

    @property
    def k(self) -> int:
        return self.alpha.size

    @property
    def diag(self) -> np.ndarray:
        return np.diag(self.P).copy()

    def caps(self) -> np.ndarray:
        """Coordinate caps ``c(p_i)`` of the admissible region."""
        return -2.0 / np.diag(self.log_nonedge)

    def to_dict(self) -> dict:
        return {"k": self.k, "alpha": self.alpha.tolist(), "P": self.P.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "BlockModel":
        try:
            alpha = data["alpha"]
            P = data["P"]
        except (KeyError, TypeError) as exc:
            raise ModelError(f"model object needs 'alpha' and 'P' keys ({exc})") from None
        model = cls(alpha, P)
        if "k" in data and int(data["k"]) != model.k:
            raise ModelError(f"k = len(alpha) violated: k={data['k']}, len(alpha)={model.k}")
        return model

    @classmethod
    def homogeneous(cls, k: int, p: float, q: float) -> "BlockModel":
        P = np.full((k, k), q, dtype=float)
        np.fill_diagonal(P, p)
        return cls(np.full(k, 1.0 / k), P)

    def __repr__(self):
        return f"BlockModel(alpha={self.alpha.tolist()}, P={self.P.tolist()})"


def load_model(path) -> BlockModel:
    """Read a model from a JSON file ``{"k": .., "alpha": [..], "P": [[..]..]}``."""
    with open(Path(path), encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model file is not valid JSON: {exc}") from None
    return BlockModel.from_dict(data)


def save_model(model: BlockModel, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh)


def natural_class_size(p: float) -> float:
    """Return ``-2 / ln(1 - p)``, the scaled independence number of ``G(n, p)``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return -2.0 / math.log1p(-p)


@lru_cache(maxsize=None)
def subset_masks(k: int) -> np.ndarray:
    """0/1 matrix whose rows enumerate the nonempty subsets of ``range(k)``.

    Rows are ordered by subset size, then lexicographically.
    """
    rows = []
    for size in range(1, k + 1):
        for combo in combinations(range(k), size):
            row = np.zeros(k)
            row[list(combo)] = 1.0
            rows.append(row)
    out = np.array(rows).reshape(-1, k)
    out.setflags(write=False)
    return out


def mask_to_subset(mask) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(np.asarray(mask) > 0))


def format_subset(subset) -> str:
    """1-based ``"1+2"`` rendering used in CSV and JSON output."""
    return "+".join(str(i + 1) for i in subset)


def _check_subset(k: int, I) -> np.ndarray:
    idx = np.asarray(sorted(set(int(i) for i in I)), dtype=int)
    if idx.size == 0:
        raise ValueError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= k:
        raise ValueError(f"subset elements must lie in [0, {k})")
    return idx


def g_value(model: BlockModel, c, I) -> float:
    """First-moment exponent ``g(c, I)`` of independent sets of scaled type ``c``.

    ``I`` holds 0-based part indices.  The quadratic term sums over ordered
    pairs, so diagonal terms carry weight 1/2 and each unordered off-diagonal
    pair weight 1.
    """
    c = np.asarray(c, dtype=float)
    idx = _check_subset(model.k, I)
    ci = c[idx]
    L = model.log_nonedge[np.ix_(idx, idx)]
    return float(ci.sum() + 0.5 * ci @ L @ ci)


def g_all_subsets(model: BlockModel, c) -> np.ndarray:
    """``g(c, I)`` for every nonempty ``I``, ordered as :func:`subset_masks`."""
    if model.k > MAX_REGION_K:
        raise ValueError(f"subset enumeration refused for k={model.k} > {MAX_REGION_K}")
    c = np.asarray(c, dtype=float)
    cm = subset_masks(model.k) * c
    return cm.sum(axis=1) + 0.5 * np.einsum("sk,kl,sl->s", cm, model.log_nonedge, cm)


def g_gradient(model: BlockModel, c, I) -> np.ndarray:
    """Gradient of ``g(., I)`` at ``c`` (zero outside ``I``)."""
    c = np.asarray(c, dtype=float)
    idx = _check_subset(model.k, I)
    grad = np.zeros(model.k)
    grad[idx] = 1.0 + model.log_nonedge[np.ix_(idx, idx)] @ c[idx]
    return grad


def region_contains(model: BlockModel, c, tol: float = 1e-9) -> bool:
    """Membership in the admissible region, up to ``tol`` on each ``g``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    c = np.asarray(c, dtype=float)
    if c.shape != (model.k,):
        raise ValueError(f"c must have shape ({model.k},)")
    if np.any(c < -tol) or not np.all(np.isfinite(c)):
        return False
    return bool(np.min(g_all_subsets(model, np.maximum(c, 0.0))) >= -tol)


def region_contains_many(model: BlockModel, C, tol: float = 1e-9) -> np.ndarray:
    """Row-wise :func:`region_contains` for an ``(N, k)`` array of points."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if model.k > MAX_REGION_K:
        raise ValueError(f"subset enumeration refused for k={model.k} > {MAX_REGION_K}")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[1] != model.k:
        raise ValueError(f"points must have {model.k} columns")
    ok = np.all(C >= -tol, axis=1) & np.all(np.isfinite(C), axis=1)
    M = subset_masks(model.k)
    CM = np.maximum(C, 0.0)[:, None, :] * M[None, :, :]
    g = CM.sum(axis=2) + 0.5 * np.einsum("nsk,kl,nsl->ns", CM, model.log_nonedge, CM)
    return ok & (g.min(axis=1) >= -tol)


def safe_radius(model: BlockModel) -> float:
    """Radius ``C`` such that every ``c >= 0`` with ``|c|_1 <= C`` is admissible."""
    return -2.0 / math.log1p(-float(np.max(model.P)))


def pair_threshold(model: BlockModel, i: int, j: int) -> float:
    """``1 - sqrt((1 - p_i)(1 - p_j))``: the convexity threshold for ``p_ij``."""
    return 1.0 - math.sqrt((1.0 - model.P[i, i]) * (1.0 - model.P[j, j]))


def classify_pair(model: BlockModel, i: int, j: int, tol: float = 1e-12) -> PairShape:
    """Classify the two-part slice ``{i, j}`` of the region as convex or concave."""
    if i == j:
        raise ValueError("classify_pair needs two distinct parts")
    for idx in (i, j):
        if not 0 <= idx < model.k:
            raise ValueError(f"part index {idx} out of range")
    diff = model.P[i, j] - pair_threshold(model, i, j)
    if diff < -tol:
        return PairShape.CONVEX_COMPATIBLE
    if diff > tol:
        return PairShape.CONCAVE
    return PairShape.BOUNDARY
