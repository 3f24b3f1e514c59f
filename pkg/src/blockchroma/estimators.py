"""scikit-learn style wrappers around the functional API.

A coloring is a partition of the vertices, so the coloring estimators are
clusterers: ``fit`` takes a graph (a :class:`BlockGraph` or a dense 0/1
adjacency matrix) and stores the color of every vertex in ``labels_``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .coloring import DEFAULT_EPSILON_CAP, build_plan, dsatur, execute_plan, predicted_chi_range
from .indsets import SearchBudget
from .model import BlockModel
from .region import c_star
from .sampler import BlockGraph, part_sizes


def check_model(model) -> BlockModel:
    """Coerce a :class:`BlockModel` or its dict form."""
    if isinstance(model, BlockModel):
        return model
    if isinstance(model, dict):
        return BlockModel.from_dict(model)
    raise TypeError(f"expected a BlockModel or dict, got {type(model).__name__}")


def check_block_graph(X, model: BlockModel | None = None) -> BlockGraph:
    """Coerce ``X`` to a :class:`BlockGraph`.

    Dense matrices get the contiguous part layout implied by ``model`` (one
    part when no model is given).
    """
    if isinstance(X, BlockGraph):
        if model is not None and X.k != model.k:
            raise ValueError(f"graph has {X.k} parts but the model has {model.k}")
        return X
    A = np.asarray(X)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be a square matrix, got shape {A.shape}")
    if not np.isin(A, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    sizes = None if model is None else part_sizes(model.alpha, A.shape[0])
    return BlockGraph.from_dense(A, sizes)


class ChromaticConstant(BaseEstimator):
    """Fit ``c*`` for a model; predict ``n / (c* ln n)``.

    Parameters
    ----------
    resolution : int
        Initial boundary-grid resolution of the numeric solver.
    tol : float
        Target bracket width.
    closed_form : bool
        Allow closed-form fast paths.
    """

    def __init__(self, resolution: int = 64, tol: float = 1e-6, closed_form: bool = True):
        self.resolution = resolution
        self.tol = tol
        self.closed_form = closed_form

    def fit(self, X, y=None):
        self.model_ = check_model(X)
        self.result_ = c_star(self.model_, resolution=self.resolution, tol=self.tol, closed_form=self.closed_form)
        self.cstar_ = self.result_.lower
        self.regime_ = self.result_.regime
        return self

    def predict(self, n):
        """Predicted chromatic number for each graph size in ``n``."""
        check_is_fitted(self, "result_")
        n = np.atleast_1d(np.asarray(n, dtype=float))
        if np.any(n < 3):
            raise ValueError("n must be >= 3")
        return n / (self.cstar_ * np.log(n))


class BlockColoring(ClusterMixin, BaseEstimator):
    """The constructive typed-set coloring.

    Parameters
    ----------
    model : BlockModel or dict
        Parameters the graph was drawn from.
    epsilon_cap : float
        Cap on the target shrink factor.
    seed : int
        Seed for the randomized set search.
    resolution, tol : int, float
        Forwarded to the ``c*`` solver.
    max_restarts : int
        Greedy restarts per set search.
    """

    def __init__(
        self,
        model=None,
        epsilon_cap: float = DEFAULT_EPSILON_CAP,
        seed: int = 0,
        resolution: int = 64,
        tol: float = 1e-6,
        max_restarts: int = 50,
    ):
        self.model = model
        self.epsilon_cap = epsilon_cap
        self.seed = seed
        self.resolution = resolution
        self.tol = tol
        self.max_restarts = max_restarts

    def fit(self, X, y=None):
        if self.model is None:
            raise ValueError("BlockColoring needs the generating model")
        model = check_model(self.model)
        g = check_block_graph(X, model)
        self.cstar_ = c_star(model, resolution=self.resolution, tol=self.tol)
        self.plan_ = build_plan(model, g.n, self.cstar_, self.epsilon_cap)
        budget = SearchBudget(max_restarts=self.max_restarts)
        coloring, self.report_ = execute_plan(g, self.plan_, model, budget, self.seed)
        self.labels_ = coloring.color_of
        self.n_colors_ = coloring.num_colors
        self.predicted_range_ = predicted_chi_range(model, g.n, self.cstar_)
        return self


class DSaturColoring(ClusterMixin, BaseEstimator):
    """Saturation-degree greedy coloring (the baseline)."""

    def fit(self, X, y=None):
        g = check_block_graph(X)
        coloring = dsatur(g)
        self.labels_ = coloring.color_of
        self.n_colors_ = coloring.num_colors
        return self
