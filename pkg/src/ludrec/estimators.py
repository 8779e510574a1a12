"""Estimator-style wrappers around the location solvers.

`LudSolver` and `ShapeFitSolver` follow the scikit-learn convention:
constructor stores hyperparameters only, `fit` consumes a measurement
graph and sets trailing-underscore attributes, `get_params`/`set_params`
work for grid searches and cloning. There is no meaningful `predict`;
`fit_transform(graph)` returns the recovered locations.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .geometry import nrmse
from .solvers import SolverParams, solve_lud, solve_shapefit
from .viewgraph import ViewGraph

__all__ = ["LudSolver", "ShapeFitSolver", "check_view_graph"]


def check_view_graph(graph, require_connected: bool = True) -> ViewGraph:
    """Validate a fit input; only ViewGraph instances are accepted."""
    if not isinstance(graph, ViewGraph):
        raise TypeError(
            f"expected a ViewGraph, got {type(graph).__name__}; build one with "
            "viewgraph.ViewGraph or generate_instance"
        )
    if require_connected:
        graph.require_connected()
    return graph


class _LocationEstimator(BaseEstimator):
    def __init__(self, max_iters: int = 50000, primal_tol: float = 1e-8,
                 dual_tol: float = 1e-8, rho: float = 1.0,
                 rescale_interval: int = 100):
        self.max_iters = max_iters
        self.primal_tol = primal_tol
        self.dual_tol = dual_tol
        self.rho = rho
        self.rescale_interval = rescale_interval

    def _params(self) -> SolverParams:
        return SolverParams(
            max_iters=self.max_iters,
            primal_tol=self.primal_tol,
            dual_tol=self.dual_tol,
            rho=self.rho,
            rescale_interval=self.rescale_interval,
        )

    def _solve(self, graph: ViewGraph):
        raise NotImplementedError

    def fit(self, graph: ViewGraph, y=None):
        graph = check_view_graph(graph)
        result = self._solve(graph)
        self.result_ = result
        self.locations_ = result.locations
        self.objective_ = result.objective
        self.n_iter_ = result.iterations
        self.converged_ = result.status.value == "Converged"
        return self

    def fit_transform(self, graph: ViewGraph, y=None) -> np.ndarray:
        return self.fit(graph).locations_

    def score(self, graph: ViewGraph, ground_truth) -> float:
        """Negative NRMSE against known locations (higher is better)."""
        if not hasattr(self, "locations_"):
            self.fit(graph)
        return -nrmse(self.locations_, np.asarray(ground_truth, dtype=float))


class LudSolver(_LocationEstimator):
    """Corruption-robust recovery: each edge residual is measured to the
    ray {alpha * gamma : alpha >= 1}, so wildly wrong directions pay only
    their projection. Fitted attributes: locations_, objective_, n_iter_,
    converged_, result_ (which carries the per-edge alphas)."""

    def _solve(self, graph: ViewGraph):
        return solve_lud(graph, self._params())


class ShapeFitSolver(_LocationEstimator):
    """Projection-based recovery with a single global scale constraint."""

    def _solve(self, graph: ViewGraph):
        return solve_shapefit(graph, self._params())
