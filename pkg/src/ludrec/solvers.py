"""Convex location solvers and their validation oracles.

Two programs over a connected measurement graph:

* LUD: minimize sum_e ||t_i - t_j - alpha_e * gamma_e|| with alpha_e >= 1
  and sum_i t_i = 0. The alpha >= 1 floor keeps the solution from collapsing
  to a point.
* ShapeFit: minimize sum_e ||P_perp(t_i - t_j)|| subject to the single scale
  constraint sum_e <t_i - t_j, gamma_e> = 1 and sum_i t_i = 0.

Both are solved by two-block ADMM. The per-edge variable z_e and the
constraint z_e = t_i - t_j - alpha_e * gamma_e split the problem so that
the t-update is one graph-Laplacian solve (factored once via the
pseudo-inverse) and the (alpha, z)-update is an exact per-edge clamp plus
block soft-threshold: the partial minimum over z is increasing in
||d - alpha*gamma||, so minimizing alpha first and shrinking after is the
exact joint update. Over-relaxation and residual balancing are standard.

A deliberately slow projected-subgradient reference (normalized steps,
geometrically decaying step length) provides an independent optimum
estimate for tests, and the 1-D oracle-scale problem is solved along the
ray of scaled ground truths via its piecewise-convex structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from numba import njit

from .geometry import project_perp
from .viewgraph import Instance, ViewGraph, dump_instance, load_instance

__all__ = [
    "SolverParams",
    "SolverStatus",
    "SolverResult",
    "OracleScaleResult",
    "optimal_alpha",
    "ray_distance",
    "lud_objective",
    "shapefit_objective",
    "solve_lud",
    "solve_shapefit",
    "solve_reference",
    "scale_objective",
    "oracle_scale",
    "good_long_partition",
    "dump_results",
    "load_results",
]

# Over-relaxation factor for both ADMM cores; safe range is (0, 2).
RELAXATION = 1.7

# Reference solver refuses larger problems: it exists to be slow and sure.
REFERENCE_MAX_N = 12


@dataclass(frozen=True)
class SolverParams:
    """Iteration controls shared by both ADMM solvers."""

    max_iters: int = 50000
    primal_tol: float = 1e-8
    dual_tol: float = 1e-8
    rho: float = 1.0
    rescale_interval: int = 100

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.primal_tol <= 0 or self.dual_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


class SolverStatus(Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"


@dataclass
class SolverResult:
    """Solver output: centered locations plus convergence diagnostics.

    ``alphas`` maps (i, j) with i < j to the optimal per-edge stretch for
    LUD and is None for ShapeFit. ``residual_history`` holds one
    (primal_rms, dual_rms) row per iteration; the reference solver leaves
    it empty.
    """

    locations: np.ndarray
    alphas: Optional[Dict[Tuple[int, int], float]]
    objective: float
    iterations: int
    status: SolverStatus
    residual_history: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))


@dataclass(frozen=True)
class OracleScaleResult:
    """Minimizer of the 1-D scale problem, reported as an interval.

    ``unique`` is a numerical statement: the set where the objective is
    within a small slack of its minimum has width at most ``width_tol``.
    Flat minima (always the case with no bad edges) report the whole
    interval, truncated at the scan bound, and ``c_star`` is its midpoint.
    """

    c_star: float
    minimizer_interval: Tuple[float, float]
    unique: bool
    objective_at_c: float


def optimal_alpha(gamma, d):
    """Best stretch along gamma for difference d: <gamma, d> clamped to >= 1."""
    gamma = np.asarray(gamma, dtype=float)
    d = np.asarray(d, dtype=float)
    dots = np.sum(gamma * d, axis=-1)
    return np.maximum(dots, 1.0)


def ray_distance(gamma, d):
    """Distance from d to the ray {alpha * gamma : alpha >= 1}.

    Equals ||P_perp(d)|| when <gamma, d> > 1 and ||d - gamma|| otherwise,
    i.e. ||d - optimal_alpha * gamma|| in both branches. 1-Lipschitz in d.
    """
    gamma = np.asarray(gamma, dtype=float)
    d = np.asarray(d, dtype=float)
    dots = np.sum(gamma * d, axis=-1)
    perp = np.linalg.norm(d - dots[..., None] * gamma, axis=-1)
    snap = np.linalg.norm(d - gamma, axis=-1)
    return np.where(dots > 1.0, perp, snap)


def _edge_arrays(graph: ViewGraph) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    i_idx = np.ascontiguousarray(graph.pairs[:, 0])
    j_idx = np.ascontiguousarray(graph.pairs[:, 1])
    gamma = np.ascontiguousarray(graph.directions, dtype=float)
    return i_idx, j_idx, gamma


def lud_objective(graph: ViewGraph, locations) -> float:
    """Sum of ray distances at the given locations."""
    i_idx, j_idx, gamma = _edge_arrays(graph)
    t = np.asarray(locations, dtype=float)
    return float(np.sum(ray_distance(gamma, t[i_idx] - t[j_idx])))


def shapefit_objective(graph: ViewGraph, locations) -> float:
    """Sum of residual projections orthogonal to the measured directions."""
    i_idx, j_idx, gamma = _edge_arrays(graph)
    t = np.asarray(locations, dtype=float)
    return float(np.sum(np.linalg.norm(project_perp(gamma, t[i_idx] - t[j_idx]), axis=-1)))


def _laplacian_pinv(graph: ViewGraph) -> np.ndarray:
    """Pseudo-inverse of the graph Laplacian; its range is the centered subspace."""
    n = graph.n
    lap = np.zeros((n, n))
    i_idx, j_idx = graph.pairs[:, 0], graph.pairs[:, 1]
    np.add.at(lap, (i_idx, i_idx), 1.0)
    np.add.at(lap, (j_idx, j_idx), 1.0)
    np.add.at(lap, (i_idx, j_idx), -1.0)
    np.add.at(lap, (j_idx, i_idx), -1.0)
    return np.linalg.pinv(lap)


def _incidence_rhs(n: int, i_idx, j_idx, values: np.ndarray) -> np.ndarray:
    """D^T applied to per-edge 3-vectors: scatter +/- into vertex rows."""
    rhs = np.zeros((n, 3))
    np.add.at(rhs, i_idx, values)
    np.add.at(rhs, j_idx, -values)
    return rhs


@njit(cache=True)
def _lud_admm(i_idx, j_idx, gamma, lap_pinv, t0, rho, relax, max_iters,
              primal_tol, dual_tol, rescale_every):
    m = i_idx.shape[0]
    n = lap_pinv.shape[0]
    t = t0.copy()
    alpha = np.empty(m)
    z = np.empty((m, 3))
    u = np.zeros((m, 3))
    for e in range(m):
        i = i_idx[e]
        j = j_idx[e]
        dot = 0.0
        for c in range(3):
            dot += (t[i, c] - t[j, c]) * gamma[e, c]
        a = dot if dot > 1.0 else 1.0
        alpha[e] = a
        for c in range(3):
            z[e, c] = (t[i, c] - t[j, c]) - a * gamma[e, c]

    hist = np.empty((max_iters, 2))
    iters = max_iters
    converged = False
    rhs = np.empty((n, 3))
    dual_acc = np.empty((n, 3))
    for k in range(max_iters):
        # t-step: least squares against the current per-edge ray points.
        for i in range(n):
            for c in range(3):
                rhs[i, c] = 0.0
        for e in range(m):
            i = i_idx[e]
            j = j_idx[e]
            for c in range(3):
                r = alpha[e] * gamma[e, c] + z[e, c] - u[e, c]
                rhs[i, c] += r
                rhs[j, c] -= r
        t = np.dot(lap_pinv, rhs)

        # Joint (alpha, z)-step, scaled dual update, and both residuals.
        for i in range(n):
            for c in range(3):
                dual_acc[i, c] = 0.0
        prim_sq = 0.0
        for e in range(m):
            i = i_idx[e]
            j = j_idx[e]
            g0 = gamma[e, 0]
            g1 = gamma[e, 1]
            g2 = gamma[e, 2]
            old0 = alpha[e] * g0 + z[e, 0]
            old1 = alpha[e] * g1 + z[e, 1]
            old2 = alpha[e] * g2 + z[e, 2]
            d0 = t[i, 0] - t[j, 0]
            d1 = t[i, 1] - t[j, 1]
            d2 = t[i, 2] - t[j, 2]
            x0 = relax * d0 + (1.0 - relax) * old0 + u[e, 0]
            x1 = relax * d1 + (1.0 - relax) * old1 + u[e, 1]
            x2 = relax * d2 + (1.0 - relax) * old2 + u[e, 2]
            dot = x0 * g0 + x1 * g1 + x2 * g2
            a = dot if dot > 1.0 else 1.0
            v0 = x0 - a * g0
            v1 = x1 - a * g1
            v2 = x2 - a * g2
            nv = math.sqrt(v0 * v0 + v1 * v1 + v2 * v2)
            shrink = 0.0
            if rho * nv > 1.0:
                shrink = 1.0 - 1.0 / (rho * nv)
            z[e, 0] = shrink * v0
            z[e, 1] = shrink * v1
            z[e, 2] = shrink * v2
            u[e, 0] = v0 - z[e, 0]
            u[e, 1] = v1 - z[e, 1]
            u[e, 2] = v2 - z[e, 2]
            alpha[e] = a
            r0 = d0 - a * g0 - z[e, 0]
            r1 = d1 - a * g1 - z[e, 1]
            r2 = d2 - a * g2 - z[e, 2]
            prim_sq += r0 * r0 + r1 * r1 + r2 * r2
            dd0 = (a * g0 + z[e, 0]) - old0
            dd1 = (a * g1 + z[e, 1]) - old1
            dd2 = (a * g2 + z[e, 2]) - old2
            dual_acc[i, 0] += dd0
            dual_acc[i, 1] += dd1
            dual_acc[i, 2] += dd2
            dual_acc[j, 0] -= dd0
            dual_acc[j, 1] -= dd1
            dual_acc[j, 2] -= dd2
        dual_sq = 0.0
        for i in range(n):
            for c in range(3):
                dual_sq += dual_acc[i, c] * dual_acc[i, c]
        prim_rms = math.sqrt(prim_sq / m)
        dual_rms = rho * math.sqrt(dual_sq / n)
        hist[k, 0] = prim_rms
        hist[k, 1] = dual_rms
        if prim_rms <= primal_tol and dual_rms <= dual_tol:
            iters = k + 1
            converged = True
            break
        if rescale_every > 0 and (k + 1) % rescale_every == 0:
            if prim_rms > 10.0 * dual_rms:
                rho *= 2.0
                for e in range(m):
                    for c in range(3):
                        u[e, c] *= 0.5
            elif dual_rms > 10.0 * prim_rms:
                rho *= 0.5
                for e in range(m):
                    for c in range(3):
                        u[e, c] *= 2.0
    return t, iters, converged, hist[:iters].copy()


@njit(cache=True)
def _shapefit_admm(i_idx, j_idx, gamma, lap_pinv, a_vert, t_a, a_dot_ta, s0, t0,
                   rho, relax, max_iters, primal_tol, dual_tol, rescale_every):
    m = i_idx.shape[0]
    n = lap_pinv.shape[0]
    t = t0.copy()
    w = np.empty((m, 3))
    u = np.zeros((m, 3))
    for e in range(m):
        i = i_idx[e]
        j = j_idx[e]
        for c in range(3):
            w[e, c] = t[i, c] - t[j, c]

    hist = np.empty((max_iters, 2))
    iters = max_iters
    converged = False
    rhs = np.empty((n, 3))
    dual_acc = np.empty((n, 3))
    for k in range(max_iters):
        # t-step: Laplacian solve plus a rank-1 correction onto the
        # affine set {<a, t> = s0}; the Laplacian image is centered already.
        for i in range(n):
            for c in range(3):
                rhs[i, c] = 0.0
        for e in range(m):
            i = i_idx[e]
            j = j_idx[e]
            for c in range(3):
                r = w[e, c] - u[e, c]
                rhs[i, c] += r
                rhs[j, c] -= r
        t = np.dot(lap_pinv, rhs)
        a_dot_t = 0.0
        for i in range(n):
            for c in range(3):
                a_dot_t += a_vert[i, c] * t[i, c]
        lam = (s0 - a_dot_t) / a_dot_ta
        for i in range(n):
            for c in range(3):
                t[i, c] += lam * t_a[i, c]

        for i in range(n):
            for c in range(3):
                dual_acc[i, c] = 0.0
        prim_sq = 0.0
        for e in range(m):
            i = i_idx[e]
            j = j_idx[e]
            g0 = gamma[e, 0]
            g1 = gamma[e, 1]
            g2 = gamma[e, 2]
            old0 = w[e, 0]
            old1 = w[e, 1]
            old2 = w[e, 2]
            d0 = t[i, 0] - t[j, 0]
            d1 = t[i, 1] - t[j, 1]
            d2 = t[i, 2] - t[j, 2]
            x0 = relax * d0 + (1.0 - relax) * old0 + u[e, 0]
            x1 = relax * d1 + (1.0 - relax) * old1 + u[e, 1]
            x2 = relax * d2 + (1.0 - relax) * old2 + u[e, 2]
            par = x0 * g0 + x1 * g1 + x2 * g2
            p0 = x0 - par * g0
            p1 = x1 - par * g1
            p2 = x2 - par * g2
            npr = math.sqrt(p0 * p0 + p1 * p1 + p2 * p2)
            shrink = 0.0
            if rho * npr > 1.0:
                shrink = 1.0 - 1.0 / (rho * npr)
            w[e, 0] = par * g0 + shrink * p0
            w[e, 1] = par * g1 + shrink * p1
            w[e, 2] = par * g2 + shrink * p2
            u[e, 0] = x0 - w[e, 0]
            u[e, 1] = x1 - w[e, 1]
            u[e, 2] = x2 - w[e, 2]
            r0 = d0 - w[e, 0]
            r1 = d1 - w[e, 1]
            r2 = d2 - w[e, 2]
            prim_sq += r0 * r0 + r1 * r1 + r2 * r2
            dd0 = w[e, 0] - old0
            dd1 = w[e, 1] - old1
            dd2 = w[e, 2] - old2
            dual_acc[i, 0] += dd0
            dual_acc[i, 1] += dd1
            dual_acc[i, 2] += dd2
            dual_acc[j, 0] -= dd0
            dual_acc[j, 1] -= dd1
            dual_acc[j, 2] -= dd2
        dual_sq = 0.0
        for i in range(n):
            for c in range(3):
                dual_sq += dual_acc[i, c] * dual_acc[i, c]
        prim_rms = math.sqrt(prim_sq / m)
        dual_rms = rho * math.sqrt(dual_sq / n)
        hist[k, 0] = prim_rms
        hist[k, 1] = dual_rms
        if prim_rms <= primal_tol and dual_rms <= dual_tol:
            iters = k + 1
            converged = True
            break
        if rescale_every > 0 and (k + 1) % rescale_every == 0:
            if prim_rms > 10.0 * dual_rms:
                rho *= 2.0
                for e in range(m):
                    for c in range(3):
                        u[e, c] *= 0.5
            elif dual_rms > 10.0 * prim_rms:
                rho *= 0.5
                for e in range(m):
                    for c in range(3):
                        u[e, c] *= 2.0
    return t, iters, converged, hist[:iters].copy()


@njit(cache=True)
def _subgradient(i_idx, j_idx, gamma, t0, iters, step0, decay, shapefit,
                 a_vert, a_norm_sq):
    m = i_idx.shape[0]
    n = t0.shape[0]
    t = t0.copy()
    grad = np.empty((n, 3))
    best_obj = np.inf
    best_t = t.copy()
    step = step0
    for _ in range(iters):
        for i in range(n):
            for c in range(3):
                grad[i, c] = 0.0
        obj = 0.0
        for e in range(m):
            i = i_idx[e]
            j = j_idx[e]
            g0 = gamma[e, 0]
            g1 = gamma[e, 1]
            g2 = gamma[e, 2]
            d0 = t[i, 0] - t[j, 0]
            d1 = t[i, 1] - t[j, 1]
            d2 = t[i, 2] - t[j, 2]
            dot = d0 * g0 + d1 * g1 + d2 * g2
            if shapefit or dot > 1.0:
                w0 = d0 - dot * g0
                w1 = d1 - dot * g1
                w2 = d2 - dot * g2
            else:
                w0 = d0 - g0
                w1 = d1 - g1
                w2 = d2 - g2
            nw = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
            obj += nw
            if nw > 1e-15:
                s0_ = w0 / nw
                s1_ = w1 / nw
                s2_ = w2 / nw
                grad[i, 0] += s0_
                grad[i, 1] += s1_
                grad[i, 2] += s2_
                grad[j, 0] -= s0_
                grad[j, 1] -= s1_
                grad[j, 2] -= s2_
        if obj < best_obj:
            best_obj = obj
            best_t = t.copy()
        gn = 0.0
        for i in range(n):
            for c in range(3):
                gn += grad[i, c] * grad[i, c]
        gn = math.sqrt(gn)
        if gn > 1e-15:
            coef = step / gn
            for i in range(n):
                for c in range(3):
                    t[i, c] -= coef * grad[i, c]
        # Re-project: zero mean, and for ShapeFit the scale constraint.
        for c in range(3):
            mean = 0.0
            for i in range(n):
                mean += t[i, c]
            mean /= n
            for i in range(n):
                t[i, c] -= mean
        if shapefit:
            a_dot_t = 0.0
            for i in range(n):
                for c in range(3):
                    a_dot_t += a_vert[i, c] * t[i, c]
            corr = (1.0 - a_dot_t) / a_norm_sq
            for i in range(n):
                for c in range(3):
                    t[i, c] += corr * a_vert[i, c]
        step *= decay
    return best_t, best_obj


def _prepare(graph: ViewGraph):
    if not isinstance(graph, ViewGraph):
        raise TypeError(f"expected a ViewGraph, got {type(graph).__name__}")
    graph.require_connected()
    if graph.m == 0:
        raise ValueError("graph has no edges")
    i_idx, j_idx, gamma = _edge_arrays(graph)
    lap_pinv = _laplacian_pinv(graph)
    return i_idx, j_idx, gamma, lap_pinv


def _scale_vector(graph: ViewGraph, i_idx, j_idx, gamma) -> np.ndarray:
    """Gradient of the scale functional sum_e <t_i - t_j, gamma_e> (n x 3)."""
    return _incidence_rhs(graph.n, i_idx, j_idx, gamma)


def _alphas_dict(graph: ViewGraph, locations: np.ndarray) -> Dict[Tuple[int, int], float]:
    i_idx, j_idx, gamma = _edge_arrays(graph)
    alphas = optimal_alpha(gamma, locations[i_idx] - locations[j_idx])
    return {
        (int(i), int(j)): float(a)
        for i, j, a in zip(graph.pairs[:, 0], graph.pairs[:, 1], alphas)
    }


def solve_lud(graph: ViewGraph, params: Optional[SolverParams] = None) -> SolverResult:
    """LUD via ADMM. Reported alphas are re-clamped at the final locations,
    so the objective equals the sum of ray distances there exactly."""
    params = params or SolverParams()
    i_idx, j_idx, gamma, lap_pinv = _prepare(graph)
    t0 = lap_pinv @ _incidence_rhs(graph.n, i_idx, j_idx, gamma)
    t, iters, converged, hist = _lud_admm(
        i_idx, j_idx, gamma, lap_pinv, t0,
        float(params.rho), RELAXATION, int(params.max_iters),
        float(params.primal_tol), float(params.dual_tol), int(params.rescale_interval),
    )
    t = t - t.mean(axis=0)
    return SolverResult(
        locations=t,
        alphas=_alphas_dict(graph, t),
        objective=lud_objective(graph, t),
        iterations=int(iters),
        status=SolverStatus.CONVERGED if converged else SolverStatus.MAX_ITERS,
        residual_history=hist,
    )


def solve_shapefit(graph: ViewGraph, params: Optional[SolverParams] = None) -> SolverResult:
    """ShapeFit via ADMM.

    Solved with the scale constraint set to the edge count (solution norms
    stay O(1), so absolute residual tolerances are meaningful) and rescaled
    back, so the returned locations satisfy the unit normalization.
    """
    params = params or SolverParams()
    i_idx, j_idx, gamma, lap_pinv = _prepare(graph)
    a_vert = _scale_vector(graph, i_idx, j_idx, gamma)
    t_a = lap_pinv @ a_vert
    a_dot_ta = float(np.sum(a_vert * t_a))
    if a_dot_ta <= 1e-30:
        raise ValueError("degenerate scale constraint: directions cancel along the graph")
    s0 = float(graph.m)
    t_ls = lap_pinv @ _incidence_rhs(graph.n, i_idx, j_idx, gamma)
    t0 = t_ls + ((s0 - float(np.sum(a_vert * t_ls))) / a_dot_ta) * t_a
    t, iters, converged, hist = _shapefit_admm(
        i_idx, j_idx, gamma, lap_pinv, a_vert, t_a, a_dot_ta, s0, t0,
        float(params.rho), RELAXATION, int(params.max_iters),
        float(params.primal_tol), float(params.dual_tol), int(params.rescale_interval),
    )
    t = t - t.mean(axis=0)
    t /= s0
    return SolverResult(
        locations=t,
        alphas=None,
        objective=shapefit_objective(graph, t),
        iterations=int(iters),
        status=SolverStatus.CONVERGED if converged else SolverStatus.MAX_ITERS,
        residual_history=hist,
    )


def solve_reference(graph: ViewGraph, iters: int, method: str = "lud") -> SolverResult:
    """Independent optimum estimate by projected subgradient descent.

    Normalized subgradient steps with a geometrically decaying step length
    (a diminishing-step schedule whose total travel far exceeds any
    instance diameter), projected onto the feasible affine set after every
    step. Returns the best iterate. Deliberately restricted to tiny
    problems; it always runs its full budget and therefore reports
    MaxIters.
    """
    if graph.n > REFERENCE_MAX_N:
        raise ValueError(f"reference solver is limited to n <= {REFERENCE_MAX_N}")
    if method not in ("lud", "shapefit"):
        raise ValueError(f"unknown method {method!r}")
    if iters < 1:
        raise ValueError("iters must be at least 1")
    i_idx, j_idx, gamma, lap_pinv = _prepare(graph)
    shapefit = method == "shapefit"
    t0 = lap_pinv @ _incidence_rhs(graph.n, i_idx, j_idx, gamma)
    a_vert = _scale_vector(graph, i_idx, j_idx, gamma)
    a_norm_sq = float(np.sum(a_vert * a_vert))
    if shapefit:
        if a_norm_sq <= 1e-30:
            raise ValueError("degenerate scale constraint: directions cancel along the graph")
        t0 = t0 + ((1.0 - float(np.sum(a_vert * t0))) / a_norm_sq) * a_vert
    step0 = max(1.0, 4.0 * float(np.linalg.norm(t0)))
    decay = (1e-13 / step0) ** (1.0 / max(iters - 1, 1))
    best_t, best_obj = _subgradient(
        i_idx, j_idx, gamma, t0, int(iters), step0, decay, shapefit,
        a_vert, max(a_norm_sq, 1e-30),
    )
    return SolverResult(
        locations=best_t,
        alphas=_alphas_dict(graph, best_t) if not shapefit else None,
        objective=float(best_obj),
        iterations=int(iters),
        status=SolverStatus.MAX_ITERS,
    )


# --- oracle scale ---------------------------------------------------------


def _scale_terms(instance: Instance):
    graph = instance.graph
    if graph.m == 0:
        raise ValueError("empty edge set")
    gt = np.asarray(instance.ground_truth, dtype=float)
    diffs = gt[graph.pairs[:, 0]] - gt[graph.pairs[:, 1]]
    lengths = np.linalg.norm(diffs, axis=1)
    good = graph.good
    dot_bad = np.sum(diffs[~good] * graph.directions[~good], axis=1)
    len2_bad = lengths[~good] ** 2
    return lengths[good], dot_bad, len2_bad


def scale_objective(instance: Instance, c):
    """LUD objective along the scaling ray c -> sum_e f_e(c * true difference).

    Convex and piecewise smooth in c; vectorized over an array of c values.
    Good edges contribute max(0, 1 - c*length); bad edges the distance from
    the scaled true difference to their measured ray.
    """
    len_good, dot_bad, len2_bad = _scale_terms(instance)
    c_arr = np.asarray(c, dtype=float)
    cc = np.atleast_1d(c_arr)[:, None]
    good_part = np.sum(np.maximum(0.0, 1.0 - cc * len_good[None, :]), axis=1)
    perp_bad = np.sqrt(np.maximum(len2_bad - dot_bad**2, 0.0))
    on_ray = cc * dot_bad[None, :] > 1.0
    dist = np.sqrt(np.maximum(cc**2 * len2_bad[None, :] - 2.0 * cc * dot_bad[None, :] + 1.0, 0.0))
    bad_part = np.sum(np.where(on_ray, np.abs(cc) * perp_bad[None, :], dist), axis=1)
    total = good_part + bad_part
    return float(total[0]) if c_arr.ndim == 0 else total


def _golden_section(f, lo: float, hi: float, iters: int = 140) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if b - a < 1e-15 * max(1.0, abs(a)):
            break
    return 0.5 * (a + b)


def _bisect_level(f, target: float, lo: float, hi: float, rising: bool, iters: int = 100) -> float:
    """Smallest (rising=False) or largest (rising=True) c with f(c) <= target,
    given f monotone on [lo, hi] with exactly one crossing."""
    a, b = lo, hi
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if (f(mid) <= target) == rising:
            a = mid
        else:
            b = mid
    return a if rising else b


def oracle_scale(instance: Instance, scan_max: float = 1e3, width_tol: float = 1e-8) -> OracleScaleResult:
    """Minimize the 1-D scale objective; report the minimizing interval.

    Breakpoints of the piecewise structure (one per good edge, one per bad
    edge with positive alignment) bracket the minimum; golden-section
    refines inside the bracket, and level-set bisection on both convex
    flanks recovers the flat interval when the minimum is not unique.
    """
    f = lambda c: scale_objective(instance, float(c))
    len_good, dot_bad, _ = _scale_terms(instance)
    breaks = [1.0 / l for l in len_good if l > 0]
    breaks.extend(1.0 / d for d in dot_bad if d > 0)
    candidates = np.unique(np.clip(np.array([0.0, scan_max] + breaks), 0.0, scan_max))
    values = scale_objective(instance, candidates)
    k = int(np.argmin(values))
    lo_b = candidates[max(k - 1, 0)]
    hi_b = candidates[min(k + 1, len(candidates) - 1)]
    c_min = _golden_section(f, float(lo_b), float(hi_b))
    f_min = f(c_min)
    if values[k] < f_min:
        c_min, f_min = float(candidates[k]), float(values[k])
    slack = 1e-10 * (1.0 + abs(f_min))
    level = f_min + slack
    lo = 0.0 if f(0.0) <= level else _bisect_level(f, level, 0.0, c_min, rising=False)
    hi = scan_max if f(scan_max) <= level else _bisect_level(f, level, c_min, scan_max, rising=True)
    unique = (hi - lo) <= width_tol
    c_star = 0.5 * (lo + hi)
    return OracleScaleResult(
        c_star=c_star,
        minimizer_interval=(float(lo), float(hi)),
        unique=bool(unique),
        objective_at_c=f(c_star),
    )


def good_long_partition(instance: Instance, c_star: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """Split edges into good-and-long versus the rest at threshold 1/c_star.

    Returns (long_idx, rest_idx, epsilon_0) where epsilon_0 is the maximal
    vertex degree within the complement, divided by n.
    """
    if c_star <= 0:
        raise ValueError("c_star must be positive")
    graph = instance.graph
    gt = np.asarray(instance.ground_truth, dtype=float)
    lengths = np.linalg.norm(gt[graph.pairs[:, 0]] - gt[graph.pairs[:, 1]], axis=1)
    long_mask = graph.good & (lengths > 1.0 / c_star)
    long_idx = np.flatnonzero(long_mask)
    rest_idx = np.flatnonzero(~long_mask)
    if rest_idx.size:
        deg = np.bincount(graph.pairs[rest_idx].ravel(), minlength=graph.n)
        eps0 = float(deg.max()) / graph.n
    else:
        eps0 = 0.0
    return long_idx, rest_idx, eps0


# --- result serialization -------------------------------------------------
#
# A result file is the instance serialization followed by one block per
# method: `METHOD <name>`, `R <i> <x> <y> <z>` location rows, optional
# `A <i> <j> <alpha>` rows, and a trailer
# `OBJ <value> ITERS <k> STATUS <Converged|MaxIters>`.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dump_results(instance: Instance, results: Dict[str, SolverResult]) -> str:
    parts = [dump_instance(instance)]
    for name in sorted(results):
        res = results[name]
        lines = [f"METHOD {name}"]
        for i, point in enumerate(res.locations):
            lines.append(f"R {i} {_fmt(point[0])} {_fmt(point[1])} {_fmt(point[2])}")
        if res.alphas:
            for (i, j) in sorted(res.alphas):
                lines.append(f"A {i} {j} {_fmt(res.alphas[(i, j)])}")
        lines.append(f"OBJ {_fmt(res.objective)} ITERS {res.iterations} STATUS {res.status.value}")
        parts.append("\n".join(lines) + "\n")
    return "".join(parts)


def load_results(text: str) -> Tuple[Instance, Dict[str, SolverResult]]:
    lines = text.splitlines()
    split = next((k for k, ln in enumerate(lines) if ln.startswith("METHOD ")), len(lines))
    instance = load_instance("\n".join(lines[:split]))
    results: Dict[str, SolverResult] = {}
    name = None
    locations: Dict[int, list] = {}
    alphas: Dict[Tuple[int, int], float] = {}

    def finish(trailer: str) -> None:
        tokens = trailer.split()
        if len(tokens) != 6 or tokens[0] != "OBJ" or tokens[2] != "ITERS" or tokens[4] != "STATUS":
            raise ValueError(f"malformed trailer {trailer!r}")
        locs = np.array([locations[i] for i in range(len(locations))])
        results[name] = SolverResult(
            locations=locs,
            alphas=dict(alphas) if alphas else None,
            objective=float(tokens[1]),
            iterations=int(tokens[3]),
            status=SolverStatus(tokens[5]),
        )

    for ln in lines[split:]:
        if not ln.strip():
            continue
        tokens = ln.split()
        if tokens[0] == "METHOD":
            name = tokens[1]
            locations, alphas = {}, {}
        elif tokens[0] == "R":
            locations[int(tokens[1])] = [float(v) for v in tokens[2:5]]
        elif tokens[0] == "A":
            alphas[(int(tokens[1]), int(tokens[2]))] = float(tokens[3])
        elif tokens[0] == "OBJ":
            finish(ln)
        else:
            raise ValueError(f"unknown result record {tokens[0]!r}")
    return instance, results
