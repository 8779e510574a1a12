"""Batch corruption and noise sweeps with deterministic seeding.

A sweep runs every (grid value, seed, method) combination of its spec,
generating one model instance per (value, seed) cell and solving it with
each requested method. Per-trial RNG seeds are derived from the master seed
by a splitmix64 mix of the grid index and seed index, so appending grid
points or seeds never disturbs existing trials. Trials are independent and
may run in a process pool; results are sorted canonically afterwards, so
the output is a pure function of the spec (wall times excepted).
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import nrmse
from .solvers import SolverParams, solve_lud, solve_shapefit
from .viewgraph import (
    DisconnectedGraphError,
    EdgeFraction,
    HlvParams,
    generate_instance,
)

__all__ = [
    "Axis",
    "SweepSpec",
    "TrialRecord",
    "SummaryRow",
    "splitmix64",
    "trial_seed",
    "run_trial",
    "run_sweep",
    "summarize",
    "records_csv",
    "summary_csv",
]

_MASK = (1 << 64) - 1

TRIALS_HEADER = "method,axis,axis_value,seed,nrmse,objective,iterations,status,wall_time_ms"
SUMMARY_HEADER = "method,axis_value,nrmse_median,nrmse_mean,nrmse_min,nrmse_max,converged_frac"

METHODS = ("lud", "shapefit")


class Axis(Enum):
    CORRUPTION_FRACTION = "CorruptionFraction"
    NOISE_SIGMA = "NoiseSigma"


@dataclass(frozen=True)
class SweepSpec:
    n: int
    p: float
    axis: Axis
    grid: Tuple[float, ...]
    seeds: int = 10
    methods: Tuple[str, ...] = METHODS
    solver_params: SolverParams = field(default_factory=SolverParams)
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ValueError("grid must be nonempty")
        if any(not 0.0 <= v <= 1.0 for v in grid):
            raise ValueError("grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        methods = tuple(self.methods)
        if not methods or any(m not in METHODS for m in methods):
            raise ValueError(f"methods must be a nonempty subset of {METHODS}")
        object.__setattr__(self, "methods", methods)
        if not 0 <= self.master_seed <= _MASK:
            raise ValueError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class TrialRecord:
    method: str
    axis: Axis
    axis_value: float
    seed: int
    nrmse: float
    objective: float
    iterations: int
    status: str
    wall_time_ms: int


@dataclass(frozen=True)
class SummaryRow:
    method: str
    axis_value: float
    nrmse_median: float
    nrmse_mean: float
    nrmse_min: float
    nrmse_max: float
    converged_frac: float


def splitmix64(x: int) -> int:
    """One splitmix64 output step; the standard constants."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def trial_seed(master_seed: int, axis_index: int, seed_index: int) -> int:
    """Per-trial seed; mixing keeps distinct cells decorrelated while the
    master seed shifts everything at once."""
    return (master_seed ^ splitmix64(((axis_index + 1) << 32) | seed_index)) & _MASK


def _axis_index(spec: SweepSpec, axis_value: float) -> int:
    for k, v in enumerate(spec.grid):
        if v == axis_value:
            return k
    raise ValueError(f"axis value {axis_value!r} is not on the grid")


def _cell_params(spec: SweepSpec, axis_value: float, seed_index: int) -> HlvParams:
    seed = trial_seed(spec.master_seed, _axis_index(spec, axis_value), seed_index)
    if spec.axis is Axis.CORRUPTION_FRACTION:
        return HlvParams(n=spec.n, p=spec.p, corruption=EdgeFraction(axis_value),
                         noise_sigma=0.0, seed=seed)
    return HlvParams(n=spec.n, p=spec.p, corruption=EdgeFraction(0.0),
                     noise_sigma=axis_value, seed=seed)


_SOLVERS = {"lud": solve_lud, "shapefit": solve_shapefit}


def run_trial(spec: SweepSpec, axis_value: float, seed_index: int) -> List[TrialRecord]:
    """One generated instance, solved with every requested method.

    Disconnected samples (possible at low p) yield Skipped records with NaN
    scores rather than an exception, so sweeps always complete.
    """
    params = _cell_params(spec, axis_value, seed_index)
    instance = generate_instance(params)
    records = []
    for method in spec.methods:
        start = time.perf_counter()
        try:
            result = _SOLVERS[method](instance.graph, spec.solver_params)
        except DisconnectedGraphError:
            wall = int(round(1000.0 * (time.perf_counter() - start)))
            records.append(TrialRecord(method, spec.axis, axis_value, seed_index,
                                       math.nan, math.nan, 0, "Skipped", wall))
            continue
        wall = int(round(1000.0 * (time.perf_counter() - start)))
        score = nrmse(result.locations, instance.ground_truth)
        records.append(TrialRecord(method, spec.axis, axis_value, seed_index,
                                   score, result.objective, result.iterations,
                                   result.status.value, wall))
    return records


def _run_cell(args: Tuple[SweepSpec, float, int]) -> List[TrialRecord]:
    return run_trial(*args)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> List[TrialRecord]:
    """All grid x seeds x methods trials, canonically ordered."""
    cells = [(spec, value, s) for value in spec.grid for s in range(spec.seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = [_run_cell(cell) for cell in cells]
    records = [rec for chunk in chunks for rec in chunk]
    order = {v: k for k, v in enumerate(spec.grid)}
    records.sort(key=lambda r: (order[r.axis_value], r.seed, r.method))
    return records


def summarize(records: Sequence[TrialRecord]) -> List[SummaryRow]:
    """Per (axis value, method) NRMSE statistics; skipped trials count
    against the convergence rate but not the NRMSE stats."""
    if not records:
        raise ValueError("no records to summarize")
    groups: Dict[Tuple[float, str], List[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.axis_value, rec.method), []).append(rec)
    rows = []
    for (value, method) in sorted(groups):
        recs = groups[(value, method)]
        scores = np.array([r.nrmse for r in recs])
        scores = scores[~np.isnan(scores)]
        if scores.size:
            stats = (float(np.median(scores)), float(scores.mean()),
                     float(scores.min()), float(scores.max()))
        else:
            stats = (math.nan,) * 4
        converged = sum(1 for r in recs if r.status == "Converged")
        rows.append(SummaryRow(method, value, *stats, converged / len(recs)))
    return rows


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def records_csv(records: Sequence[TrialRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRIALS_HEADER.split(","))
    for r in records:
        writer.writerow([r.method, r.axis.value, _fmt(r.axis_value), r.seed,
                         _fmt(r.nrmse), _fmt(r.objective), r.iterations,
                         r.status, r.wall_time_ms])
    return out.getvalue()


def summary_csv(rows: Sequence[SummaryRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER.split(","))
    for r in rows:
        writer.writerow([r.method, _fmt(r.axis_value), _fmt(r.nrmse_median),
                         _fmt(r.nrmse_mean), _fmt(r.nrmse_min), _fmt(r.nrmse_max),
                         _fmt(r.converged_frac)])
    return out.getvalue()
