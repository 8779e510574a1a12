"""Direction-labeled measurement graphs and the synthetic corruption model.

An :class:`Instance` bundles ground-truth locations with a graph whose
edges carry unit direction measurements. Good edges point along the true
pairwise direction (optionally noised); bad edges carry adversarial
replacements drawn uniformly on the sphere unless a custom callback is
supplied.

Randomness is organized around one master 64-bit seed. Each pipeline stage
(locations, graph, corruption, noise) draws from its own derived stream, so
changing the noise level never perturbs the sampled graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import as_locations

__all__ = [
    "UNIT_TOL",
    "STREAM_LOCATIONS",
    "STREAM_GRAPH",
    "STREAM_CORRUPTION",
    "STREAM_NOISE",
    "DisconnectedGraphError",
    "EdgeFraction",
    "MaxDegreeBound",
    "HlvParams",
    "Edge",
    "ViewGraph",
    "Instance",
    "rng_stream",
    "uniform_sphere",
    "sample_locations",
    "sample_graph",
    "true_directions",
    "generate_instance",
    "corrupt",
    "add_noise",
    "corruption_level",
    "dump_instance",
    "load_instance",
]

UNIT_TOL = 1e-12

# Fixed per-purpose stream ids; part of the on-disk reproducibility contract.
STREAM_LOCATIONS, STREAM_GRAPH, STREAM_CORRUPTION, STREAM_NOISE = range(4)


class DisconnectedGraphError(ValueError):
    """Raised when an operation requires a connected measurement graph."""


def rng_stream(master_seed: int, purpose: int) -> np.random.Generator:
    """Independent generator for one pipeline stage of one master seed."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(purpose,)))


@dataclass(frozen=True)
class EdgeFraction:
    """Corrupt a uniformly random floor(q * |E|) subset of the edges."""

    q: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"corrupted edge fraction must be in [0, 1], got {self.q}")


@dataclass(frozen=True)
class MaxDegreeBound:
    """Corrupt greedily, capping every vertex's bad degree at floor(eps_b * n)."""

    epsilon_b: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon_b <= 1.0:
            raise ValueError(f"corruption level must be in [0, 1], got {self.epsilon_b}")


CorruptionMode = Union[EdgeFraction, MaxDegreeBound]


@dataclass(frozen=True)
class HlvParams:
    """Generator parameters: Gaussian locations, G(n, p) edges, corruption, noise.

    ``corruption`` may be None for instances loaded from disk, where the
    good/bad labels are known but the mode that produced them is not; the
    generator treats None as "no corruption step".
    """

    n: int
    p: float
    corruption: Optional[CorruptionMode] = EdgeFraction(0.0)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least 2 vertices, got {self.n}")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"edge probability must be in (0, 1], got {self.p}")
        if not 0.0 <= self.noise_sigma <= 1.0:
            raise ValueError(f"noise level must be in [0, 1], got {self.noise_sigma}")
        if self.corruption is not None and not isinstance(
            self.corruption, (EdgeFraction, MaxDegreeBound)
        ):
            raise TypeError("corruption must be EdgeFraction, MaxDegreeBound, or None")


@dataclass(frozen=True)
class Edge:
    """One measurement: unit direction from vertex j toward vertex i (i < j)."""

    i: int
    j: int
    direction: np.ndarray
    good: bool


class ViewGraph:
    """Undirected graph over [n] with a unit direction per edge.

    Edges are stored canonically with i < j; the direction for the reversed
    orientation is the negation, which only :meth:`direction` applies. All
    consumers must read through that accessor rather than index raw arrays
    when orientation matters.
    """

    def __init__(self, n: int, pairs, directions, good) -> None:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        directions = np.asarray(directions, dtype=float).reshape(-1, 3)
        good = np.asarray(good, dtype=bool).reshape(-1)
        m = pairs.shape[0]
        if directions.shape[0] != m or good.shape[0] != m:
            raise ValueError("pairs, directions, and labels must have equal length")
        if n < 2:
            raise ValueError(f"need at least 2 vertices, got {n}")
        if m:
            if pairs.min() < 0 or pairs.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(pairs[:, 0] >= pairs[:, 1]):
                raise ValueError("edges must be stored with i < j")
            keys = pairs[:, 0] * n + pairs[:, 1]
            if np.unique(keys).size != m:
                raise ValueError("duplicate edges")
            norms = np.linalg.norm(directions, axis=1)
            if np.any(np.abs(norms - 1.0) > UNIT_TOL):
                worst = int(np.argmax(np.abs(norms - 1.0)))
                raise ValueError(
                    f"direction on edge {tuple(pairs[worst])} is not unit "
                    f"(norm {norms[worst]!r})"
                )
        self.n = int(n)
        self.pairs = pairs
        self.directions = directions
        self.good = good
        for arr in (self.pairs, self.directions, self.good):
            arr.setflags(write=False)
        self._edge_lookup = {(int(i), int(j)): e for e, (i, j) in enumerate(pairs)}

    @property
    def m(self) -> int:
        return self.pairs.shape[0]

    def __len__(self) -> int:
        return self.m

    def edges(self) -> Iterator[Edge]:
        for e in range(self.m):
            i, j = self.pairs[e]
            yield Edge(int(i), int(j), self.directions[e], bool(self.good[e]))

    def edge_index(self, i: int, j: int) -> int:
        """Storage index of the unordered pair {i, j}; KeyError if absent."""
        return self._edge_lookup[(i, j) if i < j else (j, i)]

    def has_edge(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        return key in self._edge_lookup

    def direction(self, i: int, j: int) -> np.ndarray:
        """Measured direction oriented from j toward i, for either vertex order."""
        e = self.edge_index(i, j)
        if i < j:
            return self.directions[e].copy()
        return -self.directions[e]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.pairs.ravel(), minlength=self.n)

    def bad_degrees(self) -> np.ndarray:
        return np.bincount(self.pairs[~self.good].ravel(), minlength=self.n)

    def adjacency(self) -> np.ndarray:
        """Dense boolean adjacency matrix."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        adj[self.pairs[:, 0], self.pairs[:, 1]] = True
        adj[self.pairs[:, 1], self.pairs[:, 0]] = True
        return adj

    def is_connected(self) -> bool:
        if self.m == 0:
            return self.n == 1
        ones = np.ones(self.m)
        graph = coo_matrix((ones, (self.pairs[:, 0], self.pairs[:, 1])), shape=(self.n, self.n))
        n_comp, _ = connected_components(graph, directed=False)
        return n_comp == 1

    def require_connected(self) -> None:
        if not self.is_connected():
            raise DisconnectedGraphError("measurement graph is not connected")

    def with_directions(self, directions, good) -> "ViewGraph":
        """Same topology, new measurements."""
        return ViewGraph(self.n, self.pairs, directions, good)


@dataclass(frozen=True)
class Instance:
    """Ground-truth locations plus the measured graph that was built on them."""

    ground_truth: np.ndarray
    graph: ViewGraph
    params: Optional[HlvParams] = None


def uniform_sphere(rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Uniform draws on the unit sphere via normalized Gaussians."""
    count = 1 if size is None else int(size)
    out = np.empty((count, 3))
    need = np.ones(count, dtype=bool)
    while need.any():
        draws = rng.standard_normal((int(need.sum()), 3))
        norms = np.linalg.norm(draws, axis=1)
        ok = norms > 1e-12
        idx = np.flatnonzero(need)[ok]
        out[idx] = draws[ok] / norms[ok, None]
        need[idx] = False
    return out[0] if size is None else out


def sample_locations(n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. standard-Gaussian points in 3-space."""
    if n < 2:
        raise ValueError(f"need at least 2 locations, got {n}")
    return rng.standard_normal((n, 3))


def sample_graph(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Erdos-Renyi G(n, p) edge list as an (m, 2) array with i < j rows."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"edge probability must be in (0, 1], got {p}")
    iu, ju = np.triu_indices(n, k=1)
    # One draw per pair in a fixed order keeps the edge set a pure
    # function of the stream state.
    keep = rng.random(iu.shape[0]) < p
    return np.column_stack([iu[keep], ju[keep]]).astype(np.int64)


def true_directions(locations, pairs) -> np.ndarray:
    """Ground-truth unit directions for each (i, j) row: (t_i - t_j)/||.||."""
    locs = as_locations(locations)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    diffs = locs[pairs[:, 0]] - locs[pairs[:, 1]]
    norms = np.linalg.norm(diffs, axis=1)
    if np.any(norms < 1e-14):
        raise ValueError("coincident ground-truth points: direction undefined")
    return diffs / norms[:, None]


def corrupt(
    instance: Instance,
    mode: CorruptionMode,
    rng: np.random.Generator,
    direction_fn: Optional[Callable[[np.random.Generator, int, int, np.ndarray], np.ndarray]] = None,
) -> Instance:
    """Replace a subset of edge directions with adversarial ones.

    EdgeFraction picks floor(q*|E|) edges uniformly; MaxDegreeBound walks a
    random edge permutation greedily, rejecting any edge that would push a
    vertex's bad degree above floor(eps_b * n). The replacement direction
    comes from ``direction_fn`` (default: uniform on the sphere).
    """
    graph = instance.graph
    m = graph.m

    if isinstance(mode, EdgeFraction):
        count = int(math.floor(mode.q * m))
        selected = np.sort(rng.choice(m, size=count, replace=False)) if count else np.empty(0, np.int64)
    elif isinstance(mode, MaxDegreeBound):
        budget = int(math.floor(mode.epsilon_b * graph.n))
        if mode.epsilon_b > 0.0 and budget == 0:
            raise ValueError(
                f"infeasible bound: eps_b={mode.epsilon_b} allows no bad edge at n={graph.n}"
            )
        bad_deg = np.zeros(graph.n, dtype=np.int64)
        chosen = []
        for e in rng.permutation(m):
            i, j = graph.pairs[e]
            if bad_deg[i] < budget and bad_deg[j] < budget:
                bad_deg[i] += 1
                bad_deg[j] += 1
                chosen.append(int(e))
        selected = np.sort(np.asarray(chosen, dtype=np.int64))
    else:
        raise TypeError("corruption mode must be EdgeFraction or MaxDegreeBound")

    if selected.size == 0:
        return instance

    directions = graph.directions.copy()
    good = graph.good.copy()
    for e in selected:
        i, j = (int(v) for v in graph.pairs[e])
        if direction_fn is None:
            new_dir = uniform_sphere(rng)
        else:
            new_dir = np.asarray(direction_fn(rng, i, j, directions[e]), dtype=float)
            if abs(np.linalg.norm(new_dir) - 1.0) > UNIT_TOL:
                raise ValueError("direction_fn must return a unit vector")
        directions[e] = new_dir
        good[e] = False
    return Instance(instance.ground_truth, graph.with_directions(directions, good), instance.params)


def add_noise(instance: Instance, sigma: float, rng: np.random.Generator) -> Instance:
    """Perturb good directions: gamma -> (gamma + sigma*v)/||gamma + sigma*v||.

    v is uniform on the sphere, one draw per good edge; bad edges are
    already arbitrary and keep their directions. Draws whose perturbed sum
    nearly cancels (possible only at sigma close to 1) are resampled.
    """
    if sigma < 0.0:
        raise ValueError(f"noise level must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return instance
    graph = instance.graph
    good_idx = np.flatnonzero(graph.good)
    if good_idx.size == 0:
        return instance
    directions = graph.directions.copy()
    pending = good_idx.copy()
    while pending.size:
        v = uniform_sphere(rng, size=pending.size)
        perturbed = graph.directions[pending] + sigma * v
        norms = np.linalg.norm(perturbed, axis=1)
        ok = norms >= 1e-12
        directions[pending[ok]] = perturbed[ok] / norms[ok, None]
        pending = pending[~ok]
    return Instance(instance.ground_truth, graph.with_directions(directions, graph.good), instance.params)


def corruption_level(graph: ViewGraph) -> float:
    """Maximal bad-edge degree over vertices, divided by n."""
    bad = graph.bad_degrees()
    return float(bad.max()) / graph.n if bad.size else 0.0


def generate_instance(params: HlvParams) -> Instance:
    """Full pipeline: locations, graph, true directions, corruption, noise.

    Deterministic function of ``params`` including the seed; each stage
    draws from its own derived stream.
    """
    locs = sample_locations(params.n, rng_stream(params.seed, STREAM_LOCATIONS))
    pairs = sample_graph(params.n, params.p, rng_stream(params.seed, STREAM_GRAPH))
    dirs = true_directions(locs, pairs) if pairs.shape[0] else np.empty((0, 3))
    graph = ViewGraph(params.n, pairs, dirs, np.ones(pairs.shape[0], dtype=bool))
    inst = Instance(locs, graph, params)
    if params.corruption is not None:
        inst = corrupt(inst, params.corruption, rng_stream(params.seed, STREAM_CORRUPTION))
    if params.noise_sigma > 0.0:
        inst = add_noise(inst, params.noise_sigma, rng_stream(params.seed, STREAM_NOISE))
    return inst


# --- plain-text serialization -------------------------------------------------
#
# Header line:  n=<n> p=<p> sigma=<sigma> seed=<seed>
# Vertex lines: V <i> <x> <y> <z>
# Edge lines:   E <i> <j> <gx> <gy> <gz> <G|B>
#
# Floats use 17 significant digits, which round-trips float64 exactly.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dump_instance(instance: Instance) -> str:
    params = instance.params
    p = params.p if params is not None else 0.0
    sigma = params.noise_sigma if params is not None else 0.0
    seed = params.seed if params is not None else 0
    graph = instance.graph
    lines = [f"n={graph.n} p={_fmt(p)} sigma={_fmt(sigma)} seed={seed}"]
    for i, point in enumerate(instance.ground_truth):
        lines.append(f"V {i} {_fmt(point[0])} {_fmt(point[1])} {_fmt(point[2])}")
    for e in range(graph.m):
        i, j = graph.pairs[e]
        g = graph.directions[e]
        label = "G" if graph.good[e] else "B"
        lines.append(f"E {i} {j} {_fmt(g[0])} {_fmt(g[1])} {_fmt(g[2])} {label}")
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> dict:
    fields = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep or key not in ("n", "p", "sigma", "seed"):
            raise ValueError(f"malformed header token {token!r}")
        fields[key] = value
    missing = {"n", "p", "sigma", "seed"} - fields.keys()
    if missing:
        raise ValueError(f"header missing {sorted(missing)}")
    return fields


def load_instance(text: str) -> Instance:
    """Parse the plain-text format produced by :func:`dump_instance`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty instance file")
    header = _parse_header(lines[0])
    n = int(header["n"])
    points = np.full((n, 3), np.nan)
    pairs, dirs, good = [], [], []
    for ln in lines[1:]:
        tokens = ln.split()
        if tokens[0] == "V":
            if len(tokens) != 5:
                raise ValueError(f"malformed vertex line {ln!r}")
            idx = int(tokens[1])
            points[idx] = [float(t) for t in tokens[2:5]]
        elif tokens[0] == "E":
            if len(tokens) != 7 or tokens[6] not in ("G", "B"):
                raise ValueError(f"malformed edge line {ln!r}")
            pairs.append((int(tokens[1]), int(tokens[2])))
            dirs.append([float(t) for t in tokens[3:6]])
            good.append(tokens[6] == "G")
        else:
            raise ValueError(f"unknown record {tokens[0]!r}")
    if np.isnan(points).any():
        raise ValueError("missing vertex records")
    graph = ViewGraph(
        n,
        np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
        np.asarray(dirs, dtype=float).reshape(-1, 3),
        np.asarray(good, dtype=bool),
    )
    p = float(header["p"])
    if 0.0 < p <= 1.0:
        params: Optional[HlvParams] = HlvParams(
            n=n,
            p=p,
            corruption=None,
            noise_sigma=float(header["sigma"]),
            seed=int(header["seed"]),
        )
    else:
        # Sentinel header (p=0) from instances built by hand rather than
        # by the generator; keep them loadable.
        params = None
    return Instance(points, graph, params)
