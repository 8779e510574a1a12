import numpy as np
import pytest

from ludrec.conditions import (
    Verdict,
    direction_constraint_matrix,
    henneberg_certificate,
    parallel_rigidity,
)
from ludrec.viewgraph import (
    DisconnectedGraphError,
    HlvParams,
    ViewGraph,
    generate_instance,
    true_directions,
)


def _graph_from(locs, pair_list):
    pairs = np.asarray(pair_list, dtype=np.int64)
    locs = np.asarray(locs, dtype=float)
    dirs = true_directions(locs, pairs)
    return ViewGraph(len(locs), pairs, dirs, np.ones(len(pairs), dtype=bool))


def _nullity(graph):
    mat = direction_constraint_matrix(graph.pairs, graph.directions, graph.n)
    svals = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(svals > 1e-10 * svals[0]))
    return 3 * graph.n - rank


class TestFixtures:
    def test_single_edge_rigid(self, rng):
        g = _graph_from(rng.normal(size=(2, 3)), [(0, 1)])
        rep = parallel_rigidity(g)
        assert rep.verdict is Verdict.PASS
        assert rep.constants["nullity"] == 4.0  # 6 dof minus 2 constraint rows

    def test_path_not_rigid(self, rng):
        g = _graph_from(rng.normal(size=(3, 3)), [(0, 1), (1, 2)])
        rep = parallel_rigidity(g)
        assert rep.verdict is Verdict.FAIL
        assert rep.constants["nullity"] == 5.0  # 9 - 4

    def test_triangle_rigid_with_cycle_dependency(self, rng):
        g = _graph_from(rng.normal(size=(3, 3)), [(0, 1), (0, 2), (1, 2)])
        rep = parallel_rigidity(g)
        assert rep.verdict is Verdict.PASS
        # 6 rows but rank 5: cycle closure spends one row
        assert rep.constants["rank"] == 5.0

    def test_triangle_rigid_many_draws(self, rng):
        for _ in range(1000):
            g = _graph_from(rng.normal(size=(3, 3)), [(0, 1), (0, 2), (1, 2)])
            assert parallel_rigidity(g, certificate=False).verdict is Verdict.PASS


class TestConstraintMatrix:
    def test_shape_and_row_orthogonality(self, rng):
        inst = generate_instance(HlvParams(n=8, p=0.7, seed=2))
        g = inst.graph
        mat = direction_constraint_matrix(g.pairs, g.directions, g.n)
        assert mat.shape == (2 * g.m, 3 * g.n)
        # each row's i-block is orthogonal to the edge direction
        for e, (i, _) in enumerate(g.pairs):
            for r in (2 * e, 2 * e + 1):
                block = mat[r, 3 * i:3 * i + 3]
                assert abs(np.dot(block, g.directions[e])) < 1e-12
                assert np.linalg.norm(block) == pytest.approx(1.0)

    def test_true_locations_in_kernel(self, rng):
        inst = generate_instance(HlvParams(n=10, p=0.6, seed=4))
        g = inst.graph
        mat = direction_constraint_matrix(g.pairs, g.directions, g.n)
        flat = inst.ground_truth.reshape(-1)
        assert np.max(np.abs(mat @ flat)) < 1e-9

    def test_zero_direction_rejected(self, rng):
        locs = rng.normal(size=(2, 3))
        pairs = np.array([[0, 1]])
        dirs = np.zeros((1, 3))
        with pytest.raises(ValueError):
            ViewGraph(2, pairs, dirs, np.ones(1, dtype=bool))


class TestMonotonicity:
    def test_rank_grows_nullity_shrinks_along_chains(self, rng):
        # randomized chains: add edges one at a time, 10^3+ comparisons
        checks = 0
        while checks < 1000:
            n = int(rng.integers(4, 8))
            locs = rng.normal(size=(n, 3))
            iu, ju = np.triu_indices(n, k=1)
            order = rng.permutation(len(iu))
            edges = []
            prev_rank, prev_null = 0, 3 * n
            for e in order:
                edges.append((int(iu[e]), int(ju[e])))
                pairs = np.asarray(sorted(edges), dtype=np.int64)
                g = ViewGraph(n, pairs, true_directions(locs, pairs),
                              np.ones(len(pairs), dtype=bool))
                mat = direction_constraint_matrix(g.pairs, g.directions, g.n)
                svals = np.linalg.svd(mat, compute_uv=False)
                rank = int(np.sum(svals > 1e-10 * svals[0]))
                nullity = 3 * n - rank
                assert rank >= prev_rank
                assert nullity <= prev_null
                prev_rank, prev_null = rank, nullity
                checks += 1

    def test_hlv_graphs_rigid(self):
        for seed in range(20):
            inst = generate_instance(HlvParams(n=15, p=0.6, seed=seed))
            rep = parallel_rigidity(inst.graph, certificate=False)
            assert rep.verdict is Verdict.PASS


class TestGenericLocations:
    def test_corrupted_directions_vs_generic(self):
        from ludrec.viewgraph import EdgeFraction, corrupt

        inst = generate_instance(HlvParams(n=12, p=0.7, seed=6))
        bad = corrupt(inst, EdgeFraction(0.4), np.random.default_rng(1))
        # measured directions are inconsistent: the scale kernel vector is
        # destroyed, so the nullity drops below 4 and the verdict is Fail
        measured = parallel_rigidity(bad.graph, certificate=False)
        assert measured.constants["nullity"] <= 4.0
        # the generic test derives directions from locations and ignores labels
        generic = parallel_rigidity(bad.graph, locations=bad.ground_truth, certificate=False)
        assert generic.verdict is Verdict.PASS


class TestHenneberg:
    def test_triangle_certificate_completes(self, rng):
        g = _graph_from(rng.normal(size=(3, 3)), [(0, 1), (0, 2), (1, 2)])
        cert = henneberg_certificate(g)
        assert cert.complete
        assert len(cert.steps) == 1

    def test_path_certificate_incomplete(self, rng):
        g = _graph_from(rng.normal(size=(4, 3)), [(0, 1), (1, 2), (2, 3)])
        cert = henneberg_certificate(g)
        assert not cert.complete

    def test_certificate_agrees_with_rank_on_hlv(self):
        agree = 0
        for seed in range(15):
            inst = generate_instance(HlvParams(n=10, p=0.8, seed=seed))
            rep = parallel_rigidity(inst.graph, certificate=False)
            cert = henneberg_certificate(inst.graph)
            if cert.complete:
                # completeness is sufficient for rigidity, never contradicts
                assert rep.verdict is Verdict.PASS
                agree += 1
        assert agree > 0


def test_no_edges_rejected():
    g = ViewGraph(3, np.empty((0, 2), dtype=np.int64), np.empty((0, 3)),
                  np.empty(0, dtype=bool))
    with pytest.raises(ValueError):
        parallel_rigidity(g)
