import json
import math

import numpy as np
import pytest

from stmc import core as C
from stmc import discretize as D
from stmc import models as M

TWO_PI = 2 * math.pi
P = M.ModelPoint


def circle(warp, window=(0.0, 1.0), **params):
    return M.warped(M.Spatial("circle", {"L": TWO_PI}), M.Warp(warp, params), window)


@pytest.fixture(scope="module")
def const():
    return circle("const", c=1.0)


@pytest.fixture(scope="module")
def linear():
    return circle("linear", (0.0, 1.0))


@pytest.fixture(scope="module")
def const_graph(const):
    return D.build_causal_graph(const, D.sample_grid(const, 16, 16))


class TestSampling:
    def test_counts(self, const):
        assert len(D.sample_grid(const, 4, 4)) == 16

    def test_region_filter(self):
        cone = M.minkowski(1, (0.2, 0.9), M.Region("past_of_point", {"apex": [1.0, 0.0]}))
        assert 0 < len(D.sample_grid(cone, 8, 8)) < 64

    def test_open_big_bang_slice(self, linear):
        ts = sorted({p.t for p in D.sample_grid(linear, 8, 4)})
        assert ts[0] == pytest.approx(1 / 8)
        assert ts[-1] == pytest.approx(1.0)

    def test_bad_resolution(self, const):
        with pytest.raises(ValueError):
            D.sample_grid(const, 1, 4)

    def test_jitter_is_seeded(self, const):
        a = D.sample_grid(const, 6, 6, jitter=0.5, seed=3)
        b = D.sample_grid(const, 6, 6, jitter=0.5, seed=3)
        c = D.sample_grid(const, 6, 6, jitter=0.5, seed=4)
        assert a == b and a != c


class TestGraph:
    def test_comoving_edge(self, linear):
        g = D.build_causal_graph(linear, [P(0.5, (1.0,)), P(0.75, (1.0,))], window_radius=1.0)
        assert g.src.tolist() == [0] and g.dst.tolist() == [1]
        assert g.w_null[0] == pytest.approx(0.25)
        assert g.w_proper[0] == pytest.approx(0.25)

    def test_spacelike_pair_has_no_edge(self, const):
        g = D.build_causal_graph(const, [P(0.5, (0.0,)), P(0.6, (1.0,))], window_radius=2.0)
        assert len(g.src) == 0

    def test_null_edge(self, const):
        g = D.build_causal_graph(const, [P(0.25, (0.25,)), P(0.0, (0.0,))], window_radius=1.0)
        assert g.w_null[0] == pytest.approx(0.25)
        assert g.w_proper[0] == pytest.approx(0.0, abs=1e-6)

    def test_edge_invariants(self, const_graph):
        g = const_graph
        assert np.all(M.causal_mask(g.model, g.t[g.dst], g.x[g.dst], g.t[g.src], g.x[g.src]))
        assert np.all(g.w_null >= g.w_proper) and np.all(g.w_proper >= 0)
        assert np.all(g.t[g.dst] > g.t[g.src])

    def test_json_round_trip(self, const):
        g = D.build_causal_graph(const, D.sample_grid(const, 4, 4))
        h = D.graph_from_json(json.loads(json.dumps(g.to_json())))
        assert h.to_json() == g.to_json()
        assert g.to_json()["schema"] == "cgraph-v1"

    def test_find(self, const_graph):
        i = const_graph.find(P(const_graph.t[5], tuple(const_graph.x[5])))
        assert i == 5


class TestNullDistance:
    def test_is_a_timed_metric(self, const_graph):
        assert C.validate(D.null_distance_matrix(const_graph)).ok

    def test_product_pair(self, const):
        # grid containing (0.2, 0) and (0.7, pi/2)
        g = D.build_causal_graph(const, D.sample_grid(const, 51, 128))
        i, j = g.find(P(0.2, (0.0,))), g.find(P(0.7, (math.pi / 2,)))
        d = D.null_distances_from(g, [i])[0, j]
        assert d == pytest.approx(math.pi / 2, rel=0.06)

    def test_causal_pairs_are_time_differences(self, const_graph):
        sp = D.null_distance_matrix(const_graph)
        g = const_graph
        n = g.n
        i, j = np.divmod(np.arange(n * n), n)
        causal = M.causal_mask(g.model, g.t[i], g.x[i], g.t[j], g.x[j]).reshape(n, n)
        dt = g.tau[:, None] - g.tau[None, :]
        # every analytic causal pair is a single discrete chain of causal hops
        close = np.abs(sp.dist - dt) <= 1e-12
        assert np.mean(close[causal]) > 0.95
        assert np.all(sp.dist >= np.abs(dt) - 1e-12)

    def test_disconnected(self, const):
        g = D.build_causal_graph(const, [P(0.5, (0.0,)), P(0.5, (1.0,))], window_radius=2.0)
        with pytest.raises(D.DisconnectedGraphError):
            D.null_distance_matrix(g)

    def test_single_hops_suffice(self, const):
        # 12 nodes, every causal pair an edge; compare with all alternating chains of <= 6 hops
        small = M.warped(M.Spatial("circle", {"L": 1.0}), M.Warp("const"))
        g = D.build_causal_graph(small, D.sample_grid(small, 4, 3), window_radius=10.0)
        n = g.n
        i, j = np.divmod(np.arange(n * n), n)
        R = M.causal_mask(small, g.t[i], g.x[i], g.t[j], g.x[j]).reshape(n, n)
        hop = R | R.T
        cost = np.abs(g.tau[:, None] - g.tau[None, :])
        best = np.full((n, n), np.inf)
        np.fill_diagonal(best, 0.0)
        for a in range(n):
            frontier = {a: 0.0}
            for _ in range(6):
                nxt = {}
                for u, c in frontier.items():
                    for v in np.flatnonzero(hop[u]):
                        val = c + cost[u, v]
                        if val < nxt.get(v, np.inf):
                            nxt[v] = val
                for v, c in nxt.items():
                    best[a, v] = min(best[a, v], c)
                frontier = nxt
        np.testing.assert_allclose(D.null_distance_matrix(g).dist, best, atol=1e-12)

    def test_refinement_never_increases(self, const):
        coarse = D.build_causal_graph(const, D.sample_grid(const, 9, 8))
        fine = D.build_causal_graph(const, D.sample_grid(const, 17, 16))
        dc = D.null_distance_matrix(coarse).dist
        idx = [fine.find(P(coarse.t[k], tuple(coarse.x[k]))) for k in range(coarse.n)]
        df = D.null_distances_from(fine, idx)[:, idx]
        assert np.all(df <= dc + 1e-12)


class TestCosmologicalTime:
    def test_product_under_approximates(self, const_graph):
        th = D.cosmological_time(const_graph)
        assert np.all(th <= const_graph.tau + 1e-12)
        assert np.all(th[const_graph.t == 0] == 0)

    def test_linear_comoving_chain_exact(self, linear):
        g = D.build_causal_graph(linear, D.sample_grid(linear, 8, 8))
        th = D.cosmological_time(g)
        np.testing.assert_allclose(th, g.tau - g.tau.min(), atol=1e-12)

    def test_monotone_along_edges(self, const_graph):
        th = D.cosmological_time(const_graph)
        g = const_graph
        assert np.all(th[g.dst] >= th[g.src] + g.w_proper - 1e-12)


class TestGenerator:
    def test_comoving_column(self, const_graph):
        g = const_graph
        top = int(np.flatnonzero(g.t == g.t.max())[3])
        chain = D.generator(g, top)
        assert np.allclose(g.x[chain], g.x[top])
        assert g.t[chain[-1]] == 0

    def test_minimal_node(self, const_graph):
        bottom = int(np.flatnonzero(const_graph.t == 0)[0])
        assert D.generator(const_graph, bottom) == [bottom]

    def test_linear_stays_at_angle(self, linear):
        g = D.build_causal_graph(linear, D.sample_grid(linear, 10, 12))
        top = int(np.flatnonzero(g.t == g.t.max())[5])
        th = D.cosmological_time(g)
        chain = D.generator(g, top, th)
        assert np.allclose(g.x[chain], g.x[top])
        # tau_hat drops by the proper weight of each edge and totals tau_hat(start)
        drops = -np.diff(th[chain])
        assert drops.sum() == pytest.approx(th[top])
        assert np.all(drops > 0)


class TestStrip:
    def test_full_range_matches_ambient(self, const_graph):
        full = D.strip_null_distance(const_graph, 0.0, 1.0)
        np.testing.assert_array_equal(full.dist, D.null_distance_matrix(const_graph).dist)

    def test_dominates_ambient(self, linear):
        g = D.build_causal_graph(linear, D.sample_grid(linear, 16, 16))
        st = D.strip_null_distance(g, 0.5, 0.9)
        amb = C.restrict_strip(D.null_distance_matrix(g), 0.5, 0.9)
        assert st.point_ids == amb.point_ids
        assert np.all(st.dist >= amb.dist - 1e-12)
        assert np.any(st.dist > amb.dist + 1e-6)
        np.testing.assert_allclose(st.tau, amb.tau)

    def test_empty(self, const_graph):
        with pytest.raises(C.StructureError):
            D.strip_null_distance(const_graph, 0.01, 0.02)


class TestAugmentation:
    def test_linear_grid(self, linear):
        sp = D.null_distance_matrix(D.build_causal_graph(linear, D.sample_grid(linear, 32, 32)))
        aug = D.augment_big_bang(sp)
        assert aug.basepoint == "p_BB"
        assert C.validate(aug).ok
        b = aug.basepoint_index
        np.testing.assert_allclose(aug.dist[b], aug.tau)
        assert not aug.meta["big_bang"]["flagged"]

    def test_const_grid_is_flagged(self, const):
        m = M.warped(M.Spatial("circle", {"L": 1.0}), M.Warp("const"), (0.1, 1.0))
        sp = D.null_distance_matrix(D.build_causal_graph(m, D.sample_grid(m, 6, 6)))
        sp = C.TimedMetricSpace(sp.point_ids, sp.tau + 0.1, sp.dist)
        aug = D.augment_big_bang(sp)
        assert aug.meta["big_bang"]["flagged"]

    def test_single_point(self):
        aug = D.augment_big_bang(C.from_arrays([0.4], [[0.0]]))
        assert aug.dist[0, 1] == pytest.approx(0.4)

    def test_rejects_zero_time(self):
        with pytest.raises(D.AugmentationError):
            D.augment_big_bang(C.from_arrays([0.0, 1.0], [[0, 1], [1, 0]]))

    def test_without_closing_paths(self):
        # 0.5 + 0.5 < 3: keeping d = 3 breaks the triangle through p_BB
        sp = C.from_arrays([0.5, 0.5], [[0, 3], [3, 0]])
        with pytest.raises(D.AugmentationError):
            D.augment_big_bang(sp, close_paths=False)
        assert D.augment_big_bang(sp).dist[0, 1] == pytest.approx(1.0)


class TestInitialSet:
    def test_const_grid(self, const_graph):
        sp = D.mark_initial_set(D.null_distance_matrix(const_graph))
        assert len(sp.initial_set) == 16
        assert sp.meta["initial_data"]["worst_residual"] == pytest.approx(0.0, abs=1e-12)
        assert C.validate(sp).ok

    def test_big_bang_space(self):
        aug = D.augment_big_bang(C.from_arrays([0.4, 0.6], [[0, 0.5], [0.5, 0]]))
        assert D.mark_initial_set(aug).initial_set == ("p_BB",)

    def test_strip_bottom(self, const_graph):
        st = D.strip_null_distance(const_graph, 0.2, 0.8)
        marked = D.mark_initial_set(st)
        idx = marked.initial_indices
        assert np.all(marked.tau[idx] == 0)
        assert len(idx) == np.sum(marked.tau == 0)

    def test_no_candidates(self):
        with pytest.raises(C.StructureError):
            D.mark_initial_set(C.from_arrays([0.4], [[0.0]]))

