import math

import numpy as np
import pytest
from scipy import stats

from sparseclt.wgraph import (
    EdgeEnv,
    WeightDist,
    WeightedGraph,
    ball_stats,
    compact,
    delete_vertices,
    draw_edge_env,
    kn_lambda_p,
    neighborhood,
    resample_edge,
    sample_complete_scaled_exp,
    sample_er_graph,
    sample_kn_lambda,
)

from conftest import star


class TestWeightedGraph:
    def test_canonical_order(self):
        g = WeightedGraph(4, [3, 1, 2], [0, 0, 1], [1.0, 2.0, 3.0])
        assert g.u.tolist() == [0, 0, 1]
        assert g.v.tolist() == [1, 3, 2]
        assert g.w.tolist() == [2.0, 1.0, 3.0]

    @pytest.mark.parametrize(
        "u,v,w",
        [([0], [0], [1.0]), ([0], [5], [1.0]), ([0], [1], [-1.0]), ([0, 1], [1, 0], [1.0, 2.0]), ([0], [1], [np.inf])],
    )
    def test_rejects_bad_edges(self, u, v, w):
        with pytest.raises(ValueError):
            WeightedGraph(3, u, v, w)

    def test_arrays_read_only(self, triangle):
        with pytest.raises(ValueError):
            triangle.w[0] = 9.0

    def test_lookup(self, triangle):
        assert triangle.weight(2, 0) == 3.0
        assert triangle.has_edge(1, 2) and not WeightedGraph.empty(3).has_edge(1, 2)
        assert sorted(triangle.neighbors(1).tolist()) == [0, 2]
        assert triangle.degree().tolist() == [2, 2, 2]

    def test_text_round_trip(self):
        g = sample_er_graph(30, 0.2, WeightDist.exp1(), 4)
        h = WeightedGraph.from_text(g.to_text())
        assert h.n == g.n and np.array_equal(h.u, g.u) and np.array_equal(h.w, g.w)

    def test_text_round_trip_keeps_deleted_vertices(self):
        g = delete_vertices(sample_er_graph(12, 0.4, WeightDist.exp1(), 8), [3, 7])
        h = WeightedGraph.from_text(g.to_text())
        assert np.array_equal(h.vertices, g.vertices)
        assert np.array_equal(h.w, g.w)

    def test_text_header(self, path3):
        text = path3.to_text()
        assert text.splitlines()[0] == "n 3"
        assert text.splitlines()[1] == "0 1 5"

    def test_from_text_errors(self):
        with pytest.raises(ValueError):
            WeightedGraph.from_text("3\n0 1 2\n")
        with pytest.raises(ValueError):
            WeightedGraph.from_text("n 3\n0 1\n")


class TestSamplers:
    def test_p_zero_gives_empty(self):
        g = sample_er_graph(5, 0.0, WeightDist.exp1(), 1)
        assert g.n == 5 and g.m == 0

    def test_p_one_gives_triangle(self):
        g = sample_er_graph(3, 1.0, WeightDist.uniform(2.0), 1)
        assert g.m == 3
        assert np.all((g.w >= 0) & (g.w <= 2.0))

    def test_edge_count_sparse(self):
        n = 10_000
        p = 2 / n
        g = sample_er_graph(n, p, WeightDist.exp1(), 11)
        N = n * (n - 1) / 2
        assert abs(g.m - N * p) <= 4 * math.sqrt(N * p * (1 - p))

    @pytest.mark.parametrize("n,p", [(0, 0.5), (3, -0.1), (3, 1.5)])
    def test_rejects(self, n, p):
        with pytest.raises(ValueError):
            sample_er_graph(n, p, WeightDist.exp1(), 0)

    def test_pairs_cover_all_positions(self):
        # every pair index maps to a distinct valid pair
        g = sample_er_graph(41, 1.0, WeightDist.exp1(), 0)
        assert g.m == 41 * 40 // 2
        assert np.all(g.u < g.v)

    def test_deterministic(self):
        a = sample_er_graph(200, 0.05, WeightDist.exp1(), 77)
        b = sample_er_graph(200, 0.05, WeightDist.exp1(), 77)
        assert a.to_text() == b.to_text()

    def test_kn_lambda_single_edge(self):
        g = sample_kn_lambda(2, 1e6, 3)
        assert g.m == 1 and 0 <= g.w[0] <= 1e6

    def test_kn_lambda_rejects(self):
        with pytest.raises(ValueError):
            sample_kn_lambda(10, 0.0, 1)

    def test_kn_lambda_weight_law(self):
        n, lam = 1000, 2.0
        pooled = []
        s = 0
        while sum(x.size for x in pooled) < 10_000:
            pooled.append(sample_kn_lambda(n, lam, s).w)
            s += 1
        w = np.concatenate(pooled)
        assert w.max() <= lam
        mass = -math.expm1(-lam / n)
        cdf = lambda x: -np.expm1(-np.asarray(x) / n) / mass
        assert stats.kstest(w, cdf).pvalue > 0.01

    def test_kn_lambda_presence_frequency(self):
        n, lam, reps = 100, 2.0, 500
        p = 1 - math.exp(-lam / n)
        hits = sum(sample_kn_lambda(n, lam, s).has_edge(0, 1) for s in range(reps))
        assert abs(hits - reps * p) <= 4 * math.sqrt(reps * p * (1 - p))

    def test_kn_lambda_p(self):
        assert kn_lambda_p(100, 2.0) == pytest.approx(1 - math.exp(-0.02), rel=1e-15)

    def test_complete_scaled_exp(self):
        g = sample_complete_scaled_exp(10, 5)
        assert g.m == 45
        assert np.all(g.w >= 0)

    @pytest.mark.parametrize("dist", [WeightDist.exp1(), WeightDist.uniform(3.0), WeightDist.truncated_scaled_exp(50, 2.0)])
    def test_dist_support_and_cdf(self, dist):
        x = dist.sample(np.random.default_rng(0), 5000)
        assert x.min() >= 0 and x.max() <= dist.upper
        assert stats.kstest(x, dist.cdf).pvalue > 0.001

    def test_dist_validation(self):
        with pytest.raises(ValueError):
            WeightDist("gamma")
        with pytest.raises(ValueError):
            WeightDist.uniform(math.inf)


class TestNeighborhood:
    def test_depth_zero(self, triangle):
        nb = neighborhood(triangle, 1, 0)
        assert nb.is_tree and nb.as_tree.size == 1 and nb.subgraph.m == 0

    def test_triangle_not_tree(self, triangle):
        for v in range(3):
            assert not neighborhood(triangle, v, 2).is_tree

    def test_triangle_depth_one_is_star(self, triangle):
        nb = neighborhood(triangle, 0, 1)
        # the edge (1, 2) joins two depth-1 vertices and needs a path of length 2
        assert nb.is_tree and nb.subgraph.m == 2

    def test_path(self, path3):
        nb = neighborhood(path3, 0, 1)
        assert nb.is_tree
        assert nb.subgraph.vertices.tolist() == [0, 1]
        assert list(nb.subgraph.edges()) == [(0, 1, 5.0)]
        t = nb.as_tree
        assert t.labels.tolist() == [0, 1] and t.weight[1] == 5.0

    def test_root_maps_to_vertex(self):
        g = sample_er_graph(300, 2 / 300, WeightDist.exp1(), 9)
        nb = neighborhood(g, 17, 3)
        if nb.is_tree:
            assert nb.as_tree.labels[0] == 17 and nb.node_of(17) == 0

    def test_tree_weights_match_graph(self):
        g = sample_er_graph(200, 1.5 / 200, WeightDist.exp1(), 21)
        for v in range(20):
            nb = neighborhood(g, v, 3)
            if not nb.is_tree:
                continue
            t = nb.as_tree
            for i in range(1, t.size):
                assert t.weight[i] == g.weight(int(t.labels[i]), int(t.labels[t.parent[i]]))

    def test_ball_stats_agree(self):
        g = sample_er_graph(300, 2.5 / 300, WeightDist.exp1(), 2)
        for v in range(30):
            nb = neighborhood(g, v, 2)
            nodes, edges, deg = ball_stats(g, v, 2)
            assert nodes == nb.subgraph.vertices.size and edges == nb.subgraph.m and deg == g.degree()[v]

    def test_rejects_bad_root(self, triangle):
        with pytest.raises(ValueError):
            neighborhood(triangle, 5, 1)
        with pytest.raises(ValueError):
            neighborhood(triangle, 0, -1)


class TestSurgery:
    def test_resample_no_change(self):
        g = sample_er_graph(20, 0.3, WeightDist.exp1(), 3)
        a, b = next((a, b) for a in range(20) for b in range(a + 1, 20) if not g.has_edge(a, b))
        env = EdgeEnv(a, b, 0.5, 0, 0.7, 0)
        assert resample_edge(g, env).to_text() == g.to_text()

    def test_resample_removes(self):
        g = WeightedGraph.from_edges(3, [(0, 1, 3.0), (1, 2, 1.0)])
        h = resample_edge(g, EdgeEnv(0, 1, 3.0, 1, 4.0, 0))
        assert list(h.edges()) == [(1, 2, 1.0)]

    def test_resample_sets_weight(self):
        g = sample_er_graph(15, 0.4, WeightDist.exp1(), 6)
        h = resample_edge(g, EdgeEnv(2, 9, 0.0, int(g.has_edge(2, 9)), 7.0, 1))
        assert h.weight(2, 9) == 7.0
        rest_g = {(a, b): w for a, b, w in g.edges() if (a, b) != (2, 9)}
        rest_h = {(a, b): w for a, b, w in h.edges() if (a, b) != (2, 9)}
        assert rest_g == rest_h

    def test_draw_edge_env_reads_graph(self):
        g = WeightedGraph.from_edges(3, [(0, 1, 3.0)])
        env = draw_edge_env(g, 1, 0, 0.5, WeightDist.exp1(), 4)
        assert env.b == 1 and env.w == 3.0
        env2 = draw_edge_env(g, 1, 2, 0.5, WeightDist.exp1(), 4)
        assert env2.b == 0

    def test_env_swap_symmetry(self):
        # f(G) - f(G^e) is symmetric about zero: sign-flip test on degree sums
        n, lam = 30, 2.0
        p = kn_lambda_p(n, lam)
        dist = WeightDist.truncated_scaled_exp(n, lam)
        diffs = []
        for s in range(2000):
            g = sample_kn_lambda(n, lam, s)
            env = draw_edge_env(g, 0, 1, p, dist, s + 10**6)
            h = resample_edge(g, env)
            f = lambda x: float(x.w[(x.u == 0) | (x.v == 0)].sum())
            diffs.append(f(g) - f(h))
        d = np.array(diffs)
        nz = d[d != 0]
        assert stats.binomtest(int((nz > 0).sum()), nz.size).pvalue > 0.001
        assert abs(d.mean()) < 4 * d.std() / math.sqrt(d.size)

    def test_delete_nothing(self, triangle):
        assert delete_vertices(triangle, []) is triangle

    def test_delete_everything(self, triangle):
        h = delete_vertices(triangle, [0, 1, 2])
        assert h.m == 0 and h.vertices.size == 0

    def test_delete_star_center(self):
        h = delete_vertices(star([1.0, 2.0, 3.0]), {0})
        assert h.m == 0 and h.vertices.tolist() == [1, 2, 3]

    def test_delete_keeps_labels_and_compact(self):
        g = sample_er_graph(10, 0.5, WeightDist.exp1(), 1)
        h = delete_vertices(g, [0, 4])
        assert 0 not in h.vertices and 9 in h.vertices
        c, labels = compact(h)
        assert c.n == 8 and labels.tolist() == h.vertices.tolist()
        assert sorted(c.w.tolist()) == sorted(h.w.tolist())
