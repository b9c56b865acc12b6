import math

import numpy as np
import pytest
from scipy import stats

from sparseclt.gwtree import (
    RootedTree,
    TreeSizeError,
    attach_subtree,
    sample_forest,
    sample_gw_tree,
    sample_tilted_tree,
    tilt_forest,
    truncate_to_depth,
)
from sparseclt.wgraph import WeightDist

EXP = WeightDist.exp1()


def tree_ids(parent):
    """Root index of every node in a forest arena (pointer jumping)."""
    tid = np.where(parent < 0, np.arange(parent.size), parent)
    while True:
        nxt = tid[tid]
        if np.array_equal(nxt, tid):
            return tid
        tid = nxt


class TestRootedTree:
    def test_validation(self):
        with pytest.raises(ValueError):
            RootedTree([0, 0], [np.nan, 1.0])
        with pytest.raises(ValueError):
            RootedTree([-1, 2, 0], [np.nan, 1.0, 1.0])
        with pytest.raises(ValueError):
            RootedTree([-1, 0], [np.nan, -1.0])
        # children of node 1 and 2 interleaved
        with pytest.raises(ValueError):
            RootedTree([-1, 0, 0, 1, 2, 1], [np.nan] + [1.0] * 5)

    def test_children_and_subtree(self):
        t = RootedTree([-1, 0, 0, 1, 1, 2], [np.nan, 1, 2, 3, 4, 5])
        assert t.children(0).tolist() == [1, 2]
        assert sorted(t.subtree_nodes(1).tolist()) == [1, 3, 4]
        assert t.height == 2 and t.size == 6

    def test_text_round_trip(self):
        t = sample_gw_tree(4, 1.8, EXP, 12)
        s = t.to_text()
        assert s.startswith("(") and RootedTree.from_text(s) == t

    def test_text_format(self):
        t = RootedTree([-1, 0, 0, 1], [np.nan, 0.5, 2.0, 0.25])
        assert t.to_text() == "(:0.5(:0.25()) :2())"
        assert RootedTree.from_text(t.to_text()) == t

    def test_text_bad(self):
        with pytest.raises(ValueError):
            RootedTree.from_text("(:1")


class TestSampleGW:
    def test_depth_zero(self):
        assert sample_gw_tree(0, 3.0, EXP, 1).size == 1

    def test_deterministic(self):
        assert sample_gw_tree(5, 1.5, EXP, 44) == sample_gw_tree(5, 1.5, EXP, 44)

    def test_nested_prefix(self):
        deep = sample_gw_tree(6, 1.5, EXP, 3)
        for j in range(6):
            assert sample_gw_tree(j, 1.5, EXP, 3) == truncate_to_depth(deep, j)

    def test_depths_bounded_and_weights_in_support(self):
        dist = WeightDist.uniform(2.0)
        t = sample_gw_tree(5, 2.0, dist, 8)
        assert t.height <= 5
        assert np.all((t.weight[1:] >= 0) & (t.weight[1:] <= 2.0))

    def test_size_cap(self):
        with pytest.raises(TreeSizeError):
            sample_gw_tree(30, 5.0, EXP, 1, cap=10_000)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            sample_gw_tree(-1, 1.0, EXP, 1)
        with pytest.raises(ValueError):
            sample_gw_tree(2, -1.0, EXP, 1)
        with pytest.raises(ValueError):
            sample_gw_tree(2, float("nan"), EXP, 1)
        assert sample_gw_tree(3, 0.0, EXP, 1).size == 1

    def test_root_degree_moments(self):
        N = 100_000
        f = sample_forest(N, 1, 2.0, EXP, 5)
        deg = np.bincount(f.parent[f.parent >= 0], minlength=N)[:N]
        assert abs(deg.mean() - 2.0) <= 4 * math.sqrt(2.0 / N)
        assert abs(deg.var(ddof=1) - 2.0) <= 0.05 * 2.0

    def test_root_degree_chi_square(self):
        N = 100_000
        f = sample_forest(N, 1, 2.0, EXP, 6)
        size = np.bincount(tree_ids(f.parent), minlength=N)[:N]
        top = 9
        obs = np.bincount(np.minimum(size - 1, top), minlength=top + 1)
        pmf = stats.poisson.pmf(np.arange(top), 2.0)
        exp = N * np.append(pmf, 1 - pmf.sum())
        assert stats.chisquare(obs, exp).pvalue > 0.01

    def test_mean_size_depth3(self):
        N = 100_000
        f = sample_forest(N, 3, 1.0, EXP, 7)
        size = np.bincount(tree_ids(f.parent), minlength=N)[:N]
        # Var|T| for lam=1, k=3 is finite; use the sample SD
        assert abs(size.mean() - 4.0) <= 4 * size.std(ddof=1) / math.sqrt(N)

    def test_single_tree_sampler_matches_forest(self):
        degs = [sample_gw_tree(1, 2.0, EXP, s).size - 1 for s in range(3000)]
        assert abs(np.mean(degs) - 2.0) <= 4 * math.sqrt(2.0 / 3000)


class TestTilted:
    def test_k1_structure(self):
        tt = sample_tilted_tree(1, 2.0, EXP, 9)
        c = tt.combined
        assert c.height == 1
        assert c.size == tt.base.size + 1
        assert c.weight[tt.attached_root] == tt.bridge_weight
        assert tt.attached.size == 1

    def test_root_degree_mean(self):
        N = 100_000
        base = sample_forest(N, 2, 2.0, EXP, 1)
        att = sample_forest(N, 1, 2.0, EXP, 2)
        merged, _ = tilt_forest(base, att, np.ones(N))
        deg = np.bincount(merged.parent[merged.parent >= 0], minlength=N)[:N]
        assert abs(deg.mean() - 3.0) <= 4 * math.sqrt(2.0 / N)

    def test_tilted_root_degree_direct(self):
        degs = [sample_tilted_tree(2, 2.0, EXP, s).combined.children(0).size for s in range(2000)]
        assert abs(np.mean(degs) - 3.0) <= 4 * math.sqrt(2.0 / 2000)

    def test_attached_depth(self):
        for s in range(50):
            assert sample_tilted_tree(2, 2.0, EXP, s).attached.height <= 1

    def test_without_attached_is_base(self):
        for s in range(50):
            tt = sample_tilted_tree(3, 1.5, EXP, s)
            assert tt.without_attached() == tt.base

    def test_maps_preserve_weights(self):
        tt = sample_tilted_tree(3, 1.5, EXP, 4)
        c = tt.combined
        np.testing.assert_array_equal(c.weight[tt.base_map[1:]], tt.base.weight[1:])
        np.testing.assert_array_equal(c.weight[tt.attached_map[1:]], tt.attached.weight[1:])
        assert tt.attached_map[0] == tt.attached_root

    def test_rejects_k0(self):
        with pytest.raises(ValueError):
            sample_tilted_tree(0, 1.0, EXP, 1)

    def test_attach_subtree_sizes(self):
        a = sample_gw_tree(3, 1.5, EXP, 1)
        b = sample_gw_tree(2, 1.5, EXP, 2)
        c, root, bmap, amap = attach_subtree(a, b, 0.3)
        assert c.size == a.size + b.size and c.parent[root] == 0


class TestTruncate:
    def test_identity_and_root(self):
        t = sample_gw_tree(4, 2.0, EXP, 3)
        assert truncate_to_depth(t, t.height) == t
        assert truncate_to_depth(t, 0).size == 1

    def test_prefix(self):
        t = sample_gw_tree(5, 2.0, EXP, 10)
        r = truncate_to_depth(t, 3)
        assert r.height <= 3
        np.testing.assert_array_equal(r.parent, t.parent[: r.size])
        np.testing.assert_array_equal(r.weight[1:], t.weight[1 : r.size])
        assert np.all(t.depth[r.size :] > 3)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            truncate_to_depth(RootedTree.single(), -1)
