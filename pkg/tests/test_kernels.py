"""Compiled kernels agree with their pure numpy/python fallbacks."""

import numpy as np
import pytest

from sparseclt import _accel, _kernels
from sparseclt.gwtree import sample_forest
from sparseclt.wgraph import WeightDist, sample_er_graph

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def both(name, *args):
    fast, slow = _kernels.VARIANTS[name]
    return fast(*args), slow(*args)


@pytest.fixture(scope="module")
def forest():
    return sample_forest(300, 5, 1.8, WeightDist.uniform(2.0), 7)


def test_mwm_values(forest):
    for kmax in (0, 2, 5):
        a, b = both("mwm_values", forest.parent, forest.depth, forest.weight, kmax)
        np.testing.assert_array_equal(a, b)


def test_ec_values(forest):
    for k in (3, 4, 5):
        (la, ua), (lb, ub) = both("ec_values", forest.parent, forest.depth, forest.weight, k, 1.0)
        np.testing.assert_array_equal(la, lb)
        np.testing.assert_array_equal(ua, ub)


def test_dmm_values(forest):
    for seed_val in (-1.0, 1.0):
        a, b = both("dmm_values", forest.parent, forest.depth, forest.weight, 5, 1.0, seed_val)
        np.testing.assert_array_equal(a, b)


def test_matching_dp():
    rng = np.random.default_rng(0)
    for n in (1, 4, 9):
        W = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.6), 1)
        W = W + W.T
        bonus = rng.random(n)
        a, b = both("matching_dp", n, W, bonus)
        assert a == pytest.approx(b, abs=1e-12)


def test_edge_subset_min():
    rng = np.random.default_rng(1)
    m = 12
    ebits = np.array([(1 << int(i)) | (1 << int(j)) for i, j in rng.integers(0, 6, (m, 2)) if i != j], dtype=np.int64)
    ew = rng.random(ebits.size)
    for cover in (False, True):
        a, b = both("edge_subset_min", ebits, ew, np.int64(0b111111), 0.5, cover)
        assert a == pytest.approx(b, abs=1e-12) or (np.isinf(a) and np.isinf(b))


def test_peel_and_unwind_through_solver(monkeypatch):
    # solve with each variant swapped in and compare values
    from sparseclt import exact

    graphs = [sample_er_graph(200, 1.5 / 200, WeightDist.exp1(), s) for s in range(20)]
    ref = [exact.max_weight_matching(g).value for g in graphs]
    for pick in (0, 1):
        monkeypatch.setattr(_kernels, "peel", _kernels.VARIANTS["peel"][pick])
        monkeypatch.setattr(_kernels, "unwind", _kernels.VARIANTS["unwind"][pick])
        vals = [exact.max_weight_matching(g).value for g in graphs]
        assert vals == pytest.approx(ref, abs=1e-9)


def test_env_flag_selects_fallback():
    import os
    import subprocess
    import sys

    code = "from sparseclt import _accel, _kernels; print(_accel.USE_NUMBA, _kernels.mwm_values is _kernels.VARIANTS['mwm_values'][1])"
    env = dict(os.environ, **{_accel.ENV_FLAG: "1"})
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.stdout.split() == ["False", "True"]
