"""Tree recursions that bracket cavity values, and Monte Carlo estimates of their gap."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gwtree import RootedTree, sample_forest, tilt_forest
from .seeding import child_seed, derive_seed, stream
from .wgraph import EdgeEnv, Neighborhood, WeightDist

CHUNK = 1000


@dataclass(frozen=True)
class CavityBracket:
    lower: float
    upper: float
    k: int
    problem: str

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack


@dataclass(frozen=True)
class LocalApproxPair:
    la_lower: float
    la_upper: float
    k: int
    edge_state: tuple[int, int]


@dataclass(frozen=True)
class DeltaKEstimate:
    problem: str
    k: int
    lam: float
    mean_sq: float
    std_err: float
    n_samples: int

    CSV_HEADER = ("problem", "k", "lambda", "n_samples", "mean_sq", "std_err")

    def csv_row(self) -> tuple:
        return (self.problem, self.k, self.lam, self.n_samples, self.mean_sq, self.std_err)


@dataclass(frozen=True)
class DiagnosticBounds:
    eps: float
    rho: float
    lam: float
    lam_n: float
    k: int
    n: float
    d_tv: float
    C0: float


def _tree_of(t) -> RootedTree:
    if isinstance(t, Neighborhood):
        if not t.is_tree:
            raise ValueError("neighborhood is not a tree")
        return t.as_tree
    return t


# ---------------------------------------------------------------------------
# maximum weight matching
# ---------------------------------------------------------------------------


def mwm_values(t: RootedTree, kmax: int | None = None) -> np.ndarray:
    """``h(u)`` for every node, treating depth-``kmax`` nodes as leaves (NaN below)."""
    kmax = t.height if kmax is None else int(kmax)
    return _kernels.mwm_values(t.parent, t.depth, t.weight, kmax)


def mwm_cavity(t: RootedTree, kmax: int | None = None) -> float:
    """Root value of ``h(u) = max(0, max_c (ℓ_c - h(c)))`` with leaves at 0."""
    return float(mwm_values(_tree_of(t), kmax)[0])


def mwm_bracket(neigh, k: int | None = None) -> CavityBracket:
    """Bracket ``[h_{i_L}, h_{i_U}]`` with ``i_L = 2⌊(k-1)/2⌋`` and ``i_U = i_L + 1``."""
    if k is None:
        if not isinstance(neigh, Neighborhood):
            raise ValueError("k is required when passing a bare tree")
        k = neigh.depth
    if k < 1:
        raise ValueError("bracket needs k >= 1")
    t = _tree_of(neigh)
    i_l = 2 * ((k - 1) // 2)
    vals_l = mwm_values(t, i_l)
    vals_u = mwm_values(t, i_l + 1)
    return CavityBracket(float(vals_l[0]), float(vals_u[0]), int(k), "MWM")


# ---------------------------------------------------------------------------
# diluted minimum matching
# ---------------------------------------------------------------------------


def dmm_values(t: RootedTree, lam: float, k: int, seed_val: float) -> np.ndarray:
    return _kernels.dmm_values(t.parent, t.depth, t.weight, int(k), 0.5 * lam, float(seed_val))


def dmm_cavity_bracket(t, lam: float, k: int | None = None) -> CavityBracket:
    """Bracket for ``M_lam(G) - M_lam(G - v)``.

    Depth-``k`` nodes are seeded with ``-lam/2`` and ``+lam/2``. The root
    value is increasing in the seed for even ``k`` and decreasing for odd
    ``k``, so the ``-lam/2`` seed gives the lower end exactly when ``k`` is even.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if k is None:
        k = t.depth if isinstance(t, Neighborhood) else _tree_of(t).height
    tree = _tree_of(t)
    w = tree.weight[1:]
    if w.size and (w.min() < 0 or w.max() > lam):
        raise ValueError("diluted matching recursion needs weights in [0, lam]")
    half = 0.5 * lam
    lo_seed, hi_seed = (-half, half) if k % 2 == 0 else (half, -half)
    lower = float(dmm_values(tree, lam, k, lo_seed)[0])
    upper = float(dmm_values(tree, lam, k, hi_seed)[0])
    return CavityBracket(lower, upper, int(k), "DMM")


# ---------------------------------------------------------------------------
# diluted edge cover
# ---------------------------------------------------------------------------


def ec_values(t: RootedTree, k: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """``(h^L, h^U)`` at every node of ``t`` with the depth-``k`` parity boundary."""
    return _kernels.ec_values(t.parent, t.depth, t.weight, int(k), 0.5 * lam)


def ec_cavity_bracket(t, k: int, lam: float) -> CavityBracket:
    tree = _tree_of(t)
    if tree.height > k:
        raise ValueError("tree is deeper than k")
    low, up = ec_values(tree, k, lam)
    return CavityBracket(float(low[0]), float(up[0]), int(k), "ECdiluted")


def _la_terms(hv_l, hv_u, hv_l2, hv_u2, hu_l, hu_u, hu_l2, hu_u2, b, b2, w, w2):
    """Four-case local approximation; arrays broadcast. ``*2`` refers to the perturbed tree."""
    lo = hv_l - hv_u2
    hi = hv_u - hv_l2
    c10 = (b == 1) & (b2 == 0)
    c01 = (b == 0) & (b2 == 1)
    c11 = (b == 1) & (b2 == 1)
    lo = lo + np.where(c10, np.minimum(hu_u, w) - hu_l, 0.0)
    hi = hi + np.where(c10, np.minimum(hu_l, w) - hu_u, 0.0)
    lo = lo + np.where(c01, hu_u2 - np.minimum(hu_l2, w2), 0.0)
    hi = hi + np.where(c01, hu_l2 - np.minimum(hu_u2, w2), 0.0)
    lo = lo + np.where(c11, np.minimum(hu_u, w) - np.minimum(hu_l2, w2), 0.0)
    hi = hi + np.where(c11, np.minimum(hu_l, w) - np.minimum(hu_u2, w2), 0.0)
    return lo, hi


def ec_local_approx(Bk: Neighborhood, Bk_prime: Neighborhood, env: EdgeEnv, lam: float, k: int | None = None) -> LocalApproxPair:
    """``(LA^L, LA^U)`` bracketing ``EC_lam(G) - EC_lam(G^e)`` for ``e = (v, u)``.

    ``Bk`` and ``Bk_prime`` are the depth-``k`` neighborhoods of ``v`` in ``G``
    and in ``G^e``.
    """
    for nb in (Bk, Bk_prime):
        if not nb.is_tree:
            raise ValueError("local approximation needs tree neighborhoods")
        if nb.root != env.v:
            raise ValueError("neighborhoods must be rooted at the first endpoint of e")
    k = Bk.depth if k is None else k
    t, t2 = Bk.as_tree, Bk_prime.as_tree
    low, up = ec_values(t, k, lam)
    low2, up2 = ec_values(t2, k, lam)
    nan = float("nan")
    hu_l = hu_u = hu_l2 = hu_u2 = nan
    if env.b:
        i = Bk.node_of(env.u)
        if i < 0 or t.depth[i] != 1:
            raise ValueError("u must be a child of the root in Bk when b_e = 1")
        hu_l, hu_u = low[i], up[i]
    if env.b2:
        i = Bk_prime.node_of(env.u)
        if i < 0 or t2.depth[i] != 1:
            raise ValueError("u must be a child of the root in Bk_prime when b'_e = 1")
        hu_l2, hu_u2 = low2[i], up2[i]
    lo, hi = _la_terms(low[0], up[0], low2[0], up2[0], hu_l, hu_u, hu_l2, hu_u2, env.b, env.b2, env.w, env.w2)
    return LocalApproxPair(float(lo), float(hi), int(k), (int(env.b), int(env.b2)))


# ---------------------------------------------------------------------------
# Monte Carlo estimate of the approximation gap
# ---------------------------------------------------------------------------


def _ec_gap_chunk(k, lam, dist, m, seed):
    base = sample_forest(m, k, lam, dist, child_seed(seed, "delta/base"))
    att = sample_forest(m, max(k - 1, 0), lam, dist, child_seed(seed, "delta/attached"))
    bridge = dist.sample(stream(seed, "delta/bridge"), m)
    tilted, aroot = tilt_forest(base, att, bridge)
    half = 0.5 * lam
    lb, ub = _kernels.ec_values(base.parent, base.depth, base.weight, k, half)
    lt, ut = _kernels.ec_values(tilted.parent, tilted.depth, tilted.weight, k, half)
    r, rt = base.roots, tilted.roots
    one, zero = np.ones(m, np.int64), np.zeros(m, np.int64)
    # (B, B') = (tilted, base): edge present before the swap only
    lo_a, hi_a = _la_terms(lt[rt], ut[rt], lb[r], ub[r], lt[aroot], ut[aroot], 0.0, 0.0, one, zero, bridge, 0.0)
    # (B, B') = (base, tilted): edge present after the swap only
    lo_b, hi_b = _la_terms(lb[r], ub[r], lt[rt], ut[rt], 0.0, 0.0, lt[aroot], ut[aroot], zero, one, 0.0, bridge)
    return (hi_a - lo_a) ** 2, (hi_b - lo_b) ** 2


def _mwm_gap_chunk(k, lam, dist, m, seed):
    base = sample_forest(m, k, lam, dist, child_seed(seed, "delta/base"))
    att = sample_forest(m, k - 1, lam, dist, child_seed(seed, "delta/attached"))
    bridge = dist.sample(stream(seed, "delta/bridge"), m)
    tilted, _ = tilt_forest(base, att, bridge)
    out = []
    for f in (base, tilted):
        hk = _kernels.mwm_values(f.parent, f.depth, f.weight, k)[f.roots]
        hk1 = _kernels.mwm_values(f.parent, f.depth, f.weight, k - 1)[f.roots]
        out.append((hk - hk1) ** 2)
    return out[0], out[1]


def _ec_root_gap_chunk(k, lam, dist, m, seed):
    base = sample_forest(m, k, lam, dist, child_seed(seed, "delta/base"))
    lb, ub = _kernels.ec_values(base.parent, base.depth, base.weight, k, 0.5 * lam)
    g = (ub[base.roots] - lb[base.roots]) ** 2
    return g, g


def delta_k_samples(problem: str, k: int, lam: float, dist: WeightDist, n_samples: int, seed: int, quantity: str = "la"):
    """Per-sample squared gaps for both directions, chunked with derived seeds."""
    if quantity not in ("la", "root"):
        raise ValueError("quantity must be 'la' or 'root'")
    if problem == "EC":
        fn = _ec_gap_chunk if quantity == "la" else _ec_root_gap_chunk
    elif problem == "MWM":
        fn = _mwm_gap_chunk
    else:
        raise ValueError("problem must be 'MWM' or 'EC'")
    if k < 1:
        raise ValueError("k must be at least 1")
    parts_a, parts_b = [], []
    for c, start in enumerate(range(0, n_samples, CHUNK)):
        m = min(CHUNK, n_samples - start)
        a, b = fn(k, lam, dist, m, derive_seed(seed, c))
        parts_a.append(a)
        parts_b.append(b)
    return np.concatenate(parts_a), np.concatenate(parts_b)


def estimate_delta_k(
    problem: str, k: int, lam: float, dist: WeightDist, n_samples: int, seed: int, quantity: str = "la"
) -> DeltaKEstimate:
    """Monte Carlo estimate of the mean squared bracket gap on Galton-Watson trees.

    EC: ``E(LA^U - LA^L)^2`` for the pairs (tilted, plain) and (plain, tilted).
    MWM: ``E(h_k - h_{k-1})^2`` at the root of a plain tree and of a tilted tree
    (``k = 2r + 1`` gives the odd/even parity gap). The larger of the two
    directions is reported, with its standard error.

    ``quantity="root"`` (EC only) instead estimates ``E(h^U_k - h^L_k)^2`` at
    the root of a plain tree, which lies in ``[0, (lam/2)^2]``; the local
    approximation gap can reach ``(3 lam / 2)^2``.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    a, b = delta_k_samples(problem, k, lam, dist, n_samples, seed, quantity)
    best = a if a.mean() >= b.mean() else b
    se = float(best.std(ddof=1) / math.sqrt(best.size))
    return DeltaKEstimate(problem, int(k), float(lam), float(best.mean()), se, int(n_samples))


# ---------------------------------------------------------------------------
# diagnostic error terms
# ---------------------------------------------------------------------------


def diagnostic_bounds(lam: float, lam_n: float, k: int, n: float, d_tv: float, C0: float) -> DiagnosticBounds:
    """Coupling error ``eps_k(n)`` and non-tree probability bound ``rho_k(n)`` (``C0`` is free)."""
    if not (lam > 0 and lam_n > 0 and k > 0 and n > 0 and C0 > 0 and d_tv >= 0):
        raise ValueError("parameters must be positive (d_tv nonnegative)")
    eps = (2 * lam + 3) ** k / n ** (1 / 3) + C0 * (lam_n + 1) ** k / min(lam, 1.0) * (
        abs(lam_n - lam) + d_tv + lam**2 / (2 * n)
    )
    rho = min((lam_n + C0) ** (2 * k + C0) / n, 1.0)
    return DiagnosticBounds(float(eps), float(rho), float(lam), float(lam_n), int(k), float(n), float(d_tv), float(C0))
