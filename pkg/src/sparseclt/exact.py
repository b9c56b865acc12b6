"""Exact solvers for matching and edge-cover problems, plus exhaustive oracles.

All four problems reduce to a *bonus matching*: maximise the weight of a
matching plus a per-vertex bonus collected by every unmatched vertex.
Pendant vertices are peeled off greedily (exact on trees, and it removes
almost everything on sparse random graphs); what remains is handed to the
blossom algorithm in networkx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from . import _kernels
from .wgraph import WeightedGraph, compact, delete_vertices

PROBLEMS = ("MWM", "DMM", "EC", "ECdiluted")
MAX_DP_VERTICES = 20
MAX_SUBSET_EDGES = 24


class InfeasibleError(ValueError):
    """No edge cover exists (some vertex is isolated)."""


class OracleCapError(ValueError):
    """Instance too large for exhaustive search."""


@dataclass(frozen=True)
class Solution:
    problem: str
    value: float
    chosen_edges: tuple  # ((u, v), ...) with u < v, original labels
    lam: float | None = None

    def edge_set(self) -> set:
        return set(self.chosen_edges)


def _check_lam(lam):
    if not (lam is not None and lam > 0):
        raise ValueError("lam must be positive")


# ---------------------------------------------------------------------------
# bonus matching
# ---------------------------------------------------------------------------


def bonus_matching(g: WeightedGraph, ew: np.ndarray, bonus: np.ndarray) -> np.ndarray:
    """Edge ids of a matching maximising ``sum(ew[M]) + sum(bonus[unmatched])``.

    ``g`` must be compact (all labels present); ``ew`` is per edge of ``g``.
    """
    nv = g.n
    if g.m == 0:
        return np.zeros(0, dtype=np.int64)
    indptr, _, adj_e = g.csr
    present = np.ones(nv, dtype=np.bool_)
    _, b, alive_e, alive_v, op_x, op_p, op_e, op_ch = _kernels.peel(
        nv, present, g.u, g.v, np.ascontiguousarray(ew, dtype=np.float64), np.ascontiguousarray(bonus, dtype=np.float64), indptr, adj_e
    )
    core = np.flatnonzero(alive_e)
    core_match = np.zeros(0, dtype=np.int64)
    if core.size:
        G = nx.Graph()
        for e in core:
            G.add_edge(int(g.u[e]), int(g.v[e]), weight=float(ew[e] - b[g.u[e]] - b[g.v[e]]), eid=int(e))
        mate = nx.max_weight_matching(G, maxcardinality=False, weight="weight")
        core_match = np.array(sorted(G[a][c]["eid"] for a, c in mate), dtype=np.int64)
    return np.sort(_kernels.unwind(nv, core_match, g.u, g.v, op_x, op_p, op_e, op_ch))


def _matched_mask(nv, gu, gv, ids):
    mask = np.zeros(nv, dtype=bool)
    mask[gu[ids]] = True
    mask[gv[ids]] = True
    if np.count_nonzero(mask) != 2 * ids.size:
        raise AssertionError("certificate is not a matching")
    return mask


def _pairs(labels, gu, gv, ids):
    return tuple(sorted((int(labels[gu[e]]), int(labels[gv[e]])) for e in ids))


def max_weight_matching(g: WeightedGraph) -> Solution:
    h, labels = compact(g)
    ids = bonus_matching(h, h.w, np.zeros(h.n))
    _matched_mask(h.n, h.u, h.v, ids)
    return Solution("MWM", float(h.w[ids].sum()), _pairs(labels, h.u, h.v, ids))


def diluted_min_matching(g: WeightedGraph, lam: float) -> Solution:
    """Min over matchings of total weight plus ``lam/2`` per unmatched vertex.

    Equivalent to ``n·lam/2`` minus the maximum matching under weights
    ``(lam - w)^+``; edges with ``w >= lam`` never help.
    """
    _check_lam(lam)
    h, labels = compact(g)
    ew = np.maximum(lam - h.w, 0.0)
    ids = bonus_matching(h, ew, np.zeros(h.n))
    ids = ids[h.w[ids] < lam]
    matched = _matched_mask(h.n, h.u, h.v, ids)
    value = float(h.w[ids].sum()) + 0.5 * lam * float(h.n - np.count_nonzero(matched))
    return Solution("DMM", value, _pairs(labels, h.u, h.v, ids), float(lam))


def _min_incident(h: WeightedGraph):
    mu = np.full(h.n, np.inf)
    np.minimum.at(mu, h.u, h.w)
    np.minimum.at(mu, h.v, h.w)
    arg = np.full(h.n, -1, dtype=np.int64)
    eids = np.arange(h.m)
    for ends in (h.u, h.v):
        hit = h.w == mu[ends]
        arg[ends[hit]] = eids[hit]
    return mu, arg


def _cover_from_matching(h, mu_cap, need):
    """Shared cover reduction. ``mu_cap`` caps the per-vertex cost (``inf`` for plain EC)."""
    mu_edge, arg = _min_incident(h)
    mu = np.where(need, np.minimum(mu_edge, mu_cap), 0.0)
    gains = mu[h.u] + mu[h.v] - h.w
    ids = bonus_matching(h, gains, np.zeros(h.n))
    ids = ids[gains[ids] > 0]
    matched = _matched_mask(h.n, h.u, h.v, ids)
    chosen = set(int(e) for e in ids)
    uncovered = 0
    for x in np.flatnonzero(need & ~matched):
        if mu_edge[x] < mu_cap:
            chosen.add(int(arg[x]))
        else:
            uncovered += 1
    chosen = np.array(sorted(chosen), dtype=np.int64)
    return chosen, uncovered


def edge_cover(g: WeightedGraph) -> Solution:
    """Minimum total weight of an edge set touching every present vertex."""
    h, labels = compact(g)
    if h.n and np.any(h.degree() == 0):
        raise InfeasibleError("graph has an isolated vertex; no edge cover exists")
    ids, uncovered = _cover_from_matching(h, np.inf, np.ones(h.n, dtype=bool))
    assert uncovered == 0
    return Solution("EC", float(h.w[ids].sum()), _pairs(labels, h.u, h.v, ids))


def diluted_edge_cover(g: WeightedGraph, lam: float) -> Solution:
    """Min over edge sets of total weight plus ``lam/2`` per uncovered vertex."""
    _check_lam(lam)
    h, labels = compact(g)
    ids, uncovered = _cover_from_matching(h, 0.5 * lam, np.ones(h.n, dtype=bool))
    value = float(h.w[ids].sum()) + 0.5 * lam * uncovered
    return Solution("ECdiluted", value, _pairs(labels, h.u, h.v, ids), float(lam))


def _subset_mask(g: WeightedGraph, h_labels: np.ndarray, S) -> np.ndarray:
    S = np.unique(np.asarray(list(S), dtype=np.int64))
    if S.size and (S[0] < 0 or S[-1] >= g.n or not g.present[S].all()):
        raise ValueError("S must be a subset of the present vertices")
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[h_labels] = np.arange(h_labels.size)
    need = np.zeros(h_labels.size, dtype=bool)
    need[pos[S]] = True
    return need


def diluted_edge_cover_subset(g: WeightedGraph, lam: float, S, method: str = "brute") -> float:
    """Min over edge sets of total weight plus ``lam/2`` per vertex of ``S`` left uncovered.

    ``method="brute"`` enumerates edge subsets (at most 24 edges).
    ``method="reduction"`` uses the matching reduction with zero cost for
    vertices outside ``S``; it is checked against the enumeration in tests.
    """
    _check_lam(lam)
    h, labels = compact(g)
    need = _subset_mask(g, labels, S)
    if method == "brute":
        return _edge_cover_brute(h, 0.5 * lam, need, require_cover=False)
    if method == "reduction":
        ids, uncovered = _cover_from_matching(h, 0.5 * lam, need)
        return float(h.w[ids].sum()) + 0.5 * lam * uncovered
    raise ValueError(f"unknown method {method!r}")


def cavity_mwm(g: WeightedGraph, v: int) -> float:
    """``M(g) - M(g - v)``."""
    return max_weight_matching(g).value - max_weight_matching(delete_vertices(g, [v])).value


def cavity_dmm(g: WeightedGraph, lam: float, v: int) -> float:
    """``M_lam(g) - M_lam(g - v)``."""
    return diluted_min_matching(g, lam).value - diluted_min_matching(delete_vertices(g, [v]), lam).value


def cavity_ec(g: WeightedGraph, lam: float, v: int, S=None, method: str = "reduction") -> float:
    """``EC_lam(g, S) - EC_lam(g, S - {v})`` with ``S`` defaulting to all present vertices."""
    S = set(int(x) for x in (g.vertices if S is None else S))
    if v not in S:
        return 0.0
    return diluted_edge_cover_subset(g, lam, S, method) - diluted_edge_cover_subset(g, lam, S - {v}, method)


def solve(problem: str, g: WeightedGraph, lam: float | None = None) -> Solution:
    if problem == "MWM":
        return max_weight_matching(g)
    if problem == "DMM":
        return diluted_min_matching(g, lam)
    if problem == "EC":
        return edge_cover(g)
    if problem == "ECdiluted":
        return diluted_edge_cover(g, lam)
    raise ValueError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")


def certificate_value(problem: str, g: WeightedGraph, edges, lam: float | None = None) -> float:
    """Objective of an explicit edge set, checking feasibility."""
    edges = list(edges)
    total = sum(g.weight(a, c) for a, c in edges)
    deg = {}
    for a, c in edges:
        deg[a] = deg.get(a, 0) + 1
        deg[c] = deg.get(c, 0) + 1
    left = sum(1 for x in g.vertices if int(x) not in deg)
    if problem in ("MWM", "DMM") and any(d > 1 for d in deg.values()):
        raise ValueError("edge set is not a matching")
    if problem == "MWM":
        return total
    if problem == "EC":
        if left:
            raise ValueError("edge set does not cover every vertex")
        return total
    return total + 0.5 * lam * left


# ---------------------------------------------------------------------------
# exhaustive oracles
# ---------------------------------------------------------------------------


def _edge_cover_brute(h: WeightedGraph, half: float, need: np.ndarray, require_cover: bool) -> float:
    if h.m > MAX_SUBSET_EDGES:
        raise OracleCapError(f"subset enumeration limited to {MAX_SUBSET_EDGES} edges, got {h.m}")
    if h.n > 62:
        raise OracleCapError("subset enumeration limited to 62 vertices")
    ebits = (np.int64(1) << h.u) | (np.int64(1) << h.v)
    need_bits = int(np.sum(np.int64(1) << np.flatnonzero(need).astype(np.int64))) if need.any() else 0
    return float(
        _kernels.edge_subset_min(
            np.ascontiguousarray(ebits, dtype=np.int64), np.ascontiguousarray(h.w), np.int64(need_bits), float(half), bool(require_cover)
        )
    )


def _matching_brute(h: WeightedGraph, W_edge: np.ndarray, bonus: float) -> float:
    if h.n > MAX_DP_VERTICES:
        raise OracleCapError(f"matching DP limited to {MAX_DP_VERTICES} vertices, got {h.n}")
    if h.n == 0:
        return 0.0
    W = np.full((h.n, h.n), -np.inf)
    W[h.u, h.v] = W_edge
    W[h.v, h.u] = W_edge
    return float(_kernels.matching_dp(h.n, W, np.full(h.n, float(bonus))))


def brute_force(problem: str, g: WeightedGraph, lam: float | None = None) -> float:
    """Optimal value by exhaustive search (matchings: DP over vertex subsets; covers: edge subsets)."""
    h, _ = compact(g)
    if problem == "MWM":
        return _matching_brute(h, h.w, 0.0)
    if problem == "DMM":
        _check_lam(lam)
        return -_matching_brute(h, -h.w, -0.5 * lam)
    if problem == "EC":
        val = _edge_cover_brute(h, 0.0, np.ones(h.n, dtype=bool), require_cover=True)
        if math.isinf(val):
            raise InfeasibleError("graph has an isolated vertex; no edge cover exists")
        return val
    if problem == "ECdiluted":
        _check_lam(lam)
        return _edge_cover_brute(h, 0.5 * lam, np.ones(h.n, dtype=bool), require_cover=False)
    raise ValueError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")
