"""Hot loops: tree recursions, pendant peeling, exhaustive oracles.

Each kernel has a loop implementation (compiled with numba when available) and
a fallback. For the tree recursions and the exhaustive searches the fallback
is a vectorised numpy implementation; the peeling/unwinding kernels are
inherently sequential, so their fallback is the same loop run by the
interpreter. The module-level names without suffix dispatch on
``_accel.USE_NUMBA``.

Tree arrays: ``parent[i] < i`` for every non-root node (roots have -1),
``depth`` is the node depth, ``weight[i]`` is the weight of the edge to the
parent. Several roots may share one arena (a forest).
"""

from __future__ import annotations

import numpy as np

from . import _accel

NEG_INF = -np.inf
POS_INF = np.inf


def _levels(depth: np.ndarray, dmax: int) -> list[np.ndarray]:
    order = np.argsort(depth, kind="stable")
    counts = np.bincount(depth, minlength=dmax + 1)[: dmax + 1]
    bounds = np.concatenate(([0], np.cumsum(counts)))
    return [order[bounds[d] : bounds[d + 1]] for d in range(dmax + 1)]


# ---------------------------------------------------------------------------
# maximum weight matching cavity values
# ---------------------------------------------------------------------------


def _mwm_values_loop(parent, depth, weight, kmax):
    n = parent.shape[0]
    acc = np.full(n, NEG_INF)
    val = np.full(n, np.nan)
    for i in range(n - 1, -1, -1):
        if depth[i] > kmax:
            continue
        v = acc[i] if acc[i] > 0.0 else 0.0
        val[i] = v
        p = parent[i]
        if p >= 0:
            t = weight[i] - v
            if t > acc[p]:
                acc[p] = t
    return val


def _mwm_values_np(parent, depth, weight, kmax):
    n = parent.shape[0]
    acc = np.full(n, NEG_INF)
    val = np.full(n, np.nan)
    if n == 0:
        return val
    dmax = int(min(depth.max(), kmax))
    for idx in reversed(_levels(depth, dmax)):
        v = np.maximum(acc[idx], 0.0)
        val[idx] = v
        p = parent[idx]
        has = p >= 0
        np.maximum.at(acc, p[has], weight[idx[has]] - v[has])
    return val


# ---------------------------------------------------------------------------
# diluted edge cover: lower/upper recursions with parity boundary
# ---------------------------------------------------------------------------


def _ec_values_loop(parent, depth, weight, kb, half):
    n = parent.shape[0]
    acc_l = np.full(n, POS_INF)
    acc_u = np.full(n, POS_INF)
    low = np.full(n, np.nan)
    up = np.full(n, np.nan)
    if kb % 2 == 0:
        bl, bu = 0.0, half
    else:
        bl, bu = half, 0.0
    for i in range(n - 1, -1, -1):
        d = depth[i]
        if d > kb:
            continue
        if d == kb:
            vl, vu = bl, bu
        else:
            vl = acc_l[i] if acc_l[i] < half else half
            vu = acc_u[i] if acc_u[i] < half else half
            if vl < 0.0:
                vl = 0.0
            if vu < 0.0:
                vu = 0.0
        low[i] = vl
        up[i] = vu
        p = parent[i]
        if p >= 0:
            tl = weight[i] - vl
            tu = weight[i] - vu
            if tl < acc_l[p]:
                acc_l[p] = tl
            if tu < acc_u[p]:
                acc_u[p] = tu
    return low, up


def _ec_values_np(parent, depth, weight, kb, half):
    n = parent.shape[0]
    acc_l = np.full(n, POS_INF)
    acc_u = np.full(n, POS_INF)
    low = np.full(n, np.nan)
    up = np.full(n, np.nan)
    if n == 0:
        return low, up
    bl, bu = (0.0, half) if kb % 2 == 0 else (half, 0.0)
    dmax = int(min(depth.max(), kb))
    for d, idx in reversed(list(enumerate(_levels(depth, dmax)))):
        if d == kb:
            vl = np.full(idx.size, bl)
            vu = np.full(idx.size, bu)
        else:
            vl = np.clip(acc_l[idx], 0.0, half)
            vu = np.clip(acc_u[idx], 0.0, half)
        low[idx] = vl
        up[idx] = vu
        p = parent[idx]
        has = p >= 0
        np.minimum.at(acc_l, p[has], weight[idx[has]] - vl[has])
        np.minimum.at(acc_u, p[has], weight[idx[has]] - vu[has])
    return low, up


# ---------------------------------------------------------------------------
# diluted minimum matching: one recursion per boundary seed
# ---------------------------------------------------------------------------


def _dmm_values_loop(parent, depth, weight, kb, half, seed_val):
    n = parent.shape[0]
    acc = np.full(n, POS_INF)
    val = np.full(n, np.nan)
    for i in range(n - 1, -1, -1):
        d = depth[i]
        if d > kb:
            continue
        if d == kb:
            v = seed_val
        else:
            v = acc[i] if acc[i] < half else half
            if v < -half:
                v = -half
        val[i] = v
        p = parent[i]
        if p >= 0:
            t = weight[i] - v
            if t < acc[p]:
                acc[p] = t
    return val


def _dmm_values_np(parent, depth, weight, kb, half, seed_val):
    n = parent.shape[0]
    acc = np.full(n, POS_INF)
    val = np.full(n, np.nan)
    if n == 0:
        return val
    dmax = int(min(depth.max(), kb))
    for d, idx in reversed(list(enumerate(_levels(depth, dmax)))):
        if d == kb:
            v = np.full(idx.size, float(seed_val))
        else:
            v = np.clip(acc[idx], -half, half)
        val[idx] = v
        p = parent[idx]
        has = p >= 0
        np.minimum.at(acc, p[has], weight[idx[has]] - v[has])
    return val


# ---------------------------------------------------------------------------
# weighted pendant peeling for bonus matching
#   maximise  sum_{e in M} w_e + sum_{v unmatched} b_v
# ---------------------------------------------------------------------------


def _peel_loop(nv, present, eu, ev, ew, bonus, indptr, adj_e):
    m = eu.shape[0]
    b = bonus.copy()
    alive_e = np.zeros(m, np.bool_)
    deg = np.zeros(nv, np.int64)
    for e in range(m):
        if ew[e] - b[eu[e]] - b[ev[e]] > 0.0:
            alive_e[e] = True
            deg[eu[e]] += 1
            deg[ev[e]] += 1
    alive_v = present.copy()
    stack = np.empty(2 * nv + 2 * m + 1, np.int64)
    sp = 0
    for x in range(nv):
        if alive_v[x] and deg[x] <= 1:
            stack[sp] = x
            sp += 1
    op_x = np.empty(nv, np.int64)
    op_p = np.empty(nv, np.int64)
    op_e = np.empty(nv, np.int64)
    op_chosen = np.zeros(nv, np.bool_)
    nops = 0
    const = 0.0
    while sp > 0:
        sp -= 1
        x = stack[sp]
        if not alive_v[x] or deg[x] > 1:
            continue
        alive_v[x] = False
        const += b[x]
        if deg[x] == 0:
            continue
        e = -1
        for t in range(indptr[x], indptr[x + 1]):
            if alive_e[adj_e[t]]:
                e = adj_e[t]
                break
        p = ev[e] if eu[e] == x else eu[e]
        alive_e[e] = False
        deg[x] = 0
        deg[p] -= 1
        gain = ew[e] - b[x]
        chosen = gain > b[p]
        op_x[nops] = x
        op_p[nops] = p
        op_e[nops] = e
        op_chosen[nops] = chosen
        nops += 1
        if chosen:
            b[p] = gain
            for t in range(indptr[p], indptr[p + 1]):
                f = adj_e[t]
                if alive_e[f]:
                    q = ev[f] if eu[f] == p else eu[f]
                    if ew[f] - b[p] - b[q] <= 0.0:
                        alive_e[f] = False
                        deg[p] -= 1
                        deg[q] -= 1
                        if deg[q] <= 1:
                            stack[sp] = q
                            sp += 1
        if deg[p] <= 1:
            stack[sp] = p
            sp += 1
    return const, b, alive_e, alive_v, op_x[:nops], op_p[:nops], op_e[:nops], op_chosen[:nops]


def _unwind_loop(nv, core_edges, eu, ev, op_x, op_p, op_e, op_chosen):
    matched = np.zeros(nv, np.bool_)
    out = np.empty(core_edges.shape[0] + op_x.shape[0], np.int64)
    k = 0
    for i in range(core_edges.shape[0]):
        e = core_edges[i]
        matched[eu[e]] = True
        matched[ev[e]] = True
        out[k] = e
        k += 1
    for i in range(op_x.shape[0] - 1, -1, -1):
        if op_chosen[i] and not matched[op_p[i]] and not matched[op_x[i]]:
            matched[op_p[i]] = True
            matched[op_x[i]] = True
            out[k] = op_e[i]
            k += 1
    return out[:k]


# ---------------------------------------------------------------------------
# exhaustive oracles
# ---------------------------------------------------------------------------


def _matching_dp_loop(nv, W, bonus):
    """Best bonus matching over vertex subsets; ``W[i, j] = -inf`` for non-edges."""
    size = 1 << nv
    f = np.empty(size)
    f[0] = 0.0
    for mask in range(1, size):
        i = 0
        while not (mask >> i) & 1:
            i += 1
        rest = mask ^ (1 << i)
        best = bonus[i] + f[rest]
        r = rest
        while r:
            j = 0
            while not (r >> j) & 1:
                j += 1
            r ^= 1 << j
            if W[i, j] > NEG_INF:
                c = W[i, j] + f[rest ^ (1 << j)]
                if c > best:
                    best = c
        f[mask] = best
    return f[size - 1]


def _popcount_np(x):
    x = np.asarray(x, dtype=np.int64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(x).astype(np.int64)
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x = x >> 1
    return c


def _matching_dp_np(nv, W, bonus):
    size = 1 << nv
    f = np.zeros(size)
    masks = np.arange(size, dtype=np.int64)
    pc = _popcount_np(masks)
    low = np.zeros(size, np.int64)
    low[1:] = np.log2(masks[1:] & -masks[1:]).round().astype(np.int64)
    finite = np.isfinite(W)
    for c in range(1, nv + 1):
        M = masks[pc == c]
        i = low[M]
        rest = M ^ (np.int64(1) << i)
        best = bonus[i] + f[rest]
        for j in range(nv):
            sel = (((rest >> j) & 1) == 1) & finite[i, j]
            if sel.any():
                cand = W[i[sel], j] + f[rest[sel] ^ (1 << j)]
                best[sel] = np.maximum(best[sel], cand)
        f[M] = best
    return f[size - 1]


def _subset_tables_loop(ebits, ew):
    k = ebits.shape[0]
    size = 1 << k
    cost = np.zeros(size)
    cov = np.zeros(size, np.int64)
    for mask in range(1, size):
        j = 0
        while not (mask >> j) & 1:
            j += 1
        prev = mask ^ (1 << j)
        cost[mask] = cost[prev] + ew[j]
        cov[mask] = cov[prev] | ebits[j]
    return cost, cov


def _subset_tables_np(ebits, ew):
    k = ebits.shape[0]
    cost = np.zeros(1)
    cov = np.zeros(1, np.int64)
    for j in range(k):
        cost = np.concatenate((cost, cost + ew[j]))
        cov = np.concatenate((cov, cov | ebits[j]))
    return cost, cov


def _popcount_scalar(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def _edge_subset_min_loop(ebits, ew, need, half, require_cover):
    """min over edge subsets of sum(w) + half * |need - covered| (or +inf if a cover is required)."""
    m = ebits.shape[0]
    k_lo = m // 2
    cost_lo, cov_lo = _subset_tables_loop(ebits[:k_lo], ew[:k_lo])
    cost_hi, cov_hi = _subset_tables_loop(ebits[k_lo:], ew[k_lo:])
    best = POS_INF
    for h in range(cost_hi.shape[0]):
        ch = cost_hi[h]
        vh = cov_hi[h]
        for l in range(cost_lo.shape[0]):
            unc = need & ~(vh | cov_lo[l])
            if require_cover:
                if unc != 0:
                    continue
                c = cost_lo[l] + ch
            else:
                c = cost_lo[l] + ch + half * _popcount_scalar(unc)
            if c < best:
                best = c
    return best


def _edge_subset_min_np(ebits, ew, need, half, require_cover):
    m = ebits.shape[0]
    k_lo = m // 2
    cost_lo, cov_lo = _subset_tables_np(ebits[:k_lo], ew[:k_lo])
    cost_hi, cov_hi = _subset_tables_np(ebits[k_lo:], ew[k_lo:])
    best = POS_INF
    for h in range(cost_hi.shape[0]):
        unc = np.int64(need) & ~(cov_hi[h] | cov_lo)
        c = cost_lo + cost_hi[h]
        if require_cover:
            c = np.where(unc == 0, c, POS_INF)
        else:
            c = c + half * _popcount_np(unc)
        best = min(best, float(c.min()))
    return best


# ---------------------------------------------------------------------------
# compiled variants and dispatch
# ---------------------------------------------------------------------------

_popcount_scalar_nb = _accel.njit(_popcount_scalar)
_subset_tables_nb = _accel.njit(_subset_tables_loop)
mwm_values_nb = _accel.njit(_mwm_values_loop)
ec_values_nb = _accel.njit(_ec_values_loop)
dmm_values_nb = _accel.njit(_dmm_values_loop)
peel_nb = _accel.njit(_peel_loop)
unwind_nb = _accel.njit(_unwind_loop)
matching_dp_nb = _accel.njit(_matching_dp_loop)


def _edge_subset_min_compiled_src(ebits, ew, need, half, require_cover):
    m = ebits.shape[0]
    k_lo = m // 2
    cost_lo, cov_lo = _subset_tables_nb(ebits[:k_lo], ew[:k_lo])
    cost_hi, cov_hi = _subset_tables_nb(ebits[k_lo:], ew[k_lo:])
    best = POS_INF
    for h in range(cost_hi.shape[0]):
        ch = cost_hi[h]
        vh = cov_hi[h]
        for l in range(cost_lo.shape[0]):
            unc = need & ~(vh | cov_lo[l])
            if require_cover:
                if unc != 0:
                    continue
                c = cost_lo[l] + ch
            else:
                c = cost_lo[l] + ch + half * _popcount_scalar_nb(unc)
            if c < best:
                best = c
    return best


edge_subset_min_nb = _accel.njit(_edge_subset_min_compiled_src)

if _accel.USE_NUMBA:
    mwm_values = mwm_values_nb
    ec_values = ec_values_nb
    dmm_values = dmm_values_nb
    peel = peel_nb
    unwind = unwind_nb
    matching_dp = matching_dp_nb
    edge_subset_min = edge_subset_min_nb
else:
    mwm_values = _mwm_values_np
    ec_values = _ec_values_np
    dmm_values = _dmm_values_np
    peel = _peel_loop
    unwind = _unwind_loop
    matching_dp = _matching_dp_np
    edge_subset_min = _edge_subset_min_np

# name -> (compiled, fallback), used by the benchmark and parity tests
VARIANTS = {
    "mwm_values": (mwm_values_nb, _mwm_values_np),
    "ec_values": (ec_values_nb, _ec_values_np),
    "dmm_values": (dmm_values_nb, _dmm_values_np),
    "peel": (peel_nb, _peel_loop),
    "unwind": (unwind_nb, _unwind_loop),
    "matching_dp": (matching_dp_nb, _matching_dp_np),
    "edge_subset_min": (edge_subset_min_nb, _edge_subset_min_np),
}
