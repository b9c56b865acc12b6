"""Poisson Galton-Watson trees with i.i.d. edge weights, stored as flat arenas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seeding import child_seed, stream
from .wgraph import WeightDist

DEFAULT_SIZE_CAP = 10**7


class TreeSizeError(RuntimeError):
    """Raised when a sampled tree grows past the node cap."""


def _frozen(a):
    a.setflags(write=False)
    return a


class RootedTree:
    """Rooted tree in breadth-first order.

    ``parent[0] == -1``; for every other node ``parent[i] < i`` and depths are
    nondecreasing, so a single reverse sweep visits children before parents.
    ``weight[i]`` is the weight of the edge from ``i`` to its parent (NaN at
    the root). ``labels`` optionally maps nodes to graph vertices.
    """

    def __init__(self, parent, weight, depth=None, labels=None):
        parent = np.asarray(parent, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        if parent.ndim != 1 or parent.size == 0 or parent.shape != weight.shape:
            raise ValueError("parent and weight must be nonempty 1-d arrays of equal length")
        if parent[0] != -1 or np.any(parent[1:] < 0) or np.any(parent[1:] >= np.arange(1, parent.size)):
            raise ValueError("nodes must be in breadth-first order with a single root at index 0")
        if depth is None:
            depth = np.zeros(parent.size, dtype=np.int64)
            for i in range(1, parent.size):
                depth[i] = depth[parent[i]] + 1
        else:
            depth = np.asarray(depth, dtype=np.int64)
        if parent.size > 1:
            if np.any(np.diff(depth) < 0) or np.any(depth[1:] != depth[parent[1:]] + 1):
                raise ValueError("depths must be consistent and nondecreasing")
            if np.any(np.diff(parent[1:]) < 0):
                raise ValueError("children of a node must be contiguous")
            if np.any(~(weight[1:] >= 0)) or np.any(~np.isfinite(weight[1:])):
                raise ValueError("edge weights must be finite and nonnegative")
        weight = weight.copy()
        weight[0] = np.nan
        self.parent = _frozen(parent)
        self.weight = _frozen(weight)
        self.depth = _frozen(depth)
        self.labels = None if labels is None else _frozen(np.asarray(labels, dtype=np.int64))

    @classmethod
    def from_parents(cls, parent, weight, labels=None) -> "RootedTree":
        return cls(parent, weight, labels=labels)

    @classmethod
    def single(cls) -> "RootedTree":
        return cls([-1], [np.nan])

    @property
    def size(self) -> int:
        return int(self.parent.size)

    @property
    def height(self) -> int:
        return int(self.depth[-1])

    def children(self, i: int) -> np.ndarray:
        lo = np.searchsorted(self.parent, i, side="left") if i >= 0 else 0
        hi = np.searchsorted(self.parent, i, side="right")
        # parent[0] = -1 sits before everything, so searching the tail is safe
        return np.arange(max(lo, 1), hi, dtype=np.int64)

    def subtree_nodes(self, i: int) -> np.ndarray:
        mark = np.zeros(self.size, dtype=bool)
        mark[i] = True
        for j in range(i + 1, self.size):
            if mark[self.parent[j]]:
                mark[j] = True
        return np.flatnonzero(mark)

    def __eq__(self, other):
        if not isinstance(other, RootedTree):
            return NotImplemented
        return (
            np.array_equal(self.parent, other.parent)
            and np.array_equal(self.weight, other.weight, equal_nan=True)
            and (
                (self.labels is None and other.labels is None)
                or (self.labels is not None and other.labels is not None and np.array_equal(self.labels, other.labels))
            )
        )

    __hash__ = None

    def __repr__(self):
        return f"RootedTree(size={self.size}, height={self.height})"

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Parenthesized preorder, e.g. ``(:1.5() :0.25(:2()))``: each child is ``:weight(subtree)``."""
        kids = [[] for _ in range(self.size)]
        for j in range(1, self.size):
            kids[self.parent[j]].append(j)
        out = []
        stack = [("open", 0)]
        while stack:
            op, i = stack.pop()
            if op == "close":
                out.append(")")
                continue
            if i != 0:
                if out and out[-1] != "(":
                    out.append(" ")
                out.append(f":{self.weight[i]:.17g}")
            out.append("(")
            stack.append(("close", i))
            for c in reversed(kids[i]):
                stack.append(("open", c))
        return "".join(out)

    @classmethod
    def from_text(cls, text: str) -> "RootedTree":
        s = text.strip()
        if not s.startswith("("):
            raise ValueError("tree text must start with '('")
        # preorder parse into (parent, weight), then relabel breadth-first
        par, wts = [-1], [np.nan]
        stack = [0]
        i = 1
        pending_w = None
        while i < len(s):
            c = s[i]
            if c == ":":
                j = i + 1
                while j < len(s) and s[j] not in "(":
                    j += 1
                pending_w = float(s[i + 1 : j])
                i = j
                continue
            if c == "(":
                if pending_w is None:
                    raise ValueError("missing edge weight before '('")
                par.append(stack[-1])
                wts.append(pending_w)
                stack.append(len(par) - 1)
                pending_w = None
            elif c == ")":
                stack.pop()
            elif not c.isspace():
                raise ValueError(f"unexpected character {c!r} in tree text")
            i += 1
        if stack:
            raise ValueError("unbalanced parentheses in tree text")
        return _bfs_normalize(np.array(par), np.array(wts))


def _bfs_normalize(par: np.ndarray, wts: np.ndarray, labels=None) -> RootedTree:
    n = par.size
    kids = [[] for _ in range(n)]
    for j in range(1, n):
        kids[par[j]].append(j)
    order = [0]
    for x in order:
        order.extend(kids[x])
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    order = np.array(order)
    new_par = np.where(order == 0, -1, pos[par[order]])
    new_par[0] = -1
    lab = None if labels is None else np.asarray(labels)[order]
    return RootedTree(new_par, wts[order], labels=lab)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def _grow(k, lam, dist, n_roots, rng_s, rng_w, cap):
    """Level-wise growth of ``n_roots`` independent trees in one arena.

    Returns (parent, depth, weight, root_of). Because each level consumes the
    two streams in a fixed order, growing to a larger depth with the same
    generators reproduces the shallower forest as a prefix.
    """
    parents = [np.full(n_roots, -1, dtype=np.int64)]
    weights = [np.full(n_roots, np.nan)]
    depths = [np.zeros(n_roots, dtype=np.int64)]
    level = np.arange(n_roots, dtype=np.int64)
    total = n_roots
    for d in range(k):
        if level.size == 0:
            break
        counts = rng_s.poisson(lam, size=level.size)
        nxt_n = int(counts.sum())
        if total + nxt_n > cap:
            raise TreeSizeError(f"tree exceeded {cap} nodes (depth {d + 1}, lam={lam})")
        par = np.repeat(level, counts)
        parents.append(par)
        weights.append(dist.sample(rng_w, nxt_n))
        depths.append(np.full(nxt_n, d + 1, dtype=np.int64))
        level = np.arange(total, total + nxt_n, dtype=np.int64)
        total += nxt_n
    return np.concatenate(parents), np.concatenate(depths), np.concatenate(weights)


def _check(k, lam):
    if k < 0:
        raise ValueError("depth must be nonnegative")
    if not (lam >= 0 and math.isfinite(lam)):
        raise ValueError("lam must be finite and nonnegative")


def sample_gw_tree(k: int, lam: float, dist: WeightDist, seed: int, cap: int = DEFAULT_SIZE_CAP) -> RootedTree:
    """Poisson(lam) Galton-Watson tree truncated at depth ``k``.

    Trees drawn with the same seed at depths ``j < k`` are exactly the depth-``j``
    truncations of the deeper one.
    """
    _check(k, lam)
    parent, depth, weight = _grow(k, lam, dist, 1, stream(seed, "gw/structure"), stream(seed, "gw/weights"), cap)
    return RootedTree(parent, weight, depth)


@dataclass(frozen=True, eq=False)
class TiltedTree:
    """Base tree with one extra root child ``attached_root`` carrying ``attached`` at weight ``bridge_weight``."""

    combined: RootedTree
    base: RootedTree
    attached: RootedTree
    bridge_weight: float
    attached_root: int
    # node index in ``combined`` of every node of ``base`` / ``attached``
    base_map: np.ndarray
    attached_map: np.ndarray

    def without_attached(self) -> RootedTree:
        """``combined`` with the attached subtree removed, renumbered breadth-first."""
        c = self.combined
        drop = np.zeros(c.size, dtype=bool)
        drop[c.subtree_nodes(self.attached_root)] = True
        keep = np.flatnonzero(~drop)
        new = np.full(c.size, -1, dtype=np.int64)
        new[keep] = np.arange(keep.size)
        par = np.where(c.parent[keep] >= 0, new[np.maximum(c.parent[keep], 0)], -1)
        return RootedTree(par, c.weight[keep], c.depth[keep])


def attach_subtree(base: RootedTree, attached: RootedTree, bridge: float):
    """Breadth-first merge of ``base`` with ``attached`` hung below the root.

    Returns ``(combined, attached_root, base_map, attached_map)``.
    """
    nb, na = base.size, attached.size
    depth = np.concatenate((base.depth, attached.depth + 1))
    src = np.concatenate((np.zeros(nb, np.int8), np.ones(na, np.int8)))
    # base nodes before attached nodes within each level keeps children contiguous
    order = np.lexsort((src, depth))
    pos = np.empty(nb + na, dtype=np.int64)
    pos[order] = np.arange(nb + na)
    old_par = np.concatenate((base.parent, np.where(attached.parent >= 0, attached.parent + nb, 0)))
    old_w = np.concatenate((base.weight, attached.weight))
    old_w[nb] = bridge
    par = np.where(old_par[order] >= 0, pos[np.maximum(old_par[order], 0)], -1)
    par[0] = -1
    combined = RootedTree(par, old_w[order], depth[order])
    return combined, int(pos[nb]), pos[:nb].copy(), pos[nb:].copy()


def sample_tilted_tree(k: int, lam: float, dist: WeightDist, seed: int, cap: int = DEFAULT_SIZE_CAP) -> TiltedTree:
    """Tilted tree: ``T_k`` plus an independent ``T'_{k-1}`` joined to the root by a weight-``ℓ`` edge."""
    if k < 1:
        raise ValueError("tilted trees need depth k >= 1")
    _check(k, lam)
    base = sample_gw_tree(k, lam, dist, child_seed(seed, "tilted/base"), cap)
    attached = sample_gw_tree(k - 1, lam, dist, child_seed(seed, "tilted/attached"), cap)
    bridge = float(dist.sample(stream(seed, "tilted/bridge"), 1)[0])
    combined, ar, bmap, amap = attach_subtree(base, attached, bridge)
    if combined.size > cap:
        raise TreeSizeError(f"tilted tree exceeded {cap} nodes")
    return TiltedTree(combined, base, attached, bridge, ar, bmap, amap)


def truncate_to_depth(t: RootedTree, j: int) -> RootedTree:
    """Nodes of depth <= j; a prefix of the arena, so node ids are preserved."""
    if j < 0:
        raise ValueError("depth must be nonnegative")
    cut = int(np.searchsorted(t.depth, j, side="right"))
    if cut == t.size:
        return t
    labels = None if t.labels is None else t.labels[:cut].copy()
    return RootedTree(t.parent[:cut].copy(), t.weight[:cut].copy(), t.depth[:cut].copy(), labels)


# ---------------------------------------------------------------------------
# forests for Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Forest:
    """Many independent trees in one arena; ``roots[i]`` is the root of sample ``i``."""

    parent: np.ndarray
    depth: np.ndarray
    weight: np.ndarray
    roots: np.ndarray


def sample_forest(n_trees: int, k: int, lam: float, dist: WeightDist, seed: int, cap: int = DEFAULT_SIZE_CAP) -> Forest:
    """``n_trees`` i.i.d. depth-``k`` trees grown level-wise together."""
    _check(k, lam)
    parent, depth, weight = _grow(k, lam, dist, n_trees, stream(seed, "forest/structure"), stream(seed, "forest/weights"), cap)
    return Forest(parent, depth, weight, np.arange(n_trees, dtype=np.int64))


def tilt_forest(base: Forest, attached: Forest, bridge: np.ndarray) -> tuple[Forest, np.ndarray]:
    """Hang ``attached`` tree i below root i of ``base`` through weight ``bridge[i]``.

    Returns the merged forest (still valid for the reverse-sweep kernels) and
    the index of every attached root in it.
    """
    n = base.roots.size
    nb = base.parent.size
    par = np.concatenate((base.parent, np.where(attached.parent >= 0, attached.parent + nb, -1)))
    # attached roots become children of the base roots
    par[nb + attached.roots] = base.roots[:n]
    depth = np.concatenate((base.depth, attached.depth + 1))
    weight = np.concatenate((base.weight, attached.weight))
    weight[nb + attached.roots] = bridge
    order = np.lexsort((np.arange(depth.size), depth))
    pos = np.empty(depth.size, dtype=np.int64)
    pos[order] = np.arange(depth.size)
    new_par = np.where(par[order] >= 0, pos[np.maximum(par[order], 0)], -1)
    merged = Forest(new_par, depth[order], weight[order], pos[base.roots])
    return merged, pos[nb + attached.roots]
