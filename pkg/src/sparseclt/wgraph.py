"""Weighted simple graphs, sparse Erdős–Rényi samplers and neighborhoods."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .seeding import stream


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class WeightedGraph:
    """Undirected simple graph on labels ``0..n-1`` with nonnegative edge weights.

    Edges are stored once, as ``(u, v)`` with ``u < v``, sorted
    lexicographically. ``vertices`` lists the labels that are present; vertex
    deletion removes labels from it without renumbering the rest.
    """

    __slots__ = ("n", "u", "v", "w", "vertices", "__dict__")

    def __init__(self, n, u, v, w, vertices=None, *, _trusted=False):
        n = int(n)
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        w = np.asarray(w, dtype=np.float64).ravel()
        if not _trusted:
            if not (u.shape == v.shape == w.shape):
                raise ValueError("edge arrays must have equal length")
            if u.size:
                if u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n:
                    raise ValueError("edge endpoint out of range")
                if np.any(u == v):
                    raise ValueError("self-loops are not allowed")
                if np.any(~np.isfinite(w)) or np.any(w < 0):
                    raise ValueError("edge weights must be finite and nonnegative")
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            order = np.lexsort((hi, lo))
            u, v, w = lo[order], hi[order], w[order]
            if u.size > 1 and np.any((u[1:] == u[:-1]) & (v[1:] == v[:-1])):
                raise ValueError("parallel edges are not allowed")
        if vertices is None:
            vertices = np.arange(n, dtype=np.int64)
        else:
            vertices = np.unique(np.asarray(vertices, dtype=np.int64))
            if vertices.size and (vertices[0] < 0 or vertices[-1] >= n):
                raise ValueError("vertex label out of range")
            if not _trusted and u.size:
                mask = np.zeros(n, bool)
                mask[vertices] = True
                if not (mask[u].all() and mask[v].all()):
                    raise ValueError("edge touches a vertex that is not present")
        self.n = n
        self.u = _frozen(u)
        self.v = _frozen(v)
        self.w = _frozen(w)
        self.vertices = _frozen(vertices)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple], vertices=None) -> "WeightedGraph":
        """Build from ``(u, v, w)`` triples."""
        rows = list(edges)
        if not rows:
            return cls(n, [], [], [], vertices)
        u, v, w = zip(*rows)
        return cls(n, u, v, w, vertices)

    @classmethod
    def empty(cls, n: int) -> "WeightedGraph":
        return cls(n, [], [], [])

    @property
    def m(self) -> int:
        return int(self.u.size)

    @property
    def num_vertices(self) -> int:
        return int(self.vertices.size)

    @cached_property
    def present(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.vertices] = True
        return _frozen(mask)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(indptr, neighbor, edge_id)`` adjacency over all labels."""
        ends = np.concatenate((self.u, self.v))
        other = np.concatenate((self.v, self.u))
        eid = np.concatenate((np.arange(self.m), np.arange(self.m)))
        order = np.argsort(ends, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=self.n), out=indptr[1:])
        return _frozen(indptr), _frozen(other[order]), _frozen(eid[order])

    def degree(self) -> np.ndarray:
        return np.diff(self.csr[0])

    @cached_property
    def _index(self) -> dict:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(zip(self.u, self.v))}

    def edge_id(self, a: int, b: int) -> int:
        """Edge index of ``{a, b}``, or -1 if absent."""
        if a > b:
            a, b = b, a
        return self._index.get((int(a), int(b)), -1)

    def has_edge(self, a: int, b: int) -> bool:
        return self.edge_id(a, b) >= 0

    def weight(self, a: int, b: int) -> float:
        i = self.edge_id(a, b)
        if i < 0:
            raise KeyError((a, b))
        return float(self.w[i])

    def edges(self):
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.u, self.v, self.w)]

    def neighbors(self, x: int) -> np.ndarray:
        indptr, nbr, _ = self.csr
        return nbr[indptr[x] : indptr[x + 1]]

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
        )

    __hash__ = None

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, vertices={self.num_vertices}, m={self.m})"

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        lines = [f"n {self.n}"]
        if self.num_vertices != self.n:
            lines.append("vertices " + " ".join(str(int(x)) for x in self.vertices))
        lines.extend(f"{a} {b} {c:.17g}" for a, b, c in zip(self.u, self.v, self.w))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WeightedGraph":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or not lines[0].startswith("n "):
            raise ValueError("graph text must start with 'n <count>'")
        n = int(lines[0].split()[1])
        vertices = None
        body = lines[1:]
        if body and body[0].startswith("vertices"):
            vertices = [int(t) for t in body[0].split()[1:]]
            body = body[1:]
        rows = []
        for ln in body:
            a, b, c = ln.split()
            rows.append((int(a), int(b), float(c)))
        return cls.from_edges(n, rows, vertices)


# ---------------------------------------------------------------------------
# weight distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightDist:
    """Edge-weight law.

    ``kind`` is one of ``"exp1"`` (Exp(1)), ``"trunc_scaled_exp"`` (n·Exp(1)
    conditioned on ``[0, lam]``; ``lam=inf`` gives plain n·Exp(1)) and
    ``"uniform"`` (Uniform(0, lam)).
    """

    kind: str
    n: float = 1.0
    lam: float = math.inf

    def __post_init__(self):
        if self.kind not in ("exp1", "trunc_scaled_exp", "uniform"):
            raise ValueError(f"unknown weight distribution {self.kind!r}")
        if self.kind == "trunc_scaled_exp" and not (self.n > 0 and self.lam > 0):
            raise ValueError("trunc_scaled_exp needs n > 0 and lam > 0")
        if self.kind == "uniform" and not (0 < self.lam < math.inf):
            raise ValueError("uniform needs 0 < lam < inf")

    @classmethod
    def exp1(cls) -> "WeightDist":
        return cls("exp1")

    @classmethod
    def truncated_scaled_exp(cls, n: float, lam: float) -> "WeightDist":
        return cls("trunc_scaled_exp", float(n), float(lam))

    @classmethod
    def uniform(cls, lam: float) -> "WeightDist":
        return cls("uniform", 1.0, float(lam))

    @property
    def upper(self) -> float:
        return math.inf if self.kind == "exp1" else self.lam

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "exp1":
            return rng.exponential(1.0, size)
        u = rng.random(size)
        if self.kind == "uniform":
            return u * self.lam
        # inverse CDF of n*Exp(1) restricted to [0, lam]
        mass = -math.expm1(-self.lam / self.n)
        x = -self.n * np.log1p(-u * mass)
        return np.minimum(x, self.lam)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "exp1":
            return np.where(x <= 0, 0.0, -np.expm1(-np.maximum(x, 0)))
        if self.kind == "uniform":
            return np.clip(x / self.lam, 0.0, 1.0)
        mass = -math.expm1(-self.lam / self.n)
        y = -np.expm1(-np.clip(x, 0.0, self.lam) / self.n) / mass
        return np.clip(y, 0.0, 1.0)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def _pair_from_index(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over ``{(i, j): 0 <= i < j < n}`` (row-major) to pairs."""
    k = np.asarray(k, dtype=np.int64)
    b = 2 * n - 1
    i = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * k, 0.0))) / 2).astype(np.int64)
    i = np.clip(i, 0, max(n - 2, 0))

    def off(r):
        return r * n - r * (r + 1) // 2

    # float guard: at most one step in either direction
    i = np.where(off(i) > k, i - 1, i)
    i = np.where((i + 1 <= n - 2) & (off(i + 1) <= k), i + 1, i)
    j = k - off(i) + i + 1
    return i, j


def _sample_pair_indices(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in ``[0, total)`` kept independently with probability ``p``, by geometric skips."""
    if p <= 0.0 or total == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    chunks = []
    pos = -1
    while True:
        remaining = total - 1 - pos
        mean = remaining * p
        batch = int(mean + 5.0 * math.sqrt(mean) + 16)
        idx = pos + np.cumsum(rng.geometric(p, size=batch))
        keep = idx[idx < total]
        chunks.append(keep)
        if keep.size < idx.size:
            break
        pos = int(idx[-1])
    return np.concatenate(chunks)


def sample_er_graph(n: int, p: float, dist: WeightDist, seed: int) -> WeightedGraph:
    """Erdős–Rényi G(n, p) with i.i.d. weights from ``dist``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    total = n * (n - 1) // 2
    k = _sample_pair_indices(total, p, stream(seed, "er/pairs"))
    u, v = _pair_from_index(k, n)
    w = dist.sample(stream(seed, "er/weights"), k.size)
    return WeightedGraph(n, u, v, w, _trusted=True)


def kn_lambda_p(n: int, lam: float) -> float:
    return -math.expm1(-lam / n)


def sample_kn_lambda(n: int, lam: float, seed: int) -> WeightedGraph:
    """Edges of weight <= lam of the complete graph with n·Exp(1) weights."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    g = sample_er_graph(n, kn_lambda_p(n, lam), WeightDist.truncated_scaled_exp(n, lam), seed)
    if g.m and g.w.max() > lam:
        raise AssertionError("K_n(lam) weight outside [0, lam]")
    return g


def sample_complete_scaled_exp(n: int, seed: int) -> WeightedGraph:
    """Complete graph with i.i.d. n·Exp(1) weights."""
    return sample_er_graph(n, 1.0, WeightDist.truncated_scaled_exp(n, math.inf), seed)


# ---------------------------------------------------------------------------
# graph surgery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeEnv:
    """Primary pair ``(w, b)`` and resample pair ``(w2, b2)`` for the edge ``(v, u)``."""

    v: int
    u: int
    w: float
    b: int
    w2: float
    b2: int

    @property
    def edge(self) -> tuple[int, int]:
        return (self.v, self.u)


def draw_edge_env(g: WeightedGraph, v: int, u: int, p: float, dist: WeightDist, seed: int) -> EdgeEnv:
    """Read ``(w_e, b_e)`` off ``g`` and draw an independent copy ``(w'_e, b'_e)``.

    When ``e`` is absent from ``g`` its (unused) weight is drawn from ``dist``.
    """
    if v == u:
        raise ValueError("edge endpoints must differ")
    rng_primary = stream(seed, "env/primary")
    rng_copy = stream(seed, "env/copy")
    i = g.edge_id(v, u)
    if i >= 0:
        w, b = float(g.w[i]), 1
    else:
        w, b = float(dist.sample(rng_primary, 1)[0]), 0
    b2 = int(rng_copy.random() < p)
    w2 = float(dist.sample(rng_copy, 1)[0])
    return EdgeEnv(int(v), int(u), w, b, w2, b2)


def resample_edge(g: WeightedGraph, env: EdgeEnv) -> WeightedGraph:
    """The graph with edge ``e`` present iff ``b'_e = 1``, at weight ``w'_e``."""
    a, c = min(env.v, env.u), max(env.v, env.u)
    if not (0 <= a < c < g.n) or not (g.present[a] and g.present[c]):
        raise ValueError("edge endpoints must be present vertices of g")
    i = g.edge_id(a, c)
    if i < 0 and not env.b2:
        return g
    keep = np.ones(g.m, dtype=bool)
    if i >= 0:
        keep[i] = False
    u, v, w = g.u[keep], g.v[keep], g.w[keep]
    if env.b2:
        pos = int(np.searchsorted(u * g.n + v, a * g.n + c))
        u = np.insert(u, pos, a)
        v = np.insert(v, pos, c)
        w = np.insert(w, pos, env.w2)
    return WeightedGraph(g.n, u, v, w, g.vertices, _trusted=True)


def delete_vertices(g: WeightedGraph, removed) -> WeightedGraph:
    """Induced graph on the present vertices outside ``removed``; labels are kept."""
    removed = np.unique(np.asarray(list(removed) if not isinstance(removed, np.ndarray) else removed, dtype=np.int64))
    if removed.size == 0:
        return g
    drop = np.zeros(g.n, dtype=bool)
    drop[removed] = True
    keep = ~(drop[g.u] | drop[g.v])
    vertices = g.vertices[~drop[g.vertices]]
    return WeightedGraph(g.n, g.u[keep], g.v[keep], g.w[keep], vertices, _trusted=True)


def compact(g: WeightedGraph) -> tuple[WeightedGraph, np.ndarray]:
    """Relabel present vertices to ``0..k-1``; returns the graph and the old labels."""
    labels = g.vertices
    new = np.full(g.n, -1, dtype=np.int64)
    new[labels] = np.arange(labels.size)
    return WeightedGraph(labels.size, new[g.u], new[g.v], g.w.copy(), _trusted=True), labels


# ---------------------------------------------------------------------------
# neighborhoods
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Neighborhood:
    """Depth-``depth`` ball around ``root``: every path of length <= depth from the root."""

    root: int
    depth: int
    subgraph: WeightedGraph
    is_tree: bool
    as_tree: object = field(default=None, repr=False)  # RootedTree when is_tree

    def node_of(self, vertex: int) -> int:
        """Tree node index of a graph vertex (requires ``is_tree``)."""
        if self.as_tree is None:
            raise ValueError("neighborhood is not a tree")
        hits = np.flatnonzero(self.as_tree.labels == vertex)
        return int(hits[0]) if hits.size else -1


def neighborhood(g: WeightedGraph, v: int, k: int) -> Neighborhood:
    from .gwtree import RootedTree

    if not (0 <= v < g.n) or not g.present[v]:
        raise ValueError("root must be a present vertex")
    if k < 0:
        raise ValueError("depth must be nonnegative")
    indptr, nbr, eid = g.csr
    dist = {int(v): 0}
    order = [int(v)]
    parent = [-1]
    pweight = [np.nan]
    pos = {int(v): 0}
    edges = set()
    queue = deque([int(v)])
    while queue:
        x = queue.popleft()
        dx = dist[x]
        if dx >= k:
            continue
        for t in range(indptr[x], indptr[x + 1]):
            y = int(nbr[t])
            edges.add(int(eid[t]))
            if y not in dist:
                dist[y] = dx + 1
                pos[y] = len(order)
                order.append(y)
                parent.append(pos[x])
                pweight.append(float(g.w[eid[t]]))
                queue.append(y)
    ids = np.fromiter(sorted(edges), dtype=np.int64, count=len(edges))
    sub = WeightedGraph(g.n, g.u[ids], g.v[ids], g.w[ids], np.array(order, dtype=np.int64), _trusted=True)
    is_tree = len(edges) == len(order) - 1
    tree = None
    if is_tree:
        tree = RootedTree.from_parents(
            np.array(parent, dtype=np.int64),
            np.array(pweight, dtype=np.float64),
            labels=np.array(order, dtype=np.int64),
        )
    return Neighborhood(int(v), int(k), sub, is_tree, tree)


def ball_stats(g: WeightedGraph, v: int, k: int) -> tuple[int, int, int]:
    """``(node_count, edge_count, root_degree)`` of B_k(v, g) without building it."""
    indptr, nbr, eid = g.csr
    dist = {int(v): 0}
    frontier = [int(v)]
    edges = set()
    for d in range(k):
        nxt = []
        for x in frontier:
            for t in range(indptr[x], indptr[x + 1]):
                edges.add(int(eid[t]))
                y = int(nbr[t])
                if y not in dist:
                    dist[y] = d + 1
                    nxt.append(y)
        frontier = nxt
    root_degree = int(indptr[v + 1] - indptr[v]) if k >= 1 else 0
    return len(dist), len(edges), root_degree
