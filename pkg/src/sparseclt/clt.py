"""Monte Carlo harness: replicates, normality, variance scaling and neighborhood diagnostics."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import exact
from .gwtree import sample_forest
from .seeding import child_seed, derive_seed, stream
from .wgraph import (
    WeightDist,
    ball_stats,
    draw_edge_env,
    kn_lambda_p,
    resample_edge,
    sample_complete_scaled_exp,
    sample_er_graph,
    sample_kn_lambda,
)

EC_LOG_FACTOR = 8.0


@dataclass(frozen=True)
class ReplicateRecord:
    seed: int
    n: int
    lam: float
    problem: str
    value: float

    CSV_HEADER = ("seed", "n", "lambda", "problem", "value")

    def csv_row(self):
        return (self.seed, self.n, self.lam, self.problem, self.value)


def ec_lambda_n(n: int, factor: float = EC_LOG_FACTOR) -> float:
    """Growing dilution level ``factor·log n`` used for the edge-cover experiments."""
    return factor * math.log(n)


def sample_instance(problem: str, n: int, lam: float, seed: int):
    """Graph of the family attached to ``problem``.

    MWM: G(n, lam/n) with Exp(1) weights. DMM and ECdiluted: K_n(lam).
    EC: the complete graph with n·Exp(1) weights.
    """
    if problem == "MWM":
        return sample_er_graph(n, min(lam / n, 1.0), WeightDist.exp1(), seed)
    if problem in ("DMM", "ECdiluted"):
        return sample_kn_lambda(n, lam, seed)
    if problem == "EC":
        return sample_complete_scaled_exp(n, seed)
    raise ValueError(f"unknown problem {problem!r}")


def replicate_value(problem: str, n: int, lam: float, seed: int) -> float:
    g = sample_instance(problem, n, lam, seed)
    return exact.solve(problem, g, lam if problem in ("DMM", "ECdiluted") else None).value


def _run_block(args):
    problem, n, lam, seeds = args
    return [replicate_value(problem, n, lam, s) for s in seeds]


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def run_replicates(problem: str, n: int, lam: float, reps: int, master_seed: int, workers: int = 1) -> list[ReplicateRecord]:
    """``reps`` independent optimal values; replicate ``i`` uses ``derive_seed(master_seed, i)``."""
    if reps < 2:
        raise ValueError("reps must be at least 2")
    if n < 1:
        raise ValueError("n must be at least 1")
    seeds = [derive_seed(master_seed, i) for i in range(reps)]
    if workers <= 1:
        values = _run_block((problem, n, lam, seeds))
    else:
        size = max(1, math.ceil(reps / (4 * workers)))
        blocks = [(problem, n, lam, seeds[i : i + size]) for i in range(0, reps, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = [v for part in pool.map(_run_block, blocks) for v in part]
    out = [ReplicateRecord(s, int(n), float(lam), problem, float(v)) for s, v in zip(seeds, values)]
    if not all(math.isfinite(r.value) for r in out):
        raise AssertionError("non-finite replicate value")
    return out


# ---------------------------------------------------------------------------
# normality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KSReport:
    n_reps: int
    ks_distance: float
    mean: float
    sd: float

    CSV_HEADER = ("problem", "n", "lambda", "reps", "ks", "mean", "sd")


def normal_cdf(z):
    """Standard normal CDF through erfc (accurate in both tails)."""
    return 0.5 * special.erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))


def ks_to_normal(records) -> KSReport:
    """Sup distance between the empirical CDF of the standardized sample and Φ."""
    x = np.array([r.value if isinstance(r, ReplicateRecord) else r for r in records], dtype=float)
    if x.size < 50:
        raise ValueError("need at least 50 records")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if not sd > 0:
        raise ValueError("sample standard deviation is zero")
    z = np.sort((x - mean) / sd)
    phi = normal_cdf(z)
    N = z.size
    i = np.arange(1, N + 1)
    d = max(float(np.max(i / N - phi)), float(np.max(phi - (i - 1) / N)))
    return KSReport(int(N), d, mean, sd)


# ---------------------------------------------------------------------------
# variance scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarianceRow:
    problem: str
    lam: float
    n: int
    var: float
    var_over_n: float

    CSV_HEADER = ("problem", "lambda", "n", "var_over_n")

    def csv_row(self):
        return (self.problem, self.lam, self.n, self.var_over_n)


def variance_profile(problem: str, lam: float, n_list, reps: int, master_seed: int, workers: int = 1):
    """Unbiased variance over ``n`` for every ``n`` in ``n_list``; returns (rows, successive ratios)."""
    rows = []
    for n in n_list:
        if lam == 0:
            var = 0.0
        else:
            vals = np.array([r.value for r in run_replicates(problem, n, lam, reps, master_seed, workers)])
            var = float(vals.var(ddof=1))
        rows.append(VarianceRow(problem, float(lam), int(n), var, var / n))
    ratios = [
        rows[i + 1].var_over_n / rows[i].var_over_n if rows[i].var_over_n > 0 else float("nan") for i in range(len(rows) - 1)
    ]
    return rows, ratios


# ---------------------------------------------------------------------------
# edge-cover truncation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationReport:
    n: int
    reps: int
    equal_4k: int
    lam_n: float
    equal_lam_n: int

    @property
    def freq_4k(self) -> float:
        return self.equal_4k / self.reps

    @property
    def freq_lam_n(self) -> float:
        return self.equal_lam_n / self.reps


def ec_truncation_check(n: int, reps: int, master_seed: int, factor: float = EC_LOG_FACTOR) -> TruncationReport:
    """How often the edge cover of K_n is reproduced by its diluted versions.

    ``K = max_v min_u w_{uv}``; dilution at ``4K`` must reproduce the cover
    always, dilution at ``factor·log n`` with high probability.
    """
    if not 2 <= n <= 300:
        raise ValueError("n must lie in [2, 300]")
    lam_n = ec_lambda_n(n, factor)
    eq4k = eqln = 0
    for i in range(reps):
        g = sample_complete_scaled_exp(n, derive_seed(master_seed, i))
        mu = np.full(n, np.inf)
        np.minimum.at(mu, g.u, g.w)
        np.minimum.at(mu, g.v, g.w)
        K = float(mu.max())
        ec = exact.edge_cover(g).value
        eq4k += exact.diluted_edge_cover(g, 4 * K).value == ec
        eqln += exact.diluted_edge_cover(g, lam_n).value == ec
    return TruncationReport(int(n), int(reps), int(eq4k), lam_n, int(eqln))


# ---------------------------------------------------------------------------
# neighborhood diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyEstimate:
    estimate: float
    std_err: float
    hits: int
    reps: int


def _binomial(hits, reps):
    p = hits / reps
    return FrequencyEstimate(p, math.sqrt(p * (1 - p) / reps), int(hits), int(reps))


def tree_probability(n: int, lam: float, k: int, reps: int, master_seed: int) -> FrequencyEstimate:
    """Fraction of replicates of G(n, lam/n) in which the depth-``k`` ball of vertex 0 is a tree."""
    if reps < 100:
        raise ValueError("reps must be at least 100")
    hits = 0
    for i in range(reps):
        if k == 0 or lam == 0:
            hits += 1
            continue
        g = sample_er_graph(n, min(lam / n, 1.0), WeightDist.exp1(), derive_seed(master_seed, i))
        nodes, edges, _ = ball_stats(g, 0, k)
        hits += edges == nodes - 1
    return _binomial(hits, reps)


@dataclass(frozen=True)
class TVReport:
    n: int
    lam: float
    k: int
    statistic: str
    tv: float
    boot_se: float
    reps: int


def _tv_counts(a: np.ndarray, b: np.ndarray) -> float:
    top = int(max(a.max(initial=0), b.max(initial=0))) + 1
    pa = np.bincount(a, minlength=top) / a.size
    pb = np.bincount(b, minlength=top) / b.size
    return 0.5 * float(np.abs(pa - pb).sum())


def _tree_statistic(k, lam, reps, statistic, seed):
    f = sample_forest(reps, k, lam, WeightDist.exp1(), seed)
    if statistic == "node_count":
        owner = np.arange(f.parent.size)
        for i in range(f.parent.size):
            if f.parent[i] >= 0:
                owner[i] = owner[f.parent[i]]
        return np.bincount(owner, minlength=reps)[:reps]
    children = np.bincount(f.parent[f.parent >= 0], minlength=f.parent.size)
    return children[f.roots] if k >= 1 else np.zeros(reps, dtype=np.int64)


def coupling_statistic_tv(
    n: int, lam: float, k: int, reps: int, statistic: str, master_seed: int, n_boot: int = 200
) -> TVReport:
    """Empirical TV between a ball statistic in G(n, lam/n) and the same statistic of the GW tree.

    The tree sample depends only on ``(k, lam, reps, master_seed)``, so runs
    over an ``n`` ladder share it.
    """
    if statistic not in ("root_degree", "node_count"):
        raise ValueError("statistic must be 'root_degree' or 'node_count'")
    if reps < 1000:
        raise ValueError("reps must be at least 1000")
    col = 2 if statistic == "root_degree" else 0
    graph_stat = np.empty(reps, dtype=np.int64)
    for i in range(reps):
        g = sample_er_graph(n, min(lam / n, 1.0), WeightDist.exp1(), derive_seed(master_seed, i))
        graph_stat[i] = ball_stats(g, 0, k)[col] if k > 0 else (1 if col == 0 else 0)
    tree_stat = _tree_statistic(k, lam, reps, statistic, child_seed(master_seed, "coupling/tree"))
    tv = _tv_counts(graph_stat, tree_stat)
    rng = stream(master_seed, "coupling/bootstrap")
    boots = [
        _tv_counts(graph_stat[rng.integers(0, reps, reps)], tree_stat[rng.integers(0, reps, reps)]) for _ in range(n_boot)
    ]
    return TVReport(int(n), float(lam), int(k), statistic, tv, float(np.std(boots, ddof=1)), int(reps))


def binomial_poisson_tv(n: int, lam: float) -> float:
    """Exact TV between Binomial(n-1, lam/n) and Poisson(lam)."""
    top = int(max(n, stats.poisson.ppf(1 - 1e-16, lam))) + 1
    x = np.arange(top + 1)
    pb = stats.binom.pmf(x, n - 1, lam / n)
    pp = stats.poisson.pmf(x, lam)
    return 0.5 * (float(np.abs(pb - pp).sum()) + float(stats.poisson.sf(top, lam)))


# ---------------------------------------------------------------------------
# perturbation identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    reps: int
    passed: int
    max_error: float

    @property
    def all_pass(self) -> bool:
        return self.passed == self.reps


def perturbation_terms(g, g2, lam, v, u):
    """``(direct, four_term)`` for the change of the diluted cover when ``g`` becomes ``g2``."""
    direct = exact.diluted_edge_cover(g, lam).value - exact.diluted_edge_cover(g2, lam).value
    V = set(int(x) for x in g.vertices)

    def h(graph, x, S):
        f = exact.diluted_edge_cover_subset
        return f(graph, lam, S) - f(graph, lam, S - {x})

    four = h(g, v, V) - h(g2, v, V) + h(g, u, V - {v}) - h(g2, u, V - {v})
    return direct, four


def perturbation_identity_check(n: int, lam: float, reps: int, master_seed: int, tol: float = 1e-9) -> IdentityReport:
    """Check the four-term decomposition of a single-edge change on K_n(lam), all terms by enumeration."""
    if not 2 <= n <= 8:
        raise ValueError("n must lie in [2, 8]")
    p = kn_lambda_p(n, lam)
    dist = WeightDist.truncated_scaled_exp(n, lam)
    ok, worst = 0, 0.0
    for i in range(reps):
        s = derive_seed(master_seed, i)
        g = sample_kn_lambda(n, lam, child_seed(s, "identity/graph"))
        pick = stream(s, "identity/edge").choice(n, size=2, replace=False)
        v, u = int(pick[0]), int(pick[1])
        env = draw_edge_env(g, v, u, p, dist, child_seed(s, "identity/env"))
        g2 = resample_edge(g, env)
        direct, four = perturbation_terms(g, g2, lam, v, u)
        err = abs(direct - four)
        worst = max(worst, err)
        ok += err <= tol
    return IdentityReport(int(reps), int(ok), worst)
