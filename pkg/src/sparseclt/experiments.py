"""Randomised checks shared by the CLI and the acceptance battery.

Each generator returns plain rows so results can be written to CSV as-is.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import cavity, exact
from .gwtree import sample_gw_tree
from .seeding import child_seed, derive_seed, stream
from .wgraph import (
    WeightDist,
    draw_edge_env,
    kn_lambda_p,
    neighborhood,
    resample_edge,
    sample_er_graph,
    sample_kn_lambda,
)

# Absolute slack for comparing an exact cavity value (a difference of two
# optimal sums) against a recursion value; covers summation-order round-off.
FLOAT_SLACK = 1e-9


# ---------------------------------------------------------------------------
# solver vs exhaustive search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleRow:
    problem: str
    index: int
    n: int
    m: int
    lam: float
    solver: float
    oracle: float
    certificate: float

    CSV_HEADER = ("problem", "index", "n", "m", "lambda", "solver", "oracle", "certificate")

    def csv_row(self):
        return (self.problem, self.index, self.n, self.m, self.lam, self.solver, self.oracle, self.certificate)

    def ok(self, tol: float = 1e-9) -> bool:
        return abs(self.solver - self.oracle) <= tol and abs(self.certificate - self.solver) <= tol


def _oracle_instance(problem, rng, seed):
    n = int(rng.integers(2 if problem == "EC" else 1, 9))
    p = float(rng.choice([0.25, 0.5, 0.75, 1.0]))
    lam = float(rng.choice([0.5, 2.0, 8.0]))
    kind = int(rng.integers(3))
    if kind == 0:
        dist = WeightDist.exp1()
    elif kind == 1:
        dist = WeightDist.uniform(1.5 * lam)
    else:
        dist = WeightDist.truncated_scaled_exp(n, lam)
    return sample_er_graph(n, p, dist, seed), lam


def oracle_trials(problem: str, count: int, seed: int) -> list[OracleRow]:
    """``count`` random instances with n <= 8 solved by the reduction and by exhaustive search."""
    rng = stream(seed, f"oracle/{problem}")
    rows = []
    i = 0
    while len(rows) < count:
        g, lam = _oracle_instance(problem, rng, derive_seed(child_seed(seed, problem), i))
        i += 1
        if problem.startswith("EC") and g.m > exact.MAX_SUBSET_EDGES:
            continue
        if problem == "EC" and np.any(g.degree() == 0):
            continue
        lam_arg = lam if problem in ("DMM", "ECdiluted") else None
        sol = exact.solve(problem, g, lam_arg)
        brute = exact.brute_force(problem, g, lam_arg)
        cert = exact.certificate_value(problem, g, sol.chosen_edges, lam_arg)
        rows.append(OracleRow(problem, len(rows), g.n, g.m, lam if lam_arg else float("nan"), sol.value, brute, cert))
    return rows


# ---------------------------------------------------------------------------
# bracket soundness on graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BracketRow:
    problem: str
    index: int
    n: int
    lam: float
    k: int
    lower: float
    exact: float
    upper: float
    oracle_checked: bool
    tree: str = ""  # serialized neighborhood, kept only for rows outside the bracket

    CSV_HEADER = ("problem", "index", "n", "lambda", "k", "lower", "exact", "upper", "inside")

    @property
    def inside(self) -> bool:
        return self.lower - FLOAT_SLACK <= self.exact <= self.upper + FLOAT_SLACK

    def csv_row(self):
        return (self.problem, self.index, self.n, self.lam, self.k, self.lower, self.exact, self.upper, int(self.inside))


BRACKET_LAMBDAS = (1.0, 2.0, 4.0)


def bracket_trials(problem: str, count: int, seed: int, n: int = 60, k_values=(1, 2, 3)) -> list[BracketRow]:
    """Exact cavity value of vertex 0 against its tree bracket, over ``count`` tree-shaped instances.

    MWM uses G(n, lam/n) with Exp(1) weights; DMM and ECdiluted use K_n(lam).
    Instances whose depth-k ball is not a tree are skipped. For ECdiluted,
    every other instance is small enough (n=14) to be cross-checked by
    edge-subset enumeration.
    """
    rows = []
    i = 0
    while len(rows) < count:
        s = derive_seed(child_seed(seed, f"bracket/{problem}"), i)
        k = k_values[i % len(k_values)]
        lam = BRACKET_LAMBDAS[(i // len(k_values)) % len(BRACKET_LAMBDAS)]
        i += 1
        size = 14 if (problem == "ECdiluted" and i % 2 == 0) else n
        if problem == "MWM":
            g = sample_er_graph(size, lam / size, WeightDist.exp1(), s)
        else:
            g = sample_kn_lambda(size, lam, s)
        nb = neighborhood(g, 0, k)
        if not nb.is_tree:
            continue
        checked = False
        if problem == "MWM":
            br = cavity.mwm_bracket(nb)
            h = exact.cavity_mwm(g, 0)
        elif problem == "DMM":
            br = cavity.dmm_cavity_bracket(nb, lam)
            h = exact.cavity_dmm(g, lam, 0)
        elif problem == "ECdiluted":
            br = cavity.ec_cavity_bracket(nb, k, lam)
            h = exact.cavity_ec(g, lam, 0, method="reduction")
            if g.m <= exact.MAX_SUBSET_EDGES:
                hb = exact.cavity_ec(g, lam, 0, method="brute")
                if abs(hb - h) > FLOAT_SLACK:
                    raise AssertionError(f"subset reduction disagrees with enumeration: {h} vs {hb}")
                checked = True
        else:
            raise ValueError(f"unknown problem {problem!r}")
        row = BracketRow(problem, len(rows), size, lam, k, br.lower, h, br.upper, checked)
        if not row.inside:
            row = dataclasses.replace(row, tree=nb.as_tree.to_text())
        rows.append(row)
    return rows


@dataclass(frozen=True)
class LocalApproxRow:
    index: int
    k: int
    b: int
    b2: int
    la_lower: float
    delta: float
    la_upper: float

    CSV_HEADER = ("index", "k", "b", "b2", "la_lower", "delta", "la_upper", "inside")

    @property
    def inside(self) -> bool:
        return self.la_lower <= self.la_upper and self.la_lower - FLOAT_SLACK <= self.delta <= self.la_upper + FLOAT_SLACK

    def csv_row(self):
        return (self.index, self.k, self.b, self.b2, self.la_lower, self.delta, self.la_upper, int(self.inside))


def local_approx_trials(count: int, seed: int, n: int = 40, lam: float = 2.0, k_values=(1, 2, 3)) -> list[LocalApproxRow]:
    """Change of the diluted cover under a single-edge resample against ``[LA^L, LA^U]``."""
    p = kn_lambda_p(n, lam)
    dist = WeightDist.truncated_scaled_exp(n, lam)
    rows = []
    i = 0
    while len(rows) < count:
        s = derive_seed(child_seed(seed, "local-approx"), i)
        k = k_values[i % len(k_values)]
        i += 1
        g = sample_kn_lambda(n, lam, child_seed(s, "graph"))
        rng = stream(s, "edge")
        nbrs = g.neighbors(0)
        # half the time perturb an existing edge, otherwise a random pair
        if nbrs.size and rng.random() < 0.5:
            u = int(rng.choice(nbrs))
        else:
            u = int(rng.integers(1, n))
        env = draw_edge_env(g, 0, u, p, dist, child_seed(s, "env"))
        g2 = resample_edge(g, env)
        B, B2 = neighborhood(g, 0, k), neighborhood(g2, 0, k)
        if not (B.is_tree and B2.is_tree):
            continue
        la = cavity.ec_local_approx(B, B2, env, lam)
        delta = exact.diluted_edge_cover(g, lam).value - exact.diluted_edge_cover(g2, lam).value
        rows.append(LocalApproxRow(len(rows), k, env.b, env.b2, la.la_lower, delta, la.la_upper))
    return rows


# ---------------------------------------------------------------------------
# parity monotonicity on nested truncations
# ---------------------------------------------------------------------------


def parity_trials(count: int, seed: int, lam: float = 2.0, r_max: int = 3):
    """``h_j(root)`` for ``j = 0..2 r_max + 1`` on nested truncations of GW trees.

    Returns an array of shape ``(count, 2 r_max + 2)`` and a boolean vector of
    per-tree verdicts.
    """
    depth = 2 * r_max + 1
    table = np.empty((count, depth + 1))
    ok = np.empty(count, dtype=bool)
    for i in range(count):
        t = sample_gw_tree(depth, lam, WeightDist.exp1(), derive_seed(child_seed(seed, "parity"), i))
        h = np.array([cavity.mwm_cavity(t, j) for j in range(depth + 1)])
        table[i] = h
        odd, even = h[1::2], h[0::2]
        ok[i] = bool(np.all(np.diff(odd) <= 0) and np.all(np.diff(even) >= 0) and np.all(even <= odd))
    return table, ok


# ---------------------------------------------------------------------------
# statistics helpers
# ---------------------------------------------------------------------------


def ols_slope(x, y, y_se):
    """Least-squares slope of ``y`` on ``x`` and its standard error given per-point SEs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = (x - x.mean()) / np.sum((x - x.mean()) ** 2)
    return float(np.sum(c * y)), float(math.sqrt(np.sum((c * np.asarray(y_se)) ** 2)))
