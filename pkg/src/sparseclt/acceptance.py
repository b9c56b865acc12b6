"""Acceptance battery: one function per criterion, each returning a :class:`CriterionResult`.

All randomness flows from ``ACCEPTANCE_SEED``; the CLT ladder uses it
directly as the replicate master seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import cavity, clt, experiments, vlambda
from .seeding import child_seed
from .wgraph import WeightDist

ACCEPTANCE_SEED = 20240


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    parts: dict = field(default_factory=dict)  # sub-check name -> bool
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.cid:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _finish(cid, name, parts: dict, notes: list, t0) -> CriterionResult:
    failed = [k for k, v in parts.items() if not v]
    detail = "; ".join(notes)
    if failed:
        detail = "failed: " + ", ".join(failed) + " | " + detail
    return CriterionResult(cid, name, not failed, detail, parts, time.perf_counter() - t0)


def _seed(cid):
    return child_seed(ACCEPTANCE_SEED, f"criterion-{cid}")


def criterion_1(count: int = 500) -> CriterionResult:
    t0 = time.perf_counter()
    parts, notes = {}, []
    for prob in ("MWM", "DMM", "EC", "ECdiluted"):
        rows = experiments.oracle_trials(prob, count, _seed(1))
        bad = sum(not r.ok() for r in rows)
        worst = max(abs(r.solver - r.oracle) for r in rows)
        parts[f"{prob} oracle equality"] = bad == 0 and len(rows) >= count
        notes.append(f"{prob} {len(rows) - bad}/{len(rows)} max|diff|={worst:.1e}")
    return _finish(1, "oracle equivalence", parts, notes, t0)


def criterion_2(count: int = 1000) -> CriterionResult:
    t0 = time.perf_counter()
    parts, notes = {}, []
    for prob in ("MWM", "DMM", "ECdiluted"):
        rows = experiments.bracket_trials(prob, count, _seed(2))
        bad = sum(not r.inside for r in rows)
        parts[f"{prob} bracket"] = bad == 0
        extra = f" ({sum(r.oracle_checked for r in rows)} enumerated)" if prob == "ECdiluted" else ""
        notes.append(f"{prob} {len(rows) - bad}/{len(rows)} inside{extra}")
    rows = experiments.local_approx_trials(count, _seed(2))
    bad = sum(not r.inside for r in rows)
    parts["EC local approximation"] = bad == 0
    notes.append(f"LA {len(rows) - bad}/{len(rows)} inside")
    return _finish(2, "bracket soundness", parts, notes, t0)


def criterion_3(count: int = 1000) -> CriterionResult:
    t0 = time.perf_counter()
    _, ok = experiments.parity_trials(count, _seed(3))
    parts = {"parity monotonicity": bool(ok.all())}
    return _finish(3, "MWM parity monotonicity", parts, [f"{int(ok.sum())}/{ok.size} trees"], t0)


def _nonincreasing(ests) -> bool:
    return all(
        b.mean_sq <= a.mean_sq + 2 * math.hypot(a.std_err, b.std_err) for a, b in zip(ests[:-1], ests[1:])
    )


def delta_k_tables(n_samples: int = 10_000, lam: float = 2.0):
    ec = [cavity.estimate_delta_k("EC", k, lam, WeightDist.uniform(lam), n_samples, _seed(4)) for k in range(1, 9)]
    mwm = [cavity.estimate_delta_k("MWM", 2 * r + 1, lam, WeightDist.exp1(), n_samples, _seed(4)) for r in range(1, 5)]
    return ec, mwm


def criterion_4(n_samples: int = 10_000) -> CriterionResult:
    t0 = time.perf_counter()
    lam = 2.0
    ec, mwm = delta_k_tables(n_samples, lam)
    A2 = vlambda.fixed_point_A(lam)
    slope, se = experiments.ols_slope(
        [e.k for e in ec], [math.log(e.mean_sq) for e in ec], [e.std_err / e.mean_sq for e in ec]
    )
    parts = {
        "EC nonincreasing": _nonincreasing(ec),
        "MWM nonincreasing": _nonincreasing(mwm),
        "EC log-slope": slope < 0 and -slope >= A2 / 2 - 3 * se,
    }
    notes = [
        "EC " + " ".join(f"{e.mean_sq:.3g}" for e in ec),
        "MWM " + " ".join(f"{e.mean_sq:.3g}" for e in mwm),
        f"slope={slope:.3f}±{se:.3f} vs A2/2={A2 / 2:.3f}",
    ]
    return _finish(4, "delta_k decay", parts, notes, t0)


def criterion_5() -> CriterionResult:
    t0 = time.perf_counter()
    grid = (0.5, 1.0, 2.0, 8.0, 32.0)
    parts = {}
    As = []
    worst_ratio = 0.0
    for lam in grid:
        A = vlambda.fixed_point_A(lam, 1e-13)
        As.append(A)
        resid = abs(A - math.exp(-A) * -math.expm1(-lam / 2))
        rep = vlambda.convergence_bound_check(lam, 60)
        parts[f"residual lam={lam:g}"] = resid < 1e-12
        parts[f"sandwich lam={lam:g}"] = rep.sandwich_ok
        parts[f"bounds lam={lam:g}"] = rep.all_pass
        err = abs(rep.two_step_ratio - A * A)
        worst_ratio = max(worst_ratio, err)
        parts[f"two-step ratio lam={lam:g}"] = err < 1e-6
    parts["A increasing in lam"] = all(b > a for a, b in zip(As[:-1], As[1:]))
    A_inf = vlambda.fixed_point_A(math.inf)
    parts["A_inf"] = abs(A_inf - 0.5671432904) <= 1e-9
    notes = ["A=" + ",".join(f"{a:.6f}" for a in As), f"max|ratio-A^2|={worst_ratio:.1e}", f"A_inf={A_inf:.10f}"]
    return _finish(5, "V_lambda scalar analysis", parts, notes, t0)


def criterion_6() -> CriterionResult:
    t0 = time.perf_counter()
    lams = (1.0, 4.0, 16.0, 64.0)
    alphas = [vlambda.matching_operator_iterate(lam, 1024, 100).alpha_hat for lam in lams]
    parts = {
        "alpha strictly increasing": all(b > a for a, b in zip(alphas[:-1], alphas[1:])),
        "alpha(64) > alpha(1)": alphas[-1] > alphas[0],
    }
    return _finish(6, "matching operator contraction sweep", parts, ["alpha=" + ",".join(f"{a:.6g}" for a in alphas)], t0)


def criterion_7() -> CriterionResult:
    t0 = time.perf_counter()
    a = clt.ec_truncation_check(50, 200, _seed(7))
    b = clt.ec_truncation_check(100, 200, child_seed(_seed(7), "n100"))
    parts = {"EC = EC_4K at n=50": a.equal_4k == a.reps, "EC_{8 log n} = EC at n=100": b.freq_lam_n >= 0.99}
    notes = [f"n=50 4K {a.equal_4k}/{a.reps}", f"n=100 lam_n={b.lam_n:.2f} {b.equal_lam_n}/{b.reps}"]
    return _finish(7, "EC truncation", parts, notes, t0)


def criterion_8() -> CriterionResult:
    t0 = time.perf_counter()
    rep = clt.perturbation_identity_check(6, 2.0, 500, _seed(8))
    parts = {"identity": rep.all_pass}
    return _finish(8, "perturbation identity", parts, [f"{rep.passed}/{rep.reps} max err {rep.max_error:.1e}"], t0)


def clt_ladders(master_seed: int = ACCEPTANCE_SEED, reps: int = 2000, workers: int = 1):
    """KS reports and variance rows for the three ladders."""
    out = {}
    for prob in ("MWM", "DMM"):
        out[prob] = []
        for n in (100, 400, 1600):
            vals = [r.value for r in clt.run_replicates(prob, n, 2.0, reps, master_seed, workers)]
            out[prob].append((n, 2.0, clt.ks_to_normal(vals), float(np.var(vals, ddof=1))))
    out["ECdiluted"] = []
    for n in (50, 100, 200):
        lam = clt.ec_lambda_n(n)
        vals = [r.value for r in clt.run_replicates("ECdiluted", n, lam, reps, master_seed, workers)]
        out["ECdiluted"].append((n, lam, clt.ks_to_normal(vals), float(np.var(vals, ddof=1))))
    return out


def criterion_9(ladders=None) -> CriterionResult:
    t0 = time.perf_counter()
    ladders = clt_ladders() if ladders is None else ladders
    parts, notes = {}, []
    for prob, rows in ladders.items():
        ks = [r[2].ks_distance for r in rows]
        vn = [r[3] / r[0] for r in rows]
        ratios = [b / a for a, b in zip(vn[:-1], vn[1:])]
        if prob in ("MWM", "DMM"):
            parts[f"{prob} KS nonincreasing along ladder"] = all(b <= a for a, b in zip(ks[:-1], ks[1:]))
            parts[f"{prob} KS<0.06 at n=1600"] = ks[-1] < 0.06
        else:
            parts["EC_lambda KS<0.08 at n=200"] = ks[-1] < 0.08
        parts[f"{prob} var/n ratios"] = all(v > 0 for v in vn) and all(0.5 <= r <= 2 for r in ratios)
        notes.append(f"{prob} KS " + "/".join(f"{x:.4f}" for x in ks) + " var/n " + "/".join(f"{x:.3f}" for x in vn))
    return _finish(9, "CLT at desk scale", parts, notes, t0)


def criterion_10() -> CriterionResult:
    t0 = time.perf_counter()
    s = _seed(10)
    a = clt.tree_probability(500, 2.0, 2, 5000, child_seed(s, "tree500"))
    b = clt.tree_probability(1000, 2.0, 2, 5000, child_seed(s, "tree1000"))
    fa, fb = 1 - a.estimate, 1 - b.estimate
    ratio = fb / fa if fa > 0 else float("nan")
    se = ratio * math.hypot(a.std_err / fa, b.std_err / fb) if fa > 0 and fb > 0 else float("inf")
    tvs = [clt.coupling_statistic_tv(n, 2.0, 2, 10_000, "node_count", child_seed(s, "coupling")) for n in (250, 1000, 4000)]
    parts = {
        "tree failure ratio in [0.25,1]": ratio + 2 * se >= 0.25 and ratio - 2 * se <= 1.0,
        "coupling TV decreasing": all(y.tv <= x.tv + 2 * math.hypot(x.boot_se, y.boot_se) for x, y in zip(tvs[:-1], tvs[1:])),
    }
    notes = [
        f"non-tree rate {fa:.4f}->{fb:.4f} ratio {ratio:.3f}±{se:.3f}",
        "TV " + "/".join(f"{t.tv:.4f}±{t.boot_se:.4f}" for t in tvs),
    ]
    return _finish(10, "neighborhood diagnostics", parts, notes, t0)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}


def run_all(only=None, echo=print) -> list[CriterionResult]:
    results = []
    for cid, fn in CRITERIA.items():
        if only and cid not in only:
            continue
        res = fn()
        results.append(res)
        if echo:
            echo(res.line())
    return results
