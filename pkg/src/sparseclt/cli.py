"""Command-line runner: ``sparseclt run|validate|oracle-suite|acceptance``.

Experiments are described by flat JSON files, one experiment each. Outputs
are a CSV plus a ``<csv>.json`` sidecar with the config, version and wall
time. Exit codes: 0 success, 1 input error, 2 a checked property failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__, acceptance, cavity, clt, exact, experiments, vlambda
from .csvio import config_hash, write_csv
from .gwtree import RootedTree
from .wgraph import WeightDist, WeightedGraph, neighborhood

OUTPUT_ENV = "SPARSECLT_OUTPUT_DIR"

COMMON = {"experiment": None, "output": None, "workers": 1, "master_seed": 0}

# experiment -> (required keys, optional keys with defaults)
SCHEMAS = {
    "solve": ({"problem"}, {"graph": None, "graph_file": None, "lambda": None}),
    "bracket": ({"problem", "reps"}, {"n": 60, "k_list": [1, 2, 3]}),
    "delta_k": ({"problem", "lambda", "k_list", "n_samples"}, {"dist": None, "quantity": "la"}),
    "vlambda": ({"lambda", "k_max"}, {}),
    "vlambda6": ({"lambda_list"}, {"m": 1024, "k_max": 100}),
    "clt": ({"problem", "n_list", "reps"}, {"lambda": None, "lambda_rule": None}),
    "varprofile": ({"problem", "n_list", "reps"}, {"lambda": None, "lambda_rule": None}),
    "truncation": ({"n", "reps"}, {"factor": clt.EC_LOG_FACTOR}),
    "treeprob": ({"n_list", "lambda", "k", "reps"}, {}),
    "coupling": ({"n_list", "lambda", "k", "reps", "statistic"}, {"n_boot": 200}),
    "identity": ({"n", "lambda", "reps"}, {}),
}

POSITIVE_INT = {"reps", "n", "k_max", "m", "n_samples", "workers", "n_boot"}
NONNEG_INT = {"k"}


class ConfigError(ValueError):
    pass


class CheckFailed(RuntimeError):
    """A property verified by the experiment did not hold."""


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return validate_config(cfg, str(path))


def validate_config(cfg: dict, where: str = "config") -> dict:
    exp = cfg.get("experiment")
    if exp is None:
        raise ConfigError(f"{where}: missing key 'experiment'")
    if exp not in SCHEMAS:
        raise ConfigError(f"{where}: key 'experiment': unknown experiment {exp!r} (expected one of {sorted(SCHEMAS)})")
    required, optional = SCHEMAS[exp]
    allowed = set(COMMON) | required | set(optional)
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r} for experiment {exp!r}")
    for key in sorted(required):
        if key not in cfg:
            raise ConfigError(f"{where}: missing key {key!r} for experiment {exp!r}")
    out = dict(COMMON)
    out.update(optional)
    out.update(cfg)
    for key in POSITIVE_INT:
        if key in cfg and not (isinstance(cfg[key], int) and not isinstance(cfg[key], bool) and cfg[key] > 0):
            raise ConfigError(f"{where}: key {key!r} must be a positive integer")
    for key in NONNEG_INT:
        if key in cfg and not (isinstance(cfg[key], int) and cfg[key] >= 0):
            raise ConfigError(f"{where}: key {key!r} must be a nonnegative integer")
    if "lambda" in cfg and cfg["lambda"] is not None:
        if not (isinstance(cfg["lambda"], (int, float)) and cfg["lambda"] > 0):
            raise ConfigError(f"{where}: key 'lambda' must be a positive number")
    for key in ("n_list", "k_list", "lambda_list"):
        if key in cfg and not (isinstance(cfg[key], list) and cfg[key] and all(isinstance(x, (int, float)) and x > 0 for x in cfg[key])):
            raise ConfigError(f"{where}: key {key!r} must be a nonempty list of positive numbers")
    if exp in ("clt", "varprofile") and out.get("lambda") is None and out.get("lambda_rule") is None:
        raise ConfigError(f"{where}: missing key 'lambda' (or 'lambda_rule') for experiment {exp!r}")
    if out.get("lambda_rule") not in (None, "8logn"):
        raise ConfigError(f"{where}: key 'lambda_rule' must be '8logn'")
    if exp == "solve":
        if (out["graph"] is None) == (out["graph_file"] is None):
            raise ConfigError(f"{where}: experiment 'solve' needs exactly one of 'graph' or 'graph_file'")
        if out["problem"] in ("DMM", "ECdiluted") and out["lambda"] is None:
            raise ConfigError(f"{where}: missing key 'lambda' for problem {out['problem']!r}")
    if "problem" in cfg:
        valid = {
            "solve": exact.PROBLEMS,
            "bracket": ("MWM", "DMM", "ECdiluted"),
            "delta_k": ("MWM", "EC"),
            "clt": exact.PROBLEMS,
            "varprofile": exact.PROBLEMS,
        }[exp]
        if cfg["problem"] not in valid:
            raise ConfigError(f"{where}: key 'problem' must be one of {list(valid)}")
    if exp == "coupling" and cfg["statistic"] not in ("root_degree", "node_count"):
        raise ConfigError(f"{where}: key 'statistic' must be 'root_degree' or 'node_count'")
    if not isinstance(out["master_seed"], int) or out["master_seed"] < 0:
        raise ConfigError(f"{where}: key 'master_seed' must be a nonnegative integer")
    return out


def _lam_for(cfg, n):
    if cfg.get("lambda_rule") == "8logn":
        return clt.ec_lambda_n(n)
    return float(cfg["lambda"])


# ---------------------------------------------------------------------------
# experiments: each returns (header, rows, extra_files, failed_message_or_None)
# ---------------------------------------------------------------------------


def _exp_solve(cfg):
    if cfg["graph"] is not None:
        g = WeightedGraph.from_text(cfg["graph"])
    else:
        g = WeightedGraph.from_text(Path(cfg["graph_file"]).read_text())
    lam = cfg["lambda"]
    sol = exact.solve(cfg["problem"], g, lam)
    try:
        brute = exact.brute_force(cfg["problem"], g, lam)
    except exact.OracleCapError:
        brute = float("nan")
    edges = " ".join(f"{a}-{b}" for a, b in sol.chosen_edges)
    fail = None
    if not math.isnan(brute) and abs(brute - sol.value) > 1e-9:
        fail = f"solver value {sol.value!r} differs from exhaustive search {brute!r}"
    return ("problem", "value", "brute_force", "edges"), [(cfg["problem"], sol.value, brute, edges)], {}, fail


def _exp_bracket(cfg):
    rows = experiments.bracket_trials(cfg["problem"], cfg["reps"], cfg["master_seed"], cfg["n"], tuple(cfg["k_list"]))
    bad = [r for r in rows if not r.inside]
    extra = {}
    if bad:
        # dump counterexample trees for inspection
        lines = []
        for r in bad:
            lines.append(f"# index {r.index} lambda={r.lam!r} k={r.k} lower={r.lower!r} exact={r.exact!r} upper={r.upper!r}")
            lines.append(r.tree)
        extra["counterexamples.txt"] = "\n".join(lines) + "\n"
    fail = f"{len(bad)} of {len(rows)} instances outside the bracket" if bad else None
    return experiments.BracketRow.CSV_HEADER, [r.csv_row() for r in rows], extra, fail


def _dist_for(cfg, problem, lam):
    name = cfg.get("dist") or ("uniform" if problem == "EC" else "exp1")
    if name == "uniform":
        return WeightDist.uniform(lam)
    if name == "exp1":
        return WeightDist.exp1()
    raise ConfigError("key 'dist' must be 'uniform' or 'exp1'")


def _exp_delta_k(cfg):
    lam = float(cfg["lambda"])
    dist = _dist_for(cfg, cfg["problem"], lam)
    rows = [
        cavity.estimate_delta_k(cfg["problem"], int(k), lam, dist, cfg["n_samples"], cfg["master_seed"], cfg["quantity"]).csv_row()
        for k in cfg["k_list"]
    ]
    return cavity.DeltaKEstimate.CSV_HEADER, rows, {}, None


def _exp_vlambda(cfg):
    rep = vlambda.convergence_bound_check(float(cfg["lambda"]), cfg["k_max"])
    fail = None
    if not (rep.all_pass and rep.sandwich_ok):
        fail = "convergence bounds or sandwich violated"
    return rep.CSV_HEADER, rep.csv_rows(), {}, fail


def _exp_vlambda6(cfg):
    rows = [vlambda.matching_operator_iterate(float(l), cfg["m"], cfg["k_max"]).csv_row() for l in cfg["lambda_list"]]
    return vlambda.MatchingOperatorResult.CSV_HEADER, rows, {}, None


def _exp_clt(cfg):
    ks_rows, rep_rows = [], []
    for n in cfg["n_list"]:
        lam = _lam_for(cfg, n)
        recs = clt.run_replicates(cfg["problem"], int(n), lam, cfg["reps"], cfg["master_seed"], cfg["workers"])
        rep_rows.extend(r.csv_row() for r in recs)
        ks = clt.ks_to_normal(recs)
        ks_rows.append((cfg["problem"], int(n), lam, ks.n_reps, ks.ks_distance, ks.mean, ks.sd))
    from .csvio import csv_text

    extra = {"replicates.csv": csv_text(clt.ReplicateRecord.CSV_HEADER, rep_rows)}
    return clt.KSReport.CSV_HEADER, ks_rows, extra, None


def _exp_varprofile(cfg):
    rows = []
    for n in cfg["n_list"]:
        lam = _lam_for(cfg, n)
        r, _ = clt.variance_profile(cfg["problem"], lam, [int(n)], cfg["reps"], cfg["master_seed"], cfg["workers"])
        rows.append(r[0].csv_row())
    return clt.VarianceRow.CSV_HEADER, rows, {}, None


def _exp_truncation(cfg):
    r = clt.ec_truncation_check(cfg["n"], cfg["reps"], cfg["master_seed"], float(cfg["factor"]))
    fail = None if r.equal_4k == r.reps else f"EC differs from EC_4K in {r.reps - r.equal_4k} replicates"
    header = ("n", "reps", "equal_4k", "freq_4k", "lambda_n", "equal_lambda_n", "freq_lambda_n")
    return header, [(r.n, r.reps, r.equal_4k, r.freq_4k, r.lam_n, r.equal_lam_n, r.freq_lam_n)], {}, fail


def _exp_treeprob(cfg):
    rows = []
    for n in cfg["n_list"]:
        e = clt.tree_probability(int(n), float(cfg["lambda"]), cfg["k"], cfg["reps"], cfg["master_seed"])
        rows.append((int(n), float(cfg["lambda"]), cfg["k"], e.reps, e.estimate, e.std_err))
    return ("n", "lambda", "k", "reps", "p_tree", "std_err"), rows, {}, None


def _exp_coupling(cfg):
    rows = []
    for n in cfg["n_list"]:
        t = clt.coupling_statistic_tv(
            int(n), float(cfg["lambda"]), cfg["k"], cfg["reps"], cfg["statistic"], cfg["master_seed"], cfg["n_boot"]
        )
        rows.append((t.n, t.lam, t.k, t.statistic, t.reps, t.tv, t.boot_se))
    return ("n", "lambda", "k", "statistic", "reps", "tv", "boot_se"), rows, {}, None


def _exp_identity(cfg):
    r = clt.perturbation_identity_check(cfg["n"], float(cfg["lambda"]), cfg["reps"], cfg["master_seed"])
    fail = None if r.all_pass else f"identity failed in {r.reps - r.passed} replicates"
    return ("n", "lambda", "reps", "passed", "max_error"), [(cfg["n"], float(cfg["lambda"]), r.reps, r.passed, r.max_error)], {}, fail


RUNNERS = {
    "solve": _exp_solve,
    "bracket": _exp_bracket,
    "delta_k": _exp_delta_k,
    "vlambda": _exp_vlambda,
    "vlambda6": _exp_vlambda6,
    "clt": _exp_clt,
    "varprofile": _exp_varprofile,
    "truncation": _exp_truncation,
    "treeprob": _exp_treeprob,
    "coupling": _exp_coupling,
    "identity": _exp_identity,
}


def output_path(cfg, config_path=None, out_dir=None) -> Path:
    base = Path(out_dir or os.environ.get(OUTPUT_ENV) or ".")
    name = cfg.get("output")
    if not name:
        stem = Path(config_path).stem if config_path else cfg["experiment"]
        name = f"{stem}.csv"
    p = Path(name)
    return p if p.is_absolute() else base / p


def run_config(cfg: dict, out: Path, force: bool = False, echo=print) -> int:
    sidecar = out.with_suffix(out.suffix + ".json")
    digest = config_hash(cfg)
    if not force and out.exists() and sidecar.exists():
        try:
            if json.loads(sidecar.read_text()).get("config_hash") == digest:
                echo(f"up to date: {out}")
                return 0
        except (OSError, json.JSONDecodeError):
            pass
    t0 = time.perf_counter()
    header, rows, extra, fail = RUNNERS[cfg["experiment"]](cfg)
    write_csv(out, header, rows)
    for suffix, text in extra.items():
        out.with_name(f"{out.stem}.{suffix}").write_text(text)
    meta = {
        "config": cfg,
        "config_hash": digest,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "status": "failed" if fail else "ok",
    }
    if fail:
        meta["failure"] = fail
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    echo(f"wrote {out}")
    if fail:
        echo(f"check failed: {fail}")
        return 2
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
        cfg = validate_config(cfg, args.config)
    if args.workers is not None:
        cfg["workers"] = args.workers
    return run_config(cfg, output_path(cfg, args.config, args.out), args.force)


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"ok: {cfg['experiment']} ({args.config})")
    return 0


def _cmd_oracle_suite(args) -> int:
    seed = acceptance.ACCEPTANCE_SEED if args.seed is None else args.seed
    failed = 0
    for prob in exact.PROBLEMS:
        rows = experiments.oracle_trials(prob, args.instances, seed)
        bad = sum(not r.ok() for r in rows)
        failed += bad
        print(f"[{'PASS' if bad == 0 else 'FAIL'}] {prob}: {len(rows) - bad}/{len(rows)} match exhaustive search")
    return 2 if failed else 0


def _cmd_acceptance(args) -> int:
    if args.seed is not None:
        acceptance.ACCEPTANCE_SEED = args.seed
    only = {int(x) for x in args.only.split(",")} if args.only else None
    results = acceptance.run_all(only)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return 2 if n_fail else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparseclt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="override master_seed")
    r.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or cwd)")
    r.add_argument("--workers", type=int)
    r.add_argument("--force", action="store_true", help="rerun even if outputs are up to date")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)

    o = sub.add_parser("oracle-suite", help="compare every solver with exhaustive search")
    o.add_argument("--instances", type=int, default=500)
    o.add_argument("--seed", type=int)
    o.set_defaults(func=_cmd_oracle_suite)

    a = sub.add_parser("acceptance", help="run the acceptance battery")
    a.add_argument("--only", help="comma-separated criterion numbers")
    a.add_argument("--seed", type=int, help="override the acceptance seed")
    a.set_defaults(func=_cmd_acceptance)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, exact.InfeasibleError, exact.OracleCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
