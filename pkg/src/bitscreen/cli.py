"""Command-line interface: ``bitscreen {screen,simulate,oracle-check,formats}``.

Exit codes: 0 success, 1 numerical breakdown (partial result written) or a
failed oracle check, 2 input error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from contextlib import nullcontext
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import io
from .exceptions import BitsError, ConfigError, InputError, NumericalBreakdown
from .simulation import SimConfig, canonical_setting

THREADS_ENV = "BITSCREEN_THREADS"

EXIT_OK, EXIT_BREAKDOWN, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2, 3


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _thread_limit(n):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return nullcontext()
    return threadpool_limits(limits=n)


def _load_xy(args):
    Z, names = io.read_design(args.X)
    y = io.read_response(args.y)
    io.check_shapes(Z, y)
    return Z, y, names


def _hyper_from_args(args, n, p):
    from .posterior import Hyperparams
    from .simulation import resolve_lambda

    return Hyperparams(resolve_lambda(args.lam, n, p), args.w)


def cmd_screen(args) -> int:
    from .baselines import fr_screen, holp_rank, sis_rank
    from .design import center_response, standardize
    from .engine import bits_screen, default_max_steps
    from .stopping import StopRule, ebic_decide, ebic_default_cap

    Z, y, names = _load_xy(args)
    design = standardize(Z)
    response = center_response(y)
    rule = StopRule(args.stop, size=args.size)
    if args.method == "bits":
        hyper = _hyper_from_args(args, design.n, design.p)
        res = bits_screen(design, response, hyper, rule, args.max_steps)
        payload = {"method": "bits", "lambda": hyper.lam, "w": hyper.w, **res.to_dict()}
        trace = res.pi_trace
    else:
        if args.stop not in ("fixed", "ebic"):
            raise ConfigError(f"--stop {args.stop} applies to bits only; use fixed or ebic with {args.method}")
        cap = default_max_steps(design) if args.max_steps is None else min(args.max_steps, default_max_steps(design))
        if args.method == "sis":
            base = sis_rank(design, response)
        elif args.method == "holp":
            base = holp_rank(design, response)
        else:
            base = fr_screen(design, response, cap)
        order = [int(j) for j in base.ranking]
        if args.stop == "fixed":
            size = design.n if args.size is None else args.size
            selected, reason = order[:size], "fixed-size"
        else:
            k = min(len(order), ebic_default_cap(design.n) if args.max_steps is None else cap)
            selected, reason = order[: ebic_decide(design, response, order, k)], "ebic-minimum"
        payload = {
            "method": args.method,
            "path": order,
            "scores": [float(s) for s in base.scores],
            "pi_trace": [],
            "selected": selected,
            "stop_reason": reason,
            "timings": [],
        }
        trace = None
    if names:
        payload["selected_names"] = [names[j] for j in payload["selected"]]
    text = json.dumps(io.round_floats(payload), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        io.write_path_csv(args.csv, payload["path"], trace, names)
    return EXIT_OK


_CFG_KEYS = {f.name for f in fields(SimConfig)}
_RUN_KEYS = {"methods", "rules", "w", "jobs"}


def load_sim_config(path):
    """Parse an ``[experiment]`` key-value file into (SimConfig, run options)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")
    sect = parser["experiment"]
    unknown = set(sect) - _CFG_KEYS - _RUN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}; valid keys: {sorted(_CFG_KEYS | _RUN_KEYS)}")
    kw = {}
    ints = {"n", "p", "k_factors", "n_true", "replications", "seed"}
    floats = {"rho", "r_squared", "beta_value"}
    if "setting" in sect:
        kw["setting"] = canonical_setting(sect["setting"])
    for key in (ints | floats) & set(sect):
        raw = sect[key].strip()
        try:
            kw[key] = int(raw) if key in ints else float(raw)
        except ValueError:
            raise ConfigError(f"{path}: {key} = {raw!r} is not a valid number") from None
    cfg = SimConfig(**kw)
    opts = {
        "methods": [m.strip() for m in sect.get("methods", "bits:p/n").split(",") if m.strip()],
        "rules": [r.strip() for r in sect.get("rules", "n").split(",") if r.strip()],
        "w": float(sect.get("w", "0.1")),
        "jobs": int(sect.get("jobs", "1")),
    }
    return cfg, opts


def cmd_simulate(args) -> int:
    from dataclasses import replace

    from .simulation import run_experiment

    cfg, opts = load_sim_config(args.config)
    if args.reps is not None:
        cfg = replace(cfg, replications=args.reps)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    report = run_experiment(cfg, opts["methods"], opts["rules"], w=opts["w"], n_jobs=args.jobs or opts["jobs"])
    out_csv = args.out_csv or (None if args.out_json else "-")
    if out_csv == "-":
        import csv

        w = csv.DictWriter(sys.stdout, fieldnames=list(report.COLUMNS), extrasaction="ignore")
        w.writeheader()
        for r in report.rows:
            w.writerow({k: (io.FLOAT_FORMAT.format(v) if isinstance(v, float) else v) for k, v in r.items()})
    elif out_csv:
        report.to_csv(out_csv)
    if args.out_json:
        report.to_json(args.out_json)
    failed = sum(r["failures"] for r in report.rows)
    if failed:
        print(f"warning: {failed} method/replication run(s) failed and were excluded", file=sys.stderr)
    return EXIT_OK


def oracle_check(Z, y, lam, w, steps, *, oracle_lam=None, max_p=None, tol=1e-8) -> dict:
    """Compare the fast engine with the exhaustive oracle on one dataset."""
    from .design import center_response, standardize
    from .engine import greedy_path
    from .posterior import ORACLE_MAX_P, Hyperparams, oracle_greedy_path

    design = standardize(Z)
    response = center_response(y)
    max_p = ORACLE_MAX_P if max_p is None else max_p
    if design.p > max_p:
        raise ConfigError(
            f"oracle check refuses p={design.p} > {max_p}: the exhaustive oracle costs O(steps*p*k^3). "
            "Subsample columns or pass --max-p explicitly."
        )
    steps = min(steps, design.n - 1, design.n_admissible)
    fast, _ = greedy_path(design, response, Hyperparams(lam, w), steps)
    oracle = oracle_greedy_path(design, response, Hyperparams(lam if oracle_lam is None else oracle_lam, w), steps, max_p=max_p)
    null = oracle.trace[0]
    fast_inc = np.diff([null] + fast.pi_trace)
    oracle_inc = np.diff(oracle.trace)
    first_bad = None
    max_diff = 0.0
    for k in range(max(len(fast.path), len(oracle.path))):
        same_idx = k < len(fast.path) and k < len(oracle.path) and fast.path[k] == oracle.path[k]
        diff = abs(fast_inc[k] - oracle_inc[k]) if same_idx else math.inf
        max_diff = max(max_diff, diff)
        if first_bad is None and not diff < tol:
            first_bad = k + 1
    return {
        "status": "PASS" if first_bad is None else "FAIL",
        "steps": steps,
        "fast_path": list(fast.path),
        "oracle_path": list(oracle.path),
        "max_abs_increment_diff": max_diff,
        "first_divergent_step": first_bad,
        "tolerance": tol,
    }


def cmd_oracle_check(args) -> int:
    from .simulation import resolve_lambda

    Z, y, _ = _load_xy(args)
    n, p = Z.shape
    lam = resolve_lambda(args.lam, n, p)
    oracle_lam = None if args.oracle_lam is None else resolve_lambda(args.oracle_lam, n, p)
    report = oracle_check(Z, y, lam, args.w, args.steps, oracle_lam=oracle_lam, max_p=args.max_p)
    print(f"{report['status']}: steps={report['steps']} max|dpi|={report['max_abs_increment_diff']:.3e}"
          + ("" if report["first_divergent_step"] is None else f" first divergent step={report['first_divergent_step']}"))
    print(f"  fast   path: {report['fast_path']}")
    print(f"  oracle path: {report['oracle_path']}")
    return EXIT_OK if report["status"] == "PASS" else EXIT_BREAKDOWN


def cmd_formats(args) -> int:
    sys.stdout.write(io.FORMATS_HELP)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bitscreen", description="Bayesian iterative screening for high-dimensional regression.")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"BLAS threads (default: ${THREADS_ENV} or all cores; 1 = reference serial run)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_xy(p):
        p.add_argument("-X", required=True, help="design file (.csv, .tsv or .mtx)")
        p.add_argument("-y", required=True, help="response file, one value per line")
        p.add_argument("--lambda", dest="lam", default="p/n", help="ridge penalty: number or p/n, nlogn/p, n/p (default: p/n)")
        p.add_argument("--w", type=float, default=0.1, help="prior inclusion probability (default: 0.1)")

    s = sub.add_parser("screen", help="screen one dataset")
    add_xy(s)
    s.add_argument("--method", choices=["bits", "sis", "holp", "fr"], default="bits", help="(default: bits)")
    s.add_argument("--stop", choices=["fixed", "pp", "pp-largest-drop", "ebic"], default="fixed", help="(default: fixed)")
    s.add_argument("--size", type=int, default=None, help="model size for --stop fixed (default: n)")
    s.add_argument("--max-steps", type=int, default=None, help="path length cap (default: min(n-1, #columns))")
    s.add_argument("--out", default=None, help="JSON result file (default: stdout)")
    s.add_argument("--csv", default=None, help="also write rank,column_index,column_name,log_posterior CSV")
    s.set_defaults(func=cmd_screen)

    m = sub.add_parser("simulate", help="run a simulation config")
    m.add_argument("config", help="key-value config file ([experiment] section)")
    m.add_argument("--out-csv", default=None, help="report CSV (default: stdout)")
    m.add_argument("--out-json", default=None, help="report JSON")
    m.add_argument("--reps", type=int, default=None, help="override replications")
    m.add_argument("--seed", type=int, default=None, help="override master seed")
    m.add_argument("--jobs", type=int, default=None, help="parallel replications (default: config or 1)")
    m.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle-check", help="certify the fast engine against the exhaustive oracle")
    add_xy(o)
    o.add_argument("--steps", type=int, default=6, help="(default: 6)")
    o.add_argument("--oracle-lambda", dest="oracle_lam", default=None, help="lambda for the oracle run (default: same)")
    o.add_argument("--max-p", type=int, default=None, help="oracle width cap (default: 5000)")
    o.set_defaults(func=cmd_oracle_check)

    f = sub.add_parser("formats", help="describe input/output formats")
    f.set_defaults(func=cmd_formats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = args.threads or _default_threads()
    try:
        with _thread_limit(threads):
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalBreakdown as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except BitsError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
