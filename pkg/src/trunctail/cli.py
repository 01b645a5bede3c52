"""Command-line interface: ``trunctail {estimate,select-k,sample,simulate}``.

Exit codes: 0 success, 2 input or validation error, 3 numeric/degenerate failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import List, Optional, Tuple

import numpy as np

from .empirical import build_sorted
from .estimators import (
    DegenerateEstimateError,
    Estimator,
    TailEstimate,
    asymptotic_sigma2,
    confidence_interval,
    estimate_path,
    hill_estimator,
    hill_path,
    lb_tail_index,
    ratio_tail_index,
    woodroofe_tail_index,
    worms_fixed_threshold,
)
from .models import EmptySampleError, TruncatedSample, TruncationScheme, BurrModel, \
    generate_truncated_sample, solve_gamma2
from .simulation import ExperimentConfig, emit_table, load_config, run_experiment
from .threshold import (
    DEFAULT_MIN_FRACTION,
    DEFAULT_THETA,
    KSelection,
    reiss_thomas_select,
    search_floor,
)

EXIT_INPUT = 2
EXIT_NUMERIC = 3
SEED_ENV = "TRUNCTAIL_SEED"
MIN_ROWS = 5


class InputError(Exception):
    pass


class NumericError(Exception):
    pass


# -- ingestion ---------------------------------------------------------------

def read_pairs(path: str) -> TruncatedSample:
    """Read an ``x,y`` CSV file ('-' for stdin) with line-numbered validation."""
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, newline="", encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    lines = text.splitlines()
    if not lines or [c.strip().lower() for c in lines[0].split(",")] != ["x", "y"]:
        raise InputError(f"{path}:1: expected header 'x,y'")
    xs, ys = [], []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 fields, got {len(fields)}")
        try:
            x, y = (float(f) for f in fields)
        except ValueError:
            raise InputError(f"{path}:{lineno}: not a number: {line.strip()!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"{path}:{lineno}: non-finite value")
        if x <= 0 or y <= 0:
            raise InputError(f"{path}:{lineno}: values must be positive")
        if x > y:
            raise InputError(f"{path}:{lineno}: x > y ({x:g} > {y:g})")
        xs.append(x)
        ys.append(y)
    if len(xs) < MIN_ROWS:
        raise InputError(f"{path}: need at least {MIN_ROWS} rows, got {len(xs)}")
    return TruncatedSample(np.array(xs), np.array(ys))


def _parse_k(text: str):
    if text == "auto":
        return None
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {text!r}") from None
    return k


# -- shared estimation helpers ----------------------------------------------

def _select(path: np.ndarray, n: int, k_min: int, k_max: int, theta: float,
            min_fraction: float) -> KSelection:
    floor = search_floor(n, k_min, k_max, min_fraction)
    return reiss_thomas_select(path, theta, k_min, floor)


def _k_bounds(n: int, args) -> Tuple[int, int]:
    k_min = 2 if args.k_min is None else args.k_min
    k_max = n - 1 if args.k_max is None else args.k_max
    if not 2 <= k_min < k_max <= n - 1 or k_max - k_min < 2:
        raise InputError(f"k range [{k_min}, {k_max}] invalid for n={n}")
    return k_min, k_max


def _check_k(k: int, n: int) -> None:
    if not 2 <= k <= n - 1:
        raise InputError(f"--k must lie in [2, {n - 1}] for n={n}, got {k}")


def _gamma2_plugin(sample: TruncatedSample, theta: float, min_fraction: float):
    """Hill estimate of the Y-tail with a Reiss-Thomas choice of k."""
    n = sample.n
    path = hill_path(sample.y, 2, n - 1)
    sel = _select(path, n, 2, n - 1, theta, min_fraction)
    return sel.gamma_at_k_star, sel.k_star


def _estimate(sample: TruncatedSample, args) -> Tuple[TailEstimate, List[str]]:
    tag = Estimator.parse(args.estimator)
    warnings = []
    s = build_sorted(sample)
    n = s.n
    if tag is Estimator.WORMS_FIXED:
        if args.threshold is None:
            raise InputError("--threshold is required for --estimator worms-fixed")
        try:
            est = worms_fixed_threshold(s, args.threshold)
        except ValueError as exc:
            raise NumericError(str(exc)) from None
    elif tag is Estimator.RATIO:
        if args.k is None:
            kx = _select(hill_path(sample.x), n, 2, n - 1, args.theta, args.min_fraction).k_star
            ky = _select(hill_path(sample.y), n, 2, n - 1, args.theta, args.min_fraction).k_star
        else:
            _check_k(args.k, n)
            kx = ky = args.k
        est = ratio_tail_index(sample, kx, ky)
    elif tag is Estimator.HILL:
        if args.k is None:
            k = _select(hill_path(sample.x), n, 2, n - 1, args.theta, args.min_fraction).k_star
        else:
            _check_k(args.k, n)
            k = args.k
        xs = s.x_order
        est = TailEstimate(hill_estimator(xs, k), Estimator.HILL, k, float(xs[n - k - 1]))
    else:
        if args.k is None:
            path = estimate_path(s, tag)
            k = _select(path, n, 2, n - 1, args.theta, args.min_fraction).k_star
        else:
            _check_k(args.k, n)
            k = args.k
        est = (lb_tail_index if tag is Estimator.LB else woodroofe_tail_index)(s, k)
    if not math.isfinite(est.gamma1_hat):
        raise NumericError("estimate is not finite")
    if est.degenerate_zero_factors:
        warnings.append(f"{est.degenerate_zero_factors} zero Lynden-Bell factor(s) among the "
                        "top order statistics; weights collapse above them")
    return est, warnings


def _with_ci(sample: TruncatedSample, est: TailEstimate, args, warnings):
    info = {"gamma2_hat": None, "sigma2": None}
    if sample.n < MIN_ROWS:
        return est, info
    g2, k2 = _gamma2_plugin(sample, args.theta, args.min_fraction)
    info["gamma2_hat"] = g2
    info["k_y"] = k2
    if not 0 < est.gamma1_hat < g2:
        warnings.append("no confidence interval: plug-in requires 0 < gamma1_hat < gamma2_hat")
        return est, info
    sigma2 = asymptotic_sigma2(est.gamma1_hat, g2)
    info["sigma2"] = sigma2
    k = est.k if est.k is not None else est.diagnostics.get("exceedances")
    lo, hi = confidence_interval(est, sigma2, args.level, k=k)
    return est.with_ci(lo, hi, args.level), info


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def cmd_estimate(args) -> int:
    sample = read_pairs(args.file)
    est, warnings = _estimate(sample, args)
    est, info = _with_ci(sample, est, args, warnings)
    record = {
        "estimator": est.estimator.value,
        "gamma1_hat": est.gamma1_hat,
        "k": est.k,
        "threshold": est.threshold,
        "n": sample.n,
        "gamma2_hat": info["gamma2_hat"],
        "sigma2": info["sigma2"],
        "ci_lower": est.ci[0] if est.ci else None,
        "ci_upper": est.ci[1] if est.ci else None,
        "level": est.ci[2] if est.ci else None,
        "zero_factors": est.degenerate_zero_factors,
    }
    if args.format == "json-lines":
        print(json.dumps(record))
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(record.keys())
        w.writerow(["" if v is None else (v if isinstance(v, (int, str)) else _fmt(v))
                    for v in record.values()])
        sys.stdout.write(buf.getvalue())
    else:
        print(f"estimator   {record['estimator']}")
        print(f"gamma1_hat  {est.gamma1_hat:.6f}")
        if est.k is not None:
            print(f"k           {est.k}")
        else:
            print(f"exceedances {est.diagnostics.get('exceedances')}")
        print(f"threshold   {est.threshold:.6g}")
        print(f"n           {sample.n}")
        if info["gamma2_hat"] is not None:
            print(f"gamma2_hat  {info['gamma2_hat']:.6f}")
        if info["sigma2"] is not None:
            lo, hi, level = est.ci
            print(f"sigma2      {info['sigma2']:.6f}")
            print(f"ci{level:.0%}      [{lo:.6f}, {hi:.6f}]")
    for msg in warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return 0


def cmd_select_k(args) -> int:
    sample = read_pairs(args.file)
    tag = Estimator.parse(args.estimator)
    n = sample.n
    k_min, k_max = _k_bounds(n, args)
    if tag is Estimator.HILL:
        path = hill_path(sample.x, k_min, k_max)
    elif tag in (Estimator.LB, Estimator.W):
        path = estimate_path(build_sorted(sample), tag, k_min, k_max)
    else:
        raise InputError(f"select-k supports lb, w and hill, not {tag.value}")
    sel = _select(path, n, k_min, k_max, args.theta, args.min_fraction)
    if args.path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("k", "gamma1_hat", "criterion"))
        for k, g, c in zip(sel.ks.tolist(), sel.path.tolist(), sel.criterion.tolist()):
            w.writerow((k, repr(g), repr(c)))
        sys.stdout.write(buf.getvalue())
    else:
        print(f"k_star      {sel.k_star}")
        print(f"gamma1_hat  {sel.gamma_at_k_star:.6f}")
        print(f"theta       {sel.theta:g}")
        print(f"k_range     {k_min}..{k_max} (search from {sel.k_floor})")
    return 0


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 42
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def cmd_sample(args) -> int:
    if args.gamma1 is None or not args.gamma1 > 0:
        raise InputError("--gamma1 must be positive")
    if (args.p is None) == (args.gamma2 is None):
        raise InputError("give exactly one of --p and --gamma2")
    if args.p is not None:
        if not 0 < args.p < 1:
            raise InputError("--p must lie in (0, 1)")
        gamma2 = solve_gamma2(args.gamma1, args.p)
    else:
        if not args.gamma2 > 0:
            raise InputError("--gamma2 must be positive")
        gamma2 = args.gamma2
    if not args.delta > 0:
        raise InputError("--delta must be positive")
    if args.N < 1:
        raise InputError("--N must be >= 1")
    seed = _default_seed() if args.seed is None else args.seed
    scheme = TruncationScheme(BurrModel(args.delta, args.gamma1), BurrModel(args.delta, gamma2))
    try:
        sample = generate_truncated_sample(scheme, args.N, seed)
    except EmptySampleError as exc:
        raise NumericError(str(exc)) from None
    out = io.StringIO()
    out.write("x,y\n")
    for x, y in zip(sample.x.tolist(), sample.y.tolist()):
        out.write(f"{x!r},{y!r}\n")
    sys.stdout.write(out.getvalue())
    return 0


def _csv_list(text: str):
    return [v.strip() for v in text.split(",") if v.strip()]


def cmd_simulate(args) -> int:
    overrides = {}
    if args.gamma1 is not None:
        overrides["gamma1"] = args.gamma1
    if args.p is not None:
        overrides["p"] = args.p
    if args.delta is not None:
        overrides["delta"] = args.delta
    if args.sizes is not None:
        try:
            overrides["sizes"] = tuple(int(v) for v in _csv_list(args.sizes))
        except ValueError:
            raise InputError(f"--sizes must be a comma list of integers, got {args.sizes!r}") from None
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.estimators is not None:
        overrides["estimators"] = tuple(_csv_list(args.estimators))
    if args.theta is not None:
        overrides["theta"] = args.theta
    if args.k is not None:
        overrides["fixed_k"] = args.k
    if args.min_fraction is not None:
        overrides["min_fraction"] = args.min_fraction
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
            if "seed" not in overrides and "seed=" not in text.replace(" ", ""):
                overrides["seed"] = _default_seed()
            config = load_config(text, **overrides)
        else:
            if "gamma1" not in overrides or "p" not in overrides:
                raise InputError("--gamma1 and --p are required without --config")
            overrides.setdefault("seed", _default_seed())
            overrides.setdefault("replications", 1000)
            config = ExperimentConfig(**overrides)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc.strerror}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    try:
        table = run_experiment(config, workers=args.workers)
    except RuntimeError as exc:
        raise NumericError(str(exc)) from None
    sys.stdout.write(emit_table(table, args.format))
    for row in table.rows:
        if row.failed or row.degenerate:
            print(f"note: N={row.N} {row.estimator.value}: {row.failed} failed, "
                  f"{row.degenerate} degenerate replications excluded", file=sys.stderr)
    return 0


# -- parser -------------------------------------------------------------------

def _probability(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trunctail",
        description="Tail-index estimation for randomly right-truncated heavy-tailed data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def selection_flags(p):
        p.add_argument("--theta", type=float, default=DEFAULT_THETA,
                       help="Reiss-Thomas weight exponent in [0, 1/2] (default 0.3)")
        p.add_argument("--min-fraction", type=float, default=DEFAULT_MIN_FRACTION,
                       help="search k* from ceil(min_fraction * n) upward (default 0.05)")

    p = sub.add_parser("estimate", help="estimate gamma1 from an x,y CSV file")
    p.add_argument("file")
    p.add_argument("--estimator", default="lb", choices=[e.value for e in Estimator])
    p.add_argument("--k", type=_parse_k, default=None, help="'auto' (default) or an integer")
    p.add_argument("--threshold", type=float, default=None, help="worms-fixed threshold")
    selection_flags(p)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--format", default="text", choices=["text", "csv", "json-lines"])
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("select-k", help="Reiss-Thomas choice of k for an x,y CSV file")
    p.add_argument("file")
    p.add_argument("--estimator", default="lb", choices=["lb", "w", "hill"])
    selection_flags(p)
    p.add_argument("--k-min", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--path", action="store_true", help="print k,gamma1_hat,criterion as CSV")
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("sample", help="draw a Burr-truncated sample as x,y CSV")
    p.add_argument("--gamma1", type=float, required=True)
    p.add_argument("--p", type=_probability, default=None)
    p.add_argument("--gamma2", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 42")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("simulate", help="Monte Carlo bias/rmse table")
    p.add_argument("--config", default=None, help="flat key=value experiment file")
    p.add_argument("--gamma1", type=float, default=None)
    p.add_argument("--p", type=_probability, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--sizes", default=None, help="comma list, e.g. 100,200,500")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 42")
    p.add_argument("--estimators", default=None, help="comma list from lb,w (default lb,w)")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--min-fraction", type=float, default=None)
    p.add_argument("--k", type=int, default=None, help="fixed k instead of Reiss-Thomas")
    p.add_argument("--format", default="csv", choices=["csv", "md", "markdown"])
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, DegenerateEstimateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
