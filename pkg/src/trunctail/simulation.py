"""Monte Carlo study of tail-index estimators on Burr-truncated samples.

Each replication is labelled ``(N, rep)`` and seeded from that label alone,
so results do not depend on how replications are distributed over workers.
Aggregation sorts by label before reducing.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .empirical import build_sorted
from .estimators import Estimator, lb_tail_index, woodroofe_tail_index
from .models import EmptySampleError, TruncationScheme, generate_truncated_sample
from .rng import replication_seed
from .threshold import DEFAULT_MIN_FRACTION, DEFAULT_THETA, select_k_for

__all__ = [
    "ExperimentConfig",
    "EstimatorOutcome",
    "ReplicationResult",
    "SummaryRow",
    "SummaryTable",
    "run_replication",
    "run_experiment",
    "aggregate",
    "emit_table",
    "parse_csv_table",
    "load_config",
    "dump_config",
]

log = logging.getLogger(__name__)

MIN_OBSERVED = 5
SIM_ESTIMATORS = (Estimator.LB, Estimator.W)
_POINT = {Estimator.LB: lb_tail_index, Estimator.W: woodroofe_tail_index}


@dataclass(frozen=True)
class ExperimentConfig:
    gamma1: float
    p: float
    delta: float = 0.25
    sizes: Tuple[int, ...] = (100, 200, 300, 500, 1000, 3000, 5000)
    replications: int = 1000
    seed: int = 42
    estimators: Tuple[Estimator, ...] = SIM_ESTIMATORS
    theta: float = DEFAULT_THETA
    fixed_k: Optional[int] = None  # bypasses threshold selection when set
    min_fraction: float = DEFAULT_MIN_FRACTION

    def __post_init__(self):
        if not self.gamma1 > 0:
            raise ValueError(f"gamma1 must be positive, got {self.gamma1}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        sizes = tuple(int(N) for N in self.sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("sizes must be a nonempty list of positive counts")
        ests = tuple(Estimator.parse(e) for e in self.estimators)
        for e in ests:
            if e not in _POINT:
                raise ValueError(f"estimator {e.value!r} is not available in simulations")
        if not ests:
            raise ValueError("no estimators requested")
        if not 0 <= self.theta <= 0.5:
            raise ValueError(f"theta must lie in [0, 1/2], got {self.theta}")
        if self.fixed_k is not None and self.fixed_k < 2:
            raise ValueError("fixed_k must be >= 2")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "estimators", ests)

    @property
    def scheme(self) -> TruncationScheme:
        return TruncationScheme.from_p(self.gamma1, self.p, self.delta)


@dataclass(frozen=True)
class EstimatorOutcome:
    gamma1_hat: float
    k: int
    zero_factors: int
    degenerate: bool


@dataclass(frozen=True)
class ReplicationResult:
    N: int
    rep: int
    n: int
    outcomes: Dict[Estimator, EstimatorOutcome] = field(default_factory=dict)
    failed: bool = False


def run_replication(config: ExperimentConfig, N: int, rep: int) -> ReplicationResult:
    """Generate one truncated sample and estimate gamma1 with every requested estimator.

    A replication with fewer than 5 observed pairs is marked failed.  An
    estimate is degenerate when some observation among the top k+1 is
    bracketed by its own pair only (n C_n = 1): the Lynden-Bell product then
    has a zero factor and the weights collapse onto the observations above it.
    """
    seed = replication_seed(config.seed, N, rep)
    try:
        sample = generate_truncated_sample(config.scheme, N, seed)
    except EmptySampleError:
        return ReplicationResult(N, rep, 0, failed=True)
    if sample.n < MIN_OBSERVED or (config.fixed_k is not None and config.fixed_k > sample.n - 1):
        return ReplicationResult(N, rep, sample.n, failed=True)
    s = build_sorted(sample)
    outcomes = {}
    for tag in config.estimators:
        if config.fixed_k is None:
            k = select_k_for(s, tag, config.theta, min_fraction=config.min_fraction).k_star
        else:
            k = config.fixed_k
        est = _POINT[tag](s, k)
        zeros = s.n_zero_factors_above(s.n - k - 1)
        ok = zeros == 0 and math.isfinite(est.gamma1_hat)
        outcomes[tag] = EstimatorOutcome(est.gamma1_hat, k, zeros, not ok)
    return ReplicationResult(N, rep, sample.n, outcomes)


def _run_chunk(args):
    config, labels = args
    return [run_replication(config, N, rep) for N, rep in labels]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SummaryRow:
    N: int
    n: int
    estimator: Estimator
    abs_bias: float
    rmse: float
    k_star: int
    used: Optional[int] = None
    failed: Optional[int] = None
    degenerate: Optional[int] = None

    def csv_fields(self):
        return (self.N, self.n, self.estimator.value, f"{self.abs_bias:.4f}",
                f"{self.rmse:.4f}", self.k_star)


@dataclass(frozen=True)
class SummaryTable:
    rows: Tuple[SummaryRow, ...]
    gamma1: Optional[float] = None
    p: Optional[float] = None

    def row(self, N: int, estimator) -> SummaryRow:
        tag = Estimator.parse(estimator)
        for r in self.rows:
            if r.N == N and r.estimator is tag:
                return r
        raise KeyError((N, tag))


def aggregate(config: ExperimentConfig, results: Sequence[ReplicationResult]) -> SummaryTable:
    """Reduce replications into one row per (estimator, N).

    abs bias is |mean(gamma1_hat) - gamma1|; rmse is sqrt(mean((gamma1_hat - gamma1)**2)).
    Failed replications and degenerate estimates are excluded and counted.
    """
    by_N: Dict[int, List[ReplicationResult]] = {}
    for res in sorted(results, key=lambda r: (r.N, r.rep)):
        by_N.setdefault(res.N, []).append(res)
    rows = []
    for tag in config.estimators:
        for N in config.sizes:
            reps = by_N.get(N, [])
            ok = [r for r in reps if not r.failed]
            n_failed = len(reps) - len(ok)
            used = [r.outcomes[tag] for r in ok if not r.outcomes[tag].degenerate]
            if not used:
                raise RuntimeError(f"every replication failed for N={N}, estimator {tag.value}")
            g = np.array([o.gamma1_hat for o in used])
            err = g - config.gamma1
            rows.append(SummaryRow(
                N=N,
                n=_round_half_up(float(np.mean([r.n for r in ok]))),
                estimator=tag,
                abs_bias=abs(float(np.mean(err))),
                rmse=float(np.sqrt(np.mean(err ** 2))),
                k_star=_round_half_up(float(np.mean([o.k for o in used]))),
                used=len(used),
                failed=n_failed,
                degenerate=len(ok) - len(used),
            ))
    return SummaryTable(tuple(rows), config.gamma1, config.p)


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   return_replications: bool = False):
    """Run every (N, rep) replication and aggregate into a :class:`SummaryTable`."""
    labels = [(N, rep) for N in config.sizes for rep in range(config.replications)]
    if workers <= 1:
        results = [run_replication(config, N, rep) for N, rep in labels]
    else:
        size = max(1, len(labels) // (4 * workers))
        chunks = [(config, labels[i:i + size]) for i in range(0, len(labels), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for chunk in pool.map(_run_chunk, chunks) for r in chunk]
    table = aggregate(config, results)
    for row in table.rows:
        if row.failed or row.degenerate:
            log.info("N=%d %s: %d failed, %d degenerate of %d", row.N, row.estimator.value,
                     row.failed, row.degenerate, config.replications)
    if return_replications:
        return table, results
    return table


CSV_HEADER = ("N", "n", "estimator", "abs_bias", "rmse", "k_star")
_MD_NAMES = {Estimator.LB: "Lynden-Bell (LB)", Estimator.W: "Woodroofe (W)"}


def emit_table(table: SummaryTable, fmt: str = "csv") -> str:
    """Render a summary table as ``csv`` or ``markdown`` (alias ``md``)."""
    if not table.rows:
        raise ValueError("empty summary table")
    order = []
    for r in table.rows:
        if r.estimator not in order:
            order.append(r.estimator)
    rows = sorted(table.rows, key=lambda r: (order.index(r.estimator), r.N))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()
    if fmt in ("md", "markdown"):
        out = []
        if table.gamma1 is not None:
            out.append(f"gamma1 = {table.gamma1:g}; p = {table.p:g}\n")
        for tag in order:
            out.append(f"### {_MD_NAMES.get(tag, tag.value)}\n")
            out.append("| N | n | abs bias | rmse | k* |")
            out.append("|---:|---:|---:|---:|---:|")
            excluded = []
            for r in rows:
                if r.estimator is tag:
                    out.append(f"| {r.N} | {r.n} | {r.abs_bias:.4f} | {r.rmse:.4f} | {r.k_star} |")
                    if r.failed or r.degenerate:
                        excluded.append(f"N={r.N}: {r.failed} failed, {r.degenerate} degenerate")
            if excluded:
                out.append("\nExcluded: " + "; ".join(excluded))
            out.append("")
        return "\n".join(out)
    raise ValueError(f"unknown table format {fmt!r}")


def parse_csv_table(text: str) -> SummaryTable:
    """Inverse of ``emit_table(..., 'csv')``; floats come back at 4-decimal precision."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        N, n, est, bias, rmse, k = rec
        rows.append(SummaryRow(int(N), int(n), Estimator.parse(est), float(bias), float(rmse), int(k)))
    return SummaryTable(tuple(rows))


_CONFIG_KEYS = ("gamma1", "p", "delta", "sizes", "reps", "seed", "estimators", "theta")


def load_config(text: str, **overrides) -> ExperimentConfig:
    """Parse a flat ``key=value`` experiment file (``#`` starts a comment)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value
    kw = {}
    if "gamma1" in raw:
        kw["gamma1"] = float(raw["gamma1"])
    if "p" in raw:
        kw["p"] = float(raw["p"])
    if "delta" in raw:
        kw["delta"] = float(raw["delta"])
    if "sizes" in raw:
        kw["sizes"] = tuple(int(v) for v in raw["sizes"].split(",") if v.strip())
    if "reps" in raw:
        kw["replications"] = int(raw["reps"])
    if "seed" in raw:
        kw["seed"] = int(raw["seed"])
    if "estimators" in raw:
        kw["estimators"] = tuple(v.strip() for v in raw["estimators"].split(",") if v.strip())
    if "theta" in raw:
        kw["theta"] = float(raw["theta"])
    kw.update(overrides)
    return ExperimentConfig(**kw)


def dump_config(config: ExperimentConfig) -> str:
    return "\n".join([
        f"gamma1={config.gamma1!r}",
        f"p={config.p!r}",
        f"delta={config.delta!r}",
        "sizes=" + ",".join(str(N) for N in config.sizes),
        f"reps={config.replications}",
        f"seed={config.seed}",
        "estimators=" + ",".join(e.value for e in config.estimators),
        f"theta={config.theta!r}",
    ]) + "\n"
