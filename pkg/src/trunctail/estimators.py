"""Tail-index estimators for randomly right-truncated heavy-tailed data.

The product-limit based estimators are convex combinations of log-spacings
above the random threshold X_{n-k:n}:

    gamma1_hat = sum_{i=1..k} a_i log(X_{n-i+1:n} / X_{n-k:n}),
    a_i proportional to F(X_{n-i+1:n}) / C_n(X_{n-i+1:n}),

with F the Lynden-Bell (``LB``) or Woodroofe (``W``) estimate of the latent
df.  For complete data C_n = F_n = F_LB, all a_i equal 1/k and the Hill
estimator is recovered.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from .empirical import SortedSample
from .models import TruncatedSample

__all__ = [
    "Estimator",
    "TailEstimate",
    "DegenerateEstimateError",
    "hill_estimator",
    "hill_path",
    "lb_weights",
    "w_weights",
    "lb_tail_index",
    "woodroofe_tail_index",
    "worms_fixed_threshold",
    "ratio_tail_index",
    "asymptotic_sigma2",
    "confidence_interval",
    "tail_process_lb",
    "estimate_path",
]


class DegenerateEstimateError(ArithmeticError):
    """Raised when an estimator's normalising sum vanishes or its plug-in is invalid."""


class Estimator(str, enum.Enum):
    LB = "lb"
    W = "w"
    WORMS_FIXED = "worms-fixed"
    HILL = "hill"
    RATIO = "ratio"

    @classmethod
    def parse(cls, tag) -> "Estimator":
        if isinstance(tag, cls):
            return tag
        key = str(tag).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.name.lower().replace("_", "-")):
                return member
        raise ValueError(f"unknown estimator {tag!r}")


@dataclass(frozen=True)
class TailEstimate:
    gamma1_hat: float
    estimator: Estimator
    k: Optional[int]
    threshold: float
    degenerate_zero_factors: int = 0
    ci: Optional[Tuple[float, float, float]] = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def with_ci(self, lower: float, upper: float, level: float) -> "TailEstimate":
        return replace(self, ci=(lower, upper, level))


def hill_estimator(xs, k: int) -> float:
    """Hill estimator ``(1/k) sum_{i=1..k} log(X_{n-i+1:n} / X_{n-k:n})``."""
    xs = np.sort(np.asarray(xs, dtype=float))
    n = xs.size
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, n-1] = [1, {n - 1}], got {k}")
    if xs[0] <= 0 or not np.all(np.isfinite(xs)):
        raise ValueError("Hill estimator needs positive finite values")
    top = xs[n - k:]
    return float(np.mean(np.log(top / xs[n - k - 1])))


def hill_path(xs, k_min: int = 2, k_max: Optional[int] = None) -> np.ndarray:
    """Hill estimates for every k in [k_min, k_max] via prefix sums of log order statistics."""
    logs = np.log(np.sort(np.asarray(xs, dtype=float))[::-1])
    n = logs.size
    k_max = n - 1 if k_max is None else k_max
    _check_range(n, k_min, k_max)
    logs = logs - logs[0]
    ks = np.arange(k_min, k_max + 1)
    csum = np.cumsum(logs)
    return csum[ks - 1] / ks - logs[ks]


def _check_range(n: int, k_min: int, k_max: int) -> None:
    if not 1 <= k_min <= k_max <= n - 1:
        raise ValueError(f"need 1 <= k_min <= k_max <= n-1, got [{k_min}, {k_max}] with n={n}")


def _weights(ratio: np.ndarray, n: int, k: int) -> np.ndarray:
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, n-1] = [1, {n - 1}], got {k}")
    # top k in descending order: X_{n:n}, X_{n-1:n}, ...
    r = ratio[n - k:][::-1]
    total = r.sum()
    if not total > 0:
        raise DegenerateEstimateError("weight normalisation sum is zero")
    return r / total


def lb_weights(s: SortedSample, k: int) -> np.ndarray:
    """Lynden-Bell weights a_1..a_k; entry i-1 belongs to X_{n-i+1:n}."""
    return _weights(s.lb_ratio(), s.n, k)


def w_weights(s: SortedSample, k: int) -> np.ndarray:
    return _weights(s.w_ratio(), s.n, k)


def _weighted_log_spacing(s: SortedSample, ratio: np.ndarray, k: int, tag: Estimator) -> TailEstimate:
    if not 2 <= k <= s.n - 1:
        raise ValueError(f"k must lie in [2, n-1] = [2, {s.n - 1}], got {k}")
    a = _weights(ratio, s.n, k)
    thr = s.x_order[s.n - k - 1]
    if not thr > 0:
        raise ValueError("threshold order statistic must be positive")
    spacings = np.log(s.x_order[s.n - k:][::-1] / thr)
    zeros = s.n_zero_factors_above(s.n - k - 1) if tag is Estimator.LB else 0
    return TailEstimate(float(np.dot(a, spacings)), tag, k, float(thr), zeros)


def lb_tail_index(s: SortedSample, k: int) -> TailEstimate:
    """Lynden-Bell integral estimator of gamma1 with random threshold X_{n-k:n}."""
    return _weighted_log_spacing(s, s.lb_ratio(), k, Estimator.LB)


def woodroofe_tail_index(s: SortedSample, k: int) -> TailEstimate:
    """Woodroofe-integral analogue of :func:`lb_tail_index`."""
    return _weighted_log_spacing(s, s.w_ratio(), k, Estimator.W)


def worms_fixed_threshold(s: SortedSample, t: float) -> TailEstimate:
    """Lynden-Bell integral estimator with a deterministic threshold ``t``."""
    if not t > 0:
        raise ValueError(f"threshold must be positive, got {t}")
    start = int(np.searchsorted(s.x_order, t, side="right"))
    m = s.n - start
    if m < 2:
        raise ValueError(f"need at least 2 observations above t={t}, found {m}")
    r = s.lb_ratio()[start:]
    total = r.sum()
    if not total > 0:
        raise DegenerateEstimateError("Lynden-Bell tail mass above t is zero")
    est = float(np.dot(r, np.log(s.x_order[start:] / t)) / total)
    return TailEstimate(est, Estimator.WORMS_FIXED, None, float(t),
                        s.n_zero_factors_above(start), diagnostics={"exceedances": m})


def ratio_tail_index(sample: TruncatedSample, k_x: int, k_y: int) -> TailEstimate:
    """gamma1 from Hill estimates of the observed X (index gamma) and Y (index gamma2).

    Uses 1/gamma1 = 1/gamma - 1/gamma2.
    """
    g = hill_estimator(sample.x, k_x)
    g2 = hill_estimator(sample.y, k_y)
    if not g2 > g:
        raise DegenerateEstimateError(
            f"Y-tail estimate {g2:.6g} does not exceed X-tail estimate {g:.6g}")
    xs = np.sort(sample.x)
    return TailEstimate(g * g2 / (g2 - g), Estimator.RATIO, k_x, float(xs[-k_x - 1]),
                        diagnostics={"gamma_hat": g, "gamma2_hat": g2, "k_y": k_y})


def asymptotic_sigma2(gamma1: float, gamma2: float) -> float:
    """Asymptotic variance of sqrt(k) (gamma1_hat - gamma1).

    With gamma = gamma1 gamma2 / (gamma1 + gamma2) and r = gamma1 / gamma2 the
    value is gamma**2 (1 + r) (1 + r**2) / (1 - r)**3; finite only for r < 1.
    """
    if not 0 < gamma1 < gamma2:
        raise ValueError(f"need 0 < gamma1 < gamma2, got {gamma1}, {gamma2}")
    gamma = gamma1 * gamma2 / (gamma1 + gamma2)
    r = gamma1 / gamma2
    return gamma ** 2 * (1 + r) * (1 + r * r) / (1 - r) ** 3


def confidence_interval(est: TailEstimate, sigma2: float, level: float = 0.95,
                        k: Optional[int] = None) -> Tuple[float, float]:
    """Normal interval ``gamma1_hat +/- z sqrt(sigma2 / k)``.

    No bias correction is applied.  Fixed-threshold estimates carry no
    ``k``; pass the number of exceedances explicitly.
    """
    if k is None:
        k = est.k
    if k is None:
        raise ValueError("estimate has no k; supply the exceedance count")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if not 0.5 < level < 1:
        raise ValueError(f"level must lie in (0.5, 1), got {level}")
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    half = norm.ppf(0.5 * (1 + level)) * math.sqrt(sigma2 / k)
    return est.gamma1_hat - half, est.gamma1_hat + half


def tail_process_lb(s: SortedSample, k: int, x: float, gamma1: float) -> float:
    """Empirical tail Lynden-Bell process at ``x``.

    sqrt(k) * (Fbar(X_{n-k:n} x) / Fbar(X_{n-k:n}) - x**(-1/gamma1)), with Fbar
    the jump-sum tail mass of the Lynden-Bell estimate above a point.
    """
    if not 2 <= k <= s.n - 1:
        raise ValueError(f"k must lie in [2, n-1], got {k}")
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    r = s.lb_ratio()
    base = r[s.n - k:].sum()
    if not base > 0:
        raise DegenerateEstimateError("Lynden-Bell tail mass at the threshold is zero")
    thr = s.x_order[s.n - k - 1]
    if x == 1:
        ratio = 1.0
    else:
        start = int(np.searchsorted(s.x_order, thr * x, side="right"))
        ratio = r[start:].sum() / base
    return math.sqrt(k) * (ratio - x ** (-1.0 / gamma1))


def estimate_path(s: SortedSample, estimator, k_min: int = 2,
                  k_max: Optional[int] = None) -> np.ndarray:
    """Estimates for every k in [k_min, k_max] in one pass over prefix sums.

    Supports ``LB``, ``W`` and ``HILL`` (Hill on the observed X).  Entries
    with a vanishing normalising sum are NaN.
    """
    tag = Estimator.parse(estimator)
    n = s.n
    k_max = n - 1 if k_max is None else k_max
    _check_range(n, k_min, k_max)
    if tag is Estimator.HILL:
        return hill_path(s.x_order, k_min, k_max)
    if tag is Estimator.LB:
        ratio = s.lb_ratio()
    elif tag is Estimator.W:
        ratio = s.w_ratio()
    else:
        raise ValueError(f"no k-path for estimator {tag.value!r}")
    # descending order statistics, logs shifted by log X_{n:n}
    logs = np.log(s.x_order[::-1])
    logs = logs - logs[0]
    r = ratio[::-1]
    ks = np.arange(k_min, k_max + 1)
    den = np.cumsum(r)[ks - 1]
    num = np.cumsum(r * logs)[ks - 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den - logs[ks]
    out[~(den > 0)] = np.nan
    return out
