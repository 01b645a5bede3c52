"""Order statistics and product-limit estimators for right-truncated data.

For observed pairs (X_i, Y_i), i = 1..n, with X_i <= Y_i:

    C_n(x)   = #{i : X_i <= x <= Y_i} / n
    F_LB(x)  = prod_{i : X_i > x} (1 - 1 / (n C_n(X_i)))     (Lynden-Bell)
    F_W(x)   = prod_{i : X_i > x} exp(-1 / (n C_n(X_i)))     (Woodroofe)

Both products are evaluated at every order statistic in one descending pass
after an O(n log n) sort.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import TruncatedSample

__all__ = [
    "SortedSample",
    "build_sorted",
    "lynden_bell_cdf",
    "woodroofe_cdf",
    "lb_survival_at_kth",
    "w_survival_at_kth",
    "empirical_cdf",
    "coverage",
]


@dataclass(frozen=True, eq=False)
class SortedSample:
    """A truncated sample sorted by X with the estimators cached per order statistic.

    Attributes
    ----------
    x_order : X_{1:n} <= ... <= X_{n:n}
    y_co : Y-values carried along with their X partners
    cn_at_order : C_n(X_{i:n})
    flb_at_order : F_LB(X_{i:n})
    fw_at_order : F_W(X_{i:n})
    lb_suffix, w_suffix : products over positions m..n-1 (length n + 1, last entry 1);
        ``F(x) = suffix[number of X <= x]``
    zero_factor : True where the Lynden-Bell factor 1 - 1/(n C_n) vanishes
    """

    x_order: np.ndarray
    y_co: np.ndarray
    cn_at_order: np.ndarray
    flb_at_order: np.ndarray
    fw_at_order: np.ndarray
    lb_suffix: np.ndarray
    w_suffix: np.ndarray
    zero_factor: np.ndarray
    y_sorted: np.ndarray

    @property
    def n(self) -> int:
        return int(self.x_order.size)

    @property
    def has_ties(self) -> bool:
        return bool(np.any(np.diff(self.x_order) == 0))

    def lb_ratio(self) -> np.ndarray:
        """F_LB / C_n at each order statistic (the un-normalised weights)."""
        return self.flb_at_order / self.cn_at_order

    def w_ratio(self) -> np.ndarray:
        return self.fw_at_order / self.cn_at_order

    def n_zero_factors_above(self, position: int) -> int:
        """Zero Lynden-Bell factors at 0-based order positions >= ``position``."""
        return int(np.count_nonzero(self.zero_factor[position:]))


def _lb_suffix_products(c: np.ndarray) -> np.ndarray:
    """prod_{i >= m} (c_i - 1) / c_i for every m, from integer counts c.

    Where consecutive counts step by one the factors telescope,
    (c - 1)/c * c/(c + 1) * ... = (c_first - 1)/c_last, so each such run
    costs one division.  Complete data form a single run and give j/n exactly.
    """
    n = c.size
    new_run = np.ones(n, dtype=bool)
    new_run[1:] = c[1:] != c[:-1] + 1
    starts = np.flatnonzero(new_run)
    ends = np.r_[starts[1:], n] - 1
    run_of = np.cumsum(new_run) - 1
    run_value = (c[starts] - 1) / c[ends].astype(float)
    # product of the whole runs strictly above each run
    later = np.ones(starts.size)
    later[:-1] = np.cumprod(run_value[::-1])[::-1][1:]
    return (c - 1) / c[ends[run_of]].astype(float) * later[run_of]


def build_sorted(sample: TruncatedSample) -> SortedSample:
    n = sample.n
    order = np.argsort(sample.x, kind="stable")
    xs = sample.x[order]
    ys = sample.y[order]
    y_sorted = np.sort(sample.y)

    # X_j <= Y_j, so {X_j <= x <= Y_j} = {X_j <= x} minus {Y_j < x}
    n_le = np.searchsorted(xs, xs, side="right")
    n_y_below = np.searchsorted(y_sorted, xs, side="left")
    cn_count = n_le - n_y_below
    cn = cn_count / n

    inv = 1.0 / cn_count.astype(float)
    # suffix[m] = prod_{i >= m} factor_i, accumulated from the top down
    lb_suffix = np.ones(n + 1)
    lb_suffix[:n] = _lb_suffix_products(cn_count)
    w_suffix = np.ones(n + 1)
    w_suffix[:n] = np.exp(-np.cumsum(inv[::-1])[::-1])

    # F(X_{i:n}) is the product over observations strictly above X_{i:n}
    flb = lb_suffix[n_le]
    fw = w_suffix[n_le]

    for arr in (xs, ys, cn, flb, fw, lb_suffix, w_suffix, y_sorted):
        arr.setflags(write=False)
    zero = cn_count == 1
    zero.setflags(write=False)
    return SortedSample(xs, ys, cn, flb, fw, lb_suffix, w_suffix, zero, y_sorted)


def _n_at_or_below(s: SortedSample, x) -> np.ndarray:
    return np.searchsorted(s.x_order, x, side="right")


def lynden_bell_cdf(s: SortedSample, x):
    """Lynden-Bell estimate of the latent df at ``x`` (scalar or array)."""
    out = s.lb_suffix[_n_at_or_below(s, x)]
    return float(out) if np.ndim(out) == 0 else out


def woodroofe_cdf(s: SortedSample, x):
    """Woodroofe estimate of the latent df at ``x`` (scalar or array)."""
    out = s.w_suffix[_n_at_or_below(s, x)]
    return float(out) if np.ndim(out) == 0 else out


def empirical_cdf(s: SortedSample, x):
    """F_n(x), the observed-X empirical df."""
    out = _n_at_or_below(s, x) / s.n
    return float(out) if np.ndim(out) == 0 else out


def coverage(s: SortedSample, x):
    """C_n(x) at arbitrary points."""
    x = np.asarray(x, dtype=float)
    out = (_n_at_or_below(s, x) - np.searchsorted(s.y_sorted, x, side="left")) / s.n
    return float(out) if out.ndim == 0 else out


def _check_k(s: SortedSample, k: int) -> None:
    if not 1 <= k <= s.n - 1:
        raise ValueError(f"k must lie in [1, n-1] = [1, {s.n - 1}], got {k}")


def lb_survival_at_kth(s: SortedSample, k: int) -> float:
    """Jump-sum form of 1 - F_LB(X_{n-k:n}).

    Returns ``(1/n) * sum_{i=1..k} F_LB(X_{n-i+1:n}) / C_n(X_{n-i+1:n})``.
    For distinct X-values this telescopes to ``1 - F_LB(X_{n-k:n})``.  A
    zero return value marks a degenerate threshold.
    """
    _check_k(s, k)
    return float(np.sum(s.lb_ratio()[s.n - k:]) / s.n)


def w_survival_at_kth(s: SortedSample, k: int) -> float:
    """Woodroofe analogue of :func:`lb_survival_at_kth` (jump-sum form)."""
    _check_k(s, k)
    return float(np.sum(s.w_ratio()[s.n - k:]) / s.n)
