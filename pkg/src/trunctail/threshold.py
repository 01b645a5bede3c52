"""Reiss-Thomas choice of the number of upper order statistics.

Given a path of estimates g(i), i = k_min..k_max, the selected k minimises

    crit(k) = (1/k) * sum_{i=k_min..k} i**theta * |g(i) - med(g(k_min), ..., g(k))|

where med is the lower median.  Ties go to the smallest k.  Non-finite path
entries are left out of medians and sums and can never be selected.

The criterion is identically zero at k = k_min, where the median sees a
single value, and stays erratic while only a handful of estimates enter it.
The minimisation can therefore start at a floor ``k_floor >= k_min``;
:func:`select_k_for` puts that floor at a fixed fraction of n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .empirical import SortedSample
from .estimators import Estimator, estimate_path

__all__ = ["KSelection", "reiss_thomas_select", "reiss_thomas_naive", "select_k_for", "search_floor",
           "DEFAULT_THETA", "DEFAULT_MIN_FRACTION"]

DEFAULT_THETA = 0.3
DEFAULT_MIN_FRACTION = 0.05


@dataclass(frozen=True)
class KSelection:
    k_star: int
    ks: np.ndarray
    criterion: np.ndarray
    path: np.ndarray
    theta: float
    k_range: Tuple[int, int]
    k_floor: int

    @property
    def gamma_at_k_star(self) -> float:
        return float(self.path[self.k_star - self.k_range[0]])

    def criterion_pairs(self):
        return list(zip(self.ks.tolist(), self.criterion.tolist()))


def _check_inputs(path, theta):
    g = np.asarray(path, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("empty estimate path")
    if g.size < 3:
        raise ValueError(f"path needs at least 3 entries, got {g.size}")
    if not 0 <= theta <= 0.5:
        raise ValueError(f"theta must lie in [0, 1/2], got {theta}")
    finite = np.isfinite(g)
    if not finite.any():
        raise ValueError("every entry of the estimate path is degenerate")
    return g, finite


def _exact_criterion(g, finite, k_min, theta, j):
    """Direct O(j) criterion for path position ``j``."""
    idx = np.arange(j + 1)
    sel = finite[: j + 1]
    vals = g[: j + 1][sel]
    m = np.sort(vals)[(vals.size - 1) // 2]
    w = (idx[sel] + k_min) ** theta
    return float(np.sum(w * np.abs(vals - m)) / (j + k_min))


def reiss_thomas_naive(path, theta: float = DEFAULT_THETA, k_min: int = 2,
                       k_floor: Optional[int] = None) -> KSelection:
    """Reference O(K^2) evaluation of the criterion."""
    g, finite = _check_inputs(path, theta)
    k_floor = _check_floor(g, finite, k_min, k_floor)
    crit = np.full(g.size, np.nan)
    for j in range(g.size):
        if finite[j]:
            crit[j] = _exact_criterion(g, finite, k_min, theta, j)
    return _finish(g, crit, k_min, theta, k_floor)


def _check_floor(g, finite, k_min, k_floor):
    if k_floor is None:
        return k_min
    if not k_min <= k_floor <= k_min + g.size - 1:
        raise ValueError(f"k_floor={k_floor} outside [{k_min}, {k_min + g.size - 1}]")
    if not finite[k_floor - k_min:].any():
        raise ValueError("every entry of the estimate path above the floor is degenerate")
    return k_floor


def _finish(g, crit, k_min, theta, k_floor) -> KSelection:
    ks = np.arange(k_min, k_min + g.size)
    lo = k_floor - k_min
    j = lo + int(np.nanargmin(crit[lo:]))  # first occurrence -> smallest k
    return KSelection(k_min + j, ks, crit, g, theta, (k_min, k_min + g.size - 1), k_floor)


def reiss_thomas_select(path, theta: float = DEFAULT_THETA, k_min: int = 2,
                        k_floor: Optional[int] = None) -> KSelection:
    """Select k* in [k_floor, k_max] from a path indexed by k = k_min, k_min + 1, ...

    Runs in O(K log K): values are ranked once, then Fenwick trees over
    ranks hold counts, weights and weighted values of the prefix seen so
    far, giving the running lower median and the split sums around it.
    """
    g, finite = _check_inputs(path, theta)
    k_floor = _check_floor(g, finite, k_min, k_floor)
    K = g.size
    ref = g[finite][0]
    v = np.where(finite, g - ref, 0.0)  # centred so a constant path scores exactly 0
    w = (np.arange(K) + k_min) ** theta
    order = np.argsort(v, kind="stable")
    rank = np.empty(K, dtype=np.int64)
    rank[order] = np.arange(1, K + 1)
    v_sorted = v[order]

    cnt = [0] * (K + 1)
    tw = [0.0] * (K + 1)
    twv = [0.0] * (K + 1)
    top = 1 << (K.bit_length() - 1)
    crit = [float("nan")] * K
    slack = [0.0] * K
    n_seen = 0
    w_all = 0.0
    wv_all = 0.0
    wabs_all = 0.0
    v_list = v.tolist()
    w_list = w.tolist()
    rank_list = rank.tolist()
    finite_list = finite.tolist()
    vs_list = v_sorted.tolist()
    w_by_rank = w[order].tolist()
    for j in range(K):
        if not finite_list[j]:
            continue
        wj = w_list[j]
        wvj = wj * v_list[j]
        i = rank_list[j]
        while i <= K:
            cnt[i] += 1
            tw[i] += wj
            twv[i] += wvj
            i += i & -i
        n_seen += 1
        w_all += wj
        wv_all += wvj
        wabs_all += abs(wvj)
        # descend to the largest rank whose prefix holds fewer than the
        # lower-median position; the median sits at the next rank
        target = (n_seen - 1) // 2 + 1
        pos = 0
        w_le = 0.0
        wv_le = 0.0
        step = top
        while step:
            nxt = pos + step
            if nxt <= K and cnt[nxt] < target:
                pos = nxt
                target -= cnt[nxt]
                w_le += tw[nxt]
                wv_le += twv[nxt]
            step >>= 1
        # each rank holds a single path entry
        m = vs_list[pos]
        w_le += w_by_rank[pos]
        wv_le += w_by_rank[pos] * m
        s = (wv_all - wv_le) - m * (w_all - w_le) + m * w_le - wv_le
        k = j + k_min
        crit[j] = max(s, 0.0) / k
        slack[j] = 1e-12 * (wabs_all + abs(m) * w_all) / k
    crit = np.asarray(crit)
    slack = np.asarray(slack)

    # rounding in the split sums can reorder near-equal values, so every
    # candidate that could be the minimum is re-scored with the direct sum
    lo = k_floor - k_min
    j0 = lo + int(np.nanargmin(crit[lo:]))
    near = lo + np.flatnonzero(crit[lo:] - slack[lo:] <= crit[j0] + slack[j0])
    if near.size > 1:
        for j in near:
            crit[j] = _exact_criterion(g, finite, k_min, theta, j)
    return _finish(g, crit, k_min, theta, k_floor)


def search_floor(n: int, k_min: int, k_max: int, min_fraction: float) -> int:
    """Smallest k admitted to the minimisation: ceil(min_fraction * n), clipped to the path."""
    if not 0 <= min_fraction < 1:
        raise ValueError(f"min_fraction must lie in [0, 1), got {min_fraction}")
    return min(max(k_min, math.ceil(min_fraction * n)), k_max)


def select_k_for(s: SortedSample, estimator=Estimator.LB, theta: float = DEFAULT_THETA,
                 k_range: Optional[Tuple[int, int]] = None,
                 min_fraction: float = DEFAULT_MIN_FRACTION) -> KSelection:
    """Reiss-Thomas k* for one estimator's full k-path on a sorted sample."""
    if s.n < 5:
        raise ValueError(f"threshold selection needs n >= 5, got {s.n}")
    k_min, k_max = k_range if k_range is not None else (2, s.n - 1)
    path = estimate_path(s, estimator, k_min, k_max)
    floor = search_floor(s.n, k_min, k_max, min_fraction)
    return reiss_thomas_select(path, theta, k_min, floor)
