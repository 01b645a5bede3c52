"""Burr-type heavy-tailed models and the random right-truncation sampler.

The Burr law used throughout has survival function

    S(x) = (1 + x**(1/delta)) ** (-delta/gamma),   x >= 0,

so that S is regularly varying at infinity with index -1/gamma.  A latent
pair (X, Y) is drawn from two independent Burr laws and only kept when
X <= Y.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import make_generator, open_uniforms

__all__ = [
    "BurrModel",
    "TruncationScheme",
    "TruncatedSample",
    "EmptySampleError",
    "burr_survival",
    "burr_quantile",
    "burr_second_order_tau",
    "solve_gamma2",
    "generate_truncated_sample",
]


class EmptySampleError(ValueError):
    """No latent pair survived truncation."""


@dataclass(frozen=True)
class BurrModel:
    delta: float
    gamma: float

    def __post_init__(self):
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def survival(self, x):
        return burr_survival(self, x)

    def quantile(self, u):
        return burr_quantile(self, u)


@dataclass(frozen=True)
class TruncationScheme:
    """Law ``f`` of the variable of interest and law ``g`` of the truncation variable."""

    f: BurrModel
    g: BurrModel

    @classmethod
    def from_p(cls, gamma1: float, p: float, delta: float = 0.25) -> "TruncationScheme":
        gamma2 = solve_gamma2(gamma1, p)
        return cls(BurrModel(delta, gamma1), BurrModel(delta, gamma2))

    @property
    def truncation_probability(self) -> float:
        # P(X <= Y) for the matched-delta Burr pair
        return self.g.gamma / (self.f.gamma + self.g.gamma)

    @property
    def normality_valid(self) -> bool:
        return self.f.gamma < self.g.gamma


@dataclass(frozen=True)
class TruncatedSample:
    """Observed pairs with ``x <= y``.

    ``source_N`` is the number of latent pairs when the sample was
    generated, and ``None`` for ingested data.
    """

    x: np.ndarray
    y: np.ndarray
    source_N: Optional[int] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size < 1:
            raise EmptySampleError("a truncated sample needs at least one pair")
        if not np.all(x <= y):
            bad = int(np.argmax(~(x <= y)))
            raise ValueError(f"pair {bad} violates x <= y: ({x[bad]}, {y[bad]})")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_pairs(cls, pairs, source_N=None) -> "TruncatedSample":
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], source_N)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def pairs(self):
        return list(zip(self.x.tolist(), self.y.tolist()))

    def scaled(self, c: float) -> "TruncatedSample":
        return TruncatedSample(self.x * c, self.y * c, self.source_N)


def burr_survival(model: BurrModel, x):
    """Survival ``(1 + x**(1/delta))**(-delta/gamma)``; scalar or array."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise ValueError("burr_survival is defined for x >= 0")
    with np.errstate(divide="ignore"):
        lx = np.log(xa) / model.delta
    # log1p(x**(1/delta)) without overflow for large x
    out = np.exp(-(model.delta / model.gamma) * np.logaddexp(0.0, lx))
    return float(out) if out.ndim == 0 else out


def burr_quantile(model: BurrModel, u):
    """Inverse of :func:`burr_survival`: the x with survival(x) == u, u in (0, 1]."""
    ua = np.asarray(u, dtype=float)
    if np.any(~((ua > 0) & (ua <= 1))):
        raise ValueError("burr_quantile needs a survival level in (0, 1]")
    a = -(model.gamma / model.delta) * np.log(ua)
    # log(expm1(a)): expm1 keeps precision for u near 1, the shifted form avoids overflow
    with np.errstate(divide="ignore", over="ignore"):
        log_base = np.where(a > 30.0, a + np.log1p(-np.exp(-a)), np.log(np.expm1(a)))
    out = np.exp(model.delta * log_base)
    return float(out) if out.ndim == 0 else out


def burr_second_order_tau(model: BurrModel) -> float:
    """Second-order parameter -gamma/delta of the Burr tail quantile function."""
    return -model.gamma / model.delta


def solve_gamma2(gamma1: float, p: float) -> float:
    """Tail index of the truncation law giving observation rate ``p``."""
    if not gamma1 > 0:
        raise ValueError(f"gamma1 must be positive, got {gamma1}")
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return p * gamma1 / (1.0 - p)


def generate_truncated_sample(scheme: TruncationScheme, N: int, seed: int) -> TruncatedSample:
    """Draw ``N`` latent pairs by inverse transform and keep those with X <= Y.

    The first ``N`` uniforms of the stream feed X, the next ``N`` feed Y.
    Output is a pure function of ``(scheme, N, seed)``.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    rng = make_generator(seed)
    u = open_uniforms(rng, 2 * N)
    xs = burr_quantile(scheme.f, u[:N])
    ys = burr_quantile(scheme.g, u[N:])
    keep = xs <= ys
    if not keep.any():
        raise EmptySampleError(f"all {N} latent pairs were truncated")
    return TruncatedSample(np.atleast_1d(xs)[keep], np.atleast_1d(ys)[keep], source_N=N)
