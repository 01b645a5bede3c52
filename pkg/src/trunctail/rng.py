"""Seeding helpers.

Every stream is a Philox-4x64 counter-based generator whose key comes from
a SplitMix64 finaliser, so a replication's stream depends only on its
``(seed, N, rep)`` label and not on the order in which work is scheduled.

Seed derivation, bit-exact (all arithmetic mod 2**64)::

    mix64(z):
        z = (z + 0x9E3779B97F4A7C15)
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

    replication_seed(seed, N, rep) = mix64(mix64(mix64(seed) ^ N) ^ rep)
    philox key                     = mix64(stream seed)
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replication_seed(seed: int, N: int, rep: int) -> int:
    """Stable 64-bit seed for replication ``rep`` at latent size ``N``."""
    h = mix64(seed & MASK64)
    h = mix64(h ^ (N & MASK64))
    return mix64(h ^ (rep & MASK64))


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=mix64(seed & MASK64)))


def open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1): (k + 1/2) / 2**52 with k uniform."""
    k = rng.integers(0, 1 << 52, size=size, dtype=np.uint64)
    return (k.astype(float) + 0.5) * 2.0 ** -52
