"""Space-filling initial designs via maximin Latin Hypercube Sampling.

The PRNG is numpy's PCG64 (``numpy.random.default_rng``); a fixed seed
reproduces designs bit-identically. One design of n samples in d
dimensions consumes, per dimension in order: one n-permutation, then n
within-stratum uniforms. ``maximin_lhs`` draws its candidates back to
back from a single stream seeded once, so the first candidate equals
``generate_lhs`` with the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist


@dataclass(frozen=True)
class LhsDesign:
    """A Latin design: every dimension has exactly one sample per stratum."""

    samples: np.ndarray  # shape (n, d), values in [0, 1)
    seed: int
    restarts: int

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]


def _latin(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    u = np.empty((n, d))
    for j in range(d):
        strata = rng.permutation(n)
        u[:, j] = (strata + rng.random(n)) / n
    return u


def generate_lhs(n: int, d: int, seed: int) -> LhsDesign:
    """Draw one random Latin hypercube design."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    return LhsDesign(samples=_latin(rng, n, d), seed=seed, restarts=1)


def min_pairwise_distance(design: LhsDesign | np.ndarray) -> float:
    """Smallest Euclidean distance between any two samples of a design."""
    samples = design.samples if isinstance(design, LhsDesign) else np.asarray(design, dtype=float)
    if samples.shape[0] < 2:
        raise ValueError("minimum pairwise distance needs at least 2 samples")
    return float(pdist(samples).min())


def maximin_lhs(n: int, d: int, restarts: int, seed: int) -> LhsDesign:
    """Best of ``restarts`` random Latin designs by minimum pairwise
    distance; ties keep the earliest candidate."""
    if n < 2:
        raise ValueError(f"maximin needs n >= 2, got n={n}")
    if restarts < 1:
        raise ValueError(f"need restarts >= 1, got {restarts}")
    rng = np.random.default_rng(seed)
    best: np.ndarray | None = None
    best_distance = -np.inf
    for _ in range(restarts):
        candidate = _latin(rng, n, d)
        distance = min_pairwise_distance(candidate)
        if distance > best_distance:
            best, best_distance = candidate, distance
    assert best is not None
    return LhsDesign(samples=best, seed=seed, restarts=restarts)
