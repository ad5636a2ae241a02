from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamtune import generate_lhs, maximin_lhs, min_pairwise_distance


def reference_latin(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    # the documented draw order: per column, one permutation then n uniforms
    u = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        u[:, j] = (perm + rng.random(n)) / n
    return u


def reference_min_distance(samples: np.ndarray) -> float:
    best = math.inf
    n = samples.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            best = min(best, math.sqrt(float(((samples[i] - samples[j]) ** 2).sum())))
    return best


def assert_latin(samples: np.ndarray) -> None:
    n = samples.shape[0]
    for j in range(samples.shape[1]):
        strata = sorted(int(v * n) for v in samples[:, j])
        assert strata == list(range(n))


class TestGenerateLhs:
    def test_latin_property_4x2(self):
        design = generate_lhs(4, 2, seed=0)
        for j in range(2):
            column = np.sort(design.samples[:, j])
            for i, (lo, hi) in enumerate([(0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]):
                assert lo <= column[i] < hi or (hi == 1.0 and column[i] == 1.0)

    def test_single_sample(self):
        design = generate_lhs(1, 5, seed=3)
        assert design.samples.shape == (1, 5)
        assert np.all((design.samples >= 0) & (design.samples <= 1))

    def test_deterministic_for_fixed_seed(self):
        a = generate_lhs(30, 9, seed=1234)
        b = generate_lhs(30, 9, seed=1234)
        assert np.array_equal(a.samples, b.samples)
        assert len(np.unique(a.samples, axis=0)) == 30

    def test_invalid_sizes(self):
        with pytest.raises(ValueError):
            generate_lhs(0, 2, seed=0)
        with pytest.raises(ValueError):
            generate_lhs(2, 0, seed=0)

    @given(
        n=st.integers(min_value=1, max_value=40),
        d=st.integers(min_value=1, max_value=8),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=100, deadline=None)
    def test_latin_property_holds(self, n, d, seed):
        assert_latin(generate_lhs(n, d, seed).samples)


class TestMinPairwiseDistance:
    def test_identical_points(self):
        assert min_pairwise_distance(np.zeros((2, 3))) == 0.0

    def test_unit_square_diagonal(self):
        assert min_pairwise_distance(np.array([[0.0, 0.0], [1.0, 1.0]])) == pytest.approx(
            math.sqrt(2)
        )

    def test_bounded_for_unit_cube_designs(self):
        design = generate_lhs(30, 9, seed=7)
        distance = min_pairwise_distance(design)
        assert 0 < distance <= 3.0

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            min_pairwise_distance(np.zeros((1, 3)))


class TestMaximin:
    def test_single_restart_matches_generate(self):
        a = maximin_lhs(12, 4, restarts=1, seed=99)
        b = generate_lhs(12, 4, seed=99)
        assert np.array_equal(a.samples, b.samples)

    def test_best_of_candidates_brute_force(self):
        for seed in range(20):
            ours = maximin_lhs(10, 3, restarts=5, seed=seed)
            rng = np.random.default_rng(seed)
            candidates = [reference_latin(rng, 10, 3) for _ in range(5)]
            distances = [reference_min_distance(c) for c in candidates]
            best = int(np.argmax(distances))
            assert np.array_equal(ours.samples, candidates[best])
            assert min_pairwise_distance(ours) == pytest.approx(max(distances), rel=1e-12)

    def test_two_points_one_dim_land_in_different_halves(self):
        design = maximin_lhs(2, 1, restarts=10, seed=5)
        a, b = sorted(design.samples[:, 0])
        assert a < 0.5 <= b or (a < 0.5 and b >= 0.5)
        assert min_pairwise_distance(design) > 0

    def test_never_worse_than_first_candidate(self):
        for seed in (0, 1, 2, 3):
            first = generate_lhs(16, 5, seed=seed)
            best = maximin_lhs(16, 5, restarts=5, seed=seed)
            assert min_pairwise_distance(best) >= min_pairwise_distance(first)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            maximin_lhs(1, 3, restarts=5, seed=0)
        with pytest.raises(ValueError):
            maximin_lhs(4, 3, restarts=0, seed=0)
