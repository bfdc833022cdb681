import math

import numpy as np
import pytest
from scipy import integrate, stats

from vcdas.bounds import (estimate_entropy_terms, estimate_upper_bound,
                          sample_nearest_user_distance, sample_ordered_distances)


def test_single_antenna_distance_law(rng):
    x = sample_ordered_distances(1, 1, rng, size=20_000)[:, 0]
    assert stats.kstest(x, lambda t: np.clip(t, 0, 1) ** 2).pvalue > 1e-3


def test_ordered_distances_shape_and_order(rng):
    x = sample_ordered_distances(100, 5, rng, size=1000)
    assert x.shape == (1000, 5)
    assert np.all(np.diff(x, axis=1) >= 0) and np.all((x > 0) & (x <= 1))
    assert sample_ordered_distances(10, 3, rng).shape == (3,)


@pytest.mark.parametrize("col", [0, 2, 4])
def test_spacings_match_sorting(rng, col):
    a = sample_ordered_distances(60, 5, rng, size=20_000)[:, col]
    b = sample_ordered_distances(60, 5, rng, size=20_000, method="direct")[:, col]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_nearest_antenna_mean_quadrature(rng):
    x = sample_ordered_distances(100, 1, rng, size=100_000)[:, 0]
    ref = integrate.quad(lambda t: t * 200 * t * (1 - t * t) ** 99, 0, 1)[0]
    assert abs(x.mean() - ref) < 4 * x.std() / math.sqrt(x.size)


def test_nearest_user_two_users(rng):
    z = sample_nearest_user_distance(2, rng, size=20_000)
    assert stats.kstest(z, lambda t: np.clip(t, 0, 1) ** 2).pvalue > 1e-3


def test_nearest_user_mean(rng):
    z = sample_nearest_user_distance(50, rng, size=1_000_000)
    assert z.mean() == pytest.approx(0.89 / math.sqrt(50), rel=0.01)
    ref = integrate.quad(lambda t: 2 * 49 * t * t * (1 - t * t) ** 48, 0, 1)[0]
    assert abs(z.mean() - ref) < 4 * z.std() / 1000


def test_nearest_user_matches_min_of_uniforms(rng):
    a = sample_nearest_user_distance(12, rng, size=20_000)
    b = np.sqrt(rng.random((20_000, 11))).min(axis=1)
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_bound_deterministic():
    a = estimate_upper_bound(50, 100, 2, 4.0, 5000, 123)
    b = estimate_upper_bound(50, 100, 2, 4.0, 5000, 123)
    assert a == b
    assert a != estimate_upper_bound(50, 100, 2, 4.0, 5000, 124)


def test_bound_chunks_are_addressable():
    # a two-chunk estimate is the average of two independently addressed chunks
    from vcdas import seeding
    from vcdas.bounds import CHUNK, _chunk_terms
    two, _ = estimate_entropy_terms(50, 100, 1, 4.0, 2 * CHUNK, 5)
    one, _ = estimate_entropy_terms(50, 100, 1, 4.0, CHUNK, 5)
    log_s, _ = _chunk_terms(50, 100, 1, 4.0, CHUNK, seeding.stream(5, 1))
    assert two == pytest.approx(0.5 * (one + log_s.mean()), rel=1e-12)


def test_signal_term_v1_quadrature():
    s, _ = estimate_entropy_terms(50, 100, 1, 4.0, 200_000, 1)
    ref = integrate.quad(lambda t: -4 * math.log2(t) * 200 * t * (1 - t * t) ** 99, 0, 1)[0]
    assert s == pytest.approx(ref, abs=0.02)


def test_entropy_terms_increase_with_v():
    prev = None
    for v in range(1, 7):
        s, i, ss, si = estimate_entropy_terms(50, 100, v, 4.0, 50_000, 3, return_stderr=True)
        if prev is not None:
            assert s > prev[0] - 3 * math.hypot(ss, prev[2])
            assert i > prev[1] - 3 * math.hypot(si, prev[3])
        prev = (s, i, ss, si)


def test_entropy_gap_positive_dense_antennas():
    for v in (1, 3, 6):
        s, i = estimate_entropy_terms(50, 2500, v, 4.0, 20_000, 7)
        assert math.isfinite(s - i) and s - i > 0


@pytest.mark.parametrize("args", [(1, 10, 1, 4.0, 1000), (5, 10, 11, 4.0, 1000),
                                  (5, 10, 1, 2.0, 1000), (5, 10, 1, 4.0, 999)])
def test_bound_validation(args):
    with pytest.raises(ValueError):
        estimate_upper_bound(*args, 0)
