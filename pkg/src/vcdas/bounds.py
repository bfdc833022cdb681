"""Monte Carlo evaluation of the average-rate upper bound.

The bound averages ``log2(1 + S / I_lb)`` where ``S`` is the power from the
tagged user's own virtual cell and ``I_lb`` the interference from the
virtual cell of its nearest neighbour alone.  Distances are drawn from the
edge-free densities (antennas and users uniform with the disk densities, no
boundary), not from the finite-disk simulator.  The integrand carries no
noise term.
"""

from __future__ import annotations

import numpy as np

from . import seeding
from .geometry import D_MIN
from .mrt import fraction_matrix

CHUNK = 1 << 15


def _gamma_spacings(L: int, V: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """The V smallest of L uniform(0, 1) order statistics, ``(n, V)``."""
    e = rng.standard_exponential((n, V))
    s = np.cumsum(e, axis=1)
    tail = rng.standard_gamma(L - V + 1, n)
    return s / (s[:, -1:] + tail[:, None])


def sample_ordered_distances(L: int, V: int, rng: np.random.Generator,
                             size: int | None = None, method: str = "spacings"):
    """The V smallest of L i.i.d. distances with CDF ``x**2``, ascending.

    ``method="direct"`` draws all L radii and sorts them; the default uses
    exponential spacings with a gamma tail, which has the same joint law at
    O(V) cost per sample.  Returns shape ``(V,)`` or ``(size, V)``.
    """
    if V < 1 or L < 1:
        raise ValueError("need L >= 1 and V >= 1")
    if V > L:
        raise ValueError(f"V={V} exceeds L={L}")
    n = 1 if size is None else int(size)
    if method == "spacings":
        u = _gamma_spacings(L, V, n, rng)
    elif method == "direct":
        u = np.sort(rng.random((n, L)), axis=1)[:, :V]
    else:
        raise ValueError(f"unknown method {method!r}")
    x = np.maximum(np.sqrt(u), D_MIN)
    return x[0] if size is None else x


def sample_nearest_user_distance(K: int, rng: np.random.Generator, size: int | None = None):
    """Distance to the nearest of K - 1 other users, CDF ``1 - (1 - x**2)**(K-1)``."""
    if K < 2:
        raise ValueError("need K >= 2")
    n = 1 if size is None else int(size)
    u = 1.0 - rng.random(n)   # (0, 1]
    x = np.maximum(np.sqrt(-np.expm1(np.log(u) / (K - 1))), D_MIN)
    return float(x[0]) if size is None else x


def _check(K, L, V, alpha, n_samples):
    if K < 2:
        raise ValueError("need K >= 2")
    if not 1 <= V <= L:
        raise ValueError("need 1 <= V <= L")
    if not (np.isfinite(alpha) and alpha > 2):
        raise ValueError("alpha must be finite and exceed 2")
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")


def _chunk_terms(K, L, V, alpha, n, rng):
    """log2 S, log2 I_lb for n independent draws."""
    z = sample_nearest_user_distance(K, rng, size=n)
    y = sample_ordered_distances(L, V, rng, size=n)
    x = sample_ordered_distances(L, V, rng, size=n)
    omega = rng.random((n, V)) * (2.0 * np.pi)

    log_s = np.log2(np.sum(x ** -alpha, axis=1))
    frac, _ = fraction_matrix(y ** (-alpha / 2.0))
    r2 = y ** 2 + z[:, None] ** 2 + 2.0 * y * z[:, None] * np.cos(omega)
    r2 = np.maximum(r2, D_MIN ** 2)
    log_i = np.log2(np.sum(frac * r2 ** (-alpha / 2.0), axis=1))
    return log_s, log_i


def _chunks(n_samples):
    full, rest = divmod(n_samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _accumulate(K, L, V, alpha, n_samples, rng, fn):
    """Chunked sums of ``fn(log_s, log_i)`` columns; chunk c uses sub-stream c."""
    base = seeding.as_seed_sequence(rng)
    total = None
    total_sq = None
    for c, n in enumerate(_chunks(n_samples)):
        log_s, log_i = _chunk_terms(K, L, V, alpha, n, seeding.stream(base, c))
        vals = fn(log_s, log_i)
        s, sq = vals.sum(axis=0), (vals ** 2).sum(axis=0)
        total = s if total is None else total + s
        total_sq = sq if total_sq is None else total_sq + sq
    mean = total / n_samples
    var = np.maximum(total_sq / n_samples - mean ** 2, 0.0) * n_samples / (n_samples - 1)
    return mean, np.sqrt(var / n_samples)


def estimate_upper_bound(K: int, L: int, V: int, alpha: float, n_samples: int, rng):
    """Monte Carlo estimate and standard error of the average-rate upper bound.

    ``rng`` may be an int seed, a SeedSequence or a Generator.  Samples are
    drawn in fixed-size chunks with one sub-stream per chunk.
    """
    _check(K, L, V, alpha, n_samples)

    def rate(log_s, log_i):
        # log2(1 + S/I) with S/I formed in the log domain
        return np.logaddexp2(0.0, log_s - log_i)[:, None]

    mean, se = _accumulate(K, L, V, alpha, n_samples, rng, rate)
    return float(mean[0]), float(se[0])


def estimate_entropy_terms(K: int, L: int, V: int, alpha: float, n_samples: int, rng,
                           return_stderr: bool = False):
    """Estimates of ``E[log2 S]`` and ``E[log2 I_lb]``.

    With ``return_stderr`` the standard errors follow the two means.
    """
    _check(K, L, V, alpha, n_samples)
    mean, se = _accumulate(K, L, V, alpha, n_samples, rng,
                           lambda a, b: np.column_stack((a, b)))
    if return_stderr:
        return float(mean[0]), float(mean[1]), float(se[0]), float(se[1])
    return float(mean[0]), float(mean[1])
