"""Rule of thumb for the virtual cell size that maximizes the average rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specfun import upper_incomplete_gamma


@dataclass(frozen=True)
class VStarResult:
    v_exact: float
    v_integer: int
    mean_nn_distance: float


def mean_nearest_user_distance(K: int, form: str = "integral") -> float:
    """Mean distance from a user to its nearest other user, edge effects ignored.

    ``form="integral"`` evaluates ``2 (K-1) int_0^1 x^2 (1-x^2)^(K-2) dx``
    exactly, which equals ``sqrt(pi) Gamma(K) / (2 Gamma(K + 1/2))``.
    ``form="gamma"`` is the large-K version that swaps ``(1-x^2)^(K-2)`` for
    ``exp(-(K-2) x^2)``:
    ``(K-1)/(K-2)^(3/2) * (-(K-2)^(1/2) e^-(K-2) + Gamma(1/2, 0)/2 - Gamma(1/2, K-2)/2)``.
    Both tend to ``0.8862 / sqrt(K)``.
    """
    if K < 3:
        raise ValueError("need K >= 3")
    if form == "integral":
        return 0.5 * math.sqrt(math.pi) * math.exp(math.lgamma(K) - math.lgamma(K + 0.5))
    if form == "gamma":
        m = K - 2
        bracket = (-math.sqrt(m) * math.exp(-m)
                   + 0.5 * upper_incomplete_gamma(0.5, 0.0)
                   - 0.5 * upper_incomplete_gamma(0.5, float(m)))
        return (K - 1) / m ** 1.5 * bracket
    raise ValueError(f"unknown form {form!r}")


def optimal_v_exact(K: int, L: int, form: str = "integral") -> float:
    """Largest V whose mean virtual-cell radii fit between neighbouring users.

    Mean radius is ``sqrt(V / L)``, so ``2 sqrt(V / L) <= d`` gives
    ``V = L d^2 / 4``.
    """
    if L < 1:
        raise ValueError("need L >= 1")
    return L / 4.0 * mean_nearest_user_distance(K, form) ** 2


def optimal_v(K: int, L: int) -> int:
    """``ceil(0.2 L / K)``, at least 1 (exact integer arithmetic)."""
    if K < 1 or L < 1:
        raise ValueError("need K >= 1 and L >= 1")
    return max(1, -(-L // (5 * K)))


def vstar(K: int, L: int, form: str = "integral") -> VStarResult:
    v = optimal_v_exact(K, L, form)
    return VStarResult(v, math.ceil(max(v, 1.0)), mean_nearest_user_distance(K, form))
