"""Special functions used by the MRT rate formula and the V* rule.

All functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

EULER_GAMMA = 0.57721566490153286061

# relative gap below which two hypoexponential rates count as coincident
RATE_GAP_TOL = 1e-6
RATE_PERTURB_STEP = 1e-5

_SERIES_TERMS = 40
_CF_MAX_ITER = 5000
_CF_EPS = 1e-16
_FPMIN = 1e-300
# largest tolerated cancellation in the partial-fraction pdf
_PDF_ERR_TOL = 1e-12


def exp_e1(z):
    """Scaled exponential integral ``exp(z) * E1(z)`` for ``z > 0``.

    Uses the power series for ``z <= 1`` and a continued fraction (modified
    Lentz) for ``z > 1``.  The continued fraction yields the scaled product
    directly so nothing overflows for large ``z``.
    """
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise ValueError("exp_e1 requires finite z > 0")
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)

    small = z <= 1.0
    if np.any(small):
        zs = z[small]
        # E1(z) = -gamma - ln z - sum_{n>=1} (-z)^n / (n n!)
        acc = np.zeros_like(zs)
        term = np.ones_like(zs)
        for n in range(1, _SERIES_TERMS + 1):
            term = term * (-zs) / n
            acc += term / n
        out[small] = np.exp(zs) * (-EULER_GAMMA - np.log(zs) - acc)

    big = ~small
    if np.any(big):
        zb = z[big]
        b = zb + 1.0
        c = np.full_like(zb, 1.0 / _FPMIN)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(zb.shape, dtype=bool)
        for i in range(1, _CF_MAX_ITER):
            an = -float(i * i)
            b = b + 2.0
            d = 1.0 / (an * d + b)
            c = b + an / c
            delta = c * d
            h = np.where(active, h * delta, h)
            active &= np.abs(delta - 1.0) > _CF_EPS
            if not active.any():
                break
        out[big] = h
    return out[0] if scalar else out


def upper_incomplete_gamma(s, x):
    """Upper incomplete gamma ``Gamma(s, x)``; only ``s = 1/2`` is supported.

    ``Gamma(1/2, x) = sqrt(pi) * erfc(sqrt(x))``.
    """
    if s != 0.5:
        raise ValueError("only s = 1/2 is supported")
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise ValueError("upper_incomplete_gamma requires x >= 0")
    out = np.sqrt(np.pi) * special.erfc(np.sqrt(x))
    return out[()] if out.ndim == 0 else out


def perturb_rates(rates):
    """Break near-coincident rates apart deterministically.

    A rate is *offending* when its relative gap to any earlier rate is below
    ``RATE_GAP_TOL``.  The i-th offending rate (1-based, in input order) is
    multiplied by ``1 + i * RATE_PERTURB_STEP``.  Works along the last axis.
    """
    r = np.array(rates, dtype=float, copy=True)
    if r.shape[-1] < 2:
        return r
    gap = np.abs(r[..., :, None] - r[..., None, :]) / np.maximum(
        r[..., :, None], r[..., None, :])
    earlier = np.tril(np.ones((r.shape[-1],) * 2, dtype=bool), k=-1)
    offending = np.any((gap < RATE_GAP_TOL) & earlier, axis=-1)
    if not offending.any():
        return r
    rank = np.cumsum(offending, axis=-1)
    return np.where(offending, r * (1.0 + rank * RATE_PERTURB_STEP), r)


@dataclass(frozen=True)
class HypoexpSpec:
    """Rates of a hypoexponential law (sum of independent exponentials)."""

    rates: tuple[float, ...]

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise ValueError("need at least one rate")
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("rates must be positive and finite")
        if r.size > 1:
            gap = np.abs(r[:, None] - r[None, :]) / np.maximum(r[:, None], r[None, :])
            np.fill_diagonal(gap, np.inf)
            if gap.min() < RATE_GAP_TOL:
                raise ValueError("duplicate rates; build with HypoexpSpec.from_rates")

    @classmethod
    def from_rates(cls, rates):
        """Validate and apply the near-duplicate perturbation rule."""
        r = np.asarray(rates, dtype=float)
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("rates must be positive and finite")
        return cls(tuple(float(v) for v in perturb_rates(r)))

    @property
    def weights(self) -> np.ndarray:
        """Partial-fraction weights ``prod_{q != l} r_q / (r_q - r_l)``."""
        r = np.asarray(self.rates, dtype=np.longdouble)
        diff = r[None, :] - r[:, None]
        np.fill_diagonal(diff, 1.0)
        ratio = r[None, :] / diff
        np.fill_diagonal(ratio, 1.0)
        return np.prod(ratio, axis=1)


def _phase_type_pdf(rates, x):
    # f(x) = e_1^T exp(S x) s, S upper bidiagonal; exact for any rates
    r = np.asarray(rates, dtype=float)
    S = np.diag(-r) + np.diag(r[:-1], 1)
    exit_ = np.zeros(r.size)
    exit_[-1] = r[-1]
    flat = np.ravel(x)
    out = np.array([linalg.expm(S * v)[0] @ exit_ for v in flat])
    return out.reshape(np.shape(x))


def hypoexp_pdf(spec: HypoexpSpec, x):
    """Density of the hypoexponential law at ``x >= 0``.

    Uses partial fractions when they are well conditioned, otherwise the
    matrix exponential of the phase-type generator.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    r = np.asarray(spec.rates, dtype=np.longdouble)
    w = spec.weights
    if float(np.sum(np.abs(w))) * float(np.finfo(np.longdouble).eps) > _PDF_ERR_TOL:
        out = np.maximum(_phase_type_pdf(spec.rates, x), 0.0)
    else:
        vals = np.sum(w * r * np.exp(-r * x[..., None].astype(np.longdouble)), axis=-1)
        out = np.maximum(vals.astype(float), 0.0)
    return out[()] if out.ndim == 0 else out
