"""MRT within each virtual cell: power fractions, average SINR, ergodic rate.

Transmit power is normalized to one, so the noise term is ``1 / snr``.
Rates are in bits/s/Hz.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .geometry import LargeScaleGains, VirtualCellMap
from .specfun import exp_e1, perturb_rates

log = logging.getLogger(__name__)

LOG2E = 1.0 / np.log(2.0)
_LD_EPS = float(np.finfo(np.longdouble).eps)
# predicted relative error above which the partial-fraction sums are
# replaced by their one-dimensional integral representation
FRACTION_ERR_TOL = 1e-10
RATE_ERR_TOL = 1e-9
# error of exp_e1 itself, amplified by cancellation in the rate sum
_E1_EPS = 1e-15


def _perturbed(gains):
    """Cells where the near-duplicate rule had to move a rate."""
    lam = np.asarray(gains, dtype=float) ** -2.0
    return np.any(perturb_rates(lam) != lam, axis=-1)


def _fractions_partial(gains):
    """Partial-fraction fractions along the last axis, plus predicted error."""
    g = np.asarray(gains, dtype=float)
    lam = perturb_rates(g ** -2.0).astype(np.longdouble)
    lam = lam / lam.max(axis=-1, keepdims=True)
    V = lam.shape[-1]
    eye = np.eye(V, dtype=bool)

    # Q[m] = prod_{t != m} lam_t / (lam_t - lam_m)
    diff_tm = lam[..., :, None] - lam[..., None, :]
    ratio = lam[..., :, None] / np.where(eye, 1.0, diff_tm)
    Q = np.prod(np.where(eye, 1.0, ratio), axis=-2)

    lam_l = lam[..., :, None]
    lam_m = lam[..., None, :]
    num = lam_l * lam_m * (np.log(lam_l) - np.log(lam_m) - 1.0) + lam_m ** 2
    den = lam_l * np.where(eye, 1.0, lam_l - lam_m)
    terms = np.where(eye, 0.0, num * Q[..., None, :] / den)
    frac = terms.sum(axis=-1)
    cond = np.abs(terms).sum(axis=-1) / np.abs(frac)
    err = cond * _LD_EPS * (4 * V)
    return frac.astype(float), np.where(np.isfinite(err), err, np.inf).max(axis=-1)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _fractions_integral(gains):
    """Fractions from their integral form, batched over leading axes.

    a_l = int_0^inf m_l / (1 + s m_l) * prod_i 1 / (1 + s m_i) ds with
    m = gains**2 / max(gains**2).  Integrated in u = log s on unit-width
    panels with 10-point Gauss-Legendre.
    """
    m = np.asarray(gains, dtype=float) ** 2
    m = m / m.max(axis=-1, keepdims=True)
    V = m.shape[-1]
    u_lo = -40.0
    u_hi = float(-np.log(m.min())) + 80.0 / V
    edges = np.arange(u_lo, u_hi + 1.0)
    mid = 0.5 * (edges[:-1] + edges[1:])
    u = (mid[:, None] + 0.5 * _GL_NODES[None, :]).ravel()
    w = np.tile(0.5 * _GL_WEIGHTS, mid.size)
    s = np.exp(u)
    out = np.zeros(m.shape)
    for start in range(0, s.size, 256):
        ss = s[start:start + 256]
        d = 1.0 + ss[:, None] * m[..., None, :]          # (..., n, V)
        f = m[..., None, :] / d * np.exp(-np.sum(np.log(d), axis=-1, keepdims=True))
        out += np.einsum("...nv,n->...v", f, w[start:start + 256] * ss)
    return out


def fraction_matrix(gains):
    """MRT power fractions for a batch of cells; shape ``(..., V)``.

    Entry ``l`` is the fading-averaged fraction of transmit power that MRT
    puts on antenna ``l`` of a cell with amplitude gains ``gains[..., :]``.
    Returns ``(fractions, fallback_mask)``; the mask marks cells whose sums
    were ill-conditioned and were evaluated by quadrature instead.
    """
    g = np.asarray(gains, dtype=float)
    if np.any(~np.isfinite(g)) or np.any(g <= 0):
        raise ValueError("gains must be positive and finite")
    lead = g.shape[:-1]
    if g.shape[-1] == 1:
        return np.ones_like(g), np.zeros(lead, dtype=bool)
    with np.errstate(all="ignore"):
        frac, err = _fractions_partial(g)
    bad = ((err > FRACTION_ERR_TOL) | ~np.all(np.isfinite(frac), axis=-1)
           | _perturbed(g))
    if np.any(bad):
        frac = frac.copy()
        frac[bad] = _fractions_integral(g[bad])
    return frac, bad


def upsilon(x, others=()):
    """Fading-averaged MRT power fraction on an antenna of gain ``x``.

    ``others`` are the gains of the remaining ``V - 1`` antennas of the same
    virtual cell.  With no others the fraction is exactly 1.
    """
    others = list(others)
    if x <= 0 or any(b <= 0 for b in others):
        raise ValueError("all gains must be positive")
    if not others:
        return 1.0
    frac, _ = fraction_matrix(np.array([x] + others, dtype=float))
    return float(frac[0])


def mrt_power_fractions(cell_gains) -> np.ndarray:
    frac, _ = fraction_matrix(np.asarray(cell_gains, dtype=float))
    return frac


def _closed_form_partial(cell_gains, c):
    """Partial-fraction rate (bits) and predicted relative error."""
    g = np.asarray(cell_gains, dtype=float)
    V = g.shape[-1]
    lam = perturb_rates(g ** -2.0)
    arg = c[..., None] * lam
    e1 = exp_e1(arg).astype(np.longdouble)
    lam_ld = lam.astype(np.longdouble)
    lam_ld = lam_ld / lam_ld.max(axis=-1, keepdims=True)
    if V == 1:
        w = np.ones_like(lam_ld)
    else:
        eye = np.eye(V, dtype=bool)
        diff = lam_ld[..., None, :] - lam_ld[..., :, None]   # [l, q] = lam_q - lam_l
        ratio = lam_ld[..., None, :] / np.where(eye, 1.0, diff)
        w = np.prod(np.where(eye, 1.0, ratio), axis=-1)
    terms = e1 * w
    total = terms.sum(axis=-1)
    cond = np.abs(terms).sum(axis=-1) / np.abs(total)
    err = cond * (_E1_EPS + V * _LD_EPS)
    return (LOG2E * total).astype(float), np.where(np.isfinite(err), err, np.inf)


def _closed_form_integral(cell_gains, c):
    """E[log2(1 + X)] via int_0^inf (1 - M(s)) e^{-s} / s ds, M the MGF of X."""
    p = np.asarray(cell_gains, dtype=float) ** 2 / c

    def f(s):
        if s == 0.0:
            return p.sum()
        return -np.expm1(-np.sum(np.log1p(s * p))) * np.exp(-s) / s

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return LOG2E * val


def rate_from_gains(cell_gains, c):
    """Closed-form ergodic MRT rate for cells with gains ``(..., V)``.

    ``c`` is the normalized noise-plus-interference power ``1/snr + I``,
    broadcast over the leading axes.  Returns ``(rates, fallback_mask)``.
    """
    g = np.atleast_2d(np.asarray(cell_gains, dtype=float))
    c = np.broadcast_to(np.asarray(c, dtype=float), g.shape[:-1])
    if np.any(c <= 0):
        raise ValueError("noise-plus-interference must be positive")
    with np.errstate(all="ignore"):
        rates, err = _closed_form_partial(g, c)
    bad = (err > RATE_ERR_TOL) | ~np.isfinite(rates) | (rates < 0) | _perturbed(g)
    if np.any(bad):
        flat_r = rates.reshape(-1)
        flat_g = g.reshape(-1, g.shape[-1])
        flat_c = c.reshape(-1)
        for i in np.flatnonzero(bad.ravel()):
            flat_r[i] = _closed_form_integral(flat_g[i], flat_c[i])
        rates = flat_r.reshape(rates.shape)
        log.debug("rate: %d ill-conditioned cells evaluated by quadrature", int(bad.sum()))
    return rates, bad


@dataclass(frozen=True, eq=False)
class MrtContext:
    gains: LargeScaleGains
    vcells: VirtualCellMap
    snr: float

    def __post_init__(self):
        if not self.snr > 0:
            raise ValueError("snr must be positive")
        if self.gains.K != self.vcells.K:
            raise ValueError("gains and virtual cells disagree on K")
        if self.vcells.cells.max() >= self.gains.L:
            raise ValueError("virtual cell references an antenna outside the gain matrix")

    @property
    def K(self) -> int:
        return self.gains.K

    @cached_property
    def cell_gains(self) -> np.ndarray:
        """``(K, V)`` gains from each user to its own virtual cell."""
        return np.take_along_axis(self.gains.gamma, self.vcells.cells, axis=1)

    @cached_property
    def fractions(self) -> np.ndarray:
        """``(K, V)`` MRT power fractions of each user's virtual cell."""
        frac, _ = fraction_matrix(self.cell_gains)
        return frac

    @cached_property
    def antenna_power(self) -> np.ndarray:
        """``(K, L)`` average power each user's signal puts on each antenna."""
        a = np.zeros((self.K, self.gains.L))
        np.put_along_axis(a, self.vcells.cells, self.fractions, axis=1)
        return a

    @cached_property
    def interference(self) -> np.ndarray:
        """Normalized interference power at every user (transmit power = 1)."""
        a = self.antenna_power
        p = self.gains.power
        return p @ a.sum(axis=0) - np.einsum("kl,kl->k", p, a)

    @cached_property
    def signal(self) -> np.ndarray:
        return np.sum(self.cell_gains ** 2, axis=1)

    @cached_property
    def mu(self) -> np.ndarray:
        return self.signal / (1.0 / self.snr + self.interference)

    @cached_property
    def _closed_form(self):
        return rate_from_gains(self.cell_gains, 1.0 / self.snr + self.interference)

    def closed_form_rates(self) -> np.ndarray:
        return self._closed_form[0].copy()

    @property
    def fallback_mask(self) -> np.ndarray:
        """Users whose closed-form rate was evaluated by quadrature."""
        return self._closed_form[1].copy()


def average_sinr(ctx: MrtContext, k: int) -> float:
    return float(ctx.mu[k])


def ergodic_rate_closed_form(ctx: MrtContext, k: int) -> float:
    return float(ctx._closed_form[0][k])


def rate_mc(mu: float, cell_gains, n_samples: int, rng: np.random.Generator):
    """Sample mean and standard error of ``log2(1 + mu * ||g~||^2)``.

    ``g~`` is the unit-power-normalized Rayleigh channel to a cell with the
    given amplitude gains.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if mu == 0:
        return 0.0, 0.0
    g2 = np.asarray(cell_gains, dtype=float) ** 2
    beta2 = g2 / g2.sum()
    # |h|^2 for h ~ CN(0, 1) is Exp(1)
    h2 = rng.standard_exponential((n_samples, beta2.size))
    x = np.log2(1.0 + mu * (h2 @ beta2))
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(n_samples))


def ergodic_rate_mc(ctx: MrtContext, k: int, n_samples: int, rng: np.random.Generator):
    """Monte Carlo ergodic rate of user ``k`` over its own fading only."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    return rate_mc(float(ctx.mu[k]), ctx.cell_gains[k], n_samples, rng)


def ergodic_rate_instantaneous_mc(ctx: MrtContext, k: int, n_samples: int,
                                  rng: np.random.Generator, batch: int = 4096):
    """Rate of user ``k`` with the interference taken per fading draw.

    Every user's MRT precoder is redrawn with its own channel, and user k sees
    the actual interference power instead of its fading average.  For
    sensitivity studies only.
    """
    gamma = ctx.gains.gamma
    cells = ctx.vcells.cells
    K, V = cells.shape
    L = gamma.shape[1]
    vals = []
    done = 0
    while done < n_samples:
        n = min(batch, n_samples - done)
        # h[j, v]: fading from user j's cell antenna v to user j
        h = (rng.standard_normal((n, K, V)) + 1j * rng.standard_normal((n, K, V))) / np.sqrt(2)
        # fading from every antenna to user k; user k's own cell is a slice of it
        hk = (rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))) / np.sqrt(2)
        h[:, k, :] = hk[:, cells[k]]
        g_own = ctx.cell_gains[None] * h
        w = np.conj(g_own) / np.linalg.norm(g_own, axis=-1, keepdims=True)
        gk = (gamma[k] * hk)[:, cells]
        rx = np.abs(np.sum(gk * w, axis=-1)) ** 2
        sig = rx[:, k]
        interf = rx.sum(axis=1) - sig
        vals.append(np.log2(1.0 + sig / (1.0 / ctx.snr + interf)))
        done += n
    x = np.concatenate(vals)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(n_samples))
