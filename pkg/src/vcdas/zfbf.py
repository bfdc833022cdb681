"""Zero-forcing joint transmission inside user groups.

Each group's antennas serve its members with unit-norm, column-normalized
pseudo-inverse precoders at per-user power 1; noise power is ``1 / snr``.
Other groups are seen as Gaussian interference with their fading-averaged
power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import seeding
from .geometry import LargeScaleGains
from .grouping import GroupPartition
from .report import RateReport

RANK_TOL = 1e-12
BATCH = 256


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


@dataclass(frozen=True)
class ZfSolution:
    """Precoders for stacked channels ``G`` of shape ``(..., n_users, n_ant)``.

    ``W`` has shape ``(..., n_ant, n_users)`` with unit-norm columns, or is
    all zero where ``ok`` is False.  ``f_norm2`` holds the squared norms of
    the unnormalized pseudo-inverse columns (inf where not ok).
    """

    W: np.ndarray
    ok: np.ndarray
    f_norm2: np.ndarray


def zf_solve(G) -> ZfSolution:
    G = np.asarray(G, dtype=complex)
    if not np.all(np.isfinite(G)):
        raise ValueError("channel has non-finite entries")
    *lead, k, b = G.shape
    if b < k:
        return ZfSolution(np.zeros((*lead, b, k), dtype=complex),
                          np.zeros(lead, dtype=bool),
                          np.full((*lead, k), np.inf))
    U, s, Vh = np.linalg.svd(G, full_matrices=False)
    ok = s[..., -1] > RANK_TOL * s[..., 0]
    s_inv = np.where(ok[..., None], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    # pinv = V diag(1/s) U^H
    F = np.conj(np.swapaxes(Vh, -1, -2)) @ (s_inv[..., :, None] * np.conj(np.swapaxes(U, -1, -2)))
    f_norm2 = np.sum(np.abs(F) ** 2, axis=-2)
    W = F / np.sqrt(np.where(ok[..., None], f_norm2, 1.0))[..., None, :]
    f_norm2 = np.where(ok[..., None], f_norm2, np.inf)
    return ZfSolution(W, ok, f_norm2)


def zf_precoders(channel):
    """Unit-norm ZF precoders for one group channel ``(n_users, n_ant)``.

    Returns ``(W, ok)``.  ``W`` is ``(n_ant, n_users)``; it is all zero when
    there are fewer antennas than users or the channel is rank deficient,
    in which case ``ok`` is False.
    """
    sol = zf_solve(channel)
    return sol.W, bool(sol.ok)


def _group_channels(gamma_sub, rng, n):
    return gamma_sub[None] * _cn(rng, (n, *gamma_sub.shape))


def _batches(n):
    full, rest = divmod(n, BATCH)
    return [BATCH] * full + ([rest] if rest else [])


def antenna_power_profile(gamma_sub, n_draws, seed, key) -> tuple[np.ndarray, int]:
    """Fading-averaged total precoder power on each antenna of one group."""
    acc = np.zeros(gamma_sub.shape[1])
    failed = 0
    for c, n in enumerate(_batches(n_draws)):
        sol = zf_solve(_group_channels(gamma_sub, seeding.stream(seed, *key, c), n))
        acc += np.sum(np.abs(sol.W) ** 2, axis=(0, 2))
        failed += int(np.sum(~sol.ok))
    return acc / n_draws, failed


def _check(partition, gains, snr, n_outer, n_inner):
    if not snr > 0:
        raise ValueError("snr must be positive")
    if n_outer < 1000 or n_inner < 1000:
        raise ValueError("sample counts must be at least 1000")
    for users, ants in zip(partition.groups, partition.antenna_sets):
        if max(users) >= gains.K or (ants and max(ants) >= gains.L):
            raise ValueError("partition does not match the gain matrix")


def zfbf_user_rates(partition: GroupPartition, gains: LargeScaleGains, snr: float,
                    n_outer: int, n_inner: int, seed,
                    interference: str = "average") -> RateReport:
    """Per-user ZFBF ergodic rates with inter-group interference.

    Phase 1 estimates, for every group, the average precoder power on each
    of its antennas from ``n_outer`` fading draws of that group's channel;
    a user's interference power is then the sum over foreign antennas of
    that power times the user's path gain.  Phase 2 averages
    ``log2(1 + |g_k w_k|^2 / (1/snr + I_k))`` over ``n_inner`` draws of the
    user's own group channel.

    ``interference="instantaneous"`` instead redraws every group's channel
    and the user's foreign links per sample and uses the realized
    interference; phase 1 is then skipped.

    Users left out of the partition get rate 0.  Streams are addressed by
    (phase, group, batch) under ``seed``.
    """
    if interference not in ("average", "instantaneous"):
        raise ValueError(f"unknown interference mode {interference!r}")
    _check(partition, gains, snr, n_outer, n_inner)
    gamma = gains.gamma
    power = gains.power
    K = gains.K
    noise = 1.0 / snr
    groups = [np.array(g) for g in partition.groups]
    ants = [np.array(a, dtype=int) for a in partition.antenna_sets]
    group_of = partition.group_of(K)
    feasible = [a.size >= g.size for g, a in zip(groups, ants)]
    failed = 0

    interf = np.zeros(K)
    if interference == "average" and len(groups) > 1:
        antenna_power = np.zeros(gains.L)
        for m, (g, a) in enumerate(zip(groups, ants)):
            if not feasible[m]:
                continue
            prof, bad = antenna_power_profile(gamma[np.ix_(g, a)], n_outer, seed,
                                              (seeding.ZF_INTERFERENCE, m))
            antenna_power[a] = prof
            failed += bad
        interf = power @ antenna_power
        for g, a in zip(groups, ants):
            interf[g] -= power[np.ix_(g, a)] @ antenna_power[a]
        interf = np.maximum(interf, 0.0)

    rates = np.zeros(K)
    se = np.zeros(K)
    if interference == "average":
        for m, (g, a) in enumerate(zip(groups, ants)):
            if not feasible[m]:
                continue
            total = np.zeros(g.size)
            total_sq = np.zeros(g.size)
            for c, n in enumerate(_batches(n_inner)):
                rng = seeding.stream(seed, seeding.ZF_RATE, m, c)
                sol = zf_solve(_group_channels(gamma[np.ix_(g, a)], rng, n))
                failed += int(np.sum(~sol.ok))
                x = np.log2(1.0 + (1.0 / sol.f_norm2) / (noise + interf[g]))
                total += x.sum(axis=0)
                total_sq += (x ** 2).sum(axis=0)
            mean = total / n_inner
            var = np.maximum(total_sq / n_inner - mean ** 2, 0.0) * n_inner / (n_inner - 1)
            rates[g] = mean
            se[g] = np.sqrt(var / n_inner)
    else:
        rates, se, failed = _instantaneous_rates(groups, ants, feasible, gamma,
                                                 noise, n_inner, seed)

    return RateReport(
        per_user_rates=np.where(group_of >= 0, rates, 0.0),
        std_errors=se,
        method=f"zfbf-{interference}",
        group_sizes=partition.sizes,
        diagnostics={"rank_deficient_draws": failed,
                     "infeasible_groups": int(sum(not f for f in feasible)),
                     "interference": interf.tolist()},
    )


def _instantaneous_rates(groups, ants, feasible, gamma, noise, n_draws, seed):
    K = gamma.shape[0]
    total = np.zeros(K)
    total_sq = np.zeros(K)
    failed = 0
    for c, n in enumerate(_batches(n_draws)):
        rng = seeding.stream(seed, seeding.ZF_RATE, 0, c)
        signal = np.zeros((n, K))
        rx = np.zeros((n, K))          # power received from all groups
        own = np.zeros((n, K))         # power received from own group
        for m, (g, a) in enumerate(zip(groups, ants)):
            h_all = _cn(rng, (n, K, a.size))           # every user <- group m antennas
            if not feasible[m]:
                continue
            G_all = gamma[:, a][None] * h_all
            sol = zf_solve(G_all[:, g, :])
            failed += int(np.sum(~sol.ok))
            p = np.sum(np.abs(G_all @ sol.W) ** 2, axis=-1)   # (n, K)
            rx += p
            own[:, g] = p[:, g]
            signal[:, g] = np.where(sol.ok[:, None], 1.0 / sol.f_norm2, 0.0)
        x = np.log2(1.0 + signal / (noise + np.maximum(rx - own, 0.0)))
        total += x.sum(axis=0)
        total_sq += (x ** 2).sum(axis=0)
    mean = total / n_draws
    var = np.maximum(total_sq / n_draws - mean ** 2, 0.0) * n_draws / (n_draws - 1)
    return mean, np.sqrt(var / n_draws), failed
