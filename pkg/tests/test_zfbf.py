import math

import numpy as np
import pytest

from vcdas.geometry import LargeScaleGains, form_virtual_cells, generate_topology, pairwise_gains
from vcdas.grouping import GroupPartition, group_users
from vcdas.zfbf import zf_precoders, zf_solve, zfbf_user_rates


def cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def test_single_link_is_matched_filter():
    g = np.array([[0.3 - 0.4j]])
    W, ok = zf_precoders(g)
    assert ok
    np.testing.assert_allclose(W, np.conj(g.T) / abs(g[0, 0]), rtol=1e-14)


def test_more_users_than_antennas_gives_zero():
    W, ok = zf_precoders(np.array([[1.0 + 0j], [2.0 + 0j]]))
    assert not ok and W.shape == (1, 2) and not W.any()


def test_rank_deficient_gives_zero():
    g = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]], dtype=complex)
    W, ok = zf_precoders(g)
    assert not ok and not W.any()


def test_random_realization_against_linear_solve(rng):
    G = cn(rng, (3, 5))
    sol = zf_solve(G)
    F = np.linalg.lstsq(G, np.eye(3), rcond=None)[0]   # minimum-norm right inverse
    np.testing.assert_allclose(G @ F, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(sol.W, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(sol.f_norm2, np.sum(np.abs(F) ** 2, axis=0), rtol=1e-10)


def test_batched_residual_and_gain(rng):
    for _ in range(50):
        k = rng.integers(1, 8)
        b = rng.integers(k, 14)
        G = cn(rng, (20, k, b)) * rng.uniform(0.1, 30, size=(1, k, b))
        sol = zf_solve(G)
        assert sol.ok.all()
        E = G @ sol.W
        diag = np.einsum("nkk->nk", E)
        off = E - np.einsum("nk,kj->nkj", diag, np.eye(k))
        rel = np.abs(off) / (np.linalg.norm(G, axis=2)[:, :, None] * 1.0)
        assert rel.max() < 1e-9
        np.testing.assert_allclose(diag, 1 / np.sqrt(sol.f_norm2), rtol=1e-9)


def _setup(K, L, V, seed):
    t = generate_topology(K, L, seed)
    return group_users(form_virtual_cells(t, V)), pairwise_gains(t, 4.0)


def test_single_group_has_no_interference():
    part, gains = _setup(6, 12, 12, 0)
    rep = zfbf_user_rates(part, gains, 10.0, 1000, 2000, 1)
    assert part.n_groups == 1
    assert not any(rep.diagnostics["interference"])
    assert np.all(rep.per_user_rates > 0)


def test_infeasible_group_gets_zero_rate():
    gains = LargeScaleGains(np.ones((3, 4)), 4.0)
    part = GroupPartition(((0, 1), (2,)), ((0,), (1, 2)))
    rep = zfbf_user_rates(part, gains, 10.0, 1000, 1000, 0)
    assert rep.per_user_rates[0] == 0 and rep.per_user_rates[1] == 0
    assert rep.per_user_rates[2] > 0
    assert rep.diagnostics["infeasible_groups"] == 1


def test_users_outside_partition_get_zero():
    gains = LargeScaleGains(np.ones((3, 4)), 4.0)
    part = GroupPartition(((0,),), ((0, 1),))
    rep = zfbf_user_rates(part, gains, 10.0, 1000, 1000, 0)
    assert rep.per_user_rates[1] == 0 and rep.per_user_rates[2] == 0


def test_single_user_rate_against_direct_mc():
    # one user, matched filter over two antennas: E log2(1 + snr ||g||^2)
    g = np.array([[1.5, 0.5]])
    rep = zfbf_user_rates(GroupPartition(((0,),), ((0, 1),)), LargeScaleGains(g, 4.0),
                          10.0, 1000, 200_000, 3)
    h = np.random.default_rng(0).standard_exponential((400_000, 2))
    ref = np.log2(1 + 10 * h @ g[0] ** 2).mean()
    assert rep.per_user_rates[0] == pytest.approx(ref, abs=4 * rep.std_errors[0] + 0.005)


def test_interference_uses_average_antenna_power(rng):
    # two singleton groups on disjoint antennas: the foreign antenna always radiates power 1
    gains = LargeScaleGains(np.array([[1.0, 0.5], [0.25, 2.0]]), 4.0)
    part = GroupPartition(((0,), (1,)), ((0,), (1,)))
    rep = zfbf_user_rates(part, gains, 10.0, 1000, 1000, 0)
    np.testing.assert_allclose(rep.diagnostics["interference"], [0.25, 0.0625], rtol=1e-12)


def test_reproducible_and_seed_sensitive():
    part, gains = _setup(10, 20, 2, 4)
    a = zfbf_user_rates(part, gains, 10.0, 1000, 1000, 7)
    b = zfbf_user_rates(part, gains, 10.0, 1000, 1000, 7)
    c = zfbf_user_rates(part, gains, 10.0, 1000, 1000, 8)
    np.testing.assert_array_equal(a.per_user_rates, b.per_user_rates)
    assert not np.array_equal(a.per_user_rates, c.per_user_rates)


def test_instantaneous_mode_close_to_average():
    part, gains = _setup(8, 24, 2, 2)
    a = zfbf_user_rates(part, gains, 10.0, 4000, 4000, 1)
    b = zfbf_user_rates(part, gains, 10.0, 4000, 4000, 1, interference="instantaneous")
    assert b.average_rate == pytest.approx(a.average_rate, rel=0.15)


def test_validation():
    part, gains = _setup(4, 8, 1, 0)
    with pytest.raises(ValueError):
        zfbf_user_rates(part, gains, 10.0, 999, 1000, 0)
    with pytest.raises(ValueError):
        zfbf_user_rates(part, gains, -1.0, 1000, 1000, 0)
    with pytest.raises(ValueError):
        zfbf_user_rates(part, gains, 10.0, 1000, 1000, 0, interference="x")
    with pytest.raises(ValueError):
        zf_solve(np.array([[np.nan + 0j]]))
