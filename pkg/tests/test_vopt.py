import math

import pytest
from scipy import integrate

from vcdas.vopt import mean_nearest_user_distance, optimal_v, optimal_v_exact, vstar


def test_integral_form_matches_quadrature():
    for K in (3, 10, 50, 400):
        ref = integrate.quad(lambda x: 2 * (K - 1) * x * x * (1 - x * x) ** (K - 2), 0, 1)[0]
        assert mean_nearest_user_distance(K) == pytest.approx(ref, rel=1e-10)


def test_gamma_form_matches_its_integral():
    for K in (10, 50):
        ref = integrate.quad(lambda x: 2 * (K - 1) * x * x * math.exp(-(K - 2) * x * x), 0, 1)[0]
        assert mean_nearest_user_distance(K, form="gamma") == pytest.approx(ref, rel=1e-10)


def test_k50_value():
    assert mean_nearest_user_distance(50) == pytest.approx(0.89 / math.sqrt(50), rel=0.01)
    assert mean_nearest_user_distance(50) == pytest.approx(0.1259, abs=5e-4)


@pytest.mark.parametrize("form", ["integral", "gamma"])
def test_large_k_limit(form):
    K = 10 ** 6
    assert mean_nearest_user_distance(K, form) * math.sqrt(K) == pytest.approx(
        0.5 * math.sqrt(math.pi), rel=1e-4)


def test_vstar_examples():
    r = vstar(50, 100)
    assert r.v_exact == pytest.approx(0.396, abs=0.005) and r.v_integer == 1
    assert vstar(50, 100, form="gamma").v_exact == pytest.approx(0.43, abs=0.01)
    assert vstar(50, 2500).v_integer == 10
    assert optimal_v_exact(50, 2500) == pytest.approx(10, abs=0.2)


def test_vstar_structure():
    # fixed L/K: K doubling only moves the d-bar correction
    a = optimal_v_exact(1000, 20000)
    b = optimal_v_exact(2000, 40000)
    assert a == pytest.approx(b, rel=1e-3)
    assert a == pytest.approx(20 * math.pi / 16, rel=1e-3)


def test_rule_of_thumb():
    assert optimal_v(50, 100) == 1
    assert optimal_v(50, 1000) == 4
    assert optimal_v(50, 2500) == 10
    assert optimal_v(50, 1) == 1
    # exact integer arithmetic: 0.2 * 250 / 50 is exactly 1
    assert optimal_v(50, 250) == 1
    assert optimal_v(50, 251) == 2


def test_validation():
    with pytest.raises(ValueError):
        mean_nearest_user_distance(2)
    with pytest.raises(ValueError):
        mean_nearest_user_distance(10, form="nope")
    with pytest.raises(ValueError):
        optimal_v(0, 10)
