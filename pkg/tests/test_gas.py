import dataclasses
import math

import numpy as np
import pytest
from scipy import integrate

from dimred.analysis import DomainError
from dimred.combinatorics import connected_parts_from_subsets, subset_products
from dimred.gas import (
    boltzmann,
    connected_configuration,
    exact_gas_coefficient,
    mayer_coefficient_mc,
    pressure_exact,
    resum_check,
    series_exact,
    soft_gas_coefficient_mc,
    _pair_matrix,
)
from dimred.mc_core import z_score
from dimred.polymer import HARD_CORE, gaussian, soft

# (1/2) int (exp(-exp(-x^2)) - 1) dx, 30-digit quadrature
SOFT_A2_D1 = -0.642572260478947850458717052088
# (1/6) int int J_c(0, x2, x3) for v(t) = exp(-t), 2-d quadrature (mpmath, confirmed by scipy dblquad)
SOFT_A3_D1 = 0.72059216051822559068


def test_boltzmann_examples():
    assert boltzmann([[0.0], [0.5]]) == 0.0
    assert boltzmann([[0.0], [2.0]]) == 1.0
    assert boltzmann([[0.3, 0.1]]) == 1.0
    assert boltzmann([[1.0]], gaussian()) == 1.0
    x = np.array([[0.0, 0.0], [0.6, 0.8], [3.0, 0.0]])
    expect = math.exp(-math.exp(-1.0) - math.exp(-9.0) - math.exp(-(2.4**2 + 0.64)))
    assert boltzmann(x, gaussian()) == pytest.approx(expect, rel=1e-14)


def test_boltzmann_batch():
    X = np.array([[[0.0], [0.5]], [[0.0], [1.5]]])
    np.testing.assert_array_equal(boltzmann(X), [0.0, 1.0])


@pytest.mark.parametrize("n,D,target", [(2, 1, -1.0), (2, 2, -math.pi / 2), (3, 1, 1.5)])
def test_mayer_examples(n, D, target):
    res = mayer_coefficient_mc(n, D, n_samples=4 * 10**5, seed=1)
    assert res.method == "mc_cluster"
    assert abs(res.value.mean - target) <= 3 * res.value.std_error + 1e-12


def test_n2_d1_is_exact():
    # the sampling box coincides with the overlap region
    res = mayer_coefficient_mc(2, 1, n_samples=1000, seed=0)
    assert res.value.mean == -1.0 and res.value.std_error == 0.0


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_d1_series_reproduced(n):
    res = mayer_coefficient_mc(n, 1, n_samples=4 * 10**5, seed=10 + n)
    assert abs(res.value.mean - exact_gas_coefficient(n, 1)) <= 3 * res.value.std_error + 1e-12


@pytest.mark.parametrize("D", [1, 2])
def test_sign_alternation(D):
    for n in range(2, 6 if D == 1 else 5):
        res = mayer_coefficient_mc(n, D, n_samples=2 * 10**5, seed=n)
        assert np.sign(res.value.mean) == (-1) ** (n - 1)


def test_out_of_range():
    for n, D in [(1, 1), (9, 1), (3, 0)]:
        with pytest.raises(ValueError):
            mayer_coefficient_mc(n, D, n_samples=10, seed=0)
    slow = soft(lambda t: (1.0 + np.asarray(t)) ** -0.25, lambda t: -0.25 * (1.0 + np.asarray(t)) ** -1.25)
    with pytest.raises(ValueError):
        mayer_coefficient_mc(2, 1, slow, n_samples=10, seed=0)


def test_resum_self_check_detects_corruption():
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(50, 4, 1))
    J = subset_products(_pair_matrix(X, HARD_CORE))
    Jc = connected_parts_from_subsets(J)
    assert resum_check(J, Jc, 4) <= 1e-12
    Jc[-1] += 0.5
    assert resum_check(J, Jc, 4) > 0.1


def test_connected_configuration_n2_is_mayer_f():
    f = connected_configuration(2, HARD_CORE)
    x = np.array([[[0.5]], [[1.5]], [[-0.99]]])
    np.testing.assert_array_equal(f(x), [-1.0, 0.0, -1.0])


def test_pressure_exact():
    assert pressure_exact(0, 0.0) == 0.0
    assert pressure_exact(0, 1.5) == pytest.approx(math.log(2.5), rel=1e-15)
    assert pressure_exact(1, math.e) == pytest.approx(1.0, abs=1e-15)
    for z in (-0.3, 0.01, 0.7, 5.0, 100.0):
        x = pressure_exact(1, z)
        assert abs(x * math.exp(x) - z) <= 1e-14 * max(1.0, abs(z))


def test_pressure_near_branch_point():
    eps = 1e-9
    x = pressure_exact(1, -math.exp(-1) + eps)
    # square-root branch: x = -1 + sqrt(2 e eps) + O(eps)
    assert abs(x + 1 - math.sqrt(2 * math.e * eps)) <= 1e-6
    assert x > -1


def test_pressure_domain_errors():
    with pytest.raises(DomainError):
        pressure_exact(1, -math.exp(-1))
    with pytest.raises(DomainError):
        pressure_exact(0, -1.0)
    with pytest.raises(ValueError):
        pressure_exact(2, 0.1)


def test_series_exact_values():
    d0 = series_exact(0, 5)
    assert [d0.mean(k) for k in (1, 2, 3)] == pytest.approx([1, -0.5, 1 / 3], rel=1e-15)
    d1 = series_exact(1, 6)
    assert [d1.mean(k) for k in (1, 2, 3)] == pytest.approx([1, -1, 1.5], rel=1e-15)
    assert d1.mean(4) == pytest.approx(-64 / 24, rel=1e-15)
    assert d1.mean(5) == pytest.approx(625 / 120, rel=1e-15)


def test_series_matches_pressure_taylor():
    z = 0.05
    d1 = series_exact(1, 40)
    assert math.fsum(d1.mean(k) * z**k for k in d1.orders) == pytest.approx(pressure_exact(1, z), rel=1e-13)


# -- soft gas --------------------------------------------------------------------

def test_soft_a2_quadrature_oracle():
    q, _ = integrate.quad(lambda x: math.expm1(-math.exp(-x * x)), -np.inf, np.inf, epsabs=1e-13)
    assert 0.5 * q == pytest.approx(SOFT_A2_D1, abs=1e-8)


def test_soft_a2_mc():
    res = soft_gas_coefficient_mc(2, 1, gaussian(), n_samples=10**6, seed=3)
    assert abs(res.value.mean - SOFT_A2_D1) <= 3 * res.value.std_error


def test_soft_a3_mc():
    res = soft_gas_coefficient_mc(3, 1, gaussian(), n_samples=10**6, seed=4)
    assert abs(res.value.mean - SOFT_A3_D1) <= 3 * res.value.std_error


def test_free_gas_has_no_connected_part():
    assert soft_gas_coefficient_mc(2, 1, gaussian(0.0), n_samples=100, seed=0).value.mean == 0.0
    with pytest.raises(ValueError):
        soft_gas_coefficient_mc(2, 1, HARD_CORE, n_samples=100, seed=0)


def test_truncation_doubling_changes_nothing():
    # averaged over seeds the shift must stay below one per-run standard error
    g = gaussian()
    wide = dataclasses.replace(g, truncation_radius=2 * g.interaction_range())
    diffs, sig = [], []
    for seed in range(10):
        a = soft_gas_coefficient_mc(2, 1, g, n_samples=10**5, seed=seed).value
        b = soft_gas_coefficient_mc(2, 1, wide, n_samples=10**5, seed=1000 + seed).value
        diffs.append(a.mean - b.mean)
        sig.append(math.hypot(a.std_error, b.std_error))
    assert abs(np.mean(diffs)) < np.mean(sig)
