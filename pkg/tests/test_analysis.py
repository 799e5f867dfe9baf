import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dimred.analysis import (
    DomainError,
    FitError,
    SeriesTable,
    exact_bp_table,
    fit_theta,
    ratio_extrapolate,
    stirling_asymptotic,
    tree_function,
    tree_function_series,
)
from dimred.mc_core import MCEstimate
from dimred.polymer import bp_exact_coefficient

Z_C_2 = 1 / (2 * math.pi)
# radius of convergence of the d=3 closed form: 1/e at argument 2 pi z
Z_C_3 = 1 / (2 * math.pi * math.e)


def test_tree_function_examples():
    assert tree_function(0.0) == 0.0
    assert tree_function(math.exp(-1)) == 1.0
    t = tree_function(0.2)
    assert abs(t * math.exp(-t) - 0.2) <= 1e-14
    assert float(t) == pytest.approx(float(-mp.lambertw(-0.2)), rel=1e-14)


def test_tree_function_domain():
    with pytest.raises(DomainError):
        tree_function(0.4)


def test_tree_function_residual_grid():
    for z in np.linspace(-5, math.exp(-1), 1000)[1:]:
        t = tree_function(z)
        assert abs(t * math.exp(-t) - z) <= 1e-13


@given(st.floats(-50, math.exp(-1) - 1e-12))
def test_tree_function_principal_branch(z):
    t = tree_function(z)
    assert t <= 1.0
    assert abs(t * math.exp(-t) - z) <= 1e-13 * max(1.0, abs(z))


def test_tree_function_series():
    for z in (-0.2, 0.05, 0.2):
        assert tree_function_series(z, 200) == pytest.approx(tree_function(z), rel=1e-12)


def test_bp_generating_function_is_scaled_tree_function():
    z = 0.5 * Z_C_3
    partial = math.fsum(bp_exact_coefficient(n, 3) * z**n for n in range(1, 31))
    # Z_BP counts N >= 1; the generating function is (1/2pi) T(2 pi z)
    assert abs(partial - tree_function(2 * math.pi * z) / (2 * math.pi)) <= 1e-10


def test_stirling_ratios():
    r = lambda n: stirling_asymptotic(n) / bp_exact_coefficient(n, 3)
    assert 0.5 <= r(1) <= 2.0
    assert 0.9 <= r(10) <= 1.1
    assert 0.99 <= r(100) <= 1.01


def test_stirling_first_correction():
    # the next Stirling term makes the ratio 1 + 1/(12 N) + O(N^-2)
    n = 60
    exact = mp.mpf(n) ** (n - 1) / mp.factorial(n) * (2 * mp.pi) ** (n - 1)
    ratio = float(mp.mpf(stirling_asymptotic(n)) / exact)
    assert ratio == pytest.approx(1 + 1 / (12 * n), rel=1e-4)
    assert stirling_asymptotic(400) == math.inf


def test_fit_d2():
    fit = fit_theta(exact_bp_table(2, 50), (10, 50))
    assert abs(fit.theta - 1.0) <= 0.02
    assert abs(fit.z_c / Z_C_2 - 1) <= 1e-3
    assert fit.orders == (10, 50)


def test_fit_d3():
    fit = fit_theta(exact_bp_table(3, 50), (10, 50))
    assert abs(fit.theta - 1.5) <= 0.05
    assert abs(fit.z_c / Z_C_3 - 1) <= 1e-3


def test_fit_synthetic_model_exact():
    table = SeriesTable({n: n**-2.0 * 3.0**n for n in range(1, 41)})
    fit = fit_theta(table, (5, 40))
    assert fit.theta == pytest.approx(2.0, abs=1e-6)
    assert fit.z_c == pytest.approx(1 / 3, abs=1e-6)
    assert fit.residual < 1e-8


def test_fit_alternating_table():
    table = SeriesTable({n: (-1) ** (n - 1) * n**-1.5 * 2.0**n for n in range(1, 31)})
    fit = fit_theta(table, (5, 30))
    assert fit.theta == pytest.approx(1.5, abs=1e-6) and fit.z_c == pytest.approx(0.5, abs=1e-6)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_theta(exact_bp_table(2, 12), (10, 12))
    bad = SeriesTable({n: (1.0 if n % 3 else -1.0) for n in range(1, 20)})
    with pytest.raises(FitError):
        fit_theta(bad, (1, 19))


def test_fit_mc_table_weights():
    rng = np.random.default_rng(0)
    vals = {}
    for n in range(1, 31):
        true = n**-1.0 * 4.0**n
        vals[n] = MCEstimate(true * (1 + 1e-4 * rng.normal()), 1e-4 * true, 1000, 0)
    fit = fit_theta(SeriesTable(vals, "mc"), (5, 30))
    assert fit.theta == pytest.approx(1.0, abs=0.05) and fit.z_c == pytest.approx(0.25, rel=1e-3)


def test_ratio_method():
    zc, th = ratio_extrapolate(exact_bp_table(2, 50))
    assert zc == pytest.approx(Z_C_2, rel=1e-6) and th == pytest.approx(1.0, abs=1e-3)
    zc, th = ratio_extrapolate(exact_bp_table(3, 200))
    assert zc == pytest.approx(Z_C_3, rel=1e-4) and th == pytest.approx(1.5, abs=0.02)
    zc, th = ratio_extrapolate(SeriesTable({n: 2.0**n for n in range(1, 21)}))
    assert zc == pytest.approx(0.5, rel=1e-12) and th == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(FitError):
        ratio_extrapolate(SeriesTable({n: 1.0 for n in range(1, 5)}))


def test_series_table_validation():
    with pytest.raises(ValueError):
        SeriesTable({1: 1.0, 3: 2.0})
    with pytest.raises(ValueError):
        SeriesTable({1: math.nan})
    with pytest.raises(ValueError):
        SeriesTable({1: 1.0}, provenance="guess")


def test_large_order_tables_stay_in_log_domain():
    table = exact_bp_table(3, 500)
    assert math.isinf(table.mean(500))
    assert table.log_abs(500) == pytest.approx(
        499 * math.log(2 * math.pi) + 499 * math.log(500) - math.lgamma(501), rel=1e-14)
    assert table.sign(500) == 1
