import math

import numpy as np
import pytest
from scipy import integrate, stats

from dimred.combinatorics import TreeGraph, enumerate_trees
from dimred.mc_core import RandomStream, sphere_area, z_score
from dimred.polymer import (
    HARD_CORE,
    SamplerError,
    bp_coefficient,
    bp_exact_coefficient,
    gaussian,
    radial_table,
    soft,
    tree_sampler,
    tree_weight,
    tree_weight_hardcore,
    tree_weight_soft,
)

PATH3 = TreeGraph(3, ((1, 2), (2, 3)))
DIMER = TreeGraph(2, ((1, 2),))
# W(dimer) for v(t) = exp(-t) in d=4, from 30-digit radial quadrature
SOFT_DIMER_D4 = 15.7242458222564303208286098814
SOFT_DIMER_D3 = 8.07480117168499841050155223516


def test_single_vertex_weight_is_one():
    t = TreeGraph(1, ())
    assert tree_weight_hardcore(t, 3, 100, 0).mean == 1.0
    assert tree_weight_soft(t, gaussian(), 3, 100, 0).mean == 1.0


def test_dimer_weight_is_full_sphere():
    est = tree_weight_hardcore(DIMER, 2, 1000, 0)
    assert est.mean == pytest.approx(2 * math.pi, rel=1e-15) and est.std_error == 0.0


def test_path3_weight_d3():
    # cos(theta) uniform, |u+v| >= 1 with probability 3/4
    est = tree_weight_hardcore(PATH3, 3, 10**6, 1)
    assert abs(est.mean - 12 * math.pi**2) <= 3 * est.std_error


def test_rejects_low_dimension():
    with pytest.raises(ValueError):
        tree_weight_hardcore(PATH3, 1, 100, 0)


def test_tree_sampler_bond_lengths_are_one():
    for tree in enumerate_trees(4):
        pos = tree_sampler(tree, 3)(RandomStream(0, 0).generator(), 200)
        assert np.allclose(pos[:, 0], 0.0)
        for i, j in tree.edges:
            assert np.allclose(np.linalg.norm(pos[:, i - 1] - pos[:, j - 1], axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_weights_within_bounds(d):
    cap = sphere_area(d) ** 3
    for tree in enumerate_trees(4):
        w = tree_weight_hardcore(tree, d, 20000, 3).mean
        assert 0.0 <= w <= cap


def test_relabeling_symmetry_n4():
    path = TreeGraph(4, ((1, 2), (2, 3), (3, 4)))
    star = TreeGraph(4, ((1, 2), (1, 3), (1, 4)))
    for tree in (path, star):
        a = tree_weight_hardcore(tree, 3, 4 * 10**5, 5)
        b = tree_weight_hardcore(tree.relabel([3, 1, 4, 2]), 3, 4 * 10**5, 6)
        assert z_score(a, b) <= 3


def test_acceptance_probability_monotone_in_d():
    tree = TreeGraph(4, ((1, 2), (2, 3), (3, 4)))
    p3 = tree_weight_hardcore(tree, 3, 4 * 10**5, 7).scaled(sphere_area(3) ** -3)
    p4 = tree_weight_hardcore(tree, 4, 4 * 10**5, 8).scaled(sphere_area(4) ** -3)
    assert p4.mean - p3.mean >= -3 * math.hypot(p3.std_error, p4.std_error)


def test_exact_coefficients():
    assert bp_exact_coefficient(1, 2) == 1.0 == bp_exact_coefficient(1, 3)
    assert bp_exact_coefficient(2, 2) == pytest.approx(math.pi, rel=1e-15)
    assert bp_exact_coefficient(3, 2) == pytest.approx(4 * math.pi**2 / 3, rel=1e-15)
    assert bp_exact_coefficient(2, 3) == pytest.approx(2 * math.pi, rel=1e-15)
    assert bp_exact_coefficient(3, 3) == pytest.approx(6 * math.pi**2, rel=1e-15)
    assert bp_exact_coefficient(4, 2) == pytest.approx(62.01255336059963, rel=1e-14)
    with pytest.raises(ValueError):
        bp_exact_coefficient(3, 4)


@pytest.mark.parametrize("d,n", [(2, 2), (2, 3), (2, 4), (2, 5), (3, 2), (3, 3), (3, 4), (3, 5)])
def test_bp_coefficient_matches_closed_form(d, n):
    res = bp_coefficient(n, d, n_samples=4 * 10**5, seed=100 + n)
    assert res.method == "enumerated_mc"
    assert abs(res.value.mean - bp_exact_coefficient(n, d)) <= 3 * res.value.std_error + 1e-12


def test_bp_coefficient_sampled_trees_branch():
    res = bp_coefficient(4, 3, n_samples=4 * 10**5, seed=9, enumeration_bound=3)
    assert res.method == "sampled_trees_mc"
    assert abs(res.value.mean - bp_exact_coefficient(4, 3)) <= 3 * res.value.std_error


def test_bp_coefficient_n1():
    res = bp_coefficient(1, 3, n_samples=10, seed=0)
    assert res.value.mean == 1.0


# -- soft potentials ---------------------------------------------------------------

def test_gaussian_normalization_matches_quadrature():
    pot = gaussian(1.3, 0.8)
    for d in (2, 3, 4):
        radial, _ = integrate.quad(lambda r: -2 * pot.v_prime(r * r) * r ** (d - 1), 0, np.inf)
        assert pot.edge_normalization(d) == pytest.approx(sphere_area(d) * radial, rel=1e-10)


def test_soft_dimer_d4_against_quadrature():
    est = tree_weight_soft(DIMER, gaussian(), 4, 10**6, 2)
    assert abs(est.mean - SOFT_DIMER_D4) <= 3 * est.std_error
    # the live quadrature agrees with the frozen value
    q, _ = integrate.quad(lambda r: 2 * math.exp(-r * r) * math.exp(-math.exp(-r * r)) * r**3, 0, np.inf)
    assert sphere_area(4) * q == pytest.approx(SOFT_DIMER_D4, rel=1e-10)


def test_soft_amplitude_to_zero_kills_weight():
    pot = gaussian(0.0)
    assert tree_weight_soft(DIMER, pot, 3, 100, 0).mean == 0.0
    small = tree_weight_soft(DIMER, gaussian(1e-6), 3, 10**4, 0).mean
    assert 0 < small < 1e-4


def test_radial_table_reproduces_gaussian_sampler():
    g = gaussian()
    generic = soft(g.v, g.v_prime, label="gaussian-table")
    for d in (3, 4):
        assert generic.edge_normalization(d) == pytest.approx(g.edge_normalization(d), rel=1e-6)
        rng_a, rng_b = RandomStream(1, d).generator(), RandomStream(2, d).generator()
        ra = np.linalg.norm(generic.sample_edges(rng_a, 50000, d), axis=1)
        rb = np.linalg.norm(g.sample_edges(rng_b, 50000, d), axis=1)
        assert stats.ks_2samp(ra, rb).pvalue > 0.01
        # exact radial law: |y|^2 * 2 ~ chi-square with d degrees of freedom
        assert stats.kstest(2 * ra**2, "chi2", args=(d,)).pvalue > 0.01


def test_soft_weight_table_and_closed_form_agree():
    g = gaussian()
    generic = soft(g.v, g.v_prime, label="gaussian-table")
    a = tree_weight_soft(DIMER, g, 3, 4 * 10**5, 1)
    b = tree_weight_soft(DIMER, generic, 3, 4 * 10**5, 2)
    assert z_score(a, b) <= 3
    assert abs(a.mean - SOFT_DIMER_D3) <= 3 * a.std_error


def test_negative_bond_density_names_radius():
    # v'(t) > 0 near the origin: an attractive core
    pot = soft(lambda t: -np.exp(-t) + 2 * np.exp(-2 * t), lambda t: np.exp(-t) - 4 * np.exp(-2 * t))
    with pytest.raises(SamplerError, match="r ="):
        radial_table(pot, 3)


def test_radial_table_rejects_hard_core():
    with pytest.raises(ValueError):
        radial_table(HARD_CORE, 3)


def test_tree_weight_dispatch():
    assert tree_weight(DIMER, 3, HARD_CORE, 100, 0).mean == pytest.approx(4 * math.pi, rel=1e-15)
    assert tree_weight(DIMER, 3, gaussian(), 100, 0).n_samples == 100


def test_truncation_radius():
    g = gaussian(1.0, 1.0)
    r = g.interaction_range()
    assert float(g.v(r * r)) == pytest.approx(1e-12, rel=1e-9)
    generic = soft(g.v, g.v_prime)
    assert generic.interaction_range() == pytest.approx(r, rel=1e-6)
    slow = soft(lambda t: (1.0 + np.asarray(t)) ** -0.25, lambda t: -0.25 * (1.0 + np.asarray(t)) ** -1.25)
    assert slow.interaction_range() is None
