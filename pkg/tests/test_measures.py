import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad

from polycrit.errors import DomainError
from polycrit.exponents import StratumSpec, build_exponent_table
from polycrit.measures import (EdgeMeasure, F_profile, KernelParams, admissibility_integral, dirac,
                               dyadic_integral, equivalence_experiment, h_weight, inner_potential,
                               lifted_integral, measure_from_dict, measure_to_dict, poisson_potential,
                               uniform)
from polycrit.spectral import Arc


def edge_params(q):
    return KernelParams.from_table(build_exponent_table(StratumSpec(3, 2, opening=Arc(math.pi / 2))), q)


def pair(d=0.1, mass=0.5):
    return EdgeMeasure(1, ((np.array([-d / 2]), mass), (np.array([d / 2]), mass)), ())


def test_poisson_potential_unit_point():
    p = edge_params(1.8)
    assert p.nu == 5.0
    assert poisson_potential(p, dirac(1), [1.0, 0.0, 0.0]) == pytest.approx(1.0)


def test_poisson_potential_homogeneity_and_translation():
    p = edge_params(1.8)
    x = np.array([0.3, 0.4, 0.7])
    base = poisson_potential(p, dirac(1), x)
    for t in (0.5, 2.0, 7.0):
        assert poisson_potential(p, dirac(1), t * x) == pytest.approx(t ** (2 - 3 - 2) * base, rel=1e-12)
    mu = uniform([-0.2], [0.3])
    moved = poisson_potential(p, mu.translated([1.5]), x + [0, 0, 1.5])
    assert moved == pytest.approx(poisson_potential(p, mu, x), rel=1e-12)


@pytest.mark.parametrize("y, tau", [(0.0, 0.05), (0.3, 0.01), (2.0, 0.5), (-0.1, 1e-3)])
def test_segment_potential_against_quad(y, tau):
    mu = uniform([-0.25], [0.5], mass=2.0)
    ref = quad(lambda z: (tau ** 2 + (y - z) ** 2) ** -2.5, -0.25, 0.5, points=[y] if -0.25 < y < 0.5 else None,
               epsabs=0, epsrel=1e-13, limit=200)[0] * 2.0 / 0.75
    assert inner_potential(mu, tau, [[y]], 5.0)[0] == pytest.approx(ref, rel=1e-10)


def test_square_potential_against_dblquad():
    mu = uniform([0.0, 0.0], [1.0, 0.5])
    y, tau = np.array([0.3, 0.2]), 0.2
    ref = dblquad(lambda z2, z1: (tau ** 2 + (y[0] - z1) ** 2 + (y[1] - z2) ** 2) ** -3.0, 0, 1, 0, 0.5,
                  epsabs=0, epsrel=1e-11)[0] / 0.5
    assert inner_potential(mu, tau, y[None, :], 6.0)[0] == pytest.approx(ref, rel=1e-8)


def test_F_single_atom_against_quad():
    p = edge_params(1.8)
    tau = 0.1
    e = p.nu * p.q / 2
    full = 2 * quad(lambda y: (tau ** 2 + y * y) ** -e, 0, np.inf, epsrel=1e-13)[0]
    win = 2 * quad(lambda y: (tau ** 2 + y * y) ** -e, 0, 1.0, epsrel=1e-13)[0]
    assert F_profile(p, dirac(1), tau) == pytest.approx(full, rel=1e-10)
    assert F_profile(p, dirac(1), tau, R=1.0) == pytest.approx(win, rel=1e-10)


def test_F_generic_path_matches_closed_form():
    p = edge_params(1.8)
    mu = EdgeMeasure(1, ((np.array([0.0]), 0.4), (np.array([0.0]), 0.6)), ())
    for tau in (1e-3, 0.05, 1.0):
        assert F_profile(p, mu, tau) == pytest.approx(F_profile(p, dirac(1), tau), rel=1e-8)


def test_F_small_tau_slope():
    p = edge_params(1.8)
    taus = np.geomspace(1e-4, 1e-2, 5)
    vals = [F_profile(p, dirac(1), t) for t in taus]
    slope = np.polyfit(np.log(taus), np.log(vals), 1)[0]
    assert slope == pytest.approx(p.m - p.nu * p.q, rel=1e-2)


def test_F_two_distant_atoms_additive():
    p = edge_params(1.8)
    tau, D = 1e-3, 0.2
    mu = EdgeMeasure(1, ((np.array([0.0]), 1.0), (np.array([D]), 1.0)), ())
    assert F_profile(p, mu, tau) == pytest.approx(2 * F_profile(p, dirac(1), tau), rel=0.05)


def test_F_mass_homogeneity():
    p = edge_params(1.8)
    mu = uniform([0.0], [0.3]).scaled(1.0)
    for f in (lambda m: F_profile(p, m, 0.05), lambda m: F_profile(p, m, 0.05, R=1.0)):
        assert f(mu.scaled(2.0)) == pytest.approx(2 ** 1.8 * f(mu), rel=1e-10)


@pytest.mark.parametrize("q, status, expo", [(1.5, "convergent", -0.5), (1.8, "divergent", -1.4),
                                             (5 / 3, "divergent", -1.0)])
def test_admissibility_of_point_mass(q, status, expo):
    res = admissibility_integral(edge_params(q), dirac(1), 1.0)
    assert res.status == status
    assert res.exponent == pytest.approx(expo, abs=1e-6)


def test_admissibility_of_segment_in_capacity_band():
    # a segment (d = 1 > d_crit = 0.5) is admissible at q = 1.8
    res = admissibility_integral(edge_params(1.8), uniform([-0.25], [0.25]), 1.0)
    assert res.convergent


def test_admissibility_mass_homogeneity():
    p = edge_params(1.5)
    a = admissibility_integral(p, dirac(1), 1.0).value
    b = admissibility_integral(p, dirac(1, mass=3.0), 1.0).value
    assert b == pytest.approx(3 ** 1.5 * a, rel=1e-10)


def test_admissibility_support_check():
    with pytest.raises(DomainError):
        admissibility_integral(edge_params(1.5), uniform([0.0], [0.8]), 1.0)


def test_h_weight_values():
    sigma, q = 0.5, 1.8
    assert h_weight(1.0, sigma, q, 1) == pytest.approx(math.exp(-1))
    assert h_weight(1.0, sigma, q, 3) == pytest.approx(2 ** (-(sigma + 1) * q))


def test_lifted_integral_scaling_and_dilation():
    p = edge_params(1.8)
    mu = pair().mollified(0.05)
    base = lifted_integral(p, mu, 14 / 9, 4)
    assert lifted_integral(p, mu.scaled(2.0), 14 / 9, 4) == pytest.approx(2 ** 1.8 * base, rel=1e-10)
    ts = np.geomspace(0.25, 4.0, 9)
    vals = np.array([lifted_integral(p, pair().dilated(t).mollified(0.05), 14 / 9, 4) for t in ts])
    assert np.all(np.isfinite(vals))
    d = np.diff(vals)
    assert np.all(d < 0) or np.all(d > 0)
    assert np.max(np.abs(d)) < 0.5 * vals.max()


def test_lifted_integral_of_atom_diverges():
    assert math.isinf(lifted_integral(edge_params(1.8), dirac(1), 14 / 9, 4))


def test_sandwich_in_nu():
    # the weighted kernel (1 + |y - z|^2 / tau^2)^(-nu q/2) decreases in nu
    mu = uniform([-0.2], [0.2])
    vals = []
    for nu in (5.0, 5.5, 6.0):
        p = KernelParams(3, 2, 2.0, 1.8, nu=nu)
        vals.append(admissibility_integral(p, mu, 1.0).value)
    assert vals[0] >= vals[1] >= vals[2]


def test_equivalence_rejects_subcritical_band():
    with pytest.raises(DomainError):
        equivalence_experiment(edge_params(1.55), [("dirac", dirac(1))], 1.0)


def test_dyadic_integral_detects_rates():
    conv = dyadic_integral(lambda t: t ** -0.5, 1.0)
    assert conv.convergent and conv.value == pytest.approx(2.0, rel=1e-6)
    div = dyadic_integral(lambda t: t ** -1.3, 1.0)
    assert div.divergent and div.exponent == pytest.approx(-1.3, abs=1e-6)
    log = dyadic_integral(lambda t: 1 / t, 1.0)
    assert log.divergent
    far = dyadic_integral(lambda t: math.exp(-t), 1.0, toward="infinity")
    assert far.convergent and far.value == pytest.approx(math.exp(-1), rel=1e-10)


def test_measure_roundtrip():
    mu = EdgeMeasure(2, ((np.array([0.1, 0.2]), 1.5),), (uniform([0.0, 0.0], [1.0, 0.0]).pieces[0],))
    back = measure_from_dict(measure_to_dict(mu))
    assert back.total_mass == mu.total_mass
    assert back.set_dimensions() == mu.set_dimensions()


def test_unsupported_paths():
    cube = uniform([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    with pytest.raises(NotImplementedError):
        inner_potential(cube, 0.1, [[0.0, 0.0, 0.0]], 6.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.05, 1.62))
def test_point_mass_admissible_below_qc(q):
    assert admissibility_integral(edge_params(q), dirac(1), 1.0).convergent


@settings(max_examples=30, deadline=None)
@given(st.floats(1.67, 3.0))
def test_point_mass_inadmissible_above_qc(q):
    assert admissibility_integral(edge_params(q), dirac(1), 1.0).divergent


@pytest.mark.parametrize("q", [1.5, 1.8])
def test_window_increments_follow_power_law(q):
    # far from the support M(2R) - M(R) ~ R^(q (s - m/q'))
    p = edge_params(q)
    mu = uniform([-0.125], [0.125])
    M = np.array([admissibility_integral(p, mu, R).value for R in (4.0, 8.0, 16.0, 32.0)])
    d = np.diff(M)
    rate = np.log2(d[1:] / d[:-1])
    assert rate[-1] == pytest.approx(q * (p.s - p.m / p.q_conj), abs=0.01)
