import math

import numpy as np
import pytest

from polycrit.errors import DomainError, FitRejectedError
from polycrit.sector import (BoundaryData, PolarField, SectorDomain, boundary_distance, comparison_holds,
                             discrete_residual, fit_field, fit_power_law, halfstrip_transform,
                             harmonic_measure, harnack_ratio_check, keller_osserman_constant, omega_profile,
                             reference_point, solve_semilinear, vertex_kernel, vertex_mass_normalization,
                             weak_singularity_experiment)


def exact_data(dom, q):
    beta = 2.0 / (q - 1.0)
    omega = omega_profile(dom.alpha, q)
    return BoundaryData.from_function(dom, lambda r, th: r ** (-beta) * omega(th)), beta, omega


def test_graded_domain():
    dom = SectorDomain.graded(math.pi, 1e-3, 1.0, 32, 16)
    assert dom.n_r == 96
    assert dom.r[0] == pytest.approx(1e-3) and dom.r[-1] == pytest.approx(1.0)
    assert dom.grading_ratio == pytest.approx(10 ** (-1 / 32))
    assert dom.refined().n_r == 192


def test_zero_data_gives_zero():
    dom = SectorDomain.graded(math.pi, 1e-2, 1.0, 16, 16)
    fld = solve_semilinear(dom, 2.0, BoundaryData.build(dom))
    assert np.all(fld.values == 0.0)


def test_harmonic_mode_reproduces_harmonic_function():
    dom = SectorDomain(3 * math.pi / 4, 0.1, 1.0, 64, 32)
    a = math.pi / dom.alpha
    data = BoundaryData.from_function(dom, lambda r, th: r ** a * np.sin(a * th))
    fld = solve_semilinear(dom, None, data)
    rr, tt = np.meshgrid(dom.r, dom.theta, indexing="ij")
    assert np.max(np.abs(fld.values - rr ** a * np.sin(a * tt))) < 1e-3


def test_exact_solution_second_order():
    errs, res = [], []
    for nr, nt in ((32, 16), (64, 32), (128, 64)):
        dom = SectorDomain(3 * math.pi / 4, 0.1, 1.0, nr, nt)
        data, beta, omega = exact_data(dom, 2.0)
        U = dom.r[:, None] ** (-beta) * omega(dom.theta)[None, :]
        fld = solve_semilinear(dom, 2.0, data)
        errs.append(np.max(np.abs(fld.values - U) * dom.r[:, None] ** beta))
        res.append(np.max(np.abs(discrete_residual(dom, 2.0, U)) * dom.r[1:-1, None] ** beta))
    for seq in (errs, res):
        orders = np.log2(np.array(seq[:-1]) / np.array(seq[1:]))
        assert np.all(orders > 1.9)
    # regression values of the scaled residual
    assert res[0] == pytest.approx(0.0640039, rel=1e-4)


def test_comparison_principle():
    dom = SectorDomain.graded(math.pi / 2, 1e-2, 1.0, 16, 16)
    lo = solve_semilinear(dom, 3.0, BoundaryData.build(dom, inner=1.0))
    hi = solve_semilinear(dom, 3.0, BoundaryData.build(dom, inner=2.0, outer=0.5))
    assert comparison_holds(lo, hi)
    assert not comparison_holds(hi, lo)


def test_harmonic_measure_matches_direct_solve():
    dom = SectorDomain.graded(math.pi, 1e-2, 1.0, 16, 24)
    w = harmonic_measure(dom)
    g = np.cos(dom.theta) + 2.0
    g[0] = g[-1] = 0.0
    fld = solve_semilinear(dom, None, BoundaryData.build(dom, inner=g))
    i, j = reference_point(dom)
    assert float(np.dot(w, g)) == pytest.approx(fld.values[i, j], rel=1e-10)


@pytest.mark.parametrize("alpha", [math.pi, 3 * math.pi / 4])
def test_vertex_mass_normalization(alpha):
    dom = SectorDomain.graded(alpha, 1e-4, 1.0, 32, 32)
    a = math.pi / alpha
    i, j = reference_point(dom)
    r, th = dom.r[i], dom.theta[j]
    continuum = (r ** -a - r ** a) * math.sin(a * th)
    assert vertex_mass_normalization(dom) == pytest.approx(continuum, rel=1e-2)


def test_weak_singularity_coarse():
    dom = SectorDomain.graded(math.pi, 1e-3, 1.0, 32, 32)
    fit = weak_singularity_experiment(dom, 2.0, 1.0)
    assert fit.classification == "Weak"
    assert fit.fitted_exponent == pytest.approx(-1.0, rel=0.02)
    assert fit.extras["k_star_gamma"] == pytest.approx(1.0, rel=0.05)
    with pytest.raises(DomainError):
        weak_singularity_experiment(dom, 3.5, 1.0)


def test_harnack_trivial_cases():
    dom = SectorDomain.graded(3 * math.pi / 2, 1e-2, 1.0, 16, 24)
    d1 = BoundaryData.build(dom, outer=lambda th: np.sin(th * math.pi / dom.alpha) * 10)
    d2 = BoundaryData.build(dom, inner=5.0, outer=1.0)
    assert harnack_ratio_check(dom, 2.0, d1, d1).sup_ratio == pytest.approx(1.0, abs=1e-12)
    assert harnack_ratio_check(dom, None, d1, d1.scaled(3.0)).sup_ratio == pytest.approx(1.0, abs=1e-10)
    rep = harnack_ratio_check(dom, 2.0, d1, d2)
    assert 1.0 < rep.sup_ratio < 100.0 and rep.nodes > 0


def test_keller_osserman_bounded():
    dom = SectorDomain(math.pi, 0.1, 1.0, 64, 64)
    cs = [keller_osserman_constant(solve_semilinear(dom, 2.0, BoundaryData.build(dom, inner=M)), 0.05)
          for M in (1e2, 1e4, 1e6)]
    assert cs[0] < cs[1] < cs[2] < 10.0


def test_boundary_distance():
    dom = SectorDomain(math.pi / 2, 0.1, 1.0, 8, 8)
    d = boundary_distance(dom)
    assert np.all(d >= -1e-15)
    assert np.all(d[0] == 0) and np.all(d[:, 0] == 0)


def test_halfstrip_of_kernel_is_stationary():
    dom = SectorDomain(math.pi, 0.01, 1.0, 32, 32)
    a = 1.0
    rr, tt = np.meshgrid(dom.r, dom.theta, indexing="ij")
    fld = PolarField(dom, rr ** -a * np.sin(a * tt), None, None, 0.0, 0)
    v = halfstrip_transform(fld, a)
    assert np.allclose(v.values, np.sin(dom.theta)[None, :], atol=1e-12)
    assert np.all(np.diff(v.t) > 0)


def test_fit_power_law_exact():
    r = np.geomspace(1e-3, 1e-2, 10)
    p, amp, r2 = fit_power_law(r, 3.0 * r ** -1.5)
    assert p == pytest.approx(-1.5) and amp == pytest.approx(3.0) and r2 == pytest.approx(1.0)


def test_fit_rejected_on_noise(rng):
    dom = SectorDomain.graded(math.pi, 1e-3, 1.0, 32, 8)
    vals = np.exp(rng.normal(size=(dom.n_r + 1, dom.n_theta + 1)))
    fld = PolarField(dom, vals, None, 2.0, 0.0, 0)
    with pytest.raises(FitRejectedError):
        fit_field(fld)


def test_validation():
    with pytest.raises(DomainError):
        SectorDomain(0.0, 0.1)
    with pytest.raises(DomainError):
        SectorDomain(math.pi, 2.0, 1.0)
    dom = SectorDomain(math.pi, 0.1, 1.0, 8, 8)
    with pytest.raises(DomainError):
        BoundaryData.build(dom, inner=np.ones(3))
    with pytest.raises(DomainError):
        solve_semilinear(dom, 0.5, BoundaryData.build(dom))


def test_vertex_kernel_trace():
    dom = SectorDomain(math.pi / 2, 0.1, 1.0, 8, 8)
    k = vertex_kernel(dom)
    assert k.inner[0] == 0 and k.inner[-1] == 0
    assert np.max(k.inner) == pytest.approx(0.1 ** -2, rel=1e-12)
