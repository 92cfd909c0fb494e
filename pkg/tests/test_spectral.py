import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from polycrit.errors import DomainError
from polycrit.spectral import (Arc, BoxProduct, Cap, IntervalFactor, SturmLiouvilleProblem, arc_eigen,
                               cross_section_eigen, default_mesh, discretize, opening_from_dict,
                               opening_to_dict, smallest_eigenpair, solve_sl_eigen)

# Legendre-function zeros P_nu(cos t0) = 0, lambda = nu (nu + 1), from scipy.special.lpmv + brentq
CAP_S2_PI_3 = 4.936041865403527
CAP_S2_ONE = 5.445993274802633


def quarter():
    return IntervalFactor(0.0, math.pi / 2)


@pytest.mark.parametrize("alpha, lam", [(math.pi, 1.0), (math.pi / 2, 4.0), (2 * math.pi / 3, 2.25)])
def test_arc_eigenvalue(alpha, lam):
    res = arc_eigen(alpha, 1024)
    assert res.eigenvalue == pytest.approx(lam, rel=1e-6)
    th = np.linspace(0.1, alpha - 0.1, 7)
    assert np.allclose(res.profile(th), np.sin(math.pi * th / alpha), atol=1e-5)


def test_octant_factor_symbolic():
    t = sp.symbols("t")
    phi = sp.sin(t) ** 2 * sp.cos(t)
    lhs = -sp.diff(sp.sin(t) * sp.diff(phi, t), t) / sp.sin(t) + 4 * phi / sp.sin(t) ** 2
    assert sp.simplify(lhs - 12 * phi) == 0


def _shoot(lam, mu=4.0, t0=1e-5):
    def rhs(t, y):
        return [y[1], -y[1] / math.tan(t) + (mu / math.sin(t) ** 2 - lam) * y[0]]
    sol = solve_ivp(rhs, [t0, math.pi / 2], [t0 ** 2, 2 * t0], rtol=1e-11, atol=1e-16, method="DOP853")
    return sol.y[0, -1]


def test_octant_factor_against_shooting():
    oracle = brentq(_shoot, 10.0, 14.0, xtol=1e-12)
    assert oracle == pytest.approx(12.0, abs=1e-8)
    res = solve_sl_eigen(SturmLiouvilleProblem(1, 4.0, quarter()), 4096)
    assert res.eigenvalue == pytest.approx(oracle, abs=5e-6)
    assert abs(res.eigenvalue - oracle) <= 3 * res.error_estimate + 1e-9
    th = np.linspace(0.2, 1.4, 5)
    ref = np.sin(th) ** 2 * np.cos(th)
    ref /= ref.max() / res.profile(th).max()
    got = res.profile(th)
    assert np.allclose(got / got.max(), ref / ref.max(), atol=2e-2)


@pytest.mark.parametrize("p, lam", [(1, 2.0), (2, 3.0), (3, 4.0)])
def test_hemisphere(p, lam):
    res = solve_sl_eigen(SturmLiouvilleProblem(p, 0.0, quarter()), 2048)
    assert res.eigenvalue == pytest.approx(lam, abs=1e-6)


def test_second_order_convergence():
    prob = SturmLiouvilleProblem(1, 4.0, quarter())
    ev = [solve_sl_eigen(prob, n, richardson=False).eigenvalue for n in (512, 1024, 2048)]
    order = math.log2(abs(ev[0] - ev[1]) / abs(ev[1] - ev[2]))
    assert order > 1.9


@pytest.mark.parametrize("t0, oracle", [(math.pi / 3, CAP_S2_PI_3), (1.0, CAP_S2_ONE)])
def test_cap_against_legendre(t0, oracle):
    res = cross_section_eigen(Cap(2, t0), 2048)
    assert res.eigenvalue == pytest.approx(oracle, rel=1e-6)


def test_cap_on_s3_closed_form():
    # sin((nu+1) t)/sin t with (nu+1) t0 = pi
    res = cross_section_eigen(Cap(3, math.pi / 3), 2048)
    assert res.eigenvalue == pytest.approx(8.0, rel=1e-6)


def test_octant_and_lune():
    octant = cross_section_eigen(BoxProduct((quarter(), quarter())), 2048)
    assert octant.eigenvalue == pytest.approx(12.0, abs=1e-4)
    assert octant.error_estimate < 1e-4
    lune = cross_section_eigen(BoxProduct((quarter(), IntervalFactor.whole())), 2048)
    assert lune.eigenvalue == pytest.approx(6.0, abs=1e-4)


def test_discretization_matches_dense_solver():
    prob = SturmLiouvilleProblem(1, 4.0, quarter())
    disc = discretize(prob, 256)
    lam, vec, residual, _ = smallest_eigenpair(disc.diag, disc.off)
    w = eigh_tridiagonal(disc.diag, disc.off, eigvals_only=True, select="i", select_range=(0, 0))
    assert lam == pytest.approx(w[0], rel=1e-10)
    assert residual < 1e-10
    assert np.all(vec > 0) or np.all(vec < 0)


def test_errors():
    with pytest.raises(DomainError):
        Arc(0.0)
    with pytest.raises(DomainError):
        Arc(2 * math.pi + 0.1)
    with pytest.raises(DomainError):
        cross_section_eigen(Arc(1.0), 4)
    with pytest.raises(DomainError):
        Cap(2, 4.0)


def test_opening_roundtrip():
    for op in (Arc(1.2), Cap(2, 0.7), BoxProduct((quarter(), IntervalFactor.whole()))):
        assert opening_from_dict(opening_to_dict(op)) == op
    assert opening_from_dict({"arc": "pi/2"}) == Arc(math.pi / 2)


def test_env_mesh(monkeypatch):
    monkeypatch.setenv("POLYCRIT_MESH", "512")
    assert default_mesh() == 512
    monkeypatch.setenv("POLYCRIT_MESH", "bad")
    with pytest.raises(DomainError):
        default_mesh()


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 2 * math.pi - 0.01))
def test_arc_closed_form_property(alpha):
    assert arc_eigen(alpha, 256).eigenvalue == pytest.approx((math.pi / alpha) ** 2, rel=1e-4)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 1.5), st.floats(0.05, 0.5))
def test_domain_monotonicity(t0, dt):
    small = cross_section_eigen(Cap(2, t0), 512).eigenvalue
    large = cross_section_eigen(Cap(2, t0 + dt), 512).eigenvalue
    assert large < small
