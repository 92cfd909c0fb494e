import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polycrit.errors import DomainError, MeshIncompatibilityError
from polycrit.profile import NonlinearProfileProblem, profile_monotonicity_check, solve_omega
from polycrit.spectral import Arc, Cap, RadialProfile

# scipy.integrate.solve_bvp on -w'' + w^q = lambda_{2,q} w, w(0) = w(alpha) = 0
BVP_MAX = {(math.pi, 2.0): 3.4084925219368816, (3 * math.pi / 4, 2.0): 2.57533722322763,
           (math.pi, 1.5): 247.2781604478831, (math.pi, 2.5): 0.9725691221280719}


def half_plane(q=2.0, mesh=1024):
    return NonlinearProfileProblem(2, q, Arc(math.pi), mesh)


@pytest.mark.parametrize("key", sorted(BVP_MAX))
def test_profile_matches_bvp_oracle(key):
    alpha, q = key
    sol = solve_omega(NonlinearProfileProblem(2, q, Arc(alpha), 1024))
    assert sol.exists
    assert sol.max == pytest.approx(BVP_MAX[key], rel=2e-6)


def test_half_plane_profile():
    sol = solve_omega(half_plane())
    assert sol.residual < 1e-10
    assert 0 < sol.max <= 4.0
    v = sol.profile.values
    assert v[0] == 0 and v[-1] == 0 and np.all(v[1:-1] > 0)
    assert np.allclose(v, v[::-1], atol=1e-9)


def test_second_order_in_mesh():
    maxima = [solve_omega(half_plane(mesh=n)).max for n in (128, 256, 512)]
    order = math.log2(abs(maxima[0] - maxima[1]) / abs(maxima[1] - maxima[2]))
    assert order == pytest.approx(2.0, abs=0.15)


def test_uniqueness_from_different_starts():
    prob = half_plane()
    th = np.linspace(0.0, math.pi, prob.mesh + 1)[1:-1]
    sols = [solve_omega(prob, start=s) for s in (0.01 * np.sin(th), 8 * np.sin(th), th * (math.pi - th) ** 2)]
    ref = sols[0].profile.values
    for s in sols[1:]:
        assert np.max(np.abs(s.profile.values - ref)) < 1e-8


@pytest.mark.parametrize("q, alpha, boundary", [(3.0, math.pi, True), (2.0, math.pi / 2, True), (5.0, math.pi, False)])
def test_nonexistence(q, alpha, boundary):
    res = solve_omega(NonlinearProfileProblem(2, q, Arc(alpha), 512))
    assert not res.exists
    assert res.boundary_case is boundary
    assert res.decays


def test_cap_profile():
    # lambda_{3,2} = 2 lies below the cap eigenvalue 4.94
    assert not solve_omega(NonlinearProfileProblem(3, 2.0, Cap(2, math.pi / 3), 256)).exists
    sol = solve_omega(NonlinearProfileProblem(3, 1.5, Cap(2, math.pi / 2), 512))
    assert sol.exists and sol.residual < 1e-10


def test_monotonicity_nested_arcs():
    small = NonlinearProfileProblem(2, 2.0, Arc(math.pi / 2 + 0.2), 1024)
    big = half_plane()
    rep = profile_monotonicity_check(small, big)
    assert rep.holds
    same = profile_monotonicity_check(big, big)
    assert same.holds and abs(same.max_violation) <= 1e-10
    with pytest.raises(DomainError):
        profile_monotonicity_check(big, small)


def test_monotonicity_rejects_nonuniform_grid():
    sol = solve_omega(half_plane(mesh=64))
    nodes = sol.profile.nodes.copy()
    nodes[5] += 1e-3
    bad = type(sol)(sol.problem, RadialProfile(nodes, sol.profile.values, 64), sol.residual,
                    sol.iterations, sol.lambda_S)
    with pytest.raises(MeshIncompatibilityError):
        profile_monotonicity_check(bad, sol)


def test_problem_validation():
    with pytest.raises(DomainError):
        NonlinearProfileProblem(3, 2.0, Arc(1.0))
    with pytest.raises(DomainError):
        NonlinearProfileProblem(3, 2.0, Cap(3, 1.0))
    with pytest.raises(DomainError):
        NonlinearProfileProblem(2, 1.0, Arc(1.0))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 2 * math.pi - 0.1), st.floats(1.05, 6.0))
def test_dichotomy(alpha, q):
    lam_s, lam = (math.pi / alpha) ** 2, (2 / (q - 1)) ** 2
    if abs(lam_s - lam) < 1e-2 * lam:
        return
    res = solve_omega(NonlinearProfileProblem(2, q, Arc(alpha), 256))
    assert res.exists is (lam_s < lam)


@pytest.mark.parametrize("alpha, q, low", [(4.0, 1.0625, 0.9), (2 * math.pi - 0.1, 1.05, 0.9), (0.5, 1.2, 0.0)])
def test_huge_amplitude_profiles(alpha, q, low):
    sol = solve_omega(NonlinearProfileProblem(2, q, Arc(alpha), 256))
    lam = (2 / (q - 1)) ** 2
    # the constant lambda^(1/(q-1)) is a supersolution; wide arcs approach it
    assert sol.exists
    assert low < sol.max / lam ** (1 / (q - 1)) <= 1.0 + 1e-12


def test_amplitude_overflow_is_a_domain_error():
    with pytest.raises(DomainError):
        solve_omega(NonlinearProfileProblem(2, 1.01, Arc(0.5), 256))
