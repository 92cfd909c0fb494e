"""Positive solutions of the nonlinear spherical problem

    -Delta' omega - lambda_Nq omega + omega^q = 0   on S,   omega = 0 on dS,

for arcs (``N = 2``) and axisymmetric caps of ``S^{N-1}``. A positive
solution exists iff the first Dirichlet eigenvalue ``lambda_S`` of ``S`` is
below ``lambda_Nq``; it is then unique and gives the angular profile of the
strong singularity ``r^{-2/(q-1)} omega(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from ._validation import check_exponent, check_int, check_mesh, check_real
from .errors import ConvergenceError, DomainError, MeshIncompatibilityError
from .exponents import lambda_Nq
from .spectral import (Arc, Cap, IntervalFactor, RadialProfile, SturmLiouvilleProblem,
                       discretize, smallest_eigenpair)

DEFAULT_PROFILE_MESH = 1024
RESIDUAL_TOL = 1e-10
BOUNDARY_TOL = 1e-12
MAX_NEWTON = 100
MAX_BACKTRACKS = 30
MAX_RESTARTS = 8

__all__ = ["NonlinearProfileProblem", "ProfileSolution", "Nonexistence", "RadialProfile",
           "solve_omega", "profile_monotonicity_check", "MonotonicityReport"]


@dataclass(frozen=True)
class NonlinearProfileProblem:
    """Nonlinear profile problem on an arc (``N = 2``) or a cap of ``S^{N-1}``."""

    N: int
    q: float
    opening: object
    mesh: int = DEFAULT_PROFILE_MESH

    def __post_init__(self):
        N = check_int(self.N, "N", minimum=2)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "q", check_exponent(self.q))
        object.__setattr__(self, "mesh", check_mesh(self.mesh))
        op = self.opening
        if isinstance(op, Arc):
            if N != 2:
                raise DomainError(f"an arc opening needs N = 2, got N = {N}")
        elif isinstance(op, Cap):
            if op.dim != N - 1:
                raise DomainError(f"a cap on S^{op.dim} needs N = {op.dim + 1}, got N = {N}")
        else:
            raise DomainError("the nonlinear profile supports Arc and Cap openings only")

    @property
    def lambda_Nq(self):
        return lambda_Nq(self.N, self.q)

    def sturm_liouville(self):
        op = self.opening
        if isinstance(op, Arc):
            return SturmLiouvilleProblem(0.0, 0.0, IntervalFactor(0.0, op.alpha),
                                         left="dirichlet", right="dirichlet")
        return SturmLiouvilleProblem(self.N - 2, 0.0, IntervalFactor(0.0, op.half_angle),
                                     left="regular", right="dirichlet")

    @property
    def lambda_S(self):
        """First Dirichlet eigenvalue of the opening (exact for arcs, discrete for caps)."""
        if isinstance(self.opening, Arc):
            return (math.pi / self.opening.alpha) ** 2
        return _Operator(self).eigen()[0]


@dataclass(frozen=True)
class ProfileSolution:
    problem: NonlinearProfileProblem
    profile: RadialProfile
    residual: float
    iterations: int
    lambda_S: float
    history: tuple = field(default=(), repr=False)

    exists = True

    @property
    def max(self):
        return self.profile.max


@dataclass(frozen=True)
class Nonexistence:
    """Certificate that no positive profile exists.

    ``boundary_case`` marks ``lambda_S = lambda_Nq`` within 1e-12. ``decays``
    records whether damped Newton from a positive start collapsed to zero,
    with the sequence of iterate maxima in ``decay_history``.
    """

    problem: NonlinearProfileProblem
    lambda_S: float
    lambda_Nq: float
    boundary_case: bool
    decays: bool
    decay_history: tuple = field(default=(), repr=False)

    exists = False


class _Operator:
    """The weighted Laplacian ``A = M^-1 K`` on the active nodes."""

    def __init__(self, problem, coef=1.0):
        self.problem = problem
        self.coef = coef  # weight of the absorption term
        self.disc = discretize(problem.sturm_liouville(), problem.mesh)
        d, e, m = self.disc.diag, self.disc.off, self.disc.mass
        self.diag = d
        self.upper = e * np.sqrt(m[1:] / m[:-1])
        self.lower = e * np.sqrt(m[:-1] / m[1:])
        self.norm = float(np.max(np.abs(d) + np.r_[np.abs(self.upper), 0.0]
                                 + np.r_[0.0, np.abs(self.lower)]))
        self._ld = tuple(np.asarray(a, dtype=np.longdouble) for a in (d, self.upper, self.lower))

    def eigen(self):
        lam, x, _, _ = smallest_eigenpair(self.disc.diag, self.disc.off)
        phi = x / np.sqrt(self.disc.mass)
        phi *= np.sign(phi[np.argmax(np.abs(phi))])
        return lam, phi / phi.max()

    def apply(self, w):
        d, up, lo = self._ld
        y = d * w
        y[:-1] += up * w[1:]
        y[1:] += lo * w[:-1]
        return y

    def residual(self, w, lam, q):
        return self.apply(w) - lam * w + self.coef * np.abs(w) ** (q - 1) * w

    def newton_step(self, w, lam, q, F):
        n = w.size
        band = np.zeros((3, n))
        band[0, 1:] = self.upper
        band[1] = self.diag - lam + self.coef * q * np.abs(np.asarray(w, dtype=float)) ** (q - 1)
        band[2, :-1] = self.lower
        return solve_banded((1, 1), band, -np.asarray(F, dtype=float))

    def weighted(self, f):
        return float(np.sum(self.disc.mass * f))

    def full(self, w):
        out = np.zeros_like(self.disc.theta)
        out[self.disc.active] = np.asarray(w, dtype=float)
        return out


def _damped_newton(op, w0, lam, q, tol, maxiter=MAX_NEWTON, stop_on_sign_change=True):
    """Armijo-damped Newton. Returns ``(w, residual, iterations, history, status)``."""
    w = np.asarray(w0, dtype=np.longdouble)
    F = op.residual(w, lam, q)
    res = float(np.max(np.abs(F)))
    merit = float(np.linalg.norm(np.asarray(F, dtype=float)))
    history = [res]
    maxima = [float(np.max(w))]
    for it in range(1, maxiter + 1):
        if res <= tol(w):
            return w, res, it - 1, history, maxima, "converged"
        step = np.asarray(op.newton_step(w, lam, q, F), dtype=np.longdouble)
        t = 1.0
        if stop_on_sign_change:
            # fraction-to-boundary rule keeps a positive iterate positive
            neg = step < 0
            if np.any(neg) and np.min(w) > 0:
                t = min(1.0, 0.95 * float(np.min(w[neg] / -step[neg])))
        for _ in range(MAX_BACKTRACKS + 1):
            trial = w + t * step
            F_trial = op.residual(trial, lam, q)
            merit_trial = float(np.linalg.norm(np.asarray(F_trial, dtype=float)))
            if merit_trial <= (1.0 - 1e-4 * t) * merit or merit_trial == 0.0:
                break
            t *= 0.5
        else:
            # no decrease at roundoff level means the iterate is converged to precision
            if res <= 10 * tol(w):
                return w, res, it, history, maxima, "converged"
            return w, res, it, history, maxima, "stalled"
        w, F, merit = trial, F_trial, merit_trial
        res = float(np.max(np.abs(F)))
        history.append(res)
        maxima.append(float(np.max(w)))
        if stop_on_sign_change and np.min(w) < -1e-12 * max(1.0, float(np.max(np.abs(w)))):
            return w, res, it, history, maxima, "sign_change"
    return w, res, maxiter, history, maxima, "maxiter"


def _ray_projection(op, w, lam, q):
    """Rescale ``w`` so the residual is orthogonal to it (projection onto the Nehari set)."""
    num = op.weighted(w * (lam * w - np.asarray(op.apply(np.asarray(w, dtype=np.longdouble)), dtype=float)))
    den = op.coef * op.weighted(w ** (q + 1))
    if num <= 0.0:
        raise DomainError("start has no positive multiple with vanishing projected residual")
    return (num / den) ** (1.0 / (q - 1.0)) * w


def _tolerance(op, scale=1.0):
    eps = float(np.finfo(np.longdouble).eps)

    def tol(w):
        return max(RESIDUAL_TOL / scale, 50.0 * eps * float(np.max(np.abs(w))) * op.norm)
    return tol


def _nonexistence(problem, op, lam_s, lam):
    q = problem.q
    amp = lam ** (1.0 / (q - 1.0)) if lam > 0 else 1.0
    _, phi = op.eigen()
    w0 = amp * phi
    # iterate on decay, not on residual: near zero the residual is tiny anyway
    w, _, _, _, maxima, _ = _damped_newton(op, w0, lam, q, lambda w: 0.0, maxiter=200,
                                           stop_on_sign_change=False)
    # The discrete eigenvalue lies O(h^2) below lambda_S, so in the equality
    # case the discrete problem keeps a solution of this bifurcation size.
    lam_h = op.eigen()[0]
    floor = 0.0
    if lam > lam_h:
        floor = 2.0 * ((lam - lam_h) * op.weighted(phi ** 2) / op.weighted(phi ** (q + 1))) ** (1.0 / (q - 1.0))
    decays = (maxima[-1] <= max(1e-3 * maxima[0], floor)
              and float(np.min(w)) >= -1e-12 * maxima[0])
    return Nonexistence(problem, lam_s, lam, abs(lam_s - lam) <= BOUNDARY_TOL, bool(decays), tuple(maxima))


def solve_omega(problem, start=None):
    """Solve the nonlinear spherical profile problem.

    Parameters
    ----------
    problem : NonlinearProfileProblem
    start : array_like, optional
        Positive initial guess on the active nodes; it is rescaled along its
        ray before Newton starts. By default Newton starts from the
        supersolution ``lambda_Nq^(1/(q-1))`` and falls back to the
        bifurcation amplitude times ``phi_S``.

    Returns
    -------
    ProfileSolution or Nonexistence

    Notes
    -----
    The unknown is ``omega / lambda_Nq^(1/(q-1))``, which stays of order one
    as ``q -> 1``. Residuals are evaluated in extended precision and the
    iterate is kept in extended precision, so the sup-norm residual of the
    discrete equation can be driven below 1e-10 even when
    ``||A|| * eps_double`` is larger.
    """
    q = problem.q
    lam = problem.lambda_Nq
    op = _Operator(problem)
    lam_h, phi = op.eigen()
    lam_s = (math.pi / problem.opening.alpha) ** 2 if isinstance(problem.opening, Arc) else lam_h
    if lam_s >= lam - BOUNDARY_TOL:
        return _nonexistence(problem, op, lam_s, lam)
    if lam_h >= lam:
        raise ConvergenceError("solve_omega", "mesh too coarse: discrete eigenvalue exceeds lambda_Nq")
    phi = phi[op.disc.active - op.disc.active[0]] if phi.size != op.disc.active.size else phi
    # solve for v = omega / lambda^(1/(q-1)), which stays O(1) as q -> 1
    try:
        scale = lam ** (1.0 / (q - 1.0))
    except OverflowError:
        scale = math.inf
    if not math.isfinite(scale):
        raise DomainError(f"profile amplitude lambda^(1/(q-1)) overflows for q = {q}")
    op.coef = lam
    tol = _tolerance(op, scale)
    if start is not None:
        w0 = np.asarray(start, dtype=float)
        if w0.shape != phi.shape:
            raise DomainError(f"start must have {phi.size} entries (active nodes)")
        if np.min(w0) < 0 or np.max(w0) <= 0:
            raise DomainError("start must be nonnegative and not identically zero")
        base = _ray_projection(op, w0, lam, q)
    else:
        # on the eigenfunction this is the bifurcation amplitude
        base = _ray_projection(op, phi, lam, q)
    starts = [base * 0.5 ** j for j in range(MAX_RESTARTS)]
    if start is None:
        # v = 1 is a supersolution; Newton on the convex problem descends from it monotonically
        starts.insert(0, np.ones_like(phi))
    last = None
    for w0 in starts:
        w, res, its, hist, _, status = _damped_newton(op, w0, lam, q, tol)
        last = (res, hist, status)
        if status == "converged" and np.min(w) >= 0 and np.max(w) > 0:
            values = scale * op.full(w)
            values[np.abs(values) < 1e-300] = 0.0
            prof = RadialProfile(op.disc.theta, values, op.disc.h)
            return ProfileSolution(problem, prof, scale * res, its, lam_s, tuple(scale * h for h in hist))
    raise ConvergenceError("solve_omega", f"damped Newton failed ({last[2]})", scale * last[0],
                           [scale * h for h in last[1]])


@dataclass(frozen=True)
class MonotonicityReport:
    holds: bool
    max_violation: float
    tolerance: float


def _as_solution(item):
    if isinstance(item, ProfileSolution):
        return item
    if isinstance(item, NonlinearProfileProblem):
        out = solve_omega(item)
        if not out.exists:
            raise DomainError("profile comparison needs problems that admit a positive solution")
        return out
    raise DomainError("expected a NonlinearProfileProblem or ProfileSolution")


def _uniform_anchor(profile):
    nodes = profile.nodes
    h = np.diff(nodes)
    if nodes[0] != 0.0 or np.max(np.abs(h - h.mean())) > 1e-9 * h.mean():
        raise MeshIncompatibilityError("profile nodes are not a uniform grid anchored at 0")


def _interp_error(profile):
    v = profile.values
    if v.size < 3:
        return 0.0
    curv = np.max(np.abs(np.diff(v, 2)))  # ~ h^2 |omega''|
    return curv / 8.0


def profile_monotonicity_check(p1, p2, atol=1e-10):
    """Check ``omega_1 <= omega_2`` for nested openings ``S_1 inside S_2``.

    Both profiles are compared at the union of their nodes, each one
    linearly interpolated where needed and ``omega_1`` extended by zero.
    The tolerance is ``atol`` plus the linear-interpolation error bound
    estimated from second differences.
    """
    s1, s2 = _as_solution(p1), _as_solution(p2)
    a, b = s1.problem, s2.problem
    if a.N != b.N or a.q != b.q:
        raise DomainError("profile comparison needs equal N and q")
    if type(a.opening) is not type(b.opening) or not b.opening.contains(a.opening):
        raise DomainError("the first opening must be contained in the second")
    _uniform_anchor(s1.profile)
    _uniform_anchor(s2.profile)
    pts = np.union1d(s1.profile.nodes, s2.profile.nodes)
    v1 = s1.profile(pts)
    v2 = s2.profile(pts)
    same_grid = np.array_equal(s1.profile.nodes, s2.profile.nodes)
    tol = atol if same_grid else atol + _interp_error(s1.profile) + _interp_error(s2.profile)
    viol = float(np.max(v1 - v2))
    return MonotonicityReport(bool(viol <= tol), viol, tol)
