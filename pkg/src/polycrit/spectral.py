"""First Dirichlet eigenpairs of the Laplace-Beltrami operator on spherical openings.

Openings are arcs of S^1, axisymmetric caps of S^d, and box products of angle
intervals in the Euler-angle coordinates of S^d. Box products are solved by
separation of variables: the innermost factor is an arc, and each further
factor is a one-dimensional weighted problem

    -(w phi')' / w + mu / sin(theta)^2 phi = lam phi,   w = sin(theta)^p,

whose centrifugal constant ``mu`` is the eigenvalue of the layer below.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded

from ._validation import check_int, check_mesh, check_real, parse_angle
from .errors import ConvergenceError, DomainError

TWO_PI = 2.0 * math.pi
DEFAULT_MESH = 2048
EIGEN_TOL = 1e-10
EIGEN_MAXITER = 500

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def default_mesh():
    """Mesh resolution from ``POLYCRIT_MESH`` or the built-in default."""
    raw = os.environ.get("POLYCRIT_MESH")
    if raw is None:
        return DEFAULT_MESH
    try:
        return check_mesh(int(raw))
    except (ValueError, DomainError):
        raise DomainError(f"POLYCRIT_MESH must be an integer >= 16, got {raw!r}") from None


@dataclass(frozen=True)
class IntervalFactor:
    """One angular factor ``(lower, upper)`` of a box-product opening.

    ``full=True`` marks the unconstrained range: ``[0, pi]`` for outer
    factors, ``[0, 2 pi]`` for the innermost one.
    """

    lower: float
    upper: float
    full: bool = False

    def __post_init__(self):
        lo = parse_angle(self.lower)
        hi = parse_angle(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if not (0.0 <= lo < hi <= TWO_PI):
            raise DomainError(f"interval factor needs 0 <= lower < upper <= 2pi, got ({lo}, {hi})")
        if self.full and not (lo == 0.0 and hi in (math.pi, TWO_PI)):
            raise DomainError("a full factor must span [0, pi] or [0, 2pi]")

    @classmethod
    def whole(cls, innermost=False):
        return cls(0.0, TWO_PI if innermost else math.pi, full=True)

    @property
    def length(self):
        return self.upper - self.lower

    def contains(self, other):
        return self.lower <= other.lower and other.upper <= self.upper


@dataclass(frozen=True)
class Arc:
    """Arc ``(0, alpha)`` of the unit circle."""

    alpha: float

    def __post_init__(self):
        alpha = parse_angle(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not 0.0 < alpha < TWO_PI:
            raise DomainError(f"arc opening must lie in (0, 2pi), got {alpha}")

    sphere_dim = 1

    def contains(self, other):
        return isinstance(other, Arc) and other.alpha <= self.alpha


@dataclass(frozen=True)
class Cap:
    """Geodesic cap ``{theta < half_angle}`` on the sphere S^dim."""

    dim: int
    half_angle: float

    def __post_init__(self):
        object.__setattr__(self, "dim", check_int(self.dim, "dim", minimum=1))
        theta0 = parse_angle(self.half_angle)
        object.__setattr__(self, "half_angle", theta0)
        if not 0.0 < theta0 < math.pi:
            raise DomainError(f"cap half-angle must lie in (0, pi), got {theta0}")

    @property
    def sphere_dim(self):
        return self.dim

    def contains(self, other):
        return isinstance(other, Cap) and other.dim == self.dim and other.half_angle <= self.half_angle


@dataclass(frozen=True)
class BoxProduct:
    """Product of Euler-angle intervals, innermost (theta_1) first."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise DomainError("a box-product opening needs at least one factor")
        for idx, fac in enumerate(factors):
            if not isinstance(fac, IntervalFactor):
                raise DomainError(f"factor {idx} is not an IntervalFactor")
            if idx > 0 and fac.upper > math.pi:
                raise DomainError(f"outer factor {idx} must lie in [0, pi], got upper={fac.upper}")
        if all(f.full for f in factors):
            raise DomainError("at least one factor must be constrained (whole sphere has no Dirichlet boundary)")
        object.__setattr__(self, "factors", factors)

    @property
    def sphere_dim(self):
        return len(self.factors)

    def contains(self, other):
        return (isinstance(other, BoxProduct) and len(other.factors) == len(self.factors)
                and all(a.contains(b) for a, b in zip(self.factors, other.factors)))


@dataclass(frozen=True)
class RadialProfile:
    """A function sampled on an ordered set of angles."""

    nodes: np.ndarray
    values: np.ndarray
    mesh_size: float

    def __call__(self, theta):
        return np.interp(theta, self.nodes, self.values, left=0.0, right=0.0)

    @property
    def max(self):
        return float(np.max(self.values))

    def to_csv(self, path, header=("theta", "value")):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, v in zip(self.nodes, self.values):
                writer.writerow([repr(float(t)), repr(float(v))])


@dataclass(frozen=True)
class EigenPair:
    """First eigenvalue with its max-normalized nonnegative eigenfunction."""

    eigenvalue: float
    profile: RadialProfile
    mesh_size: float
    error_estimate: float
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class SturmLiouvilleProblem:
    """``-(w phi')'/w + mu/sin^2 phi = lam phi`` on an interval, ``w = sin^p``.

    Endpoints at 0 or pi are regular (bounded solution) by default, all
    other endpoints carry a Dirichlet condition. ``left``/``right`` may be
    given explicitly as ``"dirichlet"`` or ``"regular"``.
    """

    weight_exponent: float
    centrifugal: float
    interval: IntervalFactor
    left: str = None
    right: str = None

    def __post_init__(self):
        p = check_real(self.weight_exponent, "weight_exponent", low=0.0)
        mu = check_real(self.centrifugal, "centrifugal", low=0.0)
        object.__setattr__(self, "weight_exponent", p)
        object.__setattr__(self, "centrifugal", mu)
        iv = self.interval
        if p > 0 and iv.upper > math.pi:
            raise DomainError("interval must lie within [0, pi] when the weight exponent is positive")
        if (mu > 0 or p > 0) and iv.upper > math.pi:
            raise DomainError("interval must lie within [0, pi]")
        left = self.left or ("regular" if iv.lower == 0.0 else "dirichlet")
        right = self.right or ("regular" if iv.upper == math.pi else "dirichlet")
        for name, kind in (("left", left), ("right", right)):
            if kind not in ("regular", "dirichlet"):
                raise DomainError(f"{name} boundary must be 'regular' or 'dirichlet', got {kind!r}")
        if left == "regular" and right == "regular" and mu == 0.0:
            raise DomainError("problem without Dirichlet condition has the trivial first eigenvalue 0")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)


@dataclass
class _Discretization:
    theta: np.ndarray        # all nodes
    active: np.ndarray       # indices of unknowns
    diag: np.ndarray         # symmetric operator M^-1/2 (K + P) M^-1/2
    off: np.ndarray
    mass: np.ndarray         # lumped mass of the unknowns
    h: float


def _half_cell_integrals(f, theta, h):
    """Integrals of f over the left and right half of each cell."""
    a = theta[:-1]
    half = 0.5 * h
    # Gauss nodes mapped to [a, a + h/2] and [a + h/2, a + h]
    xs = 0.5 * half * (_GL_X + 1.0)
    left = half * 0.5 * (f(a[:, None] + xs[None, :]) @ _GL_W)
    right = half * 0.5 * (f(a[:, None] + half + xs[None, :]) @ _GL_W)
    return left, right


def discretize(prob, mesh):
    """Symmetric three-point finite-volume discretization of ``prob``.

    Flux weights are cell averages of ``w``; the mass and centrifugal terms
    are integrated exactly (Gauss rules) over dual cells, so the weight is
    averaged over half cells next to the singular endpoints.
    """
    mesh = check_mesh(mesh)
    iv = prob.interval
    p, mu = prob.weight_exponent, prob.centrifugal
    h = iv.length / mesh
    theta = iv.lower + h * np.arange(mesh + 1)
    theta[-1] = iv.upper

    def weight(t):
        return np.abs(np.sin(t)) ** p if p > 0 else np.ones_like(t)

    wl, wr = _half_cell_integrals(weight, theta, h)
    flux = (wl + wr) / h
    mass = np.zeros(mesh + 1)
    mass[:-1] += wl
    mass[1:] += wr
    stiff_diag = np.zeros(mesh + 1)
    stiff_diag[:-1] += flux / h
    stiff_diag[1:] += flux / h
    stiff_off = -flux / h
    pot = np.zeros(mesh + 1)
    if mu > 0:
        pl, pr = _half_cell_integrals(lambda t: mu * weight(t) / np.sin(t) ** 2, theta, h)
        pot[:-1] += pl
        pot[1:] += pr

    lo = 0 if (prob.left == "regular" and mu == 0.0) else 1
    hi = mesh if (prob.right == "regular" and mu == 0.0) else mesh - 1
    active = np.arange(lo, hi + 1)
    m = mass[active]
    diag = (stiff_diag[active] + pot[active]) / m
    off = stiff_off[active[:-1]] / np.sqrt(m[:-1] * m[1:])
    return _Discretization(theta, active, diag, off, m, h)


def _tridiag_matvec(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def smallest_eigenpair(diag, off, tol=EIGEN_TOL, maxiter=EIGEN_MAXITER):
    """Smallest eigenpair of a symmetric positive definite tridiagonal matrix.

    Inverse iteration with shift 0 from the all-ones vector, followed by
    Rayleigh-quotient steps. Returns ``(lam, x, residual, iterations)`` with
    ``residual = ||A x - lam x|| / (||A||_inf ||x||)``.
    """
    n = diag.size
    if n == 1:
        return float(diag[0]), np.ones(1), 0.0, 0
    ab = np.zeros((2, n))
    ab[0, 1:] = off
    ab[1] = diag
    try:
        chol = cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError:
        raise DomainError("discrete operator is not positive definite") from None
    norm_a = float(np.max(np.abs(diag) + np.r_[np.abs(off), 0.0] + np.r_[0.0, np.abs(off)]))

    x = np.ones(n) / math.sqrt(n)
    lam_prev = math.inf
    history = []
    it = 0
    for it in range(1, maxiter + 1):
        y = cho_solve_banded((chol, False), x)
        x = y / np.linalg.norm(y)
        lam = float(x @ _tridiag_matvec(diag, off, x))
        res = float(np.linalg.norm(_tridiag_matvec(diag, off, x) - lam * x)) / norm_a
        history.append(res)
        if abs(lam - lam_prev) <= 1e-7 * abs(lam) or res < tol:
            break
        lam_prev = lam
    else:
        raise ConvergenceError("inverse_iteration", "no convergence", history[-1], history)

    # Rayleigh-quotient refinement; the matrix is tridiagonal so each solve is O(n)
    band = np.zeros((3, n))
    band[0, 1:] = off
    band[2, :-1] = off
    for _ in range(4):
        if res < tol * 1e-2:
            break
        band[1] = diag - lam
        try:
            y = solve_banded((1, 1), band, x)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(y)):
            break
        y /= np.linalg.norm(y)
        lam_new = float(y @ _tridiag_matvec(diag, off, y))
        res_new = float(np.linalg.norm(_tridiag_matvec(diag, off, y) - lam_new * y)) / norm_a
        it += 1
        history.append(res_new)
        if res_new > res:
            break
        x, lam, res = y, lam_new, res_new
    if res >= tol:
        raise ConvergenceError("inverse_iteration", "Rayleigh residual above tolerance", res, history)
    return lam, x, res, it


def _solve_discrete(prob, mesh):
    disc = discretize(prob, mesh)
    lam, x, res, its = smallest_eigenpair(disc.diag, disc.off)
    phi = np.zeros_like(disc.theta)
    phi[disc.active] = x / np.sqrt(disc.mass)
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    phi /= phi.max()
    # roundoff-level negatives at the first node next to a vanishing endpoint
    phi[np.abs(phi) < 1e-14] = 0.0
    inner = phi[1:-1]
    if np.any(inner <= 0.0) and mesh >= 16:
        interior = phi[disc.active][1:-1] if disc.active.size > 2 else phi[disc.active]
        if np.any(interior <= 0.0):
            raise ConvergenceError("solve_sl_eigen", "eigenvector is not positive in the interior", res)
    return lam, RadialProfile(disc.theta, phi, disc.h), res, its


def arc_eigen(alpha, mesh=None):
    """Closed-form first Dirichlet eigenpair of the arc ``(0, alpha)``.

    The eigenvalue is ``(pi/alpha)^2`` with eigenfunction ``sin(pi theta/alpha)``;
    ``mesh`` only sets the sampling of the returned profile.
    """
    arc = alpha if isinstance(alpha, Arc) else Arc(alpha)
    mesh = check_mesh(mesh if mesh is not None else default_mesh())
    theta = np.linspace(0.0, arc.alpha, mesh + 1)
    values = np.sin(math.pi * theta / arc.alpha)
    values[0] = values[-1] = 0.0
    lam = (math.pi / arc.alpha) ** 2
    return EigenPair(lam, RadialProfile(theta, values, arc.alpha / mesh), arc.alpha / mesh, 0.0)


def solve_sl_eigen(prob, mesh=None, richardson=True):
    """Smallest eigenvalue of a weighted Sturm-Liouville problem on the sphere.

    Parameters
    ----------
    prob : SturmLiouvilleProblem
    mesh : int, optional
        Number of cells (>= 16). Defaults to :func:`default_mesh`.
    richardson : bool
        If true, also solve on the half mesh and report the two-grid
        Richardson estimate ``|lam_h - lam_2h| / 3`` as ``error_estimate``.

    Returns
    -------
    EigenPair
    """
    mesh = check_mesh(mesh if mesh is not None else default_mesh())
    lam, profile, res, its = _solve_discrete(prob, mesh)
    err = float("nan")
    if richardson and mesh // 2 >= 16:
        lam_coarse = _solve_discrete(prob, mesh // 2)[0]
        err = abs(lam - lam_coarse) / 3.0
    return EigenPair(lam, profile, profile.mesh_size, err, res, its)


@dataclass(frozen=True)
class CrossSectionEigen:
    """Eigenvalue of an opening plus the per-layer eigenpairs of the chain."""

    opening: object
    eigenvalue: float
    layers: tuple = field(default_factory=tuple)
    error_estimate: float = 0.0

    @property
    def eigenpair(self):
        return self.layers[-1]


def _cap_problem(cap):
    return SturmLiouvilleProblem(cap.dim - 1, 0.0, IntervalFactor(0.0, cap.half_angle),
                                 left="regular", right="dirichlet")


def _box_chain(box, mesh, richardson):
    layers = []
    inner = box.factors[0]
    if inner.full:
        theta = np.linspace(0.0, TWO_PI, mesh + 1)
        lam = 0.0
        layers.append(EigenPair(0.0, RadialProfile(theta, np.ones_like(theta), TWO_PI / mesh),
                                TWO_PI / mesh, 0.0))
    else:
        pair = arc_eigen(inner.length, mesh)
        prof = pair.profile
        layers.append(EigenPair(pair.eigenvalue,
                                RadialProfile(prof.nodes + inner.lower, prof.values, prof.mesh_size),
                                pair.mesh_size, 0.0))
        lam = pair.eigenvalue
    for depth, fac in enumerate(box.factors[1:], start=1):
        interval = IntervalFactor(0.0, math.pi) if fac.full else fac
        prob = SturmLiouvilleProblem(depth, lam, interval)
        pair = solve_sl_eigen(prob, mesh, richardson=richardson)
        layers.append(pair)
        lam = pair.eigenvalue
    return lam, tuple(layers)


def cross_section_eigen(opening, mesh=None):
    """First Dirichlet eigenvalue of ``-Laplace-Beltrami`` on an opening.

    Arcs use the closed form, caps a single weighted problem, and box
    products the separation-of-variables chain in which each layer's
    eigenvalue becomes the centrifugal constant of the next.
    """
    mesh = check_mesh(mesh if mesh is not None else default_mesh())
    if isinstance(opening, Arc):
        pair = arc_eigen(opening, mesh)
        return CrossSectionEigen(opening, pair.eigenvalue, (pair,), 0.0)
    if isinstance(opening, Cap):
        pair = solve_sl_eigen(_cap_problem(opening), mesh)
        return CrossSectionEigen(opening, pair.eigenvalue, (pair,), pair.error_estimate)
    if isinstance(opening, BoxProduct):
        lam, layers = _box_chain(opening, mesh, richardson=False)
        err = 0.0
        if len(opening.factors) > 1 and mesh // 2 >= 16:
            lam_coarse, _ = _box_chain(opening, mesh // 2, richardson=False)
            err = abs(lam - lam_coarse) / 3.0
        return CrossSectionEigen(opening, lam, layers, err)
    raise DomainError(f"unsupported opening {opening!r}; only arcs, caps and box products separate")


def opening_from_dict(spec):
    """Build an opening from its JSON form.

    ``{"arc": a}``, ``{"cap": {"dim": d, "half_angle": t}}`` or
    ``{"box": [[lo, hi], "full", ...]}`` (innermost factor first).
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise DomainError(f"opening must be an object with one of arc/cap/box, got {spec!r}")
    (kind, value), = spec.items()
    if kind == "arc":
        return Arc(value)
    if kind == "cap":
        return Cap(value["dim"], value["half_angle"])
    if kind == "box":
        factors = []
        for idx, item in enumerate(value):
            if item == "full":
                factors.append(IntervalFactor.whole(innermost=idx == 0))
            else:
                lo, hi = item
                factors.append(IntervalFactor(lo, hi))
        return BoxProduct(tuple(factors))
    raise DomainError(f"unknown opening kind {kind!r}")


def opening_to_dict(opening):
    if isinstance(opening, Arc):
        return {"arc": opening.alpha}
    if isinstance(opening, Cap):
        return {"cap": {"dim": opening.dim, "half_angle": opening.half_angle}}
    if isinstance(opening, BoxProduct):
        return {"box": ["full" if f.full else [f.lower, f.upper] for f in opening.factors]}
    raise DomainError(f"unsupported opening {opening!r}")
