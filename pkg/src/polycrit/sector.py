"""Finite-difference laboratory for ``-Delta u + |u|^(q-1) u = 0`` on planar sectors.

The truncated sector ``{r_min < r < r_max, 0 < theta < alpha}`` is mapped to
the rectangle ``(s, theta)`` with ``s = ln r``. There the equation reads

    -(u_ss + u_thth) + e^(2s) |u|^(q-1) u = 0,

and the five-point scheme on a grid uniform in ``s`` and ``theta`` is a
polar grid with geometric radial grading. Dirichlet data are prescribed on
the inner arc (which stands in for the vertex), the outer arc and both rays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ._validation import check_exponent, check_int, check_real, parse_angle
from .errors import ConvergenceError, DomainError, FitRejectedError, SchemeViolationError
from .profile import NonlinearProfileProblem, solve_omega
from .spectral import Arc

NEWTON_TOL = 1e-9
NEWTON_MAXITER = 60
MAX_BACKTRACKS = 30
R2_MIN = 0.999


@dataclass(frozen=True)
class SectorDomain:
    """Truncated sector with a log-polar grid.

    ``n_r`` cells in ``ln r`` and ``n_theta`` cells in angle. The radial
    grading ratio ``r_i / r_(i+1)`` is ``exp(-h_s)``.
    """

    alpha: float
    r_min: float
    r_max: float = 1.0
    n_r: int = 256
    n_theta: int = 64

    def __post_init__(self):
        alpha = parse_angle(self.alpha)
        if not 0.0 < alpha < 2.0 * math.pi:
            raise DomainError(f"sector opening must lie in (0, 2pi), got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        r0 = check_real(self.r_min, "r_min", low=0.0, low_open=True)
        r1 = check_real(self.r_max, "r_max", low=r0, low_open=True)
        object.__setattr__(self, "r_min", r0)
        object.__setattr__(self, "r_max", r1)
        object.__setattr__(self, "n_r", check_int(self.n_r, "n_r", minimum=4))
        object.__setattr__(self, "n_theta", check_int(self.n_theta, "n_theta", minimum=4))

    @classmethod
    def graded(cls, alpha, r_min, r_max=1.0, cells_per_decade=64, n_theta=64):
        """Grid with ``cells_per_decade`` radial cells per factor 10 in ``r``."""
        alpha = parse_angle(alpha)
        decades = math.log10(r_max / r_min)
        return cls(alpha, r_min, r_max, max(4, int(math.ceil(cells_per_decade * decades - 1e-9))), n_theta)

    @property
    def h_s(self):
        return math.log(self.r_max / self.r_min) / self.n_r

    @property
    def h_theta(self):
        return self.alpha / self.n_theta

    @property
    def grading_ratio(self):
        return math.exp(-self.h_s)

    @property
    def s(self):
        return math.log(self.r_min) + self.h_s * np.arange(self.n_r + 1)

    @property
    def r(self):
        out = np.exp(self.s)
        out[0], out[-1] = self.r_min, self.r_max
        return out

    @property
    def theta(self):
        out = self.h_theta * np.arange(self.n_theta + 1)
        out[-1] = self.alpha
        return out

    def refined(self, factor=2):
        return SectorDomain(self.alpha, self.r_min, self.r_max, self.n_r * factor, self.n_theta * factor)


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data sampled at the boundary nodes of a domain.

    ``inner`` and ``outer`` are indexed by the angle nodes, ``ray0`` and
    ``ray1`` (at ``theta = 0`` and ``theta = alpha``) by the radius nodes.
    """

    inner: np.ndarray
    outer: np.ndarray
    ray0: np.ndarray
    ray1: np.ndarray

    @classmethod
    def build(cls, dom, inner=0.0, outer=0.0, ray0=0.0, ray1=0.0):
        """Data from constants, arrays or callables (``theta -> value`` on arcs, ``r -> value`` on rays)."""
        th, r = dom.theta, dom.r

        def sample(spec, nodes):
            if callable(spec):
                out = np.asarray(spec(nodes), dtype=float)
            else:
                out = np.asarray(spec, dtype=float)
                if out.ndim == 0:
                    out = np.full(nodes.shape, float(out))
            if out.shape != nodes.shape or not np.all(np.isfinite(out)):
                raise DomainError("boundary data must be finite and match the grid")
            return out
        return cls(sample(inner, th), sample(outer, th), sample(ray0, r), sample(ray1, r))

    @classmethod
    def from_function(cls, dom, f):
        """Sample ``f(r, theta)`` on every boundary node."""
        th, r = dom.theta, dom.r
        return cls(f(np.full_like(th, dom.r_min), th), f(np.full_like(th, dom.r_max), th),
                   f(r, np.zeros_like(r)), f(r, np.full_like(r, dom.alpha)))

    def scaled(self, c):
        return BoundaryData(c * self.inner, c * self.outer, c * self.ray0, c * self.ray1)

    @property
    def min(self):
        return float(min(a.min() for a in (self.inner, self.outer, self.ray0, self.ray1)))


@dataclass(frozen=True)
class PolarField:
    """Grid function on a sector, boundary values included (shape ``(n_r+1, n_theta+1)``)."""

    domain: SectorDomain
    values: np.ndarray
    data: BoundaryData
    q: float = None
    residual: float = 0.0
    iterations: int = 0
    damping: tuple = field(default=(), repr=False)

    @property
    def r(self):
        return self.domain.r

    @property
    def theta(self):
        return self.domain.theta

    def radial_max(self):
        """``max_theta u(r, theta)`` per radius node."""
        return self.values.max(axis=1)

    def at(self, r, theta):
        """Bilinear interpolation in ``(ln r, theta)``."""
        from scipy.interpolate import RegularGridInterpolator
        interp = RegularGridInterpolator((self.domain.s, self.theta), self.values)
        return interp(np.column_stack([np.log(np.ravel(r)), np.ravel(theta)]))

    def to_csv(self, path):
        rr, tt = np.meshgrid(self.r, self.theta, indexing="ij")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "theta", "u"])
            for a, b, c in zip(rr.ravel(), tt.ravel(), self.values.ravel()):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])


class _System:
    """Assembled five-point operator on the interior nodes of a domain."""

    def __init__(self, dom):
        self.dom = dom
        nr, nt = dom.n_r - 1, dom.n_theta - 1
        self.shape = (nr, nt)
        hs2, ht2 = dom.h_s ** 2, dom.h_theta ** 2
        Ds = sp.diags([-np.ones(nr - 1), 2 * np.ones(nr), -np.ones(nr - 1)], [-1, 0, 1]) / hs2
        Dt = sp.diags([-np.ones(nt - 1), 2 * np.ones(nt), -np.ones(nt - 1)], [-1, 0, 1]) / ht2
        self.A = (sp.kron(Ds, sp.identity(nt)) + sp.kron(sp.identity(nr), Dt)).tocsc()
        self.weight = np.repeat(np.exp(2.0 * dom.s[1:-1]), nt)
        self.hs2, self.ht2 = hs2, ht2

    def rhs(self, data):
        nr, nt = self.shape
        b = np.zeros(self.shape)
        b[0, :] += data.inner[1:-1] / self.hs2
        b[-1, :] += data.outer[1:-1] / self.hs2
        b[:, 0] += data.ray0[1:-1] / self.ht2
        b[:, -1] += data.ray1[1:-1] / self.ht2
        return b.ravel()

    def full(self, u, data):
        nr, nt = self.shape
        out = np.empty((nr + 2, nt + 2))
        out[1:-1, 1:-1] = u.reshape(self.shape)
        out[0, :] = data.inner
        out[-1, :] = data.outer
        out[:, 0] = data.ray0
        out[:, -1] = data.ray1
        return out

    def residual(self, u, b, q):
        F = self.A @ u - b
        if q is not None:
            F += self.weight * np.abs(u) ** (q - 1.0) * u
        return F

    def operator_residual(self, U, q):
        """Residual of a full grid function (boundary values taken from ``U``)."""
        data = BoundaryData(U[0].copy(), U[-1].copy(), U[:, 0].copy(), U[:, -1].copy())
        u = U[1:-1, 1:-1].ravel()
        return self.residual(u, self.rhs(data), q).reshape(self.shape)


def _relative(F, u):
    return float(np.max(np.abs(F))) / max(1.0, float(np.max(np.abs(u))) if u.size else 1.0)


def solve_semilinear(dom, q, data, initial=None, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER):
    """Solve the discrete problem with Dirichlet data.

    Parameters
    ----------
    dom : SectorDomain
    q : float or None
        Exponent ``> 1``; ``None`` solves the Laplace equation.
    data : BoundaryData
    initial : PolarField or ndarray, optional
        Starting guess for Newton. Defaults to the harmonic solution with
        the same data, which is a supersolution for nonnegative data.
    tol : float
        Bound on ``max|F| / max(1, max|u|)`` in the log-polar scaling.

    Returns
    -------
    PolarField
    """
    if q is not None:
        q = check_exponent(q)
    sys_ = _System(dom)
    b = sys_.rhs(data)
    if initial is None:
        u = splu(sys_.A).solve(b)
    else:
        init = initial.values if isinstance(initial, PolarField) else np.asarray(initial, dtype=float)
        u = init[1:-1, 1:-1].ravel().copy()
    if q is None:
        F = sys_.residual(u, b, None)
        return PolarField(dom, sys_.full(u, data), data, None, _relative(F, u), 0, ())
    F = sys_.residual(u, b, q)
    merit = float(np.linalg.norm(F))
    res = _relative(F, u)
    history, damping = [res], []
    it = 0
    while res >= tol:
        it += 1
        if it > maxiter:
            raise ConvergenceError("solve_semilinear", f"no convergence in {maxiter} Newton steps; damping {damping[-5:]}",
                                   res, history)
        J = sys_.A + sp.diags(q * sys_.weight * np.abs(u) ** (q - 1.0))
        step = -splu(J.tocsc()).solve(F)
        t = 1.0
        for _ in range(MAX_BACKTRACKS + 1):
            trial = u + t * step
            F_trial = sys_.residual(trial, b, q)
            m_trial = float(np.linalg.norm(F_trial))
            if m_trial <= (1.0 - 1e-4 * t) * merit:
                break
            t *= 0.5
        else:
            if _relative(F, u) < 10 * tol:
                break
            raise ConvergenceError("solve_semilinear", f"line search failed; damping {damping[-5:]}", res, history)
        u, F, merit = trial, F_trial, m_trial
        res = _relative(F, u)
        history.append(res)
        damping.append(t)
    return PolarField(dom, sys_.full(u, data), data, q, res, it, tuple(damping))


def comparison_holds(lower, upper, atol=0.0):
    """``lower <= upper`` pointwise on a common grid, up to ``atol`` relative to ``max|upper|``."""
    a = lower.values if isinstance(lower, PolarField) else np.asarray(lower)
    b = upper.values if isinstance(upper, PolarField) else np.asarray(upper)
    if a.shape != b.shape:
        raise DomainError("fields live on different grids")
    return bool(np.all(a <= b + atol * max(1.0, float(np.max(np.abs(b))))))


def discrete_residual(dom, q, U):
    """Five-point residual of a full grid function ``U`` on the interior nodes."""
    return _System(dom).operator_residual(np.asarray(U, dtype=float), q)


# --- kernels and the vertex mass ----------------------------------------------

def kernel_exponent(alpha):
    return math.pi / alpha


def vertex_kernel(dom):
    """Boundary data ``r_min^(-a) sin(a theta)`` on the inner arc, zero elsewhere."""
    a = kernel_exponent(dom.alpha)
    th = dom.theta
    inner = dom.r_min ** (-a) * np.sin(a * th)
    inner[0] = inner[-1] = 0.0
    return BoundaryData.build(dom, inner=inner)


def reference_point(dom):
    """Indices of the grid node nearest ``(r, theta) = (r_max/2, alpha/2)``."""
    i = int(np.argmin(np.abs(dom.r - 0.5 * dom.r_max)))
    j = int(np.argmin(np.abs(dom.theta - 0.5 * dom.alpha)))
    return i, j


def harmonic_measure(dom, point=None):
    """Discrete harmonic measure of the inner-arc nodes seen from ``point``.

    One transposed solve gives the weights ``w`` with
    ``H[g](point) = sum_j w_j g_j`` for every inner-arc data ``g``.
    """
    i, j = reference_point(dom) if point is None else point
    sys_ = _System(dom)
    nr, nt = sys_.shape
    if not (1 <= i <= nr and 1 <= j <= nt):
        raise DomainError("reference point must be an interior node")
    e = np.zeros(nr * nt)
    e[(i - 1) * nt + (j - 1)] = 1.0
    y = splu(sys_.A.T.tocsc()).solve(e)
    w = np.zeros(dom.n_theta + 1)
    w[1:-1] = y.reshape(sys_.shape)[0, :] / sys_.hs2
    return w


def vertex_mass_normalization(dom, point=None):
    """Harmonic-measure mass ``gamma_h`` of the truncated kernel trace.

    For ``r_min -> 0`` and a fine grid this tends to
    ``(r^-a - r^a) sin(a theta)`` evaluated at the reference point.
    """
    w = harmonic_measure(dom, point)
    return float(np.dot(w, vertex_kernel(dom).inner))


# --- fits -------------------------------------------------------------------

class Classification:
    BOUNDED = "Bounded"
    WEAK = "Weak"
    STRONG = "Strong"


@dataclass(frozen=True)
class AsymptoticFit:
    """Power-law fit ``max_theta u ~ amplitude * r^fitted_exponent`` near the vertex."""

    fitted_exponent: float
    amplitude: float
    r2: float
    classification: str
    angular_profile_match: float
    window: tuple
    reference_exponents: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"fitted_exponent": self.fitted_exponent, "amplitude": self.amplitude, "r2": self.r2,
               "classification": self.classification}
        out["angular_profile_match"] = self.angular_profile_match
        out["window"] = list(self.window)
        out.update({k: v for k, v in self.extras.items() if isinstance(v, (int, float, str, bool))})
        return out


def fit_power_law(r, y):
    """Least-squares fit of ``log y = log A + p log r``. Returns ``(p, A, r2)``."""
    x, z = np.log(r), np.log(y)
    p, c = np.polyfit(x, z, 1)
    pred = p * x + c
    ss_res = float(np.sum((z - pred) ** 2))
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(p), float(math.exp(c)), r2


def classify_exponent(p, alpha, q):
    a = kernel_exponent(alpha)
    refs = {Classification.BOUNDED: a, Classification.WEAK: -a}
    if q is not None:
        refs[Classification.STRONG] = -2.0 / (q - 1.0)
    label = min(refs, key=lambda k: abs(refs[k] - p))
    return label, refs


def _profile_distance(values, reference):
    """Relative L2 distance of two angular profiles after max normalization."""
    v = values / np.max(values)
    ref = reference / np.max(reference)
    return float(np.linalg.norm(v - ref) / np.linalg.norm(ref))


def fit_field(fld, window=None, require=True):
    """Fit the vertex behaviour of a field over ``window`` (default ``[2 r_min, 20 r_min]``)."""
    dom = fld.domain
    lo, hi = window if window is not None else (2.0 * dom.r_min, 20.0 * dom.r_min)
    r = dom.r
    sel = (r >= lo * (1 - 1e-12)) & (r <= hi * (1 + 1e-12))
    if sel.sum() < 3:
        raise DomainError("fit window holds fewer than three radius nodes")
    ymax = fld.values[sel].max(axis=1)
    if np.any(ymax <= 0):
        raise DomainError("field is not positive in the fit window")
    p, amp, r2 = fit_power_law(r[sel], ymax)
    label, refs = classify_exponent(p, dom.alpha, fld.q)
    a = kernel_exponent(dom.alpha)
    mid = np.flatnonzero(sel)[np.sum(sel) // 2]
    match = _profile_distance(fld.values[mid], np.sin(a * dom.theta))
    if require and r2 < R2_MIN:
        raise FitRejectedError("fit_field", f"regression R^2 = {r2:.6f} below {R2_MIN}", 1.0 - r2)
    return AsymptoticFit(p, amp, r2, label, match, (lo, hi), refs)


def weak_singularity_experiment(dom, q, k=1.0, point=None):
    """Solve with vertex mass ``k`` and fit the inner behaviour.

    The vertex mass is realised as ``(k / gamma_h) r_min^(-a) sin(a theta)`` on
    the inner arc, where ``gamma_h`` is the discrete harmonic-measure mass
    of the kernel trace. ``extras`` records ``gamma_h``, ``k`` and
    ``k_star_gamma = amplitude * gamma_h``, which should reproduce ``k``.
    """
    q = check_exponent(q)
    k = check_real(k, "k", low=0.0, low_open=True)
    a = kernel_exponent(dom.alpha)
    q_s = 1.0 + 2.0 * dom.alpha / math.pi
    if q >= q_s:
        raise DomainError(f"weak singularities need q < q_S = {q_s:.6g}")
    gamma_h = vertex_mass_normalization(dom, point)
    fld = solve_semilinear(dom, q, vertex_kernel(dom).scaled(k / gamma_h))
    fit = fit_field(fld)
    extras = {"gamma_h": gamma_h, "k": k, "k_star_gamma": fit.amplitude * gamma_h,
              "expected_exponent": -a, "residual": fld.residual}
    return AsymptoticFit(fit.fitted_exponent, fit.amplitude, fit.r2, fit.classification,
                         fit.angular_profile_match, fit.window, fit.reference_exponents, extras)


def omega_profile(alpha, q, mesh=None):
    """Strong-singularity profile on ``(0, alpha)`` for ``N = 2``."""
    mesh = mesh if mesh is not None else 2 ** 14
    res = solve_omega(NonlinearProfileProblem(2, q, Arc(alpha), mesh))
    if not res.exists:
        raise DomainError(f"no strong singularity profile: q = {q} is not below q_S")
    return res.profile


def _aitken(u0, u1, u2):
    d1, d2 = u1 - u0, u2 - u1
    den = d2 - d1
    safe = np.abs(den) > 1e-14 * np.maximum(np.abs(u2), 1.0)
    out = u2.copy()
    ratio = np.where(safe, d2 / np.where(safe, den, 1.0), 0.0)
    out[safe] = (u2 - d2 * ratio)[safe]
    # extrapolation only acts where the sequence is geometrically contracting
    bad = safe & ((d2 / np.where(d1 == 0, 1.0, d1) >= 1.0) | (d1 == 0))
    out[bad] = u2[bad]
    return out


def strong_singularity_experiment(dom, q, ladder=12, window=None, profile_mesh=None):
    """Drive the vertex mass through ``k = 4^j`` and compare with ``r^(-2/(q-1)) omega``.

    Fields are required to increase with ``k`` (discrete comparison
    principle); the limit is extrapolated pointwise by Aitken's process on
    the last three fields and compared with the exact separable solution in
    relative L2 over ``window`` (default ``[10^4 r_min, 10^5 r_min]``, far
    enough from the inner arc for the truncation layer to have decayed).
    """
    q = check_exponent(q)
    ladder = check_int(ladder, "ladder", minimum=3)
    q_s = 1.0 + 2.0 * dom.alpha / math.pi
    if q >= q_s:
        raise DomainError(f"strong singularities need q < q_S = {q_s:.6g}")
    beta = 2.0 / (q - 1.0)
    base = vertex_kernel(dom).scaled(1.0 / vertex_mass_normalization(dom))
    fields = []
    prev = None
    for j in range(ladder):
        fld = solve_semilinear(dom, q, base.scaled(4.0 ** j), initial=prev)
        if prev is not None and not comparison_holds(prev, fld, atol=1e-9):
            raise SchemeViolationError(f"k-ladder is not monotone at k = 4^{j}")
        fields.append(fld)
        prev = fld
    lim = _aitken(fields[-3].values, fields[-2].values, fields[-1].values)
    lo, hi = window if window is not None else (1e4 * dom.r_min, 1e5 * dom.r_min)
    r = dom.r
    sel = (r >= lo * (1 - 1e-12)) & (r <= hi * (1 + 1e-12))
    if sel.sum() < 3:
        raise DomainError("comparison window holds fewer than three radius nodes")
    omega = omega_profile(dom.alpha, q, profile_mesh)(dom.theta)
    exact = r[sel, None] ** (-beta) * omega[None, :]
    err = float(np.linalg.norm(lim[sel] - exact) / np.linalg.norm(exact))
    p, amp, r2 = fit_power_law(r[sel], lim[sel].max(axis=1))
    label, refs = classify_exponent(p, dom.alpha, q)
    mid = np.flatnonzero(sel)[np.sum(sel) // 2]
    match = _profile_distance(lim[mid], omega)
    extras = {"limit_relative_l2": err, "ladder": ladder, "omega_max": float(omega.max()),
              "expected_exponent": -beta}
    return AsymptoticFit(p, amp, r2, label, match, (lo, hi), refs, extras)


@dataclass(frozen=True)
class HarnackReport:
    sup_ratio: float
    nodes: int
    center: tuple
    radius: float


def harnack_ratio_check(dom, q, data1, data2, center=None, radius=0.2):
    """Sup of ``(u2(z')/u2(z)) (u1(z)/u1(z'))`` over nodes of a ball.

    The ball is centred at a boundary point (default ``r = 0.5`` on the ray
    ``theta = 0``) where both solutions vanish; the sup equals
    ``max(u1/u2) / min(u1/u2)`` over interior nodes in the ball.
    """
    u1 = solve_semilinear(dom, q, data1)
    u2 = solve_semilinear(dom, q, data2)
    cr, ct = center if center is not None else (0.5, 0.0)
    rr, tt = np.meshgrid(dom.r, dom.theta, indexing="ij")
    x, y = rr * np.cos(tt), rr * np.sin(tt)
    cx, cy = cr * math.cos(ct), cr * math.sin(ct)
    inside = (x - cx) ** 2 + (y - cy) ** 2 < radius ** 2
    inside[0, :] = inside[-1, :] = False
    inside[:, 0] = inside[:, -1] = False
    a, b = u1.values[inside], u2.values[inside]
    if a.size == 0:
        raise DomainError("no interior nodes in the Harnack ball")
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("solutions are not strictly positive in the Harnack ball")
    ratio = a / b
    return HarnackReport(float(ratio.max() / ratio.min()), int(a.size), (cr, ct), radius)


@dataclass(frozen=True)
class HalfStripField:
    """``v(t, theta) = r^alpha_S u`` on ``t = -ln r`` (increasing toward the vertex)."""

    t: np.ndarray
    theta: np.ndarray
    values: np.ndarray


def halfstrip_transform(fld, alpha_s):
    alpha_s = check_real(alpha_s, "alpha_s")
    r = fld.r
    v = (r[:, None] ** alpha_s) * fld.values
    return HalfStripField(-np.log(r)[::-1], fld.theta.copy(), v[::-1])


def boundary_distance(dom):
    """Euclidean distance of every grid node to the boundary of the truncated sector."""
    rr, tt = np.meshgrid(dom.r, dom.theta, indexing="ij")
    d_inner = rr - dom.r_min
    d_outer = dom.r_max - rr

    def to_ray(angle):
        # beyond a right angle the nearest ray point is the vertex
        return np.where(angle < math.pi / 2, rr * np.sin(np.minimum(angle, math.pi / 2)), rr)
    return np.minimum.reduce([d_inner, d_outer, to_ray(tt), to_ray(dom.alpha - tt)])


def keller_osserman_constant(fld, min_dist=0.02):
    """``max u dist^(2/(q-1))`` over nodes at distance ``>= min_dist`` from the boundary.

    Next to large Dirichlet data the discrete solution keeps a layer a few
    cells wide whose height grows with the data, so nodes closer than
    ``min_dist`` are left out.
    """
    if fld.q is None:
        raise DomainError("the Keller-Osserman constant needs q")
    dist = boundary_distance(fld.domain)
    mask = dist >= min_dist
    if not np.any(mask):
        raise DomainError("no grid node lies at distance >= min_dist from the boundary")
    val = fld.values * dist ** (2.0 / (fld.q - 1.0))
    return float(np.max(val[mask]))
