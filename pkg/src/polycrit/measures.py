"""Potentials and quadrature functionals of positive measures on an edge.

A measure on the ``m``-dimensional edge of a dihedron is a finite sum of
atoms and uniform pieces carried by axis-aligned ``d``-rectangles. Its
Poisson-type potential uses the kernel ``(tau^2 + |y - z|^2)^(-nu/2)`` with
``nu = N - 2 + 2 kappa_plus``. From it we build

* ``F(tau)``: the ``L^q`` norm (to the power ``q``) of the potential on the
  hyperplane at height ``tau``, optionally restricted to the ball ``B_R``;
* ``M(R)``: ``int_0^R F_R(tau) tau^((s+nu-m)q-1) dtau``, whose finiteness is
  the admissibility condition;
* ``I``: ``int_0^inf F(tau) h(tau) dtau``, the one-dimensional form of the
  harmonic-lifting norm with weight ``h_{sigma,j}``.

Radial integrals are summed over dyadic ``tau``-panels with 16-point
Gauss-Legendre rules; the ratio of consecutive panel contributions decides
convergence, divergence or an inconclusive outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc, gammaln

from ._validation import as_float_array, check_exponent, check_int, check_real
from .errors import ConvergenceError, DomainError, SchemeViolationError

GL16_X, GL16_W = np.polynomial.legendre.leggauss(16)
RATIO_TOL = 1e-3
STABLE_LEVELS = 4
MAX_LEVELS = 60


@dataclass(frozen=True)
class KernelParams:
    """Exponents entering the edge kernel for a given ``q``.

    ``nu`` defaults to ``N - 2 + 2 kappa_plus``; it may be overridden to
    study the dependence of the functionals on the kernel decay.
    """

    N: int
    k: int
    kappa_plus: float
    q: float
    nu: float = None

    def __post_init__(self):
        N = check_int(self.N, "N", minimum=2)
        k = check_int(self.k, "k", minimum=1, maximum=N)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "kappa_plus", check_real(self.kappa_plus, "kappa_plus", low=0.0, low_open=True))
        object.__setattr__(self, "q", check_exponent(self.q))
        nu = N - 2.0 + 2.0 * self.kappa_plus if self.nu is None else check_real(self.nu, "nu")
        object.__setattr__(self, "nu", nu)
        if N > k and nu <= N - k:
            raise DomainError(f"nu = {nu} must exceed the edge dimension {N - k}")

    @classmethod
    def from_table(cls, table, q):
        return cls(table.N, table.k, table.kappa_plus, q)

    @property
    def m(self):
        return self.N - self.k

    @property
    def q_conj(self):
        return self.q / (self.q - 1.0)

    @property
    def s(self):
        return 2.0 - (self.k + self.kappa_plus) / self.q_conj

    @property
    def radial_exponent(self):
        """Exponent ``(s + nu - m) q - 1`` of the admissibility weight."""
        return (self.s + self.nu - self.m) * self.q - 1.0

    def with_q(self, q):
        return replace(self, q=q)


@dataclass(frozen=True)
class UniformPiece:
    """Uniform mass on the axis-aligned box ``[lower, upper]`` (degenerate axes allowed)."""

    lower: np.ndarray
    upper: np.ndarray
    mass: float

    def __post_init__(self):
        lo = as_float_array(self.lower, "lower")
        hi = as_float_array(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DomainError("piece bounds must have the same length")
        if np.any(hi < lo):
            raise DomainError("piece needs lower <= upper on every axis")
        mass = check_real(self.mass, "mass", low=0.0, low_open=True)
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "mass", mass)
        if self.dim == 0:
            raise DomainError("a uniform piece needs positive extent; use an atom instead")

    @property
    def free_axes(self):
        return np.flatnonzero(self.upper > self.lower)

    @property
    def dim(self):
        return int(self.free_axes.size)

    @property
    def volume(self):
        ax = self.free_axes
        return float(np.prod(self.upper[ax] - self.lower[ax]))


@dataclass(frozen=True)
class EdgeMeasure:
    """Finite positive measure on ``R^m`` built from atoms and uniform pieces.

    ``atoms`` is a sequence of ``(location, mass)`` pairs. ``m = 0`` describes
    a measure on a vertex, which can only hold atoms.
    """

    m: int
    atoms: tuple = ()
    pieces: tuple = ()

    def __post_init__(self):
        m = check_int(self.m, "m", minimum=0)
        object.__setattr__(self, "m", m)
        atoms = []
        for loc, mass in self.atoms:
            loc = as_float_array(loc, "atom location") if m > 0 else np.zeros(0)
            if loc.size != m:
                raise DomainError(f"atom location must have {m} coordinates, got {loc.size}")
            loc.flags.writeable = False
            atoms.append((loc, check_real(mass, "atom mass", low=0.0, low_open=True)))
        pieces = tuple(self.pieces)
        for p in pieces:
            if not isinstance(p, UniformPiece):
                raise DomainError("pieces must be UniformPiece instances")
            if p.lower.size != m:
                raise DomainError(f"piece lives in R^{p.lower.size}, measure in R^{m}")
        if not atoms and not pieces:
            raise DomainError("measure must have at least one atom or piece")
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "pieces", pieces)

    @property
    def total_mass(self):
        return sum(a[1] for a in self.atoms) + sum(p.mass for p in self.pieces)

    @property
    def support_radius(self):
        """Radius of the smallest origin-centred ball containing the support."""
        r = 0.0
        for loc, _ in self.atoms:
            r = max(r, float(np.linalg.norm(loc)))
        for p in self.pieces:
            corner = np.maximum(np.abs(p.lower), np.abs(p.upper))
            r = max(r, float(np.linalg.norm(corner)))
        return r

    def scaled(self, factor):
        return EdgeMeasure(self.m, tuple((x, w * factor) for x, w in self.atoms),
                           tuple(UniformPiece(p.lower, p.upper, p.mass * factor) for p in self.pieces))

    def translated(self, shift):
        shift = as_float_array(shift, "shift")
        return EdgeMeasure(self.m, tuple((x + shift, w) for x, w in self.atoms),
                           tuple(UniformPiece(p.lower + shift, p.upper + shift, p.mass) for p in self.pieces))

    def dilated(self, t):
        """Push-forward under ``z -> t z``."""
        t = check_real(t, "t", low=0.0, low_open=True)
        return EdgeMeasure(self.m, tuple((x * t, w) for x, w in self.atoms),
                           tuple(UniformPiece(p.lower * t, p.upper * t, p.mass) for p in self.pieces))

    def mollified(self, width):
        """Replace every atom by a uniform cube of side ``width`` centred on it."""
        width = check_real(width, "width", low=0.0, low_open=True)
        pieces = list(self.pieces)
        for x, w in self.atoms:
            pieces.append(UniformPiece(x - 0.5 * width, x + 0.5 * width, w))
        return EdgeMeasure(self.m, (), tuple(pieces))

    def breakpoints(self, axis):
        pts = [x[axis] for x, _ in self.atoms]
        for p in self.pieces:
            pts.extend([p.lower[axis], p.upper[axis]])
        return np.unique(np.asarray(pts, dtype=float))

    def set_dimensions(self):
        """Dimension of each building block: 0 for atoms, ``d`` for pieces."""
        return [0] * len(self.atoms) + [p.dim for p in self.pieces]


def dirac(m=1, at=None, mass=1.0):
    loc = np.zeros(m) if at is None else at
    return EdgeMeasure(m, ((loc, mass),))


def uniform(lower, upper, mass=1.0):
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    return EdgeMeasure(lower.size, (), (UniformPiece(lower, upper, mass),))


# --- inner integrals --------------------------------------------------------

def _phi(x, nu):
    """``int_0^x (1 + t^2)^(-nu/2) dt`` (odd in x)."""
    b = 0.5 * (nu - 1.0)
    half = 0.5 * beta_fn(0.5, b)
    x2 = x * x
    return np.sign(x) * half * betainc(0.5, b, x2 / (1.0 + x2))


def _psi(x, nu):
    """``int_x^inf (1 + t^2)^(-nu/2) dt`` for ``x >= 0``."""
    b = 0.5 * (nu - 1.0)
    half = 0.5 * beta_fn(0.5, b)
    return half * betainc(b, 0.5, 1.0 / (1.0 + x * x))


def _segment_integral(a, b, nu):
    """``int_a^b (1 + t^2)^(-nu/2) dt`` for arrays ``a < b`` without cancellation."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    out = np.empty(a.shape)
    # reflect so that b > 0 and |a| <= |b| when both share a sign
    neg = b <= 0
    lo = np.where(neg, -b, a)
    hi = np.where(neg, -a, b)
    pos = lo >= 0
    small = hi <= 1.0
    both_pos_small = pos & small
    both_pos_large = pos & ~small
    straddle = ~pos
    out[both_pos_small] = _phi(hi[both_pos_small], nu) - _phi(lo[both_pos_small], nu)
    out[both_pos_large] = _psi(lo[both_pos_large], nu) - _psi(hi[both_pos_large], nu)
    out[straddle] = _phi(hi[straddle], nu) + _phi(-lo[straddle], nu)
    return out


def _sinh_nodes(lo, hi, c, panel=1.5):
    """Nodes and weights in ``v`` for ``int_lo^hi f(v) dv`` with a peak of width ``c`` at 0."""
    tl = np.arcsinh(lo / c)
    th = np.arcsinh(hi / c)
    npan = max(1, int(math.ceil(float(np.max(th - tl)) / panel)))
    edges = tl[:, None] + (th - tl)[:, None] * np.linspace(0.0, 1.0, npan + 1)[None, :]
    a, b = edges[:, :-1], edges[:, 1:]
    t = 0.5 * (a + b)[..., None] + 0.5 * (b - a)[..., None] * GL16_X
    w = 0.5 * (b - a)[..., None] * GL16_W
    t = t.reshape(t.shape[0], -1)
    w = w.reshape(w.shape[0], -1)
    v = c[:, None] * np.sinh(t)
    return v, w * c[:, None] * np.cosh(t)


def inner_potential(mu, tau, points, nu):
    """``int (tau^2 + |y - z|^2)^(-nu/2) dmu(z)`` at ``points`` (shape ``(n, m)``)."""
    y = np.atleast_2d(np.asarray(points, dtype=float))
    if y.shape[1] != mu.m:
        raise DomainError(f"points must have {mu.m} coordinates")
    tau2 = float(tau) ** 2
    out = np.zeros(y.shape[0])
    for loc, mass in mu.atoms:
        r2 = tau2 + np.sum((y - loc) ** 2, axis=1)
        out += mass * r2 ** (-0.5 * nu)
    for p in mu.pieces:
        free = p.free_axes
        fixed = np.setdiff1d(np.arange(mu.m), free)
        c2 = tau2 + np.sum((y[:, fixed] - p.lower[fixed]) ** 2, axis=1)
        dens = p.mass / p.volume
        if p.dim == 1:
            ax = free[0]
            c = np.sqrt(c2)
            seg = _segment_integral((p.lower[ax] - y[:, ax]) / c, (p.upper[ax] - y[:, ax]) / c, nu)
            out += dens * c ** (1.0 - nu) * seg
        elif p.dim == 2:
            a1, a2 = free
            c = np.sqrt(c2)
            v, w = _sinh_nodes(p.lower[a2] - y[:, a2], p.upper[a2] - y[:, a2], c)
            cv = np.sqrt(c2[:, None] + v ** 2)
            lo = ((p.lower[a1] - y[:, a1])[:, None]) / cv
            hi = ((p.upper[a1] - y[:, a1])[:, None]) / cv
            out += dens * np.sum(w * cv ** (1.0 - nu) * _segment_integral(lo, hi, nu), axis=1)
        else:
            raise NotImplementedError("uniform pieces of dimension >= 3 are not supported")
    return out


def poisson_potential(params, mu, x):
    """Poisson potential ``|x'|^kappa int (|x'|^2 + |x'' - z|^2)^(-nu/2) dmu(z)``.

    Parameters
    ----------
    params : KernelParams
    mu : EdgeMeasure
    x : array_like, length ``N``
        First ``k`` coordinates are transversal to the edge, the last ``m``
        run along it. The normalisation constant and the angular factor of
        the kernel are set to 1.
    """
    x = as_float_array(x, "x")
    if x.size != params.N:
        raise DomainError(f"x must have N = {params.N} coordinates")
    if mu.m != params.m:
        raise DomainError("measure dimension does not match the edge dimension")
    rho = float(np.linalg.norm(x[: params.k]))
    if rho == 0.0:
        raise DomainError("x lies on the edge")
    val = inner_potential(mu, rho, x[params.k:][None, :], params.nu)[0]
    return rho ** params.kappa_plus * val


# --- F functional ------------------------------------------------------------

def _graded_points(breaks, tau, lo, hi):
    """Panel endpoints graded geometrically (ratio 2, finest ``tau/8``) around breakpoints."""
    span = hi - lo
    jmax = max(1, int(math.ceil(math.log2(max(span / tau, 2.0)))) + 1)
    offs = tau * 2.0 ** np.arange(-3, jmax + 1)
    pts = [np.array([lo, hi]), breaks]
    for b in breaks:
        pts.append(b - offs)
        pts.append(b + offs)
    pts = np.concatenate(pts)
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    return pts


def _gl_on(edges):
    a, b = edges[:-1], edges[1:]
    x = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * GL16_X
    w = 0.5 * (b - a)[:, None] * GL16_W
    return x.ravel(), w.ravel()


def _radial_power_integral(m, tau, p, R):
    """``|S^{m-1}| int_0^R r^{m-1} (tau^2 + r^2)^(-p) dr`` in closed form."""
    a, b = 0.5 * m, p - 0.5 * m
    sphere = 2.0 * math.pi ** (0.5 * m) / math.exp(gammaln(0.5 * m))
    full = 0.5 * tau ** (m - 2.0 * p) * math.exp(gammaln(a) + gammaln(b) - gammaln(a + b))
    frac = 1.0 if R is None else float(betainc(a, b, R * R / (tau * tau + R * R)))
    return sphere * full * frac


def F_profile(params, mu, tau, R=None):
    """``F(tau) = int_{B_R} |int (tau^2 + |y - z|^2)^(-nu/2) dmu(z)|^q dy``.

    ``R=None`` integrates over all of ``R^m``. For ``m = 1`` and ``m = 2``
    panels are graded geometrically around every atom and piece edge; for
    larger ``m`` only a single atom is supported, through the radial
    reduction (atom at the origin when windowed).
    """
    tau = check_real(tau, "tau", low=0.0, low_open=True)
    if R is not None:
        R = check_real(R, "R", low=0.0, low_open=True)
    m, nu, q = params.m, params.nu, params.q
    if mu.m != m or m == 0:
        raise DomainError("measure must live on the edge R^m with m = N - k >= 1")
    single_atom = len(mu.atoms) == 1 and not mu.pieces
    if single_atom and (R is None or not np.any(mu.atoms[0][0])):
        mass = mu.atoms[0][1]
        return mass ** q * _radial_power_integral(m, tau, 0.5 * nu * q, R)
    if m == 1:
        brk = mu.breakpoints(0)
        if R is None:
            scale = float(brk.max() - brk.min()) + tau
            lo, hi = brk.min() - 4096.0 * scale, brk.max() + 4096.0 * scale
        else:
            lo, hi = -R, R
        x, w = _gl_on(_graded_points(brk, tau, lo, hi))
        val = float(np.sum(w * inner_potential(mu, tau, x[:, None], nu) ** q))
        if R is None:
            # both far tails, where the measure acts like a point mass
            mass = mu.total_mass
            for dist in (brk.min() - lo, hi - brk.max()):
                val += mass ** q * dist ** (1.0 - nu * q) / (nu * q - 1.0)
        return val
    if m == 2:
        rules = []
        for ax in (0, 1):
            brk = mu.breakpoints(ax)
            if R is None:
                scale = float(np.ptp(brk)) + tau
                lo, hi = brk.min() - 512.0 * scale, brk.max() + 512.0 * scale
            else:
                lo, hi = -R, R
            rules.append(_gl_on(_graded_points(brk, tau, lo, hi)))
        (x0, w0), (x1, w1) = rules
        X0, X1 = np.meshgrid(x0, x1, indexing="ij")
        W = np.outer(w0, w1)
        pts = np.column_stack([X0.ravel(), X1.ravel()])
        vals = inner_potential(mu, tau, pts, nu) ** q
        if R is not None:
            vals = np.where(np.sum(pts ** 2, axis=1) <= R * R, vals, 0.0)
        return float(np.sum(W.ravel() * vals))
    raise NotImplementedError(f"F on R^{m} is only available for a single atom")


# --- dyadic radial quadrature ----------------------------------------------

@dataclass(frozen=True)
class DyadicResult:
    """Outcome of a dyadic radial quadrature.

    ``status`` is ``"convergent"``, ``"divergent"`` or ``"inconclusive"``.
    ``ratio`` is the stabilised ratio of consecutive panel contributions and
    ``exponent`` the power ``a`` of the integrand ``~ tau^a`` it implies.
    ``tail`` is the geometric estimate added to ``value`` for the panels not
    computed.
    """

    status: str
    value: float
    tail: float
    ratio: float
    exponent: float
    levels: int
    panel_sums: tuple = field(default=(), repr=False)

    @property
    def convergent(self):
        return self.status == "convergent"

    @property
    def divergent(self):
        return self.status == "divergent"

    def to_dict(self):
        return {"status": self.status, "value": self.value, "tail": self.tail,
                "ratio": self.ratio, "exponent": self.exponent, "levels": self.levels}


def _panel(g, a, b):
    x = 0.5 * (a + b) + 0.5 * (b - a) * GL16_X
    return 0.5 * (b - a) * float(np.dot(GL16_W, [g(t) for t in x]))


def dyadic_integral(g, anchor, toward="zero", max_levels=MAX_LEVELS, first_level=0):
    """Integrate ``g`` from ``anchor`` to 0 (or to infinity) on dyadic panels.

    Panel ``l`` is ``[anchor 2^-(l+1), anchor 2^-l]`` toward zero and
    ``[anchor 2^l, anchor 2^(l+1)]`` toward infinity. Once the ratio ``r`` of
    consecutive panel contributions is stable to ``1e-3`` over four levels,
    the integral is declared convergent when ``r < 1 - 1e-3`` (geometric tail
    added) and divergent otherwise.
    """
    sums = []
    ratios = []
    total = 0.0
    stable = 0
    for lev in range(first_level, first_level + max_levels):
        if toward == "zero":
            a, b = anchor * 2.0 ** (-lev - 1), anchor * 2.0 ** (-lev)
        else:
            a, b = anchor * 2.0 ** lev, anchor * 2.0 ** (lev + 1)
        p = _panel(g, a, b)
        if not math.isfinite(p):
            break
        sums.append(p)
        total += p
        if len(sums) >= 2:
            if sums[-2] == 0.0:
                ratios.append(0.0 if p == 0.0 else math.inf)
            else:
                ratios.append(p / sums[-2])
            if len(ratios) >= 2 and abs(ratios[-1] - ratios[-2]) <= RATIO_TOL:
                stable += 1
            else:
                stable = 0
        # super-geometric decay (e.g. exponential weights)
        if len(sums) >= 3 and total > 0 and abs(p) <= 1e-16 * abs(total) and abs(sums[-2]) <= 1e-14 * abs(total):
            return DyadicResult("convergent", total, 0.0, ratios[-1], -math.inf if toward == "zero" else math.inf,
                                len(sums), tuple(sums))
        if stable >= STABLE_LEVELS - 1:
            r = ratios[-1]
            expo = -1.0 - math.log2(r) if r > 0 else -math.inf
            if toward != "zero":
                expo = math.log2(r) - 1.0 if r > 0 else -math.inf
            if r < 1.0 - RATIO_TOL:
                tail = p * r / (1.0 - r)
                return DyadicResult("convergent", total + tail, tail, r, expo, len(sums), tuple(sums))
            return DyadicResult("divergent", math.inf, math.inf, r, expo, len(sums), tuple(sums))
    r = ratios[-1] if ratios else math.nan
    return DyadicResult("inconclusive", total, math.nan, r, math.nan, len(sums), tuple(sums))


def admissibility_integral(params, mu, R):
    """``M(R) = int_0^R F_R(tau) tau^((s+nu-m)q-1) dtau`` with a certificate.

    Parameters
    ----------
    params : KernelParams
    mu : EdgeMeasure
        Support must lie in ``B_{R/2}``.
    R : float

    Returns
    -------
    DyadicResult
        Convergent with the value (including the geometric tail), divergent
        with the fitted small-``tau`` exponent of the integrand, or
        inconclusive.
    """
    R = check_real(R, "R", low=0.0, low_open=True)
    if mu.support_radius > 0.5 * R:
        raise DomainError(f"support radius {mu.support_radius} exceeds R/2 = {R / 2}")
    e = params.radial_exponent

    def g(t):
        return F_profile(params, mu, t, R) * t ** e
    return dyadic_integral(g, R, toward="zero")


def h_weight(tau, sigma, q, j):
    """Weight ``h_{sigma,j}`` of the lifted integral."""
    j = check_int(j, "j", minimum=1)
    p = (sigma + 1.0) * q
    tau = np.asarray(tau, dtype=float)
    if j == 1:
        return np.exp(-tau) * tau ** (p - 1.0)
    return tau ** (p + j - 2.0) / (1.0 + tau) ** p


def lifted_integral(params, mu, sigma, j, R=None):
    """``I = int_0^inf F(tau) h_{sigma,j}(tau) dtau`` (or over ``(0, R)`` with ``F_R``).

    Returns ``inf`` when the dyadic quadrature certifies divergence.
    """
    sigma = check_real(sigma, "sigma", low=0.0, low_open=True)
    j = check_int(j, "j", minimum=1)
    if params.nu <= params.m:
        raise DomainError("the lifted integral needs nu > m")
    q = params.q

    def g(t):
        return F_profile(params, mu, t, R) * float(h_weight(t, sigma, q, j))
    anchor = 1.0 if R is None else float(R)
    near = dyadic_integral(g, anchor, toward="zero")
    if near.divergent:
        return math.inf
    if near.status != "convergent":
        raise ConvergenceError("lifted_integral", "small-tau quadrature inconclusive", near.ratio)
    if R is not None:
        return near.value
    far = dyadic_integral(g, anchor, toward="infinity")
    if far.divergent:
        return math.inf
    if far.status != "convergent":
        raise ConvergenceError("lifted_integral", "large-tau quadrature inconclusive", far.ratio)
    return near.value + far.value


# --- equivalence experiment -------------------------------------------------

@dataclass(frozen=True)
class EquivalenceRow:
    label: str
    admissibility: float
    lifted: float
    ratio: float
    mollify_width: float = None


@dataclass(frozen=True)
class EquivalenceTable:
    R: float
    sigma: float
    j: int
    rows: tuple
    envelope_exponent: float

    @property
    def ratios(self):
        return np.array([r.ratio for r in self.rows])

    @property
    def band_width(self):
        r = self.ratios
        return float(r.max() / r.min())

    def passes(self, band=50.0):
        return self.band_width <= band


def lifting_indices(params):
    """``j = ceil(nu) - m`` and ``sigma = s + (j - 1)/q'``."""
    j = max(1, int(math.ceil(params.nu - 1e-12)) - params.m)
    sigma = params.s + (j - 1) / params.q_conj
    return j, sigma


def equivalence_experiment(params, family, R, mollify_widths=(0.01, 0.05)):
    """Compare ``M(R)`` with the lifted proxy over a family of measures.

    Measures with atoms are replaced by their mollifications at every width
    in ``mollify_widths`` (atoms do not belong to the negative Besov space
    in the capacity band). ``family`` is a sequence of ``(label, measure)``.
    """
    s, m, q = params.s, params.m, params.q
    if not (0.0 < s <= m / params.q_conj + 1e-14):
        raise DomainError(f"equivalence needs 0 < s <= m/q' (s = {s:.6g}, m/q' = {m / params.q_conj:.6g})")
    if params.nu - m < 1.0:
        raise DomainError("equivalence needs nu - m >= 1")
    j, sigma = lifting_indices(params)
    rows = []
    for label, mu in family:
        variants = [(mu, None)] if not mu.atoms else [(mu.mollified(w), w) for w in mollify_widths]
        for meas, w in variants:
            adm = admissibility_integral(params, meas, R)
            if not adm.convergent:
                raise SchemeViolationError(f"admissibility integral is {adm.status} for {label!r} in the equivalence regime")
            lift = lifted_integral(params, meas, sigma, j)
            if not math.isfinite(lift) or lift <= 0:
                raise SchemeViolationError(f"lifted integral is not finite for {label!r}")
            rows.append(EquivalenceRow(label, adm.value, lift, adm.value / lift, w))
    return EquivalenceTable(R, sigma, j, tuple(rows), (s + params.nu - m) * q + 1.0)


def measure_from_dict(data, m=None):
    """Measure from ``{"atoms": [{"at", "mass"}], "pieces": [{"lower", "upper", "mass"}]}``."""
    atoms = []
    for a in data.get("atoms", []):
        at = a.get("at", [])
        atoms.append((np.atleast_1d(np.asarray(at, dtype=float)), a["mass"]))
    pieces = [UniformPiece(np.atleast_1d(np.asarray(p["lower"], dtype=float)),
                           np.atleast_1d(np.asarray(p["upper"], dtype=float)), p["mass"])
              for p in data.get("pieces", [])]
    if m is None:
        m = data.get("m")
        if m is None:
            m = atoms[0][0].size if atoms else pieces[0].lower.size
    if m == 0:
        atoms = [(np.zeros(0), w) for _, w in atoms]
    return EdgeMeasure(m, tuple(atoms), tuple(pieces))


def measure_to_dict(mu):
    return {
        "m": mu.m,
        "atoms": [{"at": x.tolist(), "mass": w} for x, w in mu.atoms],
        "pieces": [{"lower": p.lower.tolist(), "upper": p.upper.tolist(), "mass": p.mass} for p in mu.pieces],
    }
