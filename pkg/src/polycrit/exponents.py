"""Critical-exponent ladder of a cone or dihedral boundary stratum.

A stratum of codimension ``k`` in ``R^N`` is described by the first Dirichlet
eigenvalue ``gamma`` of its cross-section on ``S^{k-1}``, or equivalently by
the eigenvalue ``lambda_A`` of the dihedral opening on ``S^{N-1}``. The
harmonic growth exponent ``kappa_plus`` links the two, and all critical
values of the absorption equation follow from it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from ._validation import check_exponent, check_int, check_real
from .errors import DomainError
from .spectral import Arc, BoxProduct, Cap, cross_section_eigen


class Regime(str, enum.Enum):
    """Position of ``q`` on the exponent ladder of one stratum."""

    SUBCRITICAL = "Subcritical"
    CAPACITY = "Capacity"
    EDGE_REMOVABLE = "EdgeRemovable"

    def __str__(self):
        return self.value


def conjugate(q):
    """Hoelder conjugate ``q / (q - 1)``."""
    q = check_exponent(q)
    return q / (q - 1.0)


def _positive_root(b, c):
    """Positive root of ``x^2 + b x - c = 0`` for ``c >= 0``, cancellation free."""
    disc = math.sqrt(b * b + 4.0 * c)
    if b >= 0:
        return 2.0 * c / (b + disc) if c > 0 else 0.0
    return 0.5 * (disc - b)


def kappa_from_gamma(k, gamma):
    """Positive root of ``kappa^2 + (k - 2) kappa - gamma = 0``.

    Parameters
    ----------
    k : int
        Codimension of the stratum, ``k >= 1``.
    gamma : float
        First Dirichlet eigenvalue of the cross-section on ``S^{k-1}``.
        Must vanish for ``k = 1`` (half-space), and be positive otherwise.

    Returns
    -------
    float
    """
    k = check_int(k, "k", minimum=1)
    gamma = check_real(gamma, "gamma", low=0.0)
    if k == 1:
        if gamma != 0.0:
            raise DomainError("a codimension-1 stratum has gamma = 0")
        return 1.0
    if gamma == 0.0:
        raise DomainError(f"gamma must be positive for k = {k} (zero means a full sphere cross-section)")
    return _positive_root(k - 2.0, gamma)


def lambda_Nq(N, q):
    """Eigenvalue shift ``(2/(q-1)) (2q/(q-1) - N)`` of the self-similar problem."""
    N = check_int(N, "N", minimum=2)
    q = check_exponent(q)
    return (2.0 / (q - 1.0)) * (2.0 * q / (q - 1.0) - N)


@dataclass(frozen=True)
class StratumSpec:
    """Ambient dimension, codimension and one eigenvalue source.

    Exactly one of ``opening``, ``gamma`` or ``lambda_A`` is given, except for
    ``k = 1`` where none is needed. ``opening`` lives on ``S^{k-1}``.
    """

    N: int
    k: int
    opening: object = None
    gamma: float = None
    lambda_A: float = None
    mesh: int = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        N = check_int(self.N, "N", minimum=2)
        k = check_int(self.k, "k", minimum=1, maximum=N)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "k", k)
        given = [x is not None for x in (self.opening, self.gamma, self.lambda_A)]
        if sum(given) > 1:
            raise DomainError("give only one of opening, gamma, lambda_A")
        if k > 1 and sum(given) == 0:
            raise DomainError(f"codimension {k} needs an opening, gamma or lambda_A")
        if self.opening is not None:
            op = self.opening
            if not isinstance(op, (Arc, Cap, BoxProduct)):
                raise DomainError(f"unsupported opening {op!r}")
            if op.sphere_dim != k - 1:
                raise DomainError(f"opening lives on S^{op.sphere_dim} but codimension {k} needs S^{k - 1}")
        if self.gamma is not None:
            object.__setattr__(self, "gamma", check_real(self.gamma, "gamma", low=0.0))
        if self.lambda_A is not None:
            lam = check_real(self.lambda_A, "lambda_A")
            if lam <= 0:
                raise DomainError(f"lambda_A must be positive, got {lam}")
            object.__setattr__(self, "lambda_A", lam)

    @property
    def is_cone(self):
        return self.k == self.N

    @property
    def edge_dim(self):
        return self.N - self.k


@dataclass(frozen=True)
class ExponentTable:
    """All exponents of one stratum.

    ``alpha_S``, ``alpha_tilde_S`` and ``q_S`` are the cone quantities of the
    opening viewed on ``S^{N-1}``; ``q_S`` always coincides with ``q_c``.
    ``gamma_error`` carries the discretization estimate when ``gamma`` was
    computed numerically.
    """

    N: int
    k: int
    gamma: float
    lambda_A: float
    kappa_plus: float
    kappa_minus: float
    alpha_S: float
    alpha_tilde_S: float
    q_S: float
    q_c: float
    q_c_star: float
    gamma_error: float = 0.0

    @property
    def edge_dim(self):
        return self.N - self.k

    @property
    def is_cone(self):
        return self.k == self.N

    @property
    def nu(self):
        """Kernel decay exponent ``N - 2 + 2 kappa_plus``."""
        return self.N - 2.0 + 2.0 * self.kappa_plus

    def s(self, q):
        """Smoothness index ``2 - (k + kappa_plus) / q'``."""
        return 2.0 - (self.k + self.kappa_plus) / conjugate(q)

    def lambda_Nq(self, q):
        return lambda_Nq(self.N, q)

    def to_dict(self):
        return {name: getattr(self, name) for name in TABLE_KEYS}


TABLE_KEYS = ("gamma", "lambda_A", "kappa_plus", "kappa_minus", "alpha_S",
              "alpha_tilde_S", "q_S", "q_c", "q_c_star")


def q_c_star_formula(N, k, lambda_A, kappa_plus):
    """Edge-removability exponent written in terms of ``lambda_A``.

    Infinite when the denominator ``lambda_A - (N - k) kappa_plus`` (which
    equals ``gamma``) vanishes, i.e. for faces.
    """
    gamma = lambda_A - (N - k) * kappa_plus
    if k == 1 or gamma <= 0.0:
        return math.inf
    return 1.0 + (2.0 - k + math.sqrt((k - 2.0) ** 2 + 4.0 * gamma)) / gamma


def build_exponent_table(spec):
    """Exponent table of a stratum.

    Parameters
    ----------
    spec : StratumSpec

    Returns
    -------
    ExponentTable
    """
    N, k = spec.N, spec.k
    err = 0.0
    if k == 1:
        if spec.gamma not in (None, 0.0):
            raise DomainError("a codimension-1 stratum has gamma = 0")
        if spec.lambda_A is not None and abs(spec.lambda_A - (N - 1)) > 1e-12 * N:
            raise DomainError(f"a half-space has lambda_A = N - 1 = {N - 1}, got {spec.lambda_A}")
        gamma = 0.0
        kappa = 1.0
    elif spec.lambda_A is not None:
        kappa = _positive_root(N - 2.0, spec.lambda_A)
        gamma = kappa * (kappa + k - 2.0)
        if gamma <= 0.0:
            raise DomainError("lambda_A is too small for a proper cross-section")
    else:
        if spec.opening is not None:
            res = cross_section_eigen(spec.opening, spec.mesh)
            gamma, err = res.eigenvalue, res.error_estimate
        else:
            gamma = spec.gamma
        kappa = kappa_from_gamma(k, gamma)
    lam_a = kappa * (kappa + N - 2.0)
    if lam_a <= 0.0:
        raise DomainError(f"lambda_A must be positive, got {lam_a}")
    kappa_minus = 2.0 - N - kappa
    alpha_s = -kappa_minus
    q_c = (kappa + N) / (kappa + N - 2.0)
    q_star = q_c if k == N else q_c_star_formula(N, k, lam_a, kappa)
    return ExponentTable(
        N=N, k=k, gamma=gamma, lambda_A=lam_a, kappa_plus=kappa, kappa_minus=kappa_minus,
        alpha_S=alpha_s, alpha_tilde_S=kappa, q_S=1.0 + 2.0 / alpha_s, q_c=q_c,
        q_c_star=q_star, gamma_error=err,
    )


def classify_q_regime(table, q):
    """Regime of ``q`` for one stratum.

    ``q = q_c`` belongs to the capacity band for edges and faces, while for a
    cone vertex (``k = N``, empty capacity band) it is already removable.
    """
    q = check_exponent(q)
    if q < table.q_c:
        return Regime.SUBCRITICAL
    if table.is_cone or q >= table.q_c_star:
        return Regime.EDGE_REMOVABLE
    return Regime.CAPACITY


def table_from_dict(data):
    """Inverse of :meth:`ExponentTable.to_dict` given ``N`` and ``k``."""
    values = {key: float(data[key]) for key in TABLE_KEYS}
    return ExponentTable(N=int(data["N"]), k=int(data["k"]), **values)
