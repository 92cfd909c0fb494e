"""Estimator-style wrappers around the functional API.

Each class keeps its numerical settings as constructor parameters
(``get_params``/``set_params`` come from scikit-learn), does the expensive
solve in ``fit`` and exposes cheap queries through ``predict`` or
``transform``. Fitted state lives in attributes with a trailing underscore.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_array, check_exponent
from .classify import Polyhedron, classify_measure_on_polyhedron, classify_removability
from .exponents import StratumSpec, build_exponent_table, classify_q_regime
from .measures import KernelParams, admissibility_integral, lifted_integral
from .profile import NonlinearProfileProblem, solve_omega
from .sector import SectorDomain, solve_semilinear
from .spectral import cross_section_eigen


class CrossSectionEigensolver(BaseEstimator):
    """First Dirichlet eigenpair of a spherical opening.

    Parameters
    ----------
    opening : Arc, Cap or BoxProduct
    mesh : int, optional
        Cells per separated factor.

    Attributes
    ----------
    eigenvalue_ : float
    error_estimate_ : float
    layers_ : tuple of EigenPair
    """

    def __init__(self, opening=None, mesh=None):
        self.opening = opening
        self.mesh = mesh

    def fit(self, X=None, y=None):
        res = cross_section_eigen(self.opening, self.mesh)
        self.eigenvalue_ = res.eigenvalue
        self.error_estimate_ = res.error_estimate
        self.layers_ = res.layers
        return self

    def predict(self, theta):
        """Outermost-layer eigenfunction at the angles ``theta``."""
        check_is_fitted(self, "layers_")
        return self.layers_[-1].profile(as_float_array(theta, "theta"))


class ExponentLadder(BaseEstimator):
    """Exponent table of one stratum with vectorised queries in ``q``."""

    def __init__(self, N=3, k=2, opening=None, gamma=None, lambda_A=None, mesh=None):
        self.N = N
        self.k = k
        self.opening = opening
        self.gamma = gamma
        self.lambda_A = lambda_A
        self.mesh = mesh

    def fit(self, X=None, y=None):
        spec = StratumSpec(self.N, self.k, opening=self.opening, gamma=self.gamma,
                           lambda_A=self.lambda_A, mesh=self.mesh)
        self.table_ = build_exponent_table(spec)
        return self

    def predict(self, q):
        """Regime label for each exponent in ``q``."""
        check_is_fitted(self, "table_")
        qs = as_float_array(q, "q")
        return np.array([classify_q_regime(self.table_, float(x)).value for x in qs])

    def transform(self, q):
        """Columns ``s(q)`` and ``lambda_Nq(q)``."""
        check_is_fitted(self, "table_")
        qs = as_float_array(q, "q")
        for x in qs:
            check_exponent(float(x))
        return np.column_stack([[self.table_.s(x) for x in qs], [self.table_.lambda_Nq(x) for x in qs]])


class SphericalProfile(BaseEstimator):
    """Positive solution of the nonlinear spherical profile problem."""

    def __init__(self, N=2, q=2.0, opening=None, mesh=1024):
        self.N = N
        self.q = q
        self.opening = opening
        self.mesh = mesh

    def fit(self, X=None, y=None):
        self.result_ = solve_omega(NonlinearProfileProblem(self.N, self.q, self.opening, self.mesh))
        self.exists_ = self.result_.exists
        return self

    def predict(self, theta):
        """Profile values (identically zero when no positive solution exists)."""
        check_is_fitted(self, "result_")
        theta = as_float_array(theta, "theta")
        if not self.exists_:
            return np.zeros_like(theta)
        return self.result_.profile(theta)


class SectorSolver(BaseEstimator):
    """Semilinear Dirichlet solver on a truncated sector.

    ``fit`` takes the :class:`~polycrit.sector.BoundaryData`, or a callable
    ``f(r, theta)`` sampled on the boundary nodes.
    """

    def __init__(self, alpha=np.pi, r_min=1e-3, r_max=1.0, q=2.0, cells_per_decade=64, n_theta=64):
        self.alpha = alpha
        self.r_min = r_min
        self.r_max = r_max
        self.q = q
        self.cells_per_decade = cells_per_decade
        self.n_theta = n_theta

    def _domain(self):
        return SectorDomain.graded(self.alpha, self.r_min, self.r_max, self.cells_per_decade, self.n_theta)

    def fit(self, data, y=None):
        from .sector import BoundaryData
        dom = self._domain()
        if callable(data):
            data = BoundaryData.from_function(dom, data)
        self.field_ = solve_semilinear(dom, self.q, data)
        return self

    def predict(self, X):
        """Field at points given as rows ``(r, theta)``."""
        check_is_fitted(self, "field_")
        X = as_float_array(X, "X", ndim=2)
        return self.field_.at(X[:, 0], X[:, 1])


class AdmissibilityFunctional(BaseEstimator):
    """Admissibility integral of a fitted edge measure as a function of ``q``."""

    def __init__(self, N=3, k=2, opening=None, gamma=None, lambda_A=None, R=1.0):
        self.N = N
        self.k = k
        self.opening = opening
        self.gamma = gamma
        self.lambda_A = lambda_A
        self.R = R

    def fit(self, measure, y=None):
        spec = StratumSpec(self.N, self.k, opening=self.opening, gamma=self.gamma, lambda_A=self.lambda_A)
        self.table_ = build_exponent_table(spec)
        self.measure_ = measure
        return self

    def certificates(self, q):
        check_is_fitted(self, "measure_")
        return [admissibility_integral(KernelParams.from_table(self.table_, float(x)), self.measure_, self.R)
                for x in as_float_array(q, "q")]

    def transform(self, q):
        """``M(R)`` per exponent; ``inf`` when divergent, ``nan`` when inconclusive."""
        return np.array([c.value if c.status != "inconclusive" else np.nan for c in self.certificates(q)])

    def lifted(self, q, sigma, j):
        check_is_fitted(self, "measure_")
        return lifted_integral(KernelParams.from_table(self.table_, q), self.measure_, sigma, j)


class EdgeMeasureClassifier(BaseEstimator):
    """Good-measure and removability verdicts for a polyhedron document."""

    def __init__(self, mesh=None):
        self.mesh = mesh

    def fit(self, polyhedron, y=None):
        if isinstance(polyhedron, dict):
            from .classify import polyhedron_from_dict
            polyhedron = polyhedron_from_dict(polyhedron, self.mesh)
        if not isinstance(polyhedron, Polyhedron):
            raise TypeError("fit expects a Polyhedron or its JSON dictionary")
        self.polyhedron_ = polyhedron
        return self

    def report(self, q):
        check_is_fitted(self, "polyhedron_")
        return classify_measure_on_polyhedron(self.polyhedron_.strata, q, self.polyhedron_.measure)

    def predict(self, q):
        """Overall verdict (``good``, ``bad`` or ``indeterminate``) per exponent."""
        return np.array([self.report(float(x)).overall for x in as_float_array(q, "q")])

    def removability(self, q, compact_set=None):
        check_is_fitted(self, "polyhedron_")
        pieces = self.polyhedron_.removable_set if compact_set is None else compact_set
        return classify_removability(self.polyhedron_.strata, q, pieces)
