"""Critical exponents and singularities of absorption equations near polyhedral boundaries."""

__version__ = "0.1.0"

from .classify import (ClassificationReport, Polyhedron, RemovabilityReport, capacity_threshold,
                       classify_measure_on_polyhedron, classify_removability, cube_polyhedron,
                       load_polyhedron, polyhedron_from_dict)
from .errors import (ConvergenceError, DomainError, FitRejectedError, InputError,
                     MeshIncompatibilityError, PolycritError, SchemeViolationError)
from .estimators import (AdmissibilityFunctional, CrossSectionEigensolver, EdgeMeasureClassifier,
                         ExponentLadder, SectorSolver, SphericalProfile)
from .exponents import ExponentTable, Regime, StratumSpec, build_exponent_table, classify_q_regime
from .measures import (EdgeMeasure, KernelParams, admissibility_integral, dirac, equivalence_experiment,
                       lifted_integral, uniform)
from .profile import NonlinearProfileProblem, profile_monotonicity_check, solve_omega
from .sector import (BoundaryData, SectorDomain, harnack_ratio_check, solve_semilinear,
                     strong_singularity_experiment, weak_singularity_experiment)
from .spectral import (Arc, BoxProduct, Cap, IntervalFactor, SturmLiouvilleProblem, cross_section_eigen,
                       solve_sl_eigen)
