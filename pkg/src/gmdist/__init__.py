"""Distance from a univariate measure to the closest Gaussian mixture.

The package builds a hierarchy of semidefinite moment relaxations of an
optimal-transport problem whose second marginal is itself an unknown Gaussian
mixture, solves them with a self-contained interior-point method, and either
certifies that no admissible mixture exists (strictly positive optimal value)
or extracts and verifies a finite atomic mixing measure.
"""

from .errors import (
    DriverError,
    ExtractionFailedError,
    InsufficientDataError,
    NotConvergedError,
    NumericalError,
    UsageError,
)
from .extraction import AtomicMeasure, FlatnessReport, check_flatness, extract_atoms, recompute_moments
from .gaussmoments import (
    MeasureSpec,
    MomentVector,
    central_moment,
    gaussian_moment_poly,
    moment_poly_bound,
    moments_of_measure,
)
from .hierarchy import (
    HierarchyConfig,
    HierarchyReport,
    VerificationResult,
    run,
    verify_mixture,
    w2_gaussian_closed_form,
)
from .polyalg import SparsePoly, SymMatrix, graded_index, poly_eval, poly_mul
from .relaxation import (
    DualCertificate,
    PseudoMomentLayout,
    SDPProblem,
    assemble_w1,
    assemble_w2,
    extract_dual,
    localizing_matrix,
    moment_matrix,
)
from .sdpsolver import SDPSolution, solve
from .semialg import SemialgebraicSet, contains, from_inequalities, make_box

__version__ = "0.1.0"
