"""Spectra, eigenvalue gradients, isospectral deformations and spectral surgery for
canonical one-dimensional Dirac operators ``B y' + Omega y = lam y``."""

from .errors import (
    DiracError,
    DomainError,
    EnumerationError,
    FitError,
    IntegrationOverflow,
    PreconditionError,
    RootError,
    ShapeError,
    SingularityError,
    StructureError,
    TrackingError,
)
from .model import (
    BoundaryParams,
    CanonicalPotential,
    DeformationSchedule,
    GradientBundle,
    Grid,
    Perturbation,
    SpectralDatum,
    SpectrumTable,
    SurgeryPlan,
    SurgeryStep,
    VectorSolution,
    potential_from_matrix_field,
    potential_matrix_field,
    stage_of,
    stage_target,
)
from .ode import characteristic, integrate_left, integrate_right
from .spectrum import (
    SearchWindow,
    asymptotic_remainders,
    eigenpair,
    estimate_boundary_alpha,
    locate_eigenvalues,
    norming_constants,
    normalized_eigenfunction,
)
from .gradient import (
    FitProblem,
    FitResult,
    directional_derivative_fd,
    fit_spectrum,
    grad_boundary,
    grad_matrix,
    grad_potential,
    gradient_bundle,
    pairing,
    random_directions,
)
from .isospectral import deform_sequence, deform_sequence_detail, deform_single, deform_single_detail, theta
from .surgery import (
    WindowContext,
    add_eigenvalue,
    compose_surgery,
    remove_eigenvalue,
    scale_norming,
    window_eigenfunction,
    window_spectrum,
)

__version__ = "0.1.0"
