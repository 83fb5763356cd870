"""Spectral inversion and regularisation for symmetric Markov semigroups."""

from .bessel import (
    QuadratureConfig,
    QuadratureResult,
    bessel_i0,
    bessel_j0,
    bochner_quadrature,
    laplace_i0_identity,
    laplace_j0_identity,
)
from .errors import (
    AsymmetricKernel,
    ConditioningCapExceeded,
    DegeneratePhi,
    ExpressionParseError,
    InvalidBoundary,
    InvalidConfig,
    LengthMismatch,
    NegativeEigenvalue,
    NegativeTime,
    NonFiniteFunctionValue,
    NonPositiveAlpha,
    NonPositiveSigma,
    NonPositiveWeight,
    NotMSymmetric,
    NumericalError,
    OverflowRisk,
    QuadratureNotConverged,
    RowMassExceeded,
    SemigroupInvError,
    ValidationError,
)
from .inversion import (
    BackwardTrajectory,
    ConditioningReport,
    HFunctionReport,
    InverseProblem,
    PicardResult,
    backward_time_grid,
    conditioning_report,
    energetic_lambda_max,
    invert_bessel,
    invert_spectral,
    laplace_diagnostic,
    picard_resolvent_flow,
    resolvent_flow,
    resolvent_flow_quadrature,
    solve_backward_cauchy,
    solve_resolvent_cauchy,
    squared_bessel_h,
    squared_bessel_h_quadrature,
    squared_bessel_pde_check,
)
from .models import (
    DiffusionSpec,
    JumpKernelSpec,
    build_chain,
    build_diffusion,
    build_jump,
    build_ou,
    gaussian_jump_kernel,
    ou_witness_pair,
)
from .regularisation import (
    GammaStudyRow,
    MixtureModel,
    RegularisationConfig,
    gamma_convergence_study,
    gamma_study_to_csv,
    make_phi,
    mixture_invert,
    mixture_multipliers,
    mixture_semigroup,
    regularised_pide_solve,
    regularised_residual,
    regularised_solve,
    tikhonov_solve,
    trajectory_to_csv,
    variational_gradient,
    variational_objective,
)
from .spectral import (
    SpectralDecomposition,
    SpectralFunction,
    SymmetricGenerator,
    WeightedStateSpace,
    apply_function,
    build_space,
    check_m_symmetry,
    eigenvalue_clusters,
    inner,
    norm,
    resolvent_apply,
    semigroup_apply,
    spectral_decompose,
    vector_from_csv,
    vector_to_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
