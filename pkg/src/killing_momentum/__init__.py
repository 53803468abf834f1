"""Killing-frame momentum operators on S^3 and S^1, verified numerically."""

from .circle import Arc, arc_uncertainty_check, circle_spectrum, fourier_mode, sine_mode
from .errors import (
    ConfigError,
    DegenerateChartError,
    DomainError,
    InconsistencyError,
    InjectivityError,
    KillingMomentumError,
    LadderTruncation,
    NonConstantStructureError,
)
from .fields import (
    Frame,
    ScalarField,
    VectorField,
    divergence,
    killing_frame_s1,
    killing_frame_s3,
    killing_residual,
    lie_bracket,
    pushforward_match,
    structure_constants,
)
from .geometry import ChartPoint, Circle, EmbeddedPoint, EuclideanPlane, Sphere3, make_manifold, metric_at
from .jets import Jet
from .operators import (
    LinearOperator,
    PhysicalConstants,
    commutator,
    dewitt_momentum,
    generalized_momentum,
    hamiltonian,
    ladder,
    laplace_beltrami,
    laplacian,
    momentum,
)
from .position import NormalChart, canonical_commutator_check, duality_matrix, exp_map, geodesic_distance, log_map
from .quadrature import QuadratureGrid, build_grid_s3, gram_matrix, inner_product, integrate, norm
from .spectra import (
    EigenState,
    build_eigenbasis,
    energy,
    momentum_eigenvalue,
    normalization_constant,
    propagate,
    psi_n0,
    spectrum_table,
)
from .verification import RunConfig, VerificationReport, run_verification

__version__ = "0.1.0"
