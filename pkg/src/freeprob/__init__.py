"""freeprob: Brown measures, free multiplicative transforms, and
transitivity diagnostics for matrix algebras, cross-checked against a
seeded random-matrix oracle."""

from .config import SIZE, TOL
from .errors import (
    DimensionMismatchError,
    DiracInputError,
    DomainError,
    EigensolveError,
    FreeprobError,
    InternalInconsistencyError,
    MeasureFormatError,
    PoleError,
    SentinelError,
    WordSpecError,
)
from .measures import (
    ScalarMeasure,
    TransformSample,
    chi_inverse,
    chi_inverse_detailed,
    chi_vector,
    moment,
    psi_transform,
    s_transform,
)
from .rdiagonal import (
    OperatorTag,
    RadialPlanarMeasure,
    brown_rdiagonal,
    catalog_brown,
    pullback_radii,
    support_membership,
)
from .matmodel import (
    FreeGroupModel,
    MatrixModel,
    SpectrumSample,
    build_free_group,
    build_m2_free_m2,
    empirical_radial_cdf,
    exact_identity_residuals,
    ks_distance,
    realize,
    spectrum,
)
from .brownfield import (
    BrownField,
    GridSpec,
    brown_laplacian,
    default_epsilon,
    fk_determinant,
    logdet_field,
    mass_in_disc,
    mass_in_region,
)
from .algstruct import (
    AlgebraSpan,
    SubspaceReport,
    block_projection_check,
    close_algebra,
    commutant,
    find_invariant_subspace,
    is_transitive,
    kfold_transitive,
    normal_commutation_check,
    radical,
)
from .matio import load_matrix, save_matrix

__version__ = "0.1.0"
