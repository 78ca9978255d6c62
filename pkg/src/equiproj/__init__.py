"""Projection-based equivariance regularisation toolkit.

Exact group-average projection of linear operators onto equivariant
subspaces (spatial and Fourier domain), equivariance-defect metrics with
their theoretical bounds, steerable-kernel projection for quarter-turn
rotations, and a small training harness for learned rotation invariance
on 2-D toy data.
"""

from .backend import backend_name, compiled_available, set_backend
from .defect import (
    ActivationSpec,
    DefectReport,
    LayerChain,
    c4_conv_defect,
    c4_correlate,
    c4_feature_action,
    composition_bound_check,
    defect_at,
    empirical_defect,
    network_bound_constant,
    rotate2d,
    worst_case_defect,
)
from .errors import (
    BoundViolationError,
    CapacityError,
    ConvergenceError,
    ModelEvaluationError,
    RankDeficiencyError,
    TrainingDivergedError,
)
from .groups import (
    FiniteGroup,
    IrrepCatalogue,
    Representation,
    conjugate_representation,
    cyclic_irreps,
    direct_sum_representation,
    make_cyclic,
    make_dihedral,
    regular_representation,
    same_group,
    tensor_representation,
    trivial_representation,
)
from .linalg import (
    ENTRY_INFINITY,
    FROBENIUS,
    SPECTRAL,
    LeastSquaresResult,
    NormKind,
    conj_transpose,
    hs_inner,
    matmul,
    mixed,
    norm,
    norm_gradient,
    parse_norm_kind,
    solve_least_squares,
    spectral_norm_with_vectors,
)
from .projection import (
    LinearLayerSpec,
    SteerableKernel,
    commutant_oracle,
    orbit_decompose,
    project_c4_kernel,
    project_c4_kernel_indexwise,
    project_finite,
    rot90_kernel,
)
from .spectral import (
    FourierBlocks,
    GroupFunction,
    OperatorBlocks,
    fourier_transform,
    harmonic_mask,
    harmonic_mask_matrix,
    inverse_fourier_transform,
    operator_fourier,
    operator_inverse_fourier,
    peter_weyl_matrix,
    project_equivariant_circulant,
    project_equivariant_spectral,
    project_invariant,
)

__version__ = "0.1.0"
