"""Low-rank tensor learning under orthogonal mode-3 transforms.

Noisy tensor completion and binary classification with folded-concave
spectral penalties, solved by a proximal majorization-minimization outer
loop with an ADMM inner solver.
"""

from .losses import CompletionLoss, LogisticLoss
from .penalties import Penalty, dc_smooth_grad, dc_smooth_value, penalty_value, svt
from .solver import (
    ADMMConfig,
    DescentViolationError,
    KKTResiduals,
    NumericalDivergenceError,
    PMMConfig,
    SolverError,
    SolveTrace,
    admm_subproblem,
    kkt_residuals,
    objective_value,
    pmm_solve,
)
from .tensor_ops import (
    TSVDFactors,
    apply_transform,
    as_tensor3,
    fold3,
    fro_norm,
    inf_norm,
    inner_prod,
    inverse_transform,
    multi_rank,
    project_box,
    spectral_norm,
    t_identity,
    t_product,
    t_svd,
    t_transpose,
    tensor_nuclear_norm,
    transformed_singular_values,
    unfold3,
)
from .transforms import (
    OrthogonalTransform,
    data_driven_transform,
    dct_transform,
    identity_transform,
    validate_orthogonal,
)

__version__ = "0.1.0"

__all__ = [
    "ADMMConfig",
    "CompletionLoss",
    "DescentViolationError",
    "KKTResiduals",
    "LogisticLoss",
    "NumericalDivergenceError",
    "OrthogonalTransform",
    "PMMConfig",
    "Penalty",
    "SolveTrace",
    "SolverError",
    "TSVDFactors",
    "admm_subproblem",
    "apply_transform",
    "as_tensor3",
    "data_driven_transform",
    "dc_smooth_grad",
    "dc_smooth_value",
    "dct_transform",
    "fold3",
    "fro_norm",
    "identity_transform",
    "inf_norm",
    "inner_prod",
    "inverse_transform",
    "kkt_residuals",
    "multi_rank",
    "objective_value",
    "penalty_value",
    "pmm_solve",
    "project_box",
    "spectral_norm",
    "svt",
    "t_identity",
    "t_product",
    "t_svd",
    "t_transpose",
    "tensor_nuclear_norm",
    "transformed_singular_values",
    "unfold3",
    "validate_orthogonal",
]
