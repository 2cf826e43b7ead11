"""Chart-scale curvature engine for possibly degenerate Hermitian forms."""

__version__ = "0.1.0"

from .errors import (
    HermitiaError,
    NoAdjoint,
    NotSurjective,
    NotPositive,
    OutOfDomain,
    RankJump,
    SolverResidual,
    NotPositiveAtPoint,
    ZeroVector,
    NotHolomorphic,
    ConfigError,
)
from .forms import (
    HermitianForm,
    Subspace,
    LinearMap,
    PurgeResult,
    kernel,
    purge,
    admits_adjoint,
    adjoint,
    adjoint_freedom_dims,
    orthogonal_complement,
    quotient_form,
    hom_form,
    sum_quotient_form,
    limit_form,
    projection_limit_gram,
    equiv_mod_kernel,
)

__all__ = [
    "HermitiaError",
    "NoAdjoint",
    "NotSurjective",
    "NotPositive",
    "OutOfDomain",
    "RankJump",
    "SolverResidual",
    "NotPositiveAtPoint",
    "ZeroVector",
    "NotHolomorphic",
    "ConfigError",
    "HermitianForm",
    "Subspace",
    "LinearMap",
    "PurgeResult",
    "kernel",
    "purge",
    "admits_adjoint",
    "adjoint",
    "adjoint_freedom_dims",
    "orthogonal_complement",
    "quotient_form",
    "hom_form",
    "sum_quotient_form",
    "limit_form",
    "projection_limit_gram",
    "equiv_mod_kernel",
]
