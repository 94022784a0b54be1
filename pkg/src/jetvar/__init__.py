"""Exact variational calculus on jet bundles of tensor fields."""
from .bundle import COVECTOR, SCALAR, SYMMETRIC2, BundleSpec, FieldSpec
from .cancel import CancelToken, cancellation
from .catalog import MODEL_NAMES, Model, builtin_model, covariant_divergence_oracle
from .errors import (
    Cancelled,
    ComponentMismatch,
    ExpressionClassError,
    ExtractionError,
    InvariantViolation,
    JetError,
    OrderBoundExceeded,
    ParseError,
)
from .expr import Expression, evaluate_numeric, partial_derivative, total_derivative
from .jet import (
    Density,
    EvolutionaryField,
    HorizontalForm,
    SourceEquation,
    horizontal_differential,
    prolong_apply,
)
from .natural import delta_lift, generalized_divergence, is_natural
from .parsing import parse_expression
from .variational import (
    conserved_current,
    euler_lagrange,
    first_variation,
    is_locally_variational,
    is_null_lagrangian,
    is_symmetry,
    lie_derivative_source,
    source_apply,
    tonti_lagrangian,
)

__all__ = [
    "COVECTOR", "SCALAR", "SYMMETRIC2", "BundleSpec", "FieldSpec",
    "CancelToken", "cancellation",
    "MODEL_NAMES", "Model", "builtin_model", "covariant_divergence_oracle",
    "Cancelled", "ComponentMismatch", "ExpressionClassError", "ExtractionError",
    "InvariantViolation", "JetError", "OrderBoundExceeded", "ParseError",
    "Expression", "evaluate_numeric", "partial_derivative", "total_derivative",
    "Density", "EvolutionaryField", "HorizontalForm", "SourceEquation",
    "horizontal_differential", "prolong_apply",
    "delta_lift", "generalized_divergence", "is_natural",
    "parse_expression",
    "conserved_current", "euler_lagrange", "first_variation", "is_locally_variational",
    "is_null_lagrangian", "is_symmetry", "lie_derivative_source", "source_apply",
    "tonti_lagrangian",
]
