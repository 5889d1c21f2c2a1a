"""Taylor expansion of spectral-action trace functionals tr f(D + A) on
finite-dimensional truncations, computed through divided differences and
cross-verified against bracket, contour, and finite-difference routes."""

from .bounds import (
    BoundReport,
    getzler_szenes_check,
    holder_estimate_check,
    simplex_bound_check,
)
from .divdiff import (
    MultisetDivDiff,
    NodeList,
    dd_chain_generic,
    dd_chain_square,
    dd_contour,
    dd_derivative_sum,
    dd_hermite_mc,
    dd_recursive,
    step_bitstrings,
)
from .errors import BudgetExceededError, ConfigError, DerivativeOrderError
from .functions import (
    DiscreteMeasure,
    SmoothFunction,
    check_summability,
    exp_decay,
    make_gaussian_mixture,
    polynomial_function,
    square_function,
)
from .operator_model import (
    BracketIdentityReport,
    BracketValue,
    Spectrum,
    anticommutator_with_d,
    band_hermitian,
    bracket_dd,
    bracket_identity_check,
    bracket_mc,
    commutator_with_d,
    commutator_with_d2,
    dirac_circle_spectrum,
    duhamel_residual,
    eigen_decompose,
    heat_kernel,
    heat_trace,
    linear_spectrum,
    one_form,
    operator_norm,
    random_hermitian,
    random_spectrum,
    require_hermitian,
)
from .spectral_action import (
    CircleContour,
    EpsilonMultiIndex,
    TaylorReport,
    action_exact,
    epsilon_enumerate,
    epsilon_parent_move_count,
    expand,
    gateaux_fd,
    gateaux_fd_mixed,
    tadpole_check,
    taylor_term,
    taylor_term_bracket_form,
    taylor_term_contour,
    taylor_term_theorem_form,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "BracketIdentityReport",
    "BracketValue",
    "BudgetExceededError",
    "CircleContour",
    "ConfigError",
    "DerivativeOrderError",
    "DiscreteMeasure",
    "EpsilonMultiIndex",
    "MultisetDivDiff",
    "NodeList",
    "SmoothFunction",
    "Spectrum",
    "TaylorReport",
    "action_exact",
    "anticommutator_with_d",
    "band_hermitian",
    "bracket_dd",
    "bracket_identity_check",
    "bracket_mc",
    "check_summability",
    "commutator_with_d",
    "commutator_with_d2",
    "dd_chain_generic",
    "dd_chain_square",
    "dd_contour",
    "dd_derivative_sum",
    "dd_hermite_mc",
    "dd_recursive",
    "dirac_circle_spectrum",
    "duhamel_residual",
    "eigen_decompose",
    "epsilon_enumerate",
    "epsilon_parent_move_count",
    "exp_decay",
    "expand",
    "gateaux_fd",
    "gateaux_fd_mixed",
    "getzler_szenes_check",
    "heat_kernel",
    "heat_trace",
    "holder_estimate_check",
    "linear_spectrum",
    "make_gaussian_mixture",
    "one_form",
    "operator_norm",
    "polynomial_function",
    "random_hermitian",
    "random_spectrum",
    "require_hermitian",
    "simplex_bound_check",
    "square_function",
    "step_bitstrings",
    "tadpole_check",
    "taylor_term",
    "taylor_term_bracket_form",
    "taylor_term_contour",
    "taylor_term_theorem_form",
]
