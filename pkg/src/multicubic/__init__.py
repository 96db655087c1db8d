"""Exact verification and fixed-point stabilization of multi-cubic mappings."""

__version__ = "0.1.0"

from .combinatorics import (  # noqa: E402
    MkTerm,
    NodeChoice,
    SignPattern,
    enumerate_Mk,
    enumerate_sign_patterns,
    identity_total_weight,
    identity_w1,
    identity_w2,
    rhs_weight,
)
from .equation import (  # noqa: E402
    EquationSample,
    check_power_condition,
    classify,
    default_grid,
    diff_operator,
    junkim_residual,
    lhs_sum,
    remark21_demo,
    rhs_sum,
)
from .errors import (  # noqa: E402
    DivergenceError,
    DomainError,
    ModelParseError,
    MulticubicError,
    SingularityError,
    UnsupportedExponentError,
)
from .mappings import (  # noqa: E402
    NormCubeMapping,
    PerturbedMapping,
    PolynomialModel,
    add_power_noise,
    load_model,
    make_multicubic_monomial,
    make_norm_cube,
    save_model,
)
from .stability import (  # noqa: E402
    StabilizationConfig,
    apply_T_pow,
    choose_beta,
    contraction_residual,
    dpow_decay_check,
    fit_delta,
    hyperstability_check,
    iterate_operator,
    phi_closed_form,
    phi_series,
    power_control,
    product_control,
    stabilize,
    uniqueness_check,
)
