"""Numerical construction and verification of the orthogonal domain-wall
connecting orbit of the 6-D reversible amplitude system."""

__version__ = "0.1.0"

from .params import (  # noqa: F401
    AdmissibilityError,
    Params,
    ScalingConfig,
    derive_params,
    physical_regimes,
    scaling_from_epsilon,
    working_scaling,
)
from .dynamics import (  # noqa: F401
    M_MINUS,
    M_PLUS,
    first_integral,
    jacobian,
    singular_limit,
    symmetry_apply,
    vector_field,
)
from .connect import (  # noqa: F401
    HeteroclinicProfile,
    MatchingUnknowns,
    SolveConfig,
    heteroclinic_solve,
    matching_closed_form,
    transversality,
)
