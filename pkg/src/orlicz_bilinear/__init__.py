"""Numerical verification of the bilinear embedding for Orlicz-space heat flows."""
from .bellman import (
    BellmanContext,
    bellman_eval,
    bellman_gradient,
    bellman_hessian,
    verify_gradient_bounds,
    verify_hessian_lower,
    verify_upper_bound,
)
from .ellipticity import MatrixField, delta_p, delta_phi, ellipticity_report, lambda_max_norm, lambda_min
from .errors import (
    ConfigError,
    DomainLimitError,
    InapplicableError,
    InvalidYoungPairError,
    NonEllipticError,
    OrliczError,
    ParameterError,
    PoleError,
    QuadratureError,
    UndefinedHessianError,
)
from .mollify import mollify, verify_mollified
from .reports import MarginReport
from .semigroup import Grid, GridFunction, assemble, evolve, run_embedding
from .young import (
    ConjugatePair,
    YoungFunction,
    char_quantities,
    conjugate,
    dual_power_sum,
    luxemburg_norm,
    make_family,
    make_pair,
    power_law,
    power_sum,
    zygmund_log,
)

__version__ = "0.1.0"
