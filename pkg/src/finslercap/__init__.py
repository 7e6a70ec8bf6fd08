"""Finsler metrics on coordinate charts and conformal capacities of condensers."""

from .capacity import (
    Ball,
    Box,
    CapacityOptions,
    CapacityResult,
    Capsule,
    CondenserSpec,
    ConformalReport,
    DiscreteEnergy,
    GridError,
    GridFunction,
    MuResult,
    NodeKind,
    conformal_invariance_check,
    energy,
    energy_gradient,
    make_grid,
    minimize_capacity,
    mu_upper_bound,
    support_sensitivity,
)
from .expr import ExprSyntaxError, ScalarField, constant, parse
from .finsler import (
    ConformalModel,
    FinslerModel,
    ModelValidityError,
    PointError,
    RandersModel,
    RiemannianModel,
    angle_cos,
    cartan_tensor,
    conformal_scale,
    eval_F,
    formal_christoffel,
    fundamental_tensor,
    horizontal_derivative_F,
    inverse_fundamental,
    nonlinear_connection,
    validate_model,
)
from .jet import DomainError
from .sphere_bundle import (
    OrientationError,
    angular_metric,
    d_omega_frame,
    d_omega_natural,
    fiber_quadrature,
    hilbert_form,
    volume_density,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
