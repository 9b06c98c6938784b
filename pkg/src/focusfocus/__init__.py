"""Numerical model of the hyperkähler metric near a focus-focus singular fiber."""

from .config import RunConfig, load_config, parse_config
from .errors import (
    ConfigError,
    ContourError,
    DegenerateLatticeError,
    DomainError,
    FocusFocusError,
    FrameMismatchError,
    ModelViolationError,
    NotHyperkahlerError,
    NumericalFailure,
    PositivityError,
    SingularityError,
    StencilError,
)
from .geometry import (
    FRAME_ACTION_ANGLE,
    FRAME_CT,
    FormAtPoint,
    Frame,
    MetricAtPoint,
    change_frame,
    sylvester_positive,
    triple_to_metric,
)
from .holomorphic import (
    central_charges,
    holomorphic_form,
    verify_compatibility,
    volume_coefficient,
)
from .local_model import (
    action_angle,
    fibration,
    flow,
    glue_map,
    gluing_cauchy_riemann_residual,
    parametrize,
    period_lattice,
    verify_symplectic_identity,
)
from .ooguri_vafa import (
    FRAME_OV,
    gibbons_hawking_metric,
    omega0,
    ov_action_angle,
    ov_connection,
    ov_potential,
    positivity_margin,
)
from .scalar_kernels import (
    BasePoint,
    HarmonicInvariant,
    ModelParams,
    bessel_k0,
    bessel_k0k1,
    bessel_k1,
    invariant_eval,
    regularized_theta_sum,
)
from .semiflat import (
    semiflat_form,
    semiflat_metric_matrix,
    semiflat_positive,
    verify_wedge_identities,
)
from .twistor import (
    GMN_JUMP_EXPONENT,
    contour_bessel_identities,
    corrected_twistor_form,
    cps_solve,
    darboux_sf,
    extract_metric,
    gmn_correction,
    gmn_twistor_form,
)

__all__ = [
    "FRAME_ACTION_ANGLE",
    "FRAME_CT",
    "FRAME_OV",
    "GMN_JUMP_EXPONENT",
    "BasePoint",
    "ConfigError",
    "ContourError",
    "DegenerateLatticeError",
    "DomainError",
    "FocusFocusError",
    "FormAtPoint",
    "Frame",
    "FrameMismatchError",
    "HarmonicInvariant",
    "MetricAtPoint",
    "ModelParams",
    "ModelViolationError",
    "NotHyperkahlerError",
    "NumericalFailure",
    "PositivityError",
    "RunConfig",
    "SingularityError",
    "StencilError",
    "action_angle",
    "bessel_k0",
    "bessel_k0k1",
    "bessel_k1",
    "central_charges",
    "change_frame",
    "contour_bessel_identities",
    "corrected_twistor_form",
    "cps_solve",
    "darboux_sf",
    "extract_metric",
    "fibration",
    "flow",
    "gibbons_hawking_metric",
    "glue_map",
    "gluing_cauchy_riemann_residual",
    "gmn_correction",
    "gmn_twistor_form",
    "holomorphic_form",
    "invariant_eval",
    "load_config",
    "omega0",
    "ov_action_angle",
    "ov_connection",
    "ov_potential",
    "parametrize",
    "parse_config",
    "period_lattice",
    "positivity_margin",
    "regularized_theta_sum",
    "semiflat_form",
    "semiflat_metric_matrix",
    "semiflat_positive",
    "sylvester_positive",
    "triple_to_metric",
    "verify_compatibility",
    "verify_symplectic_identity",
    "verify_wedge_identities",
    "volume_coefficient",
]
