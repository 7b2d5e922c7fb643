"""Contact toolkit: functions on S^{2m-1}, Reeb averaging, normal forms and minimal action."""

from shadowlab.contact.characteristics import (
    CapacityEstimate,
    CharacteristicSystem,
    ContactSphere,
    ConvexBody,
    Ellipsoid,
    RadialCurveBody,
    RadialHypersurface,
    ReebOrbit,
    ScaledBall,
    Trajectory,
    a_min_estimate,
    characteristic_flow,
    closed_characteristic_search,
)
from shadowlab.contact.comparison import (
    LipschitzProbe,
    ProjectionMargin,
    hausdorff_distance,
    hausdorff_lipschitz_probe,
    lipschitz_constant,
    projected_body,
    projection_monotonicity,
)
from shadowlab.contact.normal_form import (
    ContactMultiplier,
    StrictMaxReport,
    TrivialityResult,
    amin_upper_bound,
    constant_volume_normalizer,
    formal_triviality_order,
    normal_form_reduce,
    strict_max_check,
    volume_normalized,
)
from shadowlab.contact.sphere_functions import (
    SphereFunction,
    cohomological_solve,
    contact_volume,
    fit_sphere_function,
    reeb_average,
)

__all__ = [
    "CapacityEstimate",
    "CharacteristicSystem",
    "ContactMultiplier",
    "ContactSphere",
    "ConvexBody",
    "Ellipsoid",
    "LipschitzProbe",
    "ProjectionMargin",
    "RadialCurveBody",
    "RadialHypersurface",
    "ReebOrbit",
    "ScaledBall",
    "SphereFunction",
    "StrictMaxReport",
    "Trajectory",
    "TrivialityResult",
    "a_min_estimate",
    "amin_upper_bound",
    "characteristic_flow",
    "closed_characteristic_search",
    "cohomological_solve",
    "constant_volume_normalizer",
    "contact_volume",
    "fit_sphere_function",
    "formal_triviality_order",
    "hausdorff_distance",
    "hausdorff_lipschitz_probe",
    "lipschitz_constant",
    "normal_form_reduce",
    "projected_body",
    "projection_monotonicity",
    "reeb_average",
    "strict_max_check",
    "volume_normalized",
]
