"""Anisotropic geometry of closed curves and surfaces: Wulff shapes, anisotropic
curvatures, integral identities and the parallel foliation."""

from .anisotropy import (
    AnisotropyError,
    ConstantAnisotropy,
    ConvexityError,
    HarmonicAnisotropy,
    QuadraticAnisotropy,
    anisotropy_from_config,
    check_convexity,
    dual_norm,
    f_distance,
    require_convex,
    sphere_jet,
    wulff_point,
)
from .flow import Foliation, breakdown_estimate, flow_surface, q_prime_analytic, q_prime_bound, q_value, run_flow
from .hypersurface import (
    Ellipsoid,
    RadialGraph,
    Torus,
    WulffHomothety,
    geometry_jet,
    make_grid,
    surface_from_config,
    umbilicity_defect,
    unit_sphere,
    wulff_fit,
)
from .integrals import (
    PreconditionError,
    anisotropic_energy,
    enclosed_volume,
    garding_check,
    hk_gap,
    identity_residuals,
    integral_report,
    minkowski_residual,
    surface_area,
)
