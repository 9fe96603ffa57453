"""Flexibility of Kokotsakis meshes.

The main entry points:

* `chi` and `is_infinitesimally_flexible` for first-order flexibility;
* `build_trace_configuration` and `flexibility_via_incidence` for the
  planar Ceva-Menelaus picture of the same criterion;
* `integrate_flow` and `chi_higher_derivatives` for the flexion flow;
* `flex_certificate` for the angle-space test of quadrangles.
"""
from .angles import (
    AngleDocument,
    ExactAngles,
    FlexCertificate,
    family_angles,
    find_realization,
    flex_certificate,
    load_angles,
    random_exact_family,
    realize_mesh,
    save_angles,
)
from .errors import KokotsakisError
from .flow import chi_higher_derivatives, chi_prime, integrate_flow, xi_field
from .incidence import (
    build_trace_configuration,
    ceva_menelaus_product,
    flexibility_via_incidence,
    geometric_condition_I,
    geometric_condition_II,
)
from .infinitesimal import chi, is_infinitesimally_flexible
from .mesh import AngleSet, KokotsakisMesh, extract_angles, load_mesh, save_mesh

__all__ = [
    "AngleDocument",
    "AngleSet",
    "ExactAngles",
    "FlexCertificate",
    "KokotsakisError",
    "KokotsakisMesh",
    "build_trace_configuration",
    "ceva_menelaus_product",
    "chi",
    "chi_higher_derivatives",
    "chi_prime",
    "extract_angles",
    "family_angles",
    "find_realization",
    "flex_certificate",
    "flexibility_via_incidence",
    "geometric_condition_I",
    "geometric_condition_II",
    "integrate_flow",
    "is_infinitesimally_flexible",
    "load_angles",
    "load_mesh",
    "random_exact_family",
    "realize_mesh",
    "save_angles",
    "save_mesh",
    "xi_field",
]
