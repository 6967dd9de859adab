"""Linear rate-region generators."""

from .core import (
    LinearConstraint,
    RateRegion,
    RateVar,
    enumerate_qstar,
    is_superset_closed,
    superset_closed_families,
)
from .dsc import broadcast_region, power_binning_region
from .helper import (
    HelperAux,
    helper_analytic,
    helper_broadcast_region,
    helper_pmf,
    helper_region,
    helper_region_from_pmf,
    helper_sweep,
)
from .theorem1 import MarkovViolation, theorem1_region

__all__ = [
    "HelperAux",
    "LinearConstraint",
    "MarkovViolation",
    "RateRegion",
    "RateVar",
    "broadcast_region",
    "enumerate_qstar",
    "helper_analytic",
    "helper_broadcast_region",
    "helper_pmf",
    "helper_region",
    "helper_region_from_pmf",
    "helper_sweep",
    "is_superset_closed",
    "power_binning_region",
    "superset_closed_families",
    "theorem1_region",
]
