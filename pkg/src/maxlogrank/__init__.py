"""Maximum weighted logrank tests for two-sample survival comparisons,
with a crossing-hazard weight, competitor tests and a simulation harness.
"""

from .exceptions import (
    BracketError,
    DegenerateDataError,
    DegenerateWeightError,
    DomainError,
    MatrixError,
    MaxLogrankError,
    NumericError,
    UnknownNameError,
)
from .numerics import RngStream, brownian_sup_sf, mvn_rect_prob
from .omnibus import (
    critical_value,
    max_combo_test,
    projection_test,
    renyi_test,
)
from .survival import EventTable, Subject, build_event_table, event_table_from_arrays
from .weights import Constant, Crossing, RhoGamma, WeightSet, builtin_set
from .wlrt import cov_matrix, wlrt_statistic

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "DegenerateDataError",
    "DegenerateWeightError",
    "DomainError",
    "MatrixError",
    "MaxLogrankError",
    "NumericError",
    "UnknownNameError",
    "RngStream",
    "brownian_sup_sf",
    "mvn_rect_prob",
    "critical_value",
    "max_combo_test",
    "projection_test",
    "renyi_test",
    "EventTable",
    "Subject",
    "build_event_table",
    "event_table_from_arrays",
    "Constant",
    "Crossing",
    "RhoGamma",
    "WeightSet",
    "builtin_set",
    "cov_matrix",
    "wlrt_statistic",
]
