"""PME law, M|G|inf busy-period transforms, service recovery and simulation."""

from .busy_period import (
    QueueParams,
    RecoveredService,
    TailCurve,
    busy_tail,
    busy_tail_lt,
    recover_service_from_pme_busy,
)
from .dist_core import (
    Deterministic,
    Exponential,
    Pareto,
    ParetoParams,
    Pme,
    PmeParams,
    Tabulated,
)
from .exceptions import NumericalError
from .laplace import InversionConfig, TransformValue, ilt
from .simulator import SimConfig, SimResult, simulate

__version__ = "0.1.0"

__all__ = [
    "Deterministic",
    "Exponential",
    "InversionConfig",
    "NumericalError",
    "Pareto",
    "ParetoParams",
    "Pme",
    "PmeParams",
    "QueueParams",
    "RecoveredService",
    "SimConfig",
    "SimResult",
    "Tabulated",
    "TailCurve",
    "TransformValue",
    "busy_tail",
    "busy_tail_lt",
    "ilt",
    "recover_service_from_pme_busy",
    "simulate",
]
