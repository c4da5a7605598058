"""Analysis of discrete-time two-dimensional quasi-birth-and-death processes."""

__version__ = "0.1.0"

from .asymptotics import AsymptoticsReport, ConfigType, CriticalPoints, FormClass, FormTag, analyze
from .kernels import BACKEND
from .model import (
    LimitedServiceParams,
    QbdModel,
    build_limited_service,
    load_model,
    read_model,
    save_model,
    validate,
    write_model,
)
from .qbd_core import AxisKernels, qbd_stationary, solve_axis1, solve_axis2
from .spectral import chi, extreme_points
from .stability import DriftReport, Verdict, drifts

__all__ = [
    "__version__",
    "BACKEND",
    "QbdModel",
    "LimitedServiceParams",
    "build_limited_service",
    "load_model",
    "save_model",
    "read_model",
    "write_model",
    "validate",
    "chi",
    "extreme_points",
    "AxisKernels",
    "solve_axis1",
    "solve_axis2",
    "qbd_stationary",
    "DriftReport",
    "Verdict",
    "drifts",
    "AsymptoticsReport",
    "ConfigType",
    "CriticalPoints",
    "FormClass",
    "FormTag",
    "analyze",
]
