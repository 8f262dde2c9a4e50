"""Relaxation-regularized incompressible flow solver on a periodic box, with filter and similarity tools."""

from .errors import BlowUpError, InvalidInputError, UndefinedRatioError
from .filters import FilterParams, apply_filter, apply_hn, deconvolve, h_hat
from .spectral import GridSpec, SpectralField, forward_transform, inverse_transform, leray_project
from .solver import FlowState, ForcingSpec, SolverConfig, make_initial_condition, run, step

__all__ = [
    "BlowUpError",
    "FilterParams",
    "FlowState",
    "ForcingSpec",
    "GridSpec",
    "InvalidInputError",
    "SolverConfig",
    "SpectralField",
    "UndefinedRatioError",
    "apply_filter",
    "apply_hn",
    "deconvolve",
    "forward_transform",
    "h_hat",
    "inverse_transform",
    "leray_project",
    "make_initial_condition",
    "run",
    "step",
]

__version__ = "0.1.0"
