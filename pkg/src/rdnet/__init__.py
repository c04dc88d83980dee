"""rdnet: reconstruction of circular planar resistor networks from partial
boundary resistance-distance measurements and the Kirchhoff index."""

from .netcore import (
    INFINITE_RESISTANCE,
    MeasurementSet,
    Network,
    RdnetError,
    SingularNetwork,
    boundary_pairs,
    is_connected,
    kirchhoff_index,
    laplacian,
    laplacian_pinv,
    resistance_distance,
    resistance_matrix,
)
from .pipeline import PipelineConfig, PipelineResult, reconstruct

__version__ = "0.1.0"

__all__ = [
    "INFINITE_RESISTANCE",
    "MeasurementSet",
    "Network",
    "PipelineConfig",
    "PipelineResult",
    "RdnetError",
    "SingularNetwork",
    "boundary_pairs",
    "is_connected",
    "kirchhoff_index",
    "laplacian",
    "laplacian_pinv",
    "reconstruct",
    "resistance_distance",
    "resistance_matrix",
    "__version__",
]
