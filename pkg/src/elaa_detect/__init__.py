"""Fast iterative uplink detection for near-field ELAA-MIMO channels."""

__version__ = "0.1.0"

from .channel import (ChannelRealization, GeometryConfig, PathlossModel, build_geometry,
                      generate_channel)
from .solvers import ALL_METHODS, Method, SolverConfig, Status, cost_per_iteration, run
from .system import GramSystem, detection_system, gram_system, split, static_component

__all__ = [
    "ALL_METHODS", "ChannelRealization", "GeometryConfig", "GramSystem", "Method",
    "PathlossModel", "SolverConfig", "Status", "build_geometry", "cost_per_iteration",
    "detection_system", "generate_channel", "gram_system", "run", "split", "static_component",
]
