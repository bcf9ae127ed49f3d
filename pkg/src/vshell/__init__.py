"""vshell: numerical laboratory for thin viscoelastic shells.

Solves the scaled three-dimensional Kelvin-Voigt shell problem in
curvilinear coordinates and its two-dimensional generalized-membrane limit
with exponential long-term memory, and measures the thin-limit convergence
between them at desk scale.
"""

from .geometry import (MidsurfaceChart, SurfaceGeometry, VolumeGeometry,
                       chart_from_config, surface_frame, volume_metrics)
from .material import MaterialParams, MembraneTensors2D, membrane_tensors
from .memory import MemoryAccumulator, TimeGrid, conv_step
from .harness import Scenario, builtin_scenarios, run_convergence

__all__ = [
    "MidsurfaceChart", "SurfaceGeometry", "VolumeGeometry",
    "chart_from_config", "surface_frame", "volume_metrics",
    "MaterialParams", "MembraneTensors2D", "membrane_tensors",
    "MemoryAccumulator", "TimeGrid", "conv_step",
    "Scenario", "builtin_scenarios", "run_convergence",
]

__version__ = "0.1.0"
