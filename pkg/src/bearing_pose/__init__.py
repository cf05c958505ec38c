"""Bearing-based distributed pose estimation for leader-follower networks."""
from .geom3 import (angle_axis, exp_so3, orthogonal_projector, pa, project_to_rotation, psi,
                    rotation_distance, skew, sym_eig3, vex)
from .network import Topology, spectral_report, validate_topology
from .sim import ScenarioConfig, TimeSeries, basin_sweep, export, load_scenario, reference_scenario, run

__all__ = [
    "angle_axis", "exp_so3", "orthogonal_projector", "pa", "project_to_rotation", "psi",
    "rotation_distance", "skew", "sym_eig3", "vex",
    "Topology", "spectral_report", "validate_topology",
    "ScenarioConfig", "TimeSeries", "basin_sweep", "export", "load_scenario", "reference_scenario", "run",
]
__version__ = "0.1.0"
