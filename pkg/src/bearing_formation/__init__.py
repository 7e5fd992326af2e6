"""Bearing-based formation tracking for Euler-Lagrange followers with moving leaders."""

from .bearings import BearingSet, bearing_laplacian, certify_localizability, target_followers
from .controller import ControllerGains
from .el_agents import PlanarTwoDOF, planar_2dof_model
from .graph import GraphTopology
from .leader import LeaderModel
from .observer import synthesize_observer
from .safety import certificate, inf_target_distance, runtime_distance_monitor
from .scenario import Scenario, load_bundled
from .simulation import ClosedLoopSystem, error_views, run, step

__all__ = [
    "BearingSet", "ClosedLoopSystem", "ControllerGains", "GraphTopology", "LeaderModel",
    "PlanarTwoDOF", "Scenario", "bearing_laplacian", "certificate", "certify_localizability",
    "error_views", "inf_target_distance", "load_bundled", "planar_2dof_model", "run",
    "runtime_distance_monitor", "step", "synthesize_observer", "target_followers",
]
