"""Reliability prediction and enhancement for single-UAV TWR positioning.

The package follows the offline workflow of the positioning service:

1. ``dem`` / ``propagation``: terrain profiles and per-(service point,
   sample point) prior probabilities of LoS / NLoS / blockage.
2. ``twr`` / ``geometry`` / ``chi2``: ranging error model, normalized
   least-squares geometry and the residual chi-square test.
3. ``events`` / ``allocation`` / ``mde``: observation and failure event
   enumeration, FA/MD budget allocation, and minimum-detectable-error
   maps (the reliability prediction output).
4. ``hazard``: hazardous-area segmentation and voting-based cause
   analysis used to guide service-point adjustment.
5. ``montecarlo``: stochastic end-to-end validation of the above.
6. ``scenario`` / ``cli`` / ``service``: configuration, file formats,
   command line and HTTP front ends.
"""

from uavrel.dem import DemGrid, TerrainProfile, elevation_at, load_dem, min_height_margin, profile_between
from uavrel.scenario import Scenario, parse_scenario, sample_grid, scenario_hash, synth_dem
from uavrel.propagation import ChannelParams, PropagationTable, build_table
from uavrel.twr import TwrParams, FaultSpec
from uavrel.geometry import NormalizedGeometry, LsSolution, build_geometry, ls_solve
from uavrel.mde import ReliabilityMap, predict_map

__all__ = [
    "DemGrid",
    "TerrainProfile",
    "elevation_at",
    "load_dem",
    "min_height_margin",
    "profile_between",
    "Scenario",
    "parse_scenario",
    "sample_grid",
    "scenario_hash",
    "synth_dem",
    "ChannelParams",
    "PropagationTable",
    "build_table",
    "TwrParams",
    "FaultSpec",
    "NormalizedGeometry",
    "LsSolution",
    "build_geometry",
    "ls_solve",
    "ReliabilityMap",
    "predict_map",
]
