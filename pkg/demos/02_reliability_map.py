"""Full reliability prediction over an uncertainty area.

Runs the end-to-end chain (propagation table, event enumeration, FA/MD
allocation, worst-fault MDEs) for the default mission on a synthetic
valley, writes the heatmap CSV + summary, and sweeps the service-point
ring rotation to show how much geometry matters.

Run:  python3 demos/02_reliability_map.py
"""

import math
from pathlib import Path

import numpy as np

from uavrel.mde import predict_map
from uavrel.propagation import ChannelParams
from uavrel.results import dem_hash, write_prediction
from uavrel.scenario import Scenario, synth_dem

out = Path("demo-output/reliability")
grid = synth_dem(
    "valley",
    cell_size=10.0,
    half_extent=700.0,
    floor_half_width=150.0,
    ridge_height=140.0,
    ridge_sigma=50.0,
    ridge_half_length=200.0,
)
scenario = Scenario(channel=ChannelParams(snr_min=10.0))
print(f"mission: {scenario.K} SPs on a {scenario.d_min:.0f} m ring, "
      f"uncertainty disc r={scenario.r_un:.0f} m, {len(scenario.sample_points())} sample points")

rmap = predict_map(scenario, grid)
summary = write_prediction(rmap, scenario, dem_hash(grid), out)
print(f"eta* = {rmap.eta_star:.2f} m  (requirement {scenario.requirements.eta_req:.0f} m, "
      f"meets: {summary['meets_requirement']})")
print(f"heatmap written to {out / 'heatmap.csv'}")

finite = np.isfinite(rmap.eta)
print(f"per-point eta: median {np.median(rmap.eta[finite]):.2f} m, "
      f"p90 {np.quantile(rmap.eta[finite], 0.9):.2f} m, max {rmap.eta[finite].max():.2f} m")

print("\nrotating the whole SP ring (same terrain):")
for rot_deg in range(0, 45, 5):
    rotated = predict_map(scenario.rotated(math.radians(rot_deg)), grid)
    bar = "#" * int(rotated.eta_star)
    print(f"  rot {rot_deg:2d} deg: eta* = {rotated.eta_star:5.1f} m  {bar}")
print("geometry alone moves the worst-case detectable error by tens of percent.")
