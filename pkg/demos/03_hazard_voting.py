"""Hazardous-area segmentation and voting-based cause analysis.

A wall occludes one service point from the whole uncertainty area; the
prediction degrades, the degraded points cluster into hazard areas, and
the vote points the operator at the occluded SP.

Run:  python3 demos/03_hazard_voting.py
"""

from uavrel.hazard import analyze, guidance_text, voting_table_csv
from uavrel.mde import predict_map
from uavrel.propagation import ChannelParams, build_table
from uavrel.scenario import Requirements, Scenario, synth_dem

scenario = Scenario(
    r_un=30.0,
    sample_spacing=15.0,
    channel=ChannelParams(snr_min=10.0),
    requirements=Requirements(eta_req=4.0, p_fa=1e-4, p_md=1e-6, eta_t=3.0),
)
grid = synth_dem(
    "wall",
    cell_size=10.0,
    half_extent=700.0,
    x0=300.0,
    height=200.0,
    thickness=30.0,
    y_half_length=200.0,
)
print("scenario: 8 SPs on a 400 m ring; a 200 m wall stands between SP1 and the whole disc")

rmap = predict_map(scenario, grid)
print(f"eta* = {rmap.eta_star:.2f} m against a hazard threshold of "
      f"{scenario.requirements.eta_t:.0f} m")

table = build_table(grid, scenario)
areas = analyze(rmap, table, eta_t=scenario.requirements.eta_t, spacing=scenario.sample_spacing)
print(f"hazardous areas: {len(areas)}")

print("\nvoting table (rows: visibility / conditional-failure votes per axis):")
print(voting_table_csv(areas, scenario.K))
print(guidance_text(areas))
