"""DEM loading, interpolation, profiles, and height margins."""

import io

import numpy as np
import pytest

from uavrel import dem
from uavrel.scenario import synth_dem

FLAT_2X2 = """ncols 2
nrows 2
xllcorner 0.0
yllcorner 0.0
cellsize 10.0
NODATA_value -9999
0 0
0 0
"""


def _plane_grid(slope_x=0.01, slope_y=0.02, cell=10.0, n=101):
    xs = cell * (np.arange(n) + 0.5)
    ys = cell * (np.arange(n) + 0.5)
    xx, yy = np.meshgrid(xs, ys)
    z = slope_x * xx + slope_y * yy
    return dem.DemGrid(
        origin_x=0.0, origin_y=0.0, cell_size=cell, n_rows=n, n_cols=n, elevation=z
    )


def test_load_trivial_flat_grid():
    grid = dem.load_dem(FLAT_2X2)
    assert grid.n_rows == 2 and grid.n_cols == 2
    assert np.all(grid.elevation == 0.0)
    assert grid.cell_size == 10.0


def test_load_rejects_short_row():
    bad = FLAT_2X2.replace("0 0\n0 0\n", "0 0\n0\n")
    with pytest.raises(dem.DemError):
        dem.load_dem(bad)


def test_load_rejects_missing_header():
    with pytest.raises(dem.DemError):
        dem.load_dem("ncols 2\nnrows 2\n0 0 0 0")


def test_write_load_round_trip_bit_exact():
    grid = synth_dem("gaussian_hills", cell_size=25.0, half_extent=300.0, seed=42)
    buf = io.StringIO()
    dem.write_dem(grid, buf)
    reloaded = dem.load_dem(buf.getvalue())
    assert reloaded.origin_x == grid.origin_x
    assert reloaded.origin_y == grid.origin_y
    assert reloaded.cell_size == grid.cell_size
    assert np.array_equal(reloaded.elevation, grid.elevation)


def test_nodata_inside_mission_extent_rejected():
    text = FLAT_2X2.replace("0 0\n0 0\n", "0 0\n0 -9999\n")
    with pytest.raises(dem.DemError):
        dem.load_dem(text, mission_bbox=(5.0, 15.0, 5.0, 15.0))
    # Loading without a mission box just records the nodata cell.
    grid = dem.load_dem(text)
    assert grid.nodata_mask().sum() == 1


def test_elevation_at_cell_center_identity():
    grid = dem.load_dem(FLAT_2X2.replace("0 0\n0 0\n", "1 2\n3 4\n"))
    # File rows are north-first: northern row is (1, 2).
    assert dem.elevation_at(grid, 5.0, 15.0) == pytest.approx(1.0)
    assert dem.elevation_at(grid, 15.0, 15.0) == pytest.approx(2.0)
    assert dem.elevation_at(grid, 5.0, 5.0) == pytest.approx(3.0)


def test_elevation_midpoint_linearity():
    text = FLAT_2X2.replace("0 0\n0 0\n", "0 10\n0 10\n")
    grid = dem.load_dem(text)
    assert dem.elevation_at(grid, 10.0, 10.0) == pytest.approx(5.0)


def test_bilinear_reproduces_planes():
    grid = _plane_grid()
    rng = np.random.default_rng(3)
    xs = rng.uniform(10.0, 1000.0, 500)
    ys = rng.uniform(10.0, 1000.0, 500)
    expected = 0.01 * xs + 0.02 * ys
    got = dem.elevation_at(grid, xs, ys)
    assert np.max(np.abs(got - expected)) < 1e-9


def test_elevation_out_of_hull():
    grid = dem.load_dem(FLAT_2X2)
    with pytest.raises(dem.OutOfGridError):
        dem.elevation_at(grid, 30.0, 5.0)


def test_profile_flat_offsets():
    grid = synth_dem("flat", cell_size=10.0, half_extent=600.0)
    prof = dem.profile_between(grid, (400.0, 0.0, 100.0), (0.0, 0.0, 1.5), step=5.0)
    assert prof.offsets[0] == 20.0
    assert prof.offsets[-1] == 400.0
    assert np.all(np.diff(prof.offsets) == 5.0)
    assert np.all(prof.heights == 0.0)


def test_profile_exclusion_filter():
    grid = synth_dem("flat", cell_size=10.0, half_extent=600.0)
    full = dem.profile_between(grid, (400.0, 0.0, 100.0), (0.0, 0.0, 1.5), 5.0, exclusion_radius=0.0)
    cut = dem.profile_between(grid, (400.0, 0.0, 100.0), (0.0, 0.0, 1.5), 5.0, exclusion_radius=20.0)
    kept = full.offsets[full.offsets >= 20.0]
    assert np.array_equal(cut.offsets, kept)


def test_profile_on_plane_matches_plane():
    grid = _plane_grid()
    prof = dem.profile_between(grid, (900.0, 800.0, 120.0), (100.0, 200.0, 2.0), 5.0)
    t = prof.offsets / np.hypot(800.0, 600.0)
    xs = 100.0 + t * 800.0
    ys = 200.0 + t * 600.0
    assert np.max(np.abs(prof.heights - (0.01 * xs + 0.02 * ys))) < 1e-9


def test_min_margin_flat_closed_form():
    grid = synth_dem("flat", cell_size=10.0, half_extent=600.0)
    prof = dem.profile_between(grid, (400.0, 0.0, 100.0), (0.0, 0.0, 1.5), 5.0)
    margin = dem.min_height_margin(prof)
    assert margin == pytest.approx(1.5 + 98.5 * (20.0 / 400.0), abs=1e-9)  # 6.425


def test_min_margin_zero_when_obstacle_touches_line():
    grid = synth_dem("flat", cell_size=10.0, half_extent=600.0)
    prof = dem.profile_between(grid, (400.0, 0.0, 100.0), (0.0, 0.0, 1.5), 5.0)
    # Raise the terrain sample at offset 200 exactly to the line height.
    line_at_200 = 1.5 + 98.5 * 0.5
    heights = prof.heights.copy()
    heights[prof.offsets == 200.0] = line_at_200
    touched = dem.TerrainProfile(prof.offsets, heights, prof.endpoint_a, prof.endpoint_b)
    assert dem.min_height_margin(touched) == pytest.approx(0.0, abs=1e-12)


def test_min_margin_monotone_in_sp_altitude():
    grid = synth_dem("gaussian_hills", cell_size=10.0, half_extent=600.0, seed=5, height=60.0)
    margins = []
    for h in (60.0, 90.0, 120.0, 200.0):
        prof = dem.profile_between(grid, (400.0, 100.0, h), (-50.0, -80.0, 1.5), 5.0)
        margins.append(dem.min_height_margin(prof))
    assert all(a <= b + 1e-12 for a, b in zip(margins, margins[1:]))


def test_margin_stable_under_step_refinement():
    # Halving the step moves the margin by at most max_slope * step.
    grid = synth_dem("gaussian_hills", cell_size=10.0, half_extent=600.0, seed=9, height=80.0)
    gy, gx = np.gradient(grid.elevation, grid.cell_size)
    max_slope = float(np.max(np.hypot(gx, gy)))
    sp, user = (420.0, -30.0, 90.0), (-60.0, 40.0, 1.5)
    m_coarse = dem.min_height_margin(dem.profile_between(grid, sp, user, 5.0))
    m_fine = dem.min_height_margin(dem.profile_between(grid, sp, user, 2.5))
    assert abs(m_coarse - m_fine) <= max_slope * 5.0 + 1e-9


def test_empty_profile_is_error():
    grid = synth_dem("flat", cell_size=10.0, half_extent=600.0)
    prof = dem.profile_between(grid, (10.0, 0.0, 100.0), (0.0, 0.0, 1.5), 5.0)
    assert len(prof) == 0
    with pytest.raises(dem.DemError):
        dem.min_height_margin(prof)


def test_profile_rejects_segment_leaving_hull():
    grid = dem.load_dem(FLAT_2X2)
    with pytest.raises(dem.OutOfGridError):
        dem.profile_between(grid, (200.0, 5.0, 50.0), (5.0, 5.0, 1.5), 5.0, exclusion_radius=0.0)
