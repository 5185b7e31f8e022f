"""Raster elevation model and terrain-profile reconstruction.

The DEM is the geometric ground truth for line-of-sight analysis: a
regular grid of elevations (ESRI ASCII layout on disk) queried through
bilinear interpolation, plus the profile/height-margin operations used
by the propagation model.

Coordinates are local planar meters throughout; no projections.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DemError(ValueError):
    """Malformed DEM source or invalid DEM query."""


class OutOfGridError(DemError):
    """Query or segment outside the interpolable grid hull."""


@dataclass(frozen=True)
class DemGrid:
    """Immutable raster elevation model.

    ``elevation`` is indexed [row, col] with row 0 at the southern edge
    (y increasing with row index); the ESRI ASCII reader/writer flips
    between this layout and the file's north-first row order.  Cell
    values are treated as samples at cell centers, so the interpolable
    hull is inset half a cell from the outer grid edge.
    """

    origin_x: float  # x of the lower-left grid corner (meters)
    origin_y: float  # y of the lower-left grid corner (meters)
    cell_size: float
    n_rows: int
    n_cols: int
    elevation: np.ndarray
    nodata_value: float = -9999.0

    def __post_init__(self):
        if self.cell_size <= 0:
            raise DemError(f"cell_size must be > 0, got {self.cell_size}")
        if self.elevation.shape != (self.n_rows, self.n_cols):
            raise DemError(
                f"elevation shape {self.elevation.shape} does not match "
                f"(n_rows, n_cols)=({self.n_rows}, {self.n_cols})"
            )

    @property
    def hull(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the cell-center extent."""
        half = 0.5 * self.cell_size
        return (
            self.origin_x + half,
            self.origin_x + self.n_cols * self.cell_size - half,
            self.origin_y + half,
            self.origin_y + self.n_rows * self.cell_size - half,
        )

    def nodata_mask(self) -> np.ndarray:
        return self.elevation == self.nodata_value

    def validate_extent(self, x_min: float, x_max: float, y_min: float, y_max: float):
        """Raise if the box leaves the hull or covers any nodata cell."""
        hx0, hx1, hy0, hy1 = self.hull
        if x_min < hx0 or x_max > hx1 or y_min < hy0 or y_max > hy1:
            raise OutOfGridError(
                f"requested extent [{x_min}, {x_max}] x [{y_min}, {y_max}] "
                f"exceeds grid hull [{hx0}, {hx1}] x [{hy0}, {hy1}]"
            )
        mask = self.nodata_mask()
        if not mask.any():
            return
        cols = np.arange(self.n_cols)
        rows = np.arange(self.n_rows)
        cx = self.origin_x + (cols + 0.5) * self.cell_size
        cy = self.origin_y + (rows + 0.5) * self.cell_size
        in_box = (
            (cy >= y_min - self.cell_size)[:, None]
            & (cy <= y_max + self.cell_size)[:, None]
            & (cx >= x_min - self.cell_size)[None, :]
            & (cx <= x_max + self.cell_size)[None, :]
        )
        if (mask & in_box).any():
            raise DemError("nodata cells inside the requested mission extent")


@dataclass(frozen=True)
class TerrainProfile:
    """Ground heights sampled along one SP-to-user segment.

    Offsets are horizontal distances measured from the user end and are
    strictly increasing; samples closer to the user than the exclusion
    radius have already been dropped.  The 3-D endpoints themselves are
    not samples.
    """

    offsets: np.ndarray
    heights: np.ndarray
    endpoint_a: tuple[float, float, float]  # service point (SP)
    endpoint_b: tuple[float, float, float]  # user candidate

    def __len__(self) -> int:
        return len(self.offsets)


_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def load_dem(source, mission_bbox=None) -> DemGrid:
    """Load an ESRI ASCII grid from a path, file object, or text.

    Header must carry ncols/nrows/xllcorner/yllcorner/cellsize (and an
    optional NODATA_value); values follow row-major with the northern
    row first.  ``mission_bbox=(x_min, x_max, y_min, y_max)``, when
    given, is validated to be nodata-free and inside the hull.
    """
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        text = Path(source).read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()

    tokens = text.split()
    header: dict[str, float] = {}
    pos = 0
    while pos + 1 < len(tokens):
        key = tokens[pos].lower()
        if key in _HEADER_KEYS or key == "nodata_value":
            try:
                header[key] = float(tokens[pos + 1])
            except ValueError as exc:
                raise DemError(f"bad header value for {key!r}: {tokens[pos + 1]!r}") from exc
            pos += 2
        else:
            break
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise DemError(f"missing DEM header keys: {missing}")

    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    if n_cols <= 0 or n_rows <= 0 or header["ncols"] != n_cols or header["nrows"] != n_rows:
        raise DemError("ncols/nrows must be positive integers")

    values = tokens[pos:]
    if len(values) != n_rows * n_cols:
        raise DemError(
            f"expected {n_rows * n_cols} elevation values, found {len(values)}"
        )
    try:
        data = np.array(values, dtype=float).reshape(n_rows, n_cols)
    except ValueError as exc:
        raise DemError("non-numeric elevation value in DEM body") from exc

    grid = DemGrid(
        origin_x=header["xllcorner"],
        origin_y=header["yllcorner"],
        cell_size=header["cellsize"],
        n_rows=n_rows,
        n_cols=n_cols,
        elevation=data[::-1].copy(),  # file is north-first; store south-first
        nodata_value=header.get("nodata_value", -9999.0),
    )
    if mission_bbox is not None:
        grid.validate_extent(*mission_bbox)
    return grid


def write_dem(grid: DemGrid, target) -> None:
    """Write a DemGrid as ESRI ASCII; floats use repr so reload is bit-exact."""
    buf = io.StringIO()
    buf.write(f"ncols {grid.n_cols}\n")
    buf.write(f"nrows {grid.n_rows}\n")
    buf.write(f"xllcorner {float(grid.origin_x)!r}\n")
    buf.write(f"yllcorner {float(grid.origin_y)!r}\n")
    buf.write(f"cellsize {float(grid.cell_size)!r}\n")
    buf.write(f"NODATA_value {float(grid.nodata_value)!r}\n")
    for row in grid.elevation[::-1]:  # back to north-first
        buf.write(" ".join(repr(float(v)) for v in row))
        buf.write("\n")
    text = buf.getvalue()
    if isinstance(target, (str, Path)):
        Path(target).write_text(text)
    else:
        target.write(text)


def elevation_at(grid: DemGrid, x, y):
    """Bilinear interpolation of the four cell centers surrounding (x, y).

    Accepts scalars or arrays; raises OutOfGridError if any query point
    leaves the hull and DemError if any participating cell is nodata.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    hx0, hx1, hy0, hy1 = grid.hull
    if (x_arr < hx0).any() or (x_arr > hx1).any() or (y_arr < hy0).any() or (y_arr > hy1).any():
        raise OutOfGridError(f"query outside grid hull {grid.hull}")

    gx = (x_arr - grid.origin_x) / grid.cell_size - 0.5
    gy = (y_arr - grid.origin_y) / grid.cell_size - 0.5
    j0 = np.clip(np.floor(gx).astype(int), 0, grid.n_cols - 2)
    i0 = np.clip(np.floor(gy).astype(int), 0, grid.n_rows - 2)
    fx = gx - j0
    fy = gy - i0

    z = grid.elevation
    z00 = z[i0, j0]
    z01 = z[i0, j0 + 1]
    z10 = z[i0 + 1, j0]
    z11 = z[i0 + 1, j0 + 1]
    corners = np.stack([z00, z01, z10, z11])
    if np.any(corners == grid.nodata_value):
        raise DemError("nodata cell participates in interpolation")

    top = z00 * (1.0 - fx) + z01 * fx
    bot = z10 * (1.0 - fx) + z11 * fx
    out = top * (1.0 - fy) + bot * fy
    return float(out) if np.isscalar(x) and np.isscalar(y) else out


def profile_between(
    grid: DemGrid,
    sp,
    user,
    step: float,
    exclusion_radius: float = 20.0,
) -> TerrainProfile:
    """Terrain profile between a service point and a user candidate.

    Ground heights are sampled every ``step`` meters along the segment,
    offsets measured from the user end; samples with offset below the
    exclusion radius are dropped.  The far offset (ground beneath the
    SP) is included when the segment length is a multiple of the step.
    """
    if step <= 0:
        raise DemError(f"step must be > 0, got {step}")
    sp = tuple(float(v) for v in sp)
    user = tuple(float(v) for v in user)
    dx = sp[0] - user[0]
    dy = sp[1] - user[1]
    dist = float(np.hypot(dx, dy))
    if dist == 0.0:
        offsets = np.empty(0)
    else:
        n = int(np.floor(dist / step + 1e-9))
        offsets = step * np.arange(1, n + 1, dtype=float)
        offsets = offsets[offsets >= exclusion_radius]
    if len(offsets):
        t = offsets / dist
        xs = user[0] + t * dx
        ys = user[1] + t * dy
        heights = np.atleast_1d(elevation_at(grid, xs, ys))
    else:
        heights = np.empty(0)
    return TerrainProfile(offsets=offsets, heights=heights, endpoint_a=sp, endpoint_b=user)


def min_height_margin(profile: TerrainProfile) -> float:
    """Minimum clearance between the SP-user line of sight and the ground.

    The line of sight linearly interpolates the endpoint altitudes
    against horizontal offset from the user; the margin is the smallest
    (line height - ground height) over the profile samples.
    """
    if len(profile) == 0:
        raise DemError("empty profile: the whole segment is inside the exclusion radius")
    sp, user = profile.endpoint_a, profile.endpoint_b
    dist = float(np.hypot(sp[0] - user[0], sp[1] - user[1]))
    line = user[2] + (sp[2] - user[2]) * (profile.offsets / dist)
    return float(np.min(line - profile.heights))
