"""Scenario configuration, sample grids, synthetic terrain, persistence.

A scenario bundles the mission geometry (uncertainty area, SP ring,
platform altitude), the channel / ranging parameter sets, and the
reliability requirement budgets.  The JSON layout on disk is::

    {
      "scenario":     {"center": [x, y], "r_un": 200.0, "spacing": 10.0,
                       "d_min": 400.0, "h_b": 100.0,
                       "sp_angles_deg": [0, 45, ...],
                       "exclusion_radius_m": 20.0, "device_height_m": 1.5},
      "channel":      {"fc_hz": 1.5e9, "alpha_n": 3.4, "sigma_n_db": 1.4,
                       "pt_u_dbm": 20.0, "pn0_dbm": -104.0,
                       "snr_min_db": 0.0, "sigma_h_m": 1.0},
      "twr":          {"tau_d_s": 0.005, "o_u_ppm": 10.0, "p_if": 1e-6},
      "requirements": {"eta_req_m": 20.0, "p_fa": 1e-4, "p_md": 1e-6,
                       "eta_t_m": 18.0}
    }

Every field is optional; omitted values fall back to the defaults above.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from uavrel.dem import DemGrid
from uavrel.propagation import ChannelParams
from uavrel.twr import TwrParams


class ScenarioError(ValueError):
    """Invalid scenario document; the message names the offending field."""


@dataclass(frozen=True)
class Requirements:
    eta_req: float = 20.0   # tolerable position error, m
    p_fa: float = 1e-4      # tolerable overall false-alarm rate
    p_md: float = 1e-6      # tolerable overall missed-detection rate
    eta_t: float = 18.0     # hazardous-area threshold, m

    def __post_init__(self):
        if not 0 < self.p_fa < 1:
            raise ScenarioError(f"requirements.p_fa must be in (0, 1), got {self.p_fa}")
        if not 0 < self.p_md < 1:
            raise ScenarioError(f"requirements.p_md must be in (0, 1), got {self.p_md}")
        if self.eta_t >= self.eta_req:
            raise ScenarioError(
                f"requirements.eta_t_m ({self.eta_t}) must be smaller than "
                f"eta_req_m ({self.eta_req})"
            )


_DEFAULT_ANGLES = tuple(math.radians(a) for a in range(0, 360, 45))


@dataclass(frozen=True)
class Scenario:
    """Full mission description for one ground user."""

    center: tuple[float, float] = (0.0, 0.0)
    r_un: float = 200.0             # uncertainty-area radius, m
    sample_spacing: float = 10.0
    d_min: float = 400.0            # SP ring radius, m
    h_b: float = 100.0              # platform altitude, m
    sp_angles: tuple[float, ...] = _DEFAULT_ANGLES   # radians on the ring
    channel: ChannelParams = field(default_factory=ChannelParams)
    twr: TwrParams = field(default_factory=TwrParams)
    requirements: Requirements = field(default_factory=Requirements)
    exclusion_radius: float = 20.0
    device_height: float = 1.5

    def __post_init__(self):
        if self.d_min <= 0:
            raise ScenarioError(f"scenario.d_min must be > 0, got {self.d_min}")
        if self.r_un < 0:
            raise ScenarioError(f"scenario.r_un must be >= 0, got {self.r_un}")
        if self.sample_spacing <= 0:
            raise ScenarioError(f"scenario.spacing must be > 0, got {self.sample_spacing}")
        if not self.sp_angles:
            raise ScenarioError("scenario.sp_angles_deg must list at least one SP")

    @property
    def K(self) -> int:
        return len(self.sp_angles)

    def sp_positions(self) -> np.ndarray:
        """(K, 3) SP coordinates on the d_min circle at altitude h_b."""
        ang = np.asarray(self.sp_angles)
        return np.column_stack(
            [
                self.center[0] + self.d_min * np.cos(ang),
                self.center[1] + self.d_min * np.sin(ang),
                np.full(len(ang), self.h_b),
            ]
        )

    def sample_points(self) -> np.ndarray:
        return sample_grid(self)

    def mission_bbox(self, margin: float = 0.0) -> tuple[float, float, float, float]:
        """Bounding box covering the uncertainty area and the SP ring."""
        reach = max(self.r_un, self.d_min) + margin
        return (
            self.center[0] - reach,
            self.center[0] + reach,
            self.center[1] - reach,
            self.center[1] + reach,
        )

    def rotated(self, delta_rad: float) -> "Scenario":
        """Scenario with every SP rotated by delta_rad around the center."""
        return replace(self, sp_angles=tuple(a + delta_rad for a in self.sp_angles))


def _get(doc: dict, group: str, key: str, default):
    value = doc.get(group, {}).get(key, default)
    try:
        if isinstance(default, (int, float)) and not isinstance(value, bool):
            return float(value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{group}.{key} must be a number, got {value!r}") from exc
    return value


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario JSON document (defaults applied)."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")

    center = doc.get("scenario", {}).get("center", [0.0, 0.0])
    if not (isinstance(center, (list, tuple)) and len(center) == 2):
        raise ScenarioError(f"scenario.center must be [x, y], got {center!r}")

    angles_deg = doc.get("scenario", {}).get("sp_angles_deg")
    if angles_deg is None:
        angles = _DEFAULT_ANGLES
    else:
        if not isinstance(angles_deg, (list, tuple)) or not angles_deg:
            raise ScenarioError("scenario.sp_angles_deg must be a non-empty list")
        angles = tuple(math.radians(float(a)) for a in angles_deg)

    channel = ChannelParams(
        f_c=_get(doc, "channel", "fc_hz", 1.5e9),
        alpha_n=_get(doc, "channel", "alpha_n", 3.4),
        sigma_n=_get(doc, "channel", "sigma_n_db", 1.4),
        p_t_u=_get(doc, "channel", "pt_u_dbm", 20.0),
        p_n0=_get(doc, "channel", "pn0_dbm", -104.0),
        snr_min=_get(doc, "channel", "snr_min_db", 0.0),
        sigma_h=_get(doc, "channel", "sigma_h_m", 1.0),
    )
    twr = TwrParams(
        tau_d=_get(doc, "twr", "tau_d_s", 0.005),
        o_u=_get(doc, "twr", "o_u_ppm", 10.0) * 1e-6,
        p_if=_get(doc, "twr", "p_if", 1e-6),
    )
    requirements = Requirements(
        eta_req=_get(doc, "requirements", "eta_req_m", 20.0),
        p_fa=_get(doc, "requirements", "p_fa", 1e-4),
        p_md=_get(doc, "requirements", "p_md", 1e-6),
        eta_t=_get(doc, "requirements", "eta_t_m", 18.0),
    )
    return Scenario(
        center=(float(center[0]), float(center[1])),
        r_un=_get(doc, "scenario", "r_un", 200.0),
        sample_spacing=_get(doc, "scenario", "spacing", 10.0),
        d_min=_get(doc, "scenario", "d_min", 400.0),
        h_b=_get(doc, "scenario", "h_b", 100.0),
        sp_angles=angles,
        channel=channel,
        twr=twr,
        requirements=requirements,
        exclusion_radius=_get(doc, "scenario", "exclusion_radius_m", 20.0),
        device_height=_get(doc, "scenario", "device_height_m", 1.5),
    )


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "scenario": {
            "center": [s.center[0], s.center[1]],
            "r_un": s.r_un,
            "spacing": s.sample_spacing,
            "d_min": s.d_min,
            "h_b": s.h_b,
            "sp_angles_deg": [math.degrees(a) for a in s.sp_angles],
            "exclusion_radius_m": s.exclusion_radius,
            "device_height_m": s.device_height,
        },
        "channel": {
            "fc_hz": s.channel.f_c,
            "alpha_n": s.channel.alpha_n,
            "sigma_n_db": s.channel.sigma_n,
            "pt_u_dbm": s.channel.p_t_u,
            "pn0_dbm": s.channel.p_n0,
            "snr_min_db": s.channel.snr_min,
            "sigma_h_m": s.channel.sigma_h,
        },
        "twr": {"tau_d_s": s.twr.tau_d, "o_u_ppm": s.twr.o_u * 1e6, "p_if": s.twr.p_if},
        "requirements": {
            "eta_req_m": s.requirements.eta_req,
            "p_fa": s.requirements.p_fa,
            "p_md": s.requirements.p_md,
            "eta_t_m": s.requirements.eta_t,
        },
    }


def serialize_scenario(s: Scenario) -> str:
    """Canonical JSON (sorted keys, repr floats) — hash-stable."""
    return json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))


def scenario_hash(s: Scenario) -> str:
    return hashlib.sha256(serialize_scenario(s).encode()).hexdigest()[:16]


def sample_grid(scenario: Scenario) -> np.ndarray:
    """Regular sample grid covering the uncertainty disc.

    Lattice aligned to the center with the configured spacing; points
    with ||p - center|| <= r_un are kept, ordered row-major with y
    descending (northern row first) and x ascending within a row.
    """
    s = scenario.sample_spacing
    n = int(math.floor(scenario.r_un / s + 1e-9))
    offs = s * np.arange(-n, n + 1)
    xx, yy = np.meshgrid(offs, -offs)  # y descending row-major
    keep = xx**2 + yy**2 <= scenario.r_un**2 + 1e-9
    pts = np.column_stack([xx[keep], yy[keep]])
    pts[:, 0] += scenario.center[0]
    pts[:, 1] += scenario.center[1]
    return pts


def _grid_axes(center, half_extent: float, cell_size: float):
    n = int(math.ceil(2.0 * half_extent / cell_size)) + 1
    xs = center[0] - half_extent + cell_size * (np.arange(n) + 0.5)
    ys = center[1] - half_extent + cell_size * (np.arange(n) + 0.5)
    return xs, ys, n


def synth_dem(
    kind: str,
    cell_size: float = 10.0,
    half_extent: float = 700.0,
    center: tuple[float, float] = (0.0, 0.0),
    seed: int | None = None,
    **params,
) -> DemGrid:
    """Deterministic synthetic terrain for tests and demos.

    Kinds:
      * ``flat``: constant ``height`` (default 0).
      * ``plane``: ``base + slope_x * x + slope_y * y``.
      * ``gaussian_hills``: ``n_hills`` random Gaussian bumps (seeded).
      * ``valley``: flat floor flanked by two ridges running along the
        x axis at ``y = +-(floor_half_width + 3 * ridge_sigma)``; ridge
        crests can be finite segments via ``ridge_half_length``.
      * ``wall``: a single ridge of ``height`` crossing x = ``x0`` with
        the given ``thickness`` (optionally clipped in y).
    """
    xs, ys, n = _grid_axes(center, half_extent, cell_size)
    xx, yy = np.meshgrid(xs, ys)  # row 0 = south

    if kind == "flat":
        z = np.full_like(xx, float(params.get("height", 0.0)))
    elif kind == "plane":
        z = (
            float(params.get("base", 0.0))
            + float(params.get("slope_x", 0.0)) * xx
            + float(params.get("slope_y", 0.0)) * yy
        )
    elif kind == "gaussian_hills":
        rng = np.random.default_rng(seed)
        n_hills = int(params.get("n_hills", 12))
        height = float(params.get("height", 120.0))
        z = np.zeros_like(xx)
        for _ in range(n_hills):
            cx = rng.uniform(center[0] - half_extent, center[0] + half_extent)
            cy = rng.uniform(center[1] - half_extent, center[1] + half_extent)
            sig = rng.uniform(
                float(params.get("sigma_min", 60.0)), float(params.get("sigma_max", 160.0))
            )
            amp = rng.uniform(0.3, 1.0) * height
            z += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sig**2))
    elif kind == "valley":
        floor_half = float(params.get("floor_half_width", 150.0))
        h = float(params.get("ridge_height", 250.0))
        sig = float(params.get("ridge_sigma", 50.0))
        crest = floor_half + 3.0 * sig
        z = h * (
            np.exp(-((yy - center[1] - crest) ** 2) / (2.0 * sig**2))
            + np.exp(-((yy - center[1] + crest) ** 2) / (2.0 * sig**2))
        )
        half_len = params.get("ridge_half_length")
        if half_len is not None:
            # Smooth cosine taper of the crest ends over one sigma.
            dist = np.abs(xx - center[0])
            taper = np.clip((float(half_len) + sig - dist) / sig, 0.0, 1.0)
            z *= 0.5 - 0.5 * np.cos(np.pi * taper)
    elif kind == "wall":
        x0 = float(params.get("x0", 300.0))
        h = float(params.get("height", 200.0))
        thickness = float(params.get("thickness", 20.0))
        z = np.where(np.abs(xx - x0) <= thickness / 2.0, h, 0.0)
        y_half = params.get("y_half_length")
        if y_half is not None:
            z = np.where(np.abs(yy - center[1]) <= float(y_half), z, 0.0)
    else:
        raise ValueError(f"unknown synthetic terrain kind {kind!r}")

    return DemGrid(
        origin_x=center[0] - half_extent,
        origin_y=center[1] - half_extent,
        cell_size=cell_size,
        n_rows=n,
        n_cols=n,
        elevation=z,
        nodata_value=-9999.0,
    )
