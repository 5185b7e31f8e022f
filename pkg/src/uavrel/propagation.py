"""Prior probabilities of LoS / NLoS / blockage per (SP, sample point).

The propagation condition of each air-to-ground link is modeled from
terrain geometry: the clearance margin between the line of sight and the
ground (with Gaussian terrain uncertainty) decides LoS, and a
log-distance path-loss budget with log-normal shadowing decides whether
a reflected (NLoS) signal is still detectable when the LoS path is not.
Combined with the internal-fault rate this yields, for every pair, the
measurement-status probabilities consumed by event enumeration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from uavrel import dem as dem_mod

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact


@dataclass(frozen=True)
class ChannelParams:
    """Air-to-ground channel and terrain-uncertainty parameters."""

    f_c: float = 1.5e9        # carrier frequency, Hz
    alpha_n: float = 3.4      # path-loss exponent without LoS
    sigma_n: float = 1.4      # shadowing std, dB
    p_t_u: float = 20.0       # user device transmit power, dBm
    p_n0: float = -104.0      # noise power, dBm
    snr_min: float = 0.0      # detection SNR threshold, dB
    sigma_h: float = 1.0      # terrain uncertainty std, m
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.sigma_n <= 0:
            raise ValueError(f"sigma_n must be > 0, got {self.sigma_n}")
        if self.sigma_h <= 0:
            raise ValueError(f"sigma_h must be > 0, got {self.sigma_h}")
        if self.f_c <= 0:
            raise ValueError(f"f_c must be > 0, got {self.f_c}")


def p_los(margin, sigma_h: float):
    """Probability that the noisy height margin stays positive."""
    if sigma_h <= 0:
        raise ValueError(f"sigma_h must be > 0, got {sigma_h}")
    return ndtr(np.asarray(margin, dtype=float) / sigma_h)


def reference_path_loss(params: ChannelParams) -> float:
    """Free-space reference path loss at 1 m, in dB."""
    return 20.0 * np.log10(4.0 * np.pi * params.f_c / params.c)


def psi_max(params: ChannelParams, distance_3d) -> np.ndarray | float:
    """Largest shadowing value (dB) that still lets the reflected signal
    reach the detection SNR at the given 3-D distance."""
    d = np.asarray(distance_3d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance_3d must be > 0")
    budget = params.p_t_u - params.p_n0 - params.snr_min
    loss = reference_path_loss(params) + 10.0 * params.alpha_n * np.log10(d)
    out = budget - loss
    return float(out) if np.isscalar(distance_3d) else out


def condition_probs(margin, distance_3d, params: ChannelParams):
    """(p_los, p_nlos, p_block) for one link or arrays of links."""
    pl = p_los(margin, params.sigma_h)
    detectable = ndtr(np.asarray(psi_max(params, distance_3d)) / params.sigma_n)
    pn = (1.0 - pl) * detectable
    pb = 1.0 - pl - pn
    if np.isscalar(margin) and np.isscalar(distance_3d):
        return float(pl), float(pn), float(pb)
    return pl, pn, pb


def status_probs(p_los_v, p_nlos_v, p_block_v, p_if: float):
    """Measurement-status probabilities from propagation conditions.

    Returns (p_obtain, p_fail_given_obtain, p_normal_given_obtain).
    Failure = NLoS bias or internal fault on a LoS link; where a link can
    never be observed (p_obtain == 0) both conditionals are reported as 0
    and the caller must treat the SP as never observed.
    """
    if not 0.0 <= p_if <= 1.0:
        raise ValueError(f"p_if must be in [0, 1], got {p_if}")
    pl = np.asarray(p_los_v, dtype=float)
    pn = np.asarray(p_nlos_v, dtype=float)
    pb = np.asarray(p_block_v, dtype=float)
    p_obtain = 1.0 - pb
    p_fail = pl * p_if + pn
    p_norm = pl * (1.0 - p_if)
    with np.errstate(divide="ignore", invalid="ignore"):
        fail_o = np.where(p_obtain > 0.0, p_fail / p_obtain, 0.0)
        norm_o = np.where(p_obtain > 0.0, p_norm / p_obtain, 0.0)
    if np.isscalar(p_los_v):
        return float(p_obtain), float(fail_o), float(norm_o)
    return p_obtain, fail_o, norm_o


@dataclass(frozen=True)
class PropagationTable:
    """K x M table of propagation and status probabilities.

    Arrays are indexed [k, m] (service point, sample point).
    """

    p_los: np.ndarray
    p_nlos: np.ndarray
    p_block: np.ndarray
    p_obtain: np.ndarray
    p_fail_o: np.ndarray
    p_norm_o: np.ndarray

    @property
    def K(self) -> int:
        return self.p_los.shape[0]

    @property
    def M(self) -> int:
        return self.p_los.shape[1]

    def point(self, m: int):
        """Per-SP probability vectors at sample point m."""
        return (
            self.p_obtain[:, m],
            self.p_block[:, m],
            self.p_fail_o[:, m],
            self.p_norm_o[:, m],
        )


def table_for_points(grid, scenario, points_xy) -> PropagationTable:
    """Propagation table for an explicit list of candidate user points.

    Sample altitudes are DEM ground plus the handheld device height; SP
    altitude is the platform altitude h_B.  Profiles are sampled at
    min(cell_size / 2, 5 m).
    """
    sp_xyz = scenario.sp_positions()
    points = np.atleast_2d(np.asarray(points_xy, dtype=float))
    alts = np.atleast_1d(
        dem_mod.elevation_at(grid, points[:, 0], points[:, 1])
    ) + scenario.device_height
    step = min(grid.cell_size / 2.0, 5.0)

    K = len(sp_xyz)
    M = len(points)
    margins = np.empty((K, M))
    dists = np.empty((K, M))
    for k in range(K):
        sp = tuple(sp_xyz[k])
        for m in range(M):
            user = (points[m, 0], points[m, 1], alts[m])
            prof = dem_mod.profile_between(grid, sp, user, step, scenario.exclusion_radius)
            margins[k, m] = dem_mod.min_height_margin(prof)
            dists[k, m] = np.sqrt(
                (sp[0] - user[0]) ** 2 + (sp[1] - user[1]) ** 2 + (sp[2] - user[2]) ** 2
            )

    pl, pn, pb = condition_probs(margins, dists, scenario.channel)
    po, fo, no = status_probs(pl, pn, pb, scenario.twr.p_if)
    return PropagationTable(
        p_los=pl, p_nlos=pn, p_block=pb, p_obtain=po, p_fail_o=fo, p_norm_o=no
    )


def build_table(grid, scenario) -> PropagationTable:
    """Evaluate the propagation model for every (SP, sample point) pair."""
    return table_for_points(grid, scenario, scenario.sample_points())


def write_table_csv(table: PropagationTable, target) -> None:
    """Debug export: one row per (k, m) pair."""
    close = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        fh = open(target, "w", newline="")
        close = True
    else:
        fh = target
    try:
        writer = csv.writer(fh)
        writer.writerow(["k", "m", "p_los", "p_nlos", "p_block"])
        for k in range(table.K):
            for m in range(table.M):
                writer.writerow(
                    [
                        k,
                        m,
                        repr(float(table.p_los[k, m])),
                        repr(float(table.p_nlos[k, m])),
                        repr(float(table.p_block[k, m])),
                    ]
                )
    finally:
        if close:
            fh.close()
