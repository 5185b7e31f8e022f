"""Hazardous-area identification, segmentation, and voting cause analysis.

Sample points whose predicted minimum detectable error exceeds the
hazard threshold are clustered with the 8-connected neighborhood rule;
each cluster's points then vote, weighted by squared threshold excess,
for the service points whose poor visibility or high conditional
failure rate drive the hazard.  Binarized votes (one 4 x K table per
area) are the guidance the operator uses to adjust SP locations.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from uavrel.mde import STATUS_OK, ReliabilityMap
from uavrel.propagation import PropagationTable

_VOTE_KEYS = ("v_u_x", "v_fo_x", "v_u_y", "v_fo_y")


@dataclass
class HazardArea:
    """One 8-connected hazardous cluster with its voting vectors."""

    id: int
    members: np.ndarray                      # sample indices
    raw_votes: dict[str, np.ndarray] = field(default_factory=dict)
    votes: dict[str, np.ndarray] = field(default_factory=dict)

    def flagged_sps(self) -> dict[str, list[int]]:
        return {key: list(np.nonzero(self.votes[key])[0]) for key in _VOTE_KEYS}


def identify(rmap: ReliabilityMap, eta_t: float) -> np.ndarray:
    """Boolean mask of hazardous sample points (strict threshold excess).

    Points with unbounded MDE or without service count as hazardous.
    """
    if eta_t <= 0:
        raise ValueError(f"eta_t must be > 0, got {eta_t}")
    with np.errstate(invalid="ignore"):
        above = rmap.eta > eta_t
    return above | rmap.hazard_candidates()


def segment(xy: np.ndarray, hazardous: np.ndarray, spacing: float) -> list[np.ndarray]:
    """Maximal 8-connected components of the hazardous lattice points."""
    idx = np.nonzero(hazardous)[0]
    if len(idx) == 0:
        return []
    cells = np.round(xy[idx] / spacing).astype(int)
    by_cell = {(int(cx), int(cy)): i for (cx, cy), i in zip(cells, idx)}
    seen: set[tuple[int, int]] = set()
    areas: list[np.ndarray] = []
    for start in sorted(by_cell):
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        members = []
        while stack:
            cx, cy = stack.pop()
            members.append(by_cell[(cx, cy)])
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    nb = (cx + dx, cy + dy)
                    if nb in by_cell and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        areas.append(np.array(sorted(members), dtype=int))
    areas.sort(key=lambda a: int(a[0]))
    return areas


def _excess(value: float, eta_t: float) -> float:
    # Unbounded points vote with a capped excess (as if eta = 2 * eta_t);
    # points without service cast no votes.
    if np.isnan(value):
        return 0.0
    if np.isinf(value):
        return eta_t
    return max(value - eta_t, 0.0)


def _top_indices(weights: np.ndarray, count: int) -> np.ndarray:
    # Descending by weight, ties broken by ascending SP index.
    order = np.argsort(-weights, kind="stable")
    return order[:count]


def vote(
    area: HazardArea,
    rmap: ReliabilityMap,
    table: PropagationTable,
    eta_t: float,
) -> HazardArea:
    """Fill the area's four voting vectors (raw weights, then binarized).

    Per direction, each member point exceeding the threshold gets weight
    proportional to its squared excess (normalized over the area's
    exceeding points); it votes for the SPs with the largest blockage
    probability (visibility vector) and the largest conditional failure
    probability (failure vector), using the point's worst-case
    unavailable / faulty SP counts as vote sizes.  Entries are rounded
    half-up, which binarizes against the 0.5 threshold.
    """
    K = table.K
    raw = {key: np.zeros(K) for key in _VOTE_KEYS}
    for direction, eta_d in (("x", rmap.eta_x), ("y", rmap.eta_y)):
        excesses = np.array([_excess(float(eta_d[m]), eta_t) for m in area.members])
        denom = float(np.sum(excesses**2))
        if denom == 0.0:
            continue
        for m, exc in zip(area.members, excesses):
            if exc <= 0.0:
                continue
            weight = exc**2 / denom
            u_star = int(rmap.u_star[m])
            f_star = int(rmap.f_star[m])
            if u_star > 0:
                top = _top_indices(table.p_block[:, m], u_star)
                raw[f"v_u_{direction}"][top] += weight
            if f_star > 0:
                top = _top_indices(table.p_fail_o[:, m], f_star)
                raw[f"v_fo_{direction}"][top] += weight
    area.raw_votes = raw
    area.votes = {key: np.floor(vec + 0.5).astype(int) for key, vec in raw.items()}
    return area


def analyze(rmap: ReliabilityMap, table: PropagationTable, eta_t: float, spacing: float) -> list[HazardArea]:
    """Identify, segment and vote in one pass."""
    hazardous = identify(rmap, eta_t)
    areas = [
        HazardArea(id=i + 1, members=members)
        for i, members in enumerate(segment(rmap.xy, hazardous, spacing))
    ]
    for area in areas:
        vote(area, rmap, table, eta_t)
    return areas


_ROW_LABELS = {
    "v_u_x": "v_H{i}_U_x",
    "v_fo_x": "v_H{i}_F|O_x",
    "v_u_y": "v_H{i}_U_y",
    "v_fo_y": "v_H{i}_F|O_y",
}


def voting_table_csv(areas: list[HazardArea], K: int) -> str:
    """Voting results, one row per (area, vector), columns SP1..SPK."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["vector"] + [f"SP{k + 1}" for k in range(K)])
    for area in areas:
        for key in _VOTE_KEYS:
            label = _ROW_LABELS[key].format(i=area.id)
            writer.writerow([label] + [int(v) for v in area.votes[key]])
    return buf.getvalue()


def guidance_text(areas: list[HazardArea]) -> str:
    """Human-readable adjustment hints per hazardous area."""
    if not areas:
        return "no hazardous areas\n"
    lines = []
    for area in areas:
        lines.append(f"hazardous area {area.id}: {len(area.members)} sample points")
        flags = area.flagged_sps()
        vis = sorted(set(flags["v_u_x"]) | set(flags["v_u_y"]))
        fail = sorted(set(flags["v_fo_x"]) | set(flags["v_fo_y"]))
        for k in vis:
            dirs = [d for d in ("x", "y") if k in flags[f"v_u_{d}"]]
            lines.append(
                f"  SP{k + 1}: low visibility drives the hazard ({', '.join(dirs)}); "
                "move it so its sight lines clear the terrain"
            )
        for k in fail:
            dirs = [d for d in ("x", "y") if k in flags[f"v_fo_{d}"]]
            lines.append(
                f"  SP{k + 1}: high conditional failure rate ({', '.join(dirs)}); "
                "reduce its NLoS exposure or make it cleanly unavailable"
            )
        if not vis and not fail:
            lines.append("  no single SP dominates; consider raising altitude")
    return "\n".join(lines) + "\n"
