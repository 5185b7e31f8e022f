"""Prediction-result persistence shared by the CLI and the HTTP service.

One code path produces every artifact (heatmap CSV, summary JSON/text,
hazard report), so the two front ends are byte-identical for identical
inputs.  Results are keyed by a content hash of their inputs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from uavrel import hazard as hazard_mod
from uavrel.mde import ReliabilityMap
from uavrel.scenario import Scenario, scenario_hash

ENGINE_VERSION = "1"

HEATMAP_NAME = "heatmap.csv"
SUMMARY_NAME = "summary.json"
SUMMARY_TEXT_NAME = "summary.txt"


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def dem_hash(grid) -> str:
    h = hashlib.sha256()
    h.update(
        repr(
            (
                float(grid.origin_x),
                float(grid.origin_y),
                float(grid.cell_size),
                grid.n_rows,
                grid.n_cols,
                float(grid.nodata_value),
            )
        ).encode()
    )
    h.update(np.ascontiguousarray(grid.elevation).tobytes())
    return h.hexdigest()[:16]


def result_id(scenario_id: str, dem_id: str, kind: str = "predict") -> str:
    return text_hash(f"{kind}:{scenario_id}:{dem_id}:v{ENGINE_VERSION}")


def prediction_summary(rmap: ReliabilityMap, scenario: Scenario, dem_id: str) -> dict:
    summary = rmap.summary_dict()
    summary["dem_hash"] = dem_id
    eta_star = rmap.eta_star
    if np.isnan(eta_star):
        summary["meets_requirement"] = False
    else:
        summary["meets_requirement"] = bool(eta_star <= scenario.requirements.eta_req)
    return summary


def summary_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"


def write_prediction(rmap: ReliabilityMap, scenario: Scenario, dem_id: str, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = prediction_summary(rmap, scenario, dem_id)
    (out / HEATMAP_NAME).write_text(rmap.to_csv())
    (out / SUMMARY_NAME).write_text(summary_json(summary))
    lines = [f"{k}: {summary[k]}" for k in sorted(summary)]
    (out / SUMMARY_TEXT_NAME).write_text("\n".join(lines) + "\n")
    return summary


def load_prediction_summary(out_dir) -> dict:
    path = Path(out_dir) / SUMMARY_NAME
    if not path.exists():
        raise FileNotFoundError(f"no prediction summary at {path}")
    return json.loads(path.read_text())


def load_heatmap_etas(out_dir) -> np.ndarray:
    """eta column of a stored heatmap (nan for unavailable points)."""
    import csv as csv_mod

    path = Path(out_dir) / HEATMAP_NAME
    if not path.exists():
        raise FileNotFoundError(f"no heatmap at {path}")
    with open(path, newline="") as fh:
        rows = list(csv_mod.DictReader(fh))
    return np.array([float(r["eta"]) for r in rows])


def hazard_report(areas: list, K: int, eta_t: float, scenario_id: str, result_ref: str) -> dict:
    return {
        "scenario_hash": scenario_id,
        "result_id": result_ref,
        "eta_t": eta_t,
        "k": K,
        "areas": [
            {
                "id": area.id,
                "members": [int(m) for m in area.members],
                "votes": {key: [int(v) for v in vec] for key, vec in area.votes.items()},
                "raw_votes": {key: [float(v) for v in vec] for key, vec in area.raw_votes.items()},
            }
            for area in areas
        ],
        "guidance": hazard_mod.guidance_text(areas),
    }


def verify_map_matches(scenario: Scenario, summary: dict) -> None:
    """Raise when a stored map was produced from a different scenario."""
    expected = scenario_hash(scenario)
    found = summary.get("scenario_hash")
    if found != expected:
        raise ValueError(
            f"scenario hash mismatch: map was built from {found}, current scenario is {expected}"
        )
