"""HTTP service contract: endpoints, jobs, determinism, CLI parity."""

import io
import json
import time

import pytest
from fastapi.testclient import TestClient

from uavrel.dem import write_dem
from uavrel.scenario import synth_dem
from uavrel.service import create_app

SCENARIO_DOC = {
    "scenario": {"r_un": 40.0, "spacing": 20.0},
    "channel": {"snr_min_db": 10.0},
    "requirements": {"eta_req_m": 20.0, "eta_t_m": 18.0},
}


def _dem_text():
    grid = synth_dem(
        "valley",
        cell_size=10.0,
        half_extent=700.0,
        floor_half_width=150.0,
        ridge_height=140.0,
        ridge_sigma=50.0,
        ridge_half_length=200.0,
    )
    buf = io.StringIO()
    write_dem(grid, buf)
    return buf.getvalue()


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    store = tmp_path_factory.mktemp("store")
    app = create_app(store)
    with TestClient(app) as c:
        yield c


def _wait_job(client, job_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/api/jobs/{job_id}").json()
        if job["state"] in ("done", "failed"):
            return job
        time.sleep(0.05)
    raise TimeoutError("job did not finish")


def test_scenario_crud(client):
    r = client.post("/api/scenarios", json=SCENARIO_DOC)
    assert r.status_code == 200
    sid = r.json()["id"]
    doc = client.get(f"/api/scenarios/{sid}").json()
    assert doc["scenario"]["r_un"] == 40.0
    assert client.get("/api/scenarios/deadbeef").status_code == 404

    bad = dict(SCENARIO_DOC, requirements={"eta_req_m": 10.0, "eta_t_m": 12.0})
    assert client.post("/api/scenarios", json=bad).status_code == 422


def test_sp_angle_update_yields_new_id(client):
    sid = client.post("/api/scenarios", json=SCENARIO_DOC).json()["id"]
    r = client.put(f"/api/scenarios/{sid}/sp_angles", json={"sp_angles_deg": [0, 45, 90, 140, 180, 225, 270, 315]})
    assert r.status_code == 200
    new_id = r.json()["id"]
    assert new_id != sid
    updated = client.get(f"/api/scenarios/{new_id}").json()
    assert updated["scenario"]["sp_angles_deg"][3] == 140.0
    # The original document is untouched (content addressing).
    original = client.get(f"/api/scenarios/{sid}").json()
    assert original["scenario"]["sp_angles_deg"][3] == 135.0


def test_dem_upload_validates(client):
    r = client.post("/api/dems", content=_dem_text())
    assert r.status_code == 200
    assert client.post("/api/dems", content="ncols 2\nnrows 2\n1 2 3").status_code == 422


def test_predict_job_and_result(client):
    sid = client.post("/api/scenarios", json=SCENARIO_DOC).json()["id"]
    did = client.post("/api/dems", content=_dem_text()).json()["id"]
    r = client.post("/api/predict", json={"scenario_id": sid, "dem_id": did})
    assert r.status_code == 200
    job = _wait_job(client, r.json()["job_id"])
    assert job["state"] == "done"
    rid = job["result_id"]
    summary = client.get(f"/api/results/{rid}").json()
    assert summary["scenario_hash"] == sid
    assert summary["dem_hash"] == did
    heatmap = client.get(f"/api/results/{rid}/heatmap")
    assert heatmap.headers["content-type"].startswith("text/csv")
    assert heatmap.text.splitlines()[0] == "m,x,y,eta_x,eta_y,eta,status"


def test_service_matches_cli_bytes(client, tmp_path):
    sid = client.post("/api/scenarios", json=SCENARIO_DOC).json()["id"]
    did = client.post("/api/dems", content=_dem_text()).json()["id"]
    job = client.post("/api/predict", json={"scenario_id": sid, "dem_id": did}).json()
    _wait_job(client, job["job_id"])
    heatmap_api = client.get(f"/api/results/{job['result_id']}/heatmap").text

    scenario_path = tmp_path / "scenario.json"
    scenario_path.write_text(json.dumps(SCENARIO_DOC))
    dem_path = tmp_path / "dem.asc"
    dem_path.write_text(_dem_text())
    out = tmp_path / "out"
    from uavrel.cli import main

    code = main(["predict", "--scenario", str(scenario_path), "--dem", str(dem_path), "--out", str(out)])
    assert code in (0, 2)
    assert (out / "heatmap.csv").read_text() == heatmap_api


def test_concurrent_identical_predicts_agree(client):
    sid = client.post("/api/scenarios", json=SCENARIO_DOC).json()["id"]
    did = client.post("/api/dems", content=_dem_text()).json()["id"]
    j1 = client.post("/api/predict", json={"scenario_id": sid, "dem_id": did}).json()
    j2 = client.post("/api/predict", json={"scenario_id": sid, "dem_id": did}).json()
    assert j1["result_id"] == j2["result_id"]
    _wait_job(client, j1["job_id"])
    _wait_job(client, j2["job_id"])
    h1 = client.get(f"/api/results/{j1['result_id']}/heatmap").text
    h2 = client.get(f"/api/results/{j2['result_id']}/heatmap").text
    assert h1 == h2


def test_vote_endpoint(client):
    sid = client.post("/api/scenarios", json=SCENARIO_DOC).json()["id"]
    did = client.post("/api/dems", content=_dem_text()).json()["id"]
    job = client.post("/api/predict", json={"scenario_id": sid, "dem_id": did}).json()
    _wait_job(client, job["job_id"])
    r = client.post("/api/vote", json={"result_id": job["result_id"]})
    assert r.status_code == 200
    report = r.json()
    assert report["scenario_hash"] == sid
    assert report["k"] == 8
    assert "areas" in report and "guidance" in report


def test_simulate_job(client):
    sid = client.post("/api/scenarios", json=SCENARIO_DOC).json()["id"]
    did = client.post("/api/dems", content=_dem_text()).json()["id"]
    r = client.post(
        "/api/simulate",
        json={"scenario_id": sid, "dem_id": did, "mc": {"trials": 1500, "seed": 3, "truth_index": 0, "forced_mask": 255}},
    )
    job = _wait_job(client, r.json()["job_id"])
    assert job["state"] == "done"
    summary = client.get(f"/api/results/{job['result_id']}").json()
    assert summary["kind"] == "simulate"
    assert summary["trials"] == 1500


def test_unknown_job_404(client):
    assert client.get("/api/jobs/bogus").status_code == 404


def test_sp_angle_change_alters_prediction_iff_geometry_changed(client):
    sid = client.post("/api/scenarios", json=SCENARIO_DOC).json()["id"]
    did = client.post("/api/dems", content=_dem_text()).json()["id"]
    base_job = client.post("/api/predict", json={"scenario_id": sid, "dem_id": did}).json()
    _wait_job(client, base_job["job_id"])
    base_heatmap = client.get(f"/api/results/{base_job['result_id']}/heatmap").text

    same_id = client.put(
        f"/api/scenarios/{sid}/sp_angles",
        json={"sp_angles_deg": [0, 45, 90, 135, 180, 225, 270, 315]},
    ).json()["id"]
    assert same_id == sid  # identical content hashes to the same id

    rotated = client.put(
        f"/api/scenarios/{sid}/sp_angles",
        json={"sp_angles_deg": [15, 60, 105, 150, 195, 240, 285, 330]},
    ).json()["id"]
    assert rotated != sid
    rot_job = client.post("/api/predict", json={"scenario_id": rotated, "dem_id": did}).json()
    _wait_job(client, rot_job["job_id"])
    rot_heatmap = client.get(f"/api/results/{rot_job['result_id']}/heatmap").text
    assert rot_heatmap != base_heatmap
