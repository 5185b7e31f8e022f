"""HTTP service exposing prediction, voting, and simulation.

Thin wrapper over the library: every computation goes through the same
functions the CLI uses, so responses are byte-identical to CLI output
for identical inputs.  The store is content-addressed (ids are content
hashes), which makes documents immutable: PUT endpoints store the new
content and answer with its id.  Long computations run as jobs with
polled progress; results are persisted, so identical requests are
answered from the store.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Request, Response

from uavrel import dem as dem_mod
from uavrel import hazard as hazard_mod
from uavrel import results as results_mod
from uavrel.mde import build_context, compute_plan, predict_map
from uavrel.montecarlo import McConfig, run_trials
from uavrel.propagation import build_table
from uavrel.scenario import (
    ScenarioError,
    parse_scenario,
    scenario_hash,
    scenario_to_dict,
    serialize_scenario,
)


@dataclass
class Job:
    id: str
    kind: str
    state: str = "queued"          # queued -> running -> done | failed
    progress: float = 0.0
    result_id: str | None = None
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def to_dict(self) -> dict:
        with self.lock:
            return {
                "id": self.id,
                "kind": self.kind,
                "state": self.state,
                "progress": self.progress,
                "result_id": self.result_id,
                "error": self.error,
            }


class Store:
    """Content-addressed on-disk store for scenarios, DEMs, and results."""

    def __init__(self, root: Path):
        self.root = Path(root)
        for sub in ("scenarios", "dems", "results"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- scenarios ----------------------------------------------------
    def put_scenario(self, text: str) -> str:
        scenario = parse_scenario(text)
        sid = scenario_hash(scenario)
        (self.root / "scenarios" / f"{sid}.json").write_text(serialize_scenario(scenario))
        return sid

    def get_scenario_text(self, sid: str) -> str:
        path = self.root / "scenarios" / f"{sid}.json"
        if not path.exists():
            raise KeyError(sid)
        return path.read_text()

    def get_scenario(self, sid: str):
        return parse_scenario(self.get_scenario_text(sid))

    # -- DEMs ---------------------------------------------------------
    def put_dem(self, text: str) -> str:
        dem_mod.load_dem(text)  # validate before storing
        did = results_mod.text_hash(text)
        (self.root / "dems" / f"{did}.asc").write_text(text)
        return did

    def get_dem(self, did: str):
        path = self.root / "dems" / f"{did}.asc"
        if not path.exists():
            raise KeyError(did)
        return dem_mod.load_dem(path.read_text())

    # -- results ------------------------------------------------------
    def result_dir(self, rid: str) -> Path:
        return self.root / "results" / rid

    def has_result(self, rid: str) -> bool:
        return (self.result_dir(rid) / results_mod.SUMMARY_NAME).exists()


def create_app(store_dir) -> FastAPI:
    app = FastAPI(title="uavrel", version="0.1.0")
    store = Store(Path(store_dir))
    jobs: dict[str, Job] = {}
    executor = ThreadPoolExecutor(max_workers=2)

    try:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )
    except ImportError:
        pass

    def _not_found(kind: str, ident: str):
        raise HTTPException(status_code=404, detail=f"{kind} {ident!r} not found")

    # ---- scenarios ----
    @app.post("/api/scenarios")
    def post_scenario(doc: dict = Body(...)):
        try:
            sid = store.put_scenario(json.dumps(doc))
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"id": sid}

    @app.get("/api/scenarios/{sid}")
    def get_scenario(sid: str):
        try:
            return json.loads(store.get_scenario_text(sid))
        except KeyError:
            _not_found("scenario", sid)

    @app.put("/api/scenarios/{sid}")
    def put_scenario(sid: str, doc: dict = Body(...)):
        # The store is content-addressed: the updated document gets its
        # own id, returned here; the original stays untouched.
        try:
            store.get_scenario_text(sid)
        except KeyError:
            _not_found("scenario", sid)
        try:
            new_id = store.put_scenario(json.dumps(doc))
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"id": new_id}

    @app.put("/api/scenarios/{sid}/sp_angles")
    def put_sp_angles(sid: str, body: dict = Body(...)):
        angles = body.get("sp_angles_deg")
        if not isinstance(angles, list) or not angles:
            raise HTTPException(status_code=422, detail="sp_angles_deg must be a non-empty list")
        try:
            doc = json.loads(store.get_scenario_text(sid))
        except KeyError:
            _not_found("scenario", sid)
        doc.setdefault("scenario", {})["sp_angles_deg"] = [float(a) for a in angles]
        try:
            new_id = store.put_scenario(json.dumps(doc))
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"id": new_id}

    # ---- DEMs ----
    @app.post("/api/dems")
    async def post_dem(request: Request):
        text = (await request.body()).decode()
        try:
            did = store.put_dem(text)
        except dem_mod.DemError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"id": did}

    # ---- jobs ----
    def _submit(kind: str, rid: str, work) -> Job:
        job = Job(id=uuid.uuid4().hex[:12], kind=kind, result_id=None)
        jobs[job.id] = job

        def run():
            with job.lock:
                job.state = "running"
            try:
                work(job)
                with job.lock:
                    job.state = "done"
                    job.progress = 1.0
                    job.result_id = rid
            except Exception as exc:  # surfaced via the job, not the log
                with job.lock:
                    job.state = "failed"
                    job.error = str(exc)

        executor.submit(run)
        return job

    @app.post("/api/predict")
    def post_predict(body: dict = Body(...)):
        sid = body.get("scenario_id")
        did = body.get("dem_id")
        threads = int(body.get("threads", 1))
        try:
            scenario = store.get_scenario(sid)
        except KeyError:
            _not_found("scenario", str(sid))
        try:
            grid = store.get_dem(did)
        except KeyError:
            _not_found("dem", str(did))
        rid = results_mod.result_id(sid, did)

        def work(job: Job):
            if store.has_result(rid):
                return
            def on_progress(done, total):
                with job.lock:
                    job.progress = done / total
            rmap = predict_map(scenario, grid, threads=threads, progress_cb=on_progress)
            results_mod.write_prediction(rmap, scenario, did, store.result_dir(rid))

        job = _submit("predict", rid, work)
        return {"job_id": job.id, "result_id": rid}

    @app.post("/api/simulate")
    def post_simulate(body: dict = Body(...)):
        sid = body.get("scenario_id")
        did = body.get("dem_id")
        mc = body.get("mc", {})
        try:
            scenario = store.get_scenario(sid)
        except KeyError:
            _not_found("scenario", str(sid))
        try:
            grid = store.get_dem(did)
        except KeyError:
            _not_found("dem", str(did))
        rid = results_mod.result_id(sid, did + ":" + results_mod.text_hash(json.dumps(mc, sort_keys=True)), kind="simulate")

        def work(job: Job):
            if store.has_result(rid):
                return
            from uavrel.cli import _fault_from_doc

            truth_xy = mc.get("truth_xy")
            config = McConfig(
                trials=int(mc.get("trials", 10_000)),
                seed=int(mc.get("seed", 0)),
                truth_index=None if truth_xy is not None else int(mc.get("truth_index", 0)),
                truth_xy=tuple(truth_xy) if truth_xy is not None else None,
                fault=_fault_from_doc(mc.get("fault")),
                forced_mask=mc.get("forced_mask"),
            )
            ctx = build_context(scenario, grid)
            plan = compute_plan(config.truth_index if config.truth_index is not None else 0, ctx)
            report = run_trials(scenario, grid, plan, config)
            rdir = store.result_dir(rid)
            rdir.mkdir(parents=True, exist_ok=True)
            (rdir / results_mod.SUMMARY_NAME).write_text(
                json.dumps({"kind": "simulate", **report.to_dict()}, sort_keys=True, indent=2) + "\n"
            )

        job = _submit("simulate", rid, work)
        return {"job_id": job.id, "result_id": rid}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            _not_found("job", job_id)
        return job.to_dict()

    # ---- results ----
    @app.get("/api/results/{rid}")
    def get_result(rid: str):
        path = store.result_dir(rid) / results_mod.SUMMARY_NAME
        if not path.exists():
            _not_found("result", rid)
        return json.loads(path.read_text())

    @app.get("/api/results/{rid}/heatmap")
    def get_heatmap(rid: str):
        path = store.result_dir(rid) / results_mod.HEATMAP_NAME
        if not path.exists():
            _not_found("result", rid)
        return Response(content=path.read_text(), media_type="text/csv")

    @app.post("/api/vote")
    def post_vote(body: dict = Body(...)):
        rid = body.get("result_id")
        rdir = store.result_dir(str(rid))
        if not (rdir / results_mod.SUMMARY_NAME).exists():
            _not_found("result", str(rid))
        summary = json.loads((rdir / results_mod.SUMMARY_NAME).read_text())
        sid = summary.get("scenario_hash")
        did = summary.get("dem_hash")
        try:
            scenario = store.get_scenario(sid)
            grid = store.get_dem(did)
        except KeyError as exc:
            raise HTTPException(status_code=409, detail=f"stored inputs missing: {exc}")
        eta_t = float(body.get("eta_t", scenario.requirements.eta_t))
        rmap = predict_map(scenario, grid)
        table = build_table(grid, scenario)
        areas = hazard_mod.analyze(rmap, table, eta_t=eta_t, spacing=scenario.sample_spacing)
        return results_mod.hazard_report(areas, scenario.K, eta_t, sid, str(rid))

    return app
