"""Command-line entry points: predict | enhance | simulate | synth-dem | serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from uavrel import dem as dem_mod
from uavrel import hazard as hazard_mod
from uavrel import results as results_mod
from uavrel.mde import build_context, predict_map
from uavrel.montecarlo import McConfig, run_trials
from uavrel.propagation import build_table
from uavrel.scenario import ScenarioError, parse_scenario, scenario_hash, synth_dem
from uavrel.twr import FaultSpec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REQUIREMENT_UNMET = 2


def _load_inputs(scenario_path: str, dem_path: str):
    scenario_file = Path(scenario_path)
    dem_file = Path(dem_path)
    if not scenario_file.exists():
        raise FileNotFoundError(f"scenario file not found: {scenario_file}")
    if not dem_file.exists():
        raise FileNotFoundError(f"DEM file not found: {dem_file}")
    scenario = parse_scenario(scenario_file.read_text())
    dem_text = dem_file.read_text()
    grid = dem_mod.load_dem(dem_text, mission_bbox=scenario.mission_bbox(margin=2 * scenario.sample_spacing))
    return scenario, grid, results_mod.text_hash(dem_text)


def cmd_predict(args) -> int:
    scenario, grid, dem_id = _load_inputs(args.scenario, args.dem)
    rmap = predict_map(scenario, grid, threads=args.threads)
    summary = results_mod.write_prediction(rmap, scenario, dem_id, args.out)
    print(f"eta_star: {summary['eta_star']}")
    print(f"meets_requirement: {summary['meets_requirement']}")
    print(f"written: {args.out}")
    return EXIT_OK if summary["meets_requirement"] else EXIT_REQUIREMENT_UNMET


def cmd_enhance(args) -> int:
    scenario, grid, dem_id = _load_inputs(args.scenario, args.dem)
    summary = results_mod.load_prediction_summary(args.map)
    results_mod.verify_map_matches(scenario, summary)
    if summary.get("dem_hash") not in (None, dem_id):
        raise ValueError(
            f"DEM hash mismatch: map was built from {summary.get('dem_hash')}, got {dem_id}"
        )
    rmap = predict_map(scenario, grid, threads=args.threads)
    stored = results_mod.load_heatmap_etas(args.map)
    if len(stored) != rmap.M or not np.allclose(stored, rmap.eta, rtol=1e-12, atol=1e-12, equal_nan=True):
        raise ValueError("stored heatmap does not match this scenario/DEM (tampered or stale map)")
    table = build_table(grid, scenario)
    eta_t = scenario.requirements.eta_t
    areas = hazard_mod.analyze(rmap, table, eta_t=eta_t, spacing=scenario.sample_spacing)
    out = Path(args.out or args.map)
    out.mkdir(parents=True, exist_ok=True)
    report = results_mod.hazard_report(
        areas, scenario.K, eta_t, scenario_hash(scenario), summary.get("dem_hash", dem_id)
    )
    (out / "hazard.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    (out / "voting.csv").write_text(hazard_mod.voting_table_csv(areas, scenario.K))
    (out / "guidance.txt").write_text(report["guidance"])
    print(f"hazardous areas: {len(areas)}")
    print(f"written: {out}")
    return EXIT_OK


def _fault_from_doc(doc) -> FaultSpec | None:
    if not doc:
        return None
    return FaultSpec(
        faulty_sp_indices=tuple(int(i) for i in doc.get("sp_indices", [])),
        bias_model=doc.get("model", "fixed_vector"),
        biases=tuple(float(b) for b in doc.get("biases", [])),
        bias_range=tuple(doc.get("range", (50.0, 500.0))),
    )


def cmd_simulate(args) -> int:
    scenario, grid, dem_id = _load_inputs(args.scenario, args.dem)
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    truth_xy = doc.get("truth_xy")
    config = McConfig(
        trials=int(doc.get("trials", 10_000)),
        seed=seed,
        truth_index=None if truth_xy is not None else int(doc.get("truth_index", 0)),
        truth_xy=tuple(truth_xy) if truth_xy is not None else None,
        fault=_fault_from_doc(doc.get("fault")),
        forced_mask=doc.get("forced_mask"),
    )
    from uavrel.mde import compute_plan

    ctx = build_context(scenario, grid)
    plan = compute_plan(config.truth_index if config.truth_index is not None else 0, ctx)
    report = run_trials(scenario, grid, plan, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mc_report.json").write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    with open(out / "mc_patterns.csv", "w") as fh:
        fh.write("mask,category,trials,alarms,faulted,missed\n")
        for mask, stats in sorted(report.patterns.items()):
            fh.write(
                f"{mask},{stats.category},{stats.trials},{stats.alarms},{stats.faulted},{stats.missed}\n"
            )
    print(f"trials: {report.trials}")
    print(f"written: {out}")
    return EXIT_OK


def cmd_synth_dem(args) -> int:
    params = {}
    for item in args.param or []:
        key, _, value = item.partition("=")
        if not _:
            raise ValueError(f"--param expects key=value, got {item!r}")
        params[key] = float(value)
    grid = synth_dem(
        args.kind,
        cell_size=args.cell_size,
        half_extent=args.half_extent,
        seed=args.seed,
        **params,
    )
    dem_mod.write_dem(grid, args.out)
    print(f"written: {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from uavrel.service import create_app

    host, _, port = args.bind.partition(":")
    app = create_app(Path(args.store))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavrel",
        description="Reliability prediction and enhancement for single-UAV TWR positioning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="compute the reliability map for a scenario + DEM")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dem", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("enhance", help="segment hazardous areas and vote on their causes")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dem", required=True)
    p.add_argument("--map", required=True, help="directory written by predict")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("simulate", help="Monte Carlo validation run")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dem", required=True)
    p.add_argument("--config", default=None, help="MC config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth-dem", help="write a synthetic ESRI ASCII DEM")
    p.add_argument("--kind", required=True, choices=["flat", "plane", "gaussian_hills", "valley", "wall"])
    p.add_argument("--out", required=True)
    p.add_argument("--cell-size", type=float, default=10.0)
    p.add_argument("--half-extent", type=float, default=700.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--param", action="append", help="terrain parameter key=value (repeatable)")
    p.set_defaults(func=cmd_synth_dem)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--store", default="./uavrel-store")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, dem_mod.DemError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
