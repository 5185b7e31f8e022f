"""Worst-case fault slopes, minimum detectable errors, reliability maps.

For every considered failure event the worst fault direction maximizes
the ratio of squared estimate bias to the test statistic's
noncentrality; the minimum detectable error follows from that slope and
the noncentrality at which the missed-detection budget is met.  Per
sample point the prediction is the maximum over considered events and
both directions; the map's overall value is the maximum over sample
points.
"""

from __future__ import annotations

import csv
import io
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from uavrel import chi2, dem as dem_mod, events as events_mod
from uavrel.allocation import AllocationPlan, allocate_fa, allocate_md
from uavrel.events import (
    CLASS_DETECTION,
    CLASS_POSITIONING_ONLY,
    ObservationEvent,
    failure_event_arrays,
    _bit_matrix,
    _popcounts,
)
from uavrel.geometry import DOF_OFFSET, NormalizedGeometry, build_geometry
from uavrel.propagation import PropagationTable, build_table
from uavrel.scenario import Scenario, scenario_hash

# Relative eigenvalue floor below which a restricted residual projector
# is treated as singular (unbounded failure slope).
_SINGULAR_RTOL = 1e-10

STATUS_OK = "ok"
STATUS_UNBOUNDED = "unbounded"
STATUS_UNAVAILABLE = "unavailable"


class UnboundedSlopeError(RuntimeError):
    pass


def worst_slope(geom: NormalizedGeometry, fault_indices, direction: str):
    """Largest failure slope over faults supported on the given indices.

    ``fault_indices`` are row positions into the geometry.  Returns
    (slope in meters^2, unscaled worst direction as an A-vector); the
    slope is +inf with a None vector when the restricted projector is
    singular (the fault set can hide inside the estimator's null space).
    """
    idx = np.asarray(sorted(fault_indices), dtype=int)
    if len(idx) == 0:
        raise ValueError("fault_indices must be nonempty")
    s_d = geom.s_x if direction == "x" else geom.s_y
    v = s_d[idx]
    M = geom.P_r[np.ix_(idx, idx)]
    w, Q = np.linalg.eigh(M)
    if w[0] <= _SINGULAR_RTOL * max(w[-1], 1e-300):
        return np.inf, None
    y = Q.T @ v
    beta = Q @ (y / w)
    slope = float(v @ beta)
    bvec = np.zeros(geom.A)
    bvec[idx] = beta
    return slope, bvec


def event_mde(
    geom: NormalizedGeometry,
    fault_indices,
    T: float,
    md_budget: float,
    direction: str = "x",
):
    """(eta, lambda, worst fault) for one failure event and direction.

    The worst fault vector is scaled so its projected energy equals the
    noncentrality that meets the MD budget at threshold T; eta is then
    the estimate bias it causes.  Unbounded slopes propagate as
    eta = +inf.
    """
    if T <= 0:
        raise ValueError(f"T must be > 0, got {T}")
    if not 0 < md_budget < 1:
        raise ValueError(f"md_budget must be in (0, 1), got {md_budget}")
    slope, bvec = worst_slope(geom, fault_indices, direction)
    if np.isinf(slope):
        return np.inf, np.nan, None
    lam = chi2.solve_noncentrality(T, geom.dof, md_budget)
    eta = float(np.sqrt(slope * lam))
    if slope == 0.0 or lam == 0.0:
        return eta, lam, np.zeros(geom.A)
    return eta, lam, bvec * np.sqrt(lam / slope)


@dataclass(frozen=True)
class PointResult:
    """Per-sample-point prediction."""

    m: int
    eta_x: float
    eta_y: float
    eta: float
    status: str
    u_star: int   # largest unavailable-SP count over considered events
    f_star: int   # largest fault-SP count over considered failure events
    n_considered_events: int
    n_considered_failures: int


@dataclass(frozen=True)
class PredictionContext:
    """Everything a per-point prediction needs besides the point index."""

    sp_xyz: np.ndarray
    samples_xy: np.ndarray
    sample_alt: np.ndarray
    sigma_c: float
    p_fa_req: float
    p_md_req: float
    dof_offset: int
    table: PropagationTable

    @property
    def K(self) -> int:
        return self.sp_xyz.shape[0]

    @property
    def M(self) -> int:
        return self.samples_xy.shape[0]


def build_context(scenario: Scenario, grid, table=None, dof_offset: int = DOF_OFFSET) -> PredictionContext:
    samples = scenario.sample_points()
    alt = dem_mod.elevation_at(grid, samples[:, 0], samples[:, 1]) + scenario.device_height
    if table is None:
        table = build_table(grid, scenario)
    return PredictionContext(
        sp_xyz=scenario.sp_positions(),
        samples_xy=samples,
        sample_alt=np.atleast_1d(alt),
        sigma_c=scenario.twr.sigma_c,
        p_fa_req=scenario.requirements.p_fa,
        p_md_req=scenario.requirements.p_md,
        dof_offset=dof_offset,
        table=table,
    )


def compute_plan(m: int, ctx: PredictionContext) -> AllocationPlan:
    """FA and MD allocation for sample point m."""
    p_obtain, p_block, p_fail_o, p_norm_o = ctx.table.point(m)
    priors, normals = events_mod.observation_prior_arrays(p_obtain, p_block, p_norm_o)
    pops = _popcounts(ctx.K)
    po_mass = float(priors[pops == 3].sum())
    det_masks = np.nonzero(pops >= 4)[0]
    det_events = [
        ObservationEvent(
            mask=int(mask),
            A=int(pops[mask]),
            cls=CLASS_DETECTION,
            prior=float(priors[mask]),
            normal_prior=float(normals[mask]),
        )
        for mask in det_masks
    ]
    plan = allocate_fa(
        det_events, po_mass, ctx.p_fa_req, m=m, p_md_req=ctx.p_md_req, dof_offset=ctx.dof_offset
    )
    if not plan.events:
        return plan
    bits = _bit_matrix(ctx.K)
    failures = {}
    for ev in plan.events:
        avail = np.nonzero(bits[ev.mask])[0]
        failures[ev.mask] = failure_event_arrays(
            avail, ev.obs_prior, p_norm_o[avail], p_fail_o[avail]
        )
    return allocate_md(plan, failures, ctx.p_md_req)


def _event_etas(geom: NormalizedGeometry, local_faults: list[np.ndarray], lam: float):
    """Max eta over the event's considered fault sets, per direction.

    Returns (eta_x, eta_y, any_unbounded).  Fault sets are grouped by
    size so the restricted-projector eigendecompositions batch.
    """
    if lam == 0.0:
        return 0.0, 0.0, False
    best = {"x": 0.0, "y": 0.0}
    unbounded = False
    by_size: dict[int, list[np.ndarray]] = {}
    for idx in local_faults:
        by_size.setdefault(len(idx), []).append(idx)

    diag = np.diag(geom.P_r)
    for size, groups in by_size.items():
        idx_arr = np.vstack(groups)
        if size == 1:
            cols = idx_arr[:, 0]
            d = diag[cols]
            bad = d <= _SINGULAR_RTOL
            if np.any(bad):
                unbounded = True
            good = ~bad
            if np.any(good):
                sx = geom.s_x[cols[good]] ** 2 / d[good]
                sy = geom.s_y[cols[good]] ** 2 / d[good]
                best["x"] = max(best["x"], float(sx.max()))
                best["y"] = max(best["y"], float(sy.max()))
            continue
        M = geom.P_r[idx_arr[:, :, None], idx_arr[:, None, :]]
        w, Q = np.linalg.eigh(M)
        singular = w[:, 0] <= _SINGULAR_RTOL * np.maximum(w[:, -1], 1e-300)
        if np.any(singular):
            unbounded = True
        ok = ~singular
        if np.any(ok):
            vx = geom.s_x[idx_arr[ok]]
            vy = geom.s_y[idx_arr[ok]]
            yx = np.einsum("nij,ni->nj", Q[ok], vx)
            yy = np.einsum("nij,ni->nj", Q[ok], vy)
            sx = np.sum(yx**2 / w[ok], axis=1)
            sy = np.sum(yy**2 / w[ok], axis=1)
            best["x"] = max(best["x"], float(sx.max()))
            best["y"] = max(best["y"], float(sy.max()))
    eta_x = np.inf if unbounded else float(np.sqrt(best["x"] * lam))
    eta_y = np.inf if unbounded else float(np.sqrt(best["y"] * lam))
    return eta_x, eta_y, unbounded


def predict_sample(m: int, ctx: PredictionContext, plan: AllocationPlan) -> PointResult:
    """Reliability prediction for one sample point under a filled plan."""
    if plan.m != m:
        raise ValueError(f"plan is for sample point {plan.m}, not {m}")
    u_star = 0
    f_star = 0
    eta_x = eta_y = 0.0
    any_considered_failure = False
    unbounded = False

    # Group lambda solves by (dof); every considered event at this point
    # shares one conditional FA so T is a function of dof alone.
    groups: dict[tuple[int, float], list] = {}
    live_events = [ev for ev in plan.events if not ev.fully_excluded and len(ev.fault_masks)]
    for ev in live_events:
        groups.setdefault((ev.dof, ev.threshold), []).append(ev)
    lam_by_mask: dict[int, float] = {}
    for (dof, T), evs in groups.items():
        mds = np.array([ev.md_x for ev in evs])
        lams = chi2.solve_noncentrality_many(T, dof, mds)
        for ev, lam in zip(evs, lams):
            lam_by_mask[ev.mask] = float(lam)

    point_xyz = np.array(
        [ctx.samples_xy[m, 0], ctx.samples_xy[m, 1], ctx.sample_alt[m]]
    )
    bits = _bit_matrix(ctx.K)
    for ev in plan.events:
        u_star = max(u_star, ctx.K - ev.A)
        if ev.fully_excluded or ev.fault_masks is None or not len(ev.fault_masks):
            continue
        any_considered_failure = True
        avail = np.nonzero(bits[ev.mask])[0]
        local_pos = np.full(ctx.K, -1, dtype=int)
        local_pos[avail] = np.arange(len(avail))
        geom = build_geometry(
            ctx.sp_xyz[avail], point_xyz, ctx.sigma_c, dof_offset=ctx.dof_offset
        )
        local_faults = []
        for fm in ev.fault_masks:
            ks = [k for k in range(ctx.K) if (int(fm) >> k) & 1]
            local_faults.append(local_pos[ks])
            f_star = max(f_star, len(ks))
        ex, ey, ub = _event_etas(geom, local_faults, lam_by_mask[ev.mask])
        unbounded = unbounded or ub
        eta_x = max(eta_x, ex)
        eta_y = max(eta_y, ey)

    if not any_considered_failure:
        return PointResult(
            m=m,
            eta_x=np.nan,
            eta_y=np.nan,
            eta=np.nan,
            status=STATUS_UNAVAILABLE,
            u_star=u_star if plan.events else 0,
            f_star=0,
            n_considered_events=len(plan.events),
            n_considered_failures=0,
        )
    status = STATUS_UNBOUNDED if (np.isinf(eta_x) or np.isinf(eta_y)) else STATUS_OK
    return PointResult(
        m=m,
        eta_x=eta_x,
        eta_y=eta_y,
        eta=max(eta_x, eta_y),
        status=status,
        u_star=u_star,
        f_star=f_star,
        n_considered_events=len(plan.events),
        n_considered_failures=sum(
            len(ev.fault_masks) for ev in plan.events if ev.fault_masks is not None
        ),
    )


@dataclass
class ReliabilityMap:
    """Per-sample-point minimum detectable errors plus the overall value."""

    xy: np.ndarray
    eta_x: np.ndarray
    eta_y: np.ndarray
    eta: np.ndarray
    status: list[str]
    u_star: np.ndarray
    f_star: np.ndarray
    eta_star: float
    metadata: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.eta)

    def hazard_candidates(self) -> np.ndarray:
        return np.array([s != STATUS_OK for s in self.status])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["m", "x", "y", "eta_x", "eta_y", "eta", "status"])
        for m in range(self.M):
            writer.writerow(
                [
                    m,
                    repr(float(self.xy[m, 0])),
                    repr(float(self.xy[m, 1])),
                    repr(float(self.eta_x[m])),
                    repr(float(self.eta_y[m])),
                    repr(float(self.eta[m])),
                    self.status[m],
                ]
            )
        return buf.getvalue()

    def summary_dict(self) -> dict:
        finite = np.isfinite(self.eta)
        eta_star = self.eta_star
        return {
            "eta_star": None if not np.isfinite(eta_star) else float(eta_star),
            "unbounded": bool(np.isinf(eta_star)),
            "n_points": int(self.M),
            "n_ok": int(sum(s == STATUS_OK for s in self.status)),
            "n_unbounded": int(sum(s == STATUS_UNBOUNDED for s in self.status)),
            "n_unavailable": int(sum(s == STATUS_UNAVAILABLE for s in self.status)),
            "max_finite_eta": float(self.eta[finite].max()) if finite.any() else None,
            **self.metadata,
        }

    def summary_text(self) -> str:
        lines = []
        for key, value in self.summary_dict().items():
            lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n"


_WORKER_CTX: PredictionContext | None = None


def _init_worker(ctx: PredictionContext):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _point_task(m: int) -> PointResult:
    return predict_sample(m, _WORKER_CTX, compute_plan(m, _WORKER_CTX))


def predict_map(
    scenario: Scenario,
    grid,
    threads: int = 1,
    progress_cb=None,
    dof_offset: int = DOF_OFFSET,
) -> ReliabilityMap:
    """Reliability prediction over the whole uncertainty area.

    Pure function of (scenario, DEM): byte-identical output for
    identical inputs regardless of worker count.  Points whose plans
    leave nothing considered are reported as service-unavailable and
    excluded from the overall maximum; unbounded points participate
    (eta* = +inf) and are flagged.
    """
    grid.validate_extent(*scenario.mission_bbox(margin=2 * scenario.sample_spacing))
    ctx = build_context(scenario, grid, dof_offset=dof_offset)
    M = ctx.M

    results: list[PointResult | None] = [None] * M
    if threads > 1:
        with multiprocessing.get_context("fork").Pool(
            processes=threads, initializer=_init_worker, initargs=(ctx,)
        ) as pool:
            for done, res in enumerate(pool.imap(_point_task, range(M), chunksize=32)):
                results[res.m] = res
                if progress_cb is not None:
                    progress_cb(done + 1, M)
    else:
        _init_worker(ctx)
        for m in range(M):
            results[m] = _point_task(m)
            if progress_cb is not None and (m % 32 == 31 or m == M - 1):
                progress_cb(m + 1, M)

    eta = np.array([r.eta for r in results])
    status = [r.status for r in results]
    valid = np.array([s != STATUS_UNAVAILABLE for s in status])
    eta_star = float(np.max(eta[valid])) if valid.any() else float("nan")
    return ReliabilityMap(
        xy=ctx.samples_xy,
        eta_x=np.array([r.eta_x for r in results]),
        eta_y=np.array([r.eta_y for r in results]),
        eta=eta,
        status=status,
        u_star=np.array([r.u_star for r in results], dtype=int),
        f_star=np.array([r.f_star for r in results], dtype=int),
        eta_star=eta_star,
        metadata={
            "scenario_hash": scenario_hash(scenario),
            "sigma_c": ctx.sigma_c,
            "dof_offset": dof_offset,
            "eta_req": scenario.requirements.eta_req,
            "eta_t": scenario.requirements.eta_t,
        },
    )
