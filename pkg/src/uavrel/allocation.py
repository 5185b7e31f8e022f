"""FA-rate and MD-rate budget allocation across events, per sample point.

The mission budgets only the overall false-alarm and missed-detection
rates.  Allocation turns them into per-event quantities:

* FA side: positioning-only events always alarm, consuming their prior
  mass; detection events are sorted by ascending normal prior and the
  negligible head of the list is excluded (treated as always-alarm,
  conditional FA 1).  The remaining budget is spread proportionally to
  the normal priors, which makes the conditional FA equal across the
  considered events, and each event's threshold follows from it.
* MD side: the MD budget is split across considered events in
  proportion to their failure mass, then inside each event across
  failure events by the mirrored cutoff rule (ascending priors,
  negligible head excluded as always-missed, remainder split
  proportionally so conditional MD is equal), and finally halved
  between the x and y directions.

Every allocation runs independently per sample point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from uavrel import chi2
from uavrel.events import ObservationEvent
from uavrel.geometry import DOF_OFFSET

# Conditional rates are kept strictly inside (0, 1) so the chi-square
# inversions stay well posed.
RATE_EPS = 1e-15


def _clamp_rate(value: float) -> float:
    return min(max(value, RATE_EPS), 1.0 - RATE_EPS)


@dataclass
class EventAllocation:
    """Budgets and threshold for one considered observation event."""

    mask: int
    A: int
    dof: int
    obs_prior: float
    normal_prior: float
    cond_fa: float
    threshold: float
    fail_mass: float = 0.0
    md_budget: float = 0.0
    q_star: int | None = None
    excluded_fault_mass: float = 0.0
    cond_md: float | None = None
    md_x: float | None = None
    md_y: float | None = None
    fault_masks: np.ndarray | None = None   # considered fault patterns (global bits)
    fault_priors: np.ndarray | None = None
    fully_excluded: bool = False            # every failure event excluded


@dataclass
class AllocationPlan:
    """Per-sample-point allocation result."""

    m: int
    p_fa_req: float
    p_md_req: float
    feasible: bool
    po_mass: float
    g_star: int | None
    fa_excluded_mass: float
    excluded_event_masks: list[int] = field(default_factory=list)
    events: list[EventAllocation] = field(default_factory=list)

    def fa_consumed(self) -> float:
        """Conditional FA mass bound implied by the plan (for audits)."""
        total = self.po_mass + self.fa_excluded_mass
        total += sum(ev.cond_fa * ev.normal_prior for ev in self.events)
        return total

    def md_consumed(self) -> float:
        total = 0.0
        for ev in self.events:
            total += ev.excluded_fault_mass
            if not ev.fully_excluded and ev.fault_priors is not None:
                total += ev.cond_md * float(np.sum(ev.fault_priors))
        return total

    def event_by_mask(self) -> dict[int, EventAllocation]:
        return {ev.mask: ev for ev in self.events}


def _cutoff_index(sorted_values: np.ndarray, budget: float) -> int | None:
    """First index (0-based) where the ascending cumulative sum reaches
    the budget; None when the total never does."""
    cums = np.cumsum(sorted_values)
    hits = np.nonzero(cums >= budget)[0]
    return int(hits[0]) if len(hits) else None


def allocate_fa(
    det_events: list[ObservationEvent],
    po_mass: float,
    p_fa_req: float,
    m: int = 0,
    p_md_req: float = 0.0,
    dof_offset: int = DOF_OFFSET,
) -> AllocationPlan:
    """FA-rate allocation and thresholds over detection-class events.

    Events must carry priors.  Returns an infeasible plan (no crash)
    when the positioning-only mass alone exceeds the FA budget.
    """
    plan = AllocationPlan(
        m=m,
        p_fa_req=p_fa_req,
        p_md_req=p_md_req,
        feasible=True,
        po_mass=po_mass,
        g_star=None,
        fa_excluded_mass=0.0,
    )
    if po_mass >= p_fa_req:
        plan.feasible = False
        return plan

    if not det_events:
        return plan

    normal = np.array([ev.normal_prior for ev in det_events], dtype=float)
    order = np.argsort(normal, kind="stable")
    budget0 = p_fa_req - po_mass

    cut = _cutoff_index(normal[order], budget0)
    if cut is None:
        # Even alarming on every event stays within budget: everything
        # is excluded, nothing is considered.
        plan.excluded_event_masks = [det_events[i].mask for i in order]
        plan.fa_excluded_mass = float(normal.sum())
        plan.g_star = len(det_events) + 1
        return plan

    plan.g_star = cut + 1  # 1-based index of the first considered event
    excluded = order[:cut]
    considered = order[cut:]
    plan.excluded_event_masks = [det_events[i].mask for i in excluded]
    plan.fa_excluded_mass = float(normal[excluded].sum())

    remaining_budget = budget0 - plan.fa_excluded_mass
    considered_mass = float(normal[considered].sum())
    if remaining_budget >= considered_mass:
        # Always-alarm covers the remaining events too; migrate them all.
        plan.excluded_event_masks.extend(det_events[i].mask for i in considered)
        plan.fa_excluded_mass += considered_mass
        return plan

    cond_fa = _clamp_rate(remaining_budget / considered_mass)
    thresholds: dict[int, float] = {}
    for i in considered:
        ev = det_events[i]
        dof = ev.A - dof_offset
        if dof not in thresholds:
            thresholds[dof] = chi2.chi2_isf(cond_fa, dof)
        plan.events.append(
            EventAllocation(
                mask=ev.mask,
                A=ev.A,
                dof=dof,
                obs_prior=ev.prior,
                normal_prior=ev.normal_prior,
                cond_fa=cond_fa,
                threshold=thresholds[dof],
            )
        )
    return plan


def allocate_md(
    plan: AllocationPlan,
    failures_by_mask: dict[int, tuple[np.ndarray, np.ndarray]],
    p_md_req: float,
) -> AllocationPlan:
    """MD-rate allocation down to per-failure-event, per-direction budgets.

    ``failures_by_mask`` maps a considered event mask to its
    (fault_masks, priors) arrays covering all nonempty fault patterns.
    """
    plan.p_md_req = p_md_req
    if not plan.events:
        return plan

    for ev in plan.events:
        masks, priors = failures_by_mask[ev.mask]
        ev.fail_mass = float(np.sum(priors))
    total_fail = sum(ev.fail_mass for ev in plan.events)

    for ev in plan.events:
        masks, priors = failures_by_mask[ev.mask]
        ev.md_budget = p_md_req * ev.fail_mass / total_fail if total_fail > 0 else 0.0
        order = np.argsort(priors, kind="stable")
        sorted_priors = priors[order]
        cut = _cutoff_index(sorted_priors, ev.md_budget)
        if cut is None or ev.md_budget <= 0.0:
            ev.fully_excluded = True
            ev.q_star = None
            ev.excluded_fault_mass = ev.fail_mass
            ev.fault_masks = np.empty(0, dtype=np.int64)
            ev.fault_priors = np.empty(0)
            continue
        ev.q_star = cut + 1
        ev.excluded_fault_mass = float(sorted_priors[:cut].sum())
        kept = order[cut:]
        ev.fault_masks = np.asarray(masks)[kept]
        ev.fault_priors = priors[kept]
        remaining = ev.md_budget - ev.excluded_fault_mass
        ev.cond_md = _clamp_rate(remaining / float(ev.fault_priors.sum()))
        ev.md_x = ev.cond_md / 2.0
        ev.md_y = ev.cond_md / 2.0
    return plan


def write_plan_csv(plan: AllocationPlan, target) -> None:
    """Audit export: one row per considered (event, failure event)."""
    import csv

    close = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        fh = open(target, "w", newline="")
        close = True
    else:
        fh = target
    try:
        writer = csv.writer(fh)
        writer.writerow(["m", "event_mask", "class", "T_g", "conditional_fa", "fault_mask", "md_budget_x"])
        for ev in plan.events:
            if ev.fully_excluded or ev.fault_masks is None or not len(ev.fault_masks):
                writer.writerow([plan.m, ev.mask, "DET", repr(ev.threshold), repr(ev.cond_fa), "", ""])
                continue
            for fm in ev.fault_masks:
                writer.writerow(
                    [plan.m, ev.mask, "DET", repr(ev.threshold), repr(ev.cond_fa), int(fm), repr(ev.md_x)]
                )
    finally:
        if close:
            fh.close()
