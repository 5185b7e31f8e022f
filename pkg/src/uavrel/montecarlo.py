"""End-to-end stochastic validation of the prediction chain.

Each trial samples every SP's propagation condition, synthesizes TWR
range measurements (clock-drift noise plus any NLoS / internal-fault
biases), classifies the visibility pattern, and applies the detection
policy of the allocation plan: too few SPs means no service,
positioning-only patterns always alarm, excluded detection patterns
always alarm, and considered patterns run the LS solve and compare the
residual statistic against the pattern's threshold.

All random inputs are pre-generated from one seeded generator before the
(vectorized) trial pass, so results are reproducible and independent of
any worker partitioning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from uavrel.allocation import AllocationPlan
from uavrel.propagation import table_for_points
from uavrel.scenario import Scenario
from uavrel.twr import DEFAULT_BIAS_RANGE, FaultSpec, true_range

_LS_TOL = 1e-6
_LS_MAX_ITER = 50


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo run configuration.

    ``truth_index`` selects a sample-grid point as the true user
    location (``truth_xy`` overrides with an explicit point).  When
    ``forced_mask`` is set, exactly those SPs are visible in every trial
    and propagation conditions are not sampled; faults then come only
    from ``fault``.
    """

    trials: int
    seed: int = 0
    truth_index: int | None = None
    truth_xy: tuple[float, float] | None = None
    fault: FaultSpec | None = None
    forced_mask: int | None = None

    def __post_init__(self):
        if self.trials <= 0:
            raise ValueError(f"trials must be > 0, got {self.trials}")
        if self.truth_index is None and self.truth_xy is None:
            raise ValueError("one of truth_index / truth_xy is required")


@dataclass
class PatternStats:
    """Tally for one visibility pattern."""

    mask: int
    category: str          # "SU" | "PO" | "excluded" | "considered"
    trials: int = 0
    alarms: int = 0
    faulted: int = 0
    missed: int = 0        # faulted trials without an alarm
    err_x: list = field(default_factory=list)
    err_y: list = field(default_factory=list)

    def summary(self) -> dict:
        out = {
            "mask": self.mask,
            "category": self.category,
            "trials": self.trials,
            "alarms": self.alarms,
            "faulted": self.faulted,
            "missed": self.missed,
        }
        null_trials = self.trials - self.faulted
        null_alarms = self.alarms - (self.faulted - self.missed)
        if null_trials > 0:
            rate = null_alarms / null_trials
            out["fa_rate"] = rate
            out["fa_ci3"] = 3.0 * float(np.sqrt(max(rate * (1 - rate), 1e-300) / null_trials))
        if self.faulted > 0:
            rate = self.missed / self.faulted
            out["md_rate"] = rate
            out["md_ci3"] = 3.0 * float(np.sqrt(max(rate * (1 - rate), 1e-300) / self.faulted))
        if self.err_x:
            ex = np.abs(np.concatenate(self.err_x))
            ey = np.abs(np.concatenate(self.err_y))
            out["err_x"] = {
                "mean": float(ex.mean()),
                "std": float(np.concatenate(self.err_x).std()),
                "q50": float(np.quantile(ex, 0.5)),
                "q95": float(np.quantile(ex, 0.95)),
                "max": float(ex.max()),
            }
            out["err_y"] = {
                "mean": float(ey.mean()),
                "std": float(np.concatenate(self.err_y).std()),
                "q50": float(np.quantile(ey, 0.5)),
                "q95": float(np.quantile(ey, 0.95)),
                "max": float(ey.max()),
            }
        return out


@dataclass
class McReport:
    seed: int
    trials: int
    truth_xy: tuple[float, float]
    patterns: dict[int, PatternStats]
    metadata: dict = field(default_factory=dict)

    def total_trials(self) -> int:
        return sum(p.trials for p in self.patterns.values())

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "truth_xy": list(self.truth_xy),
            "patterns": {str(mask): p.summary() for mask, p in sorted(self.patterns.items())},
            **self.metadata,
        }


def batched_ls_solve(meas: np.ndarray, sps: np.ndarray, user_altitude: float, init_xy) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Newton over many trials at once.

    ``meas`` is (n, A); returns ((n, 2) estimates, (n,) squared residual
    norms in meters^2 — divide by sigma_c^2 for the normalized
    statistic).
    """
    n, A = meas.shape
    u = np.tile(np.asarray(init_xy, dtype=float), (n, 1))
    dz2 = (sps[:, 2] - user_altitude) ** 2
    active = np.ones(n, dtype=bool)
    for _ in range(_LS_MAX_ITER):
        dx = u[active, None, 0] - sps[None, :, 0]
        dy = u[active, None, 1] - sps[None, :, 1]
        dist = np.sqrt(dx**2 + dy**2 + dz2[None, :])
        res = meas[active] - dist
        jx = dx / dist
        jy = dy / dist
        a11 = np.sum(jx * jx, axis=1)
        a12 = np.sum(jx * jy, axis=1)
        a22 = np.sum(jy * jy, axis=1)
        b1 = np.sum(jx * res, axis=1)
        b2 = np.sum(jy * res, axis=1)
        det = a11 * a22 - a12 * a12
        sx = (a22 * b1 - a12 * b2) / det
        sy = (a11 * b2 - a12 * b1) / det
        u[active, 0] += sx
        u[active, 1] += sy
        moved = np.hypot(sx, sy) >= _LS_TOL
        idx = np.nonzero(active)[0]
        active[idx[~moved]] = False
        if not active.any():
            break
    dx = u[:, None, 0] - sps[None, :, 0]
    dy = u[:, None, 1] - sps[None, :, 1]
    dist = np.sqrt(dx**2 + dy**2 + dz2[None, :])
    res = meas - dist
    return u, np.sum(res**2, axis=1)


def run_trials(scenario: Scenario, grid, plan: AllocationPlan, config: McConfig) -> McReport:
    """Simulate the positioning/detection chain and tally outcomes."""
    samples = scenario.sample_points()
    if config.truth_xy is not None:
        truth_xy = np.asarray(config.truth_xy, dtype=float)
    else:
        truth_xy = samples[config.truth_index]
    point_table = table_for_points(grid, scenario, truth_xy[None, :])
    if config.truth_index is not None and plan.m != config.truth_index:
        raise ValueError(
            f"plan is for sample point {plan.m}, but the truth is point {config.truth_index}"
        )

    from uavrel.dem import elevation_at  # local import to keep module deps one-way

    truth_alt = float(elevation_at(grid, truth_xy[0], truth_xy[1])) + scenario.device_height
    sp_xyz = scenario.sp_positions()
    K = scenario.K
    sigma_c = scenario.twr.sigma_c
    ranges = np.array([true_range(sp_xyz[k], (truth_xy[0], truth_xy[1], truth_alt)) for k in range(K)])

    n = config.trials
    rng = np.random.default_rng(config.seed)
    # Pre-generate every random input: reproducible and partition-free.
    cond_u = rng.random((n, K))
    fault_u = rng.random((n, K))
    mag_u = rng.random((n, K))
    sign_u = rng.random((n, K))
    noise = rng.standard_normal((n, K))

    if config.forced_mask is not None:
        available = np.tile(
            np.array([(config.forced_mask >> k) & 1 for k in range(K)], dtype=bool), (n, 1)
        )
        nlos = np.zeros((n, K), dtype=bool)
        internal = np.zeros((n, K), dtype=bool)
    else:
        p_los = point_table.p_los[:, 0]
        p_nlos = point_table.p_nlos[:, 0]
        los = cond_u < p_los
        nlos = (~los) & (cond_u < p_los + p_nlos)
        available = los | nlos
        internal = los & (fault_u < scenario.twr.p_if)

    lo, hi = DEFAULT_BIAS_RANGE
    bias = np.zeros((n, K))
    bias[nlos] = lo + (hi - lo) * mag_u[nlos]
    mag = lo + (hi - lo) * mag_u
    bias[internal] = np.where(sign_u[internal] < 0.5, mag[internal], -mag[internal])
    if config.fault is not None:
        spec = config.fault
        for j, k in enumerate(spec.faulty_sp_indices):
            if spec.bias_model == "fixed_vector":
                bias[:, k] = spec.biases[j]
            elif spec.bias_model == "nlos_positive":
                bias[:, k] = spec.bias_range[0] + (spec.bias_range[1] - spec.bias_range[0]) * mag_u[:, k]
            else:
                m_ = spec.bias_range[0] + (spec.bias_range[1] - spec.bias_range[0]) * mag_u[:, k]
                bias[:, k] = np.where(sign_u[:, k] < 0.5, m_, -m_)

    meas = ranges[None, :] + sigma_c * noise + bias

    weights = np.int64(1) << np.arange(K)
    masks = available @ weights

    considered = plan.event_by_mask()
    patterns: dict[int, PatternStats] = {}
    init_xy = np.array(scenario.center, dtype=float)
    for mask in np.unique(masks):
        mask = int(mask)
        sel = masks == mask
        count = int(sel.sum())
        A = mask.bit_count()
        fault_present = (bias[sel] * available[sel]).any(axis=1)
        n_fault = int(fault_present.sum())
        if A <= 2:
            stats = PatternStats(mask=mask, category="SU", trials=count, faulted=n_fault)
            stats.missed = 0  # no service, no detection claim
            patterns[mask] = stats
            continue
        if A == 3:
            stats = PatternStats(mask=mask, category="PO", trials=count, alarms=count, faulted=n_fault)
            patterns[mask] = stats
            continue
        ev = considered.get(mask)
        if ev is None:
            stats = PatternStats(mask=mask, category="excluded", trials=count, alarms=count, faulted=n_fault)
            patterns[mask] = stats
            continue
        cols = np.nonzero(available[sel][0])[0]
        sub = meas[sel][:, cols]
        est, rss = batched_ls_solve(sub, sp_xyz[cols], truth_alt, init_xy)
        t_ls = rss / sigma_c**2
        alarm = t_ls >= ev.threshold
        stats = PatternStats(
            mask=mask,
            category="considered",
            trials=count,
            alarms=int(alarm.sum()),
            faulted=n_fault,
            missed=int((fault_present & ~alarm).sum()),
        )
        stats.err_x.append(est[:, 0] - truth_xy[0])
        stats.err_y.append(est[:, 1] - truth_xy[1])
        patterns[mask] = stats

    meta = {
        "bias_range_m": list(DEFAULT_BIAS_RANGE),
        "sigma_c": sigma_c,
        "forced_mask": config.forced_mask,
        "fault": None
        if config.fault is None
        else {
            "sp_indices": list(config.fault.faulty_sp_indices),
            "model": config.fault.bias_model,
            "biases": list(config.fault.biases),
        },
    }
    return McReport(
        seed=config.seed,
        trials=n,
        truth_xy=(float(truth_xy[0]), float(truth_xy[1])),
        patterns=patterns,
        metadata=meta,
    )
