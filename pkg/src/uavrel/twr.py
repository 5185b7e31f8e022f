"""Two-way-ranging timing model, clock-drift noise, and fault biases.

TWR avoids clock synchronization between the platform and the user: the
round trip cancels the unknown clock bias, leaving an error dominated by
the user's clock drift over the response delay.  That error is modeled
as zero-mean Gaussian noise whose std follows from the oscillator's
crystal tolerance; NLoS propagation and internal equipment faults add
large biases on top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uavrel.propagation import SPEED_OF_LIGHT

# Default bias magnitude window (meters) for synthetic faults.  Fault
# magnitudes are configuration, not physics: they only need to be much
# larger than the ranging noise.
DEFAULT_BIAS_RANGE = (50.0, 500.0)


@dataclass(frozen=True)
class TwrParams:
    """Ranging-protocol parameters; sigma_c is derived, in meters."""

    tau_d: float = 5e-3    # response delay, s
    o_u: float = 10e-6     # user oscillator crystal tolerance, dimensionless
    p_if: float = 1e-6     # prior probability of an internal fault
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.tau_d <= 0:
            raise ValueError(f"tau_d must be > 0, got {self.tau_d}")
        if self.o_u <= 0:
            raise ValueError(f"o_u must be > 0, got {self.o_u}")
        if not 0.0 <= self.p_if <= 1.0:
            raise ValueError(f"p_if must be in [0, 1], got {self.p_if}")

    @property
    def sigma_c(self) -> float:
        return clock_noise_sigma(self, self.c)


@dataclass(frozen=True)
class FaultSpec:
    """Which SPs are faulted in simulation and how biases are drawn.

    bias_model:
      * "fixed_vector": ``biases`` gives one bias (meters) per faulty SP.
      * "nlos_positive": uniform positive draw from ``bias_range``.
      * "internal": uniform magnitude from ``bias_range`` with random sign.
    """

    faulty_sp_indices: tuple[int, ...] = ()
    bias_model: str = "fixed_vector"
    biases: tuple[float, ...] = ()
    bias_range: tuple[float, float] = DEFAULT_BIAS_RANGE

    def __post_init__(self):
        if self.bias_model not in ("fixed_vector", "nlos_positive", "internal"):
            raise ValueError(f"unknown bias_model {self.bias_model!r}")
        if self.bias_model == "fixed_vector":
            if len(self.biases) != len(self.faulty_sp_indices):
                raise ValueError("fixed_vector needs one bias per faulty SP")
            if not all(np.isfinite(b) for b in self.biases):
                raise ValueError("fixed_vector biases must be finite")
        if self.bias_range[0] <= 0 or self.bias_range[1] < self.bias_range[0]:
            raise ValueError(f"bad bias_range {self.bias_range}")

    def draw(self, rng: np.random.Generator, sp_index: int) -> float:
        if self.bias_model == "fixed_vector":
            return self.biases[self.faulty_sp_indices.index(sp_index)]
        lo, hi = self.bias_range
        mag = rng.uniform(lo, hi)
        if self.bias_model == "nlos_positive":
            return mag
        return mag if rng.uniform() < 0.5 else -mag


def clock_noise_sigma(params: TwrParams, c: float = SPEED_OF_LIGHT) -> float:
    """Std of the clock-drift ranging error: c * tau_d * o_u / 6."""
    return c * params.tau_d * params.o_u / 6.0


def true_range(sp, user) -> float:
    """Euclidean 3-D distance between an SP and a user location."""
    sp = np.asarray(sp, dtype=float)
    user = np.asarray(user, dtype=float)
    return float(np.linalg.norm(sp - user))


def synthesize_measurement(range_m: float, sigma_c: float, fault_bias: float, rng: np.random.Generator) -> float:
    """range + N(0, sigma_c^2) + bias; deterministic given the stream state."""
    if sigma_c < 0:
        raise ValueError(f"sigma_c must be >= 0, got {sigma_c}")
    noise = rng.standard_normal() * sigma_c if sigma_c > 0 else 0.0
    return range_m + noise + fault_bias


def simulate_twr_exchange(
    range_m: float,
    params: TwrParams,
    delta_u: float,
    e_u: float = 0.0,
    e_b: float = 0.0,
    c: float = SPEED_OF_LIGHT,
    delta_b: float = 0.0,
) -> float:
    """Exact ToF estimation error (seconds) of one message exchange.

    Plays out the request/response timeline with drifting clocks: the
    platform drift is zero by default (high-grade oscillator) but can be
    supplied for sensitivity studies.  The result is the exact error the
    half-round-trip estimator commits; its first-order approximation is
    -tau_d * delta_u / 2 + e_u / 2 + e_b / 2.
    """
    if 1.0 + delta_u <= 0:
        raise ValueError("1 + delta_u must be > 0")
    tau_f = range_m / c
    # Round trip as seen by the platform clock; the unknown clock bias
    # and the send timestamp cancel in the estimator and are omitted.
    round_trip = (
        2.0 * tau_f * (1.0 + delta_b)
        + (e_u + params.tau_d) * (1.0 + delta_b) / (1.0 + delta_u)
        + e_b
    )
    tof_est = 0.5 * (round_trip - params.tau_d)
    return tof_est - tau_f


def approx_tof_error(params: TwrParams, delta_u: float, e_u: float = 0.0, e_b: float = 0.0) -> float:
    """First-order ToF error used by the measurement model."""
    return -params.tau_d * delta_u / 2.0 + e_u / 2.0 + e_b / 2.0
