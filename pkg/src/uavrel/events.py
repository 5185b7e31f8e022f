"""Observation-event and failure-event enumeration with priors.

An observation event is one visibility pattern of the K service points
(a bitmask); a failure event is a nonempty subset of an observation
event's available SPs whose measurements are biased.  SP statuses are
mutually independent, so all priors are plain products of per-SP
probabilities; K <= 16 keeps exact enumeration tractable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_K = 16

CLASS_SERVICE_UNAVAILABLE = "SU"
CLASS_POSITIONING_ONLY = "PO"
CLASS_DETECTION = "DET"

# Fewer than 3 SPs cannot position; exactly 3 position without redundancy;
# 4 or more support residual-based failure detection.
_PO_COUNT = 3


@dataclass
class ObservationEvent:
    mask: int
    A: int
    cls: str
    prior: float | None = None
    normal_prior: float | None = None

    @property
    def available_indices(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.mask.bit_length()) if self.mask >> k & 1)


@dataclass
class FailureEvent:
    parent_mask: int
    fault_mask: int
    F: int
    prior: float


def classify(available_count: int) -> str:
    if available_count < _PO_COUNT:
        return CLASS_SERVICE_UNAVAILABLE
    if available_count == _PO_COUNT:
        return CLASS_POSITIONING_ONLY
    return CLASS_DETECTION


@lru_cache(maxsize=8)
def _bit_matrix(K: int) -> np.ndarray:
    masks = np.arange(2**K, dtype=np.uint32)
    return (masks[:, None] >> np.arange(K)[None, :] & 1).astype(bool)


@lru_cache(maxsize=8)
def _popcounts(K: int) -> np.ndarray:
    return _bit_matrix(K).sum(axis=1)


def enumerate_observation_events(K: int) -> list[ObservationEvent]:
    """All 2^K visibility patterns with their service classes."""
    if not 1 <= K <= MAX_K:
        raise ValueError(f"K must be in [1, {MAX_K}], got {K}")
    pops = _popcounts(K)
    return [
        ObservationEvent(mask=mask, A=int(pops[mask]), cls=classify(int(pops[mask])))
        for mask in range(2**K)
    ]


def observation_prior_arrays(p_obtain: np.ndarray, p_block: np.ndarray, p_norm_o: np.ndarray):
    """Vectorized priors over all 2^K masks.

    Returns (priors, normal_priors): the event prior is the product of
    p_obtain over available SPs and p_block over unavailable ones; the
    normal prior additionally multiplies p_normal|obtain over the
    available SPs.
    """
    K = len(p_obtain)
    bits = _bit_matrix(K)
    priors = np.prod(np.where(bits, p_obtain, p_block), axis=1)
    normal = priors * np.prod(np.where(bits, p_norm_o, 1.0), axis=1)
    return priors, normal


def event_priors(events: list[ObservationEvent], table, m: int) -> list[ObservationEvent]:
    """Fill priors and normal priors for sample point m."""
    p_obtain, p_block, _, p_norm_o = table.point(m)
    priors, normal = observation_prior_arrays(p_obtain, p_block, p_norm_o)
    for ev in events:
        ev.prior = float(priors[ev.mask])
        ev.normal_prior = float(normal[ev.mask])
    return events


def failure_conditional_products(p_norm_o: np.ndarray, p_fail_o: np.ndarray) -> np.ndarray:
    """Conditional products over all 2^A fault patterns of A available SPs.

    Index bit i corresponds to the i-th entry of the input vectors being
    faulty; entry 0 is the all-normal product.
    """
    out = np.array([1.0])
    for pn, pf in zip(p_norm_o, p_fail_o):
        out = np.concatenate([out * pn, out * pf])
    return out


def failure_event_arrays(avail_indices, obs_prior: float, p_norm_o, p_fail_o):
    """(global fault masks, priors) for all nonempty fault patterns."""
    avail = np.asarray(avail_indices, dtype=np.int64)
    prods = failure_conditional_products(np.asarray(p_norm_o), np.asarray(p_fail_o))
    A = len(avail)
    local = np.arange(1, 2**A, dtype=np.int64)
    bits = (local[:, None] >> np.arange(A)[None, :] & 1).astype(bool)
    global_masks = bits @ (np.int64(1) << avail)
    return global_masks, obs_prior * prods[1:]


def enumerate_failure_events(obs: ObservationEvent, table, m: int) -> list[FailureEvent]:
    """All failure events within one detection-class observation event."""
    if obs.cls != CLASS_DETECTION:
        raise ValueError("failure events are only enumerated for DET observation events")
    if obs.prior is None:
        raise ValueError("observation event priors must be filled first")
    _, _, p_fail_o, p_norm_o = table.point(m)
    avail = obs.available_indices
    masks, priors = failure_event_arrays(
        avail, obs.prior, p_norm_o[list(avail)], p_fail_o[list(avail)]
    )
    pops = np.array([int(v).bit_count() for v in masks])
    return [
        FailureEvent(parent_mask=obs.mask, fault_mask=int(fm), F=int(F), prior=float(p))
        for fm, F, p in zip(masks, pops, priors)
    ]
