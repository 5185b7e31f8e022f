"""Observation/failure event enumeration and prior partitions."""

import numpy as np
import pytest

from uavrel import events
from uavrel.propagation import PropagationTable


def _table_from_vectors(p_obtain, p_fail_o):
    p_obtain = np.asarray(p_obtain, dtype=float)
    p_fail_o = np.asarray(p_fail_o, dtype=float)
    K = len(p_obtain)
    shape = (K, 1)
    return PropagationTable(
        p_los=np.zeros(shape),
        p_nlos=np.zeros(shape),
        p_block=(1.0 - p_obtain).reshape(shape),
        p_obtain=p_obtain.reshape(shape),
        p_fail_o=p_fail_o.reshape(shape),
        p_norm_o=(1.0 - p_fail_o).reshape(shape),
    )


def test_event_counts_k4():
    evs = events.enumerate_observation_events(4)
    assert len(evs) == 16
    assert sum(e.cls == "SU" for e in evs) == 11
    assert sum(e.cls == "PO" for e in evs) == 4
    assert sum(e.cls == "DET" for e in evs) == 1


def test_event_counts_k8():
    evs = events.enumerate_observation_events(8)
    assert len(evs) == 256
    assert sum(e.cls == "SU" for e in evs) == 37
    assert sum(e.cls == "PO" for e in evs) == 56
    assert sum(e.cls == "DET" for e in evs) == 163


def test_empty_mask_is_su():
    evs = events.enumerate_observation_events(5)
    assert evs[0].mask == 0 and evs[0].cls == "SU"


def test_k_bounds():
    with pytest.raises(ValueError):
        events.enumerate_observation_events(0)
    with pytest.raises(ValueError):
        events.enumerate_observation_events(17)


def test_priors_certain_visibility():
    table = _table_from_vectors([1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
    evs = events.event_priors(events.enumerate_observation_events(3), table, 0)
    for ev in evs:
        assert ev.prior == (1.0 if ev.mask == 0b111 else 0.0)


def test_priors_hand_product_k2():
    table = _table_from_vectors([0.9, 0.8], [0.0, 0.0])
    evs = events.event_priors(events.enumerate_observation_events(2), table, 0)
    by_mask = {ev.mask: ev.prior for ev in evs}
    assert by_mask[0b01] == pytest.approx(0.9 * 0.2, abs=1e-15)


def test_priors_partition_of_unity():
    rng = np.random.default_rng(21)
    for _ in range(20):
        K = int(rng.integers(2, 9))
        p_obtain = rng.uniform(0.0, 1.0, K)
        table = _table_from_vectors(p_obtain, rng.uniform(0.0, 1.0, K))
        evs = events.event_priors(events.enumerate_observation_events(K), table, 0)
        assert abs(sum(e.prior for e in evs) - 1.0) <= 1e-12


def test_failure_event_count():
    table = _table_from_vectors([0.9] * 4, [0.1] * 4)
    evs = events.event_priors(events.enumerate_observation_events(4), table, 0)
    det = [e for e in evs if e.cls == "DET"][0]
    fails = events.enumerate_failure_events(det, table, 0)
    assert len(fails) == 15


def test_failure_partition_identity():
    rng = np.random.default_rng(22)
    for _ in range(10):
        K = 5
        table = _table_from_vectors(rng.uniform(0.2, 1.0, K), rng.uniform(0.0, 1.0, K))
        evs = events.event_priors(events.enumerate_observation_events(K), table, 0)
        for det in (e for e in evs if e.cls == "DET"):
            fails = events.enumerate_failure_events(det, table, 0)
            total = det.normal_prior + sum(f.prior for f in fails)
            assert total == pytest.approx(det.prior, abs=1e-12)


def test_single_fault_prior_hand_value():
    table = _table_from_vectors([1.0] * 4, [0.1] * 4)
    evs = events.event_priors(events.enumerate_observation_events(4), table, 0)
    det = [e for e in evs if e.mask == 0b1111][0]
    fails = events.enumerate_failure_events(det, table, 0)
    singles = [f for f in fails if f.F == 1]
    assert len(singles) == 4
    for f in singles:
        assert f.prior == pytest.approx(det.prior * 0.9**3 * 0.1, rel=1e-12)


def test_priors_permutation_equivariance():
    rng = np.random.default_rng(23)
    p_obtain = rng.uniform(0.3, 1.0, 6)
    p_fail = rng.uniform(0.0, 0.5, 6)
    perm = np.array([4, 2, 0, 5, 1, 3])
    t1 = _table_from_vectors(p_obtain, p_fail)
    t2 = _table_from_vectors(p_obtain[perm], p_fail[perm])
    evs1 = events.event_priors(events.enumerate_observation_events(6), t1, 0)
    evs2 = events.event_priors(events.enumerate_observation_events(6), t2, 0)
    by_mask1 = {e.mask: e.prior for e in evs1}
    for ev2 in evs2:
        # Map the permuted mask back to the original SP labels.
        orig_mask = 0
        for new_bit, old_bit in enumerate(perm):
            if ev2.mask >> new_bit & 1:
                orig_mask |= 1 << old_bit
        assert ev2.prior == pytest.approx(by_mask1[orig_mask], rel=1e-12)


def test_failure_events_require_det_class():
    table = _table_from_vectors([0.9] * 4, [0.1] * 4)
    evs = events.event_priors(events.enumerate_observation_events(4), table, 0)
    po = [e for e in evs if e.cls == "PO"][0]
    with pytest.raises(ValueError):
        events.enumerate_failure_events(po, table, 0)
