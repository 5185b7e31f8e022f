"""Hazard identification, 8-connected segmentation, and voting."""

import numpy as np
import pytest

from uavrel import hazard
from uavrel.mde import ReliabilityMap
from uavrel.propagation import ChannelParams, PropagationTable
from uavrel.scenario import Scenario, synth_dem


def _map_from_eta(eta, spacing=10.0, statuses=None, eta_x=None, eta_y=None, u_star=None, f_star=None):
    eta = np.asarray(eta, dtype=float)
    n = len(eta)
    side = int(np.ceil(np.sqrt(n)))
    xs = spacing * (np.arange(n) % side)
    ys = -spacing * (np.arange(n) // side)
    xy = np.column_stack([xs, ys])
    statuses = statuses or ["ok"] * n
    with np.errstate(invalid="ignore"):
        eta_star = float(np.nanmax(eta)) if np.isfinite(eta).any() else float("nan")
    return ReliabilityMap(
        xy=xy,
        eta_x=np.asarray(eta_x if eta_x is not None else eta, dtype=float),
        eta_y=np.asarray(eta_y if eta_y is not None else eta, dtype=float),
        eta=eta,
        status=list(statuses),
        u_star=np.asarray(u_star if u_star is not None else np.ones(n), dtype=int),
        f_star=np.asarray(f_star if f_star is not None else np.ones(n), dtype=int),
        eta_star=eta_star,
    )


def test_identify_empty_below_threshold():
    rmap = _map_from_eta([1.0, 5.0, 17.9])
    assert not hazard.identify(rmap, 18.0).any()


def test_identify_boundary_is_strict():
    rmap = _map_from_eta([18.0, 18.0 + 1e-9])
    got = hazard.identify(rmap, 18.0)
    assert not got[0] and got[1]


def test_identify_special_statuses_are_hazardous():
    rmap = _map_from_eta([1.0, np.inf, np.nan], statuses=["ok", "unbounded", "unavailable"])
    assert list(hazard.identify(rmap, 18.0)) == [False, True, True]


def test_identify_monotone_in_threshold():
    rng = np.random.default_rng(50)
    rmap = _map_from_eta(rng.uniform(0.0, 40.0, 200))
    last = None
    for eta_t in np.linspace(1.0, 39.0, 20):
        got = hazard.identify(rmap, float(eta_t))
        if last is not None:
            assert np.all(got <= last)
        last = got


def test_segment_diagonal_merges():
    xy = np.array([[0.0, 0.0], [10.0, -10.0]])
    areas = hazard.segment(xy, np.array([True, True]), 10.0)
    assert len(areas) == 1 and set(areas[0]) == {0, 1}


def test_segment_gap_splits():
    xy = np.array([[0.0, 0.0], [20.0, 0.0]])
    areas = hazard.segment(xy, np.array([True, True]), 10.0)
    assert len(areas) == 2


def _flood_fill_labels(mask):
    # Independent reference labeling on a dense grid.
    from collections import deque

    labels = np.zeros(mask.shape, dtype=int)
    current = 0
    for i in range(mask.shape[0]):
        for j in range(mask.shape[1]):
            if mask[i, j] and labels[i, j] == 0:
                current += 1
                queue = deque([(i, j)])
                labels[i, j] = current
                while queue:
                    a, b = queue.popleft()
                    for da in (-1, 0, 1):
                        for db in (-1, 0, 1):
                            na, nb = a + da, b + db
                            if (
                                0 <= na < mask.shape[0]
                                and 0 <= nb < mask.shape[1]
                                and mask[na, nb]
                                and labels[na, nb] == 0
                            ):
                                labels[na, nb] = current
                                queue.append((na, nb))
    return labels, current


def test_segment_matches_flood_fill_oracle():
    rng = np.random.default_rng(51)
    for _ in range(100):
        mask = rng.random((50, 50)) < 0.35
        ii, jj = np.meshgrid(np.arange(50), np.arange(50), indexing="ij")
        xy = np.column_stack([jj.ravel() * 10.0, -ii.ravel() * 10.0])
        flat = mask.ravel()
        areas = hazard.segment(xy, flat, 10.0)
        labels, n_components = _flood_fill_labels(mask)
        assert len(areas) == n_components
        # Membership must induce the same partition.
        flat_labels = labels.ravel()
        for members in areas:
            got = {flat_labels[m] for m in members}
            assert len(got) == 1
        assert sum(len(a) for a in areas) == int(flat.sum())


def test_segmentation_is_partition():
    rng = np.random.default_rng(52)
    mask = rng.random((30, 30)) < 0.4
    ii, jj = np.meshgrid(np.arange(30), np.arange(30), indexing="ij")
    xy = np.column_stack([jj.ravel() * 5.0, -ii.ravel() * 5.0])
    areas = hazard.segment(xy, mask.ravel(), 5.0)
    seen = set()
    for members in areas:
        for m in members:
            assert m not in seen
            seen.add(m)
    assert seen == set(np.nonzero(mask.ravel())[0])


def _uniform_table(K, p_block, p_fail):
    shape = (K, 1)
    return PropagationTable(
        p_los=np.zeros(shape),
        p_nlos=np.zeros(shape),
        p_block=np.full(shape, 0.0) + np.asarray(p_block).reshape(K, 1),
        p_obtain=1.0 - np.asarray(p_block).reshape(K, 1),
        p_fail_o=np.asarray(p_fail).reshape(K, 1),
        p_norm_o=1.0 - np.asarray(p_fail).reshape(K, 1),
    )


def _table_cols(K, M, p_block_col, p_fail_col):
    return PropagationTable(
        p_los=np.zeros((K, M)),
        p_nlos=np.zeros((K, M)),
        p_block=np.tile(np.asarray(p_block_col).reshape(K, 1), (1, M)),
        p_obtain=1.0 - np.tile(np.asarray(p_block_col).reshape(K, 1), (1, M)),
        p_fail_o=np.tile(np.asarray(p_fail_col).reshape(K, 1), (1, M)),
        p_norm_o=1.0 - np.tile(np.asarray(p_fail_col).reshape(K, 1), (1, M)),
    )


def test_vote_single_point_normalization():
    # One point exceeding in x only: x weights sum to 1, y vectors zero.
    K = 4
    table = _table_cols(K, 1, [0.9, 0.1, 0.1, 0.1], [0.3, 0.1, 0.1, 0.1])
    rmap = _map_from_eta([25.0], eta_x=[25.0], eta_y=[5.0], u_star=[1], f_star=[1])
    area = hazard.HazardArea(id=1, members=np.array([0]))
    hazard.vote(area, rmap, table, eta_t=18.0)
    assert area.raw_votes["v_u_x"].sum() == pytest.approx(1.0)
    assert area.raw_votes["v_fo_x"].sum() == pytest.approx(1.0)
    assert area.raw_votes["v_u_y"].sum() == 0.0
    assert area.raw_votes["v_fo_y"].sum() == 0.0
    assert area.votes["v_u_x"][0] == 1  # SP with the largest p_block
    assert area.votes["v_fo_x"][0] == 1


def test_vote_weight_pooling_equivalence():
    # Two points with equal excess and identical top-SP sets binarize
    # exactly like a single point.
    K = 4
    table = _table_cols(K, 2, [0.8, 0.1, 0.1, 0.1], [0.5, 0.2, 0.1, 0.1])
    rmap2 = _map_from_eta([25.0, 25.0], eta_x=[25.0, 25.0], eta_y=[1.0, 1.0], u_star=[1, 1], f_star=[1, 1])
    area2 = hazard.vote(hazard.HazardArea(id=1, members=np.array([0, 1])), rmap2, table, 18.0)
    table1 = _table_cols(K, 1, [0.8, 0.1, 0.1, 0.1], [0.5, 0.2, 0.1, 0.1])
    rmap1 = _map_from_eta([25.0], eta_x=[25.0], eta_y=[1.0], u_star=[1], f_star=[1])
    area1 = hazard.vote(hazard.HazardArea(id=1, members=np.array([0])), rmap1, table1, 18.0)
    for key in ("v_u_x", "v_fo_x", "v_u_y", "v_fo_y"):
        assert np.array_equal(area1.votes[key], area2.votes[key])


def test_vote_tie_break_ascending_index():
    K = 4
    table = _table_cols(K, 1, [0.5, 0.5, 0.5, 0.5], [0.2, 0.2, 0.2, 0.2])
    rmap = _map_from_eta([30.0], eta_x=[30.0], eta_y=[30.0], u_star=[2], f_star=[2])
    area = hazard.vote(hazard.HazardArea(id=1, members=np.array([0])), rmap, table, 18.0)
    assert list(np.nonzero(area.votes["v_u_x"])[0]) == [0, 1]


def test_vote_scaling_invariance():
    # Binarized votes don't change under uniform scaling of the excesses.
    K = 5
    rng = np.random.default_rng(53)
    p_block = rng.uniform(0.0, 1.0, K)
    p_fail = rng.uniform(0.0, 1.0, K)
    base_eta = np.array([20.0, 24.0, 30.0])
    for scale in (1.0, 3.0):
        eta = 18.0 + (base_eta - 18.0) * scale
        table = _table_cols(K, 3, p_block, p_fail)
        rmap = _map_from_eta(eta, eta_x=eta, eta_y=eta, u_star=[1, 1, 2], f_star=[1, 2, 1])
        area = hazard.vote(hazard.HazardArea(id=1, members=np.arange(3)), rmap, table, 18.0)
        if scale == 1.0:
            reference = {k: v.copy() for k, v in area.votes.items()}
        else:
            for key in reference:
                assert np.array_equal(area.votes[key], reference[key])


def test_wall_fixture_flags_occluded_sp():
    """Constructed wall occluding one SP: its visibility vote binarizes to 1."""
    from uavrel.mde import predict_map
    from uavrel.propagation import build_table
    from uavrel.scenario import Requirements

    scenario = Scenario(
        r_un=30.0,
        sample_spacing=15.0,
        channel=ChannelParams(snr_min=10.0),
        requirements=Requirements(eta_req=4.0, p_fa=1e-4, p_md=1e-6, eta_t=3.0),
    )
    # Wall between SP0 (at angle 0, i.e. x=+400) and the whole disc; the
    # finite y-extent keeps the diagonal SPs clear of the wall's
    # interpolation skirt.
    grid = synth_dem(
        "wall", cell_size=10.0, half_extent=700.0, x0=300.0, height=200.0, thickness=30.0, y_half_length=200.0
    )
    rmap = predict_map(scenario, grid)
    table = build_table(grid, scenario)
    areas = hazard.analyze(rmap, table, eta_t=3.0, spacing=scenario.sample_spacing)
    assert len(areas) >= 1
    area = areas[0]
    assert area.votes["v_u_x"][0] == 1 or area.votes["v_u_y"][0] == 1
    # Pre-rounding weights per direction sum to the vote sizes (here 1).
    for d in ("x", "y"):
        total = area.raw_votes[f"v_u_{d}"].sum()
        assert total == pytest.approx(1.0, rel=1e-9) or total == 0.0


def test_voting_table_csv_layout():
    K = 3
    area = hazard.HazardArea(id=1, members=np.array([0]))
    area.votes = {
        "v_u_x": np.array([1, 0, 0]),
        "v_fo_x": np.array([0, 1, 0]),
        "v_u_y": np.array([0, 0, 0]),
        "v_fo_y": np.array([1, 1, 0]),
    }
    area.raw_votes = {k: v.astype(float) for k, v in area.votes.items()}
    text = hazard.voting_table_csv([area], K)
    lines = text.strip().splitlines()
    assert lines[0] == "vector,SP1,SP2,SP3"
    assert lines[1] == "v_H1_U_x,1,0,0"
    assert len(lines) == 5


def test_guidance_mentions_flagged_sp():
    area = hazard.HazardArea(id=2, members=np.array([3, 4]))
    area.votes = {
        "v_u_x": np.array([0, 1]),
        "v_fo_x": np.array([0, 0]),
        "v_u_y": np.array([0, 1]),
        "v_fo_y": np.array([1, 0]),
    }
    area.raw_votes = {k: v.astype(float) for k, v in area.votes.items()}
    text = hazard.guidance_text([area])
    assert "SP2: low visibility" in text
    assert "SP1: high conditional failure" in text
    assert hazard.guidance_text([]) == "no hazardous areas\n"
