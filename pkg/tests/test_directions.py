import math

import numpy as np
import pytest

from drivenav import directions as dm
from drivenav.directions import (
    ACTIVE,
    MERGED,
    RETIRED,
    DirectionCandidate,
    FrameDirection,
    ObservationSnapshot,
    PersistentDirection,
)

from conftest import circular_gaps


class FakeComp:
    def __init__(self, id, cells):
        self.id = id
        self.cells = frozenset(cells)


def straight_path(robot, bearing_deg, length, step=0.5):
    rad = math.radians(bearing_deg)
    n = int(length / step) + 1
    return np.array(
        [
            (robot[0] + i * step * math.sin(rad), robot[1] + i * step * math.cos(rad))
            for i in range(n)
        ]
    )


def cand(bearing, src="f0", cells=((0, 0),)):
    return DirectionCandidate(
        bearing=bearing % 360.0,
        local_point=(8 * math.sin(math.radians(bearing)), 8 * math.cos(math.radians(bearing))),
        source_frontier=src,
        source_cells=frozenset(cells),
        path=np.zeros((2, 2)),
    )


class TestDeriveCandidates:
    def test_straight_east(self):
        robot = (10.0, 10.0)
        path = straight_path(robot, 0.0, 12)
        out = dm.derive_candidates([(path, FakeComp("f0", [(10, 22)]))], robot, 5.0)
        assert len(out) == 1
        c = out[0]
        assert abs(c.bearing - 0.0) < 1e-6
        assert math.isclose(c.local_point[1] - robot[1], 5.0, abs_tol=0.1)
        assert not c.truncated

    def test_curved_path_matches_circle_intersection(self):
        # 3 cells east then north: analytic first crossing of radius 5.
        robot = (20.0, 20.0)
        east = straight_path(robot, 0.0, 3)
        north = straight_path(east[-1], -90.0, 8)[1:]
        path = np.vstack([east, north])
        out = dm.derive_candidates([(path, FakeComp("f0", [(0, 0)]))], robot, 5.0)
        c = out[0]
        # circle r=5 crossed on the northbound leg at column offset 3: dr = -4
        expect = math.degrees(math.atan2(-4.0, 3.0)) % 360.0
        assert abs(dm.circ_diff(c.bearing, expect)) < 1.0
        assert 0.0 < (360.0 - c.bearing) < 90.0  # strictly between east and north

    def test_short_path_truncated_flag(self):
        robot = (5.0, 5.0)
        path = straight_path(robot, 90.0, 2)
        out = dm.derive_candidates([(path, FakeComp("f0", [(7, 5)]))], robot, 5.0)
        assert out[0].truncated
        assert np.allclose(out[0].local_point, path[-1])

    def test_empty_input(self):
        assert dm.derive_candidates([], (0.0, 0.0), 5.0) == []

    def test_on_circle_within_tolerance(self, rng):
        robot = (30.0, 30.0)
        paths = []
        for k in range(8):
            paths.append((straight_path(robot, 45.0 * k + 10, 20), FakeComp(f"f{k}", [(k, k)])))
        for c in dm.derive_candidates(paths, robot, 8.0):
            assert abs(math.hypot(c.local_point[0] - robot[0], c.local_point[1] - robot[1]) - 8.0) <= 0.1


def brute_clusters(bearings, threshold):
    """Cut-enumeration oracle: number of circular clusters."""
    gaps = circular_gaps(bearings)
    cuts = sum(1 for g in gaps if g > threshold)
    if len(bearings) <= 1:
        return len(bearings)
    return max(1, cuts)


class TestClusterByAngleGap:
    def test_spec_example(self):
        cands = [cand(0.0, "a"), cand(30.0, "b"), cand(200.0, "c")]
        out = dm.cluster_by_angle_gap(cands, 45.0)
        assert len(out) == 2
        sizes = sorted(len(fd.members) for fd in out)
        assert sizes == [1, 2]
        two = next(fd for fd in out if len(fd.members) == 2)
        assert {m.bearing for m in two.members} == {0.0, 30.0}

    def test_wraparound_mean(self):
        out = dm.cluster_by_angle_gap([cand(350.0, "a"), cand(10.0, "b")], 45.0)
        assert len(out) == 1
        assert dm.circ_diff(out[0].bearing, 0.0) < 1e-9

    def test_singleton(self):
        out = dm.cluster_by_angle_gap([cand(123.0)], 45.0)
        assert len(out) == 1 and out[0].bearing == 123.0

    def test_empty(self):
        assert dm.cluster_by_angle_gap([], 45.0) == []

    def test_all_gaps_small_single_cluster(self):
        cands = [cand(b, str(b)) for b in range(0, 360, 30)]
        out = dm.cluster_by_angle_gap(cands, 45.0)
        assert len(out) == 1
        assert len(out[0].members) == 12

    def test_matches_gap_oracle_on_random_sets(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 12))
            bearings = rng.random(n) * 360.0
            cands = [cand(b, f"s{i}") for i, b in enumerate(bearings)]
            out = dm.cluster_by_angle_gap(cands, 45.0)
            assert len(out) == brute_clusters(bearings, 45.0)
            # within-cluster adjacent gaps (along the arc) respect the threshold
            if len(out) > 1:
                for fd in out:
                    bs = [m.bearing for m in fd.members]
                    if len(bs) > 1:
                        gaps = sorted(circular_gaps(bs))
                        assert all(g <= 45.0 + 1e-9 for g in gaps[:-1])

    def test_rotation_equivariance(self, rng):
        bearings = list(rng.random(7) * 360.0)
        base = dm.cluster_by_angle_gap([cand(b, f"s{i}") for i, b in enumerate(bearings)], 45.0)
        for shift in (13.0, 100.0, 251.5):
            rot = dm.cluster_by_angle_gap(
                [cand((b + shift) % 360, f"s{i}") for i, b in enumerate(bearings)], 45.0
            )
            assert len(rot) == len(base)
            got = sorted((fd.bearing - shift) % 360.0 for fd in rot)
            want = sorted(fd.bearing % 360.0 for fd in base)
            assert np.allclose(np.sort(np.sin(np.radians(got))), np.sort(np.sin(np.radians(want))), atol=1e-9)
            partition_rot = sorted(
                sorted(m.source_frontier for m in fd.members) for fd in rot
            )
            partition_base = sorted(
                sorted(m.source_frontier for m in fd.members) for fd in base
            )
            assert partition_rot == partition_base

    def test_order_independence(self, rng):
        bearings = list(rng.random(9) * 360.0)
        cands = [cand(b, f"s{i}") for i, b in enumerate(bearings)]
        base = dm.cluster_by_angle_gap(cands, 45.0)
        for _ in range(5):
            perm = list(cands)
            rng.shuffle(perm)
            out = dm.cluster_by_angle_gap(perm, 45.0)
            assert [fd.bearing for fd in out] == [fd.bearing for fd in base]
            assert [fd.support for fd in out] == [fd.support for fd in base]

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            dm.cluster_by_angle_gap([], 0.0)
        with pytest.raises(ValueError):
            dm.cluster_by_angle_gap([], 180.0)


def fd(bearing, cells):
    return FrameDirection(bearing % 360.0, (), frozenset(cells))


def cells_block(r0, c0, n=4):
    return {(r0, c0 + i) for i in range(n)}


class TestAssociate:
    def test_identity_fixed_point(self):
        frame = [fd(10.0, cells_block(0, 0)), fd(200.0, cells_block(5, 0))]
        first = dm.associate([], frame, step=1)
        assert len(first) == 2 and all(d.status == ACTIVE for d in first)
        ids = [d.id for d in first]
        second = dm.associate(first, frame, step=2)
        assert [d.id for d in second] == ids
        assert all(not d.inspected for d in second)
        third = dm.associate(second, frame, step=3)
        assert [d.id for d in third] == ids

    def test_inspected_survives_matching(self):
        from dataclasses import replace

        frame = [fd(10.0, cells_block(0, 0))]
        dirs = dm.associate([], frame, step=1)
        snap = ObservationSnapshot(1, 10.0, frozenset(), False)
        dirs = [
            replace(d, inspected=True, observation=snap, snapshot_support=d.support)
            for d in dirs
        ]
        out = dm.associate(dirs, frame, step=2)
        assert out[0].inspected

    def test_fork_split_keeps_one_id(self):
        whole = cells_block(0, 0, 8)
        dirs = dm.associate([], [fd(0.0, whole)], step=1)
        base_id = dirs[0].id
        left = frozenset(list(sorted(whole))[:4])
        right = frozenset(list(sorted(whole))[4:])
        out = dm.associate(dirs, [fd(350.0, left), fd(20.0, right)], step=2)
        active = [d for d in out if d.status == ACTIVE]
        assert len(active) == 2
        kept = [d for d in active if d.id == base_id]
        assert len(kept) == 1
        new = [d for d in active if d.id != base_id]
        assert len(new) == 1 and not new[0].inspected
        # hand-computed scores: IoU = 4/8 both; bearing sim decides the winner
        s_left = 0.7 * 0.5 + 0.3 * (1 - 10 / 180)
        s_right = 0.7 * 0.5 + 0.3 * (1 - 20 / 180)
        assert s_left > s_right
        assert kept[0].support == left

    def test_all_retired_when_frontiers_consumed(self):
        dirs = dm.associate([], [fd(0.0, cells_block(0, 0)), fd(90.0, cells_block(3, 0))], step=1)
        out = dm.associate(dirs, [], step=2, frontier_cells=set())
        assert all(d.status == RETIRED for d in out)

    def test_merge_records_winner(self):
        a = cells_block(0, 0, 4)
        b = cells_block(4, 0, 4)
        dirs = dm.associate([], [fd(0.0, a), fd(30.0, b)], step=1)
        merged_fd = fd(10.0, a | b)
        out = dm.associate(dirs, [merged_fd], step=2)
        statuses = {d.id: d for d in out}
        winners = [d for d in out if d.status == ACTIVE]
        losers = [d for d in out if d.status == MERGED]
        assert len(winners) == 1 and len(losers) == 1
        assert losers[0].merged_into == winners[0].id

    def test_ids_never_reused_and_terminal_statuses(self):
        frame1 = [fd(0.0, cells_block(0, 0))]
        dirs = dm.associate([], frame1, step=1)
        dirs = dm.associate(dirs, [], step=2, frontier_cells=set())  # retire
        assert dirs[0].status == RETIRED
        dirs = dm.associate(dirs, frame1, step=3)
        assert dirs[0].status == RETIRED  # terminal
        fresh = [d for d in dirs if d.status == ACTIVE]
        assert len(fresh) == 1 and fresh[0].id != dirs[0].id

    def test_snapshot_refresh_on_support_change(self):
        support = cells_block(0, 0, 8)
        dirs = dm.associate([], [fd(0.0, support)], step=1)
        snap = ObservationSnapshot(1, 0.0, frozenset(), False)
        d = dirs[0]
        d = PersistentDirection(
            id=d.id, bearing=d.bearing, support=d.support, inspected=True,
            observation=snap, snapshot_support=d.support, last_seen_step=1,
        )
        moved = frozenset({(9, i) for i in range(8)})  # IoU 0 with snapshot support
        out = dm.associate([d], [fd(2.0, moved)], step=2)
        assert out[0].id == d.id  # bearing similarity carries the match
        assert not out[0].inspected  # stale view scheduled for retake

    def test_invariant_validation(self):
        with pytest.raises(ValueError):
            PersistentDirection(id=0, bearing=0, support=frozenset(), inspected=True)
        with pytest.raises(ValueError):
            PersistentDirection(id=0, bearing=0, support=frozenset(), status=MERGED)


def pdir(id, bearing, inspected=False, status=ACTIVE):
    snap = ObservationSnapshot(0, bearing, frozenset(), False) if inspected else None
    return PersistentDirection(
        id=id, bearing=bearing % 360.0, support=frozenset({(id, 0)}),
        status=status, inspected=inspected, observation=snap,
        merged_into=0 if status == MERGED else None,
    )


class TestPlanInspection:
    def test_empty_when_everything_inspected(self):
        dirs = [pdir(0, 30.0, inspected=True), pdir(1, 300.0, inspected=True)]
        plan = dm.plan_inspection(dirs, heading=0.0)
        assert len(plan) == 0 and plan.total_rotation == 0.0

    def test_spec_example_sweep(self):
        dirs = [pdir(0, -30.0), pdir(1, 120.0)]
        plan = dm.plan_inspection(dirs, heading=0.0)
        assert plan.total_rotation == 180.0
        assert [round(y) for y, _ in plan.steps] == [330, 120]

    def test_out_of_range_excluded(self):
        dirs = [pdir(0, 150.0)]
        plan = dm.plan_inspection(dirs, heading=0.0)
        assert len(plan) == 0

    def test_visits_each_once_and_in_range(self, rng):
        for _ in range(50):
            heading = float(rng.random() * 360)
            dirs = [pdir(i, float(rng.random() * 360)) for i in range(int(rng.integers(1, 7)))]
            plan = dm.plan_inspection(dirs, heading)
            in_range = [d.id for d in dirs if abs(dm.signed_circ_diff(d.bearing, heading)) <= 120.0]
            assert sorted(i for _, i in plan.steps) == sorted(in_range)
            for yaw, _ in plan.steps:
                assert abs(dm.signed_circ_diff(yaw, heading)) <= 120.0 + 1e-9

    def test_sweep_beats_reverse_order(self, rng):
        def cost(seq, start=0.0):
            tot, cur = 0.0, start
            for rel in seq:
                tot += abs(rel - cur)
                cur = rel
            return tot

        for _ in range(100):
            heading = float(rng.random() * 360)
            dirs = [pdir(i, heading + float(rng.uniform(-120, 120))) for i in range(int(rng.integers(1, 6)))]
            plan = dm.plan_inspection(dirs, heading)
            rels = [dm.signed_circ_diff(y, heading) for y, _ in plan.steps]
            got = cost(rels)
            assert abs(got - plan.total_rotation) < 1e-6
            left = sorted([r for r in rels if r <= 0], reverse=True)
            right = sorted([r for r in rels if r > 0])
            assert got <= cost(left + right) + 1e-9
            assert got <= cost(right + left) + 1e-9

    def test_total_rotation_bounds(self, rng):
        for _ in range(100):
            heading = float(rng.random() * 360)
            dirs = [pdir(i, float(rng.random() * 360)) for i in range(int(rng.integers(1, 8)))]
            plan = dm.plan_inspection(dirs, heading)
            assert plan.total_rotation <= 360.0 + 1e-9
            rels = [dm.signed_circ_diff(y, heading) for y, _ in plan.steps]
            if rels:
                near_extreme = min(abs(min(rels)), abs(max(rels)))
                assert plan.total_rotation <= 240.0 + near_extreme + 1e-9

    def test_merged_and_retired_excluded(self):
        dirs = [pdir(0, 10.0, status=MERGED), pdir(1, 20.0, status=RETIRED), pdir(2, 30.0)]
        plan = dm.plan_inspection(dirs, heading=0.0)
        assert [i for _, i in plan.steps] == [2]


class TestRegistry:
    def test_capture_requires_view_tolerance(self):
        reg = dm.DirectionRegistry()
        reg.update([fd(50.0, cells_block(0, 0))], step=0)
        d = reg.active()[0]
        snap_bad = ObservationSnapshot(0, 90.0, frozenset(), False)
        with pytest.raises(ValueError):
            reg.record_capture(d.id, snap_bad)
        snap_ok = ObservationSnapshot(0, 60.0, frozenset(), False)
        reg.record_capture(d.id, snap_ok)
        assert reg.active()[0].inspected

    def test_resolve_follows_merges(self):
        reg = dm.DirectionRegistry()
        a = cells_block(0, 0, 4)
        b = cells_block(4, 0, 4)
        reg.update([fd(0.0, a), fd(30.0, b)], step=0)
        ids = [d.id for d in reg.active()]
        reg.update([fd(10.0, a | b)], step=1)
        merged = [d for d in reg.directions if d.status == MERGED]
        assert merged
        target = reg.resolve(merged[0].id)
        assert target is not None and target.status == ACTIVE
