import itertools

import numpy as np
import pytest

from drivenav import semantics as sm
from drivenav.directions import ObservationSnapshot
from drivenav.semantics import (
    ACCEPTED,
    CONFIRMED,
    DISCARDED,
    FALLBACK_ACCEPTED,
    NO_DECISION,
    PENDING,
    REJECTED,
    DetectionCandidate,
    EnrichedPrompt,
    FailedPositionMemory,
    GrounderNoise,
    ProtocolViolationError,
    SelectorOption,
    SelectorQuery,
    SelectorReply,
    VerificationWindow,
)
from drivenav.world import Distractor, TargetInstance, World
from drivenav.gridmap import OccupancyGrid


def run_window(judgments):
    w = VerificationWindow(DetectionCandidate((1, 1), 0, "chair", 0.9))
    for j in judgments:
        if w.outcome != PENDING:
            break
        w = sm.verify_step(w, j)
    return w.outcome


def expected_outcome(seq):
    for j in seq:
        if j == ACCEPTED:
            return CONFIRMED
        if j == REJECTED:
            return DISCARDED
    return FALLBACK_ACCEPTED


class TestVerification:
    def test_immediate_confirm(self):
        assert run_window([ACCEPTED]) == CONFIRMED

    def test_reject_after_no_decision(self):
        assert run_window([NO_DECISION, REJECTED]) == DISCARDED

    def test_triple_no_decision_falls_back(self):
        assert run_window([NO_DECISION] * 3) == FALLBACK_ACCEPTED

    def test_exhaustive_truth_table(self):
        for seq in itertools.product(sm.JUDGMENTS, repeat=3):
            assert run_window(list(seq)) == expected_outcome(seq), seq

    def test_stepping_resolved_window_rejected(self):
        w = VerificationWindow(DetectionCandidate((1, 1), 0, "chair", 0.9))
        w = sm.verify_step(w, ACCEPTED)
        with pytest.raises(ValueError, match="resolved"):
            sm.verify_step(w, ACCEPTED)

    def test_unknown_judgment_rejected(self):
        w = VerificationWindow(DetectionCandidate((1, 1), 0, "chair", 0.9))
        with pytest.raises(ValueError):
            sm.verify_step(w, "maybe")


class TestFailedPositionMemory:
    def test_empty_not_suppressed(self):
        assert not sm.is_suppressed(FailedPositionMemory(), (3, 3))

    def test_radius_boundary(self):
        mem = FailedPositionMemory()
        mem.add((10, 10), 4.0, step=5)
        assert sm.is_suppressed(mem, (10, 13.9))
        assert not sm.is_suppressed(mem, (10, 14.1))

    def test_append_only_and_validation(self):
        mem = FailedPositionMemory()
        mem.add((1, 1), 2.0, 0)
        mem.add((2, 2), 2.0, 1)
        assert len(mem) == 2
        with pytest.raises(ValueError):
            mem.add((3, 3), 0.0, 2)


def snapshot(contains=True, cells=((5, 5),)):
    return ObservationSnapshot(0, 0.0, frozenset(cells), contains)


class TestEnrichPrompt:
    def test_color_and_context_rendering(self):
        p = sm.enrich_prompt(
            "chair", snapshot(), lambda s: {"color": "red", "context": "by the window"}
        )
        assert p.rendered == "red chair near the window"
        assert "chair" in p.rendered

    def test_no_attributes_identity(self):
        p = sm.enrich_prompt("chair", snapshot(), lambda s: {})
        assert p.rendered == "chair"

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            sm.enrich_prompt("chair", snapshot(), lambda s: [("color", "red"), ("color", "blue")])

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown attribute"):
            sm.enrich_prompt("chair", snapshot(), lambda s: {"weight": "heavy"})

    def test_requires_target_in_view(self):
        with pytest.raises(ValueError):
            sm.enrich_prompt("chair", snapshot(contains=False), lambda s: {})

    def test_deterministic_and_idempotent(self):
        oracle = lambda s: {"material": "wooden", "color": "red", "shape": "tall", "context": "in the corner"}
        a = sm.enrich_prompt("bed", snapshot(), oracle)
        b = sm.enrich_prompt("bed", snapshot(), oracle)
        assert a == b
        assert a.rendered == "red wooden bed, tall near in the corner".replace("near in", "near in")  # stable text
        assert a.rendered == b.rendered


def tiny_world(target_cell=(2, 2), distractor_cells=((4, 4),)):
    cells = np.zeros((8, 8), dtype=np.int8)
    grid = OccupancyGrid(cells, 0.25)
    return World(
        grid,
        "chair",
        (TargetInstance(target_cell, "chair", {"color": "red"}),),
        tuple(Distractor(c, "box") for c in distractor_cells),
        (0, 0),
    )


class TestGroundTarget:
    def test_noiseless_hit(self):
        w = tiny_world()
        vis = np.ones((8, 8), dtype=bool)
        out = sm.ground_target(w, "chair", vis, "chair", GrounderNoise(), np.random.default_rng(0))
        assert out is not None and out.position == (2, 2)

    def test_no_target_no_fp(self):
        w = tiny_world()
        vis = np.zeros((8, 8), dtype=bool)
        vis[4, 4] = True  # distractor only
        out = sm.ground_target(w, "chair", vis, "chair", GrounderNoise(fp_rate=0.0), np.random.default_rng(0))
        assert out is None

    def test_fp_rate_monte_carlo(self):
        w = tiny_world()
        vis = np.zeros((8, 8), dtype=bool)
        vis[4, 4] = True
        rng = np.random.default_rng(77)
        noise = GrounderNoise(fp_rate=0.2)
        hits = sum(
            sm.ground_target(w, "chair", vis, "chair", noise, rng) is not None
            for _ in range(10_000)
        )
        assert 0.18 <= hits / 10_000 <= 0.22

    def test_enrich_gain_reduces_miss(self):
        w = tiny_world()
        vis = np.ones((8, 8), dtype=bool)
        noise = GrounderNoise(miss_rate=0.6, enrich_gain=0.5)
        prompt = EnrichedPrompt("chair", (("color", "red"),), "red chair")
        rng1, rng2 = np.random.default_rng(3), np.random.default_rng(3)
        plain = sum(
            sm.ground_target(w, "chair", vis, "chair", noise, rng1) is not None
            for _ in range(4000)
        )
        enriched = sum(
            sm.ground_target(w, "chair", vis, prompt, noise, rng2) is not None
            for _ in range(4000)
        )
        assert enriched > plain
        assert abs(plain / 4000 - 0.4) < 0.05
        assert abs(enriched / 4000 - 0.7) < 0.05

    def test_seed_determinism(self):
        w = tiny_world()
        vis = np.ones((8, 8), dtype=bool)
        noise = GrounderNoise(fp_rate=0.3, miss_rate=0.3)
        a = [sm.ground_target(w, "chair", vis, "chair", noise, np.random.default_rng(9), i) for i in range(50)]
        b = [sm.ground_target(w, "chair", vis, "chair", noise, np.random.default_rng(9), i) for i in range(50)]
        assert a == b

    def test_noise_validation(self):
        with pytest.raises(ValueError):
            GrounderNoise(fp_rate=1.0)
        with pytest.raises(ValueError):
            GrounderNoise(enrich_gain=0.0)


class TestJudgeFrame:
    def test_target_visible_accepted(self):
        w = tiny_world()
        vis = np.ones((8, 8), dtype=bool)
        cand = DetectionCandidate((2, 2), 0, "chair", 0.9)
        assert sm.judge_frame(w, "chair", cand, vis) == ACCEPTED

    def test_distractor_visible_rejected(self):
        w = tiny_world()
        vis = np.ones((8, 8), dtype=bool)
        cand = DetectionCandidate((4, 4), 0, "chair", 0.9)
        assert sm.judge_frame(w, "chair", cand, vis) == REJECTED

    def test_occluded_no_decision(self):
        w = tiny_world()
        vis = np.zeros((8, 8), dtype=bool)
        cand = DetectionCandidate((2, 2), 0, "chair", 0.9)
        assert sm.judge_frame(w, "chair", cand, vis) == NO_DECISION


def options(*specs):
    out = []
    for did, bearing, contains, size in specs:
        snap = None if contains is None else snapshot(contains)
        out.append(SelectorOption(did, bearing, snap, size, frozenset({(did, 0)})))
    return tuple(out)


class TestSelectors:
    def test_scripted_replay(self):
        sel = sm.ScriptedSelector([7, 3])
        q = SelectorQuery("chair", options((3, 0, False, 1), (7, 90, False, 1)), (0, 0), 0.0)
        assert sel.choose(q).chosen == 7
        assert sel.choose(q).chosen == 3
        with pytest.raises(ProtocolViolationError):
            sel.choose(q)

    def test_scripted_rank_entries(self):
        sel = sm.ScriptedSelector(["rank:0", "rank:1"])
        q = SelectorQuery("chair", options((3, 0, False, 1), (7, 90, False, 1)), (0, 0), 0.0)
        assert sel.choose(q).chosen == 3
        assert sel.choose(q).chosen == 7

    def test_heuristic_prefers_sighted(self):
        q = SelectorQuery(
            "chair", options((0, 0, False, 4), (1, 10, True, 2), (2, 20, False, 9)), (0, 0), 0.0
        )
        reply = sm.HeuristicSelector().choose(q)
        assert reply.chosen == 1 and reply.target_sighted

    def test_heuristic_largest_support(self):
        q = SelectorQuery(
            "chair", options((0, 0, False, 4), (1, 10, False, 11), (2, 20, False, 7)), (0, 0), 0.0
        )
        assert sm.HeuristicSelector().choose(q).chosen == 1

    def test_omniscient_picks_closest_to_target(self):
        tt = np.full((10, 10), 50.0)
        tt[5, 0] = 2.0
        q = SelectorQuery(
            "chair",
            (
                SelectorOption(0, 0.0, None, 1, frozenset({(1, 0)})),
                SelectorOption(1, 90.0, None, 1, frozenset({(5, 0)})),
            ),
            (0, 0),
            0.0,
        )
        assert sm.OmniscientSelector(tt).choose(q).chosen == 1

    def test_select_direction_protocol_enforced(self):
        class Rogue(sm.DirectionSelector):
            kind = "rogue"

            def choose(self, query):
                return SelectorReply(chosen=999)

        q = SelectorQuery("chair", options((0, 0, False, 1)), (0, 0), 0.0)
        with pytest.raises(ProtocolViolationError):
            sm.select_direction(q, Rogue())

    def test_reply_invariant(self):
        with pytest.raises(ValueError):
            SelectorReply(chosen=0, target_sighted=False, descriptor=EnrichedPrompt("c", (), "c"))

    def test_empty_options_rejected(self):
        with pytest.raises(ValueError):
            SelectorQuery("chair", (), (0, 0), 0.0)

    def test_parse_selector_script(self):
        text = "# comment\n3\nrank:0\n\n12\n"
        assert sm.parse_selector_script(text) == [3, "rank:0", 12]
