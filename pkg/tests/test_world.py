import json

import numpy as np
import pytest
from scipy import ndimage

from drivenav import world as wm
from drivenav.gridmap import FREE, OBSTACLE, EIGHT_CONNECTED


class TestGenerators:
    @pytest.mark.parametrize("kind", wm.GENERATOR_KINDS)
    def test_deterministic(self, kind):
        a = wm.generate_world(wm.GeneratorSpec(kind=kind), seed=11)
        b = wm.generate_world(wm.GeneratorSpec(kind=kind), seed=11)
        assert (a.grid.cells == b.grid.cells).all()
        assert a.targets == b.targets
        assert a.distractors == b.distractors
        assert a.start == b.start and a.start_heading == b.start_heading

    @pytest.mark.parametrize("kind", wm.GENERATOR_KINDS)
    @pytest.mark.parametrize("seed", range(6))
    def test_validates_and_reachable_bfs(self, kind, seed):
        w = wm.generate_world(wm.GeneratorSpec(kind=kind, width=45, height=45), seed=seed)
        free = w.grid.cells == FREE
        labels, _ = ndimage.label(free, structure=EIGHT_CONNECTED)
        goal_labels = {labels[t.cell] for t in w.targets if t.category == w.category}
        assert labels[w.start] in goal_labels

    def test_rooms_31x31_single_target_reachable(self):
        w = wm.generate_world(
            wm.GeneratorSpec(kind="rooms-and-doors", width=31, height=31, targets=1),
            seed=9,
        )
        free = w.grid.cells == FREE
        labels, _ = ndimage.label(free, structure=EIGHT_CONNECTED)
        assert labels[w.start] == labels[w.targets[0].cell]

    def test_target_attributes_populated(self):
        w = wm.generate_world(wm.GeneratorSpec(kind="rooms-and-doors"), seed=0)
        t = w.targets[0]
        assert set(t.attributes) <= set(("color", "material", "shape", "context"))
        assert t.attributes

    def test_unknown_kind_rejected(self):
        with pytest.raises(wm.WorldError):
            wm.GeneratorSpec(kind="donut")

    def test_infeasible_spec_rejected(self):
        with pytest.raises(wm.WorldError):
            wm.generate_world(wm.GeneratorSpec(kind="corridor-branch", width=9, height=9), seed=0)


class TestValidation:
    def test_start_on_obstacle_rejected(self):
        w = wm.generate_world(wm.GeneratorSpec(kind="rooms-and-doors"), seed=1)
        bad = wm.World(w.grid, w.category, w.targets, w.distractors, (0, 0), 0.0)
        with pytest.raises(wm.WorldError, match="start"):
            wm.validate_world(bad)

    def test_unreachable_target_rejected(self):
        cells = np.full((7, 7), OBSTACLE, dtype=np.int8)
        cells[1, 1] = FREE
        cells[5, 5] = FREE
        grid = wm.OccupancyGrid(cells)
        bad = wm.World(grid, "chair", (wm.TargetInstance((5, 5), "chair"),), (), (1, 1))
        with pytest.raises(wm.WorldError, match="reachable"):
            wm.validate_world(bad)


class TestWorldIO:
    def test_round_trip_text_and_sidecar(self):
        w = wm.generate_world(wm.GeneratorSpec(kind="corridor-branch"), seed=5)
        text = wm.world_to_text(w)
        sidecar = json.loads(json.dumps(wm.world_sidecar(w)))
        back = wm.load_world(text, sidecar)
        assert (back.grid.cells == w.grid.cells).all()
        assert back.category == w.category
        assert [t.cell for t in back.targets] == [t.cell for t in w.targets]
        assert [t.attributes for t in back.targets] == [t.attributes for t in w.targets]
        assert back.start == w.start
        assert back.start_heading == w.start_heading

    def test_load_world_file(self, tmp_path):
        w = wm.generate_world(wm.GeneratorSpec(kind="rooms-and-doors"), seed=2)
        p = tmp_path / "a.txt"
        p.write_text(wm.world_to_text(w))
        p.with_suffix(".json").write_text(json.dumps(wm.world_sidecar(w)))
        back = wm.load_world_file(p)
        assert back.category == w.category
        assert back.start == w.start

    def test_missing_start_rejected(self):
        with pytest.raises(wm.WorldError, match="'S'"):
            wm.load_world("..T\n...\n")

    def test_missing_target_rejected(self):
        with pytest.raises(wm.WorldError, match="target"):
            wm.load_world("..S\n...\n")

    def test_minimal_world_without_sidecar(self):
        w = wm.load_world("S...T\n.....\n")
        assert w.category == "target"
        assert w.start == (0, 0)
        assert w.targets[0].cell == (0, 4)


class TestHandDrawnMap:
    MAP = "\n".join(
        [
            "########################################",
            "#S.....................................#",
            "#......................######..........#",
            "#......................#....#..........#",
            "#......................#....#..........#",
            "#......................######..........#",
            "#......................................#",
            "#......................................#",
            "#..................................T...#",
            "########################################",
        ]
    )

    def test_load_and_run_at_default_resolution(self):
        import drivenav.episode as ep

        w = wm.load_world(self.MAP, {"category": "plant", "start_heading": 0.0})
        assert w.grid.resolution == 0.05  # 5 cm cells, metric defaults apply
        rec = ep.run_episode(w, ep.EpisodeConfig(seed=1, selector="omniscient", budget=200))
        assert rec.success
        assert rec.shortest_path > 1.0  # farther than the success radius
