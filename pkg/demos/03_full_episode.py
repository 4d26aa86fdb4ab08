"""One full direction-first episode, traced.

Runs the complete decision loop on a generated corridor world and prints the
decisions, verification events, and final metrics, plus an ASCII overview of
the traveled route.

Run: python demos/03_full_episode.py
"""
import numpy as np

from drivenav import episode as ep
from drivenav import world as wm
from drivenav.gridmap import OBSTACLE
from drivenav.semantics import GrounderNoise

world = wm.generate_world(wm.GeneratorSpec(kind="corridor-branch", width=71, height=71), seed=7)
config = ep.EpisodeConfig(
    seed=7,
    selector="omniscient",
    noise=GrounderNoise(fp_rate=0.2, miss_rate=0.2),
)

trail = []
record = ep.run_episode(world, config, observer=lambda e, a: trail.append(e.state.position))

print(f"world {world.name}: find a {world.category!r}, "
      f"shortest path {record.shortest_path:.1f} m")
print(f"result: success={record.success} in {record.steps} steps "
      f"({record.rotations} rotations), traveled {record.traveled:.1f} m, "
      f"SPL {record.spl:.2f}, stop reason {record.stop_reason!r}")

print("\ndecisions:")
for d in record.decisions:
    print(f"  step {d['step']:3d}: options {d['options']} -> chose {d['chosen']}"
          + (" (target sighted)" if d["target_sighted"] else ""))

print("\nverification events:")
for v in record.verifications:
    print(f"  step {v['step']:3d}: {v['kind']:16s} {v['position']} -> {v['outcome']}")

art = np.where(world.grid.cells == OBSTACLE, "#", ".").astype("<U1")
for r, c in trail:
    art[int(round(r)), int(round(c))] = "o"
art[world.start] = "S"
for t in world.targets:
    art[t.cell] = "T"
print("\nroute (S start, T target, o visited):")
print("\n".join("".join(row) for row in art))
