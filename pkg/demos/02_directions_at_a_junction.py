"""From frontiers to persistent directions at a corridor junction.

Drops an agent at a three-way junction, performs the initialization sweep,
and prints the frontier components, the clustered directions, and the
inspection bookkeeping that prevents re-rotation on a revisit.

Run: python demos/02_directions_at_a_junction.py
"""
from drivenav import directions as dm
from drivenav import episode as ep
from drivenav import world as wm

world = wm.generate_world(wm.GeneratorSpec(kind="corridor-branch", branches=3), seed=3)
e = ep.Episode(world, ep.EpisodeConfig(seed=3, selector="omniscient"))
e._sense_update()
e._refresh_derived()
e._refresh_directions()
e._capture_views()

print(f"world {world.name}: start {world.start}, category {world.category!r}")
print(f"before the sweep: {len(e._comps)} frontier components, "
      f"{len(e.registry.active())} directions")

e.forced = [ep.TURN_LEFT] * 12
for _ in range(12):
    a = e._choose_action()
    e._execute(a)
    e._post_action(a)

print("\nafter the 360-degree initialization sweep:")
for comp in e._comps:
    print(f"  frontier {comp.id}: {len(comp.cells)} cells, centroid {tuple(round(x, 1) for x in comp.centroid)}")
for d in e.registry.active():
    print(f"  direction {d.id}: bearing {d.bearing:.1f} deg, support {len(d.support)}, "
          f"inspected={d.inspected}")

plan = dm.plan_inspection(e.registry.active(), e.state.heading)
print(f"\ninspection plan after the sweep: {len(plan)} targets "
      f"(everything already has a view), total rotation {plan.total_rotation:.0f} deg")

ids_before = {d.id for d in e.registry.directions}
e.forced = [ep.TURN_LEFT] * 12
for _ in range(12):
    a = e._choose_action()
    e._execute(a)
    e._post_action(a)
ids_after = {d.id for d in e.registry.directions}
print(f"revisit (second full rotation): {len(ids_after - ids_before)} new identities, "
      f"{len(e.registry.active())} directions still tracked")
