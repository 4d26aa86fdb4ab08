"""Ground-truth worlds: types, validation, procedural generators, file I/O.

Generated layouts are desk-scale substitutes for building interiors:
corridor-branch junction trees, room grids with doors, and widened mazes.
Everything is deterministic in the generator seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import gridmap
from .gridmap import EIGHT_CONNECTED, FREE, OBSTACLE, OccupancyGrid

GENERATOR_KINDS = ("corridor-branch", "rooms-and-doors", "random-maze")

TARGET_CATEGORIES = ("chair", "plant", "bed", "toilet", "sofa", "tv_monitor")
DISTRACTOR_CATEGORIES = ("table", "box", "lamp", "cabinet")
COLORS = ("red", "blue", "green", "black", "white")
MATERIALS = ("wooden", "metal", "plastic", "leather")
SHAPES = ("round", "square", "tall", "low")
CONTEXTS = ("by the window", "by the door", "in the corner", "near the shelf")


class WorldError(ValueError):
    """Inconsistent or infeasible world definition."""


@dataclass(frozen=True)
class TargetInstance:
    cell: tuple[int, int]
    category: str
    attributes: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Distractor:
    cell: tuple[int, int]
    category: str


@dataclass(frozen=True)
class World:
    grid: OccupancyGrid  # truth: no UNKNOWN cells
    category: str
    targets: tuple
    distractors: tuple
    start: tuple[int, int]
    start_heading: float = 0.0
    name: str = "world"


def validate_world(world: World) -> None:
    """Raise WorldError unless the world satisfies its invariants."""
    cells = world.grid.cells
    if (cells == gridmap.UNKNOWN).any():
        raise WorldError("truth grid contains UNKNOWN cells")
    free = cells == FREE

    def check_free(cell, what):
        r, c = cell
        if not (0 <= r < world.grid.height and 0 <= c < world.grid.width):
            raise WorldError(f"{what} {cell} outside the grid")
        if not free[r, c]:
            raise WorldError(f"{what} {cell} is not on a FREE cell")

    check_free(world.start, "start")
    for t in world.targets:
        check_free(t.cell, f"target {t.category}")
    for d in world.distractors:
        check_free(d.cell, f"distractor {d.category}")
    labels, _ = ndimage.label(free, structure=EIGHT_CONNECTED)
    start_comp = labels[world.start]
    reachable = [
        t for t in world.targets
        if t.category == world.category and labels[t.cell] == start_comp
    ]
    if not reachable:
        raise WorldError(
            f"no target of category {world.category!r} reachable from start {world.start}"
        )


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    width: int = 61
    height: int = 61
    targets: int = 1
    distractors: int = 4
    resolution: float = 0.25
    branches: int = 3  # children of the first corridor junction
    corridor_width: int = 3
    room_size: int = 9

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise WorldError(f"unknown generator {self.kind!r}; pick from {GENERATOR_KINDS}")
        if self.targets < 1:
            raise WorldError("need at least one target")


def generate_world(spec: GeneratorSpec | str, seed: int) -> World:
    """Build and validate a deterministic world from the generator spec."""
    if isinstance(spec, str):
        spec = GeneratorSpec(kind=spec)
    rng = np.random.default_rng(seed)
    if spec.kind == "corridor-branch":
        world = _gen_corridor_branch(spec, rng, seed)
    elif spec.kind == "rooms-and-doors":
        world = _gen_rooms_and_doors(spec, rng, seed)
    else:
        world = _gen_random_maze(spec, rng, seed)
    validate_world(world)
    return world


def _carve_corridor(cells, a, b, width):
    """Open a straight axis-aligned corridor of the given width from a to b."""
    half = width // 2
    r0, c0 = a
    r1, c1 = b
    rmin, rmax = sorted((r0, r1))
    cmin, cmax = sorted((c0, c1))
    rlo = max(1, rmin - half)
    rhi = min(cells.shape[0] - 2, rmax + half)
    clo = max(1, cmin - half)
    chi = min(cells.shape[1] - 2, cmax + half)
    cells[rlo : rhi + 1, clo : chi + 1] = FREE


def _place_objects(spec, rng, cells, start, goal_cell, extra_spots):
    """Attach the target(s) and distractors to carved free space."""
    category = str(rng.choice(TARGET_CATEGORIES))
    targets = [
        TargetInstance(
            goal_cell,
            category,
            {
                "color": str(rng.choice(COLORS)),
                "material": str(rng.choice(MATERIALS)),
                "shape": str(rng.choice(SHAPES)),
                "context": str(rng.choice(CONTEXTS)),
            },
        )
    ]
    spots = [s for s in extra_spots if s != goal_cell and s != start]
    for i in range(spec.targets - 1):
        if not spots:
            break
        targets.append(
            TargetInstance(spots.pop(0), category, {"color": str(rng.choice(COLORS))})
        )
    distractors = []
    for i in range(spec.distractors):
        if not spots:
            break
        distractors.append(
            Distractor(spots.pop(0), str(rng.choice(DISTRACTOR_CATEGORIES)))
        )
    return category, tuple(targets), tuple(distractors)


def _gen_corridor_branch(spec: GeneratorSpec, rng, seed) -> World:
    """Junction tree: corridors between lattice nodes, target at the deepest leaf."""
    h, w = spec.height, spec.width
    cells = np.full((h, w), OBSTACLE, dtype=np.int8)
    pitch = 4 * spec.corridor_width  # lattice spacing between junction nodes
    margin = spec.corridor_width + 1
    ni = (h - 2 * margin) // pitch + 1
    nj = (w - 2 * margin) // pitch + 1
    if ni < 2 or nj < 2:
        raise WorldError(f"grid {h}x{w} too small for corridor lattice")

    def node_cell(i, j):
        return (margin + i * pitch, margin + j * pitch)

    root = (ni // 2, nj // 2)
    visited = {root}
    depth = {root: 0}
    parent = {}
    order4 = [(0, 1), (1, 0), (0, -1), (-1, 0)]
    # Random frontier growth under a node budget keeps the tree bushy and
    # leaves lattice room so every root branch can be deepened below.
    budget = max(8, int(0.55 * ni * nj))
    growth = [root]
    first = True
    while growth and len(visited) < budget:
        node = growth.pop(int(rng.integers(len(growth))))
        nbrs = [
            (node[0] + di, node[1] + dj)
            for di, dj in order4
            if 0 <= node[0] + di < ni and 0 <= node[1] + dj < nj
        ]
        nbrs = [n for n in nbrs if n not in visited]
        rng.shuffle(nbrs)
        limit = spec.branches if first else 1 + int(rng.random() < 0.4)
        first = False
        for n in nbrs[:limit]:
            visited.add(n)
            depth[n] = depth[node] + 1
            parent[n] = node
            _carve_corridor(cells, node_cell(*node), node_cell(*n), spec.corridor_width)
            growth.append(n)
    # Every root branch gets at least one continuation so the first junction
    # presents real exploration choices beyond sensor reach.
    for child in sorted(n for n, p in parent.items() if p == root):
        if child in set(parent.values()):
            continue
        open_nbrs = [
            (child[0] + di, child[1] + dj)
            for di, dj in order4
            if 0 <= child[0] + di < ni
            and 0 <= child[1] + dj < nj
            and (child[0] + di, child[1] + dj) not in visited
        ]
        if open_nbrs:
            ext = open_nbrs[int(rng.integers(len(open_nbrs)))]
            visited.add(ext)
            depth[ext] = depth[child] + 1
            parent[ext] = child
            _carve_corridor(cells, node_cell(*child), node_cell(*ext), spec.corridor_width)
    leaves = [n for n in visited if n not in set(parent.values()) and n != root]
    if not leaves:
        leaves = [n for n in visited if n != root]
    goal_node = max(leaves, key=lambda n: (depth[n], n))
    other = sorted(set(visited) - {root, goal_node}, key=lambda n: (-depth[n], n))
    start = node_cell(*root)
    first_child = min((n for n, p in parent.items() if p == root), default=None)
    heading = 0.0
    if first_child is not None:
        fc = node_cell(*first_child)
        heading = float(np.degrees(np.arctan2(fc[0] - start[0], fc[1] - start[1])) % 360.0)
    category, targets, distractors = _place_objects(
        spec, rng, cells, start, node_cell(*goal_node), [node_cell(*n) for n in other]
    )
    grid = OccupancyGrid(cells, spec.resolution)
    return World(grid, category, targets, distractors, start, heading, f"corridor-branch-{seed}")


def _gen_rooms_and_doors(spec: GeneratorSpec, rng, seed) -> World:
    """Room lattice joined by a random spanning tree of doors plus extras."""
    room = spec.room_size
    rows = max(2, (spec.height - 1) // (room + 1))
    cols = max(2, (spec.width - 1) // (room + 1))
    h = rows * (room + 1) + 1
    w = cols * (room + 1) + 1
    cells = np.full((h, w), OBSTACLE, dtype=np.int8)

    def room_box(i, j):
        r0 = 1 + i * (room + 1)
        c0 = 1 + j * (room + 1)
        return r0, c0

    for i in range(rows):
        for j in range(cols):
            r0, c0 = room_box(i, j)
            cells[r0 : r0 + room, c0 : c0 + room] = FREE
    # Spanning tree of doors (randomized DFS), then a few extra doors.
    nodes = [(i, j) for i in range(rows) for j in range(cols)]
    visited = {nodes[0]}
    stack = [nodes[0]]
    edges = []
    while stack:
        i, j = stack[-1]
        nbrs = [
            (i + di, j + dj)
            for di, dj in ((0, 1), (1, 0), (0, -1), (-1, 0))
            if 0 <= i + di < rows and 0 <= j + dj < cols and (i + di, j + dj) not in visited
        ]
        if not nbrs:
            stack.pop()
            continue
        nxt = nbrs[int(rng.integers(len(nbrs)))]
        visited.add(nxt)
        edges.append(((i, j), nxt))
        stack.append(nxt)
    all_walls = [
        ((i, j), (i + di, j + dj))
        for i in range(rows)
        for j in range(cols)
        for di, dj in ((0, 1), (1, 0))
        if i + di < rows and j + dj < cols
    ]
    for wall in all_walls:
        if wall not in edges and rng.random() < 0.15:
            edges.append(wall)
    door = 3  # door opening width
    for (i0, j0), (i1, j1) in edges:
        r0, c0 = room_box(i0, j0)
        if i0 == i1:  # vertical wall between horizontally adjacent rooms
            wall_c = c0 + room if j1 > j0 else c0 - 1
            at = r0 + int(rng.integers(room - door + 1))
            cells[at : at + door, wall_c] = FREE
        else:
            wall_r = r0 + room if i1 > i0 else r0 - 1
            at = c0 + int(rng.integers(room - door + 1))
            cells[wall_r, at : at + door] = FREE

    def room_center(i, j):
        r0, c0 = room_box(i, j)
        return (r0 + room // 2, c0 + room // 2)

    start_room = (0, 0)
    goal_room = (rows - 1, cols - 1)
    start = room_center(*start_room)
    spots = []
    for i in range(rows):
        for j in range(cols):
            if (i, j) in (start_room, goal_room):
                continue
            r0, c0 = room_box(i, j)
            off_r = int(rng.integers(room))
            off_c = int(rng.integers(room))
            spots.append((r0 + off_r, c0 + off_c))
    rng.shuffle(spots)
    r0, c0 = room_box(*goal_room)
    goal = (r0 + int(rng.integers(room)), c0 + int(rng.integers(room)))
    category, targets, distractors = _place_objects(spec, rng, cells, start, goal, spots)
    grid = OccupancyGrid(cells, spec.resolution)
    heading = float(rng.integers(12) * 30.0)
    return World(grid, category, targets, distractors, start, heading, f"rooms-and-doors-{seed}")


def _gen_random_maze(spec: GeneratorSpec, rng, seed) -> World:
    """Recursive-backtracker maze with 3-cell-wide passages."""
    pitch = 5
    ni = max(2, spec.height // pitch)
    nj = max(2, spec.width // pitch)
    h = ni * pitch
    w = nj * pitch
    cells = np.full((h, w), OBSTACLE, dtype=np.int8)

    def block(i, j):
        return 1 + i * pitch, 1 + j * pitch

    def carve_node(i, j):
        r, c = block(i, j)
        cells[r : r + 3, c : c + 3] = FREE

    def carve_edge(a, b):
        (i0, j0), (i1, j1) = a, b
        r0, c0 = block(i0, j0)
        r1, c1 = block(i1, j1)
        rlo, rhi = sorted((r0, r1))
        clo, chi = sorted((c0, c1))
        cells[rlo : rhi + 3, clo : chi + 3] = FREE

    start_node = (0, 0)
    visited = {start_node}
    stack = [start_node]
    depth = {start_node: 0}
    carve_node(*start_node)
    deepest = (0, start_node)
    while stack:
        i, j = stack[-1]
        nbrs = [
            (i + di, j + dj)
            for di, dj in ((0, 1), (1, 0), (0, -1), (-1, 0))
            if 0 <= i + di < ni and 0 <= j + dj < nj and (i + di, j + dj) not in visited
        ]
        if not nbrs:
            stack.pop()
            continue
        nxt = nbrs[int(rng.integers(len(nbrs)))]
        visited.add(nxt)
        depth[nxt] = depth[(i, j)] + 1
        deepest = max(deepest, (depth[nxt], nxt))
        carve_edge((i, j), nxt)
        stack.append(nxt)
    start = tuple(v + 1 for v in block(*start_node))
    goal = block(*deepest[1])
    goal = (goal[0] + 1, goal[1] + 1)
    others = sorted(visited - {start_node, deepest[1]}, key=lambda n: (-depth[n], n))
    category, targets, distractors = _place_objects(
        spec, rng, cells, start, goal, [(block(*n)[0] + 1, block(*n)[1] + 1) for n in others]
    )
    grid = OccupancyGrid(cells, spec.resolution)
    return World(grid, category, targets, distractors, start, 0.0, f"random-maze-{seed}")


def world_to_text(world: World) -> str:
    """ASCII map with S/T markers; attributes go in the JSON sidecar."""
    chars = np.full(world.grid.shape, ".", dtype="<U1")
    chars[world.grid.cells == OBSTACLE] = "#"
    chars[world.grid.cells == gridmap.UNKNOWN] = "?"
    for t in world.targets:
        chars[t.cell] = "T"
    chars[world.start] = "S"
    lines = [f"resolution {world.grid.resolution!r}"]
    lines.extend("".join(row) for row in chars)
    return "\n".join(lines) + "\n"


def world_sidecar(world: World) -> dict:
    return {
        "category": world.category,
        "start_heading": world.start_heading,
        "name": world.name,
        "targets": [
            {"cell": list(t.cell), "category": t.category, "attributes": t.attributes}
            for t in world.targets
        ],
        "distractors": [
            {"cell": list(d.cell), "category": d.category} for d in world.distractors
        ],
    }


def load_world(text: str, sidecar: dict | None = None) -> World:
    """Build a world from an ASCII map and its optional attribute sidecar."""
    parsed = gridmap.parse_map_text(text)
    grid = OccupancyGrid(parsed.cells, parsed.resolution)
    starts = parsed.markers.get("S", [])
    if len(starts) != 1:
        raise WorldError(f"world map needs exactly one 'S' marker, found {len(starts)}")
    sidecar = sidecar or {}
    category = sidecar.get("category", "target")
    t_cells = parsed.markers.get("T", [])
    targets = []
    side_targets = sidecar.get("targets")
    if side_targets:
        if len(side_targets) != len(t_cells):
            raise WorldError(
                f"sidecar lists {len(side_targets)} targets but map has {len(t_cells)} 'T' markers"
            )
        for cell, entry in zip(t_cells, side_targets):
            cell = tuple(entry.get("cell", cell))
            targets.append(
                TargetInstance(cell, entry.get("category", category), entry.get("attributes", {}))
            )
    else:
        targets = [TargetInstance(tuple(c), category, {}) for c in t_cells]
    if not targets:
        raise WorldError("world has no targets ('T' markers or sidecar entries)")
    distractors = tuple(
        Distractor(tuple(d["cell"]), d.get("category", "distractor"))
        for d in sidecar.get("distractors", [])
    )
    world = World(
        grid,
        category,
        tuple(targets),
        distractors,
        tuple(starts[0]),
        float(sidecar.get("start_heading", 0.0)),
        sidecar.get("name", "world"),
    )
    validate_world(world)
    return world


def load_world_file(path) -> World:
    """Load `<map>.txt` plus `<map>.json` sidecar when present."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text()
    sidecar = None
    side_path = path.with_suffix(".json")
    if side_path.exists():
        sidecar = json.loads(side_path.read_text())
    return load_world(text, sidecar)
