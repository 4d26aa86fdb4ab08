"""Episode simulation: sensing, agent kinematics, the direction-first policy
and its two baselines, and navigation metrics.

One episode is one sequential state machine. Every TURN/FORWARD/STOP counts
as one action against the budget; in-place rotations are not free. All
randomness flows from the episode seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

from . import directions as dirs_mod
from . import frontier as frontier_mod
from . import gridmap, semantics
from ._kernels import segment_blocked, visible_mask
from .eikonal import (
    FieldDefectError,
    SpeedParams,
    backtrack,
    build_speed_field,
    descent_chain,
    solve,
)
from .gridmap import FREE, OBSTACLE, UNKNOWN, OccupancyGrid
from .semantics import (
    CONFIRMED,
    DISCARDED,
    FALLBACK_ACCEPTED,
    PENDING,
    GrounderNoise,
    FailedPositionMemory,
    VerificationWindow,
)
from .world import World

FORWARD = "FORWARD"
TURN_LEFT = "TURN_LEFT"
TURN_RIGHT = "TURN_RIGHT"
STOP = "STOP"

DRIVE_NAV = "drive_nav"
NEAREST_FRONTIER_GREEDY = "nearest_frontier_greedy"
SCAN_360 = "scan_360"
POLICIES = (DRIVE_NAV, NEAREST_FRONTIER_GREEDY, SCAN_360)

SELECTORS = ("heuristic", "omniscient", "scripted", "human")

STOP_CONFIRMED = "confirmed_target"
STOP_EXHAUSTED = "exhausted"
STOP_BUDGET = "budget"

_LOOKAHEAD = 1.5  # cells


@dataclass(frozen=True)
class EpisodeConfig:
    budget: int = 500
    success_distance: float = 1.0  # meters
    turn_increment: float = 30.0  # degrees per TURN action
    forward_step: float = 0.25  # meters per FORWARD action
    sensor_fov: float = 79.0  # degrees
    sensor_range: float = 5.0  # meters
    seed: int = 0
    policy: str = DRIVE_NAV
    selector: str = "heuristic"
    selector_script: tuple = ()
    speed: SpeedParams = field(default_factory=SpeedParams)
    noise: GrounderNoise = field(default_factory=GrounderNoise)
    verification: bool = True
    enrichment: bool = True
    r_local: float = 8.0  # cells
    gap_threshold: float = 45.0
    dilation_radius: float = 1.0
    min_frontier_size: int = 3
    suppression_radius: float = 0.5  # meters
    per_frontier_solves: bool = False
    backtrack_step: float = 0.5

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError(f"budget must be positive, got {self.budget}")
        if self.turn_increment <= 0 or abs(360.0 / self.turn_increment - round(360.0 / self.turn_increment)) > 1e-9:
            raise ValueError(f"360 must be divisible by turn_increment, got {self.turn_increment}")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; pick from {POLICIES}")
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}; pick from {SELECTORS}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["selector_script"] = list(self.selector_script)
        return d


@dataclass
class AgentState:
    position: tuple[float, float]
    heading: float
    step_count: int = 0
    path_length: float = 0.0  # meters


@dataclass(frozen=True)
class EpisodeRecord:
    config: dict
    world_name: str
    category: str
    actions: list
    decisions: list
    verifications: list
    direction_timeline: list
    success: bool
    spl: float
    steps: int
    rotations: int
    shortest_path: float  # meters
    traveled: float  # meters
    stop_reason: str
    false_stop: bool
    final_position: list


@dataclass(frozen=True)
class Aggregate:
    sr: float
    spl: float
    mean_steps: float
    mean_rotations: float


def sense(world: World, position, heading: float, fov_deg: float, range_m: float) -> np.ndarray:
    """Boolean mask of truth cells visible from the pose.

    Rays stop at obstacles; the blocking obstacle cell itself is revealed.
    Deterministic, pure.
    """
    range_cells = range_m / world.grid.resolution
    return visible_mask(
        world.grid.cells,
        float(position[0]),
        float(position[1]),
        float(heading) % 360.0,
        float(fov_deg),
        float(range_cells),
        OBSTACLE,
    )


def shortest_path_length(world: World) -> float:
    """Geodesic meters from start to the nearest goal-category instance (F=1)."""
    tt = target_travel_time(world)
    t = tt[world.start]
    if not np.isfinite(t):
        raise ValueError("no goal-category target reachable from start")
    return float(t) * world.grid.resolution


def target_travel_time(world: World) -> np.ndarray:
    """Truth travel time (cells) from all goal-category target cells."""
    speed = np.where(world.grid.cells == FREE, 1.0, 0.0)
    seeds = [t.cell for t in world.targets if t.category == world.category]
    return solve(seeds, speed)


def compute_spl(records) -> Aggregate:
    """Aggregate SR / SPL / mean steps / mean rotations over episode records."""
    records = list(records)
    if not records:
        raise ValueError("no episode records to aggregate")
    sr = float(np.mean([1.0 if r.success else 0.0 for r in records]))
    spl = float(np.mean([r.spl for r in records]))
    steps = float(np.mean([r.steps for r in records]))
    rots = float(np.mean([r.rotations for r in records]))
    return Aggregate(sr, spl, steps, rots)


def episode_spl(success: bool, shortest: float, traveled: float) -> float:
    if not success:
        return 0.0
    denom = max(traveled, shortest)
    if denom <= 0.0:
        return 1.0
    return shortest / denom


class Episode:
    """Runs one episode of the configured policy on one world.

    `selector` overrides the config-named selector with a ready instance;
    `judge` replaces the simulated per-frame verification verdicts;
    `observer(episode, action)` is called after every executed action.
    """

    def __init__(self, world: World, config: EpisodeConfig, selector=None, judge=None, observer=None):
        self.world = world
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.res = world.grid.resolution
        h, w = world.grid.shape
        self.truth = world.grid.cells
        self.partial = np.full((h, w), UNKNOWN, dtype=np.int8)
        self.explored = np.zeros((h, w), dtype=bool)
        self.map_version = 0
        self.state = AgentState(
            position=(float(world.start[0]), float(world.start[1])),
            heading=float(world.start_heading) % 360.0,
        )
        self.registry = dirs_mod.DirectionRegistry()
        self.memory = FailedPositionMemory()
        self.actions: list[str] = []
        self.decisions: list[dict] = []
        self.verifications: list[dict] = []
        self.timeline: list[dict] = []
        self._timeline_state: dict[int, tuple] = {}
        self.window: VerificationWindow | None = None
        self.confirmed: tuple[int, int] | None = None
        self.active_prompt = world.category
        self.goal_dir_id: int | None = None
        self.greedy_goal: tuple[int, int] | None = None
        self.locked_goal: tuple[int, int] | None = None
        self.frontier_blacklist: set = set()
        self._frontier_cells: set = set()
        self.last_query_ids: frozenset = frozenset()
        self.pending_query = False
        self.forced: list[str] = []
        self.stopped = False
        self.stop_reason = STOP_BUDGET
        self.unreachable_ids: set[int] = set()
        self.motion_blocked = np.zeros((h, w), dtype=bool)
        self._blocked_counts: dict = {}
        self._last_block_key = None
        self._visible = np.zeros((h, w), dtype=bool)
        self._comps: list = []
        self._derived_version = -1
        self._speed = None
        self._tt_robot = None
        self._tt_robot_key = None
        self._paths_key = None
        self._paths_cache: list = []
        self._nav_cache: dict = {}
        self.target_tt = target_travel_time(world)
        self.shortest = float(self.target_tt[world.start]) * self.res
        self.selector = selector if selector is not None else self._build_selector()
        self.judge = judge
        self.observer = observer
        self._uses_directions = config.policy in (DRIVE_NAV, SCAN_360)

    # -- setup -------------------------------------------------------------

    def _build_selector(self):
        name = self.config.selector
        if name == "heuristic":
            return semantics.HeuristicSelector()
        if name == "omniscient":
            return semantics.OmniscientSelector(self.target_tt)
        if name == "scripted":
            return semantics.ScriptedSelector(self.config.selector_script)
        raise ValueError(f"selector {name!r} needs an explicit instance")

    # -- geometry helpers ----------------------------------------------------

    def _cell(self) -> tuple[int, int]:
        return (int(round(self.state.position[0])), int(round(self.state.position[1])))

    def _dist_m(self, cell) -> float:
        return (
            math.hypot(self.state.position[0] - cell[0], self.state.position[1] - cell[1])
            * self.res
        )

    # -- mapping pipeline ----------------------------------------------------

    def _sense_update(self):
        self._visible = sense(
            self.world,
            self.state.position,
            self.state.heading,
            self.config.sensor_fov,
            self.config.sensor_range,
        )
        # The agent always knows the cells its footprint occupies, FOV aside.
        pr, pc = self.state.position
        r0, c0 = int(round(pr)), int(round(pc))
        if self.motion_blocked[r0, c0]:
            # Standing in it proves it passable after all.
            self.motion_blocked[r0, c0] = False
            self.map_version += 1
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                q = (r0 + dr, c0 + dc)
                if (
                    0 <= q[0] < self.truth.shape[0]
                    and 0 <= q[1] < self.truth.shape[1]
                    and math.hypot(q[0] - pr, q[1] - pc) <= 0.75
                ):
                    self._visible[q] = True
        newly = self._visible & ~self.explored
        if newly.any():
            # Seeing floor implies seeing the surfaces bounding it: obstacle
            # cells adjacent to newly revealed free cells come along, which
            # keeps phantom unknown slivers from lining every traversed wall.
            walls = (
                ndimage.binary_dilation(
                    newly & (self.truth == FREE), structure=gridmap.EIGHT_CONNECTED
                )
                & (self.truth == OBSTACLE)
                & ~self.explored
            )
            newly |= walls
            self.partial[newly] = self.truth[newly]
            self.explored |= newly
            self.map_version += 1

    def _reveal_contact(self, cell):
        """Bumping into an unseen obstacle reveals it."""
        if not self.explored[cell]:
            self.partial[cell] = self.truth[cell]
            self.explored[cell] = True
            self.map_version += 1

    def _refresh_derived(self):
        if self._derived_version == self.map_version:
            return
        traversable = (self.partial == FREE) & ~self.motion_blocked
        d_obs = gridmap.distance_transform(self.partial == OBSTACLE, traversable)
        skel = gridmap.extract_skeleton(traversable, d_obs)
        d_vor = gridmap.distance_transform(skel, traversable)
        self._speed = build_speed_field(d_obs, d_vor, self.config.speed, domain=traversable)
        grid = OccupancyGrid(self.partial, self.res)
        self._comps = frontier_mod.extract_frontiers(
            grid,
            self.explored,
            self.config.dilation_radius,
            self.config.min_frontier_size,
        )
        self._frontier_cells = (
            set().union(*(c.cells for c in self._comps)) if self._comps else set()
        )
        self._derived_version = self.map_version
        self._nav_cache.clear()
        self.unreachable_ids.clear()

    def _safe_backtrack(self, tt, start):
        try:
            return backtrack(tt, start, self.config.backtrack_step)
        except FieldDefectError:
            return descent_chain(tt, start)

    def _robot_field(self) -> np.ndarray:
        key = (self.map_version, self._cell())
        if self._tt_robot_key != key:
            self._tt_robot = solve([self._cell()], self._speed)
            self._tt_robot_key = key
        return self._tt_robot

    def _component_paths(self):
        """One planned path per frontier component, starting at the robot."""
        key = (self.map_version, self.state.position)
        if self._paths_key == key:
            return self._paths_cache
        out = self._compute_component_paths()
        self._paths_key = key
        self._paths_cache = out
        return out

    def _compute_component_paths(self):
        # A component can touch the robot's own cell (the strip behind the
        # sensor cone is still unknown); entry points that close produce
        # meaningless bearings, so demand a little travel time first.
        min_entry_t = 2.0
        out = []
        if self.config.per_frontier_solves:
            for comp in self._comps:
                try:
                    tt = solve(sorted(comp.cells), self._speed)
                    path = self._safe_backtrack(tt, self.state.position)
                except (ValueError, FieldDefectError):
                    continue
                if len(path) >= 3:
                    out.append((path, comp))
            return out
        tt_robot = self._robot_field()
        for comp in self._comps:
            cells = sorted(comp.cells)
            ts = np.array([tt_robot[c] for c in cells])
            eligible = np.nonzero(np.isfinite(ts) & (ts >= min_entry_t))[0]
            if eligible.size == 0:
                continue
            best = int(eligible[np.argmin(ts[eligible])])
            try:
                path = self._safe_backtrack(tt_robot, cells[best])
            except (ValueError, FieldDefectError):
                continue
            if len(path) >= 3:
                out.append((path[::-1].copy(), comp))
        return out

    def _refresh_directions(self):
        paths = self._component_paths()
        cands = dirs_mod.derive_candidates(paths, self.state.position, self.config.r_local)
        frame_dirs = dirs_mod.cluster_by_angle_gap(cands, self.config.gap_threshold)
        self.registry.update(frame_dirs, self.state.step_count, self._frontier_cells)
        self._record_timeline()

    def _record_timeline(self):
        for d in self.registry.directions:
            key = (d.status, d.inspected)
            if self._timeline_state.get(d.id) != key:
                self._timeline_state[d.id] = key
                self.timeline.append(
                    {
                        "step": self.state.step_count,
                        "id": d.id,
                        "bearing": round(d.bearing, 3),
                        "status": d.status,
                        "inspected": d.inspected,
                        "support_size": len(d.support),
                    }
                )

    def _capture_views(self):
        """Opportunistic representative views: any active direction within the
        +-15 deg validity cone of the current camera yaw gets a fresh view."""
        if not self._uses_directions:
            return
        cat_cells = [t.cell for t in self.world.targets if t.category == self.world.category]
        vis = None
        for d in self.registry.active():
            # Representative views update online: every aligned frame renews
            # the view, first captures included.
            if dirs_mod.circ_diff(self.state.heading, d.bearing) <= dirs_mod.VIEW_TOLERANCE:
                if vis is None:
                    vis = frozenset(map(tuple, np.argwhere(self._visible)))
                snap = dirs_mod.ObservationSnapshot(
                    captured_at_step=self.state.step_count,
                    camera_yaw=self.state.heading,
                    visible_cells=vis,
                    contains_target=any(self._visible[c] for c in cat_cells),
                )
                self.registry.record_capture(d.id, snap)
        self._record_timeline()

    # -- verification & grounding --------------------------------------------

    def _judge_pending(self):
        if self.window is None or self.window.outcome != PENDING:
            return
        if self.judge is not None:
            judgment = self.judge(self, self.window)
        else:
            judgment = semantics.judge_frame(
                self.world, self.world.category, self.window.candidate, self._visible
            )
        self.window = semantics.verify_step(self.window, judgment)
        self.verifications.append(
            {
                "step": self.state.step_count,
                "kind": "frame",
                "position": list(self.window.candidate.position),
                "judgment": judgment,
                "outcome": self.window.outcome,
            }
        )
        if self.window.outcome in (CONFIRMED, FALLBACK_ACCEPTED):
            self.confirmed = self.window.candidate.position
            self.window = None
        elif self.window.outcome == DISCARDED:
            self._discard(self.window.candidate.position, "discarded")
            self.window = None

    def _discard(self, position, kind: str):
        radius = max(1.0, self.config.suppression_radius / self.res)
        self.memory.add(position, radius, self.state.step_count)
        self.verifications.append(
            {
                "step": self.state.step_count,
                "kind": kind,
                "position": list(position),
                "judgment": None,
                "outcome": DISCARDED,
            }
        )

    def _try_ground(self):
        if self.confirmed is not None or self.window is not None:
            return
        cand = semantics.ground_target(
            self.world,
            self.world.category,
            self._visible,
            self.active_prompt,
            self.config.noise,
            self.rng,
            self.state.step_count,
        )
        if cand is None:
            return
        if semantics.is_suppressed(self.memory, cand.position):
            return
        if self.config.verification:
            self.window = VerificationWindow(cand)
            self.verifications.append(
                {
                    "step": self.state.step_count,
                    "kind": "opened",
                    "position": list(cand.position),
                    "judgment": None,
                    "outcome": PENDING,
                }
            )
        else:
            self.confirmed = cand.position
            self.verifications.append(
                {
                    "step": self.state.step_count,
                    "kind": "unverified_accept",
                    "position": list(cand.position),
                    "judgment": None,
                    "outcome": CONFIRMED,
                }
            )

    # -- decisions -------------------------------------------------------------

    def _issue_query(self):
        options = []
        for d in self.registry.active():
            if d.id in self.unreachable_ids:
                continue
            options.append(
                semantics.SelectorOption(
                    direction_id=d.id,
                    bearing=d.bearing,
                    snapshot=d.observation,
                    support_size=len(d.support),
                    support_cells=d.support,
                )
            )
        if len(options) < 2:
            return
        current = None
        if self.goal_dir_id is not None:
            cur = self.registry.resolve(self.goal_dir_id)
            if cur is not None and cur.status == dirs_mod.ACTIVE:
                current = cur.id
        query = semantics.SelectorQuery(
            target_category=self.world.category,
            options=tuple(options),
            position=self.state.position,
            heading=self.state.heading,
            current_choice=current,
        )
        reply = semantics.select_direction(query, self.selector)
        descriptor = None
        if reply.target_sighted and self.config.enrichment:
            snap = next(
                (
                    o.snapshot
                    for o in sorted(options, key=lambda o: o.direction_id)
                    if o.snapshot is not None and o.snapshot.contains_target
                ),
                None,
            )
            if snap is not None:
                descriptor = semantics.enrich_prompt(
                    self.world.category, snap, self._attribute_oracle
                )
                self.active_prompt = descriptor
        self.goal_dir_id = reply.chosen
        self.locked_goal = None  # a fresh decision re-derives the goal cell
        self.last_query_ids = frozenset(o.direction_id for o in options)
        self.decisions.append(
            {
                "step": self.state.step_count,
                "options": [o.direction_id for o in options],
                "chosen": reply.chosen,
                "selector": self.selector.kind,
                "target_sighted": reply.target_sighted,
                "descriptor": descriptor.rendered if descriptor else None,
            }
        )

    def _maybe_enrich_from_views(self):
        """First sighting of the target in a representative view launches the
        prompt-enrichment stage for all later grounding."""
        if not self.config.enrichment or isinstance(self.active_prompt, semantics.EnrichedPrompt):
            return
        for d in self.registry.active():
            snap = d.observation
            if snap is not None and snap.contains_target:
                descriptor = semantics.enrich_prompt(
                    self.world.category, snap, self._attribute_oracle
                )
                self.active_prompt = descriptor
                self.verifications.append(
                    {
                        "step": self.state.step_count,
                        "kind": "prompt_enriched",
                        "position": None,
                        "judgment": None,
                        "outcome": descriptor.rendered,
                    }
                )
                return

    def _attribute_oracle(self, snapshot):
        for t in self.world.targets:
            if t.category == self.world.category and t.cell in snapshot.visible_cells:
                return dict(t.attributes)
        return {}

    # -- navigation --------------------------------------------------------------

    def _nav_path(self, goal_cell):
        key = (self.map_version, goal_cell, self._cell())
        if key in self._nav_cache:
            return self._nav_cache[key]
        path = None
        if self._speed[goal_cell] > 0:
            try:
                tt = solve([goal_cell], self._speed)
                path = self._safe_backtrack(tt, self.state.position)
            except (ValueError, FieldDefectError):
                path = None
        self._nav_cache[key] = path
        return path

    def _service_reached_goal(self):
        """On arrival at a frontier goal that has not cleared, turn to look
        at its unknown side; if it stays unknown while inside the view cone,
        the spot is occluded from here and gets blacklisted."""
        greedy = self.config.policy == NEAREST_FRONTIER_GREEDY
        g = self.greedy_goal if greedy else self.locked_goal

        def clear():
            if greedy:
                self.greedy_goal = None
            else:
                self.locked_goal = None

        if g is None:
            return None
        pr, pc = self.state.position
        if math.hypot(pr - g[0], pc - g[1]) > _LOOKAHEAD:
            return None
        if g not in self._frontier_cells:
            clear()
            return None
        h, w = self.partial.shape
        unknowns = [
            (g[0] + dr, g[1] + dc)
            for dr in (-1, 0, 1)
            for dc in (-1, 0, 1)
            if (dr or dc)
            and 0 <= g[0] + dr < h
            and 0 <= g[1] + dc < w
            and self.partial[g[0] + dr, g[1] + dc] == UNKNOWN
        ]
        if not unknowns:
            clear()
            return None
        half = self.config.sensor_fov / 2.0 - 3.0
        for u in sorted(unknowns):
            d = dirs_mod.signed_circ_diff(
                dirs_mod.bearing_of((pr, pc), u), self.state.heading
            )
            if abs(d) > half:
                return TURN_LEFT if d > 0 else TURN_RIGHT
        # Every unknown neighbor sat inside the cone and stayed unknown.
        self.frontier_blacklist.add(g)
        clear()
        return None

    def _escape_actions(self):
        """Recovery rotation: turn to the nearest heading whose forward step
        clears all known obstacles, then take that step."""
        st = self.state
        step_cells = self.config.forward_step / self.res
        known = ((self.partial == OBSTACLE) | self.motion_blocked).astype(np.int8)
        best = None
        n = int(round(360.0 / self.config.turn_increment))
        for k in range(1, n):
            h = math.radians(st.heading + k * self.config.turn_increment)
            nr = st.position[0] + step_cells * math.sin(h)
            nc = st.position[1] + step_cells * math.cos(h)
            if not segment_blocked(known, st.position[0], st.position[1], nr, nc, 1):
                turns_left = k
                turns_right = n - k
                if best is None or min(turns_left, turns_right) < best[0]:
                    best = (min(turns_left, turns_right), turns_left <= turns_right, k)
        if best is None:
            return [TURN_LEFT]
        _, go_left, k = best
        if go_left:
            return [TURN_LEFT] * k + [FORWARD]
        return [TURN_RIGHT] * (n - k) + [FORWARD]

    def _step_toward(self, path) -> str:
        pr, pc = self.state.position
        pts = np.asarray(path)
        dists = np.hypot(pts[:, 0] - pr, pts[:, 1] - pc)
        ahead = np.nonzero(dists >= _LOOKAHEAD)[0]
        look = pts[ahead[0]] if ahead.size else pts[-1]
        desired = dirs_mod.bearing_of((pr, pc), look)
        d = dirs_mod.signed_circ_diff(desired, self.state.heading)
        if abs(d) > self.config.turn_increment / 2.0 + 1e-9:
            return TURN_LEFT if d > 0 else TURN_RIGHT
        return FORWARD

    def _goal_cell(self):
        """Current navigation target cell under the active policy, or None."""
        if self.config.policy == NEAREST_FRONTIER_GREEDY:
            tt = self._robot_field()
            goal = self.greedy_goal
            if goal is not None and (
                goal not in self._frontier_cells
                or goal in self.frontier_blacklist
                or not np.isfinite(tt[goal])
            ):
                goal = None
            if goal is None:
                best_t = np.inf
                for comp in self._comps:
                    for cell in sorted(comp.cells):
                        if cell in self.frontier_blacklist:
                            continue
                        t = tt[cell]
                        if np.isfinite(t) and t < best_t:
                            goal, best_t = cell, t
            self.greedy_goal = goal
            return goal
        # Direction-based policies commit to the selected farthest-frontier
        # cell until it is consumed; the path itself is re-planned every
        # mapping step. This keeps merge/split churn from flipping the goal.
        tt = self._robot_field()
        g = self.locked_goal
        if g is not None and (
            g not in self._frontier_cells
            or g in self.frontier_blacklist
            or not np.isfinite(tt[g])
        ):
            g = None
            self.locked_goal = None
        if g is not None:
            return g
        active = [d for d in self.registry.active() if d.id not in self.unreachable_ids]
        if not active:
            return None
        cur = None
        if self.goal_dir_id is not None:
            cur = self.registry.resolve(self.goal_dir_id)
            if cur is not None and (cur.status != dirs_mod.ACTIVE or cur.id in self.unreachable_ids):
                cur = None
        if cur is None and len(active) == 1:
            cur = active[0]
            self.goal_dir_id = cur.id
        if cur is None:
            return None  # decision pending
        try:
            g = frontier_mod.farthest_frontier_goal(
                cur, tt, exclude=self.frontier_blacklist
            )
            self.locked_goal = g
            return g
        except ValueError:
            # Farthest frontier no longer available: backtrack condition.
            self.unreachable_ids.add(cur.id)
            self.goal_dir_id = None
            return None

    def _need_query(self) -> bool:
        if self.config.policy == NEAREST_FRONTIER_GREEDY:
            return False
        active = frozenset(
            d.id for d in self.registry.active() if d.id not in self.unreachable_ids
        )
        if len(active) < 2:
            return False
        if self.goal_dir_id is None:
            return True
        cur = self.registry.resolve(self.goal_dir_id)
        if cur is None or cur.status != dirs_mod.ACTIVE:
            return True
        return active != self.last_query_ids

    # -- main loop ------------------------------------------------------------

    def _choose_action(self) -> str:
        if self.forced:
            return self.forced.pop(0)
        if self.pending_query:
            self.pending_query = False
            self._issue_query()
        if self.confirmed is not None:
            if self._dist_m(self.confirmed) <= self.config.success_distance:
                self.stop_reason = STOP_CONFIRMED
                return STOP
            path = self._nav_path(self.confirmed)
            if path is None:
                self._discard(self.confirmed, "unreachable")
                self.confirmed = None
            else:
                return self._step_toward(path)
        if self.window is not None:
            path = self._nav_path(self.window.candidate.position)
            if path is None:
                self._discard(self.window.candidate.position, "unreachable")
                self.window = None
            else:
                return self._step_toward(path)
        look = self._service_reached_goal()
        if look is not None:
            return look
        # Pick and chase a goal; each failed direction is dropped and the
        # decision retried, so the loop is bounded by the active count.
        attempts = len(self.registry.active()) + 2 if self._uses_directions else 4
        for _ in range(attempts):
            if self._uses_directions and self._need_query():
                if self.config.policy == SCAN_360:
                    # Decision point: observe everything with a full circle.
                    n = int(round(360.0 / self.config.turn_increment))
                    self.forced = [TURN_LEFT] * n
                    self.pending_query = True
                    return self.forced.pop(0)
                # Decision point: sweep the still-uninspected directions in
                # the forward sector, then ask the selector.
                pending = [
                    d
                    for d in self.registry.active()
                    if d.id not in self.unreachable_ids
                ]
                plan = dirs_mod.plan_inspection(pending, self.state.heading)
                if len(plan):
                    yaw, _ = plan.steps[0]
                    d = dirs_mod.signed_circ_diff(yaw, self.state.heading)
                    return TURN_LEFT if d > 0 else TURN_RIGHT
                self._issue_query()
            goal = self._goal_cell()
            if goal is None:
                if self._uses_directions and self._need_query():
                    continue
                break
            path = self._nav_path(goal)
            if path is not None:
                return self._step_toward(path)
            # No usable route to this cell from here: stop chasing it.
            self.frontier_blacklist.add(goal)
            if self.locked_goal == goal:
                self.locked_goal = None
            if self.greedy_goal == goal:
                self.greedy_goal = None
            if self.goal_dir_id is not None:
                self.unreachable_ids.add(self.goal_dir_id)
                self.goal_dir_id = None
        # Directions exhausted; sweep up any frontier still reachable before
        # giving up (covers pockets too close or too小 to carry a direction).
        tt = self._robot_field()
        rest = []
        for cell in sorted(self._frontier_cells - self.frontier_blacklist):
            t = tt[cell]
            if np.isfinite(t):
                rest.append((t, cell))
        for _, cell in sorted(rest)[:4]:
            path = self._nav_path(cell)
            if path is not None:
                self.locked_goal = cell
                return self._step_toward(path)
            self.frontier_blacklist.add(cell)
        self.stop_reason = STOP_EXHAUSTED
        return STOP

    def _execute(self, action: str):
        st = self.state
        if action == STOP:
            self.stopped = True
        elif action in (TURN_LEFT, TURN_RIGHT):
            sign = 1.0 if action == TURN_LEFT else -1.0
            st.heading = (st.heading + sign * self.config.turn_increment) % 360.0
            self._last_block_key = None
        elif action == FORWARD:
            step_cells = self.config.forward_step / self.res
            h = math.radians(st.heading)
            nr = st.position[0] + step_cells * math.sin(h)
            nc = st.position[1] + step_cells * math.cos(h)
            if segment_blocked(self.truth, st.position[0], st.position[1], nr, nc, OBSTACLE):
                # Bumped: reveal the first blocking cell, stay put.
                nsteps = max(2, int(step_cells / 0.2))
                for s in range(nsteps + 1):
                    t = s / nsteps
                    br = int(round(st.position[0] + (nr - st.position[0]) * t))
                    bc = int(round(st.position[1] + (nc - st.position[1]) * t))
                    if not (0 <= br < self.truth.shape[0] and 0 <= bc < self.truth.shape[1]):
                        break
                    if self.truth[br, bc] == OBSTACLE:
                        self._reveal_contact((br, bc))
                        break
                key = (int(round(st.position[0] * 4)), int(round(st.position[1] * 4)), round(st.heading, 1))
                self._blocked_counts[key] = self._blocked_counts.get(key, 0) + 1
                self._last_block_key = key
                if self._blocked_counts[key] >= 2:
                    # The same pose keeps bumping into known geometry: the
                    # passage is physically impassable. Stop planning into it
                    # and rotate out to the nearest clear heading.
                    dest = (int(round(nr)), int(round(nc)))
                    if dest != self._cell() and 0 <= dest[0] < self.truth.shape[0] and 0 <= dest[1] < self.truth.shape[1]:
                        if not self.motion_blocked[dest]:
                            self.motion_blocked[dest] = True
                            self.map_version += 1
                    if not self.forced:
                        self.forced = self._escape_actions()
            else:
                st.path_length += math.hypot(nr - st.position[0], nc - st.position[1]) * self.res
                st.position = (nr, nc)
        self.actions.append(action)
        st.step_count += 1

    def _post_action(self, action: str):
        if self.stopped:
            return
        self._sense_update()
        self._refresh_derived()
        if self._uses_directions:
            self._refresh_directions()
            self._capture_views()
            self._maybe_enrich_from_views()
        if self.window is not None and (
            action == FORWARD
            or self._dist_m(self.window.candidate.position) <= 1.5 * self.res
        ):
            self._judge_pending()
        self._try_ground()

    def run(self) -> EpisodeRecord:
        # Initial observation, then a full-circle initialization sweep.
        self._sense_update()
        self._refresh_derived()
        if self._uses_directions:
            self._refresh_directions()
            self._capture_views()
        self._try_ground()
        self.forced = [TURN_LEFT] * int(round(360.0 / self.config.turn_increment))
        if self.observer is not None:
            self.observer(self, None)
        while not self.stopped and self.state.step_count < self.config.budget:
            action = self._choose_action()
            self._execute(action)
            self._post_action(action)
            if self.observer is not None:
                self.observer(self, action)
        if self.window is not None and self.window.outcome == PENDING:
            # Episode over mid-window: resolve conservatively as discarded.
            self._discard(self.window.candidate.position, "discarded_at_end")
            self.window = None
        issued_stop = bool(self.actions) and self.actions[-1] == STOP
        near_target = any(
            self._dist_m(t.cell) <= self.config.success_distance
            for t in self.world.targets
            if t.category == self.world.category
        )
        success = issued_stop and near_target
        false_stop = (
            issued_stop and self.stop_reason == STOP_CONFIRMED and not near_target
        )
        spl = episode_spl(success, self.shortest, self.state.path_length)
        return EpisodeRecord(
            config=self.config.to_dict(),
            world_name=self.world.name,
            category=self.world.category,
            actions=list(self.actions),
            decisions=list(self.decisions),
            verifications=list(self.verifications),
            direction_timeline=list(self.timeline),
            success=success,
            spl=spl,
            steps=self.state.step_count,
            rotations=sum(1 for a in self.actions if a in (TURN_LEFT, TURN_RIGHT)),
            shortest_path=self.shortest,
            traveled=self.state.path_length,
            stop_reason=self.stop_reason if issued_stop else STOP_BUDGET,
            false_stop=false_stop,
            final_position=[self.state.position[0], self.state.position[1]],
        )


def run_episode(
    world: World, config: EpisodeConfig, selector=None, judge=None, observer=None
) -> EpisodeRecord:
    """Run one episode and return its full deterministic record."""
    return Episode(world, config, selector=selector, judge=judge, observer=observer).run()
