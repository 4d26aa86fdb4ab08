"""Direction candidates from planned paths, circular clustering, persistent
identities over time, and forward-sector inspection planning.

Bearings are degrees in [0, 360), measured with atan2(d_row, d_col) so 0
points along +col and 90 along +row. All clustering respects angular
periodicity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

ACTIVE = "active"
RETIRED = "retired"
MERGED = "merged"

DEFAULT_GAP_THRESHOLD = 45.0
DEFAULT_R_LOCAL = 8.0
VIEW_TOLERANCE = 15.0  # camera yaw must be this close to a bearing for a valid view
FORWARD_HALF_RANGE = 120.0  # inspection restricted to +-120 deg of the heading
SNAPSHOT_REFRESH_IOU = 0.5

MATCH_OVERLAP_WEIGHT = 0.7
MATCH_BEARING_WEIGHT = 0.3
MATCH_MIN_SCORE = 0.2


def circ_diff(a: float, b: float) -> float:
    """Smallest absolute angular difference, in [0, 180]."""
    d = abs(a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


def signed_circ_diff(a: float, b: float) -> float:
    """Signed angular difference a - b wrapped to [-180, 180)."""
    return (a - b + 180.0) % 360.0 - 180.0


def circular_mean(bearings) -> float:
    s = sum(math.sin(math.radians(b)) for b in bearings)
    c = sum(math.cos(math.radians(b)) for b in bearings)
    if abs(s) < 1e-12 and abs(c) < 1e-12:
        return float(min(bearings) % 360.0)
    return math.degrees(math.atan2(s, c)) % 360.0


def bearing_of(frm, to) -> float:
    return math.degrees(math.atan2(to[0] - frm[0], to[1] - frm[1])) % 360.0


@dataclass(frozen=True)
class ObservationSnapshot:
    """Geometry-only stand-in for a representative view of a direction."""

    captured_at_step: int
    camera_yaw: float
    visible_cells: frozenset
    contains_target: bool


@dataclass(frozen=True)
class DirectionCandidate:
    bearing: float
    local_point: tuple[float, float]
    source_frontier: str
    source_cells: frozenset
    path: np.ndarray
    truncated: bool = False  # path ended before reaching the circle


@dataclass(frozen=True)
class FrameDirection:
    bearing: float
    members: tuple
    support: frozenset


@dataclass(frozen=True)
class PersistentDirection:
    id: int
    bearing: float
    support: frozenset
    status: str = ACTIVE
    merged_into: int | None = None
    inspected: bool = False
    observation: ObservationSnapshot | None = None
    snapshot_support: frozenset | None = None
    last_seen_step: int = 0

    def __post_init__(self):
        if self.inspected and self.observation is None:
            raise ValueError(f"direction {self.id}: inspected without an observation")
        if self.status == MERGED and self.merged_into is None:
            raise ValueError(f"direction {self.id}: merged without a target id")


@dataclass(frozen=True)
class InspectionPlan:
    steps: tuple  # of (target_yaw, direction_id), in visit order
    total_rotation: float

    def __len__(self) -> int:
        return len(self.steps)


def derive_candidates(paths, robot, r_local: float = DEFAULT_R_LOCAL):
    """Local directional points: first crossing of each path with the circle
    of radius `r_local` around the robot.

    `paths` is a sequence of (grid_path, frontier_component) pairs where each
    grid_path starts at the robot. Paths that end inside the circle use their
    endpoint and are flagged truncated.
    """
    if r_local <= 0:
        raise ValueError(f"r_local must be positive, got {r_local}")
    rr, rc = float(robot[0]), float(robot[1])
    out = []
    for path, comp in paths:
        pts = np.asarray(path, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            continue
        dists = np.hypot(pts[:, 0] - rr, pts[:, 1] - rc)
        cross = np.nonzero(dists >= r_local)[0]
        if cross.size == 0:
            local = (float(pts[-1, 0]), float(pts[-1, 1]))
            truncated = True
        else:
            k = int(cross[0])
            if k == 0:
                local = (float(pts[0, 0]), float(pts[0, 1]))
            else:
                seg = pts[k] - pts[k - 1]
                f = pts[k - 1] - np.array([rr, rc])
                a = float(seg @ seg)
                b = 2.0 * float(f @ seg)
                c = float(f @ f) - r_local * r_local
                disc = max(0.0, b * b - 4 * a * c)
                t = (-b + math.sqrt(disc)) / (2 * a) if a > 1e-12 else 0.0
                t = min(max(t, 0.0), 1.0)
                p = pts[k - 1] + t * seg
                local = (float(p[0]), float(p[1]))
            truncated = False
        if math.hypot(local[0] - rr, local[1] - rc) < 1.0:
            continue  # degenerate: frontier on top of the robot
        out.append(
            DirectionCandidate(
                bearing=bearing_of((rr, rc), local),
                local_point=local,
                source_frontier=comp.id,
                source_cells=comp.cells,
                path=pts,
                truncated=truncated,
            )
        )
    return out


def cluster_by_angle_gap(candidates, gap_threshold: float = DEFAULT_GAP_THRESHOLD):
    """Group candidates by circular angle gaps: cut wherever the gap between
    adjacent sorted bearings exceeds the threshold. No gap above threshold
    means a single cluster. Cluster bearing is the circular mean of members."""
    if not 0.0 < gap_threshold < 180.0:
        raise ValueError(f"gap_threshold must be in (0, 180), got {gap_threshold}")
    cands = sorted(candidates, key=lambda c: (c.bearing, c.source_frontier))
    n = len(cands)
    if n == 0:
        return []
    if n == 1:
        c = cands[0]
        return [FrameDirection(c.bearing, (c,), frozenset(c.source_cells))]
    gaps = [
        (cands[(i + 1) % n].bearing - cands[i].bearing) % 360.0 for i in range(n)
    ]
    cuts = [i for i, g in enumerate(gaps) if g > gap_threshold]
    groups = []
    if not cuts:
        groups.append(list(range(n)))
    else:
        for j, cut in enumerate(cuts):
            start = (cut + 1) % n
            end = cuts[(j + 1) % len(cuts)]
            idx = [start]
            while idx[-1] != end:
                idx.append((idx[-1] + 1) % n)
            groups.append(idx)
    dirs = []
    for idx in groups:
        members = tuple(cands[i] for i in idx)
        support = frozenset().union(*(m.source_cells for m in members))
        dirs.append(
            FrameDirection(circular_mean([m.bearing for m in members]), members, support)
        )
    dirs.sort(key=lambda d: d.bearing)
    return dirs


def _iou(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 0.0
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / len(a | b)


def associate(
    previous,
    current,
    step: int,
    frontier_cells=None,
    overlap_weight: float = MATCH_OVERLAP_WEIGHT,
    bearing_weight: float = MATCH_BEARING_WEIGHT,
    min_score: float = MATCH_MIN_SCORE,
    refresh_iou: float = SNAPSHOT_REFRESH_IOU,
):
    """Match frame-wise directions onto persistent identities.

    Greedy one-to-one matching on score = w_o * IoU(support) + w_b *
    (1 - circ_diff(bearing)/180), accepted above `min_score` in descending
    order. Matched identities keep their id and inspection state; unmatched
    frame directions get fresh ids; active identities whose support left the
    frontier set entirely are retired; identities beaten to their only
    matching frame direction are merged into the winner. A matched identity
    whose support drifted below `refresh_iou` overlap with its snapshot-time
    support is marked uninspected so its view gets retaken.

    Returns the full updated list, sorted by id. RETIRED/MERGED entries pass
    through untouched; ids are never reused.
    """
    previous = list(previous)
    if frontier_cells is None:
        frontier_cells = set().union(*(fd.support for fd in current)) if current else set()
    else:
        frontier_cells = set(frontier_cells)
    next_id = max((d.id for d in previous), default=-1) + 1
    active = [d for d in previous if d.status == ACTIVE]
    pairs = []
    for d in active:
        for j, fd in enumerate(current):
            score = overlap_weight * _iou(d.support, fd.support) + bearing_weight * (
                1.0 - circ_diff(d.bearing, fd.bearing) / 180.0
            )
            if score >= min_score:
                pairs.append((score, d.id, j))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    matched_prev: dict[int, int] = {}  # prev id -> frame index
    matched_cur: dict[int, int] = {}  # frame index -> prev id
    for score, pid, j in pairs:
        if pid in matched_prev or j in matched_cur:
            continue
        matched_prev[pid] = j
        matched_cur[j] = pid

    out = [d for d in previous if d.status != ACTIVE]
    for d in active:
        if d.id in matched_prev:
            fd = current[matched_prev[d.id]]
            inspected = d.inspected
            if (
                inspected
                and d.snapshot_support is not None
                and _iou(d.snapshot_support, fd.support) < refresh_iou
            ):
                inspected = False  # geometry changed enough to retake the view
            out.append(
                replace(
                    d,
                    bearing=fd.bearing,
                    support=fd.support,
                    inspected=inspected,
                    last_seen_step=step,
                )
            )
        else:
            mine = [(s, j) for s, pid, j in pairs if pid == d.id]
            if mine:
                # Lost every overlapping frame direction to a stronger identity.
                best_j = max(mine, key=lambda t: (t[0], -t[1]))[1]
                winner = matched_cur[best_j]
                out.append(replace(d, status=MERGED, merged_into=winner))
            elif not (set(d.support) & frontier_cells):
                out.append(replace(d, status=RETIRED))
            else:
                out.append(d)  # dormant: support persists but did not match
    for j, fd in enumerate(current):
        if j not in matched_cur:
            out.append(
                PersistentDirection(
                    id=next_id,
                    bearing=fd.bearing,
                    support=fd.support,
                    last_seen_step=step,
                )
            )
            next_id += 1
    out.sort(key=lambda d: d.id)
    return out


def plan_inspection(
    dirs,
    heading: float,
    half_range: float = FORWARD_HALF_RANGE,
) -> InspectionPlan:
    """Sweep plan over uninspected active directions in the forward sector.

    Rotates toward the nearer extreme first, sweeps across, then reverses for
    the other side; of the two sweep orders the cheaper one is returned.
    """
    targets = []
    for d in dirs:
        if d.status != ACTIVE or d.inspected:
            continue
        rel = signed_circ_diff(d.bearing, heading)
        if abs(rel) <= half_range:
            targets.append((rel, d.id))
    if not targets:
        return InspectionPlan((), 0.0)

    def order_cost(seq):
        total = 0.0
        yaw = 0.0
        for rel, _ in seq:
            total += abs(rel - yaw)
            yaw = rel
        return total

    left = sorted([t for t in targets if t[0] <= 0], key=lambda t: (-t[0], t[1]))
    right = sorted([t for t in targets if t[0] > 0], key=lambda t: (t[0], t[1]))
    left_first = left + right
    right_first = right + left
    plans = [(order_cost(left_first), 0, left_first), (order_cost(right_first), 1, right_first)]
    cost, _, seq = min(plans, key=lambda p: (p[0], p[1]))
    steps = tuple(((heading + rel) % 360.0, did) for rel, did in seq)
    return InspectionPlan(steps, cost)


class DirectionRegistry:
    """Single-writer store of persistent directions for one episode."""

    def __init__(self, **match_params):
        self.directions: list[PersistentDirection] = []
        self._match_params = match_params

    def update(self, frame_dirs, step: int, frontier_cells=None):
        self.directions = associate(
            self.directions, frame_dirs, step, frontier_cells, **self._match_params
        )
        return self.directions

    def active(self):
        return [d for d in self.directions if d.status == ACTIVE]

    def get(self, dir_id: int) -> PersistentDirection | None:
        for d in self.directions:
            if d.id == dir_id:
                return d
        return None

    def resolve(self, dir_id: int) -> PersistentDirection | None:
        """Follow merge links to the identity currently carrying a direction."""
        seen = set()
        d = self.get(dir_id)
        while d is not None and d.status == MERGED and d.id not in seen:
            seen.add(d.id)
            d = self.get(d.merged_into)
        return d

    def record_capture(self, dir_id: int, snapshot: ObservationSnapshot):
        for i, d in enumerate(self.directions):
            if d.id == dir_id:
                if circ_diff(snapshot.camera_yaw, d.bearing) > VIEW_TOLERANCE + 1e-9:
                    raise ValueError(
                        f"view for direction {dir_id} captured {snapshot.camera_yaw:.1f} "
                        f"deg off a bearing of {d.bearing:.1f}"
                    )
                self.directions[i] = replace(
                    d,
                    inspected=True,
                    observation=snapshot,
                    snapshot_support=d.support,
                )
                return
        raise KeyError(f"no direction with id {dir_id}")
