"""Frontier extraction on the explored/unexplored boundary of a partial map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import gridmap
from .gridmap import EIGHT_CONNECTED, FREE, OccupancyGrid

DEFAULT_MIN_FRONTIER_SIZE = 3


@dataclass(frozen=True)
class FrontierComponent:
    """One 8-connected group of frontier cells."""

    id: str
    cells: frozenset  # of (row, col)
    centroid: tuple[float, float]

    @property
    def size(self) -> int:
        return len(self.cells)


def frontier_mask(
    grid: OccupancyGrid, explored: np.ndarray, dilation_radius: float
) -> np.ndarray:
    """Boolean mask of frontier cells.

    A frontier cell is FREE, inside the (dilated) explored mask, and
    8-adjacent to unknown space that survives the dilation. Dilating the
    explored mask swallows sub-radius unknown gaps so they stop spawning
    spurious fragments.
    """
    explored = np.asarray(explored, dtype=bool)
    if explored.shape != grid.shape:
        raise ValueError(f"explored mask {explored.shape} != grid {grid.shape}")
    unknown = grid.unknown_mask()
    if dilation_radius > 0 and unknown.any():
        # Drop unknown pockets swallowed whole by the dilated explored mask
        # (single-cell sensing shadows); keep regions that extend beyond it.
        known_region = gridmap.dilate(explored, dilation_radius)
        comp, count = ndimage.label(unknown, structure=EIGHT_CONNECTED)
        deep = np.unique(comp[unknown & ~known_region])
        unknown = np.isin(comp, deep) & (comp > 0)
    adjacent_unknown = ndimage.binary_dilation(unknown, structure=EIGHT_CONNECTED)
    return (grid.cells == FREE) & explored & adjacent_unknown


def extract_frontiers(
    grid: OccupancyGrid,
    explored: np.ndarray,
    dilation_radius: float = 1.0,
    min_frontier_size: int = DEFAULT_MIN_FRONTIER_SIZE,
) -> list[FrontierComponent]:
    """Maximal 8-connected frontier components, smallest-cell-index order.

    Components with fewer than `min_frontier_size` cells are dropped. Equal
    inputs produce equal outputs, ids included.
    """
    mask = frontier_mask(grid, explored, dilation_radius)
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTED)
    comps = []
    for k in range(1, count + 1):
        rr, cc = np.nonzero(labels == k)
        if rr.size < min_frontier_size:
            continue
        first = int(rr[0] * grid.width + cc[0])
        comps.append((first, rr, cc))
    comps.sort(key=lambda t: t[0])
    out = []
    for i, (_, rr, cc) in enumerate(comps):
        cells = frozenset((int(r), int(c)) for r, c in zip(rr, cc))
        centroid = (float(rr.mean()), float(cc.mean()))
        out.append(FrontierComponent(id=f"f{i}", cells=cells, centroid=centroid))
    return out


def farthest_frontier_goal(
    direction, tt_from_robot: np.ndarray, exclude=frozenset()
) -> tuple[int, int]:
    """Supporting frontier cell with maximal travel time from the robot.

    Ties break toward the smallest (row, col) index. Raises ValueError when
    the support is empty or entirely unreachable (the caller's cue that the
    direction is no longer available and a backtrack decision is due).
    """
    support = sorted(direction.support)
    if not support:
        raise ValueError(f"direction {direction.id} has no supporting frontier cells")
    best_cell = None
    best_t = -np.inf
    for cell in support:
        if cell in exclude:
            continue
        t = tt_from_robot[cell]
        if np.isfinite(t) and t > best_t:
            best_t = t
            best_cell = cell
    if best_cell is None:
        raise ValueError(
            f"direction {direction.id}: no supporting cell is reachable"
        )
    return best_cell
