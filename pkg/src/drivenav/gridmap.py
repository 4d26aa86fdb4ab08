"""Occupancy-grid substrate: map layers, distance transforms, skeleton, dilation.

Grids are row-major numpy arrays indexed (row, col). Continuous positions use
the same (row, col) axes with integer coordinates at cell centers. All
functions here are pure; arrays returned are freshly allocated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

# Cell labels.
FREE = 0
OBSTACLE = 1
UNKNOWN = 2

DEFAULT_RESOLUTION = 0.05  # meters per cell

_CHAR_TO_LABEL = {"#": OBSTACLE, ".": FREE, "?": UNKNOWN, "S": FREE, "T": FREE}
_LABEL_TO_CHAR = {FREE: ".", OBSTACLE: "#", UNKNOWN: "?"}

# 8-connected structuring element, used for components and neighborhoods.
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class MapFormatError(ValueError):
    """Raised for malformed ASCII map documents."""


@dataclass(frozen=True)
class OccupancyGrid:
    """Fixed-resolution label grid. Treat as immutable after construction."""

    cells: np.ndarray  # int8, values in {FREE, OBSTACLE, UNKNOWN}
    resolution: float = DEFAULT_RESOLUTION

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int8)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ValueError(f"grid must be 2D and nonempty, got shape {cells.shape}")
        if self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not np.isin(cells, (FREE, OBSTACLE, UNKNOWN)).all():
            raise ValueError("grid contains labels outside {FREE, OBSTACLE, UNKNOWN}")
        object.__setattr__(self, "cells", cells)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def free_mask(self) -> np.ndarray:
        return self.cells == FREE

    def obstacle_mask(self) -> np.ndarray:
        return self.cells == OBSTACLE

    def unknown_mask(self) -> np.ndarray:
        return self.cells == UNKNOWN

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.cells.shape == other.cells.shape
            and bool((self.cells == other.cells).all())
        )


@dataclass(frozen=True)
class ParsedMap:
    """ASCII map document split into labels, resolution, and marker cells."""

    cells: np.ndarray
    resolution: float
    # marker char -> list of (row, col); only 'S' and 'T' are markers
    markers: dict = field(default_factory=dict)


def parse_map_text(text: str) -> ParsedMap:
    """Parse the ASCII map format (optional "resolution <m>" header line)."""
    if not text or not text.strip():
        raise MapFormatError("empty map document")
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    resolution = DEFAULT_RESOLUTION
    if lines and lines[0].lstrip().startswith("resolution"):
        parts = lines[0].split()
        if len(parts) != 2:
            raise MapFormatError(f"bad resolution header: {lines[0]!r}")
        try:
            resolution = float(parts[1])
        except ValueError as exc:
            raise MapFormatError(f"bad resolution value: {parts[1]!r}") from exc
        if resolution <= 0:
            raise MapFormatError(f"resolution must be positive, got {resolution}")
        lines = lines[1:]
    if not lines:
        raise MapFormatError("map document has no rows")
    width = len(lines[0])
    rows = []
    markers: dict[str, list[tuple[int, int]]] = {"S": [], "T": []}
    for r, line in enumerate(lines):
        if len(line) != width:
            raise MapFormatError(
                f"ragged rows: row {r} has length {len(line)}, expected {width}"
            )
        row = np.empty(width, dtype=np.int8)
        for c, ch in enumerate(line):
            label = _CHAR_TO_LABEL.get(ch)
            if label is None:
                raise MapFormatError(f"unknown map character {ch!r} at row {r} col {c}")
            row[c] = label
            if ch in markers:
                markers[ch].append((r, c))
        rows.append(row)
    return ParsedMap(np.stack(rows), resolution, markers)


def load_map(text: str) -> OccupancyGrid:
    """Parse an ASCII map document into an OccupancyGrid ('S'/'T' become FREE)."""
    parsed = parse_map_text(text)
    return OccupancyGrid(parsed.cells, parsed.resolution)


def save_map(grid: OccupancyGrid) -> str:
    """Render a grid back to the ASCII format, including the resolution header."""
    lines = [f"resolution {grid.resolution!r}"]
    for row in grid.cells:
        lines.append("".join(_LABEL_TO_CHAR[int(v)] for v in row))
    return "\n".join(lines) + "\n"


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str):
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def distance_transform(seed: np.ndarray, domain: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance (in cells) to the nearest seed cell.

    Distances are straight-line, not geodesic: the value at a domain cell is
    the minimum Euclidean distance over all seed cells, wherever they lie.
    Cells outside `domain` carry +inf. An empty seed yields an all-inf field.
    """
    seed = np.asarray(seed, dtype=bool)
    domain = np.asarray(domain, dtype=bool)
    _check_same_shape(seed, domain, "distance_transform")
    out = np.full(seed.shape, np.inf)
    if seed.any():
        out[:] = ndimage.distance_transform_edt(~seed)
    out[~domain] = np.inf
    return out


def disk_footprint(radius: float) -> np.ndarray:
    """Boolean disk: offsets with Euclidean norm <= radius."""
    r = int(np.floor(radius))
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return (yy * yy + xx * xx) <= radius * radius + 1e-9


def dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    """Morphological dilation with a disk structuring element; radius 0 is identity."""
    mask = np.asarray(mask, dtype=bool)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0 or not mask.any():
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=disk_footprint(radius))


def extract_skeleton(
    traversable: np.ndarray,
    obstacle_distance: np.ndarray,
    plateau_tolerance: float = 0.5,
) -> np.ndarray:
    """Medial skeleton of free space: ridge cells of the obstacle distance field.

    A traversable cell is on the skeleton when its distance value is within
    `plateau_tolerance` of the maximum over its traversable 8-neighbors, i.e.
    it is a (plateau-tolerant) local maximum of clearance.
    """
    traversable = np.asarray(traversable, dtype=bool)
    dist = np.asarray(obstacle_distance, dtype=float)
    _check_same_shape(traversable, dist, "extract_skeleton")
    if not traversable.any():
        return np.zeros_like(traversable)
    # Max of d over traversable 8-neighbors; cells with no such neighbor get -inf.
    neigh_max = np.full(dist.shape, -np.inf)
    d = np.where(traversable, dist, -np.inf)
    h, w = dist.shape
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            src = d[
                max(0, -dr) : h - max(0, dr),
                max(0, -dc) : w - max(0, dc),
            ]
            dst = neigh_max[
                max(0, dr) : h - max(0, -dr),
                max(0, dc) : w - max(0, -dc),
            ]
            np.maximum(dst, src, out=dst)
    ridge = dist >= neigh_max - plateau_tolerance
    return ridge & traversable
