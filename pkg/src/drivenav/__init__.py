"""Direction-first exploration planning toolkit and grid-world simulator."""

from .eikonal import SpeedParams, backtrack, build_speed_field, solve
from .episode import (
    DRIVE_NAV,
    NEAREST_FRONTIER_GREEDY,
    SCAN_360,
    Aggregate,
    EpisodeConfig,
    EpisodeRecord,
    compute_spl,
    run_episode,
    sense,
    shortest_path_length,
)
from .frontier import FrontierComponent, extract_frontiers, farthest_frontier_goal
from .gridmap import FREE, OBSTACLE, UNKNOWN, OccupancyGrid, load_map, save_map
from .semantics import GrounderNoise, enrich_prompt, ground_target, verify_step
from .trace import emit_trace, parse_trace
from .world import GeneratorSpec, World, generate_world, load_world

__version__ = "0.1.0"

__all__ = [
    "Aggregate",
    "DRIVE_NAV",
    "EpisodeConfig",
    "EpisodeRecord",
    "FREE",
    "FrontierComponent",
    "GeneratorSpec",
    "GrounderNoise",
    "NEAREST_FRONTIER_GREEDY",
    "OBSTACLE",
    "OccupancyGrid",
    "SCAN_360",
    "SpeedParams",
    "UNKNOWN",
    "World",
    "backtrack",
    "build_speed_field",
    "compute_spl",
    "emit_trace",
    "enrich_prompt",
    "extract_frontiers",
    "farthest_frontier_goal",
    "generate_world",
    "ground_target",
    "load_map",
    "load_world",
    "parse_trace",
    "run_episode",
    "save_map",
    "sense",
    "shortest_path_length",
    "solve",
    "verify_step",
]
