"""Pluggable decision components: direction selection, prompt enrichment,
simulated target grounding, cross-frame verification, failed-position memory.

These stand in for the perception stack; everything is deterministic given
the episode RNG so runs replay exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Per-frame judgments.
ACCEPTED = "accepted"
REJECTED = "rejected"
NO_DECISION = "no_decision"
JUDGMENTS = (ACCEPTED, REJECTED, NO_DECISION)

# Window outcomes.
PENDING = "pending"
CONFIRMED = "confirmed"
DISCARDED = "discarded"
FALLBACK_ACCEPTED = "fallback_accepted"

WINDOW_FRAMES = 3

ATTRIBUTE_KEYS = ("color", "material", "shape", "context")


class ProtocolViolationError(RuntimeError):
    """A selector replied with something outside the offered options."""


@dataclass(frozen=True)
class EnrichedPrompt:
    """Category plus appearance attributes rendered into one grounding phrase."""

    category: str
    attributes: tuple  # of (key, value), canonical key order
    rendered: str


def render_prompt(category: str, attributes: dict) -> str:
    head = " ".join(
        [attributes[k] for k in ("color", "material") if k in attributes] + [category]
    )
    if "shape" in attributes:
        head += ", " + attributes["shape"]
    if "context" in attributes:
        ctx = attributes["context"]
        for prefix in ("by ", "near "):
            if ctx.startswith(prefix):
                ctx = ctx[len(prefix):]
                break
        head += " near " + ctx
    return head


def enrich_prompt(category: str, snapshot, attribute_source) -> EnrichedPrompt:
    """Build the refined grounding prompt for a target sighted in `snapshot`.

    `attribute_source` maps the snapshot to (key, value) appearance cues; in
    simulated worlds that is a lookup of the visible instance's tags.
    """
    if not snapshot.contains_target:
        raise ValueError("cannot enrich a prompt from a view without the target")
    raw = attribute_source(snapshot)
    items = list(raw.items()) if isinstance(raw, dict) else list(raw)
    seen = {}
    for k, v in items:
        if k not in ATTRIBUTE_KEYS:
            raise ValueError(f"unknown attribute key {k!r}")
        if k in seen:
            raise ValueError(f"duplicate attribute key {k!r}")
        seen[k] = str(v)
    attrs = tuple((k, seen[k]) for k in ATTRIBUTE_KEYS if k in seen)
    return EnrichedPrompt(category, attrs, render_prompt(category, dict(attrs)))


@dataclass(frozen=True)
class DetectionCandidate:
    position: tuple[int, int]
    source_step: int
    prompt: object  # EnrichedPrompt or the bare category string
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")


@dataclass(frozen=True)
class VerificationWindow:
    """Three-frame confirm-or-discard buffer for one detection candidate."""

    candidate: DetectionCandidate
    frames: tuple = ()
    outcome: str = PENDING


def verify_step(window: VerificationWindow, judgment: str) -> VerificationWindow:
    """Append one frame judgment and resolve the window when decided.

    Any accepted frame confirms immediately; any rejected frame discards
    immediately; three no-decision frames fall back to accepting the original
    detection.
    """
    if judgment not in JUDGMENTS:
        raise ValueError(f"unknown judgment {judgment!r}")
    if window.outcome != PENDING:
        raise ValueError(f"window already resolved as {window.outcome}")
    frames = window.frames + (judgment,)
    if judgment == ACCEPTED:
        outcome = CONFIRMED
    elif judgment == REJECTED:
        outcome = DISCARDED
    elif len(frames) >= WINDOW_FRAMES:
        outcome = FALLBACK_ACCEPTED
    else:
        outcome = PENDING
    return replace(window, frames=frames, outcome=outcome)


class FailedPositionMemory:
    """Append-only record of discarded detections used to suppress repeats."""

    def __init__(self):
        self.entries: list[tuple[tuple[int, int], float, int]] = []

    def add(self, position, suppression_radius: float, step: int):
        if suppression_radius <= 0:
            raise ValueError(f"suppression radius must be positive, got {suppression_radius}")
        self.entries.append(((int(position[0]), int(position[1])), float(suppression_radius), int(step)))

    def __len__(self):
        return len(self.entries)


def is_suppressed(memory: FailedPositionMemory, position) -> bool:
    r, c = position
    for (er, ec), radius, _ in memory.entries:
        if math.hypot(r - er, c - ec) <= radius:
            return True
    return False


@dataclass(frozen=True)
class SelectorOption:
    direction_id: int
    bearing: float
    snapshot: object  # ObservationSnapshot or None for never-inspected options
    support_size: int = 0
    support_cells: frozenset = frozenset()


@dataclass(frozen=True)
class SelectorQuery:
    target_category: str
    options: tuple
    position: tuple[float, float]
    heading: float
    current_choice: int | None = None  # direction the agent is already following

    def __post_init__(self):
        if not self.options:
            raise ValueError("selector query issued with no options")

    def option_ids(self):
        return [o.direction_id for o in self.options]

    def current_option(self):
        for o in self.options:
            if o.direction_id == self.current_choice:
                return o
        return None


@dataclass(frozen=True)
class SelectorReply:
    chosen: int
    target_sighted: bool = False
    descriptor: EnrichedPrompt | None = None

    def __post_init__(self):
        if self.descriptor is not None and not self.target_sighted:
            raise ValueError("descriptor present without a sighted target")


class DirectionSelector:
    """Interface every selector implements; the episode loop sees only this."""

    kind = "abstract"

    def choose(self, query: SelectorQuery) -> SelectorReply:
        raise NotImplementedError


def _sighted(query: SelectorQuery) -> bool:
    return any(
        o.snapshot is not None and o.snapshot.contains_target for o in query.options
    )


class ScriptedSelector(DirectionSelector):
    """Replays a recorded decision list; entries are direction ids or 'rank:N'."""

    kind = "scripted"

    def __init__(self, script):
        self.script = list(script)
        self._cursor = 0

    def choose(self, query: SelectorQuery) -> SelectorReply:
        if self._cursor >= len(self.script):
            raise ProtocolViolationError("scripted selector ran out of choices")
        entry = self.script[self._cursor]
        self._cursor += 1
        if isinstance(entry, str) and entry.startswith("rank:"):
            rank = int(entry.split(":", 1)[1])
            ordered = sorted(query.options, key=lambda o: o.direction_id)
            chosen = ordered[min(rank, len(ordered) - 1)].direction_id
        else:
            chosen = int(entry)
        return SelectorReply(chosen=chosen, target_sighted=_sighted(query))


class HeuristicSelector(DirectionSelector):
    """Prefers a view that already shows the target, else the widest support."""

    kind = "heuristic"

    def choose(self, query: SelectorQuery) -> SelectorReply:
        sighted = [
            o
            for o in query.options
            if o.snapshot is not None and o.snapshot.contains_target
        ]
        if sighted:
            pick = min(sighted, key=lambda o: o.direction_id)
            return SelectorReply(chosen=pick.direction_id, target_sighted=True)
        pick = max(query.options, key=lambda o: (o.support_size, -o.direction_id))
        cur = query.current_option()
        if cur is not None and cur.support_size >= 0.8 * pick.support_size:
            pick = cur  # keep the committed direction on near-ties
        return SelectorReply(chosen=pick.direction_id, target_sighted=False)


class OmniscientSelector(DirectionSelector):
    """Cheats with the true travel-time field from the target instances."""

    kind = "omniscient"

    def __init__(self, target_tt: np.ndarray, hysteresis: float = 4.0):
        self.target_tt = target_tt
        self.hysteresis = hysteresis  # cells; keeps committed choices on near-ties

    def choose(self, query: SelectorQuery) -> SelectorReply:
        def cost(o: SelectorOption) -> float:
            cells = o.support_cells
            if not cells:
                return float("inf")
            return min(float(self.target_tt[c]) for c in sorted(cells))

        pick = min(query.options, key=lambda o: (cost(o), o.direction_id))
        cur = query.current_option()
        if cur is not None and cost(cur) <= cost(pick) + self.hysteresis:
            pick = cur
        return SelectorReply(chosen=pick.direction_id, target_sighted=_sighted(query))


def select_direction(query: SelectorQuery, selector: DirectionSelector) -> SelectorReply:
    """Run a selector and enforce the reply protocol."""
    reply = selector.choose(query)
    if reply.chosen not in query.option_ids():
        raise ProtocolViolationError(
            f"selector {selector.kind!r} chose {reply.chosen}, not in {query.option_ids()}"
        )
    return reply


def parse_selector_script(text: str):
    """Scripted-selector file: one choice per line, '#' comments allowed."""
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        out.append(line if line.startswith("rank:") else int(line))
    return out


@dataclass(frozen=True)
class GrounderNoise:
    """Error model of the simulated open-vocabulary grounder."""

    fp_rate: float = 0.0
    miss_rate: float = 0.0
    enrich_gain: float = 1.0  # multiplies both error rates when a matching enriched prompt is used

    def __post_init__(self):
        if not 0.0 <= self.fp_rate < 1.0:
            raise ValueError(f"fp_rate must be in [0, 1), got {self.fp_rate}")
        if not 0.0 <= self.miss_rate < 1.0:
            raise ValueError(f"miss_rate must be in [0, 1), got {self.miss_rate}")
        if not 0.0 < self.enrich_gain <= 1.0:
            raise ValueError(f"enrich_gain must be in (0, 1], got {self.enrich_gain}")


def _prompt_matches(prompt, target) -> bool:
    if not isinstance(prompt, EnrichedPrompt):
        return False
    if prompt.category != target.category:
        return False
    return all(target.attributes.get(k) == v for k, v in prompt.attributes)


def ground_target(
    world,
    category: str,
    visible: np.ndarray,
    prompt,
    noise: GrounderNoise,
    rng: np.random.Generator,
    step: int = 0,
):
    """Simulated grounding pass over the currently visible cells.

    Returns a DetectionCandidate at a visible true instance unless missed,
    else possibly a false positive at a visible distractor. An enriched
    prompt matching the true instance multiplies both error rates by
    enrich_gain. Draws come only from `rng`, so runs are seed-deterministic.
    """
    visible_targets = [
        t for t in world.targets if t.category == category and visible[t.cell]
    ]
    enriched = isinstance(prompt, EnrichedPrompt)
    if visible_targets:
        t = visible_targets[0]
        miss = noise.miss_rate * (noise.enrich_gain if _prompt_matches(prompt, t) else 1.0)
        if rng.random() >= miss:
            return DetectionCandidate(t.cell, step, prompt, 0.95)
    visible_distractors = [d for d in world.distractors if visible[d.cell]]
    if visible_distractors:
        fp = noise.fp_rate * (noise.enrich_gain if enriched else 1.0)
        if rng.random() < fp:
            pick = visible_distractors[int(rng.integers(len(visible_distractors)))]
            return DetectionCandidate(pick.cell, step, prompt, 0.5)
    return None


def judge_frame(world, category: str, candidate: DetectionCandidate, visible: np.ndarray) -> str:
    """Simulated per-frame verdict: the candidate cell is accepted when it
    holds a visible true instance, rejected when it holds a visible
    distractor, and undecided when it is occluded or out of view."""
    cell = candidate.position
    if not visible[cell]:
        return NO_DECISION
    for t in world.targets:
        if t.cell == cell and t.category == category:
            return ACCEPTED
    for d in world.distractors:
        if d.cell == cell:
            return REJECTED
    return NO_DECISION
