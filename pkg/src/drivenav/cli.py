"""Batch experiment runner and entry point.

Runs repetitions x policies over generated or file-backed worlds, writes one
trace JSON per episode plus an aggregate summary CSV. All randomness derives
from (seed base + episode index), so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import episode as ep
from . import semantics, trace, world as world_mod
from .eikonal import SpeedParams
from .semantics import GrounderNoise

log = logging.getLogger("drivenav")


@dataclass(frozen=True)
class RunManifest:
    world_source: object  # Path to a map file or a GeneratorSpec
    policies: tuple
    base_config: ep.EpisodeConfig
    repetitions: int = 1
    seed_base: int = 0
    out_dir: Path = Path("runs")
    common_solved: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        for p in self.policies:
            if p not in ep.POLICIES:
                raise ValueError(f"unknown policy {p!r}")


@dataclass
class BatchSummary:
    rows: list = field(default_factory=list)
    records: dict = field(default_factory=dict)  # policy -> list[EpisodeRecord]

    def row_for(self, policy: str) -> dict:
        for row in self.rows:
            if row["policy"] == policy:
                return row
        raise KeyError(policy)


def _world_for(manifest: RunManifest, index: int) -> world_mod.World:
    src = manifest.world_source
    if isinstance(src, world_mod.GeneratorSpec):
        return world_mod.generate_world(src, manifest.seed_base + index)
    return world_mod.load_world_file(src)


def run_batch(manifest: RunManifest) -> BatchSummary:
    """Execute the manifest and write traces plus summary.csv to out_dir."""
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    worlds = [_world_for(manifest, i) for i in range(manifest.repetitions)]
    summary = BatchSummary()
    for policy in manifest.policies:
        records = []
        for i, world in enumerate(worlds):
            config = replace(
                manifest.base_config, policy=policy, seed=manifest.seed_base + i
            )
            record = ep.run_episode(world, config)
            records.append(record)
            path = out / f"trace_{policy}_{i:04d}.json"
            path.write_text(trace.emit_trace(record))
            log.info(
                "episode %s/%d: success=%s steps=%d", policy, i, record.success, record.steps
            )
        summary.records[policy] = records
    keep = range(manifest.repetitions)
    if manifest.common_solved:
        keep = [
            i
            for i in range(manifest.repetitions)
            if all(summary.records[p][i].success for p in manifest.policies)
        ]
    for policy in manifest.policies:
        chosen = [summary.records[policy][i] for i in keep]
        if chosen:
            agg = ep.compute_spl(chosen)
            row = {
                "policy": policy,
                "sr": agg.sr,
                "spl": agg.spl,
                "mean_steps": agg.mean_steps,
                "mean_rotations": agg.mean_rotations,
                "episodes": len(chosen),
            }
        else:
            row = {
                "policy": policy,
                "sr": 0.0,
                "spl": 0.0,
                "mean_steps": 0.0,
                "mean_rotations": 0.0,
                "episodes": 0,
            }
        summary.rows.append(row)
    _write_summary(out / "summary.csv", summary.rows)
    return summary


def _write_summary(path: Path, rows):
    lines = ["policy,sr,spl,mean_steps,mean_rotations,episodes"]
    for row in rows:
        lines.append(
            f"{row['policy']},{row['sr']!r},{row['spl']!r},"
            f"{row['mean_steps']!r},{row['mean_rotations']!r},{row['episodes']}"
        )
    path.write_text("\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="drivenav",
        description="Direction-first exploration planning in a 2D grid-world simulator",
    )
    src = p.add_mutually_exclusive_group(required=False)
    src.add_argument("--map", type=Path, help="ASCII world map (.txt with .json sidecar)")
    src.add_argument(
        "--generator",
        choices=world_mod.GENERATOR_KINDS,
        help="procedural world family",
    )
    p.add_argument("--gen-width", type=int, default=61)
    p.add_argument("--gen-height", type=int, default=61)
    p.add_argument("--gen-targets", type=int, default=1)
    p.add_argument("--gen-distractors", type=int, default=4)
    p.add_argument("--gen-branches", type=int, default=3)
    p.add_argument("--resolution", type=float, default=0.25, help="meters per cell for generated worlds")
    p.add_argument(
        "--policy",
        default=ep.DRIVE_NAV,
        help="comma-separated subset of %s or 'all'" % (",".join(ep.POLICIES)),
    )
    p.add_argument("--selector", choices=("heuristic", "omniscient", "scripted"), default="heuristic")
    p.add_argument("--script", type=Path, help="scripted-selector decision file")
    p.add_argument("--seed", type=int, default=0, help="seed base; episode i uses seed+i")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--budget", type=int, default=500)
    p.add_argument("--lambda", dest="lam", type=float, default=0.7, help="obstacle penalty strength")
    p.add_argument("--r-obs", type=float, default=3.0, help="obstacle influence radius (cells)")
    p.add_argument("--beta", type=float, default=0.5, help="skeleton attraction strength")
    p.add_argument("--r-vor", type=float, default=2.0, help="skeleton decay radius (cells)")
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--miss-rate", type=float, default=0.0)
    p.add_argument("--enrich-gain", type=float, default=0.5)
    p.add_argument("--no-verify", action="store_true", help="accept detections without the 3-frame check")
    p.add_argument("--no-enrich", action="store_true", help="ground with the bare category prompt")
    p.add_argument("--per-frontier-solves", action="store_true")
    p.add_argument("--common-solved", action="store_true", help="aggregate only episodes solved by every policy")
    p.add_argument("--serve", action="store_true", help="run the operator bridge service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--out", type=Path, default=Path("runs"))
    return p


def manifest_from_args(args) -> RunManifest:
    if args.map:
        source = args.map
    else:
        kind = args.generator or "corridor-branch"
        source = world_mod.GeneratorSpec(
            kind=kind,
            width=args.gen_width,
            height=args.gen_height,
            targets=args.gen_targets,
            distractors=args.gen_distractors,
            branches=args.gen_branches,
            resolution=args.resolution,
        )
    if args.policy == "all":
        policies = ep.POLICIES
    else:
        policies = tuple(s.strip() for s in args.policy.split(",") if s.strip())
    script = ()
    if args.script:
        script = tuple(semantics.parse_selector_script(args.script.read_text()))
    config = ep.EpisodeConfig(
        budget=args.budget,
        policy=policies[0] if policies else ep.DRIVE_NAV,
        selector=args.selector,
        selector_script=script,
        speed=SpeedParams(lam=args.lam, r_obs=args.r_obs, beta=args.beta, r_vor=args.r_vor),
        noise=GrounderNoise(
            fp_rate=args.fp_rate,
            miss_rate=args.miss_rate,
            enrich_gain=args.enrich_gain,
        ),
        verification=not args.no_verify,
        enrichment=not args.no_enrich,
        per_frontier_solves=args.per_frontier_solves,
    )
    return RunManifest(
        world_source=source,
        policies=policies,
        base_config=config,
        repetitions=args.reps,
        seed_base=args.seed,
        out_dir=args.out,
        common_solved=args.common_solved,
    )


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("DRIVE_NAV_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        manifest = manifest_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.serve:
        from . import bridge

        world = _world_for(manifest, 0)
        bridge.serve(world, manifest.base_config, host=args.host, port=args.port)
        return 0
    try:
        summary = run_batch(manifest)
    except (world_mod.WorldError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for row in summary.rows:
        print(
            f"{row['policy']}: SR={row['sr']:.3f} SPL={row['spl']:.3f} "
            f"steps={row['mean_steps']:.1f} rotations={row['mean_rotations']:.1f} "
            f"n={row['episodes']}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
