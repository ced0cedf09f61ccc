"""Command-line pipeline: augment, metrics, inspect, bench.

All randomness flows from --seed; output bytes never depend on wall clock,
worker count, or completion order. Set FLUXFLOW_LOG=debug|info|warning to
control diagnostics verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, emit, manifest, metrics, pnm
from .core import Mode, Permutation, PerturbationSpec, perturb_clip
from .errors import FluxflowError, InvalidSpec

log = logging.getLogger("fluxflow")


def _configure_logging() -> None:
    level = os.environ.get("FLUXFLOW_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(message)s")


def _spec_from_args(args: argparse.Namespace) -> PerturbationSpec:
    return PerturbationSpec(
        mode=Mode.BLOCK if args.block else Mode.FRAME,
        count=args.count,
        ratio=args.ratio,
        block_size=args.block_size,
        min_gap=args.min_gap if args.min_gap is not None else 0,
        gap_ratio=args.gap_ratio,
        require_move=args.require_move,
    )


def _load_entries(input_path: str) -> tuple[list[manifest.ClipManifestEntry], Path]:
    """Entries plus the directory frame references resolve against."""
    path = Path(input_path)
    if path.is_dir():
        entries = [manifest.scan_frame_dir(path)]
        base_dir = path
    else:
        with open(path, "rb") as fh:
            entries = manifest.parse_manifest(fh)
        base_dir = path.parent
    log.info("loaded %d clips from %s", len(entries), input_path)
    return entries, base_dir


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--frame", action="store_true", help="shuffle individual frames")
    mode.add_argument("--block", action="store_true", help="reorder contiguous frame blocks")
    degree = parser.add_mutually_exclusive_group(required=True)
    degree.add_argument("--count", type=int, help="number of frames/blocks to move")
    degree.add_argument("--ratio", type=float, help="fraction of frames/blocks to move")
    parser.add_argument("--block-size", type=int, help="frames per block (block mode)")
    gap = parser.add_mutually_exclusive_group()
    gap.add_argument("--min-gap", type=int, help="minimum index distance between selections")
    gap.add_argument("--gap-ratio", type=float, help="minimum distance as a fraction of length")
    parser.add_argument("--require-move", action="store_true", help="forbid identity shuffles")
    parser.add_argument("--seed", type=int, default=0, help="global seed (default 0)")


class _OutputSet:
    """Tracks files written by one command so failures leave nothing behind."""

    def __init__(self):
        self.paths: list[Path] = []

    def write(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        log.debug("wrote %s (%d bytes)", path, len(data))
        self.paths.append(path)

    def remove_all(self) -> None:
        for path in self.paths:
            try:
                path.unlink()
            except OSError:
                pass


def cmd_augment(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    outputs = _OutputSet()
    try:
        if args.workers < 1:
            raise InvalidSpec(f"workers must be >= 1, got {args.workers}")
        spec = _spec_from_args(args)
        entries, base_dir = _load_entries(args.input)
        seed = args.seed

        def one(entry: manifest.ClipManifestEntry) -> emit.PerturbationRecord:
            return emit.make_record(entry.clip_id, len(entry.frames), spec, seed)

        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            records = list(pool.map(one, entries))
        by_id = {r.clip_id: r for r in records}

        out = Path(args.output)
        if args.mode == "index":
            outputs.write(
                Path(f"{out}.manifest.jsonl"), emit.write_augmented_manifest(entries, by_id)
            )
        else:

            def loader(entry: manifest.ClipManifestEntry, ref: str) -> bytes:
                data = (base_dir / ref).read_bytes()
                pnm.load_pnm(data)  # validate before shipping
                return data

            for shard in emit.build_tar_shards(
                entries, by_id, loader, args.shard_size, prefix=out.name
            ):
                outputs.write(out.parent / shard.tar_name, shard.tar_bytes)
                outputs.write(out.parent / shard.sidecar_name, shard.sidecar_bytes)
        outputs.write(Path(f"{out}.log.jsonl"), emit.write_perturbation_log(records))

        moved = sum(len(Permutation(r.permutation, r.n_frames).moved_indices()) for r in records)
        elapsed = time.perf_counter() - started
        print(f"augmented {len(entries)} clips, {moved} frames moved, {elapsed:.3f}s")
        return 0
    except (FluxflowError, OSError) as exc:
        outputs.remove_all()
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _load_rasters(
    entry: manifest.ClipManifestEntry, base_dir: Path
) -> list[pnm.FrameRaster]:
    return [pnm.load_pnm_file(base_dir / ref) for ref in entry.frames]


def cmd_metrics(args: argparse.Namespace) -> int:
    outputs = _OutputSet()
    try:
        entries, base_dir = _load_entries(args.input)
    except (FluxflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    reports = []
    failures = 0
    for entry in entries:
        try:
            frames = _load_rasters(entry, base_dir)
            reports.append(
                metrics.temporal_report(
                    entry.clip_id, frames, block=args.flow_block, radius=args.flow_radius
                )
            )
        except (FluxflowError, OSError) as exc:
            failures += 1
            print(f"clip {entry.clip_id!r} failed: {exc}", file=sys.stderr)
    out = Path(args.output)
    outputs.write(Path(f"{out}.metrics.jsonl"), metrics.write_temporal_reports(reports))
    if args.csv:
        outputs.write(Path(f"{out}.angular.csv"), metrics.write_angular_csv(reports))
    print(f"reported {len(reports)} clips, {failures} failed")
    return 1 if failures else 0


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        with open(args.input, "rb") as fh:
            records = emit.read_perturbation_log(fh)
        displacement: dict[int, int] = {}
        for record in records:
            emit.replay_record(record)
            for i, dst in enumerate(record.permutation):
                d = abs(dst - i)
                displacement[d] = displacement.get(d, 0) + 1
        print(f"OK, {len(records)} records verified")
        for d in sorted(displacement):
            print(f"displacement {d}: {displacement[d]}")
        return 0
    except (FluxflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _bench_index(clips: int, frames: int, seed: int) -> tuple[float, str]:
    spec = PerturbationSpec(mode=Mode.FRAME, count=2)
    digest = hashlib.sha256()
    started = time.perf_counter()
    for i in range(clips):
        permutation, _, _ = perturb_clip(f"bench-{i:08d}", frames, spec, seed)
        digest.update(repr(permutation.map).encode())
    elapsed = time.perf_counter() - started
    return clips / elapsed if elapsed > 0 else float("inf"), digest.hexdigest()


def _bench_raster(clips: int, frames: int, size: int, seed: int) -> tuple[float, int]:
    spec = PerturbationSpec(mode=Mode.FRAME, count=2)
    entries = []
    rasters: dict[str, bytes] = {}
    for c in range(clips):
        clip_id = f"bench-{c:04d}"
        refs = []
        for f in range(frames):
            ref = f"{clip_id}/{f:06}.pgm"
            shade = (c * frames + f) % 256
            rasters[ref] = pnm.encode_pnm(
                pnm.FrameRaster(size, size, 1, bytes([shade]) * (size * size))
            )
            refs.append(ref)
        entries.append(manifest.ClipManifestEntry(clip_id=clip_id, frames=refs))
    records = {
        e.clip_id: emit.make_record(e.clip_id, len(e.frames), spec, seed) for e in entries
    }
    started = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        total = 0
        for shard in emit.build_tar_shards(
            entries, records, lambda e, ref: rasters[ref], shard_size=4, prefix="bench"
        ):
            Path(tmp, shard.tar_name).write_bytes(shard.tar_bytes)
            Path(tmp, shard.sidecar_name).write_bytes(shard.sidecar_bytes)
            total += len(shard.tar_bytes)
    elapsed = time.perf_counter() - started
    return (total / (1024 * 1024)) / elapsed if elapsed > 0 else float("inf"), total


def cmd_bench(args: argparse.Namespace) -> int:
    perms_per_sec, digest = _bench_index(args.clips, args.frames, args.seed)
    mb_per_sec, raster_bytes = _bench_raster(
        args.raster_clips, args.raster_frames, args.raster_size, args.seed
    )
    print(
        json.dumps(
            {
                "index_clips": args.clips,
                "index_frames": args.frames,
                "index_perms_per_sec": round(perms_per_sec, 1),
                "perm_digest": digest,
                "raster_clips": args.raster_clips,
                "raster_bytes": raster_bytes,
                "raster_mb_per_sec": round(mb_per_sec, 2),
                "seed": args.seed,
            },
            separators=(",", ":"),
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxflow", description="Deterministic temporal augmentation for frame sequences"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_aug = sub.add_parser("augment", help="permute clips and write outputs plus audit log")
    p_aug.add_argument("-i", "--input", required=True, help="manifest JSONL or frame directory")
    p_aug.add_argument("-o", "--output", required=True, help="output prefix")
    _add_spec_flags(p_aug)
    p_aug.add_argument(
        "--mode", choices=("index", "materialize"), default="index",
        help="permute references only, or write tar shards",
    )
    p_aug.add_argument("--shard-size", type=int, default=64, help="max clips per tar shard")
    p_aug.add_argument("--workers", type=int, default=1, help="parallel clip workers")
    p_aug.set_defaults(func=cmd_augment)

    p_met = sub.add_parser("metrics", help="temporal diagnostics over clip rasters")
    p_met.add_argument("-i", "--input", required=True, help="manifest JSONL or frame directory")
    p_met.add_argument("-o", "--output", required=True, help="output prefix")
    p_met.add_argument("--flow-block", type=int, default=metrics.DEFAULT_BLOCK)
    p_met.add_argument("--flow-radius", type=int, default=metrics.DEFAULT_RADIUS)
    p_met.add_argument("--csv", action="store_true", help="also write the angular series CSV")
    p_met.set_defaults(func=cmd_metrics)

    p_ins = sub.add_parser("inspect", help="replay-verify a perturbation log")
    p_ins.add_argument("-i", "--input", required=True, help="perturbation log JSONL")
    p_ins.set_defaults(func=cmd_inspect)

    p_ben = sub.add_parser("bench", help="throughput on synthetic workloads")
    p_ben.add_argument("--clips", type=int, default=10000)
    p_ben.add_argument("--frames", type=int, default=16)
    p_ben.add_argument("--raster-clips", type=int, default=8)
    p_ben.add_argument("--raster-frames", type=int, default=8)
    p_ben.add_argument("--raster-size", type=int, default=64)
    p_ben.add_argument("--seed", type=int, default=0)
    p_ben.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
