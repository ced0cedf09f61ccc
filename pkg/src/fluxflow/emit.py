"""Output writers: augmented manifests, tar shards, and the audit log.

Reproducibility is the product promise, so every writer here is byte
deterministic: fixed JSON key order, zeroed tar metadata, shard order by
clip index. The audit log binds (clip, spec, derived seed, permutation)
per clip; ``replay_record`` proves any log line against the perturbation
core.
"""

from __future__ import annotations

import io
import json
import tarfile
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    FluxflowError,
    InvalidSpec,
    LengthMismatch,
    MissingRecord,
    ParseError,
    ReplayMismatch,
)
from .manifest import ClipManifestEntry, entry_to_json_obj
from .core import Mode, Permutation, PerturbationSpec, perturb, perturb_clip
from .rng import RngState

_SPEC_KEYS = ("mode", "count", "ratio", "block_size", "min_gap", "gap_ratio", "require_move")


@dataclass
class PerturbationRecord:
    """Audit log entry: everything needed to replay one clip's permutation."""

    clip_id: str
    n_frames: int
    spec: PerturbationSpec
    clip_seed: int
    selection: list[int]
    permutation: list[int]


def make_record(
    clip_id: str, n_frames: int, spec: PerturbationSpec, global_seed: int
) -> PerturbationRecord:
    """Perturb one clip under the run seed and capture the audit record."""
    permutation, selection, clip_seed = perturb_clip(clip_id, n_frames, spec, global_seed)
    return PerturbationRecord(
        clip_id=clip_id,
        n_frames=n_frames,
        spec=spec,
        clip_seed=clip_seed,
        selection=list(selection.indices),
        permutation=list(permutation.map),
    )


def spec_to_json_obj(spec: PerturbationSpec) -> dict:
    return {
        "mode": spec.mode.value,
        "count": spec.count,
        "ratio": spec.ratio,
        "block_size": spec.block_size,
        "min_gap": spec.min_gap,
        "gap_ratio": spec.gap_ratio,
        "require_move": spec.require_move,
    }


def spec_from_json_obj(obj: dict) -> PerturbationSpec:
    unknown = set(obj) - set(_SPEC_KEYS)
    if unknown:
        raise ParseError(f"unknown spec fields {sorted(unknown)}")
    try:
        return PerturbationSpec(
            mode=Mode(obj["mode"]),
            count=obj.get("count"),
            ratio=obj.get("ratio"),
            block_size=obj.get("block_size"),
            min_gap=obj.get("min_gap", 0),
            gap_ratio=obj.get("gap_ratio"),
            require_move=bool(obj.get("require_move", False)),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad spec object: {exc}") from exc


def record_to_json_obj(record: PerturbationRecord) -> dict:
    # Field order is part of the log format; do not reorder.
    return {
        "clip_id": record.clip_id,
        "n_frames": record.n_frames,
        "spec": spec_to_json_obj(record.spec),
        "clip_seed": record.clip_seed,
        "selection": list(record.selection),
        "permutation": list(record.permutation),
    }


def write_perturbation_log(records: Iterable[PerturbationRecord]) -> bytes:
    lines = [
        json.dumps(record_to_json_obj(r), separators=(",", ":"), ensure_ascii=False)
        for r in records
    ]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def read_perturbation_log(stream) -> list[PerturbationRecord]:
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    try:
        text = bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"log is not valid UTF-8: {exc}") from exc
    records = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
        try:
            records.append(
                PerturbationRecord(
                    clip_id=obj["clip_id"],
                    n_frames=obj["n_frames"],
                    spec=spec_from_json_obj(obj["spec"]),
                    clip_seed=obj["clip_seed"],
                    selection=list(obj["selection"]),
                    permutation=list(obj["permutation"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad record: {exc}", line_no) from exc
    return records


def replay_record(record: PerturbationRecord) -> None:
    """Re-run the perturbation from the logged spec and seed; raise on any drift."""
    permutation, selection = perturb(record.n_frames, record.spec, RngState(record.clip_seed))
    if permutation.map != record.permutation:
        raise ReplayMismatch(f"clip {record.clip_id!r}: permutation does not replay")
    if selection.indices != record.selection:
        raise ReplayMismatch(f"clip {record.clip_id!r}: selection does not replay")


def write_augmented_manifest(
    entries: Sequence[ClipManifestEntry],
    records: Mapping[str, PerturbationRecord],
) -> bytes:
    """Manifest with each entry's frames array permuted per its record.

    Index mode: no pixel I/O, the permutation is applied to the references.
    """
    lines = []
    for entry in entries:
        record = records.get(entry.clip_id)
        if record is None:
            raise MissingRecord(entry.clip_id)
        perm = Permutation(list(record.permutation), record.n_frames)
        if len(entry.frames) != perm.n:
            raise LengthMismatch(
                f"clip {entry.clip_id!r}: {len(entry.frames)} frames vs record n_frames {perm.n}"
            )
        obj = entry_to_json_obj(entry)
        permuted = [""] * perm.n
        for i, ref in enumerate(entry.frames):
            permuted[perm.map[i]] = ref
        obj["frames"] = permuted
        lines.append(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


@dataclass
class Shard:
    """One materialized output shard plus its checksum sidecar."""

    index: int
    tar_name: str
    sidecar_name: str
    tar_bytes: bytes
    sidecar_bytes: bytes


def _member_extension(frame_bytes: bytes) -> str:
    return ".ppm" if frame_bytes[:2] == b"P6" else ".pgm"


def _add_member(tar: tarfile.TarFile, name: str, payload: bytes) -> dict:
    info = tarfile.TarInfo(name=name)
    info.size = len(payload)
    info.mtime = 0
    info.mode = 0o644
    info.uid = 0
    info.gid = 0
    info.uname = ""
    info.gname = ""
    tar.addfile(info, io.BytesIO(payload))
    return {"member": name, "size": len(payload), "crc32": zlib.crc32(payload)}


def build_tar_shards(
    entries: Sequence[ClipManifestEntry],
    records: Mapping[str, PerturbationRecord],
    frame_loader: Callable[[ClipManifestEntry, str], bytes],
    shard_size: int,
    prefix: str,
) -> list[Shard]:
    """Materialize clips into POSIX ustar shards, at most ``shard_size`` clips each.

    Member ``{clip_id}/{position:06}.pgm|.ppm`` holds the source frame bytes
    that land at temporal ``position`` after permutation. ``frame_loader``
    returns the raw (already validated) bytes for one frame reference.
    """
    if shard_size < 1:
        raise InvalidSpec(f"shard_size must be >= 1, got {shard_size}")
    shards: list[Shard] = []
    for shard_index in range(0, (len(entries) + shard_size - 1) // shard_size):
        chunk = entries[shard_index * shard_size : (shard_index + 1) * shard_size]
        buf = io.BytesIO()
        checksums = []
        with tarfile.open(fileobj=buf, mode="w", format=tarfile.USTAR_FORMAT) as tar:
            for entry in chunk:
                record = records.get(entry.clip_id)
                if record is None:
                    raise MissingRecord(entry.clip_id)
                if len(entry.frames) != record.n_frames:
                    raise LengthMismatch(
                        f"clip {entry.clip_id!r}: {len(entry.frames)} frames vs record "
                        f"n_frames {record.n_frames}"
                    )
                members: list[tuple[int, str, bytes]] = []
                for i, ref in enumerate(entry.frames):
                    try:
                        payload = frame_loader(entry, ref)
                    except (FluxflowError, OSError) as exc:
                        raise _with_clip_context(exc, entry.clip_id, ref) from exc
                    position = record.permutation[i]
                    name = f"{entry.clip_id}/{position:06}{_member_extension(payload)}"
                    members.append((position, name, payload))
                members.sort()  # permuted temporal order
                for _, name, payload in members:
                    checksums.append(_add_member(tar, name, payload))
        sidecar_lines = [json.dumps(c, separators=(",", ":")) for c in checksums]
        shards.append(
            Shard(
                index=shard_index,
                tar_name=f"{prefix}-{shard_index:05}.tar",
                sidecar_name=f"{prefix}-{shard_index:05}.crc.jsonl",
                tar_bytes=buf.getvalue(),
                sidecar_bytes=("\n".join(sidecar_lines) + "\n").encode("utf-8")
                if sidecar_lines
                else b"",
            )
        )
    return shards


def _with_clip_context(exc: Exception, clip_id: str, ref: str) -> Exception:
    message = f"clip {clip_id!r} frame {ref!r}: {exc}"
    try:
        return exc.__class__(message)
    except TypeError:
        return FluxflowError(message)
