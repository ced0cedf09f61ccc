"""Clip manifests: the pipeline's canonical JSONL input.

One JSON object per line: ``clip_id`` (string), ``frames`` (array of frame
references, temporal order), optional ``fps`` (positive number) and ``tags``
(string-to-string map). Frame references are usually paths relative to the
manifest's directory, but the parser treats them as opaque tokens.
"""

from __future__ import annotations

import fnmatch
import json
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

from .errors import DuplicateClip, EmptyClip, ParseError


@dataclass
class ClipManifestEntry:
    """One clip: identity plus its frames in temporal order."""

    clip_id: str
    frames: list[str]
    fps: float | None = None
    tags: dict[str, str] | None = None
    # Source line for diagnostics; not part of the entry's identity.
    line_no: int | None = field(default=None, compare=False)


def _validate_entry(obj: dict, line_no: int) -> ClipManifestEntry:
    if not isinstance(obj, dict):
        raise ParseError("entry is not a JSON object", line_no)
    clip_id = obj.get("clip_id")
    if not isinstance(clip_id, str):
        raise ParseError("clip_id missing or not a string", line_no)
    frames = obj.get("frames")
    if not isinstance(frames, list) or not all(isinstance(f, str) for f in frames):
        raise ParseError("frames missing or not an array of strings", line_no)
    if not frames:
        raise EmptyClip(f"clip {clip_id!r} has no frames (line {line_no})")
    fps = obj.get("fps")
    if fps is not None:
        if not isinstance(fps, (int, float)) or isinstance(fps, bool) or fps <= 0:
            raise ParseError(f"fps must be a positive number, got {fps!r}", line_no)
        fps = float(fps)
    tags = obj.get("tags")
    if tags is not None:
        if not isinstance(tags, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in tags.items()
        ):
            raise ParseError("tags must be a string-to-string object", line_no)
    return ClipManifestEntry(clip_id=clip_id, frames=list(frames), fps=fps, tags=tags, line_no=line_no)


def parse_manifest(stream: BinaryIO | bytes) -> list[ClipManifestEntry]:
    """Parse a JSONL manifest; entries come back in file order.

    Blank lines are skipped so trailing newlines are harmless. Input must be
    strict UTF-8.
    """
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    try:
        text = bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"manifest is not valid UTF-8: {exc}") from exc

    entries: list[ClipManifestEntry] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
        entry = _validate_entry(obj, line_no)
        if entry.clip_id in seen:
            raise DuplicateClip(
                f"clip {entry.clip_id!r} on line {line_no} already defined on line {seen[entry.clip_id]}"
            )
        seen[entry.clip_id] = line_no
        entries.append(entry)
    return entries


def scan_frame_dir(path: str | os.PathLike, pattern: str = "*") -> ClipManifestEntry:
    """Build a single-clip entry from a directory of frame files.

    Matching filenames are ordered byte-lexicographically, so frame numbers
    must be zero-padded (``f1, f10, f2`` sorts wrong; ``f01, f02, f10`` is
    correct). The clip id is the directory basename.
    """
    names = [
        name
        for name in os.listdir(path)
        if fnmatch.fnmatchcase(name, pattern) and os.path.isfile(os.path.join(path, name))
    ]
    names.sort(key=lambda name: name.encode("utf-8"))
    clip_id = os.path.basename(os.path.normpath(os.fspath(path)))
    if not names:
        raise EmptyClip(f"no frames matching {pattern!r} in {os.fspath(path)!r}")
    return ClipManifestEntry(clip_id=clip_id, frames=names)


def entry_to_json_obj(entry: ClipManifestEntry) -> dict:
    """Canonical JSON object for an entry: fixed key order, optionals omitted."""
    obj: dict = {"clip_id": entry.clip_id, "frames": list(entry.frames)}
    if entry.fps is not None:
        obj["fps"] = entry.fps
    if entry.tags is not None:
        obj["tags"] = {k: entry.tags[k] for k in sorted(entry.tags)}
    return obj


def write_manifest(entries: Iterable[ClipManifestEntry]) -> bytes:
    """Serialize entries back to JSONL; byte-deterministic given equal entries."""
    lines = [
        json.dumps(entry_to_json_obj(entry), separators=(",", ":"), ensure_ascii=False)
        for entry in entries
    ]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
