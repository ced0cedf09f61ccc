"""Desk-scale temporal diagnostics: flow, angular differences, flicker.

The flow estimator is exhaustive block matching under sum-of-absolute
differences with fully specified tie-breaking, so every number here is
exactly reproducible. These diagnostics demonstrate that perturbed inputs
are measurably different (flicker, direction changes); they are analogues
of generator-quality analyses, not replications of any benchmark metric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidSpec, TooFewFrames
from .pnm import FrameRaster

DEFAULT_BLOCK = 8
DEFAULT_RADIUS = 4

# Below this mean-flow magnitude (pixels) the direction is noise, not motion.
ANGLE_EPSILON = 0.25

MAGNITUDE_BINS = 16  # width 1 px, last bin open-ended
ANGLE_BINS = 8  # over (-pi, pi]


@dataclass
class FlowField:
    """Per-tile integer displacements from one frame to the next."""

    grid_w: int
    grid_h: int
    vectors: list[tuple[int, int]]  # row-major (dx, dy)
    block: int
    radius: int


@dataclass
class MotionProfile:
    """Per frame-pair mean flow direction and magnitude.

    ``mean_angle`` entries are ``None`` where the mean flow is too small to
    carry a meaningful direction.
    """

    mean_angle: list[float | None]
    mean_magnitude: list[float]


@dataclass
class TemporalReport:
    """One clip's temporal diagnostics."""

    clip_id: str
    angular_diff: list[float | None]
    flicker: float
    signature: list[float]

    @property
    def angular_diff_defined(self) -> list[float]:
        return [d for d in self.angular_diff if d is not None]

    @property
    def angular_diff_mean(self) -> float | None:
        defined = self.angular_diff_defined
        return sum(defined) / len(defined) if defined else None

    @property
    def angular_diff_std(self) -> float | None:
        defined = self.angular_diff_defined
        if not defined:
            return None
        mean = sum(defined) / len(defined)
        return math.sqrt(sum((d - mean) ** 2 for d in defined) / len(defined))


def _luma(raster: FrameRaster) -> np.ndarray:
    """Raster as an int32 grayscale array (integer BT.601 luma for RGB)."""
    pixels = np.frombuffer(raster.pixels, dtype=np.uint8)
    if raster.channels == 1:
        return pixels.reshape(raster.height, raster.width).astype(np.int32)
    rgb = pixels.reshape(raster.height, raster.width, 3).astype(np.int32)
    return (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2]) // 1000


def _check_same_shape(a: FrameRaster, b: FrameRaster) -> None:
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
        raise DimensionMismatch(
            f"{a.width}x{a.height}x{a.channels} vs {b.width}x{b.height}x{b.channels}"
        )


def block_matching_flow(
    prev: FrameRaster,
    next_: FrameRaster,
    block: int = DEFAULT_BLOCK,
    radius: int = DEFAULT_RADIUS,
) -> FlowField:
    """Exhaustive SAD block matching from ``prev`` to ``next_``.

    For each block-aligned tile of ``prev``, search every displacement in
    ``[-radius, radius]^2`` whose window stays inside ``next_`` and keep the
    SAD minimizer. Ties break toward smaller ``|dx|+|dy|``, then smaller
    ``dy``, then smaller ``dx``, so results are order-independent and exact.
    """
    _check_same_shape(prev, next_)
    if block < 1 or radius < 1:
        raise InvalidSpec(f"block and radius must be >= 1, got {block}, {radius}")
    if block > min(prev.width, prev.height):
        raise InvalidSpec(
            f"block {block} exceeds frame size {prev.width}x{prev.height}"
        )
    prev_l = _luma(prev)
    next_l = _luma(next_)
    h, w = prev_l.shape
    grid_h, grid_w = h // block, w // block

    candidates = sorted(
        ((dy, dx) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)),
        key=lambda c: (abs(c[1]) + abs(c[0]), c[0], c[1]),
    )
    best_sad = np.full((grid_h, grid_w), np.iinfo(np.int64).max, dtype=np.int64)
    best_dx = np.zeros((grid_h, grid_w), dtype=np.int64)
    best_dy = np.zeros((grid_h, grid_w), dtype=np.int64)

    for dy, dx in candidates:
        # Sub-grid of blocks whose displaced window stays inside the frame.
        gy0 = (-dy + block - 1) // block if dy < 0 else 0
        gx0 = (-dx + block - 1) // block if dx < 0 else 0
        gy1 = min(grid_h - 1, (h - dy) // block - 1)
        gx1 = min(grid_w - 1, (w - dx) // block - 1)
        if gy0 > gy1 or gx0 > gx1:
            continue
        rows = slice(gy0 * block, (gy1 + 1) * block)
        cols = slice(gx0 * block, (gx1 + 1) * block)
        shifted_rows = slice(gy0 * block + dy, (gy1 + 1) * block + dy)
        shifted_cols = slice(gx0 * block + dx, (gx1 + 1) * block + dx)
        diff = np.abs(prev_l[rows, cols] - next_l[shifted_rows, shifted_cols])
        sads = diff.reshape(gy1 - gy0 + 1, block, gx1 - gx0 + 1, block).sum(
            axis=(1, 3), dtype=np.int64
        )
        region = (slice(gy0, gy1 + 1), slice(gx0, gx1 + 1))
        improved = sads < best_sad[region]
        best_sad[region] = np.where(improved, sads, best_sad[region])
        best_dx[region] = np.where(improved, dx, best_dx[region])
        best_dy[region] = np.where(improved, dy, best_dy[region])

    vectors = [
        (int(best_dx[gy, gx]), int(best_dy[gy, gx]))
        for gy in range(grid_h)
        for gx in range(grid_w)
    ]
    return FlowField(grid_w=grid_w, grid_h=grid_h, vectors=vectors, block=block, radius=radius)


def motion_profile(
    frames: Sequence[FrameRaster],
    block: int = DEFAULT_BLOCK,
    radius: int = DEFAULT_RADIUS,
) -> MotionProfile:
    """Flow statistics for every consecutive frame pair."""
    if len(frames) < 2:
        raise TooFewFrames(f"need >= 2 frames, got {len(frames)}")
    angles: list[float | None] = []
    magnitudes: list[float] = []
    for prev, next_ in zip(frames, frames[1:]):
        field = block_matching_flow(prev, next_, block=block, radius=radius)
        dxs = [v[0] for v in field.vectors]
        dys = [v[1] for v in field.vectors]
        count = len(field.vectors)
        mean_dx = sum(dxs) / count
        mean_dy = sum(dys) / count
        magnitudes.append(sum(math.hypot(dx, dy) for dx, dy in field.vectors) / count)
        if math.hypot(mean_dx, mean_dy) >= ANGLE_EPSILON:
            angles.append(math.atan2(mean_dy, mean_dx))
        else:
            angles.append(None)
    return MotionProfile(mean_angle=angles, mean_magnitude=magnitudes)


def wrapped_angle_difference(a: float, b: float) -> float:
    """Absolute angular distance in [0, pi], correct across the +/-pi seam."""
    diff = abs(b - a) % (2.0 * math.pi)
    return 2.0 * math.pi - diff if diff > math.pi else diff


def angular_difference_series(profile: MotionProfile) -> list[float | None]:
    """Change in mean flow direction between consecutive frame pairs.

    Entries touching an undefined (low-magnitude) angle come back as ``None``
    and are excluded from aggregates.
    """
    if len(profile.mean_angle) < 2:
        raise TooFewFrames(f"need >= 2 flow fields, got {len(profile.mean_angle)}")
    series: list[float | None] = []
    for a, b in zip(profile.mean_angle, profile.mean_angle[1:]):
        if a is None or b is None:
            series.append(None)
        else:
            series.append(wrapped_angle_difference(a, b))
    return series


def flicker_score(frames: Sequence[FrameRaster]) -> float:
    """Mean absolute per-sample difference between consecutive frames, 8-bit units."""
    if len(frames) < 2:
        raise TooFewFrames(f"need >= 2 frames, got {len(frames)}")
    pair_means = []
    for prev, next_ in zip(frames, frames[1:]):
        _check_same_shape(prev, next_)
        a = np.frombuffer(prev.pixels, dtype=np.uint8).astype(np.int32)
        b = np.frombuffer(next_.pixels, dtype=np.uint8).astype(np.int32)
        pair_means.append(int(np.abs(a - b).sum()) / a.size)
    return sum(pair_means) / len(pair_means)


def temporal_signature(profile: MotionProfile) -> list[float]:
    """Motion fingerprint: magnitude histogram  ++  direction histogram.

    16 magnitude bins of 1 px (last open) over per-pair mean magnitudes and
    8 direction bins over defined per-pair angles, each L1-normalized when
    it has mass. Static clips put all magnitude mass in bin 0 and leave the
    direction half zero.
    """
    mag_hist = [0.0] * MAGNITUDE_BINS
    for mag in profile.mean_magnitude:
        mag_hist[min(MAGNITUDE_BINS - 1, int(mag))] += 1.0
    ang_hist = [0.0] * ANGLE_BINS
    for angle in profile.mean_angle:
        if angle is None:
            continue
        idx = min(ANGLE_BINS - 1, int((angle + math.pi) / (math.pi / 4.0)))
        ang_hist[idx] += 1.0
    mag_total = sum(mag_hist)
    ang_total = sum(ang_hist)
    if mag_total > 0:
        mag_hist = [v / mag_total for v in mag_hist]
    if ang_total > 0:
        ang_hist = [v / ang_total for v in ang_hist]
    return mag_hist + ang_hist


def temporal_report(
    clip_id: str,
    frames: Sequence[FrameRaster],
    block: int = DEFAULT_BLOCK,
    radius: int = DEFAULT_RADIUS,
) -> TemporalReport:
    """Full diagnostics for one clip (needs >= 2 frames)."""
    profile = motion_profile(frames, block=block, radius=radius)
    series = angular_difference_series(profile) if len(profile.mean_angle) >= 2 else []
    return TemporalReport(
        clip_id=clip_id,
        angular_diff=series,
        flicker=flicker_score(frames),
        signature=temporal_signature(profile),
    )


def report_to_json_obj(report: TemporalReport) -> dict:
    return {
        "clip_id": report.clip_id,
        "angular_diff": report.angular_diff,
        "angular_diff_mean": report.angular_diff_mean,
        "angular_diff_std": report.angular_diff_std,
        "flicker": report.flicker,
        "signature": report.signature,
    }


def write_temporal_reports(reports: Iterable[TemporalReport]) -> bytes:
    lines = [
        json.dumps(report_to_json_obj(r), separators=(",", ":"), ensure_ascii=False)
        for r in reports
    ]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def write_angular_csv(reports: Iterable[TemporalReport]) -> bytes:
    """Angular series as CSV for plotting; undefined entries left empty."""
    rows = ["clip_id,pair_index,angular_diff"]
    for report in reports:
        for i, d in enumerate(report.angular_diff):
            rows.append(f"{report.clip_id},{i}," + ("" if d is None else repr(d)))
    return ("\n".join(rows) + "\n").encode("utf-8")
