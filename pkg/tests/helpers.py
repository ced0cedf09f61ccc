"""Shared test utilities: synthetic rasters and statistical checks."""

from __future__ import annotations

import math
import random
from collections import Counter

import numpy as np

from fluxflow.pnm import FrameRaster


def solid_raster(width: int, height: int, value: int, channels: int = 1) -> FrameRaster:
    return FrameRaster(width, height, channels, bytes([value]) * (width * height * channels))


def random_raster(width: int, height: int, seed: int, channels: int = 1) -> FrameRaster:
    rnd = random.Random(seed)
    payload = bytes(rnd.randrange(256) for _ in range(width * height * channels))
    return FrameRaster(width, height, channels, payload)


def roll_raster(raster: FrameRaster, dx: int, dy: int) -> FrameRaster:
    """Translate with wrap-around, so every frame keeps the same content."""
    arr = np.frombuffer(raster.pixels, dtype=np.uint8).reshape(
        raster.height, raster.width, raster.channels
    )
    rolled = np.roll(np.roll(arr, dy, axis=0), dx, axis=1)
    return FrameRaster(raster.width, raster.height, raster.channels, rolled.tobytes())


def translating_clip(
    n_frames: int, dx: int, dy: int, size: int = 34, seed: int = 7
) -> list[FrameRaster]:
    """Rigid translation with wrap-around.

    The default size leaves a 2-pixel margin past the last 8-px block row and
    column, so for |dx|, |dy| <= 2 every block's displaced window stays inside
    the frame and matches exactly; no block ever straddles the wrap seam.
    """
    frames = [random_raster(size, size, seed)]
    for _ in range(n_frames - 1):
        frames.append(roll_raster(frames[-1], dx, dy))
    return frames


def chi_square_stat(observed: Counter, expected: dict) -> float:
    stat = 0.0
    for key, exp in expected.items():
        obs = observed.get(key, 0)
        stat += (obs - exp) ** 2 / exp
    return stat


def chi_square_threshold_3_sigma(df: int) -> float:
    """Normal approximation of the chi-square statistic: mean df, sd sqrt(2 df)."""
    return df + 3.0 * math.sqrt(2.0 * df)


def assert_uniform(observed: Counter, outcomes: list, n_samples: int) -> None:
    """Chi-square goodness-of-fit against the uniform distribution, 3 sigma."""
    assert set(observed) <= set(outcomes), "sampler produced an impossible outcome"
    expected = {outcome: n_samples / len(outcomes) for outcome in outcomes}
    stat = chi_square_stat(observed, expected)
    threshold = chi_square_threshold_3_sigma(len(outcomes) - 1)
    assert stat <= threshold, f"chi-square {stat:.1f} exceeds 3-sigma bound {threshold:.1f}"
