"""Permutation engine adapter for ML dataloaders.

Returns index lists only; frame gathering stays in the host dataloader, so
nothing heavy ever crosses this boundary. Outputs are bit-identical to the
reference pipeline for the same ``(clip_id, n_frames, spec, seed)`` inputs,
and ``batch_permute`` releases the GIL while it computes, so dataloader
worker threads scale.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _engine

__version__ = "0.1.0"


class BindingError(Exception):
    """Base class for binding-side failures."""


class InvalidSpec(BindingError):
    """Spec fields violate their invariants."""


class InfeasibleSelection(BindingError):
    """Requested count cannot satisfy the minimum-gap constraint."""


@dataclass(frozen=True)
class BindingSpec:
    """Mirror of the pipeline's perturbation spec, validated at construction.

    ``mode`` is ``"frame"`` or ``"block"``. Degree is ``count`` or ``ratio``
    (count wins when both are set). ``min_gap``/``gap_ratio`` constrain the
    index distance between selected units; ``require_move`` forbids identity
    shuffles when two or more units are selected.
    """

    mode: str
    count: int | None = None
    ratio: float | None = None
    block_size: int | None = None
    min_gap: int = 0
    gap_ratio: float | None = None
    require_move: bool = False

    def __post_init__(self):
        if self.mode not in ("frame", "block"):
            raise InvalidSpec(f"'{self.mode}' is not a valid Mode")
        if self.count is None and self.ratio is None:
            raise InvalidSpec("degree missing: set count or ratio")
        if self.count is not None and self.count < 0:
            raise InvalidSpec(f"count must be >= 0, got {self.count}")
        if self.ratio is not None and not 0.0 <= self.ratio <= 1.0:
            raise InvalidSpec(f"ratio must be in [0, 1], got {self.ratio}")
        if self.mode == "block":
            if self.block_size is None:
                raise InvalidSpec("block mode requires block_size")
            if self.block_size < 1:
                raise InvalidSpec(f"block_size must be >= 1, got {self.block_size}")
        elif self.block_size is not None:
            raise InvalidSpec("block_size only applies to block mode")
        if self.min_gap < 0:
            raise InvalidSpec(f"min_gap must be >= 0, got {self.min_gap}")
        if self.gap_ratio is not None:
            if self.min_gap != 0:
                raise InvalidSpec("set min_gap or gap_ratio, not both")
            if not 0.0 <= self.gap_ratio < 1.0:
                raise InvalidSpec(f"gap_ratio must be in [0, 1), got {self.gap_ratio}")

    def _engine_spec(self) -> "_engine.EngineSpec":
        spec = _engine.EngineSpec()
        spec.block_mode = self.mode == "block"
        spec.has_count = self.count is not None
        spec.count = self.count if self.count is not None else 0
        spec.ratio = self.ratio if self.ratio is not None else 0.0
        spec.block_size = self.block_size if self.block_size is not None else 0
        spec.min_gap = self.min_gap
        spec.has_gap_ratio = self.gap_ratio is not None
        spec.gap_ratio = self.gap_ratio if self.gap_ratio is not None else 0.0
        spec.require_move = self.require_move
        return spec


_MASK64 = (1 << 64) - 1


def permute_indices(
    clip_id: str, n_frames: int, spec: BindingSpec, global_seed: int
) -> list[int]:
    """Permutation map for one clip; index i of the input lands at slot map[i]."""
    try:
        return _engine.permute_one(
            clip_id, n_frames, spec._engine_spec(), global_seed & _MASK64
        )
    except _engine.EngineInfeasible as exc:
        raise InfeasibleSelection(str(exc)) from None


def batch_permute(
    clip_ids: list[str], n_frames_list: list[int], spec: BindingSpec, global_seed: int
) -> list[list[int]]:
    """Elementwise :func:`permute_indices`; computation runs with the GIL released."""
    if len(clip_ids) != len(n_frames_list):
        raise InvalidSpec(
            f"clip_ids ({len(clip_ids)}) and n_frames_list ({len(n_frames_list)}) "
            "lengths differ"
        )
    try:
        return _engine.permute_batch(
            list(clip_ids), list(n_frames_list), spec._engine_spec(), global_seed & _MASK64
        )
    except _engine.EngineInfeasible as exc:
        raise InfeasibleSelection(str(exc)) from None


__all__ = [
    "BindingError",
    "BindingSpec",
    "InfeasibleSelection",
    "InvalidSpec",
    "batch_permute",
    "permute_indices",
    "__version__",
]
