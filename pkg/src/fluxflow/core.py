"""Frame- and block-level temporal perturbations.

Both modes reduce to the same shape: pick a subset of unit indices (frames,
or contiguous fixed-size blocks), shuffle the selected units among their own
slots, and leave everything else exactly where it was. The result is always
a ``Permutation`` over frame indices, so downstream stages never care which
mode produced it.

All randomness flows through an explicit ``RngState``; identical
``(n, spec, seed)`` inputs produce identical permutations on any platform.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, TypeVar

from .errors import DegreeWarning, InfeasibleSelection, InvalidSpec, LengthMismatch
from .rng import RngState, bounded_uniform, derive_clip_seed

T = TypeVar("T")

# After this many failed non-identity redraws, fall back to a deterministic
# rotation instead of looping forever.
REQUIRE_MOVE_RETRIES = 16


class Mode(str, Enum):
    FRAME = "frame"
    BLOCK = "block"


@dataclass(frozen=True)
class PerturbationSpec:
    """One augmentation policy: what to shuffle, how much, how constrained.

    The degree is either an absolute unit count (``count``) or a fraction of
    the available units (``ratio``, resolved as ``floor(ratio * units)``);
    ``count`` wins when both are set. Units are frames in frame mode and
    blocks in block mode.

    ``min_gap`` enforces a minimum index distance between any two selected
    units; ``gap_ratio`` expresses the same constraint as a fraction of the
    unit count. ``require_move`` guarantees the shuffle is not the identity
    whenever at least two units are selected.
    """

    mode: Mode
    count: int | None = None
    ratio: float | None = None
    block_size: int | None = None
    min_gap: int = 0
    gap_ratio: float | None = None
    require_move: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from None
        if self.count is None and self.ratio is None:
            raise InvalidSpec("degree missing: set count or ratio")
        if self.count is not None and self.count < 0:
            raise InvalidSpec(f"count must be >= 0, got {self.count}")
        if self.ratio is not None and not 0.0 <= self.ratio <= 1.0:
            raise InvalidSpec(f"ratio must be in [0, 1], got {self.ratio}")
        if self.mode is Mode.BLOCK:
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

    def resolve_count(self, n_units: int) -> int:
        """Resolve the degree to an exact count over ``n_units`` units.

        Emits ``DegreeWarning`` when the count exceeds half the units:
        past that point the remaining context is too thin for a model to
        recover the original order, and quality drops off.
        """
        if self.count is not None:
            resolved = self.count
        else:
            resolved = math.floor(self.ratio * n_units)
        if resolved > n_units // 2:
            warnings.warn(
                f"perturbation degree {resolved} exceeds half of {n_units} units",
                DegreeWarning,
                stacklevel=2,
            )
        return resolved

    def resolve_gap(self, n_units: int) -> int:
        if self.gap_ratio is not None:
            return math.floor(self.gap_ratio * n_units)
        return self.min_gap


@dataclass
class Permutation:
    """A bijection on ``range(n)``; ``map[i]`` is the slot element ``i`` lands in."""

    map: list[int]
    n: int

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(list(range(n)), n)

    def is_identity(self) -> bool:
        return all(dst == i for i, dst in enumerate(self.map))

    def is_bijection(self) -> bool:
        return len(self.map) == self.n and sorted(self.map) == list(range(self.n))

    def moved_indices(self) -> list[int]:
        return [i for i, dst in enumerate(self.map) if dst != i]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, dst in enumerate(self.map):
            inv[dst] = i
        return Permutation(inv, self.n)


@dataclass
class SelectionResult:
    """Sorted unit indices chosen for shuffling (frames or blocks)."""

    indices: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class BlockPartition:
    """``m`` contiguous blocks of ``k`` frames; trailing frames stay put."""

    m: int
    k: int
    remainder: int

    @property
    def n_frames(self) -> int:
        return self.m * self.k + self.remainder


def feasible_max_count(n: int, min_gap: int) -> int:
    """Largest subset of ``range(n)`` whose pairwise index distance is >= min_gap."""
    if min_gap <= 1:
        return n
    return (n - 1) // min_gap + 1 if n > 0 else 0


def select_subset(n: int, count: int, min_gap: int, rng: RngState) -> SelectionResult:
    """Uniformly select ``count`` of ``n`` indices, pairwise >= ``min_gap`` apart.

    Sorted selections with gaps >= d map one-to-one onto unconstrained
    combinations from a range shrunk by ``(count-1)*(d-1)`` (subtract
    ``i*(d-1)`` from the i-th smallest index), so sampling a combination
    there and re-expanding is exactly uniform over the feasible subsets.
    The combination itself comes from Floyd's algorithm: ``count`` draws,
    no rejection, uniform.
    """
    feasible = feasible_max_count(n, min_gap)
    if count > feasible:
        raise InfeasibleSelection(count, feasible, n, min_gap)
    if count == 0:
        return SelectionResult([])
    spread = max(1, min_gap) - 1
    m = n - (count - 1) * spread
    chosen: set[int] = set()
    for j in range(m - count, m):
        t = bounded_uniform(rng, j + 1)
        chosen.add(j if t in chosen else t)
    compact = sorted(chosen)
    return SelectionResult([y + i * spread for i, y in enumerate(compact)])


def _fisher_yates(items: list[int], rng: RngState) -> None:
    for i in range(len(items) - 1, 0, -1):
        j = bounded_uniform(rng, i + 1)
        items[i], items[j] = items[j], items[i]


def _permute_selected(positions: Sequence[int], require_move: bool, rng: RngState) -> list[int]:
    """Shuffle ``positions`` among themselves; element i goes to the returned slot i.

    With ``require_move``, redraws until the arrangement is not the identity
    (up to ``REQUIRE_MOVE_RETRIES`` redraws, then rotates by one so the
    result is guaranteed non-identity and still deterministic).
    """
    original = list(positions)
    if len(original) < 2:
        return original
    for _ in range(REQUIRE_MOVE_RETRIES + 1):
        shuffled = list(original)
        _fisher_yates(shuffled, rng)
        if not require_move or shuffled != original:
            return shuffled
    return original[1:] + original[:1]


def frame_perturbation(
    n: int, spec: PerturbationSpec, rng: RngState
) -> tuple[Permutation, SelectionResult]:
    """Shuffle a constrained subset of individual frames; all others stay fixed."""
    if spec.mode is not Mode.FRAME:
        raise InvalidSpec(f"frame_perturbation needs a frame-mode spec, got {spec.mode.value}")
    count = spec.resolve_count(n)
    selection = select_subset(n, count, spec.resolve_gap(n), rng)
    targets = _permute_selected(selection.indices, spec.require_move, rng)
    mapping = list(range(n))
    for src, dst in zip(selection.indices, targets):
        mapping[src] = dst
    return Permutation(mapping, n), selection


def partition_blocks(n: int, k: int) -> BlockPartition:
    """Split ``n`` frames into ``floor(n/k)`` blocks of ``k``; the tail joins no block."""
    if k < 1:
        raise InvalidSpec(f"block size must be >= 1, got {k}")
    m = n // k
    return BlockPartition(m=m, k=k, remainder=n - m * k)


def expand_block_permutation(partition: BlockPartition, block_map: Sequence[int]) -> Permutation:
    """Lift a permutation of block slots to a frame-index permutation.

    Block ``b`` moves to slot ``block_map[b]`` carrying its frames in their
    internal order; remainder frames keep their positions.
    """
    if sorted(block_map) != list(range(partition.m)):
        raise InvalidSpec(f"block_map is not a permutation of {partition.m} blocks")
    k = partition.k
    mapping = list(range(partition.n_frames))
    for b, slot in enumerate(block_map):
        if slot != b:
            for offset in range(k):
                mapping[b * k + offset] = slot * k + offset
    return Permutation(mapping, partition.n_frames)


def block_perturbation(
    n: int, spec: PerturbationSpec, rng: RngState
) -> tuple[Permutation, SelectionResult]:
    """Reorder a constrained subset of contiguous blocks as rigid units.

    The returned selection holds block indices; the permutation is over
    frame indices, with unselected blocks and remainder frames fixed.
    """
    if spec.mode is not Mode.BLOCK:
        raise InvalidSpec(f"block_perturbation needs a block-mode spec, got {spec.mode.value}")
    if spec.block_size is None:
        raise InvalidSpec("block mode requires block_size")
    partition = partition_blocks(n, spec.block_size)
    count = spec.resolve_count(partition.m)
    selection = select_subset(partition.m, count, spec.resolve_gap(partition.m), rng)
    targets = _permute_selected(selection.indices, spec.require_move, rng)
    block_map = list(range(partition.m))
    for src, dst in zip(selection.indices, targets):
        block_map[src] = dst
    return expand_block_permutation(partition, block_map), selection


def perturb(n: int, spec: PerturbationSpec, rng: RngState) -> tuple[Permutation, SelectionResult]:
    """Dispatch on mode: one perturbation of an ``n``-frame sequence."""
    if spec.mode is Mode.FRAME:
        return frame_perturbation(n, spec, rng)
    return block_perturbation(n, spec, rng)


def perturb_clip(
    clip_id: bytes | str, n_frames: int, spec: PerturbationSpec, global_seed: int
) -> tuple[Permutation, SelectionResult, int]:
    """Perturb one clip under a run-level seed.

    Returns ``(permutation, selection, clip_seed)``; replaying
    ``(n_frames, spec, clip_seed)`` through :func:`perturb` reproduces the
    permutation exactly.
    """
    clip_seed = derive_clip_seed(global_seed, clip_id)
    permutation, selection = perturb(n_frames, spec, RngState(clip_seed))
    return permutation, selection, clip_seed


def apply_permutation(seq: Sequence[T], perm: Permutation) -> list[T]:
    """Rearrange ``seq`` so element ``i`` lands at ``perm.map[i]``."""
    if len(seq) != perm.n:
        raise LengthMismatch(f"sequence length {len(seq)} != permutation length {perm.n}")
    out: list[T] = [None] * perm.n  # type: ignore[list-item]
    for i, item in enumerate(seq):
        out[perm.map[i]] = item
    return out


def schedule_degree(step: int, total_steps: int, start: float, end: float) -> float:
    """Linear ramp of the perturbation degree over a training run, clamped to [0, 1]."""
    if total_steps <= 0:
        raise InvalidSpec(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise InvalidSpec(f"step {step} outside [0, {total_steps}]")
    value = start + (end - start) * (step / total_steps)
    return min(1.0, max(0.0, value))
