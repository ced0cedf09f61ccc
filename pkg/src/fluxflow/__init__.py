"""Deterministic temporal augmentation for video frame sequences.

Shuffle a constrained subset of frames, or reorder contiguous blocks of
frames as rigid units, with every byte of output reproducible from a single
seed. Ships with dataset ingestion/emission (JSONL manifests, PGM/PPM
rasters, tar shards), an auditable permutation log, and temporal-coherence
diagnostics.
"""

from .errors import (
    DegreeWarning,
    DimensionMismatch,
    DuplicateClip,
    EmptyClip,
    FluxflowError,
    InfeasibleSelection,
    InvalidBound,
    InvalidSpec,
    LengthMismatch,
    MissingRecord,
    ParseError,
    ReplayMismatch,
    TooFewFrames,
    TruncatedFile,
    UnsupportedDepth,
    UnsupportedFormat,
)
from .core import (
    BlockPartition,
    Mode,
    Permutation,
    PerturbationSpec,
    SelectionResult,
    apply_permutation,
    block_perturbation,
    expand_block_permutation,
    feasible_max_count,
    frame_perturbation,
    partition_blocks,
    perturb,
    perturb_clip,
    schedule_degree,
    select_subset,
)
from .rng import RngState, bounded_uniform, derive_clip_seed, fnv1a64, splitmix64

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "DegreeWarning",
    "DimensionMismatch",
    "DuplicateClip",
    "EmptyClip",
    "FluxflowError",
    "InfeasibleSelection",
    "InvalidBound",
    "InvalidSpec",
    "LengthMismatch",
    "MissingRecord",
    "Mode",
    "ParseError",
    "Permutation",
    "PerturbationSpec",
    "ReplayMismatch",
    "RngState",
    "SelectionResult",
    "TooFewFrames",
    "TruncatedFile",
    "UnsupportedDepth",
    "UnsupportedFormat",
    "apply_permutation",
    "block_perturbation",
    "bounded_uniform",
    "derive_clip_seed",
    "expand_block_permutation",
    "feasible_max_count",
    "fnv1a64",
    "frame_perturbation",
    "partition_blocks",
    "perturb",
    "perturb_clip",
    "schedule_degree",
    "select_subset",
    "splitmix64",
]
