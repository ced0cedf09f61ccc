"""Exception and warning types shared across the pipeline."""

from __future__ import annotations


class FluxflowError(Exception):
    """Base class for all pipeline errors."""


class InvalidSpec(FluxflowError):
    """A perturbation spec (or other configuration) violates its invariants."""


class InvalidBound(FluxflowError):
    """Bounded sampling was asked for an empty range."""


class InfeasibleSelection(FluxflowError):
    """Requested subset size cannot satisfy the minimum-gap constraint.

    Carries the largest feasible count so callers can report or clamp.
    """

    def __init__(self, requested: int, feasible_max: int, n: int, min_gap: int):
        self.requested = requested
        self.feasible_max = feasible_max
        super().__init__(
            f"cannot select {requested} of {n} indices with min gap {min_gap}; "
            f"feasible max is {feasible_max}"
        )


class LengthMismatch(FluxflowError):
    """Sequence length does not match the permutation length."""


class ParseError(FluxflowError):
    """Malformed input line or stream.

    ``line_no`` is 1-based where applicable.
    """

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DuplicateClip(FluxflowError):
    """Two manifest entries share a clip_id."""


class EmptyClip(FluxflowError):
    """A clip has no frames."""


class UnsupportedFormat(FluxflowError):
    """Raster stream is not binary PGM (P5) or PPM (P6)."""


class UnsupportedDepth(FluxflowError):
    """Raster maxval is not 255."""


class TruncatedFile(FluxflowError):
    """Raster stream ended before the declared pixel payload."""


class DimensionMismatch(FluxflowError):
    """Frames being compared do not share width/height/channels."""


class TooFewFrames(FluxflowError):
    """A temporal metric was asked for on too short a clip."""


class MissingRecord(FluxflowError):
    """No perturbation record found for a manifest entry."""

    def __init__(self, clip_id: str):
        self.clip_id = clip_id
        super().__init__(f"no perturbation record for clip {clip_id!r}")


class ReplayMismatch(FluxflowError):
    """A logged permutation could not be reproduced from its spec and seed."""


class DegreeWarning(UserWarning):
    """Perturbation degree exceeds half the available frames/blocks.

    Quality degrades noticeably past that point; the run still proceeds.
    """
