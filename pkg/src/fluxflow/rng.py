"""Seeded randomness primitives with bit-exact, platform-independent output.

Everything downstream (subset selection, shuffles, the audit log replay
contract) leans on two guarantees made here:

- ``RngState`` steps the SplitMix64 recurrence exactly, so any conforming
  implementation in any language reproduces the same stream from the same
  64-bit state.
- ``bounded_uniform`` maps that stream onto ``[0, bound)`` without modulo
  bias via threshold rejection, so the draw sequence is also bit-exact.

The stdlib ``random`` module is deliberately not used: its shuffle/sample
call patterns are not a cross-version contract.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidBound

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(state: int) -> tuple[int, int]:
    """Advance SplitMix64 by one step.

    Returns ``(output, new_state)``. The state advances by the golden gamma;
    the output is the finalized (xor-shift-multiply mixed) value.
    """
    new_state = (state + _GOLDEN_GAMMA) & _MASK64
    z = new_state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64, new_state


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def derive_clip_seed(global_seed: int, clip_id: bytes | str) -> int:
    """Derive a per-clip seed from the run seed and the clip identity.

    ``FNV-1a-64(clip_id) XOR global_seed``, passed through one SplitMix64
    step, so nearby seeds and similar ids still land far apart. Pure and
    stable across runs and platforms.
    """
    if isinstance(clip_id, str):
        clip_id = clip_id.encode("utf-8")
    mixed = fnv1a64(clip_id) ^ (global_seed & _MASK64)
    out, _ = splitmix64(mixed)
    return out


@dataclass
class RngState:
    """SplitMix64 stream position. A plain value: copy it, never share it."""

    state: int

    def next_u64(self) -> int:
        # splitmix64(), unrolled: this is the innermost loop of the pipeline.
        self.state = state = (self.state + _GOLDEN_GAMMA) & _MASK64
        z = ((state ^ (state >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def copy(self) -> "RngState":
        return RngState(self.state)


def bounded_uniform(rng: RngState, bound: int) -> int:
    """Draw a uniform integer in ``[0, bound)``.

    Unbiased via the classic threshold-rejection scheme: draws below
    ``2**64 mod bound`` are rejected and redrawn, so every residue class
    is equally likely. Advances ``rng`` once per draw (including
    rejections), bit-exactly given the starting state.
    """
    if bound <= 0:
        raise InvalidBound(f"bound must be >= 1, got {bound}")
    threshold = (1 << 64) % bound
    state = rng.state
    while True:
        state = (state + _GOLDEN_GAMMA) & _MASK64
        z = ((state ^ (state >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        r = (z ^ (z >> 31)) & _MASK64
        if r >= threshold:
            rng.state = state
            return r % bound
