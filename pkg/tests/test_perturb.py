"""Perturbation core: selection, shuffles, block handling, permutation algebra."""

import itertools
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fluxflow.core as core_mod
from fluxflow.errors import DegreeWarning, InfeasibleSelection, InvalidSpec, LengthMismatch
from fluxflow.core import (
    Mode,
    Permutation,
    PerturbationSpec,
    apply_permutation,
    block_perturbation,
    expand_block_permutation,
    feasible_max_count,
    frame_perturbation,
    partition_blocks,
    perturb_clip,
    schedule_degree,
    select_subset,
)
from fluxflow.rng import RngState

from helpers import assert_uniform


def brute_force_feasible_max(n: int, min_gap: int) -> int:
    """Largest c for which some gap-respecting subset exists, by enumeration."""
    d = max(1, min_gap)
    for c in range(n, 0, -1):
        for combo in itertools.combinations(range(n), c):
            if all(b - a >= d for a, b in zip(combo, combo[1:])):
                return c
    return 0


class TestFeasibleMaxCount:
    @pytest.mark.parametrize(
        "n,gap,expected", [(16, 8, 2), (16, 0, 16), (1, 5, 1), (16, 1, 16), (10, 3, 4)]
    )
    def test_examples(self, n, gap, expected):
        assert feasible_max_count(n, gap) == expected

    @pytest.mark.parametrize("n", range(1, 9))
    @pytest.mark.parametrize("gap", range(0, 5))
    def test_against_enumeration(self, n, gap):
        assert feasible_max_count(n, gap) == brute_force_feasible_max(n, gap)


class TestSelectSubset:
    def test_full_selection_is_everything(self):
        result = select_subset(4, 4, 0, RngState(1))
        assert result.indices == [0, 1, 2, 3]

    def test_infeasible_carries_feasible_max(self):
        with pytest.raises(InfeasibleSelection) as exc_info:
            select_subset(16, 3, 8, RngState(1))
        assert exc_info.value.feasible_max == 2

    def test_zero_count_empty_and_no_draws(self):
        rng = RngState(5)
        before = rng.state
        assert select_subset(10, 0, 0, rng).indices == []
        assert rng.state == before

    def test_sorted_and_gap_respected(self):
        for seed in range(200):
            sel = select_subset(20, 3, 4, RngState(seed)).indices
            assert sel == sorted(sel)
            assert all(b - a >= 4 for a, b in zip(sel, sel[1:]))

    def test_deterministic(self):
        assert select_subset(50, 5, 3, RngState(77)).indices == select_subset(
            50, 5, 3, RngState(77)
        ).indices

    def test_uniform_over_constrained_subsets(self):
        feasible = [
            c
            for c in itertools.combinations(range(6), 2)
            if all(b - a >= 2 for a, b in zip(c, c[1:]))
        ]
        n = 20000
        rng = RngState(31337)
        counts = Counter(tuple(select_subset(6, 2, 2, rng).indices) for _ in range(n))
        assert_uniform(counts, feasible, n)

    @given(st.integers(1, 40), st.integers(0, 6), st.integers(0, 2**32), st.data())
    @settings(max_examples=200, deadline=None)
    def test_properties_hold_for_any_feasible_request(self, n, gap, seed, data):
        count = data.draw(st.integers(0, feasible_max_count(n, gap)))
        sel = select_subset(n, count, gap, RngState(seed)).indices
        assert len(sel) == count
        assert all(0 <= i < n for i in sel)
        assert sel == sorted(set(sel))
        d = max(1, gap)
        assert all(b - a >= d for a, b in zip(sel, sel[1:]))


class TestSpecValidation:
    def test_degree_required(self):
        with pytest.raises(InvalidSpec):
            PerturbationSpec(mode=Mode.FRAME)

    def test_unknown_mode(self):
        with pytest.raises(InvalidSpec, match="not a valid Mode"):
            PerturbationSpec(mode="frames", count=1)

    @pytest.mark.parametrize("ratio", [-0.1, 1.5])
    def test_ratio_range(self, ratio):
        with pytest.raises(InvalidSpec):
            PerturbationSpec(mode=Mode.FRAME, ratio=ratio)

    def test_negative_count(self):
        with pytest.raises(InvalidSpec):
            PerturbationSpec(mode=Mode.FRAME, count=-1)

    def test_block_mode_needs_block_size(self):
        with pytest.raises(InvalidSpec):
            PerturbationSpec(mode=Mode.BLOCK, count=2)

    def test_frame_mode_rejects_block_size(self):
        with pytest.raises(InvalidSpec):
            PerturbationSpec(mode=Mode.FRAME, count=2, block_size=4)

    def test_gap_ratio_exclusive_with_min_gap(self):
        with pytest.raises(InvalidSpec):
            PerturbationSpec(mode=Mode.FRAME, count=2, min_gap=2, gap_ratio=0.5)

    @pytest.mark.parametrize("gap_ratio", [-0.5, 1.0])
    def test_gap_ratio_range(self, gap_ratio):
        with pytest.raises(InvalidSpec):
            PerturbationSpec(mode=Mode.FRAME, count=2, gap_ratio=gap_ratio)

    def test_count_precedence_over_ratio(self):
        spec = PerturbationSpec(mode=Mode.FRAME, count=3, ratio=1.0)
        assert spec.resolve_count(16) == 3

    def test_gap_ratio_resolution(self):
        spec = PerturbationSpec(mode=Mode.FRAME, count=2, gap_ratio=0.5)
        assert spec.resolve_gap(16) == 8
        assert PerturbationSpec(mode=Mode.FRAME, count=2, gap_ratio=0.25).resolve_gap(16) == 4

    def test_degree_warning_past_half(self):
        spec = PerturbationSpec(mode=Mode.FRAME, count=9)
        with pytest.warns(DegreeWarning):
            spec.resolve_count(16)

    def test_no_warning_at_half(self):
        import warnings

        spec = PerturbationSpec(mode=Mode.FRAME, count=8)
        with warnings.catch_warnings():
            warnings.simplefilter("error", DegreeWarning)
            assert spec.resolve_count(16) == 8


class TestFramePerturbation:
    def test_zero_ratio_identity(self):
        perm, sel = frame_perturbation(
            16, PerturbationSpec(mode=Mode.FRAME, ratio=0.0), RngState(9)
        )
        assert perm.is_identity()
        assert sel.indices == []

    def test_ratio_resolves_by_floor(self):
        _, sel = frame_perturbation(
            16, PerturbationSpec(mode=Mode.FRAME, ratio=0.25), RngState(3)
        )
        assert len(sel) == 4

    def test_count_two_require_move_is_a_swap(self):
        spec = PerturbationSpec(mode=Mode.FRAME, count=2, require_move=True)
        for seed in range(50):
            perm, sel = frame_perturbation(16, spec, RngState(seed))
            a, b = sel.indices
            assert perm.map[a] == b and perm.map[b] == a
            assert all(perm.map[i] == i for i in range(16) if i not in (a, b))

    def test_unselected_are_fixed(self):
        spec = PerturbationSpec(mode=Mode.FRAME, count=4)
        for seed in range(100):
            perm, sel = frame_perturbation(16, spec, RngState(seed))
            outside = set(range(16)) - set(sel.indices)
            assert all(perm.map[i] == i for i in outside)
            assert perm.is_bijection()

    def test_wrong_mode_rejected(self):
        with pytest.raises(InvalidSpec):
            frame_perturbation(
                16, PerturbationSpec(mode=Mode.BLOCK, count=1, block_size=2), RngState(0)
            )

    def test_infeasible_propagates(self):
        with pytest.raises(InfeasibleSelection):
            frame_perturbation(
                16, PerturbationSpec(mode=Mode.FRAME, count=3, min_gap=8), RngState(0)
            )

    def test_require_move_fallback_rotates(self, monkeypatch):
        # Force every Fisher-Yates draw to pick the top index: identity forever.
        monkeypatch.setattr(core_mod, "bounded_uniform", lambda rng, bound: bound - 1)
        spec = PerturbationSpec(mode=Mode.FRAME, count=3, require_move=True)
        perm, sel = frame_perturbation(8, spec, RngState(1))
        s = sel.indices
        assert [perm.map[i] for i in s] == [s[1], s[2], s[0]]


class TestBlocks:
    @pytest.mark.parametrize(
        "n,k,m,remainder", [(16, 2, 8, 0), (33, 8, 4, 1), (49, 12, 4, 1), (7, 8, 0, 7)]
    )
    def test_partition_arithmetic(self, n, k, m, remainder):
        part = partition_blocks(n, k)
        assert (part.m, part.k, part.remainder) == (m, k, remainder)
        assert part.m * part.k + part.remainder == n

    def test_zero_block_size_rejected(self):
        with pytest.raises(InvalidSpec):
            partition_blocks(16, 0)

    def test_expand_full_reversal(self):
        perm = expand_block_permutation(partition_blocks(8, 2), [3, 2, 1, 0])
        assert perm.map == [6, 7, 4, 5, 2, 3, 0, 1]
        assert apply_permutation(list(range(8)), perm) == [6, 7, 4, 5, 2, 3, 0, 1]

    def test_expand_swap_of_blocks_one_and_three(self):
        perm = expand_block_permutation(
            partition_blocks(16, 2), [0, 3, 2, 1, 4, 5, 6, 7]
        )
        assert perm.map[2] == 6 and perm.map[3] == 7
        assert perm.map[6] == 2 and perm.map[7] == 3
        assert all(perm.map[i] == i for i in range(16) if i not in (2, 3, 6, 7))

    def test_expand_rejects_non_permutation(self):
        with pytest.raises(InvalidSpec):
            expand_block_permutation(partition_blocks(8, 2), [0, 0, 1, 2])

    def test_zero_ratio_identity(self):
        perm, sel = block_perturbation(
            16, PerturbationSpec(mode=Mode.BLOCK, ratio=0.0, block_size=2), RngState(4)
        )
        assert perm.is_identity()
        assert sel.indices == []

    def test_remainder_frames_never_move(self):
        spec = PerturbationSpec(mode=Mode.BLOCK, count=4, block_size=8)
        for seed in range(50):
            perm, _ = block_perturbation(33, spec, RngState(seed))
            assert perm.map[32] == 32

    def test_block_rigidity(self):
        spec = PerturbationSpec(mode=Mode.BLOCK, count=3, block_size=4)
        for seed in range(50):
            perm, _ = block_perturbation(20, spec, RngState(seed))
            assert perm.is_bijection()
            for block_start in range(0, 20, 4):
                base = perm.map[block_start]
                assert [perm.map[block_start + o] for o in range(4)] == [
                    base + o for o in range(4)
                ]

    def test_selection_is_block_indices(self):
        spec = PerturbationSpec(mode=Mode.BLOCK, count=2, block_size=4)
        _, sel = block_perturbation(16, spec, RngState(11))
        assert len(sel) == 2
        assert all(0 <= b < 4 for b in sel.indices)

    def test_missing_block_size_unreachable_via_spec(self):
        with pytest.raises(InvalidSpec):
            block_perturbation(16, PerturbationSpec(mode=Mode.FRAME, count=2), RngState(0))


class TestApplyPermutation:
    def test_identity(self):
        seq = ["a", "b", "c"]
        assert apply_permutation(seq, Permutation.identity(3)) == seq

    def test_reversal(self):
        assert apply_permutation(["a", "b", "c"], Permutation([2, 1, 0], 3)) == ["c", "b", "a"]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            apply_permutation(["a"], Permutation.identity(2))

    @given(st.integers(1, 64), st.integers(0, 2**32))
    @settings(max_examples=100, deadline=None)
    def test_inverse_round_trip(self, n, seed):
        spec = PerturbationSpec(mode=Mode.FRAME, ratio=0.9)
        perm, _ = frame_perturbation(n, spec, RngState(seed))
        seq = list(range(n))
        assert apply_permutation(apply_permutation(seq, perm), perm.inverse()) == seq
        assert sorted(apply_permutation(seq, perm)) == seq


class TestScheduleDegree:
    @pytest.mark.parametrize(
        "step,total,start,end,expected",
        [(0, 100, 0.0, 0.5, 0.0), (100, 100, 0.0, 0.5, 0.5), (50, 100, 0.0, 0.5, 0.25)],
    )
    def test_linear_ramp(self, step, total, start, end, expected):
        assert schedule_degree(step, total, start, end) == pytest.approx(expected, abs=1e-12)

    def test_zero_total_rejected(self):
        with pytest.raises(InvalidSpec):
            schedule_degree(0, 0, 0.0, 1.0)

    def test_step_out_of_range_rejected(self):
        with pytest.raises(InvalidSpec):
            schedule_degree(101, 100, 0.0, 1.0)

    def test_clamped(self):
        assert schedule_degree(100, 100, 0.5, 1.0) == 1.0


class TestPerturbClip:
    def test_replayable_from_returned_seed(self):
        spec = PerturbationSpec(mode=Mode.FRAME, count=3)
        perm, sel, clip_seed = perturb_clip("clip-0", 16, spec, 42)
        again, again_sel = frame_perturbation(16, spec, RngState(clip_seed))
        assert again.map == perm.map
        assert again_sel.indices == sel.indices

    def test_different_clips_generally_differ(self):
        spec = PerturbationSpec(mode=Mode.FRAME, ratio=1.0)
        perms = {
            tuple(perturb_clip(f"clip-{i}", 16, spec, 0)[0].map) for i in range(8)
        }
        assert len(perms) > 1
