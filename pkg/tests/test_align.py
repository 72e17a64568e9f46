from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraktur_bench.align import (
    AlignmentResult,
    OpKind,
    align,
    corpus_cer,
    levenshtein,
    script_distance,
    script_gt_text,
    script_pred_text,
    _levenshtein_rows,
    _levenshtein_small,
)
from fraktur_bench.errors import PairingError
from fraktur_bench.lines import gt_line, pred_line

short_text = st.text(alphabet="abcdef ", max_size=24)


class TestLevenshtein:
    def test_classic(self):
        assert levenshtein("kitten", "sitting") == 3

    def test_identical(self):
        assert levenshtein("abc", "abc") == 0

    def test_empty_sides(self):
        assert levenshtein("", "abc") == 3
        assert levenshtein("abc", "") == 3
        assert levenshtein("", "") == 0

    def test_unicode(self):
        assert levenshtein("ſtraße", "straße") == 1
        assert levenshtein("a\U0001f600b", "ab") == 1  # astral plane

    def test_single_substitution(self):
        assert levenshtein("abc", "abd") == 1

    @given(short_text, short_text)
    def test_both_paths_agree(self, a, b):
        assert _levenshtein_small(a, b) == _levenshtein_rows(a, b)

    @given(short_text, short_text)
    def test_bounds(self, a, b):
        d = levenshtein(a, b)
        assert abs(len(a) - len(b)) <= d <= max(len(a), len(b), 0)

    @given(short_text, short_text)
    def test_symmetry(self, a, b):
        assert levenshtein(a, b) == levenshtein(b, a)

    @given(short_text)
    def test_identity(self, a):
        assert levenshtein(a, a) == 0

    @settings(max_examples=200)
    @given(short_text, short_text, short_text)
    def test_triangle(self, a, b, c):
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


class TestAlign:
    def test_delete_then_match(self):
        result = align("ab", "b")
        kinds = [op.kind for op in result.ops]
        assert kinds == [OpKind.DELETE, OpKind.MATCH]
        assert result.ops[0].gt == "a" and result.ops[0].pred is None
        assert result.distance == 1
        assert result.cer == 0.5

    def test_substitution_preferred_over_indel_pair(self):
        result = align("a", "b")
        assert [op.kind for op in result.ops] == [OpKind.SUBSTITUTE]

    def test_all_match(self):
        result = align("ab", "ab")
        assert [op.kind for op in result.ops] == [OpKind.MATCH, OpKind.MATCH]
        assert result.distance == 0
        assert result.cer == 0.0

    def test_empty_gt_cer_is_pred_len(self):
        result = align("", "abc")
        assert result.distance == 3
        assert result.cer == 3.0
        assert [op.kind for op in result.ops] == [OpKind.INSERT] * 3

    def test_empty_both(self):
        result = align("", "")
        assert result.ops == ()
        assert result.cer == 0.0

    def test_deterministic(self):
        a = align("abcabc", "acbacb")
        b = align("abcabc", "acbacb")
        assert a.ops == b.ops

    @given(short_text, short_text)
    def test_replay_reconstructs_inputs(self, gt, pred):
        result = align(gt, pred)
        assert script_gt_text(result.ops) == gt
        assert script_pred_text(result.ops) == pred
        assert script_distance(result.ops) == result.distance

    @given(short_text, short_text)
    def test_distance_matches_levenshtein(self, gt, pred):
        assert align(gt, pred).distance == levenshtein(gt, pred)

    @given(short_text.filter(lambda t: len(t) > 0), short_text)
    def test_cer_upper_bound(self, gt, pred):
        # worst case is replace-everything-and-insert-the-rest
        assert align(gt, pred).cer <= (len(gt) + len(pred)) / len(gt)

    def test_large_strings_use_vector_path(self):
        gt = "ab" * 300
        pred = "ba" * 300
        result = align(gt, pred)
        assert result.distance == levenshtein(gt, pred)
        assert script_gt_text(result.ops) == gt
        assert script_pred_text(result.ops) == pred


class TestCorpusCer:
    def pairs(self, spec):
        # spec: list of (dist via substitutions, gt_len) encoded as texts
        out = []
        for i, (gt_text, pred_text) in enumerate(spec):
            key = ("N", "b", f"l{i}")
            out.append(
                (
                    gt_line(*key, gt_text),
                    pred_line(*key, pred_text, engine_id="e"),
                )
            )
        return out

    def test_micro_vs_macro_balanced(self):
        # two lines of 10 chars, one error total
        pairs = self.pairs([("aaaaaaaaaa", "baaaaaaaaa"), ("cccccccccc", "cccccccccc")])
        stats = corpus_cer(pairs)
        assert stats.micro_cer == pytest.approx(0.05)
        assert stats.macro_cer == pytest.approx(0.05)

    def test_micro_vs_macro_skewed(self):
        # short line all wrong, long line clean: macro is dominated by
        # the short line, micro by the long one
        pairs = self.pairs([("a", "b"), ("c" * 99, "c" * 99)])
        stats = corpus_cer(pairs)
        assert stats.micro_cer == pytest.approx(0.01)
        assert stats.macro_cer == pytest.approx(0.5)

    def test_empty_gt_excluded_from_macro(self):
        pairs = self.pairs([("", "xy"), ("aaaa", "aaaa")])
        stats = corpus_cer(pairs)
        # micro counts the 2 insertions over 4 gt chars
        assert stats.micro_cer == pytest.approx(0.5)
        # macro averages only the nonempty-gt line
        assert stats.macro_cer == pytest.approx(0.0)

    def test_empty_set_rejected(self):
        with pytest.raises(PairingError, match="empty"):
            corpus_cer([])

    def test_key_mismatch_rejected(self):
        gt = gt_line("N", "b", "l1", "a")
        pred = pred_line("N", "b", "l2", "a", engine_id="e")
        with pytest.raises(PairingError):
            corpus_cer([(gt, pred)])

    def test_per_line_results_exposed(self):
        pairs = self.pairs([("ab", "ab")])
        stats = corpus_cer(pairs)
        assert len(stats.per_line) == 1
        assert isinstance(stats.per_line[0], AlignmentResult)
        assert stats.per_line[0].distance == 0
