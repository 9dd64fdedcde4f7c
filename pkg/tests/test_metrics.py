import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from singable.errors import EmptyInput, EmptySet, NoRequiredBoundaries
from singable.metrics import (
    EvalRecord,
    bleu,
    boundary_recall,
    corpus_bleu,
    corpus_ter,
    edit_distance,
    length_accuracy,
    recall_counts,
    rhyme_accuracy,
    ter,
)
from singable.prompts import ConstraintSet


def rec(hyp, length, rhyme=0, positions=()):
    return EvalRecord(hyp, None, ConstraintSet.from_positions(length, rhyme, positions))


def test_length_accuracy(oracle):
    records = [rec("花家", 2), rec("温暖世界", 3), rec("abc", 3), rec("", 1)]
    assert length_accuracy(records, oracle) == Fraction(1, 4)
    assert length_accuracy(records[:1], oracle) == 1
    with pytest.raises(EmptySet):
        length_accuracy([], oracle)
    with pytest.raises(ValueError):
        length_accuracy([EvalRecord("花")], oracle)


def test_rhyme_accuracy(oracle):
    records = [rec("花家", 2, 1), rec("温暖", 2, 8), rec("世界", 2, 4), rec("花", 1, 0), rec("", 1, 2)]
    # the rhy_0 record is excluded; the empty hypothesis counts as a miss
    assert rhyme_accuracy(records, oracle) == Fraction(2, 4)
    with pytest.raises(EmptySet):
        rhyme_accuracy([rec("花", 1, 0)], oracle)


def test_boundary_recall(oracle):
    assert boundary_recall([rec("花温暖世界", 5, 0, {1, 3})], oracle) == 1
    assert boundary_recall([rec("温暖世界", 6, 0, {2, 4})], oracle) == Fraction(1, 2)
    micro = [rec("花家", 2, 0, {1}), rec("温暖世界", 4, 0, {1, 2, 3})]
    assert boundary_recall(micro, oracle) == Fraction(2, 4)
    assert boundary_recall([rec("花家", 4, 0, {3})], oracle) == 0
    with pytest.raises(NoRequiredBoundaries):
        boundary_recall([rec("花家", 2)], oracle)


@given(st.sets(st.integers(1, 15)), st.sets(st.integers(1, 15)), st.sets(st.integers(1, 15)))
def test_recall_monotone_in_found(required, found, extra):
    if not required:
        return
    pairs = [(frozenset(required), frozenset(found))]
    more = [(frozenset(required), frozenset(found | extra))]
    r0, r1 = recall_counts(pairs), recall_counts(more)
    assert 0 <= r0 <= r1 <= 1


@pytest.mark.parametrize(
    "hyp, ref, expected",
    [
        ("abc", "abc", 0.0),
        ("abc", "axc", 1 / 3),
        ("", "abcd", 1.0),
        ("ab", "abcd", 0.5),
        ("abcd", "ab", 1.0),
        ("kitten", "sitting", 3 / 7),
        ("我爱你", "我恨你", 1 / 3),
        ("a, b!", "ab", 0.0),
    ],
)
def test_ter(hyp, ref, expected):
    assert ter(hyp, ref) == pytest.approx(expected, abs=1e-12)


def test_ter_corpus_pools_counts():
    assert corpus_ter(["abc", "ab"], ["axc", "abcd"]) == pytest.approx(3 / 7)
    with pytest.raises(EmptyInput):
        ter("abc", "")
    with pytest.raises(ValueError):
        corpus_ter(["a"], [])


def test_edit_distance():
    assert edit_distance("", "") == 0
    assert edit_distance("abc", "") == 3
    assert edit_distance("flaw", "lawn") == 2


@pytest.mark.parametrize(
    "hyp, ref, max_n, expected",
    [
        ("abcd", "abcd", 4, 1.0),
        ("abcd", "wxyz", 4, 0.0),
        ("abcd", "abce", 2, 0.75),
        ("ab", "abcd", 1, math.exp(-1)),
        ("aab", "ab", 2, 2 / 3),
        ("abcde", "abxde", 3, (4 / 5 * 3 / 5 * 1 / 4) ** (1 / 3)),
        ("我爱你", "我爱你们", 4, math.exp(-1 / 3)),
        ("", "abc", 4, 0.0),
    ],
)
def test_bleu(hyp, ref, max_n, expected):
    assert bleu(hyp, ref, max_n) == pytest.approx(expected, abs=1e-12)


def test_corpus_bleu_pools_statistics():
    # unigrams: 2/2 and 2/2 pooled; brevity: c=4, r=6
    assert corpus_bleu(["ab", "cd"], ["ab", "cxde"], max_n=1) == pytest.approx(math.exp(1 - 6 / 4))
    # unigrams: 1/2 and 2/2 pooled to 3/4; brevity: c=4, r=4
    assert corpus_bleu(["ax", "cd"], ["ab", "dc"], max_n=1) == pytest.approx(3 / 4)


@given(st.text(alphabet="abcde", min_size=1, max_size=12))
def test_identity_scores(s):
    assert ter(s, s) == 0
    assert bleu(s, s) == pytest.approx(1.0)
