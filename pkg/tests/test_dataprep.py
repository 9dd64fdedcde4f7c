import sys
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singable.dataprep import (
    ParallelPair,
    TrainingExample,
    backtranslate,
    corrupt_for_denoising,
    make_training_set,
    normalize_corpus,
    normalize_pairs,
    read_pairs,
    reverse_example,
    span_rate,
    target_length,
    write_pairs,
)
from singable.errors import ExternalCommandFailed, MalformedDocument
from singable.model import MASK, Direction
from singable.phonology import segment_words, tokenize
from singable.prompts import ConstraintSet, Placement, parse_prompt
from singable.synthetic import bundled, generate


class FixedRng:
    """Stands in for a Generator with predetermined draws."""

    def __init__(self, span, start):
        self.span, self.start = span, start

    def poisson(self, lam):
        return self.span

    def integers(self, low, high):
        assert low <= self.start < high
        return self.start


def test_normalize_corpus(mandarin):
    lines = ["你好！", "你好", "  ", "愛情", "一" * 21, "一" * 20, "你 好"]
    assert normalize_corpus(lines, mandarin) == ["你好", "爱情", "一" * 20]


def test_normalize_pairs(mandarin, english):
    pairs = [("Hello, world!", "你好，世界"), ("hello world", "你好世界"), ("x", "长" * 21), ("", "空")]
    out = normalize_pairs(pairs, english, mandarin)
    assert out == [ParallelPair("Hello world", "你好世界"), ParallelPair("hello world", "你好世界")]


def test_pairs_file_round_trip(tmp_path):
    pairs = [ParallelPair("a b", "花"), ParallelPair("c", "家", True)]
    path = tmp_path / "p.tsv"
    write_pairs(pairs, path)
    assert path.read_text(encoding="utf-8") == "a b\t花\nc\t家\tbt\n"
    assert read_pairs(path) == pairs
    path.write_text("only one column\n", encoding="utf-8")
    with pytest.raises(MalformedDocument):
        read_pairs(path)


def _examples(oracle, english, direction, rate=0.0, seed=0, pairs=None):
    pairs = pairs if pairs is not None else generate(50, 99)
    return list(
        make_training_set(pairs, oracle, Placement.ENCODER_PREFIX, direction, rate, np.random.default_rng(seed), source_profile=english)
    )


def test_normal_targets_match_tokenization(oracle, english):
    pairs = generate(50, 99)
    for p, e in zip(pairs, _examples(oracle, english, Direction.NORMAL, pairs=pairs)):
        assert list(e.target) == tokenize(p.target, oracle)
        assert list(e.source) == tokenize(p.source, english)
        assert target_length(e, oracle) == e.constraints.length


def test_reverse_targets_are_reversed(oracle, english):
    pairs = generate(50, 99)
    norm = _examples(oracle, english, Direction.NORMAL, pairs=pairs)
    rev = _examples(oracle, english, Direction.REVERSE, pairs=pairs)
    for n, r in zip(norm, rev):
        assert r.target == n.target[::-1]
        assert r.forward_target == n.target
        assert r.constraints == n.constraints


def test_examples_are_consistent(oracle, english):
    for e in _examples(oracle, english, Direction.REVERSE, rate=0.3):
        assert parse_prompt(e.prompt.prompt.tokens) == e.constraints
        s = segment_words("".join(e.forward_target), oracle)
        assert e.constraints.positions <= s.word_boundary_positions
        assert e.constraints.length == s.total_syllables


def test_reproducible_stream(oracle, english):
    a = [e.to_record() for e in _examples(oracle, english, Direction.REVERSE, rate=1 / 15, seed=4)]
    b = [e.to_record() for e in _examples(oracle, english, Direction.REVERSE, rate=1 / 15, seed=4)]
    c = [e.to_record() for e in _examples(oracle, english, Direction.REVERSE, rate=1 / 15, seed=5)]
    assert a == b
    assert a != c


def test_record_round_trip(oracle, english):
    for e in _examples(oracle, english, Direction.REVERSE, rate=0.5):
        back = TrainingExample.from_record(e.to_record())
        assert back == e
        assert back.prompt.constraints == e.constraints


def test_skips_are_counted(oracle, english):
    pairs = [("a", "花家"), ("b", "花" * 21), ("c", "abc"), ("d", "，"), ("e", "世界")]
    stats = Counter()
    out = list(
        make_training_set(pairs, oracle, Placement.DECODER_PREFIX, Direction.NORMAL, 0.0, np.random.default_rng(0), source_profile=english, stats=stats)
    )
    assert [e.forward_target for e in out] == [("花", "家"), ("世", "界")]
    assert stats == Counter({"kept": 2, "TooLong": 1, "UnpronounceableToken": 1, "EmptyInput": 1})


def test_reverse_example():
    tokens, c = reverse_example(["花", "温", "暖"], ConstraintSet.from_positions(3, 8, {1}))
    assert tokens == ("暖", "温", "花")
    assert c.positions == {2}


def test_span_rates():
    assert [span_rate(n) for n in (0, 1, 2, 3, 4, 20)] == [0.0, 0.0, 1.0, 1.0, 3.0, 3.0]


def test_corruption_fixed_draws():
    assert corrupt_for_denoising("花家", FixedRng(1, 1)) == ("花" + MASK, "花家")
    assert corrupt_for_denoising("花家", FixedRng(0, 2)) == ("花家" + MASK, "花家")
    assert corrupt_for_denoising("花家月", FixedRng(9, 0)) == (MASK, "花家月")
    assert corrupt_for_denoising("花", FixedRng(1, 0)) == ("花", "花")


def test_corruption_by_words(english):
    c, o = corrupt_for_denoising("let it go now", FixedRng(2, 1), english)
    assert (c, o) == (f"let {MASK} now", "let it go now")


@settings(deadline=None)
@given(st.text(alphabet="花家月海天", min_size=2, max_size=20), st.integers(0, 2**32 - 1))
def test_corruption_keeps_original(line, seed):
    corrupted, original = corrupt_for_denoising(line, np.random.default_rng(seed))
    assert original == line
    assert corrupted.count(MASK) == 1
    before, _, after = corrupted.partition(MASK)
    assert line.startswith(before) and line.endswith(after)
    assert len(before) + len(after) <= len(line)


def test_backtranslate_identity():
    lines = ["花家", "月海", "天"]
    pairs = backtranslate(lines, "cat", batch_size=2)
    assert pairs == [ParallelPair(t, t, True) for t in lines]
    assert all(p.synthetic for p in pairs)


def test_backtranslate_failure_reports_batch():
    script = "import sys; d = sys.stdin.read(); sys.exit(3) if 'BAD' in d else sys.stdout.write(d)"
    cmd = [sys.executable, "-c", script]
    with pytest.raises(ExternalCommandFailed) as err:
        backtranslate(["a", "b", "c", "BAD", "e"], cmd, batch_size=2)
    assert err.value.batch_index == 1
    with pytest.raises(ExternalCommandFailed) as err:
        backtranslate(["a"], [sys.executable, "-c", "print('x'); print('y')"])
    assert err.value.batch_index == 0
    with pytest.raises(ExternalCommandFailed):
        backtranslate(["a"], "/nonexistent/translator")


def test_bundled_corpora_are_disjoint():
    train = {p.target for p in read_pairs(bundled("oracle_train.tsv"))}
    held = [p.target for p in read_pairs(bundled("oracle_heldout.tsv"))]
    assert len(held) == len(set(held)) >= 200
    assert not train & set(held)
