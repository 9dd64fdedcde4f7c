import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singable.errors import EmptyInput, ProfileError, UnpronounceableToken
from singable.phonology import (
    NULL_RHYME,
    UNKNOWN,
    build_rhyme_table,
    classify_rhyme,
    count_syllables,
    english_vowel_groups,
    load_profile,
    normalize,
    pinyin_final,
    profile_from_dict,
    rhyme_prior,
    segment_words,
    tokenize,
)


@pytest.mark.parametrize(
    "text, expected",
    [("随它吧", 3), ("我", 1), ("你好，世界！", 4), ("  月 亮 ", 2), ("隨它吧", 3)],
)
def test_mandarin_syllables(mandarin, text, expected):
    assert count_syllables(text, mandarin) == expected


@pytest.mark.parametrize(
    "text, expected",
    [("tonight", 2), ("Let it go", 3), ("the", 1), ("little", 2), ("make", 1), ("fire", 2), ("I'm", 1)],
)
def test_english_syllables(english, text, expected):
    assert count_syllables(text, english) == expected


def test_vowel_group_fallback():
    assert english_vowel_groups("banana") == 3
    assert english_vowel_groups("stone") == 1
    assert english_vowel_groups("tree") == 1
    assert english_vowel_groups("rhythm") == 1  # y is a vowel here
    assert english_vowel_groups("brr") == 1


def test_empty_and_unpronounceable(mandarin, english):
    with pytest.raises(EmptyInput):
        count_syllables("，。！ ", mandarin)
    with pytest.raises(UnpronounceableToken):
        count_syllables("abc", mandarin)
    with pytest.raises(UnpronounceableToken):
        count_syllables("123", english)


@pytest.mark.parametrize(
    "syllable, final",
    [
        ("guang", "uang"),
        ("yue", "ve"),
        ("ju", "v"),
        ("xun", "vn"),
        ("yi", "i"),
        ("wu", "u"),
        ("you", "iou"),
        ("wei", "uei"),
        ("shi", "shi"),
        ("er", "er"),
        ("lü", "v"),
        ("liu", "iu"),
        ("hui", "ui"),
    ],
)
def test_pinyin_final(syllable, final):
    assert pinyin_final(syllable) == final


@pytest.mark.parametrize(
    "word, cls",
    [
        ("吧", 1),
        ("花", 1),
        ("歌", 2),
        ("月", 3),
        ("海", 4),
        ("飞", 5),
        ("桥", 6),
        ("走", 7),
        ("天", 8),
        ("心", 9),
        ("光", 10),
        ("唐", 10),
        ("风", 11),
        ("雨", 12),
        ("诗", 13),
        ("路", 14),
        ("世界", 3),
    ],
)
def test_rhyme_classes(mandarin, word, cls):
    assert classify_rhyme(word, mandarin) == cls


def test_unknown_rhyme_is_explicit(english):
    # the English profile has no rhyme scheme
    assert classify_rhyme("light", english) == UNKNOWN


def test_rhyme_table_covers_every_final(mandarin):
    finals = {pinyin_final(s) for s in set(mandarin.pronunciations.values())}
    missing = {f for f in finals if f not in mandarin.rhyme_table}
    assert not missing


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(sorted(load_profile("mandarin").pronunciations)))
def test_classification_never_yields_null(ch):
    profile = load_profile("mandarin")
    assert classify_rhyme(ch, profile) not in (NULL_RHYME, UNKNOWN)


def test_overlapping_classes_rejected():
    with pytest.raises(ProfileError):
        build_rhyme_table([["a", "o"], ["o"]])


def test_profile_from_dict_and_errors(tmp_path):
    doc = {
        "format": "singable-profile",
        "version": 1,
        "id": "toy",
        "syllable_rule": "char",
        "finals": "identity",
        "rhyme_classes": [["a"], ["b"]],
    }
    p = profile_from_dict(doc)
    assert classify_rhyme("xa", p) == 1
    assert classify_rhyme("xc", p) == UNKNOWN
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(doc))
    assert load_profile(str(path)).id == "toy"
    with pytest.raises(ProfileError):
        profile_from_dict({**doc, "version": 9})
    with pytest.raises(ProfileError):
        profile_from_dict({**doc, "syllable_rule": "morae"})


def test_extends(tmp_path, mandarin):
    path = tmp_path / "child.json"
    path.write_text(json.dumps({"format": "singable-profile", "version": 1, "id": "child", "extends": "mandarin", "lexicon": "月亮"}))
    child = load_profile(str(path))
    assert child.id == "child"
    assert child.lexicon == {"月亮"}
    assert classify_rhyme("光", child) == classify_rhyme("光", mandarin)


def test_normalize(mandarin):
    assert normalize("「愛」與  夢！", mandarin) == "爱与 梦"
    assert normalize("ｆｕｌｌ width", mandarin) == "full width"


def test_tokenize(mandarin, english):
    assert tokenize("你好 世界", mandarin) == ["你", "好", "世", "界"]
    assert tokenize("Let It Go!", english) == ["let", "it", "go"]


def test_segment_words(mandarin, oracle, english):
    s = segment_words("花温暖世界", oracle)
    assert s.tokens == ("花", "温暖", "世界")
    assert s.word_boundary_positions == {1, 3}
    assert s.total_syllables == 5
    # whitespace always breaks
    assert segment_words("温 暖", oracle).word_boundary_positions == {1}
    e = segment_words("let it go", english)
    assert e.word_boundary_positions == {1, 2}
    m = segment_words("我们的世界", mandarin)
    assert m.total_syllables == 5
    assert m.word_boundary_positions <= set(range(1, 5))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["花", "家", "温暖", "自由", "世界", "光"]), min_size=1, max_size=8))
def test_segmentation_recovers_oracle_words(words):
    oracle = load_profile("oracle")
    s = segment_words("".join(words), oracle)
    assert list(s.tokens) == words
    assert all(n >= 1 for n in s.syllables_per_token)


def test_rhyme_prior(mandarin):
    prior = rhyme_prior(["花", "家", "歌", "abc", ""], mandarin)
    assert prior.prob(1) == pytest.approx(2 / 3)
    assert prior.prob(2) == pytest.approx(1 / 3)
    assert prior.ranked()[0] == (1, pytest.approx(2 / 3))
    rng = np.random.default_rng(0)
    assert {prior.sample(rng) for _ in range(200)} == {1, 2}
