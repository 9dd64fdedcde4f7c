import json
from fractions import Fraction

import pytest

from singable.errors import EmptyMelody, MalformedDocument, ZeroDurationNote
from singable.melody import MelodyLine, Note, extract_constraints, parse_melodies, parse_melody


def doc(notes, **kw):
    return json.dumps({"time_signature": "4/4", "notes": notes, **kw})


def n(pitch, beats, **kw):
    return {"pitch": pitch, "beats": beats, **kw}


def test_downbeats_inferred_from_onsets():
    line = parse_melody(doc([n(60, 1), n(62, 1), n(64, 1), n(65, 1), n(64, 1), n(62, 1), n(60, 2)]))
    assert [x.is_downbeat for x in line.notes] == [True, False, False, False, True, False, False]
    c = extract_constraints(line)
    assert c.length == 7 and c.positions == {4}


def test_pickup_shifts_bar_lines():
    line = parse_melody(doc([n(60, 1), n(62, 1), n(64, 1)], pickup=1))
    assert [x.is_downbeat for x in line.notes] == [False, True, False]
    assert extract_constraints(line).positions == {1}


def test_three_four_time():
    line = parse_melody(json.dumps({"time_signature": "3/4", "notes": [n(60, 1)] * 6}))
    assert extract_constraints(line).positions == {3}


def test_rest_and_min_rest():
    line = parse_melody(doc([n(60, 1, downbeat=False), n(60, 0.5), n(None, 0.5), n(62, 1), n(None, 1), n(64, 4)]))
    assert extract_constraints(line, Fraction(0)).positions == {2, 3}
    assert extract_constraints(line, Fraction(1)).positions == {3}


def test_pitch_peak_highlight():
    line = parse_melody(doc([n(60, 0.5), n(60, 0.5), n(67, 0.5), n(62, 0.5)]))
    assert [x.is_highlighted for x in line.notes] == [True, False, True, False]
    assert extract_constraints(line).positions == {2}
    flat = parse_melody(doc([n(60, 0.5), n(60, 0.5), n(67, 0.5), n(62, 0.5)]), peak_semitones=6)
    assert extract_constraints(flat).positions == set()


def test_explicit_flags_override():
    line = parse_melody(doc([n(60, 1, downbeat=False), n(60, 1, highlight=True), n(60, 1)]))
    assert extract_constraints(line).positions == {1}


def test_ties_merge_notes():
    line = parse_melody(doc([n(60, 1), n(62, 1, tie=True), n(62, 1), n(64, 1)]))
    assert line.syllable_slots == 3
    assert line.notes[1].duration == 2
    with pytest.raises(MalformedDocument):
        parse_melody(doc([n(60, 1, tie=True), n(62, 1)]))
    with pytest.raises(MalformedDocument):
        parse_melody(doc([n(60, 1, tie=True)]))


def test_multi_line_documents():
    one = {"notes": [n(60, 1)]}
    assert len(parse_melodies(json.dumps([one, one]))) == 2
    assert len(parse_melodies(json.dumps({"lines": [one, one, one]}))) == 3
    assert len(parse_melodies(json.dumps(one))) == 1


@pytest.mark.parametrize(
    "payload, exc",
    [
        (b"\xff\xfe", MalformedDocument),
        ("{", MalformedDocument),
        (json.dumps({"notes": "x"}), MalformedDocument),
        (json.dumps({"notes": [{"pitch": 60}]}), MalformedDocument),
        (json.dumps({"notes": [{"pitch": "C4", "beats": 1}]}), MalformedDocument),
        (json.dumps({"time_signature": "4", "notes": []}), MalformedDocument),
        (json.dumps({"notes": [{"pitch": 60, "beats": 0}]}), ZeroDurationNote),
        (json.dumps({"notes": [{"pitch": 60, "beats": "1/0"}]}), MalformedDocument),
    ],
)
def test_malformed(payload, exc):
    with pytest.raises(exc):
        parse_melody(payload)


def test_empty_melody():
    with pytest.raises(EmptyMelody):
        extract_constraints(MelodyLine((Note(None, Fraction(1)),)))
    with pytest.raises(EmptyMelody):
        extract_constraints(parse_melody(doc([])))


def test_rests_never_flagged():
    r = Note(None, Fraction(1), is_downbeat=True, is_highlighted=True)
    assert not r.is_downbeat and not r.is_highlighted
    with pytest.raises(ZeroDurationNote):
        Note(60, Fraction(0))


def test_fractional_beats():
    line = parse_melody(doc([n(60, "1/3"), n(60, "1/3"), n(60, "1/3"), n(60, 1)]))
    assert [x.is_downbeat for x in line.notes] == [True, False, False, False]
