"""Melodies and the word-boundary constraints they imply.

A melody boundary sits at a musical pause and right before a highlighted
note; the lyric must have a word boundary there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import EmptyMelody, MalformedDocument, ZeroDurationNote
from .phonology import NULL_RHYME
from .prompts import ConstraintSet

# a note is a pitch peak when it exceeds both neighbouring notes by this many semitones
DEFAULT_PEAK_SEMITONES = 3


@dataclass(frozen=True)
class Note:
    pitch: Optional[int]  # None is a rest
    duration: Fraction  # in beats
    is_downbeat: bool = False
    is_highlighted: bool = False

    def __post_init__(self):
        if self.duration <= 0:
            raise ZeroDurationNote(f"note duration must be positive, got {self.duration}")
        if self.is_rest and (self.is_downbeat or self.is_highlighted):
            object.__setattr__(self, "is_downbeat", False)
            object.__setattr__(self, "is_highlighted", False)

    @property
    def is_rest(self) -> bool:
        return self.pitch is None


@dataclass(frozen=True)
class MelodyLine:
    notes: tuple

    @property
    def syllable_slots(self) -> int:
        return sum(1 for n in self.notes if not n.is_rest)


def extract_constraints(melody: MelodyLine, min_rest: Fraction = Fraction(0)) -> ConstraintSet:
    """Length and required boundaries of the lyric line sung to ``melody``.

    A boundary is required after the p-th sung note when rests totalling at
    least ``min_rest`` beats follow it, or when the next sung note is
    highlighted. The rhyme is left unconstrained.
    """
    sung = [i for i, n in enumerate(melody.notes) if not n.is_rest]
    if not sung:
        raise EmptyMelody("melody has no sung notes")
    notes = melody.notes
    length = len(sung)
    required = set()
    for p, idx in enumerate(sung[:-1], start=1):
        rest = Fraction(0)
        j = idx + 1
        while j < len(notes) and notes[j].is_rest:
            rest += notes[j].duration
            j += 1
        if j > idx + 1 and rest >= min_rest:
            required.add(p)
        if notes[sung[p]].is_highlighted:
            required.add(p)
    return ConstraintSet.from_positions(length, NULL_RHYME, required)


# ---------------------------------------------------------------------------
# melody-json


def _fraction(value, what: str) -> Fraction:
    try:
        if isinstance(value, bool):
            raise TypeError
        return Fraction(value) if not isinstance(value, float) else Fraction(value).limit_denominator(1 << 16)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise MalformedDocument(f"bad {what}: {value!r}") from exc


def _time_signature(value) -> tuple[int, int]:
    try:
        num, den = str(value).split("/")
        num, den = int(num), int(den)
    except ValueError as exc:
        raise MalformedDocument(f"bad time_signature {value!r}") from exc
    if num <= 0 or den <= 0:
        raise MalformedDocument(f"bad time_signature {value!r}")
    return num, den


def _line_from_doc(doc, peak_semitones: int) -> MelodyLine:
    if not isinstance(doc, dict) or not isinstance(doc.get("notes"), list):
        raise MalformedDocument("melody document needs a 'notes' list")
    beats_per_bar, _ = _time_signature(doc.get("time_signature", "4/4"))
    onset = -_fraction(doc.get("pickup", 0), "pickup")

    # first pass: durations, ties, explicit flags, inferred downbeats
    raw = []
    tie_open = False
    for k, item in enumerate(doc["notes"]):
        if not isinstance(item, dict) or "beats" not in item:
            raise MalformedDocument(f"note {k} needs 'beats'")
        pitch = item.get("pitch")
        if pitch is not None and (isinstance(pitch, bool) or not isinstance(pitch, int)):
            raise MalformedDocument(f"note {k}: pitch must be an integer or null")
        dur = _fraction(item["beats"], f"beats of note {k}")
        if dur <= 0:
            raise ZeroDurationNote(f"note {k} has duration {dur}")
        on_bar = onset % beats_per_bar == 0
        downbeat = bool(item.get("downbeat", on_bar)) and pitch is not None
        if tie_open:
            prev = raw[-1]
            if prev["pitch"] != pitch:
                raise MalformedDocument(f"note {k}: tie joins different pitches")
            prev["duration"] += dur
        else:
            raw.append(
                {"pitch": pitch, "duration": dur, "downbeat": downbeat, "highlight": bool(item.get("highlight", False))}
            )
        tie_open = bool(item.get("tie", False))
        if tie_open and pitch is None:
            raise MalformedDocument(f"note {k}: rests cannot be tied")
        onset += dur
    if tie_open:
        raise MalformedDocument("last note is tied to nothing")

    # second pass: pitch peaks against neighbouring sung notes
    sung = [r for r in raw if r["pitch"] is not None]
    for i in range(1, len(sung) - 1):
        p = sung[i]["pitch"]
        if p - sung[i - 1]["pitch"] >= peak_semitones and p - sung[i + 1]["pitch"] >= peak_semitones:
            sung[i]["highlight"] = True

    notes = tuple(
        Note(r["pitch"], r["duration"], r["downbeat"], r["downbeat"] or r["highlight"]) for r in raw
    )
    return MelodyLine(notes)


def _load(data: Union[bytes, str]):
    try:
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"not a JSON document: {exc}") from exc


def parse_melody(data: Union[bytes, str], peak_semitones: int = DEFAULT_PEAK_SEMITONES) -> MelodyLine:
    """Parse a single-line melody-json document."""
    return _line_from_doc(_load(data), peak_semitones)


def parse_melodies(data: Union[bytes, str], peak_semitones: int = DEFAULT_PEAK_SEMITONES) -> list[MelodyLine]:
    """Parse a document holding one line (an object) or several (an array of
    objects, or an object with a ``lines`` array)."""
    doc = _load(data)
    if isinstance(doc, dict) and "lines" in doc:
        doc = doc["lines"]
    docs: Sequence = doc if isinstance(doc, list) else [doc]
    return [_line_from_doc(d, peak_semitones) for d in docs]
