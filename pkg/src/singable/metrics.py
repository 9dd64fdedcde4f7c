"""Objective evaluation: constraint satisfaction, TER and character BLEU.

The control metrics return exact :class:`~fractions.Fraction` values. TER
here has no shift operation and BLEU is character-level with add-one
smoothing for n >= 2, so scores are comparable with each other but not with
external toolkits.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import EmptyInput, EmptySet, NoRequiredBoundaries, SingableError
from .phonology import LanguageProfile, classify_rhyme, count_syllables, segment_words
from .prompts import ConstraintSet


@dataclass(frozen=True)
class EvalRecord:
    hypothesis: str
    reference: Optional[str] = None
    constraints: Optional[ConstraintSet] = None


def _constrained(records: Iterable[EvalRecord]) -> list[EvalRecord]:
    records = list(records)
    if not records:
        raise EmptySet("no records")
    if any(r.constraints is None for r in records):
        raise ValueError("every record needs constraints")
    return records


def length_accuracy(records: Iterable[EvalRecord], profile: LanguageProfile) -> Fraction:
    records = _constrained(records)
    hits = 0
    for r in records:
        try:
            hits += count_syllables(r.hypothesis, profile) == r.constraints.length
        except SingableError:
            pass
    return Fraction(hits, len(records))


def rhyme_accuracy(records: Iterable[EvalRecord], profile: LanguageProfile) -> Fraction:
    """Records whose rhyme constraint is the null class are not counted."""
    scored = [r for r in _constrained(records) if r.constraints.rhyme != 0]
    if not scored:
        raise EmptySet("no record carries a rhyme constraint")
    hits = 0
    for r in scored:
        try:
            hits += classify_rhyme(r.hypothesis, profile) == r.constraints.rhyme
        except EmptyInput:
            pass
    return Fraction(hits, len(scored))


def hypothesis_boundaries(text: str, profile: LanguageProfile) -> frozenset:
    try:
        return segment_words(text, profile).word_boundary_positions
    except SingableError:
        return frozenset()


def recall_counts(pairs: Iterable[tuple[frozenset, frozenset]]) -> Fraction:
    """Micro-averaged recall over ``(required, found)`` position-set pairs."""
    hit = need = 0
    for required, found in pairs:
        need += len(required)
        hit += len(required & found)
    if need == 0:
        raise NoRequiredBoundaries("no required boundary in the whole set")
    return Fraction(hit, need)


def boundary_recall(records: Iterable[EvalRecord], profile: LanguageProfile) -> Fraction:
    return recall_counts(
        (r.constraints.positions, hypothesis_boundaries(r.hypothesis, profile)) for r in _constrained(records)
    )


# ---------------------------------------------------------------------------
# reference-based


def _chars(text: str) -> str:
    text = unicodedata.normalize("NFKC", text)
    return "".join(c for c in text if not c.isspace() and unicodedata.category(c)[0] not in "PSCZ")


def edit_distance(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def ter(hypothesis: str, reference: str) -> float:
    return corpus_ter([hypothesis], [reference])


def corpus_ter(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Total character edits over total reference length."""
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references differ in count")
    edits = length = 0
    for h, r in zip(hypotheses, references):
        h, r = _chars(h), _chars(r)
        edits += edit_distance(h, r)
        length += len(r)
    if length == 0:
        raise EmptyInput("references are empty")
    return edits / length


def _ngrams(s: str, n: int) -> Counter:
    return Counter(s[i : i + n] for i in range(len(s) - n + 1))


def bleu(hypothesis: str, reference: str, max_n: int = 4) -> float:
    return corpus_bleu([hypothesis], [reference], max_n)


def corpus_bleu(hypotheses: Sequence[str], references: Sequence[str], max_n: int = 4) -> float:
    """Character BLEU in [0, 1]; statistics pooled over the corpus."""
    if len(hypotheses) != len(references):
        raise ValueError("hypotheses and references differ in count")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hypotheses, references):
        h, r = _chars(h), _chars(r)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hc, rc = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += sum(hc.values())
    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_p = math.log(matches[0] / totals[0])
    for n in range(1, max_n):
        log_p += math.log((matches[n] + 1) / (totals[n] + 1))
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return bp * math.exp(log_p / max_n)
