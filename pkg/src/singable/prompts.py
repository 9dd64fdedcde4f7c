"""Constraint sets and their prompt-token serialization.

A constraint set carries the desired syllable count, end-rhyme class and
required word boundaries of one output sentence. It is rendered into the
special tokens ``len_L``, ``rhy_R`` and one ``bdr_0``/``bdr_1`` per syllable.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidConstraints, TooLong, UnclassifiableRhyme
from .phonology import (
    NULL_RHYME,
    UNKNOWN,
    LanguageProfile,
    RhymeDistribution,
    SyllabifiedSentence,
    classify_rhyme,
    count_syllables,
    segment_words,
)

log = logging.getLogger(__name__)

MAX_LENGTH = 20
MAX_RHYME = 14

# relative weights for drawing 1, 2, 3 or 4 marked boundaries
BOUNDARY_COUNT_WEIGHTS = (1, 4, 3, 1)
DEFAULT_NULL_RATE = 1 / 15

LEN_TOKENS = tuple(f"len_{i}" for i in range(1, MAX_LENGTH + 1))
RHY_TOKENS = tuple(f"rhy_{j}" for j in range(0, MAX_RHYME + 1))
BDR_TOKENS = ("bdr_0", "bdr_1")
PROMPT_TOKENS = LEN_TOKENS + RHY_TOKENS + BDR_TOKENS


class Placement(enum.Enum):
    ENCODER_PREFIX = "enc-pref"
    DECODER_PREFIX = "dec-pref"
    DECODER_EMBEDDING = "dec-emb"


@dataclass(frozen=True)
class ConstraintSet:
    """``boundary`` is a bit vector over syllable positions 1..length; bit p-1
    set means a word boundary is required after syllable p."""

    length: int
    rhyme: int
    boundary: tuple

    def __post_init__(self):
        if not isinstance(self.length, (int, np.integer)) or self.length < 1:
            raise InvalidConstraints(f"length must be >= 1, got {self.length!r}")
        if self.length > MAX_LENGTH:
            raise TooLong(f"length {self.length} exceeds {MAX_LENGTH}")
        if not 0 <= self.rhyme <= MAX_RHYME:
            raise InvalidConstraints(f"rhyme must be in 0..{MAX_RHYME}, got {self.rhyme}")
        bits = tuple(int(b) for b in self.boundary)
        if len(bits) != self.length:
            raise InvalidConstraints(f"boundary width {len(bits)} != length {self.length}")
        if any(b not in (0, 1) for b in bits):
            raise InvalidConstraints("boundary entries must be 0 or 1")
        if bits[-1]:
            raise InvalidConstraints("the sentence-final position cannot be marked")
        object.__setattr__(self, "length", int(self.length))
        object.__setattr__(self, "rhyme", int(self.rhyme))
        object.__setattr__(self, "boundary", bits)

    @classmethod
    def from_positions(cls, length: int, rhyme: int, positions: Iterable[int]) -> "ConstraintSet":
        positions = set(positions)
        if any(not 1 <= p < length for p in positions):
            raise InvalidConstraints(f"boundary positions {sorted(positions)} not interior to length {length}")
        return cls(length, rhyme, tuple(int(p in positions) for p in range(1, length + 1)))

    @property
    def positions(self) -> frozenset:
        return frozenset(i + 1 for i, b in enumerate(self.boundary) if b)

    def mirrored(self) -> "ConstraintSet":
        """Same constraints described right-to-left: position p becomes L - p."""
        return ConstraintSet.from_positions(self.length, self.rhyme, {self.length - p for p in self.positions})

    def with_rhyme(self, rhyme: int) -> "ConstraintSet":
        return replace(self, rhyme=rhyme)


# ---------------------------------------------------------------------------
# constraint line format: "L=<int> R=<int> B=<comma-separated positions>"


def format_constraint_line(c: ConstraintSet) -> str:
    return f"L={c.length} R={c.rhyme} B={','.join(str(p) for p in sorted(c.positions))}"


def parse_constraint_line(line: str) -> ConstraintSet:
    fields = {}
    for part in line.split():
        key, sep, value = part.partition("=")
        if not sep or key not in ("L", "R", "B") or key in fields:
            raise InvalidConstraints(f"bad constraint line {line!r}")
        fields[key] = value
    if set(fields) != {"L", "R", "B"}:
        raise InvalidConstraints(f"constraint line needs L, R and B: {line!r}")
    try:
        positions = [int(p) for p in fields["B"].split(",") if p]
        return ConstraintSet.from_positions(int(fields["L"]), int(fields["R"]), positions)
    except ValueError as exc:
        if isinstance(exc, InvalidConstraints):
            raise
        raise InvalidConstraints(f"bad constraint line {line!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# sampling


def sample_boundary_prompt(sentence: SyllabifiedSentence, rng: np.random.Generator) -> tuple:
    """Pseudo ground-truth boundary vector: a random subset (1 to 4 entries,
    drawn 1:4:3:1) of the sentence's true word boundaries."""
    weights = np.array(BOUNDARY_COUNT_WEIGHTS, dtype=float)
    n = int(rng.choice(len(weights), p=weights / weights.sum())) + 1
    true_positions = sorted(sentence.word_boundary_positions)
    k = min(len(true_positions), n)
    chosen = set()
    if k:
        chosen = {true_positions[i] for i in rng.choice(len(true_positions), size=k, replace=False)}
    return tuple(int(p in chosen) for p in range(1, sentence.total_syllables + 1))


def constraints_from_target(target: str, profile: LanguageProfile, rng: np.random.Generator) -> ConstraintSet:
    sentence = segment_words(target, profile)
    if sentence.total_syllables > MAX_LENGTH:
        raise TooLong(f"target has {sentence.total_syllables} syllables")
    rhyme = classify_rhyme(target, profile)
    if rhyme == UNKNOWN:
        raise UnclassifiableRhyme(f"end of {target!r} has no rhyme class")
    return ConstraintSet(sentence.total_syllables, rhyme, sample_boundary_prompt(sentence, rng))


def constraints_from_source(
    source: str,
    source_profile: LanguageProfile,
    prior: RhymeDistribution,
    rng: np.random.Generator,
) -> ConstraintSet:
    length = count_syllables(source, source_profile)
    bits = sample_boundary_prompt(segment_words(source, source_profile), rng)
    if length > MAX_LENGTH:
        log.warning("source has %d syllables; clamping length to %d", length, MAX_LENGTH)
        length = MAX_LENGTH
        bits = bits[: MAX_LENGTH - 1] + (0,)
    return ConstraintSet(length, prior.sample(rng), bits)


def nullify_rhyme(
    constraints: Iterable[ConstraintSet], rate: float, rng: np.random.Generator
) -> Iterator[ConstraintSet]:
    """Independently replace each rhyme with the null class at ``rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    for c in constraints:
        if rng.random() < rate:
            c = c.with_rhyme(NULL_RHYME)
        yield c


# ---------------------------------------------------------------------------
# rendering


@dataclass(frozen=True)
class PromptSequence:
    tokens: tuple

    def __post_init__(self):
        toks = tuple(self.tokens)
        if len(toks) < 3 or toks[0] not in LEN_TOKENS or toks[1] not in RHY_TOKENS:
            raise InvalidConstraints(f"malformed prompt {toks!r}")
        length = LEN_TOKENS.index(toks[0]) + 1
        if len(toks) != 2 + length or any(t not in BDR_TOKENS for t in toks[2:]):
            raise InvalidConstraints(f"prompt needs exactly {length} bdr tokens: {toks!r}")
        object.__setattr__(self, "tokens", toks)

    def __str__(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class PromptDirective:
    """Prompt tokens plus where they go. For ``DECODER_EMBEDDING`` the
    ``channel`` holds, per output syllable position, the prompt tokens to be
    added to that position's embedding."""

    prompt: PromptSequence
    placement: Placement
    channel: Optional[tuple] = None

    @property
    def constraints(self) -> ConstraintSet:
        return parse_prompt(self.prompt.tokens)


def render_prompt(constraints: ConstraintSet, placement: Placement) -> PromptDirective:
    c = constraints
    tokens = (LEN_TOKENS[c.length - 1], RHY_TOKENS[c.rhyme]) + tuple(BDR_TOKENS[b] for b in c.boundary)
    prompt = PromptSequence(tokens)
    channel = None
    if placement is Placement.DECODER_EMBEDDING:
        channel = tuple((tokens[0], tokens[1], tokens[2 + i]) for i in range(c.length))
    return PromptDirective(prompt, placement, channel)


def parse_prompt(tokens: Sequence[str]) -> ConstraintSet:
    seq = PromptSequence(tuple(tokens))
    length = LEN_TOKENS.index(seq.tokens[0]) + 1
    rhyme = RHY_TOKENS.index(seq.tokens[1])
    return ConstraintSet(length, rhyme, tuple(BDR_TOKENS.index(t) for t in seq.tokens[2:]))
