"""Constrained beam search over any :class:`~singable.model.SequenceModel`.

Two control modes:

* ``PROMPT``: constraints reach the model only through its prompt; scores are
  the model's log-probabilities.
* ``BIASED``: the search itself adds score bonuses for a rhyming end word and
  for word boundaries at required positions.

``hard_length`` is independent of the mode: it forbids EOS before the target
syllable count, forces it there, and prunes prefixes that can no longer reach
the target.

:func:`brute_force_decode` enumerates every complete hypothesis under exactly
the same expansion rules and serves as the oracle for :func:`beam_search`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NoCompletableHypothesis, SearchSpaceTooLarge, UnfinishedHypothesis, UnsupportedPlacement
from .model import EOS_ID, Direction, SequenceModel, Vocabulary
from .phonology import LanguageProfile, segment_words, tokenize
from .prompts import ConstraintSet, Placement, render_prompt

BRUTE_FORCE_MAX_VOCAB = 10
BRUTE_FORCE_MAX_LEN = 6

# maps forward-order content tokens to interior word-boundary positions
WordBoundaries = Callable[[Sequence[str]], frozenset]


class Mode(enum.Enum):
    PROMPT = "prompt"
    BIASED = "biased"


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 5
    max_len: int = 30
    direction: Direction = Direction.NORMAL
    mode: Mode = Mode.PROMPT
    hard_length: bool = False
    rhyme_bonus: float = 0.0
    boundary_bonus: float = 0.0

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if not (math.isfinite(self.rhyme_bonus) and math.isfinite(self.boundary_bonus)):
            raise ValueError("bonuses must be finite")
        has_bonus = self.rhyme_bonus != 0 or self.boundary_bonus != 0
        if self.mode is Mode.PROMPT and has_bonus:
            raise ValueError("score bonuses only apply in biased mode")
        if self.mode is Mode.BIASED and not (has_bonus or self.hard_length):
            raise ValueError("biased mode needs a nonzero bonus or hard_length")


@dataclass(frozen=True)
class Hypothesis:
    """Search state. ``tokens`` are ids in generation order, ending in EOS
    once finished. ``logprob`` is the model's; ``score`` adds any bonuses."""

    tokens: tuple
    logprob: float
    score: float
    syllables_used: int
    boundary_trace: frozenset = frozenset()
    finished: bool = False

    @property
    def content(self) -> tuple:
        return self.tokens[:-1] if self.finished else self.tokens


@dataclass
class DecodeResult:
    candidates: list
    best_text: str
    satisfied: dict = field(default_factory=dict)

    @property
    def best(self) -> Hypothesis:
        return self.candidates[0]


def rank_key(h: Hypothesis):
    """Higher score first; ties broken by token ids, lexicographically."""
    return (-h.score, h.tokens)


def token_boundaries(vocabulary: Vocabulary) -> WordBoundaries:
    """Treat every token as a whole word."""

    def boundaries(tokens: Sequence[str]) -> frozenset:
        out, acc = set(), 0
        for t in tokens[:-1]:
            acc += int(vocabulary.syllables[vocabulary.index[t]])
            out.add(acc)
        return frozenset(out)

    return boundaries


def profile_boundaries(profile: LanguageProfile) -> WordBoundaries:
    """Word boundaries from the profile's segmenter run over the joined tokens."""

    def boundaries(tokens: Sequence[str]) -> frozenset:
        if not tokens:
            return frozenset()
        return segment_words(profile.joiner.join(tokens), profile).word_boundary_positions

    return boundaries


class _Search:
    def __init__(
        self,
        model: SequenceModel,
        source: Sequence[str],
        constraints: ConstraintSet,
        placement: Placement,
        config: DecodeConfig,
        word_boundaries: Optional[WordBoundaries],
    ):
        if placement not in model.supports_placements:
            raise UnsupportedPlacement(f"model does not support {placement.value}")
        self.model = model
        self.source = tuple(source)
        self.constraints = constraints
        self.directive = render_prompt(constraints, placement)
        self.config = config
        self.vocab = model.vocabulary
        self.word_boundaries = word_boundaries or token_boundaries(self.vocab)
        self.required = constraints.positions
        self.biased = config.mode is Mode.BIASED
        self.track_boundaries = self.biased and config.boundary_bonus != 0
        self.max_weight = int(self.vocab.syllables[self.vocab.first_content_id :].max(initial=1))
        self._cache: dict = {}

    def distribution(self, prefix: tuple) -> np.ndarray:
        dist = self._cache.get(prefix)
        if dist is None:
            dist = self.model.next_distribution(self.source, self.directive, prefix, self.config.direction)
            self._cache[prefix] = dist
        return dist

    def satisfied_boundaries(self, content: Sequence[int], used: int) -> frozenset:
        """Required positions already realised inside ``content``."""
        if not content:
            return frozenset()
        tokens = self.vocab.decode(content)
        if self.config.direction is Direction.REVERSE:
            local = self.word_boundaries(tokens[::-1])
            offset = self.constraints.length - used
            found = {offset + b for b in local}
        else:
            found = self.word_boundaries(tokens)
        return frozenset(self.required & found)

    def _rhymes(self, token_id: int) -> bool:
        return self.constraints.rhyme != 0 and int(self.vocab.rhymes[token_id]) == self.constraints.rhyme

    def expand(self, hyp: Hypothesis) -> list:
        cfg = self.config
        length = self.constraints.length
        content = hyp.tokens
        n = len(content)
        probs = self.distribution(content)
        out = []
        for tok in self.vocab.emittable_ids:
            tok = int(tok)
            p = probs[tok]
            if p <= 0.0:
                continue
            lp = math.log(p)
            if tok == EOS_ID:
                if n == 0 or (cfg.hard_length and hyp.syllables_used != length):
                    continue
                bonus = 0.0
                if (
                    self.biased
                    and cfg.direction is Direction.NORMAL
                    and not cfg.hard_length
                    and self._rhymes(content[-1])
                ):
                    bonus = cfg.rhyme_bonus
                out.append(
                    Hypothesis(
                        content + (EOS_ID,),
                        hyp.logprob + lp,
                        hyp.score + lp + bonus,
                        hyp.syllables_used,
                        hyp.boundary_trace,
                        True,
                    )
                )
                continue
            if n >= cfg.max_len:
                continue
            used = hyp.syllables_used + int(self.vocab.syllables[tok])
            if cfg.hard_length:
                remaining = length - used
                if remaining < 0 or remaining > (cfg.max_len - n - 1) * self.max_weight:
                    continue
            bonus = 0.0
            trace = hyp.boundary_trace
            if self.biased:
                if self._rhymes(tok):
                    if cfg.direction is Direction.REVERSE:
                        if n == 0:
                            bonus += cfg.rhyme_bonus
                    elif cfg.hard_length and used == length:
                        bonus += cfg.rhyme_bonus
                if self.track_boundaries:
                    trace = self.satisfied_boundaries(content + (tok,), used)
                    bonus += cfg.boundary_bonus * (len(trace) - len(hyp.boundary_trace))
            out.append(Hypothesis(content + (tok,), hyp.logprob + lp, hyp.score + lp + bonus, used, trace, False))
        return out

    def result(self, finished: list) -> DecodeResult:
        if not finished:
            raise NoCompletableHypothesis("no hypothesis satisfies the search constraints")
        finished.sort(key=rank_key)
        candidates = [
            replace(h, boundary_trace=self.satisfied_boundaries(h.content, h.syllables_used))
            for h in finished[: self.config.beam_size]
        ]
        best = candidates[0]
        return DecodeResult(candidates, detokenize(best, self.config.direction, self.vocab), self.check(best))

    def check(self, h: Hypothesis) -> dict:
        c = self.constraints
        content = h.content
        end = content[0] if self.config.direction is Direction.REVERSE else content[-1]
        forward = self.vocab.decode(content[::-1] if self.config.direction is Direction.REVERSE else content)
        return {
            "length": h.syllables_used == c.length,
            "rhyme": None if c.rhyme == 0 else int(self.vocab.rhymes[end]) == c.rhyme,
            "boundary": self.required <= self.word_boundaries(forward),
        }


def beam_search(
    model: SequenceModel,
    source: Sequence[str],
    constraints: ConstraintSet,
    placement: Placement,
    config: DecodeConfig = DecodeConfig(),
    word_boundaries: Optional[WordBoundaries] = None,
) -> DecodeResult:
    """Beam search keeping ``beam_size`` live prefixes per step.

    Hypotheses that emit EOS leave the beam for a finished pool; the search
    runs until no live prefix remains. The best ``beam_size`` finished
    hypotheses are returned, ordered by :func:`rank_key`.
    """
    search = _Search(model, source, constraints, placement, config, word_boundaries)
    live = [Hypothesis((), 0.0, 0.0, 0)]
    finished: list = []
    while live:
        expanded = [child for h in live for child in search.expand(h)]
        finished.extend(h for h in expanded if h.finished)
        if len(finished) > 4 * config.beam_size:
            finished.sort(key=rank_key)
            del finished[config.beam_size :]
        growing = [h for h in expanded if not h.finished]
        growing.sort(key=rank_key)
        live = growing[: config.beam_size]
    return search.result(finished)


def brute_force_decode(
    model: SequenceModel,
    source: Sequence[str],
    constraints: ConstraintSet,
    placement: Placement,
    config: DecodeConfig = DecodeConfig(),
    word_boundaries: Optional[WordBoundaries] = None,
) -> DecodeResult:
    """Exact search over every complete hypothesis (small problems only)."""
    if model.vocabulary.content_size > BRUTE_FORCE_MAX_VOCAB or config.max_len > BRUTE_FORCE_MAX_LEN:
        raise SearchSpaceTooLarge(
            f"brute force needs <= {BRUTE_FORCE_MAX_VOCAB} content tokens and max_len <= {BRUTE_FORCE_MAX_LEN}"
        )
    search = _Search(model, source, constraints, placement, config, word_boundaries)
    stack = [Hypothesis((), 0.0, 0.0, 0)]
    finished: list = []
    cap = max(4096, 2 * config.beam_size)
    while stack:
        for child in search.expand(stack.pop()):
            if child.finished:
                finished.append(child)
            else:
                stack.append(child)
        if len(finished) > cap:
            finished.sort(key=rank_key)
            del finished[config.beam_size :]
    return search.result(finished)


def count_complete_hypotheses(
    model: SequenceModel,
    source: Sequence[str],
    constraints: ConstraintSet,
    placement: Placement,
    config: DecodeConfig = DecodeConfig(),
    word_boundaries: Optional[WordBoundaries] = None,
) -> int:
    """Size of the space :func:`brute_force_decode` searches."""
    search = _Search(model, source, constraints, placement, config, word_boundaries)
    stack, count = [Hypothesis((), 0.0, 0.0, 0)], 0
    while stack:
        for child in search.expand(stack.pop()):
            if child.finished:
                count += 1
            else:
                stack.append(child)
    return count


def detokenize(hypothesis: Hypothesis, direction: Direction, vocabulary: Vocabulary) -> str:
    """Text of a finished hypothesis, special tokens dropped, read left to right."""
    if not hypothesis.finished:
        raise UnfinishedHypothesis("hypothesis has not emitted EOS")
    ids = [i for i in hypothesis.tokens if not vocabulary.is_special(i)]
    if direction is Direction.REVERSE:
        ids.reverse()
    return vocabulary.joiner.join(vocabulary.decode(ids))


def encode_target(text: str, vocabulary: Vocabulary, profile: LanguageProfile, direction: Direction) -> tuple:
    """Token ids of ``text`` in generation order (inverse of :func:`detokenize`)."""
    ids = vocabulary.encode(tokenize(text, profile))
    return ids[::-1] if direction is Direction.REVERSE else ids
