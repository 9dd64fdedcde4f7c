"""Rhyme ranking from the first step of reverse-order decoding.

With the rhyme prompt nulled, a reverse-order model's first-step distribution
is a distribution over end words. Summing it within each rhyme class scores
how naturally a sentence can end in that class; a paragraph sums sentence
scores and applies a softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Direction, SequenceModel, Vocabulary
from .phonology import NULL_RHYME, RhymeDistribution
from .prompts import ConstraintSet, Placement, render_prompt

__all__ = [
    "EndWordDistribution",
    "RhymeDistribution",
    "aggregate_rhyme_distribution",
    "end_word_distribution",
    "rank_paragraph_rhymes",
    "softmax",
]


@dataclass(frozen=True, eq=False)
class EndWordDistribution:
    probs: np.ndarray  # over the whole vocabulary
    special_mass: float  # EOS and any other special token

    def word_probs(self, vocabulary: Vocabulary) -> np.ndarray:
        out = self.probs.copy()
        out[: vocabulary.first_content_id] = 0.0
        return out


def end_word_distribution(
    model: SequenceModel,
    source: Sequence[str],
    length: int,
    boundary: Sequence[int],
    placement: Placement,
) -> EndWordDistribution:
    """First-step distribution of reverse decoding under the null rhyme prompt."""
    directive = render_prompt(ConstraintSet(length, NULL_RHYME, tuple(boundary)), placement)
    probs = np.asarray(model.next_distribution(tuple(source), directive, (), Direction.REVERSE), dtype=float)
    first = model.vocabulary.first_content_id
    return EndWordDistribution(probs, float(probs[:first].sum()))


def aggregate_rhyme_distribution(dist: EndWordDistribution, vocabulary: Vocabulary) -> RhymeDistribution:
    u = vocabulary.num_rhyme_classes
    words = dist.word_probs(vocabulary)
    rhymes = vocabulary.rhymes
    in_scheme = (rhymes >= 1) & (rhymes <= u)
    per_class = np.bincount(rhymes[in_scheme] - 1, weights=words[in_scheme], minlength=u)
    residual = dist.special_mass + float(words[~in_scheme].sum())
    total = per_class.sum() + residual
    return RhymeDistribution(per_class / total, residual / total)


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - np.max(x))
    return z / z.sum()


def rank_paragraph_rhymes(
    model: SequenceModel,
    sentences: Sequence[tuple[Sequence[str], int, Sequence[int]]],
    placement: Placement,
) -> RhymeDistribution:
    """Softmax over the summed per-sentence class distributions.

    ``sentences`` holds ``(source tokens, length, boundary bits)`` per line.
    Use :meth:`RhymeDistribution.ranked` for the classes in descending order.
    """
    if not sentences:
        raise ValueError("paragraph needs at least one sentence")
    rows = [
        aggregate_rhyme_distribution(end_word_distribution(model, src, length, bdr, placement), model.vocabulary).probs
        for src, length, bdr in sentences
    ]
    # fsum is correctly rounded, so the sum does not depend on sentence order
    total = np.array([math.fsum(col) for col in zip(*rows)])
    return RhymeDistribution(softmax(total))
