"""Sequence-model interface and a prompt-conditioned n-gram reference model.

The decoder only needs :meth:`SequenceModel.next_distribution`. The n-gram
model is deliberately small: small enough that exhaustive decoding can be
used as a test oracle, and structured enough that prompts can actually steer
it.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import zlib
from collections import defaultdict
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence, Union

import numpy as np

from .errors import CorruptFile, DirectionMismatch, EmptyCorpus, UnsupportedPlacement, VersionMismatch
from .phonology import UNKNOWN, LanguageProfile, _token_syllables, classify_rhyme
from .prompts import (
    BDR_TOKENS,
    PROMPT_TOKENS,
    RHY_TOKENS,
    ConstraintSet,
    Placement,
    PromptDirective,
    parse_prompt,
    render_prompt,
)


class Direction(enum.Enum):
    NORMAL = "normal"
    REVERSE = "reverse"


BOS, EOS, MASK = "<s>", "</s>", "<mask>"
SPECIAL_TOKENS = (BOS, EOS, MASK) + PROMPT_TOKENS
BOS_ID, EOS_ID, MASK_ID = 0, 1, 2


class Vocabulary:
    """Bijection between tokens and ids.

    Special tokens (BOS, EOS, mask and every prompt token) occupy the first ids
    and have zero syllables. Content tokens follow in the order given.
    """

    def __init__(
        self,
        content: Sequence[str],
        syllables: Sequence[int],
        rhymes: Sequence[int],
        joiner: str = "",
        num_rhyme_classes: int = 14,
    ):
        content = tuple(content)
        if len(set(content)) != len(content):
            raise ValueError("duplicate content tokens")
        if set(content) & set(SPECIAL_TOKENS):
            raise ValueError("content tokens collide with special tokens")
        if not (len(content) == len(syllables) == len(rhymes)):
            raise ValueError("content, syllables and rhymes differ in length")
        if any(s < 1 for s in syllables):
            raise ValueError("content tokens need at least one syllable")
        self.tokens = SPECIAL_TOKENS + content
        self.index = {t: i for i, t in enumerate(self.tokens)}
        n_special = len(SPECIAL_TOKENS)
        self.syllables = np.array([0] * n_special + [int(s) for s in syllables], dtype=np.int64)
        self.rhymes = np.array([UNKNOWN] * n_special + [int(r) for r in rhymes], dtype=np.int64)
        self.joiner = joiner
        self.num_rhyme_classes = num_rhyme_classes
        self.first_content_id = n_special
        self.emittable_ids = np.array([EOS_ID] + list(range(n_special, len(self.tokens))), dtype=np.int64)

    @classmethod
    def from_profile(cls, content: Iterable[str], profile: LanguageProfile) -> "Vocabulary":
        content = sorted(set(content))
        return cls(
            content,
            [_token_syllables(t, profile) for t in content],
            [classify_rhyme(t, profile) for t in content],
            joiner=profile.joiner,
            num_rhyme_classes=profile.num_classes,
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.to_dict() == other.to_dict()

    @property
    def content_size(self) -> int:
        return len(self.tokens) - self.first_content_id

    def is_special(self, token_id: int) -> bool:
        return token_id < self.first_content_id

    def encode(self, tokens: Iterable[str]) -> tuple:
        try:
            return tuple(self.index[t] for t in tokens)
        except KeyError as exc:
            raise ValueError(f"token {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids: Iterable[int]) -> tuple:
        return tuple(self.tokens[i] for i in ids)

    def to_dict(self) -> dict:
        start = self.first_content_id
        return {
            "content": list(self.tokens[start:]),
            "syllables": self.syllables[start:].tolist(),
            "rhymes": self.rhymes[start:].tolist(),
            "joiner": self.joiner,
            "num_rhyme_classes": self.num_rhyme_classes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(d["content"], d["syllables"], d["rhymes"], d["joiner"], d["num_rhyme_classes"])


class SequenceModel(Protocol):
    vocabulary: Vocabulary
    supports_placements: frozenset

    def next_distribution(
        self,
        source: Sequence[str],
        directive: PromptDirective,
        prefix: Sequence[int],
        direction: Direction,
    ) -> np.ndarray:
        """Probability of each vocabulary id as the next generated token.

        ``prefix`` holds the ids generated so far, in generation order. The
        result is non-negative and sums to 1.
        """
        ...


def _check_placement(model, directive: PromptDirective) -> None:
    if directive.placement not in model.supports_placements:
        raise UnsupportedPlacement(f"{type(model).__name__} does not support {directive.placement.value}")


class UniformModel:
    """Uniform over EOS and every content token."""

    def __init__(self, vocabulary: Vocabulary, placements: Iterable[Placement] = tuple(Placement)):
        self.vocabulary = vocabulary
        self.supports_placements = frozenset(placements)

    def next_distribution(self, source, directive, prefix, direction):
        _check_placement(self, directive)
        probs = np.zeros(len(self.vocabulary))
        ids = self.vocabulary.emittable_ids
        probs[ids] = 1.0 / len(ids)
        return probs


# ---------------------------------------------------------------------------
# n-gram model

PROMPT_VIEWS = ("aligned", "full", "none")

# sentinels inside context keys; token ids are never negative
_NONE, _START, _END, _END_SLOT, _OVER, _FIRST, _LAST, _BOTH = -1, -2, -3, -4, -5, -6, -7, -8

_TOKEN_ID = {t: i for i, t in enumerate(SPECIAL_TOKENS)}


def source_bucket(source: Sequence[str], buckets: int) -> int:
    if buckets <= 1:
        return 0
    return zlib.crc32("\x1f".join(sorted(set(source))).encode("utf-8")) % buckets


def _aligned_view(c: ConstraintSet, used: int) -> tuple[tuple, tuple]:
    """Prompt features for the next syllable slot, in generation coordinates.

    Returns (view, coarse view). The coarse view drops the rhyme feature.
    """
    remaining = c.length - used
    if remaining <= 0:
        view = (_END_SLOT if remaining == 0 else _OVER, _NONE, _NONE, _NONE)
        return view, view
    slot = used + 1
    if c.length == 1:
        edge = _BOTH
    elif slot == 1:
        edge = _FIRST
    elif slot == c.length:
        edge = _LAST
    else:
        edge = _NONE
    rhy = _TOKEN_ID[RHY_TOKENS[c.rhyme]] if edge != _NONE else _NONE
    before = _START if slot == 1 else _TOKEN_ID[BDR_TOKENS[c.boundary[slot - 2]]]
    after = _END if slot == c.length else _TOKEN_ID[BDR_TOKENS[c.boundary[slot - 1]]]
    return (rhy, edge, before, after), (_NONE, _NONE, before, after)


@lru_cache(maxsize=4096)
def _full_view(c: ConstraintSet) -> tuple:
    return tuple(_TOKEN_ID[t] for t in render_prompt(c, Placement.DECODER_PREFIX).prompt.tokens)


class NGramToyModel:
    """Additively smoothed n-gram model over target tokens, conditioned on the
    prompt and on a hashed bag of source tokens.

    A context key combines the last ``order - 1`` generated tokens, a view of
    the prompt and the source bucket. Probabilities come from the most
    specific key seen in training, falling back through progressively coarser
    keys (drop source, drop rhyme feature, shorten history, drop the
    prompt altogether)::

        p(t | key) = (count(key, t) + alpha) / (count(key) + alpha * |emittable|)

    Prompt views:

    ``aligned``
        rhyme token at the first and last syllable slot, and the boundary
        tokens on either side of the slot being filled.
    ``full``
        the whole rendered prompt.
    ``none``
        prompt ignored (an unconstrained model).

    Prompts are read in generation order, so a reverse model sees the
    boundary vector mirrored.
    """

    supports_placements = frozenset({Placement.ENCODER_PREFIX, Placement.DECODER_PREFIX})

    def __init__(
        self,
        vocabulary: Vocabulary,
        order: int = 2,
        alpha: float = 0.1,
        direction: Direction = Direction.NORMAL,
        prompt_view: str = "aligned",
        source_buckets: int = 1,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not alpha > 0 or not math.isfinite(alpha):
            raise ValueError("alpha must be a positive finite number")
        if prompt_view not in PROMPT_VIEWS:
            raise ValueError(f"prompt_view must be one of {PROMPT_VIEWS}")
        if source_buckets < 1:
            raise ValueError("source_buckets must be >= 1")
        self.vocabulary = vocabulary
        self.order = order
        self.alpha = float(alpha)
        self.direction = direction
        self.prompt_view = prompt_view
        self.source_buckets = source_buckets
        self.counts: dict[tuple, dict[int, int]] = defaultdict(dict)
        self.totals: dict[tuple, int] = defaultdict(int)

    # -- featurization ---------------------------------------------------

    def context_keys(self, bucket: int, constraints: ConstraintSet, prefix: Sequence[int]) -> list[tuple]:
        """Backoff chain of context keys, most specific first.

        ``constraints`` must already be in generation orientation.
        """
        if self.prompt_view == "aligned":
            used = int(self.vocabulary.syllables[list(prefix)].sum()) if len(prefix) else 0
            view, coarse = _aligned_view(constraints, used)
        elif self.prompt_view == "full":
            view, coarse = _full_view(constraints), ()
        else:
            view, coarse = (), ()
        n = self.order - 1
        tail = tuple(prefix[len(prefix) - n :]) if n and len(prefix) else ()
        tail = (BOS_ID,) * (n - len(tail)) + tail
        keys = [
            (0,) + tail + view + (bucket,),
            (1,) + tail + view,
            (2,) + tail + coarse,
        ]
        for k in range(n - 1, -1, -1):
            keys.append((len(keys),) + tail[n - k :] + coarse)
        if n and coarse:
            keys.append((len(keys),) + tail)
        keys.append((len(keys),))
        return keys

    def _oriented(self, constraints: ConstraintSet, direction: Direction) -> ConstraintSet:
        return constraints.mirrored() if direction is Direction.REVERSE else constraints

    # -- training --------------------------------------------------------

    def observe(self, source: Sequence[str], target_ids: Sequence[int], constraints: ConstraintSet) -> None:
        """Count one example; ``target_ids`` already in generation order."""
        bucket = source_bucket(source, self.source_buckets)
        oriented = self._oriented(constraints, self.direction)
        seq = list(target_ids) + [EOS_ID]
        for t, tok in enumerate(seq):
            for key in self.context_keys(bucket, oriented, seq[:t]):
                row = self.counts[key]
                row[tok] = row.get(tok, 0) + 1
                self.totals[key] += 1

    # -- inference -------------------------------------------------------

    def next_distribution(self, source, directive, prefix, direction):
        _check_placement(self, directive)
        if direction is not self.direction:
            raise DirectionMismatch(f"model trained for {self.direction.value} decoding")
        constraints = _parse_cached(directive.prompt.tokens)
        bucket = source_bucket(source, self.source_buckets)
        keys = self.context_keys(bucket, self._oriented(constraints, direction), list(prefix))
        return self.distribution_for_keys(keys)

    def distribution_for_keys(self, keys: Sequence[tuple]) -> np.ndarray:
        emit = self.vocabulary.emittable_ids
        probs = np.zeros(len(self.vocabulary))
        for key in keys:
            total = self.totals.get(key, 0)
            if total:
                probs[emit] = self.alpha
                for tok, cnt in self.counts[key].items():
                    probs[tok] += cnt
                return probs / (total + self.alpha * len(emit))
        probs[emit] = 1.0 / len(emit)
        return probs

    # -- persistence -----------------------------------------------------

    def config(self) -> dict:
        return {
            "order": self.order,
            "alpha": self.alpha,
            "direction": self.direction.value,
            "prompt_view": self.prompt_view,
            "source_buckets": self.source_buckets,
        }

    def count_table(self) -> list:
        """Counts as a sorted, JSON-ready list."""
        return [[list(key), sorted(row.items())] for key, row in sorted(self.counts.items())]


@lru_cache(maxsize=4096)
def _parse_cached(tokens: tuple) -> ConstraintSet:
    return parse_prompt(tokens)


def train_toy_model(
    corpus: Iterable[tuple[Sequence[str], Sequence[str], ConstraintSet]],
    *,
    vocabulary: Optional[Vocabulary] = None,
    profile: Optional[LanguageProfile] = None,
    order: int = 2,
    alpha: float = 0.1,
    direction: Direction = Direction.NORMAL,
    prompt_view: str = "aligned",
    source_buckets: int = 1,
    targets_reversed: bool = False,
) -> NGramToyModel:
    """Train on ``(source tokens, target tokens, constraints)`` triples.

    Targets are given left to right; with ``direction=REVERSE`` they are
    reversed before counting unless ``targets_reversed`` says that already
    happened. Without a ``vocabulary`` one is built from the targets using
    ``profile``.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("no training examples")
    if vocabulary is None:
        if profile is None:
            raise ValueError("need a vocabulary or a profile to build one")
        vocabulary = Vocabulary.from_profile((t for _, tgt, _ in corpus for t in tgt), profile)
    model = NGramToyModel(vocabulary, order, alpha, direction, prompt_view, source_buckets)
    for source, target, constraints in corpus:
        ids = vocabulary.encode(target)
        if direction is Direction.REVERSE and not targets_reversed:
            ids = ids[::-1]
        model.observe(source, ids, constraints)
    return model


MAGIC = "SINGABLE-NGRAM"
FORMAT_VERSION = 1


def dumps_model(model: NGramToyModel) -> bytes:
    body = json.dumps(
        {"config": model.config(), "vocabulary": model.vocabulary.to_dict(), "counts": model.count_table()},
        ensure_ascii=False,
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    header = f"{MAGIC} {FORMAT_VERSION} sha256={hashlib.sha256(body).hexdigest()}\n".encode("ascii")
    return header + body + b"\n"


def loads_model(data: bytes) -> NGramToyModel:
    head, sep, body = data.partition(b"\n")
    parts = head.decode("ascii", errors="replace").split(" ")
    if not sep or len(parts) != 3 or parts[0] != MAGIC or not parts[2].startswith("sha256="):
        raise CorruptFile("not a model file (bad header)")
    if parts[1] != str(FORMAT_VERSION):
        raise VersionMismatch(f"model file version {parts[1]!r}, expected {FORMAT_VERSION}")
    body = body[:-1] if body.endswith(b"\n") else body
    if hashlib.sha256(body).hexdigest() != parts[2][len("sha256="):]:
        raise CorruptFile("checksum mismatch (truncated or edited file)")
    try:
        doc = json.loads(body.decode("utf-8"))
        cfg = doc["config"]
        model = NGramToyModel(
            Vocabulary.from_dict(doc["vocabulary"]),
            order=cfg["order"],
            alpha=cfg["alpha"],
            direction=Direction(cfg["direction"]),
            prompt_view=cfg["prompt_view"],
            source_buckets=cfg["source_buckets"],
        )
        for key, row in doc["counts"]:
            key = tuple(key)
            model.counts[key] = {int(t): int(c) for t, c in row}
            model.totals[key] = sum(model.counts[key].values())
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"malformed model body: {exc}") from exc
    return model


def save_model(model: NGramToyModel, path: Union[str, Path]) -> None:
    Path(path).write_bytes(dumps_model(model))


def load_model(path: Union[str, Path]) -> NGramToyModel:
    return loads_model(Path(path).read_bytes())
