"""Corpus cleaning, training-example generation and denoising corruption."""

from __future__ import annotations

import json
import shlex
import subprocess
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import EmptyInput, ExternalCommandFailed, MalformedDocument, TooLong, UnclassifiableRhyme, UnpronounceableToken
from .model import MASK, Direction
from .phonology import LanguageProfile, count_syllables, normalize, tokenize
from .prompts import (
    ConstraintSet,
    Placement,
    PromptDirective,
    constraints_from_target,
    format_constraint_line,
    nullify_rhyme,
    parse_constraint_line,
    render_prompt,
)

MAX_LINE_CHARS = 20

# skip reasons counted by make_training_set
SKIPPABLE = (TooLong, UnclassifiableRhyme, UnpronounceableToken, EmptyInput)


class ParallelPair(NamedTuple):
    source: str
    target: str
    synthetic: bool = False  # source produced by back-translation


SYNTHETIC_TAG = "bt"


def read_pairs(path: Union[str, Path]) -> list[ParallelPair]:
    """Tab-separated ``source<TAB>target`` lines; an optional third column
    ``bt`` marks a back-translated source."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3) or (len(fields) == 3 and fields[2] != SYNTHETIC_TAG):
                raise MalformedDocument(f"{path}:{lineno}: expected source<TAB>target[<TAB>{SYNTHETIC_TAG}]")
            pairs.append(ParallelPair(fields[0], fields[1], len(fields) == 3))
    return pairs


def write_pairs(pairs: Iterable[ParallelPair], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_pairs(pairs))


def format_pairs(pairs: Iterable[ParallelPair]) -> str:
    return "".join(f"{p.source}\t{p.target}" + (f"\t{SYNTHETIC_TAG}" if p.synthetic else "") + "\n" for p in pairs)


def normalize_line(line: str, profile: LanguageProfile) -> str:
    text = normalize(line, profile)
    return text.replace(" ", "") if profile.is_character_based else text


def normalize_corpus(
    lines: Iterable[str], profile: LanguageProfile, max_chars: int = MAX_LINE_CHARS
) -> list[str]:
    """Normalize, drop empty and over-long lines, then remove exact duplicates
    keeping first occurrences in order."""
    seen, out = set(), []
    for line in lines:
        text = normalize_line(line, profile)
        if not text or len(text) > max_chars or text in seen:
            continue
        seen.add(text)
        out.append(text)
    return out


def normalize_pairs(
    pairs: Iterable[Sequence[str]],
    source_profile: LanguageProfile,
    target_profile: LanguageProfile,
    max_chars: int = MAX_LINE_CHARS,
) -> list[ParallelPair]:
    """Pair version of :func:`normalize_corpus`; the length limit applies to
    the target side."""
    seen, out = set(), []
    for pair in pairs:
        pair = ParallelPair(*pair)
        src = normalize_line(pair.source, source_profile)
        tgt = normalize_line(pair.target, target_profile)
        if not src or not tgt or len(tgt) > max_chars or (src, tgt) in seen:
            continue
        seen.add((src, tgt))
        out.append(ParallelPair(src, tgt, pair.synthetic))
    return out


# ---------------------------------------------------------------------------
# training examples


@dataclass(frozen=True)
class TrainingExample:
    """``target`` is in generation order: reversed for reverse-direction
    training. ``constraints`` always describe the sentence read left to right."""

    source: tuple
    target: tuple
    constraints: ConstraintSet
    prompt: PromptDirective
    placement: Placement
    direction: Direction
    synthetic: bool = False

    @property
    def forward_target(self) -> tuple:
        return self.target[::-1] if self.direction is Direction.REVERSE else self.target

    def to_record(self) -> str:
        return json.dumps(
            {
                "source": list(self.source),
                "target": list(self.target),
                "constraints": format_constraint_line(self.constraints),
                "prompt": str(self.prompt.prompt),
                "placement": self.placement.value,
                "direction": self.direction.value,
                "synthetic": self.synthetic,
            },
            ensure_ascii=False,
            sort_keys=True,
        )

    @classmethod
    def from_record(cls, line: str) -> "TrainingExample":
        doc = json.loads(line)
        constraints = parse_constraint_line(doc["constraints"])
        placement = Placement(doc["placement"])
        return cls(
            tuple(doc["source"]),
            tuple(doc["target"]),
            constraints,
            render_prompt(constraints, placement),
            placement,
            Direction(doc["direction"]),
            bool(doc.get("synthetic", False)),
        )


def make_training_set(
    pairs: Iterable[Sequence],
    profile: LanguageProfile,
    placement: Placement,
    direction: Direction,
    rhy0_rate: float,
    rng: np.random.Generator,
    *,
    source_profile: Optional[LanguageProfile] = None,
    stats: Optional[Counter] = None,
) -> Iterator[TrainingExample]:
    """Derive constraints from each target, null the rhyme at ``rhy0_rate``,
    render the prompt and reverse the target for reverse-direction training.

    Pairs whose target is too long, unpronounceable or has no rhyme class are
    skipped; ``stats`` (if given) counts them by error name plus ``"kept"``.
    """
    source_profile = source_profile or profile
    for pair in pairs:
        pair = ParallelPair(*pair)
        try:
            constraints = constraints_from_target(pair.target, profile, rng)
            target = tuple(tokenize(pair.target, profile))
            source = tuple(tokenize(pair.source, source_profile))
        except SKIPPABLE as exc:
            if stats is not None:
                stats[type(exc).__name__] += 1
            continue
        (constraints,) = nullify_rhyme([constraints], rhy0_rate, rng)
        if direction is Direction.REVERSE:
            target = target[::-1]
        if stats is not None:
            stats["kept"] += 1
        yield TrainingExample(
            source, target, constraints, render_prompt(constraints, placement), placement, direction, pair.synthetic
        )


def reverse_example(target: Sequence[str], constraints: ConstraintSet) -> tuple[tuple, ConstraintSet]:
    """The same sentence read right to left, with its constraints mirrored."""
    return tuple(target)[::-1], constraints.mirrored()


def target_length(example: TrainingExample, profile: LanguageProfile) -> int:
    return count_syllables(profile.joiner.join(example.forward_target), profile)


# ---------------------------------------------------------------------------
# denoising


def span_rate(length: int) -> float:
    """Poisson mean of the masked span for a line of ``length`` units."""
    if length <= 1:
        return 0.0
    return 1.0 if length <= 3 else 3.0


def corrupt_for_denoising(
    line: str,
    rng: np.random.Generator,
    profile: Optional[LanguageProfile] = None,
    mask: str = MASK,
) -> tuple[str, str]:
    """Replace one random span with a single mask token.

    Units are characters, or words for profiles that are not
    character-based. Lines of one unit are returned unchanged.
    """
    by_word = profile is not None and not profile.is_character_based
    units = line.split() if by_word else list(line)
    n = len(units)
    if n <= 1:
        return line, line
    span = min(int(rng.poisson(span_rate(n))), n)
    start = int(rng.integers(0, n - span + 1))
    corrupted = units[:start] + [mask] + units[start + span :]
    return (" " if by_word else "").join(corrupted), line


# ---------------------------------------------------------------------------
# back-translation hook


def backtranslate(
    lines: Sequence[str],
    command: Union[str, Sequence[str]],
    batch_size: int = 64,
    timeout: Optional[float] = None,
) -> list[ParallelPair]:
    """Pair each target line with a source produced by an external command.

    The command reads one line per input line on stdin and must print the
    same number of lines on stdout.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    out: list[ParallelPair] = []
    for b, start in enumerate(range(0, len(lines), batch_size)):
        batch = lines[start : start + batch_size]
        try:
            proc = subprocess.run(
                argv,
                input="".join(line + "\n" for line in batch),
                capture_output=True,
                text=True,
                encoding="utf-8",
                timeout=timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExternalCommandFailed(b, str(exc)) from exc
        if proc.returncode != 0:
            raise ExternalCommandFailed(b, f"exit status {proc.returncode}: {proc.stderr.strip()[:200]}")
        produced = proc.stdout.splitlines()
        if len(produced) != len(batch):
            raise ExternalCommandFailed(b, f"expected {len(batch)} lines, got {len(produced)}")
        out.extend(ParallelPair(src, tgt, True) for src, tgt in zip(produced, batch))
    return out
