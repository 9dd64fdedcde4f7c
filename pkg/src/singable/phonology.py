"""Syllable counting, word segmentation and end-rhyme classification.

All behaviour is driven by a :class:`LanguageProfile`, loaded from a JSON
profile file. Two profiles ship with the package: ``mandarin`` (one syllable
per Han character, 14-class pinyin rhyme scheme, lexicon-based segmentation)
and ``english`` (dictionary-plus-vowel-group syllable counting, no rhyme
scheme).
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np

from .errors import EmptyInput, NoClassifiableLines, ProfileError, UnpronounceableToken

PROFILE_FORMAT = "singable-profile"
PROFILE_VERSION = 1

NULL_RHYME = 0
UNKNOWN = -1

SYLLABLE_RULES = ("han", "char", "english")
FINALS_RULES = ("pinyin", "identity", "none")

_HAN_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
    (0x30000, 0x323AF),
)


def is_han(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _HAN_RANGES)


def english_vowel_groups(word: str) -> int:
    """Fallback syllable estimate: vowel groups, minus a silent final ``e``."""
    w = word.lower()
    groups = len(re.findall(r"[aeiouy]+", w))
    if groups > 1 and w.endswith("e") and not w.endswith(("le", "ee", "ye")):
        groups -= 1
    return max(groups, 1)


_INITIALS = ("zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j", "q", "x", "r", "z", "c", "s")
_APICAL = frozenset({"zhi", "chi", "shi", "ri", "zi", "ci", "si"})
_SYLLABIC = {"m": "m", "n": "n", "ng": "ng", "hm": "m", "hng": "ng", "ê": "ê", "er": "er"}


def pinyin_final(syllable: str) -> Optional[str]:
    """Return the final of a toneless pinyin syllable, ``ü`` written as ``v``.

    y/w spellings are expanded (``you`` -> ``iou``, ``wei`` -> ``uei``) and
    ``u`` after j/q/x becomes ``v``. Apical syllables (zhi, ci, ...) are
    returned whole.
    """
    s = syllable.strip().lower().replace("ü", "v").replace("u:", "v").rstrip("012345")
    if not s:
        return None
    if s in _APICAL:
        return s
    if s in _SYLLABIC:
        return _SYLLABIC[s]
    if s[0] == "y":
        rest = s[1:]
        if rest.startswith("u"):
            return "v" + rest[1:]
        if rest.startswith(("i", "v")):
            return rest
        return "i" + rest
    if s[0] == "w":
        rest = s[1:]
        return rest if rest.startswith("u") else "u" + rest
    for ini in _INITIALS:
        if s.startswith(ini) and len(s) > len(ini):
            rest = s[len(ini):]
            if ini in ("j", "q", "x") and rest.startswith("u"):
                rest = "v" + rest[1:]
            return rest
    return s


@dataclass(frozen=True, eq=False)
class LanguageProfile:
    id: str
    syllable_rule: str
    finals: str
    rhyme_table: Mapping[str, int]
    num_classes: int
    pronunciations: Mapping[str, str] = field(default_factory=dict)
    normalization: Mapping[str, str] = field(default_factory=dict)
    lexicon: frozenset = frozenset()
    syllable_exceptions: Mapping[str, int] = field(default_factory=dict)
    # (normalized text, char index) -> syllable; None falls back to the table.
    pronunciation_hook: Optional[Callable[[str, int], Optional[str]]] = None

    def __post_init__(self):
        if self.syllable_rule not in SYLLABLE_RULES:
            raise ProfileError(f"unknown syllable_rule {self.syllable_rule!r}")
        if self.finals not in FINALS_RULES:
            raise ProfileError(f"unknown finals rule {self.finals!r}")
        object.__setattr__(self, "rhyme_table", MappingProxyType(dict(self.rhyme_table)))
        object.__setattr__(self, "pronunciations", MappingProxyType(dict(self.pronunciations)))
        object.__setattr__(self, "normalization", MappingProxyType(dict(self.normalization)))
        object.__setattr__(self, "syllable_exceptions", MappingProxyType(dict(self.syllable_exceptions)))
        object.__setattr__(self, "lexicon", frozenset(self.lexicon))
        object.__setattr__(self, "_max_word_len", max((len(w) for w in self.lexicon), default=1))
        object.__setattr__(self, "_t2s", str.maketrans(dict(self.normalization)))

    @property
    def is_character_based(self) -> bool:
        return self.syllable_rule in ("han", "char")

    @property
    def joiner(self) -> str:
        """String placed between tokens when detokenizing."""
        return "" if self.is_character_based else " "

    def with_lexicon(self, words: Iterable[str]) -> "LanguageProfile":
        return _replace(self, lexicon=frozenset(words))


def _replace(profile: LanguageProfile, **changes) -> LanguageProfile:
    kwargs = {
        "id": profile.id,
        "syllable_rule": profile.syllable_rule,
        "finals": profile.finals,
        "rhyme_table": profile.rhyme_table,
        "num_classes": profile.num_classes,
        "pronunciations": profile.pronunciations,
        "normalization": profile.normalization,
        "lexicon": profile.lexicon,
        "syllable_exceptions": profile.syllable_exceptions,
        "pronunciation_hook": profile.pronunciation_hook,
    }
    kwargs.update(changes)
    return LanguageProfile(**kwargs)


def build_rhyme_table(classes: Iterable[Iterable[str]]) -> dict[str, int]:
    """Map each final to its 1-based class, rejecting overlapping classes."""
    table: dict[str, int] = {}
    for idx, finals in enumerate(classes, start=1):
        for final in finals:
            if final in table:
                raise ProfileError(f"final {final!r} listed in classes {table[final]} and {idx}")
            table[final] = idx
    return table


def profile_from_dict(doc: Mapping, base_dir: Optional[Path] = None) -> LanguageProfile:
    if doc.get("format") != PROFILE_FORMAT:
        raise ProfileError("not a singable profile document")
    if doc.get("version") != PROFILE_VERSION:
        raise ProfileError(f"unsupported profile version {doc.get('version')!r}")

    if "extends" in doc:
        parent_ref = doc["extends"]
        if base_dir is not None and (base_dir / parent_ref).exists():
            parent_ref = base_dir / parent_ref
        merged = dict(_read_profile_doc(parent_ref)[0])
        merged.update({k: v for k, v in doc.items() if k != "extends"})
        doc = merged

    try:
        classes = doc.get("rhyme_classes", [])
        pron = {}
        for syllable, chars in doc.get("pronunciations", {}).items():
            for ch in chars:
                pron.setdefault(ch, syllable)
        norm = doc.get("normalization", {"from": "", "to": ""})
        if len(norm["from"]) != len(norm["to"]):
            raise ProfileError("normalization map sides differ in length")
        lexicon = doc.get("lexicon", "")
        if isinstance(lexicon, str):
            lexicon = lexicon.split()
        exceptions = {}
        for count, words in doc.get("syllable_exceptions", {}).items():
            for w in words.split():
                exceptions[w] = int(count)
        return LanguageProfile(
            id=doc["id"],
            syllable_rule=doc["syllable_rule"],
            finals=doc.get("finals", "none"),
            rhyme_table=build_rhyme_table(classes),
            num_classes=len(classes),
            pronunciations=pron,
            normalization=dict(zip(norm["from"], norm["to"])),
            lexicon=frozenset(lexicon),
            syllable_exceptions=exceptions,
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise ProfileError(f"malformed profile: {exc}") from exc


def _read_profile_doc(ref: Union[str, Path]):
    if isinstance(ref, str) and ref in builtin_profiles():
        text = resources.files("singable.data").joinpath(f"{ref}.json").read_text(encoding="utf-8")
        return json.loads(text), None
    path = Path(ref)
    try:
        return json.loads(path.read_text(encoding="utf-8")), path.parent
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{path}: {exc}") from exc


def builtin_profiles() -> tuple[str, ...]:
    return ("mandarin", "english", "oracle")


_CACHE: dict = {}


def load_profile(ref: Union[str, Path]) -> LanguageProfile:
    """Load a profile by built-in name or file path. Built-ins are cached."""
    key = str(ref)
    if key in _CACHE:
        return _CACHE[key]
    doc, base = _read_profile_doc(ref)
    profile = profile_from_dict(doc, base)
    if isinstance(ref, str) and ref in builtin_profiles():
        _CACHE[key] = profile
    return profile


# ---------------------------------------------------------------------------
# text operations


def normalize(text: str, profile: LanguageProfile) -> str:
    """NFKC, traditional->simplified mapping, drop punctuation/symbols/controls,
    collapse whitespace."""
    text = unicodedata.normalize("NFKC", text).translate(profile._t2s)
    kept = []
    for ch in text:
        cat = unicodedata.category(ch)
        if ch.isspace() or cat.startswith("Z"):
            kept.append(" ")
        elif cat[0] in "PSC":
            continue
        else:
            kept.append(ch)
    return " ".join("".join(kept).split())


def _token_syllables(token: str, profile: LanguageProfile) -> int:
    if profile.syllable_rule == "han":
        bad = [c for c in token if not is_han(c)]
        if bad:
            raise UnpronounceableToken(f"{token!r}: no syllabification for {''.join(bad)!r}")
        return len(token)
    if profile.syllable_rule == "char":
        return len(token)
    word = token.lower()
    if not any(c.isalpha() for c in word):
        raise UnpronounceableToken(f"{token!r} has no letters")
    return profile.syllable_exceptions.get(word, english_vowel_groups(word))


def tokenize(text: str, profile: LanguageProfile) -> list[str]:
    """Model-level tokens: characters for character-based profiles, lowercased
    words otherwise."""
    norm = normalize(text, profile)
    if profile.is_character_based:
        return [c for c in norm if not c.isspace()]
    return norm.lower().split()


def count_syllables(text: str, profile: LanguageProfile) -> int:
    norm = normalize(text, profile)
    if not norm:
        raise EmptyInput("nothing to count after normalization")
    if profile.is_character_based:
        return _token_syllables(norm.replace(" ", ""), profile)
    return sum(_token_syllables(w, profile) for w in norm.split())


@dataclass(frozen=True)
class SyllabifiedSentence:
    tokens: tuple
    syllables_per_token: tuple
    total_syllables: int
    word_boundary_positions: frozenset

    @classmethod
    def from_tokens(cls, tokens, syllables) -> "SyllabifiedSentence":
        tokens, syllables = tuple(tokens), tuple(syllables)
        bounds, acc = set(), 0
        for n in syllables[:-1]:
            acc += n
            bounds.add(acc)
        return cls(tokens, syllables, sum(syllables), frozenset(bounds))


def _max_forward_match(chunk: str, profile: LanguageProfile) -> list[str]:
    out, i, n = [], 0, len(chunk)
    while i < n:
        step = 1
        for k in range(min(profile._max_word_len, n - i), 1, -1):
            if chunk[i : i + k] in profile.lexicon:
                step = k
                break
        out.append(chunk[i : i + step])
        i += step
    return out


def segment_words(text: str, profile: LanguageProfile) -> SyllabifiedSentence:
    """Split into words and derive interior word-boundary positions.

    Whitespace in the input is always a word break. Character-based profiles
    segment each whitespace-delimited chunk by maximum forward matching
    against the profile lexicon.
    """
    norm = normalize(text, profile)
    if not norm:
        raise EmptyInput("nothing to segment after normalization")
    if profile.is_character_based:
        tokens = [w for chunk in norm.split() for w in _max_forward_match(chunk, profile)]
    else:
        tokens = norm.lower().split()
    return SyllabifiedSentence.from_tokens(tokens, [_token_syllables(t, profile) for t in tokens])


def final_syllable(text: str, profile: LanguageProfile) -> Optional[str]:
    norm = normalize(text, profile)
    if not norm:
        raise EmptyInput("empty word")
    if not profile.is_character_based:
        return norm.split()[-1].lower()
    compact = norm.replace(" ", "")
    idx = len(compact) - 1
    if profile.pronunciation_hook is not None:
        hooked = profile.pronunciation_hook(compact, idx)
        if hooked is not None:
            return hooked
    ch = compact[idx]
    if profile.syllable_rule == "char" and not profile.pronunciations:
        return ch
    return profile.pronunciations.get(ch)


def classify_rhyme(word: str, profile: LanguageProfile) -> int:
    """Rhyme class of the final syllable of ``word``; ``UNKNOWN`` if the final
    is not in the profile's table. Never returns ``NULL_RHYME``."""
    syllable = final_syllable(word, profile)
    if syllable is None or profile.finals == "none":
        return UNKNOWN
    final = pinyin_final(syllable) if profile.finals == "pinyin" else syllable
    return profile.rhyme_table.get(final, UNKNOWN)


@dataclass(frozen=True, eq=False)
class RhymeDistribution:
    """Probabilities for rhyme classes 1..u (``probs[k-1]`` is class k), plus
    mass that belongs to no class."""

    probs: np.ndarray
    residual: float = 0.0

    @property
    def num_classes(self) -> int:
        return len(self.probs)

    def prob(self, rhyme: int) -> float:
        return float(self.probs[rhyme - 1])

    def sample(self, rng: np.random.Generator) -> int:
        p = np.asarray(self.probs, dtype=float)
        return int(rng.choice(len(p), p=p / p.sum())) + 1

    def ranked(self) -> list[tuple[int, float]]:
        order = sorted(range(len(self.probs)), key=lambda i: (-self.probs[i], i))
        return [(i + 1, float(self.probs[i])) for i in order]


def rhyme_prior(lines: Iterable[str], profile: LanguageProfile) -> RhymeDistribution:
    """Empirical end-rhyme distribution of a corpus; unclassifiable lines are
    skipped."""
    counts: Counter = Counter()
    for line in lines:
        try:
            cls = classify_rhyme(line, profile)
        except EmptyInput:
            continue
        if cls != UNKNOWN:
            counts[cls] += 1
    total = sum(counts.values())
    if total == 0:
        raise NoClassifiableLines("no line ends in a classifiable rhyme")
    probs = np.array([counts[k] / total for k in range(1, profile.num_classes + 1)])
    return RhymeDistribution(probs)
