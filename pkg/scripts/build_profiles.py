"""Regenerate the bundled language profiles under src/singable/data/.

Build-time only. Needs pypinyin, jieba, opencc-python-reimplemented and
cmudict, none of which are runtime dependencies of the package:

    pip install pypinyin jieba opencc-python-reimplemented cmudict
    PYTHONPATH=src python scripts/build_profiles.py
"""

import json
import os
import re
import unicodedata
from collections import defaultdict
from pathlib import Path

import cmudict
import jieba
import opencc
from pypinyin import Style, pinyin

from singable.phonology import english_vowel_groups, is_han

DATA = Path(__file__).resolve().parents[1] / "src" / "singable" / "data"

# 14 classes, one list of pinyin finals per class. Apical -i syllables are
# listed whole because their written final "i" collides with class 12.
RHYME_CLASSES = [
    ["a", "ia", "ua"],
    ["o", "e", "uo", "io"],
    ["ie", "ve", "ê"],
    ["ai", "uai"],
    ["ei", "ui", "uei"],
    ["ao", "iao"],
    ["ou", "iu", "iou"],
    ["an", "ian", "uan", "van"],
    ["en", "in", "un", "uen", "vn", "n", "m"],
    ["ang", "iang", "uang"],
    ["eng", "ing", "ong", "ueng", "iong", "ng"],
    ["i", "er", "v"],
    ["zhi", "chi", "shi", "zi", "ci", "si", "ri"],
    ["u"],
]

LEXICON_MIN_FREQ = 40
LEXICON_MAX_LEN = 4


def _syllable(ch):
    syl = pinyin(ch, style=Style.NORMAL, heteronym=False, errors="ignore")
    if not syl or not syl[0]:
        return None
    s = syl[0][0].replace("ü", "v")
    return s if re.fullmatch(r"[a-zê]+", s) else None


def han_pronunciations(t2s):
    """Basic-block characters plus every simplified form the t2s map can
    produce; a simplified form pypinyin does not know inherits the
    pronunciation of its traditional source."""
    pron = {}
    for cp in range(0x4E00, 0xA000):
        ch = chr(cp)
        if unicodedata.category(ch) == "Lo":
            s = _syllable(ch)
            if s:
                pron[ch] = s
    for trad, simp in zip(t2s["from"], t2s["to"]):
        if simp not in pron:
            s = _syllable(simp) or pron.get(trad) or _syllable(trad)
            if s:
                pron[simp] = s
    by_syllable = defaultdict(list)
    for ch, s in sorted(pron.items()):
        by_syllable[s].append(ch)
    return {k: "".join(v) for k, v in sorted(by_syllable.items())}


def t2s_map():
    path = Path(opencc.__file__).parent / "dictionary" / "TSCharacters.txt"
    src, dst = [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        trad, simp = line.split("\t")
        simp = simp.split()[0]
        if len(trad) == 1 and len(simp) == 1 and trad != simp:
            src.append(trad)
            dst.append(simp)
    return {"from": "".join(src), "to": "".join(dst)}


def mandarin_lexicon():
    path = Path(jieba.__file__).parent / "dict.txt"
    words = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        word, freq, _tag = line.split(" ")
        if (
            2 <= len(word) <= LEXICON_MAX_LEN
            and int(freq) >= LEXICON_MIN_FREQ
            and all(is_han(c) for c in word)
        ):
            words.add(word)
    return " ".join(sorted(words))


def english_exceptions():
    by_count = defaultdict(set)
    for word, prons in cmudict.dict().items():
        w = word.replace("'", "")
        if not re.fullmatch(r"[a-z]+", w):
            continue
        n = sum(1 for ph in prons[0] if ph[-1].isdigit())
        if n >= 1 and n != english_vowel_groups(w):
            by_count[n].add(w)
    return {str(k): " ".join(sorted(v)) for k, v in sorted(by_count.items())}


def write(name, doc):
    out = DATA / f"{name}.json"
    out.write_text(json.dumps(doc, ensure_ascii=False, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} ({os.path.getsize(out)} bytes)")


def main():
    t2s = t2s_map()
    write(
        "mandarin",
        {
            "format": "singable-profile",
            "version": 1,
            "id": "mandarin",
            "syllable_rule": "han",
            "finals": "pinyin",
            "rhyme_classes": RHYME_CLASSES,
            "pronunciations": han_pronunciations(t2s),
            "normalization": t2s,
            "lexicon": mandarin_lexicon(),
            "notes": "primary pronunciation per character (pypinyin); lexicon from jieba dict.txt; "
            "traditional-to-simplified map from OpenCC TSCharacters",
        },
    )
    write(
        "english",
        {
            "format": "singable-profile",
            "version": 1,
            "id": "english",
            "syllable_rule": "english",
            "finals": "none",
            "rhyme_classes": [],
            "syllable_exceptions": english_exceptions(),
            "notes": "entries are CMUdict syllable counts that differ from the vowel-group fallback",
        },
    )


if __name__ == "__main__":
    main()
