"""Bundled synthetic corpus for end-to-end checks of the control plumbing.

Targets are random sequences drawn from a closed set of Mandarin words whose
characters are all distinct, so segmentation under the ``oracle`` profile is
unambiguous and every end word has a known rhyme class. Sources are English
glosses. Regenerate the bundled files with ``python -m singable.synthetic``.
"""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import Iterable

import numpy as np

from .dataprep import ParallelPair, write_pairs

GLOSSES = {
    "花": "flower",
    "家": "home",
    "歌": "song",
    "火": "fire",
    "月": "moon",
    "海": "sea",
    "飞": "fly",
    "桥": "bridge",
    "走": "walk",
    "天": "sky",
    "心": "heart",
    "光": "light",
    "风": "wind",
    "雨": "rain",
    "诗": "poem",
    "路": "road",
    "大地": "earth",
    "温暖": "warm",
    "自由": "free",
    "快乐": "joy",
    "梦想": "dream",
    "美好": "beautiful",
    "青春": "youth",
    "希望": "hope",
    "世界": "world",
    "爱情": "love",
}
SINGLES = tuple(w for w in GLOSSES if len(w) == 1)
DOUBLES = tuple(w for w in GLOSSES if len(w) == 2)

MAX_SYLLABLES = 10
DOUBLE_RATE = 0.4

DATA_DIR = Path(__file__).parent / "data"
# name: (size, seed); later splits exclude the targets of earlier ones
SPLITS = {"oracle_train.tsv": (3000, 11), "oracle_heldout.tsv": (250, 12), "synthetic_200.tsv": (200, 13)}


def random_pair(rng: np.random.Generator, max_syllables: int = MAX_SYLLABLES) -> ParallelPair:
    remaining = int(rng.integers(1, max_syllables + 1))
    words = []
    while remaining:
        if remaining >= 2 and rng.random() < DOUBLE_RATE:
            word = DOUBLES[int(rng.integers(len(DOUBLES)))]
        else:
            word = SINGLES[int(rng.integers(len(SINGLES)))]
        words.append(word)
        remaining -= len(word)
    return ParallelPair(" ".join(GLOSSES[w] for w in words), "".join(words))


def generate(n: int, seed: int, exclude: Iterable[str] = ()) -> list[ParallelPair]:
    """``n`` pairs with distinct targets, none of them in ``exclude``."""
    rng = np.random.default_rng(seed)
    seen = set(exclude)
    out = []
    while len(out) < n:
        pair = random_pair(rng)
        if pair.target not in seen:
            seen.add(pair.target)
            out.append(pair)
    return out


def bundled(name: str) -> Path:
    return DATA_DIR / name


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description="regenerate the bundled synthetic corpora")
    parser.add_argument("--out-dir", type=Path, default=DATA_DIR)
    args = parser.parse_args(argv)
    taken: set = set()
    for name, (n, seed) in SPLITS.items():
        pairs = generate(n, seed, exclude=taken)
        taken.update(p.target for p in pairs)
        write_pairs(pairs, args.out_dir / name)


if __name__ == "__main__":
    main()
