"""``singable`` command-line tool.

Two chains mirror training and inference::

    singable prepare-data --input pairs.tsv --out train.jsonl
    singable train --data train.jsonl --out model.ngram
    singable translate --model model.ngram --input src.txt --constraints c.txt
    singable evaluate --hyp hyp.txt --ref ref.txt --constraints c.txt

Exit status is 0 on success, 2 for usage errors and 1 for operational
errors, reported on stderr as ``error: <ErrorName>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .dataprep import (
    ParallelPair,
    TrainingExample,
    backtranslate,
    corrupt_for_denoising,
    format_pairs,
    make_training_set,
    normalize_pairs,
    read_pairs,
)
from .decode import DecodeConfig, Mode, beam_search, profile_boundaries
from .errors import CorruptFile, EmptyCorpus, EmptySet, NoRequiredBoundaries, SingableError, UnsupportedPlacement
from .melody import parse_melodies, extract_constraints
from .metrics import EvalRecord, boundary_recall, corpus_bleu, corpus_ter, length_accuracy, rhyme_accuracy
from .model import Direction, load_model, save_model, train_toy_model, PROMPT_VIEWS
from .phonology import count_syllables, load_profile, tokenize
from .prompts import (
    DEFAULT_NULL_RATE,
    MAX_LENGTH,
    MAX_RHYME,
    ConstraintSet,
    Placement,
    format_constraint_line,
    parse_constraint_line,
)
from .ranking import rank_paragraph_rhymes

DEFAULT_SEED = 20230
U64 = 2**64


# ---------------------------------------------------------------------------
# I/O helpers


def _read_lines(path: str) -> list[str]:
    if path == "-":
        return sys.stdin.read().splitlines()
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _lines(items) -> str:
    return "".join(f"{x}\n" for x in items)


def _jsonl(docs) -> str:
    return "".join(json.dumps(d, ensure_ascii=False, sort_keys=True) + "\n" for d in docs)


def _read_constraints(path: str, expected: Optional[int] = None) -> list[ConstraintSet]:
    out = [parse_constraint_line(line) for line in _read_lines(path) if line.strip()]
    if expected is not None and len(out) != expected:
        raise CorruptFile(f"{path}: {len(out)} constraint lines for {expected} inputs")
    return out


def _rng(args) -> np.random.Generator:
    return np.random.default_rng(args.seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_prepare_data(args) -> None:
    profile, source_profile = load_profile(args.profile), load_profile(args.source_profile)
    if args.input:
        pairs = read_pairs(args.input)
    else:
        src, tgt = _read_lines(args.src), _read_lines(args.tgt)
        if len(src) != len(tgt):
            raise CorruptFile(f"{args.src} and {args.tgt} differ in line count")
        pairs = [ParallelPair(s, t) for s, t in zip(src, tgt)]
    if not args.no_normalize:
        pairs = normalize_pairs(pairs, source_profile, profile)
    stats: Counter = Counter()
    examples = list(
        make_training_set(
            pairs,
            profile,
            Placement(args.placement),
            Direction(args.direction),
            args.rhy0_rate,
            _rng(args),
            source_profile=source_profile,
            stats=stats,
        )
    )
    if not examples:
        raise EmptyCorpus("no usable pairs")
    _write(args.out, _lines(e.to_record() for e in examples))
    if args.constraints_out:
        _write(args.constraints_out, _lines(format_constraint_line(e.constraints) for e in examples))
    if args.sources_out:
        _write(args.sources_out, _lines(source_profile.joiner.join(e.source) for e in examples))
    if args.refs_out:
        _write(args.refs_out, _lines(profile.joiner.join(e.forward_target) for e in examples))
    print(json.dumps(dict(sorted(stats.items()))), file=sys.stderr)


def cmd_corrupt(args) -> None:
    profile = load_profile(args.profile)
    rng = _rng(args)
    pairs = [corrupt_for_denoising(line, rng, profile) for line in _read_lines(args.input) if line]
    if args.json:
        _write(args.out, _jsonl({"corrupted": c, "original": o} for c, o in pairs))
    else:
        _write(args.out, _lines(f"{c}\t{o}" for c, o in pairs))


def cmd_backtranslate(args) -> None:
    lines = [line for line in _read_lines(args.input) if line]
    pairs = backtranslate(lines, args.cmd, batch_size=args.batch_size, timeout=args.timeout)
    if args.json:
        _write(args.out, _jsonl(p._asdict() for p in pairs))
    else:
        _write(args.out, format_pairs(pairs))


def cmd_train(args) -> None:
    profile = load_profile(args.profile)
    try:
        examples = [TrainingExample.from_record(line) for line in _read_lines(args.data) if line.strip()]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptFile(f"{args.data}: {exc}") from exc
    if not examples:
        raise EmptyCorpus(f"{args.data} holds no examples")
    directions = {e.direction for e in examples}
    if len(directions) != 1:
        raise CorruptFile("training records mix decoding directions")
    bad = {e.placement for e in examples} - {Placement.ENCODER_PREFIX, Placement.DECODER_PREFIX}
    if bad:
        raise UnsupportedPlacement(f"the n-gram model cannot use {sorted(p.value for p in bad)}")
    model = train_toy_model(
        [(e.source, e.target, e.constraints) for e in examples],
        profile=profile,
        order=args.order,
        alpha=args.alpha,
        direction=directions.pop(),
        prompt_view=args.prompt_view,
        source_buckets=args.source_buckets,
        targets_reversed=True,
    )
    save_model(model, args.out)


def cmd_extract_boundaries(args) -> None:
    data = sys.stdin.buffer.read() if args.melody == "-" else Path(args.melody).read_bytes()
    lines = parse_melodies(data, peak_semitones=args.peak_semitones)
    found = [extract_constraints(m, Fraction(args.min_rest)) for m in lines]
    if args.json:
        _write(args.out, _jsonl({"length": c.length, "boundaries": sorted(c.positions)} for c in found))
    else:
        _write(args.out, _lines(format_constraint_line(c) for c in found))


def _source_constraints(sources, source_profile, rhyme: int) -> list[ConstraintSet]:
    """Length from the source line's syllable count; no boundary requirement."""
    out = []
    for s in sources:
        length = min(count_syllables(s, source_profile), MAX_LENGTH)
        out.append(ConstraintSet(length, rhyme, (0,) * length))
    return out


def _paragraph(args, model, source_profile):
    sources = [line for line in _read_lines(args.input) if line.strip()]
    if not sources:
        raise EmptyCorpus(f"{args.input} holds no lines")
    if args.constraints:
        constraints = _read_constraints(args.constraints, len(sources))
    else:
        constraints = _source_constraints(sources, source_profile, 0)
    return sources, constraints


def cmd_rank_rhymes(args) -> None:
    model = load_model(args.model)
    source_profile = load_profile(args.source_profile)
    sources, constraints = _paragraph(args, model, source_profile)
    dist = rank_paragraph_rhymes(
        model,
        [(tokenize(s, source_profile), c.length, c.boundary) for s, c in zip(sources, constraints)],
        Placement(args.placement),
    )
    ranked = dist.ranked()
    if args.json:
        _write(args.out, _jsonl({"rhyme": k, "score": p} for k, p in ranked))
    else:
        _write(args.out, _lines(f"{k}\t{p:.12f}" for k, p in ranked))


# translate workers share one model per process
_WORKER: dict = {}


def _init_worker(model_path, profile_ref, source_profile_ref, placement, config):
    _WORKER.update(
        model=load_model(model_path),
        profile=load_profile(profile_ref),
        source_profile=load_profile(source_profile_ref),
        placement=placement,
        config=config,
    )


def _translate_one(job):
    source, constraints = job
    w = _WORKER
    result = beam_search(
        w["model"],
        tokenize(source, w["source_profile"]),
        constraints,
        w["placement"],
        w["config"],
        profile_boundaries(w["profile"]),
    )
    return result.best_text, result.best.score, result.satisfied


def cmd_translate(args) -> None:
    model = load_model(args.model)
    profile, source_profile = load_profile(args.profile), load_profile(args.source_profile)
    placement = Placement(args.placement)
    sources, constraints = _paragraph(args, model, source_profile)
    if args.rhyme == "auto":
        dist = rank_paragraph_rhymes(
            model,
            [(tokenize(s, source_profile), c.length, c.boundary) for s, c in zip(sources, constraints)],
            placement,
        )
        rhyme = dist.ranked()[0][0]
        print(f"rhyme: {rhyme}", file=sys.stderr)
        constraints = [c.with_rhyme(rhyme) for c in constraints]
    elif args.rhyme is not None:
        constraints = [c.with_rhyme(int(args.rhyme)) for c in constraints]
    config = DecodeConfig(
        beam_size=args.beam_size,
        max_len=args.max_len,
        direction=model.direction,
        mode=Mode(args.mode),
        hard_length=args.hard_length,
        rhyme_bonus=args.rhyme_bonus,
        boundary_bonus=args.boundary_bonus,
    )
    jobs = list(zip(sources, constraints))
    init = (args.model, args.profile, args.source_profile, placement, config)
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs, initializer=_init_worker, initargs=init) as pool:
            results = list(pool.map(_translate_one, jobs, chunksize=8))
    else:
        _init_worker(*init)
        results = [_translate_one(j) for j in jobs]
    if args.json:
        docs = (
            {
                "source": s,
                "constraints": format_constraint_line(c),
                "hypothesis": text,
                "score": score,
                "satisfied": sat,
            }
            for (s, c), (text, score, sat) in zip(jobs, results)
        )
        _write(args.out, _jsonl(docs))
    else:
        _write(args.out, _lines(text for text, _, _ in results))


def _pct(value) -> Optional[float]:
    return None if value is None else round(float(value) * 100, 6)


def cmd_evaluate(args) -> None:
    profile = load_profile(args.profile)
    hyps = _read_lines(args.hyp)
    report: dict = {"n": len(hyps)}
    if args.constraints:
        cons = _read_constraints(args.constraints, len(hyps))
        records = [EvalRecord(h, None, c) for h, c in zip(hyps, cons)]
        report["LA"] = _pct(length_accuracy(records, profile))
        for key, metric in (("RA", rhyme_accuracy), ("BR", boundary_recall)):
            try:
                report[key] = _pct(metric(records, profile))
            except (EmptySet, NoRequiredBoundaries):
                report[key] = None
    if args.ref:
        refs = _read_lines(args.ref)
        if len(refs) != len(hyps):
            raise CorruptFile(f"{len(hyps)} hypotheses but {len(refs)} references")
        report["TER"] = _pct(corpus_ter(hyps, refs))
        report["BLEU"] = _pct(corpus_bleu(hyps, refs))
    _write(args.out, json.dumps(report, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# argument parsing


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _rate(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must be in [0, 1]")
    return value


def _rhyme(text: str):
    if text == "auto":
        return text
    value = int(text)
    if not 0 <= value <= MAX_RHYME:
        raise argparse.ArgumentTypeError(f"rhyme must be 0..{MAX_RHYME} or 'auto'")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="RNG seed (default %(default)s)")
    common.add_argument("--profile", default="mandarin", help="target language profile: built-in name or path")
    common.add_argument("--source-profile", default="english", help="source language profile")
    common.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    common.add_argument("--json", action="store_true", help="JSON-lines output")
    common.add_argument("--out", help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="singable", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    placements = [p.value for p in Placement]

    p = sub.add_parser("prepare-data", parents=[common], help="build training records from parallel text")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="source<TAB>target pairs")
    src.add_argument("--src", help="source lines (with --tgt)")
    p.add_argument("--tgt", help="target lines aligned with --src")
    p.add_argument("--placement", choices=placements, default=Placement.ENCODER_PREFIX.value)
    p.add_argument("--direction", choices=[d.value for d in Direction], default=Direction.REVERSE.value)
    p.add_argument("--rhy0-rate", type=_rate, default=DEFAULT_NULL_RATE)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--constraints-out")
    p.add_argument("--sources-out")
    p.add_argument("--refs-out")
    p.set_defaults(func=cmd_prepare_data)

    p = sub.add_parser("corrupt", parents=[common], help="mask one span per line for denoising")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("backtranslate", parents=[common], help="pair target lines with external translations")
    p.add_argument("--input", required=True, help="target-language lines")
    p.add_argument("--cmd", required=True, help="translator command: lines on stdin, lines on stdout")
    p.add_argument("--batch-size", type=_positive, default=64)
    p.add_argument("--timeout", type=float)
    p.set_defaults(func=cmd_backtranslate)

    p = sub.add_parser("train", parents=[common], help="fit the n-gram model")
    p.add_argument("--data", required=True, help="records from prepare-data")
    p.add_argument("--order", type=_positive, default=2)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--prompt-view", choices=PROMPT_VIEWS, default="aligned")
    p.add_argument("--source-buckets", type=_positive, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract-boundaries", parents=[common], help="length and boundaries from a melody")
    p.add_argument("--melody", required=True, help="melody-json file")
    p.add_argument("--min-rest", default="0", help="shortest rest (beats) that counts as a pause")
    p.add_argument("--peak-semitones", type=_positive, default=3)
    p.set_defaults(func=cmd_extract_boundaries)

    p = sub.add_parser("rank-rhymes", parents=[common], help="score rhyme classes for a paragraph")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="source lines of one paragraph")
    p.add_argument("--constraints", help="constraint lines; default: source syllable counts")
    p.add_argument("--placement", choices=placements, default=Placement.ENCODER_PREFIX.value)
    p.set_defaults(func=cmd_rank_rhymes)

    p = sub.add_parser("translate", parents=[common], help="constrained decoding")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="source lines")
    p.add_argument("--constraints", help="constraint lines; default: source syllable counts")
    p.add_argument("--rhyme", type=_rhyme, help="override every rhyme: a class, 0 for none, or 'auto'")
    p.add_argument("--placement", choices=placements, default=Placement.ENCODER_PREFIX.value)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.PROMPT.value)
    p.add_argument("--beam-size", type=_positive, default=5)
    p.add_argument("--max-len", type=_positive, default=30)
    p.add_argument("--hard-length", action="store_true")
    p.add_argument("--rhyme-bonus", type=float, default=0.0)
    p.add_argument("--boundary-bonus", type=float, default=0.0)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("evaluate", parents=[common], help="LA, RA, BR, TER and BLEU")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref")
    p.add_argument("--constraints")
    p.set_defaults(func=cmd_evaluate)
    return parser


def _check(parser: argparse.ArgumentParser, args) -> None:
    if args.command == "prepare-data" and bool(args.src) != bool(args.tgt):
        parser.error("--src and --tgt go together")
    if args.command == "translate":
        bonus = args.rhyme_bonus != 0 or args.boundary_bonus != 0
        if args.mode == Mode.PROMPT.value and bonus:
            parser.error("score bonuses need --mode biased")
        if args.mode == Mode.BIASED.value and not (bonus or args.hard_length):
            parser.error("--mode biased needs a bonus or --hard-length")
    if args.command == "evaluate" and not (args.ref or args.constraints):
        parser.error("evaluate needs --ref, --constraints or both")
    if args.command == "train" and not args.alpha > 0:
        parser.error("--alpha must be positive")
    if args.command == "extract-boundaries":
        try:
            Fraction(args.min_rest)
        except ValueError:
            parser.error(f"bad --min-rest {args.min_rest!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _check(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (SingableError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
