"""srl-forge command line.

Exit status: 0 success, 1 usage error, 2 data error, 3 backend failure.
Settings come from an optional config file, then SRL_FORGE_* environment
variables, then flags; later sources win.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .core import InvalidStructure
from .corpus import (
    ExportConfig,
    MalformedCorpus,
    export_training,
    gold_to_json,
    gold_triples,
    load_corpus,
    read_annotations,
    record_triples,
    subsample,
    write_gold_jsonl,
    write_training,
)
from .frame_db import DuplicateFramesetId, FrameDB, MalformedLexicon, build_db
from .llm_backend import BackendConfig, BackendError, BackendKind, make_backend
from .pipeline import PipelineConfig, annotate_corpus, default_workers
from .prompting import TemplateSlotMissing
from .retrieval_agent import hit_rate
from .scorer import DependencyModeSpanTooWide, ScoreMode, predicate_triples, score_corpus

log = logging.getLogger("srl_forge")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3

ENV = {
    "endpoint": "SRL_FORGE_ENDPOINT",
    "model": "SRL_FORGE_MODEL",
    "timeout": "SRL_FORGE_TIMEOUT",
    "max_retries": "SRL_FORGE_MAX_RETRIES",
    "max_in_flight": "SRL_FORGE_MAX_IN_FLIGHT",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="srl-forge", description="Retrieval-augmented SRL with LLM self-correction.")
    p.add_argument("--config", help="INI file with [backend] and [pipeline] sections")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build-db", help="compile lexicon files into a frame DB")
    b.add_argument("--frames", required=True, help="directory (or file) of *.jsonl lexicon records")
    b.add_argument("--adjuncts", help="adjunct inventory, one 'LABEL: description' per line")
    b.add_argument("--language", default="en")
    b.add_argument("--out", required=True)

    a = sub.add_parser("annotate", help="run the two-stage pipeline over a corpus")
    a.add_argument("--db", required=True)
    a.add_argument("--corpus", required=True)
    a.add_argument("--format", choices=("jsonl", "conll09", "props"))
    a.add_argument("--backend", choices=("http", "gold", "corrupt"), default="gold")
    a.add_argument("--out", required=True)
    a.add_argument("--predicates-given", action="store_true")
    a.add_argument("--iterations", type=int)
    a.add_argument("--trace", action="store_true")
    a.add_argument("--workers", type=int)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--corruption-rate", type=float)
    a.add_argument("--endpoint")
    a.add_argument("--model")

    s = sub.add_parser("score", help="score predictions against gold")
    s.add_argument("--gold", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--format", choices=("jsonl", "conll09", "props"))
    s.add_argument("--mode", choices=("span", "dep"), default="span")
    s.add_argument("--per-role", action="store_true")
    s.add_argument("--predicates", action="store_true", help="score predicate identification instead")
    s.add_argument("--json", action="store_true")

    h = sub.add_parser("hit-rate", help="retrieval-agent coverage of gold predicates")
    h.add_argument("--db", required=True)
    h.add_argument("--corpus", required=True)
    h.add_argument("--format", choices=("jsonl", "conll09", "props"))
    h.add_argument("--json", action="store_true")
    h.add_argument("--show-missed", action="store_true")

    e = sub.add_parser("export-train", help="write supervised fine-tuning records")
    e.add_argument("--db", required=True)
    e.add_argument("--corpus", required=True)
    e.add_argument("--format", choices=("jsonl", "conll09", "props"))
    e.add_argument("--iterations", type=int, default=3)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--transcript", action="store_true", help="chain correction rounds in one transcript")
    e.add_argument("--out", required=True)

    m = sub.add_parser("subsample", help="seeded sample of a corpus as gold JSONL")
    m.add_argument("--corpus", required=True)
    m.add_argument("--format", choices=("jsonl", "conll09", "props"))
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--out", help="defaults to standard output")
    return p


def read_config(path: Optional[str]) -> dict:
    """Flattened settings from the config file, overlaid by the environment."""
    settings: dict = {}
    if path:
        cp = configparser.ConfigParser(interpolation=None)
        if not cp.read(path, encoding="utf-8"):
            raise UsageError(f"config file {path} not found")
        for section in ("backend", "pipeline"):
            if cp.has_section(section):
                settings.update(cp[section])
    for key, var in ENV.items():
        if os.environ.get(var):
            settings[key] = os.environ[var]
    return settings


def _int(settings: dict, key: str, default: int) -> int:
    try:
        return int(settings.get(key, default))
    except ValueError:
        raise UsageError(f"setting {key} must be an integer") from None


def _float(settings: dict, key: str, default: Optional[float]) -> Optional[float]:
    value = settings.get(key, default)
    try:
        return None if value is None else float(value)
    except ValueError:
        raise UsageError(f"setting {key} must be a number") from None


def cmd_build_db(args, settings) -> int:
    db = build_db(args.frames, args.adjuncts, args.language)
    db.save(args.out)
    log.info("wrote %d lemmas to %s", len(db), args.out)
    return EXIT_OK


def cmd_annotate(args, settings) -> int:
    db = FrameDB.load(args.db)
    corpus = load_corpus(args.corpus, args.format, db.language)
    kind = BackendKind(args.backend)
    rate = args.corruption_rate if args.corruption_rate is not None else _float(settings, "corruption_rate", None)
    try:
        bcfg = BackendConfig(
            kind=kind,
            endpoint=args.endpoint or settings.get("endpoint"),
            model_name=args.model or settings.get("model"),
            timeout=_float(settings, "timeout", 60.0),
            max_retries=_int(settings, "max_retries", 3),
            max_in_flight=_int(settings, "max_in_flight", 8),
            corruption_rate=rate,
            seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    iterations = args.iterations if args.iterations is not None else _int(settings, "iterations", 3)
    workers = args.workers or _int(settings, "workers", min(default_workers(), bcfg.max_in_flight))
    try:
        pcfg = PipelineConfig(max_iterations=iterations, predicates_given=args.predicates_given,
                              language=db.language, record_trace=args.trace, workers=workers)
    except ValueError as e:
        raise UsageError(str(e)) from None
    backend = make_backend(bcfg, gold=corpus)

    def progress(done: int, total: int) -> None:
        if done == total or done % 50 == 0:
            log.info("annotated %d/%d sentences", done, total)

    results = annotate_corpus(corpus, db, backend, pcfg, progress)
    with Path(args.out).open("w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            fh.write(r.dumps() + "\n")
    log.info("wrote %d records to %s (%d backend calls)", len(results), args.out, backend.calls)
    return EXIT_OK


def cmd_score(args, settings) -> int:
    gold = load_corpus(args.gold, args.format)
    pred = read_annotations(args.pred)
    if args.predicates:
        g = {x.sentence.id: predicate_triples(x.predicate_tokens) for x in gold}
        p = {sid: predicate_triples(obj.get("predicates", [])) for sid, obj in pred.items()}
    else:
        g = gold_triples(gold)
        p = {sid: record_triples(obj) for sid, obj in pred.items()}
    unknown = set(p) - set(g)
    if unknown:
        raise MalformedCorpus(None, f"predictions for unknown sentence ids: {sorted(unknown)[:5]}")
    report = score_corpus(g, p, ScoreMode(args.mode))
    if args.json:
        print(report.to_json(per_role=args.per_role))
    else:
        print(report.table(per_role=args.per_role))
    return EXIT_OK


def cmd_hit_rate(args, settings) -> int:
    db = FrameDB.load(args.db)
    corpus = load_corpus(args.corpus, args.format, db.language)
    report = hit_rate(((g.sentence, sorted(g.predicate_tokens)) for g in corpus), db,
                      verbose=args.show_missed)
    print(report.to_json() if args.json else report.line())
    if args.show_missed:
        for sid, token in report.missed_examples:
            print(f"missed {sid} {token}", file=sys.stderr)
    return EXIT_OK


def cmd_export_train(args, settings) -> int:
    db = FrameDB.load(args.db)
    corpus = load_corpus(args.corpus, args.format, db.language)
    try:
        cfg = ExportConfig(iterations=args.iterations, seed=args.seed, per_iteration=not args.transcript)
    except ValueError as e:
        raise UsageError(str(e)) from None
    n = write_training(export_training(corpus, db, cfg=cfg), args.out)
    log.info("wrote %d training records to %s", n, args.out)
    return EXIT_OK


def cmd_subsample(args, settings) -> int:
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    corpus = load_corpus(args.corpus, args.format)
    picked = subsample(corpus, args.n, args.seed)
    if args.out:
        write_gold_jsonl(picked, args.out)
    else:
        for g in picked:
            print(json.dumps(gold_to_json(g), ensure_ascii=False))
    return EXIT_OK


COMMANDS = {
    "build-db": cmd_build_db,
    "annotate": cmd_annotate,
    "score": cmd_score,
    "hit-rate": cmd_hit_rate,
    "export-train": cmd_export_train,
    "subsample": cmd_subsample,
}

DATA_ERRORS = (MalformedCorpus, MalformedLexicon, DuplicateFramesetId, InvalidStructure,
               DependencyModeSpanTooWide, TemplateSlotMissing, FileNotFoundError,
               IsADirectoryError, json.JSONDecodeError, KeyError, ValueError)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(message)s")
    try:
        settings = read_config(args.config)
        return COMMANDS[args.command](args, settings)
    except UsageError as e:
        print(f"srl-forge: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as e:
        print(f"srl-forge: backend failure: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except DATA_ERRORS as e:
        print(f"srl-forge: data error: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
