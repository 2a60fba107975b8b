"""Gold corpus I/O and fine-tuning data export.

Readers cover CoNLL-2009 (dependency arguments, one APRED column per
predicate), CoNLL-2005/2012 props columns (``(A0*`` ... ``*)`` star
bracketing) and the package's own gold JSON Lines format.
"""

from __future__ import annotations

import enum
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .core import (
    ArgumentAnnotation,
    GoldSentence,
    Language,
    PredicateArgumentStructure,
    PredicateInstance,
    RoleLabel,
    Sentence,
    Span,
    SRLTriple,
    triples_of,
)
from .corrections import (
    MENU,
    corrupt_arguments,
    corrupt_predicates,
    describe_argument_issues,
    describe_predicate_issues,
)
from .frame_db import FrameDB
from .llm_backend import correction_answer
from .pipeline import Annotator, PipelineConfig
from .prompting import (
    Conversation,
    Speaker,
    TemplateSet,
    build_argument_correction,
    build_predicate_correction,
)
from .tagging import (
    Stage,
    parse_arguments,
    parse_predicates,
    render_arguments,
    render_predicates,
    tag_hazards,
)

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


class MalformedCorpus(ValueError):
    def __init__(self, line: Optional[int], reason: str, file: str = ""):
        self.line, self.reason, self.file = line, reason, file
        where = f"{file}:" if file else ""
        where += f"{line}: " if line is not None else " "
        super().__init__(f"{where}{reason}".strip())


def _blocks(path: Path, comments: bool = False) -> Iterator[list[tuple[int, list[str]]]]:
    """Blank-line separated blocks of tab/space split rows, with 1-based line numbers."""
    block: list[tuple[int, list[str]]] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                if block:
                    yield block
                    block = []
                continue
            if comments and line.startswith("#"):
                continue
            cols = line.split("\t") if "\t" in line else line.split()
            block.append((lineno, cols))
    if block:
        yield block


def _keep(sentence: Sentence) -> bool:
    hazards = tag_hazards(sentence)
    for h in hazards:
        log.warning("skipping: %s", h)
    return not hazards


def _role(label: str, lineno: int, file: str) -> RoleLabel:
    try:
        return RoleLabel.parse(label)
    except ValueError as e:
        raise MalformedCorpus(lineno, f"bad role label {label!r}: {e}", file) from None


def load_conll09(path: PathLike, language: "Language | str" = Language.ENGLISH,
                 id_prefix: Optional[str] = None) -> list[GoldSentence]:
    """Read CoNLL-2009 rows: ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD
    DEPREL PDEPREL FILLPRED PRED APRED1..APREDn."""
    path = Path(path)
    language = Language.parse(language)
    prefix = id_prefix if id_prefix is not None else path.stem
    out = []
    for n, block in enumerate(_blocks(path, comments=True), 1):
        width = len(block[0][1])
        words, lemmas, preds = [], [], []
        for i, (lineno, cols) in enumerate(block):
            if len(cols) < 14:
                raise MalformedCorpus(lineno, f"expected at least 14 columns, got {len(cols)}", str(path))
            if len(cols) != width:
                raise MalformedCorpus(lineno, f"row has {len(cols)} columns, sentence has {width}", str(path))
            if cols[0] != str(i + 1):
                raise MalformedCorpus(lineno, f"token id {cols[0]!r}, expected {i + 1}", str(path))
            words.append(cols[1])
            lemmas.append(cols[2] if cols[2] != "_" else None)
            fill, sense = cols[12], cols[13]
            if fill == "Y" or (fill == "_" and sense != "_"):
                if sense == "_":
                    raise MalformedCorpus(lineno, "FILLPRED is Y but PRED is empty", str(path))
                preds.append((i, sense.split(".")[0], lineno))
        if width - 14 != len(preds):
            raise MalformedCorpus(block[0][0], f"{len(preds)} predicates but {width - 14} APRED columns",
                                  str(path))
        sentence = Sentence.from_words(f"{prefix}-{n}", words, language, lemmas)
        structures = []
        for k, (p, lemma, _) in enumerate(preds):
            args = []
            for i, (lineno, cols) in enumerate(block):
                label = cols[14 + k]
                if label == "_":
                    continue
                if i == p:
                    log.warning("%s:%d: argument on its own predicate dropped", path, lineno)
                    continue
                args.append(ArgumentAnnotation(Span(i, i), _role(label, lineno, str(path))))
            structures.append(PredicateArgumentStructure(PredicateInstance.at(sentence, p, lemma), tuple(args)))
        if _keep(sentence):
            out.append(GoldSentence(sentence, tuple(structures)))
    return out


def _star_spans(column: list[tuple[int, str]], file: str) -> list[tuple[Span, str, int]]:
    spans = []
    stack: list[tuple[int, str, int]] = []
    for i, (lineno, cell) in enumerate(column):
        if cell.count("*") != 1:
            raise MalformedCorpus(lineno, f"bad star cell {cell!r}", file)
        head, tail = cell.split("*")
        labels = head.split("(")
        if labels[0] or any(not label for label in labels[1:]):
            raise MalformedCorpus(lineno, f"bad bracket in {cell!r}", file)
        for label in labels[1:]:
            stack.append((i, label, lineno))
        for ch in tail:
            if ch != ")":
                raise MalformedCorpus(lineno, f"bad star cell {cell!r}", file)
            if not stack:
                raise MalformedCorpus(lineno, "closing bracket without an open one", file)
            start, label, open_line = stack.pop()
            spans.append((Span(start, i), label, open_line))
    if stack:
        _, label, open_line = stack[-1]
        raise MalformedCorpus(open_line, f"bracket ({label}* is never closed", file)
    return spans


def load_props(path: PathLike, words: Optional[PathLike] = None,
               language: "Language | str" = Language.ENGLISH,
               id_prefix: Optional[str] = None) -> list[GoldSentence]:
    """Read props columns.

    Without ``words`` each row is ``WORD TARGET PROP1 .. PROPn``; with a
    separate one-word-per-line ``words`` file rows are ``TARGET PROP1 ..``.
    The k-th non-``-`` TARGET row is the predicate of the k-th PROP column.
    """
    path = Path(path)
    language = Language.parse(language)
    prefix = id_prefix if id_prefix is not None else path.stem
    word_blocks = [[cols[0] for _, cols in b] for b in _blocks(Path(words))] if words else None
    out = []
    for n, block in enumerate(_blocks(path), 1):
        offset = 0 if word_blocks is not None else 1
        if word_blocks is not None:
            if n > len(word_blocks) or len(word_blocks[n - 1]) != len(block):
                raise MalformedCorpus(block[0][0], "words file does not line up with props", str(path))
            sent_words = word_blocks[n - 1]
        else:
            sent_words = [cols[0] for _, cols in block]
        width = len(block[0][1])
        for lineno, cols in block:
            if len(cols) != width or width < offset + 1:
                raise MalformedCorpus(lineno, f"row has {len(cols)} columns, sentence has {width}", str(path))
        targets = [(i, cols[offset]) for i, (_, cols) in enumerate(block) if cols[offset] != "-"]
        n_props = width - offset - 1
        if len(targets) != n_props:
            raise MalformedCorpus(block[0][0], f"{len(targets)} targets but {n_props} prop columns", str(path))
        sentence = Sentence.from_words(f"{prefix}-{n}", sent_words, language)
        structures = []
        for k, (p, lemma) in enumerate(targets):
            column = [(lineno, cols[offset + 1 + k]) for lineno, cols in block]
            args: list[ArgumentAnnotation] = []
            for span, label, lineno in sorted(_star_spans(column, str(path)), key=lambda x: (x[0].start, -x[0].end)):
                if label == "V" or label == "C-V":
                    continue
                if span.contains(p):
                    log.warning("%s:%d: %s covers its predicate, dropped", path, lineno, label)
                    continue
                if any(a.span.overlaps(span) for a in args):
                    log.warning("%s:%d: nested %s dropped", path, lineno, label)
                    continue
                args.append(ArgumentAnnotation(span, _role(label, lineno, str(path))))
            structures.append(PredicateArgumentStructure(PredicateInstance.at(sentence, p, lemma), tuple(args)))
        if _keep(sentence):
            out.append(GoldSentence(sentence, tuple(structures)))
    return out


# gold JSON Lines

def gold_to_json(g: GoldSentence) -> dict:
    s = g.sentence
    obj = {"id": s.id, "language": s.language.value, "words": s.words}
    if any(t.lemma for t in s.tokens):
        obj["lemmas"] = [t.lemma for t in s.tokens]
    obj["predicates"] = sorted(g.predicate_tokens)
    obj["structures"] = [
        {"predicate": st.predicate.token, "lemma": st.predicate.lemma,
         "arguments": [{"start": a.span.start, "end": a.span.end, "role": a.role.rendered}
                       for a in st.sorted().arguments]}
        for st in sorted(g.structures, key=lambda st: st.predicate.token)]
    return obj


def gold_from_json(obj: dict, lineno: Optional[int] = None) -> GoldSentence:
    try:
        s = Sentence.from_words(str(obj["id"]), obj["words"], obj.get("language", "en"), obj.get("lemmas"))
        structures = []
        for st in obj.get("structures", []):
            args = tuple(ArgumentAnnotation(Span(a["start"], a["end"]), RoleLabel.parse(a["role"]))
                         for a in st.get("arguments", []))
            structures.append(PredicateArgumentStructure(
                PredicateInstance.at(s, st["predicate"], st.get("lemma")), args))
        seen = {st.predicate.token for st in structures}
        for p in obj.get("predicates", []):
            if p not in seen:
                structures.append(PredicateArgumentStructure(PredicateInstance.at(s, p)))
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise MalformedCorpus(lineno, f"bad gold record: {e}") from None
    return GoldSentence(s, tuple(structures))


def write_gold_jsonl(corpus: Iterable[GoldSentence], path: PathLike) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for g in corpus:
            fh.write(json.dumps(gold_to_json(g), ensure_ascii=False) + "\n")


def _jsonl(path: PathLike) -> Iterator[tuple[int, dict]]:
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedCorpus(lineno, f"invalid JSON: {e.msg}", str(path)) from None


def read_gold_jsonl(path: PathLike) -> list[GoldSentence]:
    return [gold_from_json(obj, lineno) for lineno, obj in _jsonl(path)]


def load_corpus(path: PathLike, fmt: Optional[str] = None,
                language: "Language | str" = Language.ENGLISH) -> list[GoldSentence]:
    """Dispatch on ``fmt`` (jsonl, conll09, props) or sniff it from the file."""
    path = Path(path)
    if fmt is None:
        if path.suffix in (".jsonl", ".json"):
            fmt = "jsonl"
        else:
            first = next((line for line in path.open(encoding="utf-8") if line.strip()), "")
            fmt = "conll09" if len(first.rstrip("\n").split("\t")) >= 14 else "props"
    if fmt == "jsonl":
        return read_gold_jsonl(path)
    if fmt == "conll09":
        return load_conll09(path, language)
    if fmt == "props":
        return load_props(path, language=language)
    raise ValueError(f"unknown corpus format {fmt!r}")


def read_annotations(path: PathLike) -> dict[str, dict]:
    """Annotation output (or gold JSONL) keyed by sentence id."""
    return {str(obj["id"]): obj for _, obj in _jsonl(path)}


def record_triples(obj: dict) -> set[SRLTriple]:
    return {SRLTriple(st["predicate"], Span(a["start"], a["end"]), RoleLabel.parse(a["role"]))
            for st in obj.get("structures", []) for a in st.get("arguments", [])}


def gold_triples(corpus: Iterable[GoldSentence]) -> dict[str, set[SRLTriple]]:
    return {g.sentence.id: triples_of(g.structures) for g in corpus}


def subsample(corpus: Sequence[GoldSentence], n: int, seed: int) -> list[GoldSentence]:
    """``n`` sentences drawn without replacement, kept in corpus order."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n >= len(corpus):
        return list(corpus)
    picked = sorted(random.Random(seed).sample(range(len(corpus)), n))
    return [corpus[i] for i in picked]


# training export

class RecordKind(str, enum.Enum):
    PREDICATE_STAGE = "PredicateStage"
    ARGUMENT_STAGE = "ArgumentStage"
    PREDICATE_CORRECTION = "PredicateCorrection"
    ARGUMENT_CORRECTION = "ArgumentCorrection"


@dataclass(frozen=True)
class TrainingRecord:
    kind: RecordKind
    conversation: Conversation
    target: str
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        meta = {"kind": self.kind.value, **self.meta}
        return {"messages": self.conversation.messages(), "target": self.target, "meta": meta}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class ExportConfig:
    iterations: int = 3
    seed: int = 0
    per_iteration: bool = True  # False chains rounds into one growing transcript

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


def _corrections(first: Conversation, gold_text: str, stage: Stage, perturb, describe,
                 build, tpl: TemplateSet, cfg: ExportConfig) -> Iterator[tuple[int, Conversation, str]]:
    """(iteration, context, target) for each correction round."""
    chain = None
    for i in range(1, cfg.iterations + 1):
        if cfg.per_iteration or chain is None:
            prior_text = perturb(i)
            context = build(first, prior_text, tpl)
            issues = describe(prior_text)
            target = correction_answer(tpl, stage.value, issues, gold_text)
            chain = (context, target, issues)
        else:
            context0, target0, issues0 = chain
            context = build(context0, target0, tpl, result=gold_text, issues=issues0)
            target = tpl.stop_phrase
            chain = (context, target, "")
        yield i, context, target


def _export_sentence(g: GoldSentence, annotator: Annotator, tpl: TemplateSet,
                     cfg: ExportConfig) -> list[TrainingRecord]:
    s = g.sentence
    sid = s.id
    gold_preds = g.predicate_tokens
    d1 = annotator.stage_one_prompt(s)
    y_p = render_predicates(s, gold_preds).text
    records = [TrainingRecord(RecordKind.PREDICATE_STAGE, d1, y_p, {"sentence_id": sid})]

    def perturb_p(i: int) -> str:
        rng = random.Random(f"{cfg.seed}|{sid}|predicate|{i}")
        return corrupt_predicates(s, gold_preds, rng, MENU)[0]

    def describe_p(text: str) -> str:
        parsed, devs = parse_predicates(text, s)
        return describe_predicate_issues(s, gold_preds, parsed, devs)

    prior = d1.append(Speaker.ASSISTANT, y_p)
    arg_records: list[TrainingRecord] = []
    corr_records: list[TrainingRecord] = []
    for i, context, target in _corrections(d1, y_p, Stage.PREDICATE, perturb_p, describe_p,
                                           build_predicate_correction, tpl, cfg):
        corr_records.append(TrainingRecord(RecordKind.PREDICATE_CORRECTION, context, target,
                                           {"sentence_id": sid, "iteration": i}))

    for st in sorted(g.structures, key=lambda st: st.predicate.token):
        p = st.predicate.token
        d2, _, _ = annotator.argument_prompt(s, p, prior)
        y_a = render_arguments(s, st).text
        arg_records.append(TrainingRecord(RecordKind.ARGUMENT_STAGE, d2, y_a,
                                          {"sentence_id": sid, "predicate": p}))

        def perturb_a(i: int, st=st, p=p) -> str:
            rng = random.Random(f"{cfg.seed}|{sid}|argument|{p}|{i}")
            return corrupt_arguments(s, st, rng, MENU)[0]

        def describe_a(text: str, st=st, p=p) -> str:
            args, devs = parse_arguments(text, s, p)
            return describe_argument_issues(s, st, args, devs)

        for i, context, target in _corrections(d2, y_a, Stage.ARGUMENT, perturb_a, describe_a,
                                               build_argument_correction, tpl, cfg):
            corr_records.append(TrainingRecord(RecordKind.ARGUMENT_CORRECTION, context, target,
                                               {"sentence_id": sid, "predicate": p, "iteration": i}))
    return records + arg_records + corr_records


def export_training(corpus: Iterable[GoldSentence], db: FrameDB, tpl: Optional[TemplateSet] = None,
                    cfg: ExportConfig = ExportConfig()) -> Iterator[TrainingRecord]:
    """Supervised records per sentence: 1 predicate-stage, one argument-stage per
    predicate, then N predicate-correction and N per predicate argument-correction."""
    templates = {tpl.language: tpl} if tpl is not None else None
    annotator = Annotator(db, backend=None, cfg=PipelineConfig(max_iterations=cfg.iterations),
                          templates=templates)
    for g in corpus:
        yield from _export_sentence(g, annotator, annotator.templates(g.sentence.language), cfg)


def write_training(records: Iterable[TrainingRecord], path: PathLike) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(r.dumps() + "\n")
            count += 1
    return count


def expected_record_count(corpus: Iterable[GoldSentence], iterations: int) -> int:
    return sum(1 + len(g.structures) + iterations * (1 + len(g.structures)) for g in corpus)
