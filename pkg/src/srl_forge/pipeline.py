"""Two-stage annotation with bounded self-correction.

Stage 1 asks for the predicates of a sentence, helped by the retrieval
agent's candidates.  Stage 2 branches once per predicate from the final
stage-1 transcript and asks for that predicate's arguments.  Each stage
then runs up to ``max_iterations`` correction rounds; a round ends the loop
when the reply starts with the stop phrase, or when the revision parses
cleanly and repeats the previous parse.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence, Union

from .core import (
    ArgumentAnnotation,
    GoldSentence,
    Language,
    PredicateArgumentStructure,
    PredicateInstance,
    Sentence,
)
from .frame_db import FrameDB
from .lemmatizer import lemmatize
from .llm_backend import Backend, CompletionRequest
from .prompting import (
    Conversation,
    Speaker,
    TemplateSet,
    build_argument_correction,
    build_argument_prompt,
    build_predicate_correction,
    build_predicate_prompt,
)
from .retrieval_agent import candidates
from .tagging import (
    Deviation,
    DeviationKind,
    Stage,
    parse_arguments,
    parse_predicates,
    render_predicates,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    max_iterations: int = 3
    predicates_given: bool = False
    language: Language = Language.ENGLISH
    record_trace: bool = False
    workers: int = 1
    max_tokens: int = 1024
    temperature: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "language", Language.parse(self.language))


# correction replies

@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Revision:
    issues: str
    revised: str
    deviations: tuple[Deviation, ...] = ()


def _issue_prefixes(tpl: Optional[TemplateSet]) -> list[str]:
    prefix = tpl.fragments["issues_prefix"] if tpl else "Issues detected:"
    out = [prefix]
    if prefix.startswith("Issues "):
        out.append("Issue " + prefix[len("Issues "):])
    return out


def parse_correction_response(text: str, stage: Union[Stage, str], stop_phrase: str = "Stop checking.",
                              tpl: Optional[TemplateSet] = None) -> Union[Stop, Revision]:
    """Split a correction reply into its issues and its revised output."""
    stage = Stage(stage)
    body = text.strip()
    if body.startswith(stop_phrase):
        return Stop()
    label = tpl.result_label(stage.value) if tpl else (
        "Predicate identification result:" if stage is Stage.PREDICATE else "Argument labeling result:")
    marker = tpl.fragments["result_marker"] if tpl else "result:"
    at = body.find(label)
    if at >= 0:
        issues, revised = body[:at], body[at + len(label):]
    else:
        at = body.find(marker)
        if at < 0:
            dev = Deviation(DeviationKind.MALFORMED_TAG, "correction reply lacks the result marker")
            log.debug("correction reply without marker: %r", text[:80])
            return Revision("", body, (dev,))
        issues, revised = body[:at], body[at + len(marker):]
    issues = issues.strip()
    for prefix in _issue_prefixes(tpl):
        if issues.startswith(prefix):
            issues = issues[len(prefix):].strip()
            break
    return Revision(issues, _unquote(revised.strip()), ())


def _unquote(text: str) -> str:
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1].strip()
    return text


# traces

@dataclass(frozen=True)
class TraceStep:
    conversation: Conversation
    response: str
    parsed: Any
    deviations: tuple[Deviation, ...]
    stop: bool

    def to_json(self) -> dict:
        if isinstance(self.parsed, (set, frozenset)):
            parsed = sorted(self.parsed)
        elif self.parsed is None:
            parsed = None
        else:
            parsed = [_arg_json(a) for a in self.parsed]
        return {"messages": self.conversation.messages(), "response": self.response,
                "parsed": parsed, "deviations": [str(d) for d in self.deviations], "stop": self.stop}


@dataclass(frozen=True)
class CorrectionOutcome:
    stopped_early: bool
    iterations_used: int
    issues_texts: tuple[str, ...]
    final_text: str


@dataclass
class AnnotationTrace:
    predicate: list[TraceStep] = field(default_factory=list)
    arguments: dict[int, list[TraceStep]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"predicate": [s.to_json() for s in self.predicate],
                "arguments": {str(k): [s.to_json() for s in v] for k, v in sorted(self.arguments.items())}}


@dataclass
class StageResult:
    parsed: Any
    outcome: CorrectionOutcome
    steps: list[TraceStep]
    conversation: Conversation  # initial prompt plus the final output


def _correct(first: Conversation, parse: Callable[[str], tuple[Any, list[Deviation]]],
             build_correction: Callable[..., Conversation], stage: Stage, backend: Backend,
             cfg: PipelineConfig, tpl: TemplateSet, meta: dict) -> StageResult:
    def ask(conv: Conversation, rnd: int) -> str:
        req = CompletionRequest(conv, max_tokens=cfg.max_tokens, temperature=cfg.temperature,
                                seed=cfg.seed, metadata={**meta, "stage": stage.value, "round": rnd})
        return backend.complete(req)

    conv = first
    raw = ask(conv, 0)
    parsed, devs = parse(raw)
    steps = [TraceStep(conv, raw, parsed, tuple(devs), False)]
    text, issues = raw, ""
    issues_texts: list[str] = []
    stopped, used = False, 0
    for rnd in range(1, cfg.max_iterations + 1):
        conv = build_correction(conv, raw, tpl, result=text, issues=issues)
        raw = ask(conv, rnd)
        used = rnd
        reply = parse_correction_response(raw, stage, tpl.stop_phrase, tpl)
        if isinstance(reply, Stop):
            steps.append(TraceStep(conv, raw, None, (), True))
            stopped = True
            break
        new, new_devs = parse(reply.revised)
        fixed_point = not new_devs and new == parsed
        steps.append(TraceStep(conv, raw, new, reply.deviations + tuple(new_devs), fixed_point))
        issues_texts.append(reply.issues)
        parsed, text, issues = new, reply.revised, reply.issues
        if fixed_point:
            stopped = True
            break
    final = first.append(Speaker.ASSISTANT, text or " ")
    return StageResult(parsed, CorrectionOutcome(stopped, used, tuple(issues_texts), text), steps, final)


class Annotator:
    """Holds the frame DB, backend and per-language templates for a run."""

    def __init__(self, db: FrameDB, backend: Backend, cfg: PipelineConfig = PipelineConfig(),
                 templates: Optional[dict] = None):
        self.db, self.backend, self.cfg = db, backend, cfg
        self._templates = dict(templates or {})

    def templates(self, language: Language) -> TemplateSet:
        if language not in self._templates:
            self._templates[language] = TemplateSet.default(language)
        return self._templates[language]

    def stage_one_prompt(self, s: Sentence) -> Conversation:
        retrieval = candidates(s, self.db)
        return build_predicate_prompt(s, retrieval.candidates, retrieval.hint, self.templates(s.language))

    def identify_predicates(self, s: Sentence) -> StageResult:
        tpl = self.templates(s.language)
        return _correct(self.stage_one_prompt(s), lambda t: parse_predicates(t, s),
                        build_predicate_correction, Stage.PREDICATE, self.backend, self.cfg, tpl,
                        {"sentence_id": s.id, "predicate": None})

    def _lemma(self, surface: str, language: Language) -> tuple[str, Any]:
        entry = self.db.match(surface)
        if entry is not None:
            return entry.lemma, entry
        return lemmatize(surface, language)[0], None

    def argument_prompt(self, s: Sentence, pred: int, prior: Conversation) -> tuple[Conversation, str, Optional[list]]:
        """D2 for one predicate, its lemma, and the labels it may use (None: unchecked)."""
        tpl = self.templates(s.language)
        lemma, entry = self._lemma(s.words[pred], s.language)
        roles = self.db.role_set(lemma)
        frames = entry.framesets if entry is not None else ()
        first = build_argument_prompt(prior, render_predicates(s, [pred]), roles, frames, tpl,
                                      lemma=lemma, pos_hint=entry.pos_hint if entry is not None else None)
        allowed = None
        if self.db.adjunct_roles:
            allowed = [label for label, _ in roles.core] + [label for label, _ in roles.adjunct]
        return first, lemma, allowed

    def label_arguments(self, s: Sentence, pred: int, prior: Conversation) -> tuple[PredicateArgumentStructure, StageResult]:
        tpl = self.templates(s.language)
        first, lemma, allowed = self.argument_prompt(s, pred, prior)
        result = _correct(first, lambda t: parse_arguments(t, s, pred, allowed),
                          build_argument_correction, Stage.ARGUMENT, self.backend, self.cfg, tpl,
                          {"sentence_id": s.id, "predicate": pred})
        structure = PredicateArgumentStructure(PredicateInstance.at(s, pred, lemma), tuple(result.parsed))
        return structure, result

    def annotate(self, s: Sentence, gold_predicates: Optional[Iterable[int]] = None) -> "Annotation":
        trace = AnnotationTrace()
        if self.cfg.predicates_given:
            if gold_predicates is None:
                raise ValueError("predicates_given needs the gold predicate set")
            preds = set(gold_predicates)
            given = render_predicates(s, preds).text
            prior = self.stage_one_prompt(s).append(Speaker.ASSISTANT, given)
            outcome = None
        else:
            stage1 = self.identify_predicates(s)
            preds, prior, outcome = stage1.parsed, stage1.conversation, stage1.outcome
            trace.predicate = stage1.steps
        structures = []
        arg_outcomes = {}
        for pred in sorted(preds):
            structure, result = self.label_arguments(s, pred, prior)
            structures.append(structure)
            arg_outcomes[pred] = result.outcome
            trace.arguments[pred] = result.steps
        return Annotation(s, sorted(preds), structures, outcome, arg_outcomes,
                          trace if self.cfg.record_trace else None)


@dataclass
class Annotation:
    sentence: Sentence
    predicates: list[int]
    structures: list[PredicateArgumentStructure]
    predicate_outcome: Optional[CorrectionOutcome] = None
    argument_outcomes: dict[int, CorrectionOutcome] = field(default_factory=dict)
    trace: Optional[AnnotationTrace] = None

    def to_json(self) -> dict:
        obj = {"id": self.sentence.id, "predicates": list(self.predicates),
               "structures": [structure_json(st) for st in self.structures]}
        if self.trace is not None:
            obj["trace"] = self.trace.to_json()
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


def _arg_json(a: ArgumentAnnotation) -> dict:
    return {"start": a.span.start, "end": a.span.end, "role": a.role.rendered}


def structure_json(st: PredicateArgumentStructure) -> dict:
    return {"predicate": st.predicate.token, "arguments": [_arg_json(a) for a in st.sorted().arguments]}


# module-level entry points

def identify_predicates(s: Sentence, db: FrameDB, backend: Backend, cfg: PipelineConfig = PipelineConfig()):
    result = Annotator(db, backend, cfg).identify_predicates(s)
    return result.parsed, result.outcome, result.steps


def label_arguments(s: Sentence, pred: int, prior: Conversation, db: FrameDB, backend: Backend,
                    cfg: PipelineConfig = PipelineConfig()):
    structure, result = Annotator(db, backend, cfg).label_arguments(s, pred, prior)
    return structure, result.outcome, result.steps


def annotate(s: Sentence, gold_predicates: Optional[Iterable[int]], db: FrameDB, backend: Backend,
             cfg: PipelineConfig = PipelineConfig()) -> Annotation:
    return Annotator(db, backend, cfg).annotate(s, gold_predicates)


def annotate_corpus(items: Sequence[Union[Sentence, GoldSentence]], db: FrameDB, backend: Backend,
                    cfg: PipelineConfig = PipelineConfig(),
                    progress: Optional[Callable[[int, int], None]] = None) -> list[Annotation]:
    """Annotate in a worker pool; results keep input order."""
    annotator = Annotator(db, backend, cfg)

    def one(item):
        if isinstance(item, GoldSentence):
            return annotator.annotate(item.sentence, item.predicate_tokens)
        return annotator.annotate(item)

    workers = min(cfg.workers, max(1, len(items)))
    if workers == 1:
        out = []
        for i, item in enumerate(items, 1):
            out.append(one(item))
            if progress:
                progress(i, len(items))
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        out = []
        for i, result in enumerate(pool.map(one, items), 1):
            out.append(result)
            if progress:
                progress(i, len(items))
        return out


def default_workers() -> int:
    return os.cpu_count() or 1
