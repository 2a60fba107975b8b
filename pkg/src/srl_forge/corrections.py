"""Synthetic errors and their issue descriptions.

The corruption menu mirrors the error classes seen in real self-correction
transcripts: dropped predicate content, a mangled tag name, a dropped tag
bracket and a span boundary shifted by one token.  Both the corrupting test
backend and the training-data exporter draw from it, and both describe the
damage with :func:`describe_predicate_issues` / :func:`describe_argument_issues`.
"""

from __future__ import annotations

import enum
import random
from typing import Optional, Sequence

from .core import ArgumentAnnotation, Language, PredicateArgumentStructure, Sentence, Span
from .tagging import (
    PRED_CLOSE,
    PRED_OPEN,
    Deviation,
    DeviationKind,
    render_arguments,
    render_predicates,
)


class Corruption(str, enum.Enum):
    DROP_PREDICATE = "drop_predicate"
    MANGLE_TAG = "mangle_tag"
    DROP_BRACKET = "drop_bracket"
    SHIFT_BOUNDARY = "shift_boundary"


MENU = tuple(Corruption)


def _join(s: Sentence, words: Sequence[str]) -> str:
    return s.language.separator.join(w for w in words if w)


def corrupt_predicates(s: Sentence, preds: set[int], rng: random.Random,
                       menu: Sequence[Corruption] = MENU) -> tuple[str, Optional[Corruption]]:
    """Render ``preds`` with one injected error; ``None`` when nothing applies."""
    order = list(menu)
    rng.shuffle(order)
    targets = sorted(preds)
    for kind in order:
        if not targets:
            break
        p = rng.choice(targets)
        words = list(s.words)
        for q in targets:
            words[q] = f"{PRED_OPEN}{words[q]}{PRED_CLOSE}"
        if kind is Corruption.DROP_PREDICATE:
            words[p] = PRED_OPEN
        elif kind is Corruption.MANGLE_TAG:
            words[p] = "@" + s.words[p] + PRED_CLOSE
        elif kind is Corruption.DROP_BRACKET:
            words[p] = PRED_OPEN + s.words[p]
        else:
            free = [q for q in (p - 1, p + 1) if 0 <= q < len(s) and q not in preds]
            if not free:
                continue
            q = rng.choice(free)
            words[p] = s.words[p]
            words[q] = f"{PRED_OPEN}{s.words[q]}{PRED_CLOSE}"
        return _join(s, words), kind
    return render_predicates(s, preds).text, None


def _shifted(structure: PredicateArgumentStructure, n: int, rng: random.Random):
    pred = structure.predicate.token
    options = []
    for i, arg in enumerate(structure.arguments):
        a, b = arg.span.start, arg.span.end
        for start, end in ((a - 1, b), (a, b + 1), (a + 1, b), (a, b - 1)):
            if start < 0 or end >= n or start > end:
                continue
            new = Span(start, end)
            if new.contains(pred):
                continue
            if any(new.overlaps(o.span) for j, o in enumerate(structure.arguments) if j != i):
                continue
            options.append((i, new))
    if not options:
        return None
    i, new = rng.choice(options)
    args = list(structure.arguments)
    args[i] = ArgumentAnnotation(new, args[i].role)
    return PredicateArgumentStructure(structure.predicate, tuple(args))


def corrupt_arguments(s: Sentence, structure: PredicateArgumentStructure, rng: random.Random,
                      menu: Sequence[Corruption] = MENU) -> tuple[str, Optional[Corruption]]:
    order = list(menu)
    rng.shuffle(order)
    pred = structure.predicate.token
    args = sorted(structure.arguments, key=lambda a: a.span)
    for kind in order:
        if kind is Corruption.SHIFT_BOUNDARY:
            shifted = _shifted(structure, len(s), rng)
            if shifted is None:
                continue
            return render_arguments(s, shifted).text, kind
        if kind is not Corruption.DROP_PREDICATE and not args:
            continue
        words = list(s.words)
        words[pred] = f"{PRED_OPEN}{words[pred]}{PRED_CLOSE}"
        victim = rng.choice(args) if args else None
        for arg in args:
            label = arg.role.rendered
            opening = f"<{label}>"
            if arg is victim and kind is Corruption.MANGLE_TAG:
                opening = f"<{label[:-1]}>" if len(label) > 1 else f"<{label}X>"
            elif arg is victim and kind is Corruption.DROP_BRACKET:
                opening = f"{label}>"
            words[arg.span.start] = opening + words[arg.span.start]
            words[arg.span.end] = words[arg.span.end] + f"</{label}>"
        if kind is Corruption.DROP_PREDICATE:
            words[pred] = PRED_OPEN
        return _join(s, words), kind
    return render_arguments(s, structure).text, None


# issue descriptions

_PHRASES = {
    Language.ENGLISH: {
        "missing_pred": 'The predicate "{w}" is missing.',
        "extra_pred": '"{w}" is not a predicate.',
        "unmarked_pred": 'The predicate "{w}" is not marked with @@ and ##.',
        "pred_format": "The predicate tags are malformed.",
        "arg_format": "The argument tags are malformed.",
        "text": "The output text is inconsistent with the original text.",
        "relabel": 'The argument "{w}" should be labeled {gold} instead of {pred}.',
        "boundary": 'The boundary of the argument "{w}" is incorrect; it should be "{g}".',
        "missing_arg": 'The argument "{w}" ({gold}) is missing.',
        "extra_arg": '"{w}" should not be labeled {pred}.',
    },
    Language.CHINESE: {
        "missing_pred": '遗漏了谓词"{w}"。',
        "extra_pred": '"{w}"不是谓词。',
        "unmarked_pred": '谓词"{w}"没有用@@和##标出。',
        "pred_format": "谓词标记格式错误。",
        "arg_format": "论元标记格式错误。",
        "text": "输出文本与原文不一致。",
        "relabel": '论元"{w}"应标注为{gold}而不是{pred}。',
        "boundary": '论元"{w}"的边界不正确，应为"{g}"。',
        "missing_arg": '遗漏了论元"{w}"（{gold}）。',
        "extra_arg": '"{w}"不应标注为{pred}。',
    },
}

_FORMAT_KINDS = {DeviationKind.MALFORMED_TAG, DeviationKind.UNBALANCED_TAG,
                 DeviationKind.MULTI_TOKEN_PREDICATE, DeviationKind.OVERLAPPING_ARGUMENTS}


def _words(s: Sentence, span: Span) -> str:
    return s.language.separator.join(s.words[span.start:span.end + 1])


def _sep(language: Language) -> str:
    return " " if language is Language.ENGLISH else ""


def describe_predicate_issues(s: Sentence, gold: set[int], predicted: set[int],
                              deviations: Sequence[Deviation]) -> str:
    """Issue text for a predicate prediction; empty when it matches gold."""
    ph = _PHRASES[s.language]
    out = []
    if any(d.kind is DeviationKind.TEXT_MISMATCH for d in deviations):
        out.append(ph["text"])
    if any(d.kind in _FORMAT_KINDS for d in deviations):
        out.append(ph["pred_format"])
    out += [ph["missing_pred"].format(w=s.words[p]) for p in sorted(gold - predicted)]
    out += [ph["extra_pred"].format(w=s.words[p]) for p in sorted(predicted - gold)]
    return _sep(s.language).join(out)


def describe_argument_issues(s: Sentence, gold: PredicateArgumentStructure,
                             predicted: Sequence[ArgumentAnnotation],
                             deviations: Sequence[Deviation]) -> str:
    ph = _PHRASES[s.language]
    out = []
    if any(d.kind is DeviationKind.MISSING_PREDICATE for d in deviations):
        out.append(ph["unmarked_pred"].format(w=gold.predicate.surface))
    if any(d.kind is DeviationKind.TEXT_MISMATCH for d in deviations):
        out.append(ph["text"])
    if any(d.kind in _FORMAT_KINDS or d.kind is DeviationKind.UNKNOWN_ROLE for d in deviations):
        out.append(ph["arg_format"])
    pred_set = {(a.span, a.role.key) for a in predicted}
    gold_set = {(a.span, a.role.key) for a in gold.arguments}
    explained: set = set()
    for g in sorted(gold.arguments, key=lambda a: a.span):
        if (g.span, g.role.key) in pred_set:
            continue
        same_span = next((p for p in predicted if p.span == g.span), None)
        near = next((p for p in predicted if p.role.key == g.role.key and p.span.overlaps(g.span)
                     and (p.span, p.role.key) not in gold_set), None)
        if same_span is not None:
            out.append(ph["relabel"].format(w=_words(s, g.span), gold=g.role.rendered,
                                            pred=same_span.role.rendered))
            explained.add((same_span.span, same_span.role.key))
        elif near is not None:
            out.append(ph["boundary"].format(w=_words(s, near.span), g=_words(s, g.span)))
            explained.add((near.span, near.role.key))
        else:
            out.append(ph["missing_arg"].format(w=_words(s, g.span), gold=g.role.rendered))
    for p in sorted(predicted, key=lambda a: a.span):
        key = (p.span, p.role.key)
        if key not in gold_set and key not in explained:
            out.append(ph["extra_arg"].format(w=_words(s, p.span), pred=p.role.rendered))
    return _sep(s.language).join(out)
