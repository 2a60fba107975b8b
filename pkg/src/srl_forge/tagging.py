"""Inline-tag codec for predicate and argument annotations.

Predicates are wrapped ``@@word##``; arguments ``<LABEL>words</LABEL>``.
Parsing is total: anything irregular in a model response becomes a
:class:`Deviation` and the best-effort result is still returned.

Alignment of a response to the sentence is a token-level longest common
subsequence that ignores whitespace.  The response characters are segmented
jointly with the alignment, so ``sugar.`` still matches the tokens
``sugar`` and ``.``, and unspaced Chinese text is split on the sentence's
own tokenization.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import (
    ArgumentAnnotation,
    Language,
    PredicateArgumentStructure,
    RoleLabel,
    Sentence,
    Span,
    check_structure,
    normalize_base,
)

PRED_OPEN = "@@"
PRED_CLOSE = "##"

_TAG_RE = re.compile(r"@@|##|<(/?)([^<>\s]*)>")
_LABEL_RE = re.compile(r"^(?:[RC]-)?[A-Z0-9]+(?:-[A-Z0-9]+)*$")
_TAG_CHARS = re.compile(r"[<>@#]")
_LITERAL_TAG_RE = re.compile(r"@@|##|</?[A-Za-z0-9-]+>")


class Stage(str, enum.Enum):
    PREDICATE = "predicate"
    ARGUMENT = "argument"


class DeviationKind(str, enum.Enum):
    TEXT_MISMATCH = "TextMismatch"
    UNBALANCED_TAG = "UnbalancedTag"
    MALFORMED_TAG = "MalformedTag"
    UNKNOWN_ROLE = "UnknownRole"
    MULTI_TOKEN_PREDICATE = "MultiTokenPredicate"
    MISSING_PREDICATE = "MissingPredicate"
    OVERLAPPING_ARGUMENTS = "OverlappingArguments"


@dataclass(frozen=True)
class Deviation:
    kind: DeviationKind
    message: str
    location: Optional[int] = None

    def __post_init__(self):
        if not self.message:
            raise ValueError("deviation message must be non-empty")

    def __str__(self) -> str:
        where = f" (at {self.location})" if self.location is not None else ""
        return f"{self.kind.value}: {self.message}{where}"


@dataclass(frozen=True)
class TaggedText:
    text: str
    stage: Stage

    def __str__(self) -> str:
        return self.text


def tag_hazards(sentence: Sentence) -> list[str]:
    """Reasons a sentence cannot be carried through the tag grammar."""
    out = []
    text = sentence.text
    if _LITERAL_TAG_RE.search(text):
        out.append(f"sentence {sentence.id} contains a literal tag sequence")
    for tok in sentence.tokens:
        if tok.surface[0] in "@#<>" or tok.surface[-1] in "@#<>":
            out.append(f"sentence {sentence.id}: token {tok.index} {tok.surface!r} "
                       "starts or ends with a tag character")
    return out


# rendering

def render_predicates(s: Sentence, preds: Iterable[int]) -> TaggedText:
    preds = set(preds)
    for p in preds:
        if not 0 <= p < len(s):
            raise IndexError(f"predicate index {p} outside sentence {s.id}")
    words = [f"{PRED_OPEN}{w}{PRED_CLOSE}" if i in preds else w for i, w in enumerate(s.words)]
    return TaggedText(s.language.separator.join(words), Stage.PREDICATE)


def render_arguments(s: Sentence, structure: PredicateArgumentStructure) -> TaggedText:
    check_structure(structure, len(s))
    words = list(s.words)
    p = structure.predicate.token
    words[p] = f"{PRED_OPEN}{words[p]}{PRED_CLOSE}"
    for arg in structure.arguments:
        label = arg.role.rendered
        words[arg.span.start] = f"<{label}>" + words[arg.span.start]
        words[arg.span.end] = words[arg.span.end] + f"</{label}>"
    return TaggedText(s.language.separator.join(words), Stage.ARGUMENT)


# parsing

@dataclass
class _Segment:
    offset: int
    label: Optional[str] = None
    closed: bool = False
    dropped: bool = False
    chars: list[int] = field(default_factory=list)


@dataclass
class _Analysis:
    deviations: list[Deviation]
    pred_segments: list[_Segment]
    arg_segments: list[_Segment]
    token_seg: dict[int, tuple[Optional[int], Optional[int]]]  # token -> (pred seg, arg seg)
    char_token: list[Optional[int]]


def _lex(raw: str):
    pos = 0
    for m in _TAG_RE.finditer(raw):
        if m.start() > pos:
            yield "text", raw[pos:m.start()], pos, m
        yield "tag", m.group(0), m.start(), m
        pos = m.end()
    if pos < len(raw):
        yield "text", raw[pos:], pos, None


def _analyze(raw: str, s: Sentence) -> _Analysis:
    devs: list[Deviation] = []
    chars: list[str] = []
    offsets: list[int] = []
    pctx: list[Optional[int]] = []
    actx: list[Optional[int]] = []
    breaks = {0}
    preds: list[_Segment] = []
    args: list[_Segment] = []
    open_pred: Optional[int] = None
    open_arg: Optional[int] = None

    for kind, value, offset, m in _lex(raw):
        if kind == "text":
            for k, ch in enumerate(value):
                if ch.isspace():
                    breaks.add(len(chars))
                    continue
                chars.append(ch)
                offsets.append(offset + k)
                pctx.append(open_pred)
                actx.append(open_arg)
            continue
        breaks.add(len(chars))
        if value == PRED_OPEN:
            after = raw[m.end():m.end() + 1]
            if not after or after.isspace():
                devs.append(Deviation(DeviationKind.MALFORMED_TAG,
                                      "empty predicate tag '@@' with no word attached", offset))
                continue
            if open_pred is not None:
                preds[open_pred].dropped = True
                devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                                      "predicate tag '@@' opened but never closed with '##'",
                                      preds[open_pred].offset))
            preds.append(_Segment(offset))
            open_pred = len(preds) - 1
        elif value == PRED_CLOSE:
            if open_pred is None:
                devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                                      "'##' without a preceding '@@'", offset))
            else:
                preds[open_pred].closed = True
                open_pred = None
        else:
            closing, label = m.group(1) == "/", m.group(2)
            if not _LABEL_RE.match(label):
                devs.append(Deviation(DeviationKind.MALFORMED_TAG,
                                      f"malformed tag {value!r}", offset))
                continue
            if not closing:
                if open_arg is not None:
                    args[open_arg].dropped = True
                    devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                                          f"<{args[open_arg].label}> is never closed",
                                          args[open_arg].offset))
                args.append(_Segment(offset, label))
                open_arg = len(args) - 1
            elif open_arg is None:
                devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                                      f"</{label}> has no matching opening tag", offset))
            elif args[open_arg].label != label:
                seg = args[open_arg]
                seg.dropped = True
                devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                                      f"<{seg.label}> is never closed", seg.offset))
                devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                                      f"</{label}> has no matching opening tag", offset))
                open_arg = None
            else:
                args[open_arg].closed = True
                open_arg = None

    if open_pred is not None:
        preds[open_pred].dropped = True
        devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                              "predicate tag '@@' opened but never closed with '##'",
                              preds[open_pred].offset))
    if open_arg is not None:
        args[open_arg].dropped = True
        devs.append(Deviation(DeviationKind.UNBALANCED_TAG,
                              f"<{args[open_arg].label}> is never closed", args[open_arg].offset))

    for c, seg_id in enumerate(pctx):
        if seg_id is not None:
            preds[seg_id].chars.append(c)
    for c, seg_id in enumerate(actx):
        if seg_id is not None:
            args[seg_id].chars.append(c)

    char_token, matched = _align("".join(chars), breaks, s.words)

    # unmatched response text, grouped into runs not crossing a break
    c = 0
    while c < len(chars):
        if char_token[c] is not None:
            c += 1
            continue
        start = c
        c += 1
        while c < len(chars) and char_token[c] is None and c not in breaks:
            c += 1
        piece = "".join(chars[start:c])
        if _TAG_CHARS.search(piece):
            devs.append(Deviation(DeviationKind.MALFORMED_TAG,
                                  f"stray tag fragment {piece!r}", offsets[start]))
        else:
            devs.append(Deviation(DeviationKind.TEXT_MISMATCH,
                                  f"unexpected text {piece!r} not in the original sentence",
                                  offsets[start]))
    for j, word in enumerate(s.words):
        if j not in matched:
            devs.append(Deviation(DeviationKind.TEXT_MISMATCH,
                                  f"token {word!r} (position {j}) is missing from the output"))

    token_seg = {j: (pctx[c0], actx[c0]) for j, c0 in matched.items()}
    return _Analysis(devs, preds, args, token_seg, char_token)


def _align(text: str, breaks: set[int], words: list[str]):
    """Token-level LCS of ``words`` against whitespace-free ``text``.

    A word may match only a run of characters containing no break (whitespace
    or tag).  Returns per-character token ids and a map token -> first char.
    """
    C, n = len(text), len(words)
    next_break = [C] * (C + 1)
    nb = C
    for p in range(C, -1, -1):
        next_break[p] = nb
        if p in breaks and p > 0:
            nb = p
    # next_break[p]: first break strictly after p
    lens = [len(w) for w in words]
    best = [[0] * (n + 1) for _ in range(C + 1)]
    for p in range(C - 1, -1, -1):
        row, below = best[p], best[p + 1]
        limit = next_break[p]
        for j in range(n - 1, -1, -1):
            v = row[j + 1]
            if below[j] > v:
                v = below[j]
            L = lens[j]
            if p + L <= limit and text.startswith(words[j], p):
                m = 1 + best[p + L][j + 1]
                if m > v:
                    v = m
            row[j] = v

    char_token: list[Optional[int]] = [None] * C
    matched: dict[int, int] = {}
    p = j = 0
    while p < C and j < n:
        L = lens[j]
        here = best[p][j]
        if p + L <= next_break[p] and text.startswith(words[j], p) and 1 + best[p + L][j + 1] == here:
            for c in range(p, p + L):
                char_token[c] = j
            matched[j] = p
            p, j = p + L, j + 1
        elif best[p + 1][j] == here:
            p += 1
        else:
            j += 1
    return char_token, matched


def _segment_tokens(seg: _Segment, char_token: list[Optional[int]]) -> tuple[list[int], bool]:
    toks: list[int] = []
    unmatched = False
    for c in seg.chars:
        j = char_token[c]
        if j is None:
            unmatched = True
        elif not toks or toks[-1] != j:
            toks.append(j)
    return toks, unmatched


def _predicates(an: _Analysis, s: Sentence) -> set[int]:
    out: set[int] = set()
    for seg in an.pred_segments:
        if seg.dropped or not seg.closed:
            continue
        if not seg.chars:
            an.deviations.append(Deviation(DeviationKind.MALFORMED_TAG,
                                           "empty predicate tag '@@##'", seg.offset))
            continue
        toks, _ = _segment_tokens(seg, an.char_token)
        if len(toks) > 1:
            words = " ".join(s.words[j] for j in toks)
            an.deviations.append(Deviation(DeviationKind.MULTI_TOKEN_PREDICATE,
                                           f"predicate tag spans several tokens: {words!r}",
                                           seg.offset))
        elif toks:
            out.add(toks[0])
    return out


def role_class(label: "RoleLabel | str") -> str:
    """Key for role-inventory membership: ARG/A spelling, R-/C- and AM- ignored."""
    base = label.base if isinstance(label, RoleLabel) else RoleLabel.parse(label).base
    base = normalize_base(base)
    return base[3:] if base.startswith("AM-") else base


def parse_predicates(t: str, s: Sentence) -> tuple[set[int], list[Deviation]]:
    an = _analyze(t, s)
    for seg in an.arg_segments:
        an.deviations.append(Deviation(DeviationKind.MALFORMED_TAG,
                                       f"argument tag <{seg.label}> in predicate output",
                                       seg.offset))
    preds = _predicates(an, s)
    return preds, _ordered(an.deviations)


def parse_arguments(t: str, s: Sentence, pred: int,
                    allowed_roles: Optional[Iterable["RoleLabel | str"]] = None,
                    ) -> tuple[list[ArgumentAnnotation], list[Deviation]]:
    an = _analyze(t, s)
    preds = _predicates(an, s)
    if pred not in preds:
        word = s.words[pred] if 0 <= pred < len(s) else "?"
        an.deviations.append(Deviation(DeviationKind.MISSING_PREDICATE,
                                       f"predicate {word!r} (position {pred}) is not tagged with @@ and ##"))
    for other in sorted(preds - {pred}):
        an.deviations.append(Deviation(DeviationKind.MALFORMED_TAG,
                                       f"unexpected predicate tag on {s.words[other]!r} (position {other})"))
    allowed = None if allowed_roles is None else {role_class(r) for r in allowed_roles}

    accepted: list[ArgumentAnnotation] = []
    for seg in an.arg_segments:
        if seg.dropped or not seg.closed:
            continue
        if not seg.chars:
            an.deviations.append(Deviation(DeviationKind.MALFORMED_TAG,
                                           f"empty argument <{seg.label}>", seg.offset))
            continue
        toks, _ = _segment_tokens(seg, an.char_token)
        if not toks:
            continue
        role = RoleLabel.parse(seg.label)
        span = Span(min(toks), max(toks))
        if allowed is not None and role_class(role) not in allowed:
            an.deviations.append(Deviation(DeviationKind.UNKNOWN_ROLE,
                                           f"role {role.rendered} is not in the role set of this predicate",
                                           seg.offset))
        if span.contains(pred):
            an.deviations.append(Deviation(DeviationKind.OVERLAPPING_ARGUMENTS,
                                           f"argument <{role.rendered}> covers the predicate",
                                           seg.offset))
            continue
        clash = next((a for a in accepted if a.span.overlaps(span)), None)
        if clash is not None:
            an.deviations.append(Deviation(DeviationKind.OVERLAPPING_ARGUMENTS,
                                           f"argument <{role.rendered}> at {span} overlaps "
                                           f"<{clash.role.rendered}> at {clash.span}",
                                           seg.offset))
            continue
        accepted.append(ArgumentAnnotation(span, role))
    accepted.sort(key=lambda a: a.span)
    return accepted, _ordered(an.deviations)


def _ordered(devs: list[Deviation]) -> list[Deviation]:
    big = float("inf")
    return sorted(devs, key=lambda d: big if d.location is None else d.location)


def token_equivalent(a: str, b: str) -> bool:
    """Equal up to whitespace."""
    return re.sub(r"\s+", "", a) == re.sub(r"\s+", "", b)
