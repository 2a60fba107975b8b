"""Conversation assembly for the two annotation stages and their
self-correction rounds.

Templates live in ``templates/<language>/`` as UTF-8 text with ``{SLOT}``
placeholders.  A line whose slot is filled with an empty value is dropped,
which is how optional blocks (explanations, previous-round issues) vanish.
"""

from __future__ import annotations

import configparser
import enum
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core import Language, Sentence
from .frame_db import Frameset, RoleSet
from .retrieval_agent import CandidatePredicate
from .tagging import PRED_CLOSE, PRED_OPEN, TaggedText

TEMPLATE_NAMES = ("system", "predicate_task", "predicate_correction",
                  "argument_task", "argument_correction", "stop_phrase")

SLOTS = {
    "predicate_task": ("TEXT", "CANDIDATE_HINT", "EXPLANATIONS"),
    "argument_task": ("TEXT_TAGGED", "ADJUNCT_LIST", "FRAMES"),
    "predicate_correction": ("RESULT", "ISSUES"),
    "argument_correction": ("RESULT", "ISSUES"),
}

_SLOT_RE = re.compile(r"\{([A-Z_]+)\}")


class TemplateSlotMissing(ValueError):
    pass


class Speaker(str, enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("turn text must be non-empty")


@dataclass(frozen=True)
class Conversation:
    turns: tuple[Turn, ...]

    def __post_init__(self):
        turns = tuple(self.turns)
        object.__setattr__(self, "turns", turns)
        if not turns or turns[0].speaker is not Speaker.SYSTEM:
            raise ValueError("conversation must start with a system turn")
        for i, turn in enumerate(turns[1:]):
            expected = Speaker.USER if i % 2 == 0 else Speaker.ASSISTANT
            if turn.speaker is not expected:
                raise ValueError(f"turn {i + 1} should be {expected.value}, got {turn.speaker.value}")

    def __len__(self) -> int:
        return len(self.turns)

    @property
    def last(self) -> Turn:
        return self.turns[-1]

    def append(self, speaker: Speaker, text: str) -> "Conversation":
        return Conversation(self.turns + (Turn(speaker, text),))

    def messages(self) -> list[dict]:
        return [{"role": t.speaker.value, "content": t.text} for t in self.turns]

    @classmethod
    def from_messages(cls, messages: Iterable[Mapping]) -> "Conversation":
        return cls(tuple(Turn(Speaker(m["role"]), m["content"]) for m in messages))


@dataclass(frozen=True)
class TemplateSet:
    language: Language
    system: str
    predicate_task: str
    predicate_correction: str
    argument_task: str
    argument_correction: str
    stop_phrase: str
    fragments: Mapping[str, str]

    def __post_init__(self):
        for name, slots in SLOTS.items():
            text = getattr(self, name)
            for slot in slots:
                count = text.count("{" + slot + "}")
                if count != 1:
                    raise TemplateSlotMissing(
                        f"{self.language.value}/{name}: slot {{{slot}}} appears {count} times")

    def fragment(self, key: str, **values) -> str:
        try:
            return self.fragments[key].format(**values)
        except KeyError as e:
            raise TemplateSlotMissing(f"fragment {key!r} or its field {e} is missing") from None

    def result_label(self, stage: str) -> str:
        return self.fragments[f"{stage}_result_label"]

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "TemplateSet":
        directory = Path(directory)
        texts = {}
        for name in TEMPLATE_NAMES:
            path = directory / f"{name}.txt"
            if not path.exists():
                raise TemplateSlotMissing(f"template file {path} not found")
            texts[name] = path.read_text(encoding="utf-8").strip("\n")
        texts["stop_phrase"] = texts["stop_phrase"].strip()
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read(directory / "fragments.ini", encoding="utf-8")
        fragments = {k: _unquote(v) for k, v in parser["fragments"].items()}
        return cls(language=Language.parse(directory.name), fragments=fragments, **texts)

    @classmethod
    def default(cls, language: "Language | str" = Language.ENGLISH) -> "TemplateSet":
        language = Language.parse(language)
        root = resources.files("srl_forge") / "templates" / language.value
        with resources.as_file(root) as path:
            return cls.load(path)


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] == '"':
        return value[1:-1]
    return value


def fill(template: str, **values: str) -> str:
    """Substitute ``{SLOT}`` placeholders; drop lines whose slot value is empty."""
    lines = []
    for line in template.split("\n"):
        slots = _SLOT_RE.findall(line)
        if any(s not in values for s in slots):
            missing = [s for s in slots if s not in values]
            raise TemplateSlotMissing(f"no value for slot(s) {missing}")
        if any(values[s] == "" for s in slots):
            continue
        lines.append(_SLOT_RE.sub(lambda m: values[m.group(1)], line))
    return "\n".join(lines)


def _sentence_end(text: str) -> str:
    return text.rstrip().rstrip(".。")


# builders

def build_predicate_prompt(s: Sentence, cands: Sequence[CandidatePredicate], hint: TaggedText,
                           tpl: TemplateSet) -> Conversation:
    lines = [tpl.fragment("explanation_line", lemma=c.matched_lemma,
                          explanation=_sentence_end(c.explanation))
             for c in sorted(cands, key=lambda c: c.token)]
    user = fill(tpl.predicate_task, TEXT=s.text, CANDIDATE_HINT=hint.text,
                EXPLANATIONS="\n".join(lines))
    return Conversation((Turn(Speaker.SYSTEM, tpl.system), Turn(Speaker.USER, user)))


def _with_output(prior: Conversation, last_output: str) -> Conversation:
    if prior.last.speaker is Speaker.ASSISTANT:
        if prior.last.text == last_output:
            return prior
        raise ValueError("conversation already ends with a different assistant turn")
    return prior.append(Speaker.ASSISTANT, last_output or " ")


def build_predicate_correction(prior: Conversation, last_output: str, tpl: TemplateSet, *,
                               result: Optional[str] = None, issues: str = "") -> Conversation:
    """Append the model output and the predicate self-correction request.

    ``result`` is the prediction under review (defaults to ``last_output``);
    ``issues`` carries the issues reported in the previous round, if any.
    """
    conv = _with_output(prior, last_output)
    user = fill(tpl.predicate_correction,
                RESULT=last_output if result is None else result, ISSUES=issues.strip())
    return conv.append(Speaker.USER, user)


def build_argument_correction(prior: Conversation, last_output: str, tpl: TemplateSet, *,
                              result: Optional[str] = None, issues: str = "") -> Conversation:
    conv = _with_output(prior, last_output)
    user = fill(tpl.argument_correction,
                RESULT=last_output if result is None else result, ISSUES=issues.strip())
    return conv.append(Speaker.USER, user)


def _predicate_surface(pred_tagged: TaggedText) -> str:
    text = pred_tagged.text
    if text.count(PRED_OPEN) != 1 or text.count(PRED_CLOSE) != 1:
        raise ValueError("argument prompt needs exactly one @@...## predicate")
    start = text.index(PRED_OPEN) + len(PRED_OPEN)
    end = text.index(PRED_CLOSE, start)
    return text[start:end]


def frames_block(surface: str, roles: RoleSet, frames: Sequence[Frameset], tpl: TemplateSet,
                 lemma: Optional[str] = None, pos_hint: Optional[str] = None) -> str:
    sep = tpl.fragments.get("role_separator", ", ")
    if not frames:
        lines = [tpl.fragment("generic_header", surface=surface)]
        lines += [tpl.fragment("role_item", label=l.rendered, description=d) for l, d in roles.core]
        return "\n".join(lines)
    lines = [tpl.fragment("frames_header", surface=surface)]
    if lemma:
        if pos_hint:
            lines.append(tpl.fragment("frames_lemma", lemma=lemma, pos=pos_hint))
        else:
            lines.append(tpl.fragment("frames_lemma_nopos", lemma=lemma))
    for number, fs in enumerate(frames, 1):
        items = sep.join(tpl.fragment("role_item", label=l.rendered, description=d)
                         for l, d in fs.core_roles)
        lines.append(tpl.fragment("frame_line", number=number, roles=items))
    return "\n".join(lines)


def build_argument_prompt(prior: Conversation, pred_tagged: TaggedText, roles: RoleSet,
                          frames: Sequence[Frameset], tpl: TemplateSet, *,
                          lemma: Optional[str] = None, pos_hint: Optional[str] = None) -> Conversation:
    surface = _predicate_surface(pred_tagged)
    adjuncts = "\n".join(tpl.fragment("adjunct_line", label=l.rendered, description=d)
                         for l, d in roles.adjunct)
    user = fill(tpl.argument_task, TEXT_TAGGED=pred_tagged.text, ADJUNCT_LIST=adjuncts,
                FRAMES=frames_block(surface, roles, frames, tpl, lemma, pos_hint))
    if prior.last.speaker is not Speaker.ASSISTANT:
        raise ValueError("argument prompt must follow the predicate-stage answer")
    return prior.append(Speaker.USER, user)
