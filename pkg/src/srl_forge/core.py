"""Domain types shared by every stage: sentences, spans, roles and
predicate-argument structures."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional


class Language(str, enum.Enum):
    ENGLISH = "en"
    CHINESE = "zh"

    @property
    def separator(self) -> str:
        return " " if self is Language.ENGLISH else ""

    @classmethod
    def parse(cls, value: "str | Language") -> "Language":
        if isinstance(value, Language):
            return value
        key = value.strip().lower()
        aliases = {"en": cls.ENGLISH, "english": cls.ENGLISH,
                   "zh": cls.CHINESE, "chinese": cls.CHINESE}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown language {value!r}") from None


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    lemma: Optional[str] = None

    def __post_init__(self):
        if not self.surface or any(ch.isspace() for ch in self.surface):
            raise ValueError(f"token surface must be non-empty without whitespace: {self.surface!r}")
        if self.index < 0:
            raise ValueError("token index must be non-negative")


@dataclass(frozen=True)
class Sentence:
    id: str
    language: Language
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        for position, token in enumerate(self.tokens):
            if token.index != position:
                raise ValueError(
                    f"sentence {self.id!r}: token {token.surface!r} has index "
                    f"{token.index}, expected {position}")

    @classmethod
    def from_words(cls, id: str, words: Iterable[str],
                   language: "Language | str" = Language.ENGLISH,
                   lemmas: Optional[Iterable[Optional[str]]] = None) -> "Sentence":
        words = list(words)
        lemmas = list(lemmas) if lemmas is not None else [None] * len(words)
        tokens = tuple(Token(i, w, l) for i, (w, l) in enumerate(zip(words, lemmas)))
        return cls(id, Language.parse(language), tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def text(self) -> str:
        return self.language.separator.join(self.words)


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int  # inclusive

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid span {self.start}..{self.end}")

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    def contains(self, index: int) -> bool:
        return self.start <= index <= self.end

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end

    def __str__(self) -> str:
        return f"{self.start}..{self.end}"


class RolePrefix(str, enum.Enum):
    NONE = ""
    REFERENCE = "R-"
    CONTINUATION = "C-"


class RoleKind(str, enum.Enum):
    CORE = "core"
    ADJUNCT = "adjunct"


# AM-TMP / ARGM-LOC style bases keep their internal hyphen.
_BASE_RE = re.compile(r"^[A-Z0-9]+(?:-[A-Z0-9]+)*$")
_CORE_RE = re.compile(r"^(?:A[0-5]|ARG[0-5]|ARGA)$")


@dataclass(frozen=True, order=True)
class RoleLabel:
    base: str
    prefix: RolePrefix = RolePrefix.NONE

    def __post_init__(self):
        if not _BASE_RE.match(self.base):
            raise ValueError(f"role base must be uppercase alphanumeric: {self.base!r}")

    @property
    def kind(self) -> RoleKind:
        return RoleKind.CORE if _CORE_RE.match(self.base) else RoleKind.ADJUNCT

    @property
    def rendered(self) -> str:
        return self.prefix.value + self.base

    def __str__(self) -> str:
        return self.rendered

    @property
    def key(self) -> str:
        """Normalized matching key: ARG0 and A0 compare equal, prefix kept."""
        return self.prefix.value + normalize_base(self.base)

    @classmethod
    def parse(cls, text: str) -> "RoleLabel":
        label = text.strip().upper()
        prefix = RolePrefix.NONE
        for candidate in (RolePrefix.REFERENCE, RolePrefix.CONTINUATION):
            rest = label[len(candidate.value):]
            if label.startswith(candidate.value) and _BASE_RE.match(rest or "-"):
                prefix, label = candidate, rest
                break
        return cls(label, prefix)


def normalize_base(base: str) -> str:
    base = base.upper()
    if base.startswith("ARG"):
        return "A" + base[3:]
    return base


def is_valid_label(text: str) -> bool:
    try:
        RoleLabel.parse(text)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class PredicateInstance:
    token: int
    surface: str
    lemma: str

    @classmethod
    def at(cls, sentence: Sentence, index: int, lemma: Optional[str] = None) -> "PredicateInstance":
        tok = sentence.tokens[index]
        return cls(index, tok.surface, lemma or tok.lemma or tok.surface)


@dataclass(frozen=True)
class ArgumentAnnotation:
    span: Span
    role: RoleLabel


@dataclass(frozen=True)
class PredicateArgumentStructure:
    predicate: PredicateInstance
    arguments: tuple[ArgumentAnnotation, ...] = ()

    def __post_init__(self):
        if not isinstance(self.arguments, tuple):
            object.__setattr__(self, "arguments", tuple(self.arguments))

    def sorted(self) -> "PredicateArgumentStructure":
        args = tuple(sorted(self.arguments, key=lambda a: (a.span, a.role.rendered)))
        return PredicateArgumentStructure(self.predicate, args)


@dataclass(frozen=True, order=True)
class SRLTriple:
    predicate_token: int
    argument: Span
    role: RoleLabel


def triples_of(structures: Iterable[PredicateArgumentStructure]) -> set[SRLTriple]:
    return {
        SRLTriple(s.predicate.token, arg.span, arg.role)
        for s in structures
        for arg in s.arguments
    }


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    message: str

    def __str__(self) -> str:
        return self.message


class InvalidStructure(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(v.message for v in violations))


def validate_structure(s: PredicateArgumentStructure, n: int) -> list[Violation]:
    """Check a structure against a sentence of length ``n``.

    Returns an empty list when every invariant holds; violations are data.
    """
    out: list[Violation] = []
    pred = s.predicate.token
    if not 0 <= pred < n:
        out.append(Violation("predicate.token", "in-range",
                             f"predicate index {pred} outside sentence of length {n}"))
    for i, arg in enumerate(s.arguments):
        if arg.span.end >= n:
            out.append(Violation(f"arguments[{i}].span", "in-range",
                                 f"argument span {arg.span} outside sentence of length {n}"))
        if arg.span.contains(pred):
            out.append(Violation(f"arguments[{i}].span", "excludes-predicate",
                                 "argument covers predicate"))
    for i, a in enumerate(s.arguments):
        for j in range(i + 1, len(s.arguments)):
            b = s.arguments[j]
            if a.span.overlaps(b.span):
                at = max(a.span.start, b.span.start)
                out.append(Violation(f"arguments[{j}].span", "disjoint",
                                     f"spans overlap at token {at}"))
    return out


def check_structure(s: PredicateArgumentStructure, n: int) -> None:
    violations = validate_structure(s, n)
    if violations:
        raise InvalidStructure(violations)


@dataclass(frozen=True)
class GoldSentence:
    sentence: Sentence
    structures: tuple[PredicateArgumentStructure, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.structures, tuple):
            object.__setattr__(self, "structures", tuple(self.structures))

    @property
    def predicate_tokens(self) -> set[int]:
        return {s.predicate.token for s in self.structures}

    def structure_for(self, token: int) -> Optional[PredicateArgumentStructure]:
        for s in self.structures:
            if s.predicate.token == token:
                return s
        return None
