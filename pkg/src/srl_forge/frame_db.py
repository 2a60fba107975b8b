"""Searchable knowledge database of predicate explanations and frames.

Lexicons are flat JSON Lines files, one record per line::

    {"lemma": "be", "pos_hint": "verb", "explanation": "...",
     "framesets": [{"id": "be.01", "roles": [{"label": "A1", "desc": "topic"}]}]}

The adjunct inventory is a text file with one ``LABEL: description`` per line.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional, Union

from .core import Language, RoleLabel
from .lemmatizer import lemmatize

log = logging.getLogger(__name__)

SCHEMA = "srl-forge-db/1"

PathLike = Union[str, Path]

GENERIC_CORE_ROLES: tuple[tuple[RoleLabel, str], ...] = (
    (RoleLabel("A0"), "agent, causer or experiencer"),
    (RoleLabel("A1"), "patient or theme"),
    (RoleLabel("A2"), "instrument, benefactive or attribute"),
    (RoleLabel("A3"), "starting point"),
    (RoleLabel("A4"), "ending point"),
    (RoleLabel("A5"), "other"),
)
GLOBAL_CORE_BASES = ("A0", "A1", "A2", "A3", "A4", "A5", "AA")


class MalformedLexicon(ValueError):
    def __init__(self, file: str, line: Optional[int], reason: str):
        self.file, self.line, self.reason = file, line, reason
        where = f"{file}:{line}" if line is not None else file
        super().__init__(f"{where}: {reason}" if file else reason)


class DuplicateFramesetId(ValueError):
    pass


@dataclass(frozen=True)
class Frameset:
    id: str
    core_roles: tuple[tuple[RoleLabel, str], ...]

    def __post_init__(self):
        if not self.core_roles:
            raise ValueError(f"frameset {self.id} has no core roles")
        # The shipped be.01 frame lists A1 twice with different glosses, so
        # uniqueness is per (label, description) pair.
        pairs = [(label.rendered, desc) for label, desc in self.core_roles]
        if len(set(pairs)) != len(pairs):
            raise ValueError(f"frameset {self.id} repeats a role entry")

    def to_json(self) -> dict:
        return {"id": self.id,
                "roles": [{"label": l.rendered, "desc": d} for l, d in self.core_roles]}

    @classmethod
    def from_json(cls, obj: dict) -> "Frameset":
        roles = tuple((RoleLabel.parse(r["label"]), str(r["desc"])) for r in obj["roles"])
        return cls(str(obj["id"]), roles)


@dataclass(frozen=True)
class FrameEntry:
    lemma: str
    explanation: str
    framesets: tuple[Frameset, ...]
    pos_hint: Optional[str] = None

    def __post_init__(self):
        if not self.lemma:
            raise ValueError("frame entry lemma must be non-empty")
        if not self.framesets:
            raise ValueError(f"frame entry {self.lemma!r} has no framesets")

    def to_json(self) -> dict:
        return {"lemma": self.lemma, "pos_hint": self.pos_hint,
                "explanation": self.explanation,
                "framesets": [f.to_json() for f in self.framesets]}

    @classmethod
    def from_json(cls, obj: dict) -> "FrameEntry":
        return cls(lemma=str(obj["lemma"]), explanation=str(obj.get("explanation") or ""),
                   framesets=tuple(Frameset.from_json(f) for f in obj["framesets"]),
                   pos_hint=obj.get("pos_hint"))


class RoleSet(NamedTuple):
    core: list[tuple[RoleLabel, str]]
    adjunct: list[tuple[RoleLabel, str]]

    @property
    def labels(self) -> set[str]:
        return {label.key for label, _ in self.core} | {label.key for label, _ in self.adjunct}


@dataclass(frozen=True)
class FrameDB:
    entries: Mapping[str, FrameEntry]
    adjunct_roles: tuple[tuple[RoleLabel, str], ...] = ()
    language: Language = Language.ENGLISH

    def __post_init__(self):
        labels = [label.rendered for label, _ in self.adjunct_roles]
        if len(set(labels)) != len(labels):
            raise ValueError("adjunct role labels must be unique")
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self.entries

    def lookup(self, lemma: str) -> Optional[FrameEntry]:
        return self.entries.get(lemma)

    def match(self, surface: str) -> Optional[FrameEntry]:
        """First lemmatizer candidate of ``surface`` present in the DB."""
        for cand in lemmatize(surface, self.language):
            entry = self.entries.get(cand)
            if entry is not None:
                return entry
        return None

    def role_set(self, lemma: str) -> RoleSet:
        return role_set(self, lemma)

    def global_labels(self) -> set[str]:
        """The overall label set: every numbered core role plus the adjuncts."""
        out = set(GLOBAL_CORE_BASES)
        out.update(label.key for label, _ in self.adjunct_roles)
        return out

    def without(self, *lemmas: str) -> "FrameDB":
        kept = {k: v for k, v in self.entries.items() if k not in lemmas}
        return FrameDB(kept, self.adjunct_roles, self.language)

    # serialization

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "language": self.language.value,
            "adjunct_roles": [{"label": l.rendered, "desc": d} for l, d in self.adjunct_roles],
            "entries": [self.entries[k].to_json() for k in sorted(self.entries)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True, indent=1) + "\n"

    def save(self, path: PathLike) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> "FrameDB":
        if obj.get("schema") != SCHEMA:
            raise MalformedLexicon("", None, f"unsupported DB schema {obj.get('schema')!r}")
        entries = {}
        for raw in obj["entries"]:
            entry = FrameEntry.from_json(raw)
            entries[entry.lemma] = entry
        adjuncts = tuple((RoleLabel.parse(r["label"]), r["desc"]) for r in obj["adjunct_roles"])
        return cls(entries, adjuncts, Language.parse(obj["language"]))

    @classmethod
    def load(cls, path: PathLike) -> "FrameDB":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise MalformedLexicon(str(path), e.lineno, f"invalid JSON: {e.msg}") from None
        return cls.from_json(obj)


def lookup(db: FrameDB, lemma: str) -> Optional[FrameEntry]:
    return db.lookup(lemma)


def role_set(db: FrameDB, lemma: str) -> RoleSet:
    """Core roles unioned over the lemma's framesets plus the adjunct inventory.

    Unknown lemmas fall back to the generic A0-A5 inventory.
    """
    entry = db.lookup(lemma)
    if entry is None:
        core = list(GENERIC_CORE_ROLES)
    else:
        core = []
        for frameset in entry.framesets:
            for pair in frameset.core_roles:
                if pair not in core:
                    core.append(pair)
    return RoleSet(core, list(db.adjunct_roles))


# building

def read_adjunct_inventory(path: PathLike) -> tuple[tuple[RoleLabel, str], ...]:
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        label, sep, desc = line.partition(":")
        if not sep or not desc.strip():
            raise MalformedLexicon(str(path), lineno, "expected 'LABEL: description'")
        try:
            role = RoleLabel.parse(label)
        except ValueError as e:
            raise MalformedLexicon(str(path), lineno, str(e)) from None
        out.append((role, desc.strip()))
    return tuple(out)


def _parse_record(obj, file: str, lineno: int) -> FrameEntry:
    if not isinstance(obj, dict):
        raise MalformedLexicon(file, lineno, "record is not a JSON object")
    for key in ("lemma", "framesets"):
        if key not in obj:
            raise MalformedLexicon(file, lineno, f"missing field {key!r}")
    try:
        return FrameEntry.from_json(obj)
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedLexicon(file, lineno, str(e)) from None


def read_lexicon(path: PathLike) -> list[FrameEntry]:
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedLexicon(str(path), lineno, f"invalid JSON: {e.msg}") from None
        out.append(_parse_record(obj, str(path), lineno))
    return out


def merge_entries(records: Iterable[FrameEntry]) -> dict[str, FrameEntry]:
    """Merge records sharing a lemma, independent of record order.

    Framesets are deduplicated by id (identical duplicates collapse, differing
    ones raise) and sorted; distinct explanations are joined in frameset order.
    """
    grouped: dict[str, list[FrameEntry]] = {}
    for rec in records:
        grouped.setdefault(rec.lemma, []).append(rec)

    merged = {}
    for lemma, recs in grouped.items():
        by_id: dict[str, Frameset] = {}
        for rec in recs:
            for fs in rec.framesets:
                prior = by_id.get(fs.id)
                if prior is not None and prior != fs:
                    raise DuplicateFramesetId(
                        f"frameset {fs.id!r} defined twice with different roles")
                by_id[fs.id] = fs
        framesets = tuple(by_id[k] for k in sorted(by_id))
        ordered = sorted(recs, key=lambda r: (min(f.id for f in r.framesets), r.explanation))
        explanations: list[str] = []
        for rec in ordered:
            if rec.explanation and rec.explanation not in explanations:
                explanations.append(rec.explanation)
        hints = sorted({r.pos_hint for r in recs if r.pos_hint})
        merged[lemma] = FrameEntry(lemma, "; ".join(explanations), framesets,
                                   hints[0] if hints else None)
    return merged


def build_db(frame_files: Union[PathLike, Iterable[PathLike]], adjunct_inventory: Optional[PathLike] = None,
             language: "Language | str" = Language.ENGLISH) -> FrameDB:
    """Build a FrameDB from a directory (or list) of ``*.jsonl`` lexicon files."""
    if isinstance(frame_files, (str, Path)) and Path(frame_files).is_dir():
        files = sorted(Path(frame_files).glob("*.jsonl"))
        source = str(frame_files)
    elif isinstance(frame_files, (str, Path)):
        files = [Path(frame_files)]
        source = str(frame_files)
    else:
        files = sorted(Path(f) for f in frame_files)
        source = ", ".join(map(str, files))
    records: list[FrameEntry] = []
    for f in files:
        records.extend(read_lexicon(f))
    if not records:
        raise MalformedLexicon(source, None, "no records")
    adjuncts = read_adjunct_inventory(adjunct_inventory) if adjunct_inventory else ()
    db = FrameDB(merge_entries(records), adjuncts, Language.parse(language))
    log.info("built frame DB with %d lemmas from %d files", len(db), len(files))
    return db


def bundled_db(language: "Language | str" = Language.ENGLISH) -> FrameDB:
    """The small lexicon shipped with the package, for demos and tests."""
    language = Language.parse(language)
    root = resources.files("srl_forge") / "data"
    with resources.as_file(root) as path:
        return build_db(path / f"frames_{language.value}",
                        path / f"adjuncts_{language.value}.txt", language)
