"""Rule-based retrieval agent: candidate predicates with explanations, and
hit-rate measurement against gold predicates."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple

from .core import PredicateInstance, Sentence
from .frame_db import FrameDB
from .tagging import TaggedText, render_predicates

MISSED_EXAMPLES_CAP = 50


@dataclass(frozen=True)
class CandidatePredicate:
    token: int
    matched_lemma: str
    explanation: str


class Retrieval(NamedTuple):
    candidates: list[CandidatePredicate]
    hint: TaggedText


def candidates(sentence: Sentence, db: FrameDB) -> Retrieval:
    """One candidate per token whose first DB-known lemma candidate matches."""
    found = []
    for tok in sentence.tokens:
        entry = db.match(tok.surface)
        if entry is not None:
            found.append(CandidatePredicate(tok.index, entry.lemma, entry.explanation))
    hint = render_predicates(sentence, [c.token for c in found])
    return Retrieval(found, hint)


@dataclass
class HitRateReport:
    total_predicates: int
    missed: int
    missed_examples: list[tuple[str, int]] = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.missed <= self.total_predicates:
            raise ValueError("missed must lie in [0, total]")

    @property
    def hit_rate(self) -> float:
        if self.total_predicates == 0:
            return 0.0
        hits = self.total_predicates - self.missed
        return round(100.0 * hits / self.total_predicates, 2)

    def line(self) -> str:
        return f"{self.total_predicates} {self.missed} {self.hit_rate:.2f}"

    def table(self) -> str:
        head = f"{'#Predicates':>12} {'#Missed':>8} {'Hit Rate (%)':>13}"
        row = f"{self.total_predicates:>12,} {self.missed:>8,} {self.hit_rate:>13.2f}"
        return head + "\n" + row

    def to_json(self) -> str:
        obj = asdict(self)
        obj["hit_rate"] = self.hit_rate
        obj["missed_examples"] = [list(x) for x in self.missed_examples]
        return json.dumps(obj, ensure_ascii=False)


def hit_rate(corpus: Iterable[tuple[Sentence, Iterable["PredicateInstance | int"]]], db: FrameDB,
             verbose: bool = False) -> HitRateReport:
    """A gold predicate is hit when the agent proposes a candidate at its token."""
    total = missed = 0
    examples: list[tuple[str, int]] = []
    for sentence, gold in corpus:
        proposed = {c.token for c in candidates(sentence, db).candidates}
        for p in gold:
            index = p.token if isinstance(p, PredicateInstance) else int(p)
            total += 1
            if index not in proposed:
                missed += 1
                if verbose or len(examples) < MISSED_EXAMPLES_CAP:
                    examples.append((sentence.id, index))
    return HitRateReport(total, missed, examples)
