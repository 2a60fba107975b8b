"""Exact-match precision/recall/F1 over SRL triples.

A predicted triple counts as correct only when the predicate token, both
argument boundaries and the role agree with a gold triple.  Roles compare
on :attr:`RoleLabel.key`, so ``A0`` and ``ARG0`` are the same role while
``R-A0`` and ``C-A0`` stay distinct.  Continuation fragments are scored one
by one.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .core import RoleLabel, Span, SRLTriple


class ScoreMode(str, enum.Enum):
    SPAN = "span"
    DEPENDENCY = "dep"


class DependencyModeSpanTooWide(ValueError):
    pass


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class ScoreReport:
    correct: int = 0
    predicted: int = 0
    gold: int = 0
    per_role: dict[str, tuple[int, int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.correct > min(self.predicted, self.gold):
            raise ValueError("correct cannot exceed predicted or gold")

    @property
    def precision(self) -> float:
        return _pct(self.correct, self.predicted)

    @property
    def recall(self) -> float:
        return _pct(self.correct, self.gold)

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.recall)

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        roles = dict(self.per_role)
        for role, (c, p, g) in other.per_role.items():
            c0, p0, g0 = roles.get(role, (0, 0, 0))
            roles[role] = (c0 + c, p0 + p, g0 + g)
        return ScoreReport(self.correct + other.correct, self.predicted + other.predicted,
                           self.gold + other.gold, roles)

    def to_dict(self, per_role: bool = True) -> dict:
        out = {"correct": self.correct, "predicted": self.predicted, "gold": self.gold,
               "precision": round(self.precision, 2), "recall": round(self.recall, 2),
               "f1": round(self.f1, 2)}
        if per_role:
            out["per_role"] = {}
            for role in sorted(self.per_role):
                c, p, g = self.per_role[role]
                pr, rc = _pct(c, p), _pct(c, g)
                out["per_role"][role] = {"correct": c, "predicted": p, "gold": g,
                                         "precision": round(pr, 2), "recall": round(rc, 2),
                                         "f1": round(_f1(pr, rc), 2)}
        return out

    def to_json(self, per_role: bool = True) -> str:
        return json.dumps(self.to_dict(per_role), sort_keys=True)

    def table(self, per_role: bool = False) -> str:
        rows = [("overall", self.correct, self.predicted, self.gold)]
        if per_role:
            rows += [(role, *self.per_role[role]) for role in sorted(self.per_role)]
        lines = [f"{'':<10} {'P':>7} {'R':>7} {'F1':>7} {'#corr':>7} {'#pred':>7} {'#gold':>7}"]
        for name, c, p, g in rows:
            pr, rc = _pct(c, p), _pct(c, g)
            lines.append(f"{name:<10} {pr:>7.2f} {rc:>7.2f} {_f1(pr, rc):>7.2f} {c:>7} {p:>7} {g:>7}")
        return "\n".join(lines)


def _key(t: SRLTriple, mode: ScoreMode) -> tuple:
    if mode is ScoreMode.DEPENDENCY and t.argument.width != 1:
        raise DependencyModeSpanTooWide(
            f"argument {t.argument} of predicate {t.predicate_token} spans {t.argument.width} tokens")
    return t.predicate_token, t.argument.start, t.argument.end, t.role.key


def _count(gold_keys: set, pred_keys: set) -> ScoreReport:
    roles: Counter = Counter()
    for k in gold_keys:
        roles[(k[-1], "g")] += 1
    for k in pred_keys:
        roles[(k[-1], "p")] += 1
    hit = gold_keys & pred_keys
    for k in hit:
        roles[(k[-1], "c")] += 1
    names = {r for r, _ in roles}
    per_role = {r: (roles[(r, "c")], roles[(r, "p")], roles[(r, "g")]) for r in names}
    return ScoreReport(len(hit), len(pred_keys), len(gold_keys), per_role)


def score(gold: Iterable[SRLTriple], pred: Iterable[SRLTriple],
          mode: ScoreMode = ScoreMode.SPAN) -> ScoreReport:
    """Score one sentence (or any set of triples sharing a token space)."""
    mode = ScoreMode(mode)
    return _count({_key(t, mode) for t in gold}, {_key(t, mode) for t in pred})


def score_corpus(gold: Mapping[str, Iterable[SRLTriple]], pred: Mapping[str, Iterable[SRLTriple]],
                 mode: ScoreMode = ScoreMode.SPAN) -> ScoreReport:
    """Aggregate counts over sentences keyed by id; missing ids score as empty."""
    mode = ScoreMode(mode)
    gold_keys = {(sid,) + _key(t, mode) for sid, ts in gold.items() for t in ts}
    pred_keys = {(sid,) + _key(t, mode) for sid, ts in pred.items() for t in ts}
    return _count(gold_keys, pred_keys)


_V = RoleLabel.parse("V")


def predicate_triples(tokens: Iterable[int]) -> set[SRLTriple]:
    """Predicates as single-token triples with role V, for predicate-level F1."""
    return {SRLTriple(t, Span(t, t), _V) for t in tokens}


def _metrics(x) -> tuple[float, float, float]:
    if isinstance(x, Mapping):
        return x["precision"], x["recall"], x["f1"]
    return x.precision, x.recall, x.f1


def compare_reports(a, b) -> dict:
    """Signed differences a - b, overall and for every role seen in either."""
    pa, ra, fa = _metrics(a)
    pb, rb, fb = _metrics(b)
    out = {"precision": round(pa - pb, 2), "recall": round(ra - rb, 2), "f1": round(fa - fb, 2)}
    roles_a: Optional[dict] = getattr(a, "per_role", None)
    roles_b: Optional[dict] = getattr(b, "per_role", None)
    if roles_a is not None and roles_b is not None:
        out["per_role"] = {}
        for role in sorted(set(roles_a) | set(roles_b)):
            ca, pa_, ga = roles_a.get(role, (0, 0, 0))
            cb, pb_, gb = roles_b.get(role, (0, 0, 0))
            pra, rca = _pct(ca, pa_), _pct(ca, ga)
            prb, rcb = _pct(cb, pb_), _pct(cb, gb)
            out["per_role"][role] = {"precision": round(pra - prb, 2), "recall": round(rca - rcb, 2),
                                     "f1": round(_f1(pra, rca) - _f1(prb, rcb), 2)}
    return out
