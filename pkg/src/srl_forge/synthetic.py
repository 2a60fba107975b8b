"""Seeded synthetic corpora for tests, demos and the acceptance suite."""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .core import (
    ArgumentAnnotation,
    GoldSentence,
    Language,
    PredicateArgumentStructure,
    PredicateInstance,
    RoleLabel,
    Sentence,
    Span,
)

# surfaces the bundled English lexicon resolves
VERBS = ("bought", "buys", "needs", "needed", "spent", "spends", "thinks", "thought", "went",
         "goes", "has", "had", "risked", "risks", "was", "is", "campaigned", "buying")
FILLER = ("the", "country", "sugar", "company", "market", "price", "year", "bank", "plan",
          "a", "of", "in", "recently", "tons", "200,000", "new", "old", "city", "goal", ",",
          "and", "that", "this", "for", "report", "team", "money", "quickly", "school", "it")
ROLES = ("A0", "A1", "A2", "A3", "ARG4", "ADV", "TMP", "LOC", "MNR", "DIS", "R-A0", "C-A1", "AM-NEG")
ZH_VERBS = ("追加", "投资", "购买", "需要")
ZH_FILLER = ("集团", "在", "上海", "公司", "资金", "去年", "新", "的", "市场", "项目", "我们", "大量")


def random_arguments(rng: random.Random, n: int, pred: int, roles: Sequence[str] = ROLES,
                     density: float = 0.35, max_width: int = 4) -> tuple[ArgumentAnnotation, ...]:
    """Disjoint spans that avoid ``pred``."""
    args = []
    i = 0
    while i < n:
        if i == pred or rng.random() >= density:
            i += 1
            continue
        width = rng.randint(1, max_width)
        end = i
        while end + 1 < n and end + 1 - i < width and end + 1 != pred:
            end += 1
        args.append(ArgumentAnnotation(Span(i, end), RoleLabel.parse(rng.choice(roles))))
        i = end + 1
    return tuple(args)


def random_gold(rng: random.Random, sid: str, language: Language = Language.ENGLISH,
                min_len: int = 4, max_len: int = 14, max_preds: int = 3,
                roles: Sequence[str] = ROLES, min_args: int = 0) -> GoldSentence:
    verbs, filler = (VERBS, FILLER) if language is Language.ENGLISH else (ZH_VERBS, ZH_FILLER)
    n = rng.randint(min_len, max_len)
    words = [rng.choice(filler) for _ in range(n)]
    k = rng.randint(0, min(max_preds, n))
    preds = sorted(rng.sample(range(n), k))
    for p in preds:
        words[p] = rng.choice(verbs)
    s = Sentence.from_words(sid, words, language)
    structures = []
    for p in preds:
        args = random_arguments(rng, n, p, roles)
        while len(args) < min_args:
            args = random_arguments(rng, n, p, roles, density=0.6)
        structures.append(PredicateArgumentStructure(PredicateInstance.at(s, p), args))
    return GoldSentence(s, tuple(structures))


def gold_corpus(n: int, seed: int = 0, language: "Language | str" = Language.ENGLISH,
                **kwargs) -> list[GoldSentence]:
    rng = random.Random(seed)
    language = Language.parse(language)
    return [random_gold(rng, f"syn-{i:04d}", language, **kwargs) for i in range(n)]


def corruption_fixture(n: int = 40, seed: int = 7) -> list[GoldSentence]:
    """Sentences with 1-2 predicates, each with at least two arguments."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        g = random_gold(rng, f"cor-{len(out):03d}", min_len=7, max_len=12, max_preds=2, min_args=2)
        if g.structures:
            out.append(g)
    return out


def hit_rate_fixture(total: int, missed: int, seed: int = 0, per_sentence: int = 7,
                     known: Sequence[str] = VERBS) -> list[tuple[Sentence, list[int]]]:
    """Sentences whose gold predicates number ``total``; exactly ``missed`` of
    them are words the bundled lexicon cannot resolve."""
    if not 0 <= missed <= total:
        raise ValueError("missed must lie in [0, total]")
    rng = random.Random(seed)
    miss_slots = set(rng.sample(range(total), missed))
    out = []
    done = 0
    sid = 0
    while done < total:
        k = min(per_sentence, total - done)
        words: list[str] = []
        preds = []
        for j in range(k):
            words.append(rng.choice(FILLER[:12]))
            preds.append(len(words))
            if done + j in miss_slots:
                words.append(f"zorbled{done + j}")
            else:
                words.append(rng.choice(known))
        words.append(".")
        out.append((Sentence.from_words(f"hit-{sid:05d}", words), preds))
        done += k
        sid += 1
    return out


def table6_sentence() -> GoldSentence:
    s = Sentence.from_words("table6", "That country recently bought 200,000 tons of sugar .".split())
    args = (ArgumentAnnotation(Span(0, 1), RoleLabel.parse("A0")),
            ArgumentAnnotation(Span(2, 2), RoleLabel.parse("ADV")),
            ArgumentAnnotation(Span(4, 7), RoleLabel.parse("A1")))
    return GoldSentence(s, (PredicateArgumentStructure(PredicateInstance.at(s, 3, "buy"), args),))


def campaign_sentence(gold: Optional[bool] = True) -> GoldSentence:
    s = Sentence.from_words("campaign", "What was the , purpose and goal of this campaign ?".split())
    structures = tuple(PredicateArgumentStructure(PredicateInstance.at(s, p)) for p in (1, 4, 9))
    return GoldSentence(s, structures if gold else ())
