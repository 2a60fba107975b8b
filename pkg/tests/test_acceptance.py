"""Acceptance suite: ten criteria, one pass/fail line each in the run summary.

Run directly (``python tests/test_acceptance.py``) or through pytest.
"""

import random
import string
import time
from pathlib import Path

import httpx
import pytest

from srl_forge.core import (
    ArgumentAnnotation,
    Language,
    PredicateArgumentStructure,
    PredicateInstance,
    RoleLabel,
    Sentence,
    Span,
    SRLTriple,
    triples_of,
)
from srl_forge.corpus import ExportConfig, expected_record_count, export_training, gold_triples, write_training
from srl_forge.frame_db import GENERIC_CORE_ROLES, role_set
from srl_forge.llm_backend import (
    Backend,
    BackendConfig,
    CorruptingBackend,
    GoldOracleBackend,
    HttpBackend,
    RateLimited,
    ScriptedBackend,
    TransportError,
)
from srl_forge.pipeline import (
    Annotator,
    PipelineConfig,
    Revision,
    Stop,
    annotate_corpus,
    parse_correction_response,
)
from srl_forge.corrections import MENU
from srl_forge.prompting import Conversation, Speaker, Turn, build_predicate_correction
from srl_forge.retrieval_agent import hit_rate
from srl_forge.scorer import ScoreMode, score, score_corpus
from srl_forge.synthetic import (
    campaign_sentence,
    corruption_fixture,
    gold_corpus,
    hit_rate_fixture,
    random_arguments,
)
from srl_forge.tagging import Stage, parse_arguments, parse_predicates, render_arguments, render_predicates

GOLDEN = Path(__file__).parent / "golden"


def _predicted(results):
    return {r.sentence.id: triples_of(r.structures) for r in results}


# 1

@pytest.mark.parametrize("given", [False, True], ids=["full", "predicates-given"])
def test_criterion_01_oracle_identity(db, given):
    corpus = gold_corpus(50, seed=11)
    start = time.perf_counter()
    results = annotate_corpus(corpus, db, GoldOracleBackend(corpus), PipelineConfig(predicates_given=given))
    report = score_corpus(gold_triples(corpus), _predicted(results))
    elapsed = time.perf_counter() - start
    d = report.to_dict()
    assert report.gold > 0
    assert (d["precision"], d["recall"], d["f1"]) == (100.00, 100.00, 100.00)
    for r, g in zip(results, corpus):
        assert set(r.predicates) == g.predicate_tokens
    assert elapsed < 5.0


# 2

FRAGMENTS = ["@@", "##", "@", "#", "<", ">", "</", "<A0>", "</A0>", "<ADV>", "</ADV>", "<R-A1>",
             "</R-A1>", "A1>", "<AD>", "<>", "</>", "<a0>", " ", " ", "\n", "\t", "sugar", "bought",
             "the", "tons", ".", "，", "集团", "@@@", "###", "<<", ">>", "<C-A1", "</V>"]


def _random_sentence(rng, language=Language.ENGLISH):
    n = rng.randint(1, 12)
    if language is Language.ENGLISH:
        words = ["".join(rng.choices(string.ascii_lowercase + ",.'-0", k=rng.randint(1, 6))) for _ in range(n)]
    else:
        words = ["".join(rng.choices("集团在上海追加投资的了", k=rng.randint(1, 3))) for _ in range(n)]
    return Sentence.from_words("rt", words, language)


def test_criterion_02_tag_codec_round_trip():
    rng = random.Random(2024)
    start = time.perf_counter()
    for i in range(1200):
        language = Language.CHINESE if i % 4 == 0 else Language.ENGLISH
        s = _random_sentence(rng, language)
        preds = set(rng.sample(range(len(s)), rng.randint(0, len(s))))
        assert parse_predicates(render_predicates(s, preds).text, s) == (preds, [])
    for i in range(1200):
        language = Language.CHINESE if i % 4 == 0 else Language.ENGLISH
        s = _random_sentence(rng, language)
        pred = rng.randrange(len(s))
        args = random_arguments(rng, len(s), pred)
        structure = PredicateArgumentStructure(PredicateInstance.at(s, pred), args)
        parsed, devs = parse_arguments(render_arguments(s, structure).text, s, pred)
        assert devs == []
        assert parsed == sorted(args, key=lambda a: a.span)
    s = Sentence.from_words("fz", "That country recently bought 200,000 tons of sugar .".split())
    for _ in range(10_000):
        text = "".join(rng.choices(FRAGMENTS, k=rng.randint(0, 25)))
        preds, devs = parse_predicates(text, s)
        assert all(0 <= p < len(s) for p in preds)
        args, devs = parse_arguments(text, s, rng.randrange(len(s)))
        assert all(0 <= a.span.start <= a.span.end < len(s) for a in args)
    assert time.perf_counter() - start < 30.0


# 3

def _corrupt_f1(db, fixture, iterations, seed=5):
    backend = CorruptingBackend(fixture, seed=seed)
    results = annotate_corpus(fixture, db, backend, PipelineConfig(max_iterations=iterations))
    return score_corpus(gold_triples(fixture), _predicted(results)).to_dict()["f1"]


def test_criterion_03_self_correction_efficacy(db):
    fixture = corruption_fixture()
    backend = CorruptingBackend(fixture, seed=5)
    kinds = set()
    for g in fixture:
        for stage, pred in [("predicate", None)] + [("argument", p) for p in sorted(g.predicate_tokens)]:
            damage = backend.corruption(g, stage, pred)
            assert damage is not None
            kinds.add(damage[1])
    assert kinds == set(MENU)
    f0 = _corrupt_f1(db, fixture, 0)
    f1 = _corrupt_f1(db, fixture, 1)
    assert f1 == 100.00
    assert f1 - f0 >= 20.0


# 4

class Stubborn(Backend):
    """Never stops and never repeats itself, so only the iteration cap ends a stage."""

    def __init__(self, gold):
        super().__init__()
        self.oracle = GoldOracleBackend(gold)
        self.per_branch = {}

    def _complete(self, req):
        m = req.metadata
        key = (m["sentence_id"], m["stage"], m["predicate"])
        self.per_branch[key] = self.per_branch.get(key, 0) + 1
        g = self.oracle.lookup(m["sentence_id"])
        text = self.oracle.gold_text(g, m["stage"], m["predicate"])
        if m["round"] == 0:
            return text
        label = "Predicate identification result:" if m["stage"] == "predicate" else "Argument labeling result:"
        return f"Issues detected: round {m['round']} noise {'x' * m['round']} {label} {text} extra{m['round']}"


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_criterion_04_iteration_accounting(db, n):
    corpus = gold_corpus(10, seed=4, max_preds=3)
    stubborn = Stubborn(corpus)
    annotate_corpus(corpus, db, stubborn, PipelineConfig(max_iterations=n))
    assert stubborn.per_branch
    assert all(calls <= n + 1 for calls in stubborn.per_branch.values())
    assert max(stubborn.per_branch.values()) == n + 1

    g = campaign_sentence()
    s = g.sentence
    script = [render_predicates(s, g.predicate_tokens).text, "Stop checking."]
    for st in sorted(g.structures, key=lambda st: st.predicate.token):
        script += [render_arguments(s, st).text, "Stop checking."]
    scripted = ScriptedBackend(script)
    result = Annotator(db, scripted, PipelineConfig(max_iterations=3)).annotate(s)
    assert result.predicates == [1, 4, 9]
    if n == 3:
        assert scripted.calls == 8


# 5

def _brute(gold, pred, dependency):
    def key(t):
        if dependency:
            assert t.argument.start == t.argument.end
        return (t.predicate_token, t.argument.start, t.argument.end, t.role.key)

    g_keys, p_keys = [], []
    for t in gold:
        if key(t) not in g_keys:
            g_keys.append(key(t))
    for t in pred:
        if key(t) not in p_keys:
            p_keys.append(key(t))
    correct = 0
    for k in p_keys:
        for j in g_keys:
            if k == j:
                correct += 1
    return correct, len(p_keys), len(g_keys)


def _random_triples(rng, k, dependency):
    out = set()
    for _ in range(k):
        start = rng.randrange(6)
        end = start if dependency else start + rng.randrange(3)
        role = rng.choice(["A0", "ARG0", "A1", "ADV", "R-A0", "C-A1", "TMP"])
        out.add(SRLTriple(rng.randrange(3), Span(start, end), RoleLabel.parse(role)))
    return out


def test_criterion_05_scorer_oracle_equivalence():
    rng = random.Random(55)
    for mode in (ScoreMode.SPAN, ScoreMode.DEPENDENCY):
        dependency = mode is ScoreMode.DEPENDENCY
        for _ in range(500):
            gold = _random_triples(rng, rng.randint(0, 20), dependency)
            pred = _random_triples(rng, rng.randint(0, 20), dependency)
            report = score(gold, pred, mode)
            assert (report.correct, report.predicted, report.gold) == _brute(gold, pred, dependency)
    a0, a1, adv = (RoleLabel.parse(x) for x in ("A0", "A1", "ADV"))
    gold = {SRLTriple(3, Span(0, 1), a0), SRLTriple(3, Span(2, 2), adv),
            SRLTriple(3, Span(4, 7), a1), SRLTriple(9, Span(8, 8), a0)}
    pred = {SRLTriple(3, Span(0, 1), a0), SRLTriple(3, Span(4, 7), a1), SRLTriple(3, Span(2, 2), a1)}
    d = score(gold, pred).to_dict()
    assert (d["precision"], d["recall"], d["f1"]) == (66.67, 50.00, 57.14)


# 6

def test_criterion_06_hit_rate_fixtures(db):
    start = time.perf_counter()
    big = hit_rate(hit_rate_fixture(10_498, 73, seed=1), db)
    small = hit_rate(hit_rate_fixture(3_513, 0, seed=2), db)
    assert (big.total_predicates, big.missed, f"{big.hit_rate:.2f}") == (10_498, 73, "99.30")
    assert (small.total_predicates, small.missed, f"{small.hit_rate:.2f}") == (3_513, 0, "100.00")
    assert small.line() == "3513 0 100.00"
    assert time.perf_counter() - start < 10.0


# 7

def test_criterion_07_role_set_bound(db, zh_db):
    for frame_db in (db, zh_db):
        overall = frame_db.global_labels()
        lemmas = list(frame_db.entries) + ["no-such-lemma"]
        for lemma in lemmas:
            rk = role_set(frame_db, lemma).labels
            assert rk <= overall
            assert len(rk) <= len(overall)
    assert len(GENERIC_CORE_ROLES) <= len(db.global_labels())


# 8

def test_criterion_08_training_export(db, tmp_path):
    corpus = gold_corpus(25, seed=8, max_preds=3)
    for n in (0, 1, 3):
        records = list(export_training(corpus, db, cfg=ExportConfig(iterations=n, seed=8)))
        assert len(records) == expected_record_count(corpus, n)
        assert len(records) == sum(1 + len(g.structures) + n + n * len(g.structures) for g in corpus)
    by_id = {g.sentence.id: g for g in corpus}
    for transcript in (False, True):
        cfg = ExportConfig(iterations=3, seed=8, per_iteration=not transcript)
        for r in export_training(corpus, db, cfg=cfg):
            g = by_id[r.meta["sentence_id"]]
            s = g.sentence
            kind = r.kind.value
            if kind.endswith("Correction"):
                assert 1 <= r.meta["iteration"] <= 3
                reply = parse_correction_response(r.target, "predicate" if kind.startswith("Predicate") else "argument")
                if isinstance(reply, Stop):
                    continue
                assert reply.deviations == ()
                assert r.target.startswith("Issues detected:")
                text = reply.revised
            else:
                text = r.target
            if kind.startswith("Predicate"):
                assert parse_predicates(text, s) == (g.predicate_tokens, [])
            else:
                args, devs = parse_arguments(text, s, r.meta["predicate"])
                assert devs == []
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_training(export_training(corpus, db, cfg=ExportConfig(iterations=3, seed=99)), first)
    write_training(export_training(corpus, db, cfg=ExportConfig(iterations=3, seed=99)), second)
    assert first.read_bytes() == second.read_bytes()


# 9

def test_criterion_09_prompt_fidelity(db, tpl):
    s = campaign_sentence().sentence
    d1 = Annotator(db, None).stage_one_prompt(s)
    user = d1.turns[1].text
    assert user + "\n" == (GOLDEN / "campaign_d1.txt").read_text(encoding="utf-8")
    assert "Possible predicate results in the text are:" in user
    assert "What @@was## the , @@purpose## and goal of this @@campaign## ?" in user
    correction = build_predicate_correction(d1, "What @@was## the , @@purpose## and goal of this @@campaign## ?", tpl)
    assert correction.last.text + "\n" == (GOLDEN / "campaign_correction.txt").read_text(encoding="utf-8")
    assert "Stop checking." in correction.last.text


# 10

def _request():
    from srl_forge.llm_backend import CompletionRequest

    conv = Conversation((Turn(Speaker.SYSTEM, "sys"), Turn(Speaker.USER, "hi")))
    return CompletionRequest(conv)


def test_criterion_10_live_backend_contract():
    ok = {"choices": [{"message": {"role": "assistant", "content": "Stop checking."}}]}
    replies = iter([httpx.Response(429), httpx.Response(200, json=ok)])
    client = httpx.Client(transport=httpx.MockTransport(lambda request: next(replies)))
    sleeps = []
    cfg = BackendConfig(kind="http", endpoint="http://stub/v1/chat/completions", model_name="stub",
                        max_retries=3)
    backend = HttpBackend(cfg, client=client, api_key="k", sleep=sleeps.append)
    assert backend.complete(_request()) == "Stop checking."
    assert backend.attempts == 2 and len(sleeps) == 1

    for max_retries, status in ((0, 503), (2, 429), (4, 500)):
        seen = []

        def always(request, status=status):
            seen.append(request)
            return httpx.Response(status)

        cfg = BackendConfig(kind="http", endpoint="http://stub/v1/chat/completions", model_name="stub",
                            max_retries=max_retries)
        backend = HttpBackend(cfg, client=httpx.Client(transport=httpx.MockTransport(always)),
                              sleep=lambda _: None)
        with pytest.raises((RateLimited, TransportError)):
            backend.complete(_request())
        assert len(seen) == max_retries + 1


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
