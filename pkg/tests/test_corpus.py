import json
from pathlib import Path

import pytest

from srl_forge.core import Span
from srl_forge.corpus import (
    ExportConfig,
    MalformedCorpus,
    RecordKind,
    expected_record_count,
    export_training,
    gold_triples,
    load_conll09,
    load_corpus,
    load_props,
    read_gold_jsonl,
    subsample,
    write_gold_jsonl,
    write_training,
)
from srl_forge.synthetic import gold_corpus, table6_sentence
from srl_forge.tagging import parse_arguments, parse_predicates, render_arguments, render_predicates

FIX = Path(__file__).parent / "fixtures"


def test_conll09_fixture():
    corpus = load_conll09(FIX / "wsj_sample.conll09")
    assert len(corpus) == 2
    assert sum(len(g.structures) for g in corpus) == 3
    buy = corpus[0].structures[0]
    assert (buy.predicate.token, buy.predicate.lemma) == (3, "buy")
    assert [(a.span, a.role.rendered) for a in buy.arguments] == [
        (Span(1, 1), "A0"), (Span(2, 2), "AM-TMP"), (Span(5, 5), "A1")]
    assert load_corpus(FIX / "wsj_sample.conll09") == corpus


def test_conll09_empty_and_malformed(tmp_path):
    empty = tmp_path / "e.conll09"
    empty.write_text("", encoding="utf-8")
    assert load_conll09(empty) == []
    bad = tmp_path / "b.conll09"
    lines = (FIX / "wsj_sample.conll09").read_text(encoding="utf-8").splitlines()
    lines[2] = "\t".join(lines[2].split("\t")[:10])
    bad.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(MalformedCorpus) as info:
        load_conll09(bad)
    assert info.value.line == 3


def test_props_fixture():
    corpus = load_props(FIX / "sample.props")
    first, second = corpus
    st = first.structures[0]
    assert st.predicate.token == 3
    a1 = [a for a in st.arguments if a.role.rendered == "A1"][0]
    assert a1.span == Span(4, 7)
    assert [a.span for a in st.arguments if a.role.rendered == "A0"] == [Span(0, 1)]
    assert [s.predicate.token for s in second.structures] == [1, 3]
    assert second.structures[0].arguments[1].span == Span(2, 4)


def test_props_unbalanced():
    with pytest.raises(MalformedCorpus) as info:
        load_props(FIX / "unbalanced.props")
    assert info.value.line == 1


def test_props_with_words_file(tmp_path):
    (tmp_path / "w.txt").write_text("It\nwent\n\n", encoding="utf-8")
    (tmp_path / "p.props").write_text("-  (A1*)\ngo (V*)\n\n", encoding="utf-8")
    g = load_props(tmp_path / "p.props", words=tmp_path / "w.txt")[0]
    assert g.sentence.words == ["It", "went"]
    assert g.structures[0].arguments[0].span == Span(0, 0)


def test_round_trip_through_render(tmp_path):
    for g in load_props(FIX / "sample.props") + load_conll09(FIX / "wsj_sample.conll09"):
        s = g.sentence
        assert parse_predicates(render_predicates(s, g.predicate_tokens).text, s) == (g.predicate_tokens, [])
        for st in g.structures:
            args, devs = parse_arguments(render_arguments(s, st).text, s, st.predicate.token)
            assert devs == [] and tuple(args) == st.sorted().arguments


def test_gold_jsonl_round_trip(tmp_path):
    corpus = gold_corpus(20, seed=3) + [table6_sentence()]
    path = tmp_path / "gold.jsonl"
    write_gold_jsonl(corpus, path)
    again = read_gold_jsonl(path)
    assert gold_triples(again) == gold_triples(corpus)
    assert [g.predicate_tokens for g in again] == [g.predicate_tokens for g in corpus]
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": 1, "words": ["a"]}\n{"id": 2}\n', encoding="utf-8")
    with pytest.raises(MalformedCorpus) as info:
        read_gold_jsonl(bad)
    assert info.value.line == 2


def test_subsample_seeded():
    corpus = gold_corpus(50, seed=1)
    a, b = subsample(corpus, 10, seed=7), subsample(corpus, 10, seed=7)
    assert a == b and len(a) == 10
    ids = [g.sentence.id for g in a]
    assert ids == sorted(ids)
    assert subsample(corpus, 500, seed=0) == corpus


def test_export_counts_example(db):
    g = table6_sentence()
    corpus = gold_corpus(40, seed=5, max_preds=3)
    two = next(x for x in corpus if len(x.structures) == 2)
    records = list(export_training([two], db, cfg=ExportConfig(iterations=3)))
    counts = {k: sum(r.kind is k for r in records) for k in RecordKind}
    assert counts == {RecordKind.PREDICATE_STAGE: 1, RecordKind.ARGUMENT_STAGE: 2,
                      RecordKind.PREDICATE_CORRECTION: 3, RecordKind.ARGUMENT_CORRECTION: 6}
    assert not any(r.kind.value.endswith("Correction") for r in export_training([g], db, cfg=ExportConfig(iterations=0)))


def test_export_record_shape(db, tmp_path):
    g = table6_sentence()
    records = list(export_training([g], db, cfg=ExportConfig(iterations=1, seed=3)))
    assert records[0].target == "That country recently @@bought## 200,000 tons of sugar ."
    obj = json.loads(records[-1].dumps())
    assert set(obj) == {"messages", "target", "meta"}
    assert obj["meta"] == {"kind": "ArgumentCorrection", "sentence_id": "table6", "predicate": 3, "iteration": 1}
    assert obj["messages"][0]["role"] == "system" and obj["messages"][-1]["role"] == "user"
    assert write_training(records, tmp_path / "t.jsonl") == len(records)


def test_export_transcript_mode(db):
    corpus = gold_corpus(5, seed=2)
    records = list(export_training(corpus, db, cfg=ExportConfig(iterations=3, per_iteration=False)))
    assert len(records) == expected_record_count(corpus, 3)
    later = [r for r in records if r.meta.get("iteration", 0) > 1]
    assert all(r.target == "Stop checking." for r in later)
