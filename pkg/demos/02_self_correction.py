"""Damage the first answer of every stage and watch the correction rounds repair it."""

from srl_forge import CorruptingBackend, PipelineConfig, annotate_corpus, bundled_db, score_corpus, triples_of
from srl_forge.corpus import gold_triples
from srl_forge.corrections import Corruption
from srl_forge.pipeline import Annotator
from srl_forge.synthetic import corruption_fixture, table6_sentence

db = bundled_db()

# a single corruption kind on the familiar sentence
g = table6_sentence()
for kind in Corruption:
    backend = CorruptingBackend([g], seed=0, menu=[kind])
    stage = Annotator(db, backend).identify_predicates(g.sentence)
    print(f"{kind.value:>15}: {stage.steps[0].response}")
    print(f"{'':>15}  {stage.steps[1].response}")

# F1 against the number of correction rounds
fixture = corruption_fixture()
gold = gold_triples(fixture)
for n in range(4):
    backend = CorruptingBackend(fixture, seed=5)
    results = annotate_corpus(fixture, db, backend, PipelineConfig(max_iterations=n, workers=4))
    report = score_corpus(gold, {r.sentence.id: triples_of(r.structures) for r in results})
    print(f"N={n}  F1={report.f1:6.2f}  calls={backend.calls}")
