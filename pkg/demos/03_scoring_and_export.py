"""Score a noisy prediction by hand, then export fine-tuning records."""

import collections

from srl_forge import RoleLabel, Span, SRLTriple, bundled_db, compare_reports, score
from srl_forge.corpus import ExportConfig, export_training
from srl_forge.synthetic import gold_corpus


def t(p, a, b, role):
    return SRLTriple(p, Span(a, b), RoleLabel.parse(role))


gold = {t(3, 0, 1, "A0"), t(3, 2, 2, "ADV"), t(3, 4, 7, "A1"), t(9, 8, 8, "A0")}
pred = {t(3, 0, 1, "ARG0"), t(3, 4, 7, "A1"), t(3, 2, 2, "A1")}
report = score(gold, pred)
print(report.table(per_role=True))
print(compare_reports(score(gold, gold), report))

db = bundled_db()
corpus = gold_corpus(3, seed=1)
records = list(export_training(corpus, db, cfg=ExportConfig(iterations=2, seed=0)))
print(collections.Counter(r.kind.value for r in records))
print(records[-1].target)
