"""Chinese sentences use the same grammar without spaces between tokens."""

from srl_forge import GoldOracleBackend, PipelineConfig, annotate, bundled_db
from srl_forge.synthetic import gold_corpus

db = bundled_db("zh")
corpus = gold_corpus(3, seed=2, language="zh")
backend = GoldOracleBackend(corpus)
for g in corpus:
    result = annotate(g.sentence, None, db, backend, PipelineConfig(language="zh"))
    print(g.sentence.text, result.to_json()["structures"])
