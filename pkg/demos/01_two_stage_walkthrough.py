"""Walk one sentence through both annotation stages with the gold oracle."""

from srl_forge import Annotator, GoldOracleBackend, PipelineConfig, bundled_db
from srl_forge.synthetic import table6_sentence

db = bundled_db()
gold = table6_sentence()
s = gold.sentence
print(s.text)

# what the retrieval agent proposes before any model call
annotator = Annotator(db, GoldOracleBackend([gold]), PipelineConfig(record_trace=True))
d1 = annotator.stage_one_prompt(s)
print(d1.turns[1].text)

result = annotator.annotate(s)
print("predicates:", result.predicates)
for st in result.structures:
    for arg in st.arguments:
        words = " ".join(s.words[arg.span.start:arg.span.end + 1])
        print(f"  {st.predicate.surface} {arg.role}: {words}")

# the oracle says "Stop checking." on the first correction round
print(result.predicate_outcome)
print(len(result.trace.predicate), "predicate-stage calls")
