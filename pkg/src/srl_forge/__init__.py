"""Retrieval-augmented semantic role labeling with LLM self-correction."""

from .core import (
    ArgumentAnnotation,
    GoldSentence,
    Language,
    PredicateArgumentStructure,
    PredicateInstance,
    RoleLabel,
    Sentence,
    Span,
    SRLTriple,
    triples_of,
)
from .frame_db import FrameDB, build_db, bundled_db
from .llm_backend import (
    BackendConfig,
    CompletionRequest,
    CorruptingBackend,
    GoldOracleBackend,
    HttpBackend,
    ScriptedBackend,
    make_backend,
)
from .pipeline import Annotator, PipelineConfig, annotate, annotate_corpus
from .prompting import Conversation, TemplateSet
from .retrieval_agent import candidates, hit_rate
from .scorer import ScoreMode, ScoreReport, compare_reports, score, score_corpus
from .tagging import parse_arguments, parse_predicates, render_arguments, render_predicates

__version__ = "0.1.0"
