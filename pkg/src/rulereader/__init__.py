"""Conversational reading of rule text.

Given a rule document, a user scenario, and a question, the model decides
Yes, No, or Irrelevant, or asks a clarifying follow-up question built from
the rule span the user has not yet settled. A gated memory tracks, sentence
by sentence, whether the user's information entails or contradicts each
rule sentence as the dialog unfolds.
"""

from .data import (DECISIONS, ENTAILMENT_STATES, CorpusError, DialogExample,
                   EmptyDocumentError, IngestionError, LabeledExample, QATurn,
                   RuleDocument, Span, load_corpus, save_corpus)
from .dialog import DialogEngine, Session
from .encoder import Vocabulary
from .labeling import augment, label_corpus, label_entailment, label_span
from .model import DialogModel, ModelConfig
from .rephrase import RephraseRequest, TemplateRephraser, get_rephraser, register_rephraser
from .synthetic import SyntheticConfig, generate_synthetic, standard_corpus
from .text import segment_rules, tokenize, trim_question
from .training import TrainConfig, TrainResult, run_ablation, train

__version__ = "0.1.0"

__all__ = [
    "DECISIONS", "ENTAILMENT_STATES", "CorpusError", "DialogExample",
    "EmptyDocumentError", "IngestionError", "LabeledExample", "QATurn",
    "RuleDocument", "Span", "load_corpus", "save_corpus",
    "DialogEngine", "Session", "Vocabulary",
    "augment", "label_corpus", "label_entailment", "label_span",
    "DialogModel", "ModelConfig",
    "RephraseRequest", "TemplateRephraser", "get_rephraser", "register_rephraser",
    "SyntheticConfig", "generate_synthetic", "standard_corpus",
    "segment_rules", "tokenize", "trim_question",
    "TrainConfig", "TrainResult", "run_ablation", "train",
    "__version__",
]
