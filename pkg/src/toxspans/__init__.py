"""Toxic span detection: offset-exact tokenization, span post-processing,
label-preserving augmentation and character-offset F1 evaluation."""

__version__ = "0.1.0"

from .corpus import Document, normalize_annotations, parse_dataset, ranges, serialize_spans
from .metrics import evaluate_corpus, f1_document
from .pipeline import PipelineConfig, late_fusion_predict, predict_document
from .tokenizer import Vocabulary, tokenize

__all__ = [
    "Document",
    "PipelineConfig",
    "Vocabulary",
    "evaluate_corpus",
    "f1_document",
    "late_fusion_predict",
    "normalize_annotations",
    "parse_dataset",
    "predict_document",
    "ranges",
    "serialize_spans",
    "tokenize",
]
