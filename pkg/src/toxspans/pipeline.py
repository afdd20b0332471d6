"""From token scores to character spans.

The prediction path is tokenize -> score -> threshold -> word coherence ->
decode through the offset map -> gap filling -> optional sentence mask.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

from .classifiers import SentenceClassifier, TokenClassifier, sentence_predict, threshold_labels
from .corpus import SpanSet
from .tokenizer import TokenSequence, Vocabulary, tokenize

__all__ = [
    "PipelineConfig",
    "SentenceSpan",
    "decode_spans",
    "fill_gaps",
    "late_fusion_predict",
    "predict_document",
    "predict_sequence",
    "sentence_mask",
    "split_sentences",
    "word_coherence",
]

SENTENCE_THRESHOLD = 0.5
_TERMINATORS = ".!?"


@dataclass(frozen=True)
class PipelineConfig:
    classifier: TokenClassifier
    tau: float = 0.5
    gap_fill: bool = True
    word_coherence: bool = True
    late_fusion: SentenceClassifier | None = None
    # False runs gap filling on the raw labels before word coherence.
    coherence_first: bool = True
    max_tokens: int | None = None
    lowercase: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")


def _check(seq: TokenSequence, labels: Sequence[int]) -> None:
    if len(labels) != len(seq):
        raise ValueError(f"{len(labels)} labels for {len(seq)} tokens")


def decode_spans(seq: TokenSequence, labels: Sequence[int]) -> SpanSet:
    _check(seq, labels)
    out: set[int] = set()
    for tok, label in zip(seq, labels):
        if label:
            out.update(range(tok.start, tok.end + 1))
    return frozenset(out)


def word_coherence(seq: TokenSequence, labels: Sequence[int]) -> list[int]:
    """Mark every piece of a word toxic if any of its pieces is."""
    _check(seq, labels)
    out = list(labels)
    for group in seq.word_groups():
        if any(labels[i] for i in group):
            for i in group:
                out[i] = 1
    return out


def fill_gaps(seq: TokenSequence, labels: Sequence[int], spans: SpanSet) -> SpanSet:
    """Add the characters strictly between consecutive toxic tokens."""
    _check(seq, labels)
    out = set(spans)
    for i in range(len(seq) - 1):
        if labels[i] and labels[i + 1]:
            out.update(range(seq[i].end + 1, seq[i + 1].start))
    return frozenset(out)


def predict_sequence(cfg: PipelineConfig, seq: TokenSequence, scores: Sequence[float]) -> SpanSet:
    """Spans for an already tokenized and scored sequence (no sentence mask)."""
    if len(scores) != len(seq):
        raise ValueError(f"{len(scores)} scores for {len(seq)} tokens")
    labels = threshold_labels(scores, cfg.tau)
    if cfg.coherence_first or not cfg.gap_fill:
        if cfg.word_coherence:
            labels = word_coherence(seq, labels)
        spans = decode_spans(seq, labels)
        if cfg.gap_fill:
            spans = fill_gaps(seq, labels, spans)
        return spans
    spans = fill_gaps(seq, labels, decode_spans(seq, labels))
    if cfg.word_coherence:
        spans = spans | decode_spans(seq, word_coherence(seq, labels))
    return spans


def _token_spans(cfg: PipelineConfig, text: str, vocab: Vocabulary | None) -> SpanSet:
    if not text:
        return frozenset()
    seq = tokenize(text, vocab, cfg.max_tokens, cfg.lowercase)
    return predict_sequence(cfg, seq, cfg.classifier.score(seq))


def predict_document(cfg: PipelineConfig, text: str, vocab: Vocabulary | None) -> SpanSet:
    if cfg.late_fusion is not None:
        return late_fusion_predict(cfg, text, vocab)
    return _token_spans(cfg, text, vocab)


class SentenceSpan(NamedTuple):
    start: int
    end: int  # inclusive
    text: str


def split_sentences(text: str) -> list[SentenceSpan]:
    """Split after ``.``, ``!`` or ``?`` followed by whitespace or end of text.

    Sentence boundaries are trimmed of surrounding whitespace.

    >>> [(s.start, s.end) for s in split_sentences("A. B!")]
    [(0, 1), (3, 4)]
    """
    out: list[SentenceSpan] = []
    start = None
    for i, ch in enumerate(text):
        if start is None:
            if ch.isspace():
                continue
            start = i
        if ch in _TERMINATORS and (i + 1 == len(text) or text[i + 1].isspace()):
            out.append(SentenceSpan(start, i, text[start : i + 1]))
            start = None
    if start is not None:
        end = len(text.rstrip()) - 1
        out.append(SentenceSpan(start, end, text[start : end + 1]))
    return out


def sentence_mask(clf: SentenceClassifier, text: str) -> SpanSet:
    """Character offsets of the sentences ``clf`` classifies toxic."""
    out: set[int] = set()
    for sent in split_sentences(text):
        if sentence_predict(clf, sent.text) > SENTENCE_THRESHOLD:
            out.update(range(sent.start, sent.end + 1))
    return frozenset(out)


def late_fusion_predict(cfg: PipelineConfig, text: str, vocab: Vocabulary | None) -> SpanSet:
    if cfg.late_fusion is None:
        raise ValueError("late fusion requires a sentence classifier")
    spans = _token_spans(replace(cfg, late_fusion=None), text, vocab)
    if not spans:
        return spans
    return spans & sentence_mask(cfg.late_fusion, text)
