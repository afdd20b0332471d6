"""Token and sentence toxicity scorers.

Every token scorer maps a :class:`TokenSequence` to one score in ``[0, 1]``
per token.  Neural scorers can be plugged in from outside through score
files (see :mod:`toxspans.cli`); this module provides a random character
baseline, a lexicon matcher and an averaged perceptron.
"""

from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .corpus import Document, SpanSet
from .tokenizer import LabeledTokenSequence, TokenSequence, pre_tokenize

__all__ = [
    "EmptyCorpus",
    "LexiconClassifier",
    "LexiconSentenceClassifier",
    "LinearModel",
    "LinearSentenceClassifier",
    "ModelFormatError",
    "RandomBaselineConfig",
    "SentenceClassifier",
    "TokenClassifier",
    "lexicon_predict",
    "load_lexicon",
    "predict_linear",
    "random_char_predict",
    "sentence_predict",
    "sentence_training_data",
    "threshold_labels",
    "token_features",
    "train_linear",
    "train_sentence_linear",
]

TEMPLATE_VERSION = 1


class EmptyCorpus(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


class TokenClassifier(Protocol):
    def score(self, seq: TokenSequence) -> list[float]: ...


class SentenceClassifier(Protocol):
    def score(self, sentence: str) -> float: ...


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


# --- random baseline -------------------------------------------------------


@dataclass(frozen=True)
class RandomBaselineConfig:
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")


def random_char_predict(text: str, cfg: RandomBaselineConfig = RandomBaselineConfig()) -> SpanSet:
    """Mark character ``i`` toxic when a uniform draw exceeds the threshold."""
    rng = random.Random(cfg.seed)
    return frozenset(i for i in range(len(text)) if rng.random() > cfg.threshold)


# --- lexicon ---------------------------------------------------------------


def load_lexicon(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as f:
        return frozenset(w.strip() for w in f if w.strip() and not w.startswith("#"))


def lexicon_predict(seq: TokenSequence, lexicon: Iterable[str], casefold: bool = True) -> list[float]:
    lexicon = {w.casefold() for w in lexicon} if casefold else set(lexicon)
    surfaces = seq.word_surfaces()
    hits = {
        idx
        for idx, surface in surfaces.items()
        if (surface.casefold() if casefold else surface) in lexicon
    }
    return [1.0 if tok.word_index in hits else 0.0 for tok in seq]


@dataclass(frozen=True)
class LexiconClassifier:
    lexicon: frozenset[str]
    casefold: bool = True

    def score(self, seq: TokenSequence) -> list[float]:
        return lexicon_predict(seq, self.lexicon, self.casefold)


@dataclass(frozen=True)
class LexiconSentenceClassifier:
    lexicon: frozenset[str]
    casefold: bool = True

    def __post_init__(self):
        if self.casefold:
            object.__setattr__(self, "lexicon", frozenset(w.casefold() for w in self.lexicon))

    def score(self, sentence: str) -> float:
        for w in pre_tokenize(sentence):
            surface = w.text.casefold() if self.casefold else w.text
            if surface in self.lexicon:
                return 1.0
        return 0.0


def sentence_predict(clf: SentenceClassifier, sentence: str) -> float:
    if not sentence.strip():
        return 0.0
    return min(1.0, max(0.0, clf.score(sentence)))


def threshold_labels(scores: Sequence[float], tau: float = 0.5) -> list[int]:
    return [1 if s > tau else 0 for s in scores]


# --- averaged perceptron ---------------------------------------------------


def word_shape(s: str) -> str:
    """Collapse character classes: ``"Moron2"`` -> ``"Xxd"``."""
    out = []
    for ch in s:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = ch
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def token_features(seq: TokenSequence) -> list[list[str]]:
    surfaces = seq.word_surfaces()
    order = sorted(surfaces)
    prev_of = {w: (surfaces[order[k - 1]].lower() if k else "<s>") for k, w in enumerate(order)}
    next_of = {
        w: (surfaces[order[k + 1]].lower() if k + 1 < len(order) else "</s>")
        for k, w in enumerate(order)
    }
    feats = []
    for tok in seq:
        low = tok.surface.lower()
        feats.append(
            [
                "bias",
                "w=" + low,
                "shape=" + word_shape(tok.surface),
                "p3=" + low[:3],
                "s3=" + low[-3:],
                "pw=" + prev_of[tok.word_index],
                "nw=" + next_of[tok.word_index],
                "cont=" + ("1" if tok.is_continuation else "0"),
            ]
        )
    return feats


def sentence_features(sentence: str) -> list[str]:
    return ["bias"] + sorted({"w=" + w.text.lower() for w in pre_tokenize(sentence)})


class _AveragedPerceptron:
    """Binary perceptron with lazily accumulated weight averages."""

    def __init__(self):
        self.weights: dict[str, float] = defaultdict(float)
        self._totals: dict[str, float] = defaultdict(float)
        self._stamps: dict[str, int] = defaultdict(int)
        self.i = 0

    def margin(self, feats: Iterable[str]) -> float:
        w = self.weights
        return sum(w.get(f, 0.0) for f in feats)

    def update(self, feats: Sequence[str], y: int) -> None:
        self.i += 1
        delta = 1.0 if y else -1.0
        if (self.margin(feats) if y else -self.margin(feats)) > 0:
            return
        for f in feats:
            self._totals[f] += (self.i - self._stamps[f]) * self.weights[f]
            self._stamps[f] = self.i
            self.weights[f] += delta

    def averaged(self) -> dict[str, float]:
        if self.i == 0:
            return {}
        out = {}
        for f, w in self.weights.items():
            total = self._totals[f] + (self.i - self._stamps[f]) * w
            if total:
                out[f] = total / self.i
        return out


def _accuracy(weights: dict[str, float], examples) -> float:
    correct = 0
    for feats, y in examples:
        pred = 1 if sum(weights.get(f, 0.0) for f in feats) > 0 else 0
        correct += pred == y
    return correct / len(examples)


def _train(examples: list[tuple[list[str], int]], epochs: int, seed: int):
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if not examples:
        raise EmptyCorpus("no training examples")
    rng = random.Random(seed)
    model = _AveragedPerceptron()
    order = list(range(len(examples)))
    # The all-negative baseline; averaged weights must not do worse.
    best = {"bias": -1.0}
    best_acc = _accuracy(best, examples)
    history = []
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            model.update(*examples[k])
        weights = model.averaged()
        acc = _accuracy(weights, examples)
        history.append(acc)
        if acc >= best_acc:
            best, best_acc = weights, acc
    return best, history


def _format_weight(w: float) -> str:
    return repr(float(w))


@dataclass
class _LinearBase:
    weights: dict[str, float]
    epochs: int = 0
    averaged: bool = True
    history: list[float] = field(default_factory=list)

    kind = "token"

    def margin(self, feats: Iterable[str]) -> float:
        return sum(self.weights.get(f, 0.0) for f in feats)

    def dumps(self) -> str:
        lines = [
            f"# toxspans-linear kind={self.kind} template={TEMPLATE_VERSION}"
            f" epochs={self.epochs} averaged={int(self.averaged)}"
        ]
        for f in sorted(self.weights):
            if self.weights[f]:
                lines.append(f"{f}\t{_format_weight(self.weights[f])}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str):
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# toxspans-linear"):
            raise ModelFormatError("missing model header")
        meta = dict(kv.split("=", 1) for kv in lines[0].split()[2:])
        if meta.get("kind") != cls.kind:
            raise ModelFormatError(f"expected a {cls.kind} model, got {meta.get('kind')!r}")
        if int(meta.get("template", -1)) != TEMPLATE_VERSION:
            raise ModelFormatError(f"unsupported feature template {meta.get('template')!r}")
        weights = {}
        for n, line in enumerate(lines[1:], start=2):
            try:
                f, w = line.rsplit("\t", 1)
                weights[f] = float(w)
            except ValueError:
                raise ModelFormatError(f"line {n}: expected 'feature<TAB>weight'") from None
            if not math.isfinite(weights[f]):
                raise ModelFormatError(f"line {n}: non-finite weight")
        return cls(weights, int(meta.get("epochs", 0)), meta.get("averaged") == "1")

    @classmethod
    def load(cls, path: str | Path):
        return cls.loads(Path(path).read_text(encoding="utf-8"))


@dataclass
class LinearModel(_LinearBase):
    """Per-token linear scorer; ``score`` is the logistic of the margin."""

    def score(self, seq: TokenSequence) -> list[float]:
        return predict_linear(self, seq)


def predict_linear(model: LinearModel, seq: TokenSequence) -> list[float]:
    return [_sigmoid(model.margin(feats)) for feats in token_features(seq)]


def train_linear(
    corpus: Sequence[LabeledTokenSequence], epochs: int = 5, seed: int = 0
) -> LinearModel:
    """Train an averaged perceptron on per-token features.

    The returned weights are the best averaged snapshot by training accuracy,
    never worse than predicting every token non-toxic.
    """
    examples = []
    for item in corpus:
        examples.extend(zip(token_features(item.seq), item.labels))
    if not examples:
        raise EmptyCorpus("corpus has no tokens")
    weights, history = _train(examples, epochs, seed)
    return LinearModel(weights, epochs, True, history)


@dataclass
class LinearSentenceClassifier(_LinearBase):
    kind = "sentence"

    def score(self, sentence: str) -> float:
        return _sigmoid(self.margin(sentence_features(sentence)))


def sentence_training_data(docs: Iterable[Document]) -> list[tuple[str, int]]:
    """Split documents into sentences labelled 1 when they overlap gold."""
    from .pipeline import split_sentences

    out = []
    for doc in docs:
        gold = doc.gold_set
        for sent in split_sentences(doc.text):
            toxic = any(i in gold for i in range(sent.start, sent.end + 1))
            out.append((sent.text, int(toxic)))
    return out


def train_sentence_linear(
    data: Sequence[tuple[str, int]], epochs: int = 5, seed: int = 0
) -> LinearSentenceClassifier:
    examples = [(sentence_features(s), y) for s, y in data]
    weights, history = _train(examples, epochs, seed)
    return LinearSentenceClassifier(weights, epochs, True, history)
