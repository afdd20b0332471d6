"""Per-document character-offset F1, corpus means, token confusion counts and PR curves."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .corpus import Document

__all__ = [
    "ConfusionMatrix",
    "DocScore",
    "LengthMismatch",
    "MetricsReport",
    "PRPoint",
    "UnknownDocumentId",
    "evaluate_corpus",
    "f1_document",
    "pr_curve",
    "pr_curve_csv",
    "token_confusion",
]


class UnknownDocumentId(KeyError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DocScore:
    precision: float
    recall: float
    f1: float


def f1_document(predicted: Iterable[int], gold: Iterable[int]) -> DocScore:
    """Score one document's predicted offsets against its gold offsets.

    Both empty scores 1; exactly one empty scores 0.

    >>> f1_document({0, 1, 2, 3}, {2, 3, 4, 5})
    DocScore(precision=0.5, recall=0.5, f1=0.5)
    """
    s, g = set(predicted), set(gold)
    if not s and not g:
        return DocScore(1.0, 1.0, 1.0)
    if not s or not g:
        return DocScore(0.0, 0.0, 0.0)
    overlap = len(s & g)
    p, r = overlap / len(s), overlap / len(g)
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return DocScore(p, r, f1)


@dataclass
class MetricsReport:
    per_doc: list[DocScore]
    ids: list[str]
    missing_ids: list[str] = field(default_factory=list)

    @property
    def n_docs(self) -> int:
        return len(self.per_doc)

    @property
    def mean_precision(self) -> float:
        return fmean(d.precision for d in self.per_doc) if self.per_doc else 0.0

    @property
    def mean_recall(self) -> float:
        return fmean(d.recall for d in self.per_doc) if self.per_doc else 0.0

    @property
    def mean_f1(self) -> float:
        return fmean(d.f1 for d in self.per_doc) if self.per_doc else 0.0

    def to_dict(self) -> dict:
        return {
            "n_docs": self.n_docs,
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_f1": self.mean_f1,
            "missing_ids": list(self.missing_ids),
            "per_doc": [{"id": i, **asdict(d)} for i, d in zip(self.ids, self.per_doc)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        rows = [
            f"{'docs':<6}{'Precision':>11}{'Recall':>9}{'F1':>8}",
            f"{self.n_docs:<6}{self.mean_precision:>11.3f}{self.mean_recall:>9.3f}{self.mean_f1:>8.3f}",
        ]
        if self.missing_ids:
            rows.append(f"missing predictions (scored as empty): {len(self.missing_ids)}")
        rows.append(f"mean F1 = {self.mean_f1:.3f}")
        return "\n".join(rows) + "\n"


def evaluate_corpus(preds: Mapping[str, Iterable[int]], golds: Sequence[Document]) -> MetricsReport:
    """Score predictions keyed by document id; missing ids count as empty predictions."""
    known = {d.id for d in golds}
    unknown = [k for k in preds if k not in known]
    if unknown:
        raise UnknownDocumentId(f"predictions for unknown document ids: {unknown[:5]}")
    missing = [d.id for d in golds if d.id not in preds]
    scores = [f1_document(preds.get(d.id, ()), d.gold) for d in golds]
    return MetricsReport(scores, [d.id for d in golds], missing)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_csv(self) -> str:
        return (
            "gold,predicted,count\n"
            f"1,1,{self.tp}\n0,1,{self.fp}\n1,0,{self.fn}\n0,0,{self.tn}\n"
        )


def _aligned(pred: Sequence[Sequence], gold: Sequence[Sequence]):
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predicted documents vs {len(gold)} gold documents")
    for k, (p, g) in enumerate(zip(pred, gold)):
        if len(p) != len(g):
            raise LengthMismatch(f"document {k}: {len(p)} predicted vs {len(g)} gold tokens")
        yield from zip(p, g)


def token_confusion(pred_labels: Sequence[Sequence[int]], gold_labels: Sequence[Sequence[int]]) -> ConfusionMatrix:
    tp = fp = fn = tn = 0
    for p, g in _aligned(pred_labels, gold_labels):
        if p and g:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


@dataclass(frozen=True)
class PRPoint:
    tau: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    # True when nothing scored above tau and precision was set to 1.0.
    no_positives: bool = False


def pr_curve(
    scores: Sequence[Sequence[float]],
    gold_labels: Sequence[Sequence[int]],
    grid: Sequence[float],
) -> tuple[list[PRPoint], float]:
    """Micro-averaged token precision/recall at each threshold, plus trapezoid AUC.

    A token is positive at ``tau`` when its score is strictly above ``tau``.
    The curve is traversed from the highest threshold down, starting from the
    anchor (recall 0, precision 1).
    """
    if list(grid) != sorted(grid) or any(not 0.0 <= t <= 1.0 for t in grid):
        raise ValueError("grid must be sorted ascending within [0, 1]")
    pairs = list(_aligned(scores, gold_labels))
    n_gold = sum(1 for _, g in pairs if g)
    points = []
    for tau in grid:
        tp = sum(1 for s, g in pairs if s > tau and g)
        fp = sum(1 for s, g in pairs if s > tau and not g)
        fn = n_gold - tp
        if tp + fp:
            precision, empty = tp / (tp + fp), False
        else:
            precision, empty = 1.0, True
        recall = tp / n_gold if n_gold else 0.0
        points.append(PRPoint(tau, precision, recall, tp, fp, fn, empty))

    auc, prev_r, prev_p = 0.0, 0.0, 1.0
    for pt in reversed(points):
        auc += (pt.recall - prev_r) * (pt.precision + prev_p) / 2
        prev_r, prev_p = pt.recall, pt.precision
    return points, min(1.0, max(0.0, auc))


def pr_curve_csv(points: Sequence[PRPoint]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau", "precision", "recall", "tp", "fp", "fn", "no_positives"])
    for p in points:
        writer.writerow([repr(p.tau), repr(p.precision), repr(p.recall), p.tp, p.fp, p.fn, int(p.no_positives)])
    return buf.getvalue()
