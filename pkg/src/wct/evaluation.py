"""Classification metrics and multi-seed aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError


def confusion(preds, golds, num_classes):
    """K x K count matrix indexed [gold][pred]."""
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if preds.shape != golds.shape:
        raise ValueError("preds and golds must have equal length")
    if len(preds) and (preds.max() >= num_classes or golds.max() >= num_classes):
        raise ValueError("label out of range for confusion matrix")
    m = np.zeros((num_classes, num_classes), dtype=np.int64)
    for g, p in zip(golds, preds):
        m[g, p] += 1
    return m


def accuracy(m):
    total = m.sum()
    return float(np.trace(m) / total) if total else 0.0


def precision_recall_f1(m):
    """Per-class precision/recall/F1; zero where the denominator is zero."""
    k = m.shape[0]
    tp = np.diag(m).astype(np.float64)
    pred_totals = m.sum(axis=0).astype(np.float64)
    gold_totals = m.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, pred_totals, out=np.zeros(k), where=pred_totals > 0)
    recall = np.divide(tp, gold_totals, out=np.zeros(k), where=gold_totals > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(k), where=pr > 0)
    return precision, recall, f1


def macro_f1(m):
    """Unweighted mean of per-class F1; zero-support classes contribute 0."""
    if m.shape[0] != m.shape[1]:
        raise ValueError("confusion matrix must be square")
    _, _, f1 = precision_recall_f1(m)
    return float(f1.mean())


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: tuple
    recall: tuple
    f1: tuple
    macro_f1: float
    support: tuple

    @property
    def num_classes(self):
        return len(self.f1)

    def to_dict(self):
        """Serializable form; 6-decimal rounding happens only here."""
        r6 = lambda x: round(float(x), 6)
        return {
            "accuracy": r6(self.accuracy),
            "precision": [r6(v) for v in self.precision],
            "recall": [r6(v) for v in self.recall],
            "f1": [r6(v) for v in self.f1],
            "macro_f1": r6(self.macro_f1),
            "support": list(self.support),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def evaluate(preds, golds, num_classes):
    m = confusion(preds, golds, num_classes)
    precision, recall, f1 = precision_recall_f1(m)
    return MetricsReport(
        accuracy=accuracy(m),
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        macro_f1=macro_f1(m),
        support=tuple(int(v) for v in m.sum(axis=1)),
    )


def aggregate_seeds(reports):
    """Mean and population std of accuracy and macro F1 across seed runs."""
    if not reports:
        raise EmptyInputError("no reports to aggregate")
    k = reports[0].num_classes
    if any(r.num_classes != k for r in reports):
        raise ValueError("reports disagree on the number of classes")
    out = {}
    for name in ("accuracy", "macro_f1"):
        vals = np.array([getattr(r, name) for r in reports])
        out[name] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return out
