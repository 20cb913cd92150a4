"""Accuracy, confusion matrices and misclassification reports."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .core import NUM_CLASSES, STYLES, StyleClass


@dataclass(frozen=True)
class Prediction:
    painting_id: str
    true_class: StyleClass
    probabilities: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        if len(probs) != NUM_CLASSES:
            raise ValueError(f"expected {NUM_CLASSES} probabilities, got {len(probs)}")
        if abs(sum(probs) - 1.0) > 1e-6:
            raise ValueError(f"probabilities for {self.painting_id} sum to {sum(probs)}")
        object.__setattr__(self, "probabilities", probs)

    @property
    def predicted(self):
        # max() keeps the first maximum, so ties go to the lower class index
        best = max(range(NUM_CLASSES), key=lambda i: self.probabilities[i])
        return StyleClass.from_label(best)

    @property
    def confidence(self):
        return self.probabilities[self.predicted.label]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes, both in table order."""

    counts: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def accuracy(self):
        return int(np.trace(self.counts)) / self.total

    def row_totals(self):
        return self.counts.sum(axis=1)

    def cell(self, true, predicted):
        return int(self.counts[true.label, predicted.label])

    def to_csv(self):
        return _matrix_csv(self.counts, int)

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        names = rows[0][1:]
        if names != [s.name for s in STYLES]:
            raise ValueError("confusion CSV header does not list the nine styles in order")
        counts = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int64)
        return cls(counts)


def _matrix_csv(matrix, fmt):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\predicted"] + [s.name for s in STYLES])
    for style, row in zip(STYLES, matrix):
        w.writerow([style.name] + [fmt(v) if fmt is int else repr(float(v)) for v in row])
    return buf.getvalue()


def evaluate(predictions):
    """Return (accuracy, ConfusionMatrix) for a non-empty sequence of predictions."""
    predictions = list(predictions)
    if not predictions:
        raise ValueError("no predictions to evaluate")
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    for p in predictions:
        counts[p.true_class.label, p.predicted.label] += 1
    matrix = ConfusionMatrix(counts)
    return matrix.accuracy, matrix


def confusion_rates(matrix):
    """Row-normalized rates; empty rows stay zero."""
    counts = matrix.counts if isinstance(matrix, ConfusionMatrix) else np.asarray(matrix)
    counts = counts.astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)


def rates_to_csv(rates):
    return _matrix_csv(rates, float)


@dataclass(frozen=True)
class Misclassification:
    painting_id: str
    true: StyleClass
    predicted: StyleClass
    probability: float


def top_misclassifications(predictions, k):
    """The k most confident wrong predictions, descending; ties by painting_id."""
    if k < 0:
        raise ValueError("k must be non-negative")
    wrong = [Misclassification(p.painting_id, p.true_class, p.predicted, p.confidence)
             for p in predictions if p.predicted is not p.true_class]
    wrong.sort(key=lambda m: (-m.probability, m.painting_id))
    return wrong[:k]


def misclassifications_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["painting_id", "true", "predicted", "probability"])
    for m in rows:
        w.writerow([m.painting_id, m.true.name, m.predicted.name, repr(m.probability)])
    return buf.getvalue()


def predictions_to_csv(predictions):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["painting_id", "true", "predicted"] + [f"p_{s.name}" for s in STYLES])
    for p in predictions:
        w.writerow([p.painting_id, p.true_class.name, p.predicted.name]
                   + [repr(v) for v in p.probabilities])
    return buf.getvalue()
