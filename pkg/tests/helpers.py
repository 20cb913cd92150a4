"""Shared fixtures built from the reference confusion-matrix cells."""

from fractions import Fraction

import numpy as np

from artinfluence.core import NUM_CLASSES, StyleClass
from artinfluence.evaluation import Prediction

# (true class, predicted class, count, row total)
REFERENCE_CELLS = [
    (StyleClass.Realism, StyleClass.Baroque, 26, 401),
    (StyleClass.Cubism, StyleClass.AbstractArt, 7, 126),
    (StyleClass.EarlyRenaissance, StyleClass.HighRenaissance, 13, 119),
    (StyleClass.PopArt, StyleClass.AbstractArt, 11, 105),
]
UKIYOE_ROW = (114, 120)  # correct, total; 0.95 exactly


def one_hot(cls, confidence=0.9):
    probs = np.full(NUM_CLASSES, (1.0 - confidence) / (NUM_CLASSES - 1))
    probs[cls.label] = confidence
    return probs


def reference_predictions():
    """Predictions whose confusion rows reproduce the reference cells.

    Off-cell mistakes in each row land on a fixed third class so only the
    reference cell and the diagonal carry mass besides it.
    """
    preds = []

    def add(true, predicted, n):
        for _ in range(n):
            preds.append(Prediction(f"q{len(preds):05d}", true, tuple(one_hot(predicted))))

    for true, predicted, count, total in REFERENCE_CELLS:
        add(true, predicted, count)
        add(true, true, total - count)
    correct, total = UKIYOE_ROW
    add(StyleClass.Ukiyoe, StyleClass.Ukiyoe, correct)
    add(StyleClass.Ukiyoe, StyleClass.AbstractArt, total - correct)
    return preds


def expected_rates():
    out = {(t, p): Fraction(c, n) for t, p, c, n in REFERENCE_CELLS}
    out[(StyleClass.Ukiyoe, StyleClass.Ukiyoe)] = Fraction(*UKIYOE_ROW)
    return out
