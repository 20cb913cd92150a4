"""Generated datasets for tests, demos and smoke runs of the pipeline."""

import csv
import io
from pathlib import Path

import numpy as np

from . import pixmap
from .core import MANIFEST_HEADER, STYLES


def color_dominant_dataset(n=600, n_classes=3, size=32, separation=0.3, noise=0.12, seed=0):
    """Images whose class is the channel with the raised mean.

    Class ``c`` has channel ``c`` centred at 0.5 + separation/2 and the other
    channels at 0.5 - separation/2, plus a per-image brightness shift and
    per-pixel Gaussian texture. Labels cycle so classes are balanced.
    """
    if not 1 <= n_classes <= 3:
        raise ValueError("at most three color-dominant classes")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % n_classes
    rng.shuffle(labels)
    means = np.full((n, 1, 1, 3), 0.5 - separation / 2)
    means[np.arange(n), 0, 0, labels] = 0.5 + separation / 2
    shift = rng.uniform(-0.1, 0.1, size=(n, 1, 1, 1))
    images = means + shift + rng.normal(0.0, noise, size=(n, size, size, 3))
    return np.clip(images, 0.0, 1.0), labels


def write_corpus(root, n=60, n_classes=3, size=32, artists_per_class=2, seed=0,
                 flagged=0, gray=0):
    """Write a toy corpus of P6 images plus ``manifest.csv`` under ``root``.

    ``flagged`` extra paintings carry a ``sketch`` flag and ``gray`` extra
    paintings are achromatic, to exercise the cleaning rules. Returns the
    manifest path.
    """
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    images, labels = color_dominant_dataset(n, n_classes, size, seed=seed)
    rng = np.random.default_rng(seed + 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    base_year = {0: 1450, 1: 1650, 2: 1880}
    counters = {}

    def emit(idx, image, label, flags=""):
        pid = f"P{idx:04d}"
        k = counters.get(label, 0)
        counters[label] = k + 1
        a = k % artists_per_class
        aid = f"A{label}{a}"
        year = base_year.get(label, 1900) + 20 * a + int(rng.integers(0, 10))
        rel = f"images/{pid}.ppm"
        pixmap.write(root / rel, pixmap.to_uint8(image))
        w.writerow([pid, aid, f"Artist {label}-{a}", STYLES[label].name, year, rel, flags])

    for i, (img, lab) in enumerate(zip(images, labels)):
        emit(i, img, int(lab))
    for j in range(flagged):
        emit(n + j, images[j], int(labels[j]), "sketch")
    for j in range(gray):
        g = np.repeat(images[j].mean(axis=2, keepdims=True), 3, axis=2)
        emit(n + flagged + j, g, int(labels[j]))
    path = root / "manifest.csv"
    path.write_text(buf.getvalue())
    return path
