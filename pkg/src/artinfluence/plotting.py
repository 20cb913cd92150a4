"""Matplotlib figures written next to the CSV/JSON artifacts.

Everything renders through the Agg backend with a fixed SVG hash salt and no
date metadata, so the same inputs give byte-identical files.

Style palette (also used for DOT node colors):

=================  =======
EarlyRenaissance   #8c564b
HighRenaissance    #d62728
Baroque            #1f3b73
Realism            #2ca02c
Impressionism      #17becf
Cubism             #ff7f0e
AbstractArt        #9467bd
PopArt             #e377c2
Ukiyoe             #7f7f7f
=================  =======
"""

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.lines import Line2D  # noqa: E402

from .core import STYLES, StyleClass  # noqa: E402
from .graph import STYLE_COLORS  # noqa: E402

RC = {
    "svg.hashsalt": "artinfluence",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "figure.dpi": 100,
}
VIEW_3D = (20, -60)  # elevation, azimuth


class ScatterError(ValueError):
    pass


def save(fig, path):
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    metadata = {"Date": None} if fmt == "svg" else {}
    if fmt == "png":
        metadata = {"Software": None}
    elif fmt == "pdf":
        metadata = {"CreationDate": None, "ModDate": None}
    fig.savefig(path, format=fmt, metadata=metadata, bbox_inches=None)
    plt.close(fig)
    return path


def _legend_handles():
    return [Line2D([], [], linestyle="", marker="o", markersize=6,
                   markerfacecolor=STYLE_COLORS[s], markeredgecolor="none", label=s.name)
            for s in STYLES]


def read_scatter_csv(text):
    """Parse ``painting_id,x,y[,z],style`` into (ids, coords, styles)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header not in (["painting_id", "x", "y", "style"], ["painting_id", "x", "y", "z", "style"]):
        raise ScatterError(f"unexpected scatter header {header}")
    dims = len(header) - 2
    ids, coords, styles = [], [], []
    for row in reader:
        if not row:
            continue
        if len(row) != dims + 2:
            raise ScatterError(f"line {reader.line_num}: expected {dims + 2} fields")
        try:
            coords.append([float(v) for v in row[1:1 + dims]])
            styles.append(StyleClass.parse(row[-1]))
        except ValueError as exc:
            raise ScatterError(f"line {reader.line_num}: {exc}") from None
        ids.append(row[0])
    return ids, np.asarray(coords, dtype=np.float64).reshape(-1, dims), styles


def render_scatter(text, out_path, title=None):
    """Scatter of a t-SNE CSV colored by style, with all nine classes in the legend.

    Three-column inputs render as a 3D projection at a fixed view angle.
    """
    ids, coords, styles = read_scatter_csv(text)
    dims = coords.shape[1]
    with plt.rc_context(RC):
        fig = plt.figure(figsize=(7, 5.5))
        ax = fig.add_subplot(projection="3d" if dims == 3 else None)
        for style in STYLES:
            mask = np.array([s is style for s in styles], dtype=bool)
            if not mask.any():
                continue
            pts = coords[mask]
            ax.scatter(*pts.T, s=8, color=STYLE_COLORS[style], linewidths=0)
        if dims == 3:
            ax.view_init(*VIEW_3D)
        ax.legend(handles=_legend_handles(), loc="center left", bbox_to_anchor=(1.0, 0.5),
                  fontsize=8)
        ax.set_title(title or f"{dims}D t-SNE, {len(ids)} paintings")
        fig.subplots_adjust(right=0.72)
        return save(fig, out_path)


def plot_history(history, out_path):
    """Training and validation accuracy and loss per epoch."""
    epochs = [r.epoch for r in history]
    with plt.rc_context(RC):
        fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(9, 3.5))
        ax_acc.plot(epochs, [r.train_accuracy for r in history], "-", color="tab:blue",
                    label="training")
        ax_acc.plot(epochs, [r.val_accuracy for r in history], "--", color="tab:pink",
                    label="validation")
        ax_acc.set_xlabel("epoch")
        ax_acc.set_ylabel("accuracy")
        ax_acc.legend()
        ax_loss.plot(epochs, [r.train_loss for r in history], "-", color="black",
                     label="training")
        ax_loss.plot(epochs, [r.val_loss for r in history], "--", color="goldenrod",
                     label="validation")
        ax_loss.set_xlabel("epoch")
        ax_loss.set_ylabel("loss")
        ax_loss.legend()
        fig.tight_layout()
        return save(fig, out_path)


def plot_confusion(rates, out_path, counts=None):
    rates = np.asarray(rates)
    names = [s.name for s in STYLES]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7, 6))
        im = ax.imshow(rates, cmap="Blues", vmin=0.0, vmax=1.0)
        ax.set_xticks(range(len(names)), names, rotation=45, ha="right")
        ax.set_yticks(range(len(names)), names)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        for i in range(rates.shape[0]):
            for j in range(rates.shape[1]):
                text = f"{rates[i, j]:.2f}" if counts is None else str(int(counts[i, j]))
                ax.text(j, i, text, ha="center", va="center", fontsize=7,
                        color="white" if rates[i, j] > 0.5 else "black")
        fig.colorbar(im, ax=ax, fraction=0.046)
        fig.tight_layout()
        return save(fig, out_path)


def _circle_layout(graph):
    """Nodes on a circle, grouped by style then id."""
    order = sorted(graph.nodes, key=lambda n: (n.style.value, n.artist_id))
    n = max(len(order), 1)
    return {node.artist_id: (np.cos(2 * np.pi * k / n), np.sin(2 * np.pi * k / n))
            for k, node in enumerate(order)}


def plot_network(graph, out_path, labels=None, positions=None, xlabel=None):
    """Draw nodes sized by degree and colored by style; arrows for directed graphs."""
    labels = labels or {}
    pos = positions or _circle_layout(graph)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(9, 7))
        for e in graph.edges:
            (x0, y0), (x1, y1) = pos[e.src], pos[e.dst]
            if graph.directed:
                ax.annotate("", xy=(x1, y1), xytext=(x0, y0),
                            arrowprops={"arrowstyle": "->", "color": "0.5", "lw": 0.7})
            else:
                ax.plot([x0, x1], [y0, y1], "-", color="0.6", lw=0.7, zorder=1)
        for node in graph.nodes:
            x, y = pos[node.artist_id]
            ax.scatter([x], [y], s=30 + 40 * node.degree, color=STYLE_COLORS[node.style],
                       zorder=2, linewidths=0)
            ax.annotate(str(labels.get(node.artist_id, node.artist_id)), (x, y),
                        xytext=(0, 6 + 2 * node.degree), textcoords="offset points",
                        fontsize=6, ha="center", va="bottom", zorder=3)
        ax.legend(handles=_legend_handles(), loc="center left", bbox_to_anchor=(1.0, 0.5),
                  fontsize=8)
        if xlabel:
            ax.set_xlabel(xlabel)
            ax.set_yticks([])
        else:
            ax.set_axis_off()
        fig.subplots_adjust(right=0.78)
        return save(fig, out_path)


def plot_timeline(graph, positions, out_path, labels=None):
    return plot_network(graph, out_path, labels=labels, positions=positions,
                        xlabel="mean production year")


def plot_class_histogram(histogram, out_path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.bar([s.name for s in STYLES], [histogram[s] for s in STYLES],
               color=[STYLE_COLORS[s] for s in STYLES])
        ax.set_ylabel("paintings")
        ax.tick_params(axis="x", rotation=45)
        fig.tight_layout()
        return save(fig, out_path)


def plot_gradcam(image, heatmap, out_path, title=None):
    """Original image, color heat map overlay, and grayscale heat map side by side."""
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 3, figsize=(9, 3))
        axes[0].imshow(image)
        axes[1].imshow(image)
        axes[1].imshow(heatmap, cmap="jet", alpha=0.5, vmin=0.0, vmax=1.0)
        axes[2].imshow(heatmap, cmap="gray", vmin=0.0, vmax=1.0)
        for ax, name in zip(axes, ("original", "heat map", "grayscale")):
            ax.set_title(name)
            ax.set_axis_off()
        if title:
            fig.suptitle(title)
        return save(fig, out_path)
