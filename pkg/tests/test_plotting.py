import numpy as np
import pytest

from artinfluence import nnet, plotting, tsne
from artinfluence.core import STYLES
from artinfluence.graph import STYLE_COLORS, build_lineage, layout_timeline
from test_graph import three_artists


def scatter_csv(dims, n_per=1):
    rng = np.random.default_rng(0)
    ids, styles = [], []
    for s in STYLES:
        for k in range(n_per):
            ids.append(f"{s.name}-{k}")
            styles.append(s.name)
    return tsne.embedding_to_csv(ids, rng.normal(size=(len(ids), dims)), styles)


def legend_labels(svg):
    return [s.name for s in STYLES if f">{s.name}<" in svg]


class TestScatter:
    @pytest.mark.parametrize("dims", [2, 3])
    def test_nine_legend_entries(self, tmp_path, dims):
        out = plotting.render_scatter(scatter_csv(dims), tmp_path / "s.svg")
        svg = out.read_text()
        assert legend_labels(svg) == [s.name for s in STYLES]
        for s in STYLES:
            assert svg.count(f">{s.name}<") == 1

    def test_empty_input_still_has_legend(self, tmp_path):
        out = plotting.render_scatter("painting_id,x,y,style\n", tmp_path / "e.svg")
        assert len(legend_labels(out.read_text())) == 9

    def test_identical_bytes(self, tmp_path):
        text = scatter_csv(2, n_per=3)
        a = plotting.render_scatter(text, tmp_path / "a.svg").read_bytes()
        b = plotting.render_scatter(text, tmp_path / "b.svg").read_bytes()
        assert a == b

    def test_palette_used(self, tmp_path):
        svg = plotting.render_scatter(scatter_csv(2), tmp_path / "p.svg").read_text()
        for color in STYLE_COLORS.values():
            assert color in svg

    def test_png(self, tmp_path):
        out = plotting.render_scatter(scatter_csv(2), tmp_path / "p.png")
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    @pytest.mark.parametrize("text", ["id,x,y,style\n", "painting_id,x,y,style\na,1,2\n",
                                      "painting_id,x,y,style\na,1,q,Baroque\n",
                                      "painting_id,x,y,style\na,1,2,Fauvism\n"])
    def test_malformed(self, tmp_path, text):
        with pytest.raises(plotting.ScatterError):
            plotting.render_scatter(text, tmp_path / "m.svg")


def test_other_figures(tmp_path):
    hist = [nnet.EpochRecord(i, 1.0 / i, 0.5, 1.1 / i, 0.4) for i in range(1, 4)]
    plotting.plot_history(hist, tmp_path / "h.svg")
    plotting.plot_confusion(np.eye(9), tmp_path / "c.svg")
    lin = build_lineage(three_artists())
    plotting.plot_network(lin, tmp_path / "n.svg", labels={"A": "first"})
    plotting.plot_timeline(lin, layout_timeline(lin), tmp_path / "t.svg")
    plotting.plot_class_histogram({s: s.index for s in STYLES}, tmp_path / "k.svg")
    img = np.random.default_rng(0).uniform(size=(8, 8, 3))
    plotting.plot_gradcam(img, img[..., 0], tmp_path / "g.svg", title="x")
    for name in "hcntkg":
        assert (tmp_path / f"{name}.svg").read_text().startswith("<?xml")
    assert "first" in (tmp_path / "n.svg").read_text()
