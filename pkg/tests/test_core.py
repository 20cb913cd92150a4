import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artinfluence import core, pixmap
from artinfluence.core import StyleClass

HEADER = ",".join(core.MANIFEST_HEADER) + "\n"


def make_manifest(rows):
    """rows: (pid, aid, style, year, flags) tuples."""
    lines = [HEADER]
    for pid, aid, style, year, flags in rows:
        lines.append(f"{pid},{aid},Name {aid},{style},{'' if year is None else year},"
                     f"img/{pid}.ppm,{flags}\n")
    return core.parse_manifest("".join(lines))


class TestStyleClass:
    def test_nine_classes_in_table_order(self):
        assert [s.name for s in StyleClass] == [
            "EarlyRenaissance", "HighRenaissance", "Baroque", "Realism", "Impressionism",
            "Cubism", "AbstractArt", "PopArt", "Ukiyoe"]
        assert [s.index for s in StyleClass] == list(range(1, 10))

    def test_label_roundtrip(self):
        for s in StyleClass:
            assert StyleClass.from_label(s.label) is s
        with pytest.raises(ValueError):
            StyleClass.from_label(9)

    def test_corpus_totals(self):
        assert sum(core.CORPUS_IMAGES.values()) == 24110
        assert sum(core.CORPUS_ARTISTS.values()) == 235


class TestParseManifest:
    def test_reference_corpus(self):
        m = core.parse_manifest(core.reference_manifest_csv().encode())
        assert len(m.paintings) == 24110
        assert len(m.artists) == 235
        hist = core.class_histogram(m)
        assert hist == dict(core.CORPUS_IMAGES)
        assert hist[StyleClass.Impressionism] == 7788

    def test_header_only(self):
        m = core.parse_manifest(HEADER)
        assert len(m) == 0
        assert all(v == 0 for v in core.class_histogram(m).values())

    def test_unknown_style_names_line_and_label(self):
        text = HEADER + "p1,a1,A,Baroque,1650,x.ppm,\np2,a2,B,Fauvism,1905,y.ppm,\n"
        with pytest.raises(core.ManifestError) as err:
            core.parse_manifest(text)
        assert err.value.problems[0][0] == 3
        assert "Fauvism" in str(err.value)
        assert "line 3" in str(err.value)

    @pytest.mark.parametrize("header", [
        "painting_id,artist_id,artist_name,style,year,image_path\n",
        "painting_id,artist_id,artist_name,style,year,image_path,flags,flags\n",
    ])
    def test_bad_header(self, header):
        with pytest.raises(core.ManifestError):
            core.parse_manifest(header)

    def test_duplicate_painting_id(self):
        text = HEADER + "p1,a1,A,Baroque,1650,x.ppm,\np1,a1,A,Baroque,1651,y.ppm,\n"
        with pytest.raises(core.ManifestError, match="duplicate painting_id"):
            core.parse_manifest(text)

    def test_non_integer_year(self):
        with pytest.raises(core.ManifestError, match="non-integer year"):
            core.parse_manifest(HEADER + "p1,a1,A,Baroque,c.1650,x.ppm,\n")

    def test_year_out_of_range(self):
        with pytest.raises(core.ManifestError, match="outside"):
            core.parse_manifest(HEADER + "p1,a1,A,Baroque,1100,x.ppm,\n")

    def test_all_errors_reported_together(self):
        text = HEADER + "p1,a1,A,Nope,1650,x.ppm,\np2,a1,A,Baroque,abc,y.ppm,\n"
        with pytest.raises(core.ManifestError) as err:
            core.parse_manifest(text)
        assert [ln for ln, _ in err.value.problems] == [2, 3]

    def test_artist_style_must_be_consistent(self):
        text = HEADER + "p1,a1,A,Baroque,1650,x.ppm,\np2,a1,A,Realism,1850,y.ppm,\n"
        with pytest.raises(core.ManifestError, match="style"):
            core.parse_manifest(text)

    def test_fields_and_flags(self):
        m = make_manifest([("p1", "a1", "Ukiyoe", None, "sketch|monochrome")])
        p = m.paintings[0]
        assert p.year is None
        assert p.flags == {"sketch", "monochrome"}
        assert m.artists["a1"].primary_style is StyleClass.Ukiyoe

    def test_csv_roundtrip(self):
        m = make_manifest([("p1", "a1", "Ukiyoe", 1800, "sketch"), ("p2", "a2", "Cubism", None, "")])
        assert core.parse_manifest(core.manifest_to_csv(m)) == m


class TestClean:
    def test_flagged_sketch_excluded(self):
        m = make_manifest([("p1", "a1", "Baroque", 1650, "sketch"),
                           ("p2", "a1", "Baroque", 1651, "")])
        cleaned, report = core.clean(m)
        assert [p.painting_id for p in cleaned.paintings] == ["p2"]
        assert report.rules() == {"p1": "sketch"}

    def test_gray_image_excluded_by_heuristic(self, tmp_path):
        m = make_manifest([("p1", "a1", "Baroque", 1650, ""), ("p2", "a1", "Baroque", 1651, "")])
        (tmp_path / "img").mkdir()
        gray = np.full((8, 8, 3), 120, dtype=np.uint8)
        color = np.zeros((8, 8, 3), dtype=np.uint8)
        color[..., 0] = 250
        pixmap.write(tmp_path / "img/p1.ppm", gray)
        pixmap.write(tmp_path / "img/p2.ppm", color)
        cleaned, report = core.clean(m, core.PixmapProbe(tmp_path))
        assert [p.painting_id for p in cleaned.paintings] == ["p2"]
        assert report.rules() == {"p1": "monochrome_heuristic"}

    def test_unreadable_image_is_excluded_not_fatal(self, tmp_path):
        m = make_manifest([("p1", "a1", "Baroque", 1650, "")])
        cleaned, report = core.clean(m, core.PixmapProbe(tmp_path))
        assert len(cleaned) == 0
        assert report.rules() == {"p1": "unreadable"}

    def test_threshold_boundary(self):
        m = make_manifest([("p1", "a1", "Baroque", 1650, ""), ("p2", "a1", "Baroque", 1651, "")])
        spreads = {"img/p1.ppm": 7.999, "img/p2.ppm": 8.0}
        cleaned, _ = core.clean(m, spreads.__getitem__)
        assert [p.painting_id for p in cleaned.paintings] == ["p2"]

    def test_channel_spread(self):
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        img[0, 0] = (10, 20, 40)
        assert core.channel_spread(img) == pytest.approx(30 / 4)

    def test_idempotent(self):
        m = make_manifest([("p1", "a1", "Baroque", 1650, "sketch"),
                           ("p2", "a2", "Realism", 1850, "distorted|partial_frame"),
                           ("p3", "a2", "Realism", 1851, "")])
        once, _ = core.clean(m)
        twice, report = core.clean(once)
        assert twice == once
        assert len(report) == 0
        assert set(once.artists) == {"a2"}


manifests = st.lists(
    st.tuples(st.sampled_from([s.name for s in StyleClass]),
              st.one_of(st.none(), st.integers(1200, 2100))),
    min_size=1, max_size=40,
).map(lambda rows: make_manifest([(f"p{i:03d}", f"a{s}", s, y, "")
                                  for i, (s, y) in enumerate(rows)]))


class TestSplit:
    def test_reference_split_counts(self):
        m = core.parse_manifest(core.reference_manifest_csv())
        a = core.split(m, 0.9, seed=0)
        assert (len(a.train), len(a.test)) == (21699, 2411)

    @pytest.mark.parametrize("seed", [0, 1, 7, 12345])
    def test_ten(self, seed):
        m = make_manifest([(f"p{i}", "a", "Baroque", None, "") for i in range(10)])
        a = core.split(m, 0.9, seed)
        assert (len(a.train), len(a.test)) == (9, 1)

    def test_deterministic(self):
        m = make_manifest([(f"p{i}", "a", "Baroque", None, "") for i in range(50)])
        assert core.split(m, 0.7, 3) == core.split(m, 0.7, 3)
        assert core.split(m, 0.7, 3).to_csv() == core.split(m, 0.7, 3).to_csv()

    def test_independent_of_row_order(self):
        rows = [(f"p{i}", "a", "Baroque", None, "") for i in range(20)]
        a = core.split(make_manifest(rows), 0.5, 9)
        b = core.split(make_manifest(rows[::-1]), 0.5, 9)
        assert dict(a.assignment) == dict(b.assignment)

    def test_round_half_up(self):
        m = make_manifest([(f"p{i}", "a", "Baroque", None, "") for i in range(3)])
        assert len(core.split(m, 0.5, 0).train) == 2

    def test_errors(self):
        with pytest.raises(ValueError):
            core.split(core.parse_manifest(HEADER), 0.9, 0)
        m = make_manifest([("p1", "a", "Baroque", None, "")])
        for ratio in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError):
                core.split(m, ratio, 0)

    def test_csv_roundtrip(self):
        m = make_manifest([(f"p{i}", "a", "Baroque", None, "") for i in range(5)])
        a = core.split(m, 0.6, 2)
        assert dict(core.SplitAssignment.from_csv(a.to_csv()).assignment) == dict(a.assignment)

    @settings(max_examples=60, deadline=None)
    @given(manifests, st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
    def test_partition_property(self, m, seed, ratio):
        a = core.split(m, ratio, seed)
        train, test = set(a.train), set(a.test)
        assert not train & test
        assert train | test == {p.painting_id for p in m.paintings}
        assert len(train) == int(np.floor(ratio * len(m) + 0.5))

    @settings(max_examples=60, deadline=None)
    @given(manifests, st.integers(0, 1000))
    def test_histogram_conservation(self, m, seed):
        assert sum(core.class_histogram(m).values()) == len(m)
        a = core.split(m, 0.5, seed)
        parts = [m.subset(a.train), m.subset(a.test)]
        total = {s: sum(core.class_histogram(p)[s] for p in parts) for s in StyleClass}
        assert total == core.class_histogram(m)


def test_single_ukiyoe_histogram():
    m = make_manifest([("p1", "a1", "Ukiyoe", 1800, "")])
    hist = core.class_histogram(m)
    assert hist[StyleClass.Ukiyoe] == 1
    assert sum(hist.values()) == 1


class TestPixmap:
    def test_roundtrip_color_and_gray(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
        assert np.array_equal(pixmap.decode(pixmap.encode(img)), img)
        gray = img[..., 0]
        assert np.array_equal(pixmap.decode(pixmap.encode(gray)), gray)

    def test_header_comments(self):
        data = b"P6\n# made by hand\n2 1\n255\n" + bytes([1, 2, 3, 4, 5, 6])
        assert pixmap.decode(data).tolist() == [[[1, 2, 3], [4, 5, 6]]]

    @pytest.mark.parametrize("data", [b"P3\n1 1\n255\n0 0 0", b"P6\n2 2\n255\n\x00",
                                      b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00"])
    def test_rejects(self, data):
        with pytest.raises(pixmap.PixmapError):
            pixmap.decode(data)
