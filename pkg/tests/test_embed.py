import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from test_core import make_manifest

from artinfluence import embed
from artinfluence.core import StyleClass


def loop_euclidean(p, q):
    return math.sqrt(sum((b - a) ** 2 for a, b in zip(p, q)))


def loop_cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def record(pid, vec):
    return embed.EmbeddingRecord(pid, vec)


def basis(i, scale=1.0):
    v = np.zeros(512)
    v[i] = scale
    return v


class TestAggregate:
    def test_mean_of_basis_vectors(self):
        m = make_manifest([("p1", "a1", "Baroque", 1600, ""), ("p2", "a1", "Baroque", 1610, "")])
        (prof,) = embed.aggregate_artists([record("p1", basis(0)), record("p2", basis(1))], m)
        assert prof.mean_vector[:3].tolist() == [0.5, 0.5, 0.0]
        assert prof.mean_year == 1605
        assert prof.n_paintings == 2
        assert prof.style is StyleClass.Baroque

    def test_single_painting_year(self):
        m = make_manifest([("p1", "a1", "HighRenaissance", 1503, "")])
        (prof,) = embed.aggregate_artists([record("p1", basis(3))], m)
        assert prof.mean_year == 1503

    def test_undated_artist(self):
        m = make_manifest([("p1", "a1", "Cubism", None, "")])
        assert embed.aggregate_artists([record("p1", basis(3))], m)[0].mean_year is None

    def test_matches_summation_oracle(self):
        rng = np.random.default_rng(0)
        vecs = rng.normal(size=(7, 512))
        m = make_manifest([(f"p{i}", "a1", "Realism", 1850 + i, "") for i in range(7)])
        (prof,) = embed.aggregate_artists([record(f"p{i}", v) for i, v in enumerate(vecs)], m)
        oracle = [sum(vecs[k, j] for k in range(7)) / 7 for j in range(512)]
        np.testing.assert_allclose(prof.mean_vector, oracle, rtol=0, atol=1e-12)
        assert prof.mean_year == 1853

    def test_ordered_by_artist_and_unknown_painting(self):
        m = make_manifest([("p1", "b", "Realism", 1850, ""), ("p2", "a", "Baroque", 1650, "")])
        profs = embed.aggregate_artists([record("p1", basis(0)), record("p2", basis(1))], m)
        assert [p.artist_id for p in profs] == ["a", "b"]
        with pytest.raises(embed.EmbeddingError):
            embed.aggregate_artists([record("zz", basis(0))], m)

    def test_record_validation(self):
        with pytest.raises(embed.EmbeddingError):
            record("p", np.zeros(511))
        with pytest.raises(embed.EmbeddingError):
            record("p", np.full(512, np.nan))


class TestDistances:
    def test_pythagorean(self):
        assert embed.euclidean([0, 0], [3, 4]) == 5.0
        v = np.random.default_rng(1).normal(size=512)
        assert embed.euclidean(v, v) == 0.0

    def test_cosine_trivial(self):
        assert embed.cosine_similarity([1, 0], [0, 1]) == 0.0
        a = np.random.default_rng(2).normal(size=512)
        assert embed.cosine_similarity(a, a) == 1.0
        assert embed.cosine_similarity(a, 3 * a) == 1.0
        assert embed.cosine_similarity(a, -a) == -1.0
        assert embed.cosine_distance(a, a) == 0.0

    def test_zero_norm(self):
        with pytest.raises(embed.ZeroNormError):
            embed.cosine_similarity(np.zeros(4), np.ones(4))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            embed.euclidean([1, 2], [1, 2, 3])

    def test_random_pairs_match_loop_oracles(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a, b = rng.normal(size=(2, 512))
            assert abs(embed.euclidean(a, b) - loop_euclidean(a, b)) <= 1e-12
            assert abs(embed.cosine_similarity(a, b) - loop_cosine(a, b)) <= 1e-12

    @settings(max_examples=200)
    @given(arrays(np.float64, 16, elements=st.floats(-1e6, 1e6)),
           arrays(np.float64, 16, elements=st.floats(-1e6, 1e6)))
    def test_cosine_bounded_and_symmetric(self, a, b):
        if not (np.any(a) and np.any(b)):
            return
        c = embed.cosine_similarity(a, b)
        assert -1.0 <= c <= 1.0
        assert c == embed.cosine_similarity(b, a)

    @settings(max_examples=200)
    @given(arrays(np.float64, 16, elements=st.floats(-1e3, 1e3)),
           st.floats(1e-3, 1e3))
    def test_parallel_is_exactly_one(self, a, c):
        if not np.any(a):
            return
        assert embed.cosine_similarity(a, c * a) == 1.0

    def test_power_of_two_scaling_is_bitwise(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=(2, 512))
        assert embed.cosine_similarity(8 * a, b / 4) == embed.cosine_similarity(a, b)


class TestPairwise:
    def test_identical_profiles(self):
        v = np.random.default_rng(5).normal(size=512)
        np.testing.assert_array_equal(embed.pairwise([v, v.copy()], "cosine"), np.ones((2, 2)))

    @pytest.mark.parametrize("metric,oracle", [("cosine", loop_cosine),
                                               ("euclidean", loop_euclidean)])
    def test_double_loop_oracle(self, metric, oracle):
        vecs = np.random.default_rng(6).normal(size=(3, 512))
        got = embed.pairwise(vecs, metric)
        assert np.array_equal(got, got.T)
        for i in range(3):
            for j in range(3):
                want = (1.0 if metric == "cosine" else 0.0) if i == j else oracle(vecs[i], vecs[j])
                assert abs(got[i, j] - want) <= 1e-12

    def test_errors(self):
        v = np.ones(512)
        with pytest.raises(ValueError):
            embed.pairwise([v], "cosine")
        with pytest.raises(ValueError):
            embed.pairwise([v, v], "manhattan")
        with pytest.raises(embed.ZeroNormError):
            embed.pairwise([v, np.zeros(512)], "cosine")
        assert embed.pairwise([v, np.zeros(512)], "euclidean")[0, 1] == math.sqrt(512)


class TestFormats:
    def records(self, dtype=np.float64):
        rng = np.random.default_rng(7)
        return [record(f"p{i}", rng.normal(size=512).astype(dtype)) for i in range(4)]

    def test_csv_roundtrip_exact(self):
        recs = self.records()
        assert embed.embeddings_from_csv(embed.embeddings_to_csv(recs)) == recs

    def test_binary_roundtrip_bit_exact(self):
        recs = self.records(np.float32)
        data = embed.embeddings_to_bytes(recs)
        back = embed.embeddings_from_bytes(data)
        assert back == recs
        assert embed.embeddings_to_bytes(back) == data
        assert len(data) == 12 + sum(4 + len(r.painting_id) + 2048 for r in recs)

    def test_files(self, tmp_path):
        recs = self.records(np.float32)
        for name in ("e.csv", "e.aemb"):
            embed.write_embeddings(tmp_path / name, recs)
            assert embed.read_embeddings(tmp_path / name) == recs

    @pytest.mark.parametrize("mangle", [lambda d: b"XXXX" + d[4:], lambda d: d[:-1],
                                        lambda d: d + b"\x01"])
    def test_corrupt_binary(self, mangle):
        data = embed.embeddings_to_bytes(self.records())
        with pytest.raises(embed.EmbeddingError):
            embed.embeddings_from_bytes(mangle(data))

    def test_bad_csv_header(self):
        with pytest.raises(embed.EmbeddingError):
            embed.embeddings_from_csv("id,x\n")
