"""Painting embeddings, per-artist profiles, and distance/similarity measures.

Embedding files come in two flavours:

- CSV with header ``painting_id,f0,...,f511``; values written with ``repr``
  so float64 vectors round-trip exactly.
- Binary ``AEMB``: magic, little-endian u32 record count, u32 dimension
  (always 512), then per record a u32 id length, the UTF-8 id and
  float32[dim]. float32 values round-trip exactly.
"""

import csv
import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EMBED_DIM = 512
AEMB_MAGIC = b"AEMB"


class EmbeddingError(ValueError):
    pass


class ZeroNormError(ValueError):
    """Cosine similarity is undefined for a zero vector."""


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    painting_id: str
    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.float64)
        if v.shape != (EMBED_DIM,):
            raise EmbeddingError(f"embedding for {self.painting_id} has shape {v.shape}, "
                                 f"expected ({EMBED_DIM},)")
        if not np.all(np.isfinite(v)):
            raise EmbeddingError(f"embedding for {self.painting_id} has non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    def __eq__(self, other):
        return (isinstance(other, EmbeddingRecord) and self.painting_id == other.painting_id
                and np.array_equal(self.vector, other.vector))


@dataclass(frozen=True, eq=False)
class ArtistProfile:
    artist_id: str
    mean_vector: np.ndarray
    mean_year: float | None
    n_paintings: int
    style: object

    def __eq__(self, other):
        return (isinstance(other, ArtistProfile)
                and (self.artist_id, self.mean_year, self.n_paintings, self.style)
                == (other.artist_id, other.mean_year, other.n_paintings, other.style)
                and np.array_equal(self.mean_vector, other.mean_vector))


def aggregate_artists(embeddings, manifest):
    """One profile per artist with embedded paintings, ordered by artist_id.

    Vectors and years are averaged in float64, summing in input order.
    """
    paintings = manifest.by_id()
    groups = {}
    for rec in embeddings:
        p = paintings.get(rec.painting_id)
        if p is None:
            raise EmbeddingError(f"painting {rec.painting_id!r} is not in the manifest")
        groups.setdefault(p.artist_id, []).append((rec, p))
    profiles = []
    for aid in sorted(groups):
        items = groups[aid]
        total = np.zeros(EMBED_DIM, dtype=np.float64)
        for rec, _ in items:
            total += rec.vector
        years = [p.year for _, p in items if p.year is not None]
        mean_year = sum(years) / len(years) if years else None
        profiles.append(ArtistProfile(aid, total / len(items), mean_year, len(items),
                                      manifest.artists[aid].primary_style))
    return profiles


def _pair(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"vectors must be 1-d of equal length, got {p.shape} and {q.shape}")
    return p, q


def euclidean(p, q):
    p, q = _pair(p, q)
    d = q - p
    return float(np.sqrt(np.dot(d, d)))


def cosine_similarity(a, b):
    """A.B / (|A| |B|), clamped to [-1, 1].

    Evaluated as 1 - |a_hat - b_hat|^2 / 2 on the unit vectors, which equals
    the dot-product form but stays exact for parallel inputs.
    """
    a, b = _pair(a, b)
    unit = []
    for v in (a, b):
        top = float(np.max(np.abs(v))) if v.size else 0.0
        if top == 0.0:
            raise ZeroNormError("cosine similarity is undefined for a zero-norm vector")
        v = v / top  # keeps the squared norm clear of underflow and overflow
        unit.append(v / math.sqrt(float(np.dot(v, v))))
    diff = unit[0] - unit[1]
    cos = 1.0 - float(np.dot(diff, diff)) / 2.0
    return min(1.0, max(-1.0, cos))


def cosine_distance(a, b):
    return 1.0 - cosine_similarity(a, b)


METRICS = {"euclidean": (euclidean, 0.0), "cosine": (cosine_similarity, 1.0)}


def pairwise(profiles, metric="cosine"):
    """Symmetric matrix of ``metric`` over profile mean vectors.

    Each unordered pair is evaluated once and mirrored.
    """
    try:
        fn, diag = METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None
    vectors = [p.mean_vector if isinstance(p, ArtistProfile) else np.asarray(p)
               for p in profiles]
    n = len(vectors)
    if n < 2:
        raise ValueError("pairwise needs at least two profiles")
    if metric == "cosine":
        for i, v in enumerate(vectors):
            if not np.any(v):
                name = profiles[i].artist_id if isinstance(profiles[i], ArtistProfile) else i
                raise ZeroNormError(f"profile {name} has a zero mean vector")
    out = np.full((n, n), diag, dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = fn(vectors[i], vectors[j])
    return out


# -- file formats -------------------------------------------------------------

def embeddings_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["painting_id"] + [f"f{i}" for i in range(EMBED_DIM)])
    for r in records:
        w.writerow([r.painting_id] + [repr(float(v)) for v in r.vector])
    return buf.getvalue()


def embeddings_from_csv(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["painting_id"] + [f"f{i}" for i in range(EMBED_DIM)]
    if header != expected:
        raise EmbeddingError("embedding CSV header must be painting_id,f0,...,f511")
    out = []
    for row in reader:
        if not row:
            continue
        if len(row) != EMBED_DIM + 1:
            raise EmbeddingError(f"line {reader.line_num}: expected {EMBED_DIM + 1} fields")
        try:
            vec = np.array([float(v) for v in row[1:]])
        except ValueError as exc:
            raise EmbeddingError(f"line {reader.line_num}: {exc}") from None
        out.append(EmbeddingRecord(row[0], vec))
    return out


def embeddings_to_bytes(records):
    records = list(records)
    parts = [AEMB_MAGIC, struct.pack("<II", len(records), EMBED_DIM)]
    for r in records:
        raw = r.painting_id.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(np.asarray(r.vector, dtype="<f4").tobytes())
    return b"".join(parts)


def embeddings_from_bytes(data):
    if data[:4] != AEMB_MAGIC:
        raise EmbeddingError(f"bad embedding magic {data[:4]!r}")
    if len(data) < 12:
        raise EmbeddingError("embedding file truncated")
    count, dim = struct.unpack_from("<II", data, 4)
    if dim != EMBED_DIM:
        raise EmbeddingError(f"embedding dimension {dim}, expected {EMBED_DIM}")
    pos = 12
    out = []
    for _ in range(count):
        if pos + 4 > len(data):
            raise EmbeddingError("embedding file truncated")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        pid = data[pos:pos + n].decode("utf-8")
        pos += n
        raw = data[pos:pos + 4 * dim]
        if len(raw) != 4 * dim:
            raise EmbeddingError("embedding file truncated")
        pos += 4 * dim
        out.append(EmbeddingRecord(pid, np.frombuffer(raw, dtype="<f4").astype(np.float64)))
    if pos != len(data):
        raise EmbeddingError(f"{len(data) - pos} trailing bytes in embedding file")
    return out


def read_embeddings(path):
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == AEMB_MAGIC:
        return embeddings_from_bytes(data)
    return embeddings_from_csv(data)


def write_embeddings(path, records):
    path = Path(path)
    if path.suffix == ".aemb":
        path.write_bytes(embeddings_to_bytes(records))
    else:
        path.write_text(embeddings_to_csv(records))
