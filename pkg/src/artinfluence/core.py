"""Style classes, painting manifests, cleaning rules and train/test splitting."""

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from . import pixmap

MANIFEST_HEADER = ("painting_id", "artist_id", "artist_name", "style", "year",
                   "image_path", "flags")
FLAG_NAMES = ("not_painting", "partial_frame", "sketch", "monochrome", "distorted")
YEAR_RANGE = (1200, 2100)

# mean (max - min) over R, G, B on a 0-255 scale
MONOCHROME_THRESHOLD = 8.0


class StyleClass(enum.Enum):
    """The nine style classes, valued by their 1-based table index."""

    EarlyRenaissance = 1
    HighRenaissance = 2
    Baroque = 3
    Realism = 4
    Impressionism = 5
    Cubism = 6
    AbstractArt = 7
    PopArt = 8
    Ukiyoe = 9

    @property
    def index(self):
        return self.value

    @property
    def label(self):
        """Zero-based class index used by the classifier."""
        return self.value - 1

    @classmethod
    def from_label(cls, label):
        if not 0 <= int(label) < len(cls):
            raise ValueError(f"class index {label} outside 0..{len(cls) - 1}")
        return cls(int(label) + 1)

    @classmethod
    def parse(cls, name):
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown style {name!r}") from None


STYLES = tuple(StyleClass)
NUM_CLASSES = len(STYLES)

# images and artists per class
CORPUS_IMAGES = MappingProxyType({
    StyleClass.EarlyRenaissance: 1188,
    StyleClass.HighRenaissance: 1442,
    StyleClass.Baroque: 3462,
    StyleClass.Realism: 4004,
    StyleClass.Impressionism: 7788,
    StyleClass.Cubism: 1258,
    StyleClass.AbstractArt: 2927,
    StyleClass.PopArt: 1050,
    StyleClass.Ukiyoe: 991,
})
CORPUS_ARTISTS = MappingProxyType({
    StyleClass.EarlyRenaissance: 21,
    StyleClass.HighRenaissance: 25,
    StyleClass.Baroque: 50,
    StyleClass.Realism: 33,
    StyleClass.Impressionism: 20,
    StyleClass.Cubism: 14,
    StyleClass.AbstractArt: 37,
    StyleClass.PopArt: 24,
    StyleClass.Ukiyoe: 11,
})


class ManifestError(ValueError):
    """Raised for malformed manifests; ``problems`` holds (line, message) pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = "; ".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.problems)
        super().__init__(lines)


@dataclass(frozen=True)
class PaintingRecord:
    painting_id: str
    artist_id: str
    style: StyleClass
    year: int | None
    image_ref: str
    flags: frozenset = frozenset()


@dataclass(frozen=True)
class ArtistRecord:
    artist_id: str
    name: str
    primary_style: StyleClass


@dataclass(frozen=True)
class DatasetManifest:
    paintings: tuple
    artists: MappingProxyType

    def __post_init__(self):
        object.__setattr__(self, "paintings", tuple(self.paintings))
        object.__setattr__(self, "artists", MappingProxyType(dict(self.artists)))

    def __len__(self):
        return len(self.paintings)

    def by_id(self):
        return {p.painting_id: p for p in self.paintings}

    def subset(self, painting_ids):
        """Manifest restricted to ``painting_ids``, keeping artists that still have works."""
        keep = set(painting_ids)
        paintings = [p for p in self.paintings if p.painting_id in keep]
        used = {p.artist_id for p in paintings}
        return DatasetManifest(paintings, {k: v for k, v in self.artists.items() if k in used})


@dataclass(frozen=True)
class Exclusion:
    painting_id: str
    rule: str
    detail: str = ""


@dataclass
class ExclusionReport:
    exclusions: list = field(default_factory=list)

    def __len__(self):
        return len(self.exclusions)

    def rules(self):
        return {e.painting_id: e.rule for e in self.exclusions}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["painting_id", "rule", "detail"])
        for e in self.exclusions:
            w.writerow([e.painting_id, e.rule, e.detail])
        return buf.getvalue()


@dataclass(frozen=True)
class SplitAssignment:
    assignment: MappingProxyType
    ratio: float
    seed: int

    TRAIN = "Train"
    TEST = "Test"

    def ids(self, which):
        return [pid for pid, side in self.assignment.items() if side == which]

    @property
    def train(self):
        return self.ids(self.TRAIN)

    @property
    def test(self):
        return self.ids(self.TEST)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["painting_id", "split"])
        for pid in sorted(self.assignment):
            w.writerow([pid, self.assignment[pid]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, ratio=float("nan"), seed=-1):
        rows = list(csv.DictReader(io.StringIO(text)))
        assignment = {}
        for row in rows:
            if row["split"] not in (cls.TRAIN, cls.TEST):
                raise ValueError(f"bad split label {row['split']!r}")
            assignment[row["painting_id"]] = row["split"]
        return cls(MappingProxyType(assignment), ratio, seed)


def _decode(data):
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data


def parse_manifest(data):
    """Parse manifest CSV text (str or UTF-8 bytes) into a :class:`DatasetManifest`.

    All malformed rows are collected and raised together as one
    :class:`ManifestError` naming their line numbers.
    """
    reader = csv.reader(io.StringIO(_decode(data)))
    try:
        header = next(reader)
    except StopIteration:
        raise ManifestError([(1, "missing header")]) from None
    header = [h.strip() for h in header]
    problems = []
    for col in MANIFEST_HEADER:
        if header.count(col) == 0:
            problems.append((1, f"missing header column {col!r}"))
        elif header.count(col) > 1:
            problems.append((1, f"duplicate header column {col!r}"))
    if not problems and tuple(header) != MANIFEST_HEADER:
        problems.append((1, "header columns out of order, expected " + ",".join(MANIFEST_HEADER)))
    if problems:
        raise ManifestError(problems)

    paintings = []
    artists = {}
    seen = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(MANIFEST_HEADER):
            problems.append((line, f"expected {len(MANIFEST_HEADER)} fields, got {len(row)}"))
            continue
        pid, aid, aname, style_name, year_s, image_path, flags_s = (c.strip() for c in row)
        bad = False
        if not pid:
            problems.append((line, "empty painting_id"))
            bad = True
        elif pid in seen:
            problems.append((line, f"duplicate painting_id {pid!r} (first on line {seen[pid]})"))
            bad = True
        if not aid:
            problems.append((line, "empty artist_id"))
            bad = True
        try:
            style = StyleClass.parse(style_name)
        except ValueError:
            problems.append((line, f"unknown style {style_name!r}"))
            bad = True
        year = None
        if year_s:
            try:
                year = int(year_s)
            except ValueError:
                problems.append((line, f"non-integer year {year_s!r}"))
                bad = True
            else:
                if not YEAR_RANGE[0] <= year <= YEAR_RANGE[1]:
                    problems.append((line, f"year {year} outside {YEAR_RANGE[0]}..{YEAR_RANGE[1]}"))
                    bad = True
        flags = frozenset(f.strip() for f in flags_s.split("|") if f.strip())
        unknown = sorted(flags - set(FLAG_NAMES))
        if unknown:
            problems.append((line, f"unknown flags {unknown}"))
            bad = True
        if bad:
            continue
        seen[pid] = line
        prior = artists.get(aid)
        if prior is None:
            artists[aid] = ArtistRecord(aid, aname, style)
        elif prior.primary_style is not style:
            problems.append((line, f"artist {aid!r} has style {style.name}, "
                                   f"but earlier rows say {prior.primary_style.name}"))
            continue
        elif prior.name != aname:
            problems.append((line, f"artist {aid!r} named {aname!r}, earlier {prior.name!r}"))
            continue
        paintings.append(PaintingRecord(pid, aid, style, year, image_path, flags))
    if problems:
        raise ManifestError(problems)
    return DatasetManifest(paintings, artists)


def manifest_to_csv(manifest):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for p in manifest.paintings:
        flags = "|".join(f for f in FLAG_NAMES if f in p.flags)
        w.writerow([p.painting_id, p.artist_id, manifest.artists[p.artist_id].name,
                    p.style.name, "" if p.year is None else p.year, p.image_ref, flags])
    return buf.getvalue()


def read_manifest(path):
    return parse_manifest(Path(path).read_bytes())


def channel_spread(image):
    """Mean over pixels of (max - min) across R, G, B, on a 0-255 scale."""
    image = np.asarray(image)
    if image.ndim == 2:
        return 0.0
    if image.dtype != np.uint8:
        image = np.asarray(image, dtype=np.float64) * 255.0
    image = image.astype(np.float64)
    return float(np.mean(image.max(axis=2) - image.min(axis=2)))


class PixmapProbe:
    """Image-stats provider reading pixmaps relative to ``root``."""

    def __init__(self, root):
        self.root = Path(root)

    def __call__(self, image_ref):
        return channel_spread(pixmap.read(self.root / image_ref))


def clean(manifest, image_probe=None, threshold=MONOCHROME_THRESHOLD):
    """Drop flagged paintings and, given ``image_probe``, near-monochrome images.

    ``image_probe`` maps an image reference to its mean channel spread. A
    probe failure excludes the painting as ``unreadable``.
    """
    kept = []
    report = ExclusionReport()
    for p in manifest.paintings:
        if p.flags:
            ordered = [f for f in FLAG_NAMES if f in p.flags]
            report.exclusions.append(Exclusion(p.painting_id, ordered[0], "|".join(ordered)))
            continue
        if image_probe is not None:
            try:
                spread = float(image_probe(p.image_ref))
            except Exception as exc:  # noqa: BLE001 - any probe failure is per-painting
                report.exclusions.append(Exclusion(p.painting_id, "unreadable", str(exc)))
                continue
            if spread < threshold:
                report.exclusions.append(
                    Exclusion(p.painting_id, "monochrome_heuristic", f"channel spread {spread:.3f}"))
                continue
        kept.append(p)
    used = {p.artist_id for p in kept}
    artists = {k: v for k, v in manifest.artists.items() if k in used}
    return DatasetManifest(kept, artists), report


def split(manifest, ratio, seed):
    """Seeded uniform split; the first round-half-up(ratio * N) shuffled ids train."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    n = len(manifest.paintings)
    if n == 0:
        raise ValueError("cannot split an empty manifest")
    ids = sorted(p.painting_id for p in manifest.paintings)
    order = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(ratio * n + 0.5)
    assignment = {}
    for rank, idx in enumerate(order):
        assignment[ids[idx]] = SplitAssignment.TRAIN if rank < n_train else SplitAssignment.TEST
    return SplitAssignment(MappingProxyType(dict(sorted(assignment.items()))), ratio, seed)


def class_histogram(manifest):
    counts = {s: 0 for s in STYLES}
    for p in manifest.paintings:
        counts[p.style] += 1
    return counts


def reference_manifest_csv():
    """Synthetic manifest CSV matching the per-class image and artist counts.

    Images are spread across each class's artists as evenly as possible;
    years are left blank.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    artist_no = 0
    painting_no = 0
    for style in STYLES:
        n_art = CORPUS_ARTISTS[style]
        n_img = CORPUS_IMAGES[style]
        for a in range(n_art):
            artist_no += 1
            aid = f"A{artist_no:03d}"
            count = n_img // n_art + (1 if a < n_img % n_art else 0)
            for _ in range(count):
                painting_no += 1
                pid = f"P{painting_no:05d}"
                w.writerow([pid, aid, f"Artist {artist_no}", style.name, "",
                            f"images/{pid}.ppm", ""])
    return buf.getvalue()
