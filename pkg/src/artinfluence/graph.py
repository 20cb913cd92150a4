"""Artist networks: maximum-cosine-similarity linkage and chronological lineage."""

import csv
import io
import json
import logging
from dataclasses import dataclass, field

from .core import StyleClass
from .embed import pairwise

log = logging.getLogger(__name__)

# fixed node palette, in style-table order; shared with the plots
STYLE_COLORS = {
    StyleClass.EarlyRenaissance: "#8c564b",
    StyleClass.HighRenaissance: "#d62728",
    StyleClass.Baroque: "#1f3b73",
    StyleClass.Realism: "#2ca02c",
    StyleClass.Impressionism: "#17becf",
    StyleClass.Cubism: "#ff7f0e",
    StyleClass.AbstractArt: "#9467bd",
    StyleClass.PopArt: "#e377c2",
    StyleClass.Ukiyoe: "#7f7f7f",
}

# pairs discussed as plausible linkages, by artist display name
EXPECTED_LINKAGES = (
    ("Pablo Picasso", "Georges Braque"),
    ("Duccio", "Pietro Lorenzetti"),
    ("Duccio", "Ambrogio Lorenzetti"),
    ("Paul Klee", "Wassily Kandinsky"),
    ("William Dobson", "Caravaggio"),
)

TIMELINE_WINDOW = 10.0
TIMELINE_MIN_SEPARATION = 1.0


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    artist_id: str
    style: StyleClass
    mean_year: float | None
    degree: int


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    weight: float


@dataclass
class InfluenceGraph:
    """Undirected when ``directed`` is False; edges then have src < dst."""

    nodes: list
    edges: list
    directed: bool = False
    ties: list = field(default_factory=list)

    def node(self, artist_id):
        for n in self.nodes:
            if n.artist_id == artist_id:
                return n
        raise KeyError(artist_id)

    def edge_set(self):
        if self.directed:
            return {(e.src, e.dst) for e in self.edges}
        return {frozenset((e.src, e.dst)) for e in self.edges}

    def degrees(self):
        return {n.artist_id: n.degree for n in self.nodes}

    def __eq__(self, other):
        return (isinstance(other, InfluenceGraph) and self.directed == other.directed
                and self.nodes == other.nodes and self.edges == other.edges)


LineageGraph = InfluenceGraph


def _select_partners(profiles):
    """Each profile's most cosine-similar other profile.

    Returns (partner index per profile, similarity matrix, tie messages).
    Ties go to the lexicographically smaller artist_id.
    """
    sims = pairwise(profiles, "cosine")
    ids = [p.artist_id for p in profiles]
    partners = []
    ties = []
    for i in range(len(profiles)):
        best = None
        for j in range(len(profiles)):
            if j == i:
                continue
            if best is None or sims[i, j] > sims[i, best] or (
                    sims[i, j] == sims[i, best] and ids[j] < ids[best]):
                best = j
        tied = sorted(ids[j] for j in range(len(profiles))
                      if j != i and sims[i, j] == sims[i, best])
        if len(tied) > 1:
            msg = f"argmax tie for {ids[i]} among {tied}; chose {ids[best]}"
            log.warning(msg)
            ties.append(msg)
        partners.append(best)
    return partners, sims, ties


def _check_profiles(profiles):
    profiles = list(profiles)
    if len(profiles) < 2:
        raise GraphError("a network needs at least two artists")
    ids = [p.artist_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise GraphError("duplicate artist ids")
    return profiles


def _assemble(profiles, pairs, directed, ties):
    degree = {p.artist_id: 0 for p in profiles}
    for src, dst, _ in pairs:
        degree[src] += 1
        degree[dst] += 1
    nodes = [Node(p.artist_id, p.style, p.mean_year, degree[p.artist_id])
             for p in sorted(profiles, key=lambda p: p.artist_id)]
    edges = sorted((Edge(s, d, w) for s, d, w in pairs), key=lambda e: (e.src, e.dst))
    return InfluenceGraph(nodes, edges, directed, ties)


def build_similarity_network(profiles):
    """Undirected graph linking every artist to its maximum-cosine partner.

    Mutual selections collapse to one edge; degree counts incident edges
    after that deduplication.
    """
    profiles = _check_profiles(profiles)
    partners, sims, ties = _select_partners(profiles)
    pairs = {}
    for i, j in enumerate(partners):
        a, b = sorted((profiles[i].artist_id, profiles[j].artist_id))
        pairs[(a, b)] = float(sims[i, j])
    return _assemble(profiles, [(a, b, w) for (a, b), w in pairs.items()], False, ties)


def build_lineage(profiles):
    """Directed graph from the same pairing, each edge pointing earlier -> later.

    Equal mean years orient from the smaller artist_id; such edges are
    reported in ``ties``.
    """
    profiles = _check_profiles(profiles)
    missing = [p.artist_id for p in profiles if p.mean_year is None]
    if missing:
        raise GraphError(f"artists without a mean year: {missing}")
    partners, sims, ties = _select_partners(profiles)
    pairs = {}
    for i, j in enumerate(partners):
        a, b = profiles[i], profiles[j]
        if (a.mean_year, a.artist_id) > (b.mean_year, b.artist_id):
            a, b = b, a
        if a.mean_year == b.mean_year and (a.artist_id, b.artist_id) not in pairs:
            msg = f"equal mean year {a.mean_year} for {a.artist_id} and {b.artist_id}; " \
                  f"oriented {a.artist_id} -> {b.artist_id}"
            log.warning(msg)
            ties.append(msg)
        pairs[(a.artist_id, b.artist_id)] = float(sims[i, j])
    return _assemble(profiles, [(a, b, w) for (a, b), w in pairs.items()], True, ties)


def split_by_year(profiles):
    """(profiles with a mean year, ids of those without)."""
    dated = [p for p in profiles if p.mean_year is not None]
    return dated, [p.artist_id for p in profiles if p.mean_year is None]


def layout_timeline(graph, window=TIMELINE_WINDOW):
    """Positions with x = mean year and y = an integer row.

    Nodes are placed in (year, id) order into the lowest row whose last node
    is at least ``window`` years earlier, so nodes in one row are ``window``
    apart and distinct rows are 1 apart.
    """
    if window < TIMELINE_MIN_SEPARATION:
        raise ValueError(f"window must be at least {TIMELINE_MIN_SEPARATION}")
    row_last = []
    pos = {}
    for n in sorted(graph.nodes, key=lambda n: (n.mean_year, n.artist_id)):
        if n.mean_year is None:
            raise GraphError(f"{n.artist_id} has no mean year")
        x = float(n.mean_year)
        for r, last in enumerate(row_last):
            if x - last >= window:
                row_last[r] = x
                break
        else:
            r = len(row_last)
            row_last.append(x)
        pos[n.artist_id] = (x, float(r))
    return pos


# -- export -------------------------------------------------------------------

def _dot_id(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph, labels=None):
    labels = labels or {}
    kind, arrow = ("digraph", "->") if graph.directed else ("graph", "--")
    lines = [f"{kind} artists {{", "  node [shape=circle, style=filled];"]
    for n in graph.nodes:
        width = 0.3 + 0.15 * n.degree
        attrs = [f"label={_dot_id(labels.get(n.artist_id, n.artist_id))}",
                 f"class={_dot_id(n.style.name)}",
                 f"fillcolor={_dot_id(STYLE_COLORS[n.style])}",
                 f"width={width:.2f}"]
        if n.mean_year is not None:
            attrs.append(f"year={_dot_id(repr(float(n.mean_year)))}")
        lines.append(f"  {_dot_id(n.artist_id)} [{', '.join(attrs)}];")
    for e in graph.edges:
        lines.append(f"  {_dot_id(e.src)} {arrow} {_dot_id(e.dst)} [weight={e.weight!r}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(graph):
    doc = {
        "nodes": [{"id": n.artist_id, "style": n.style.name,
                   "mean_year": None if n.mean_year is None else float(n.mean_year),
                   "degree": n.degree} for n in graph.nodes],
        "edges": [{"src": e.src, "dst": e.dst, "weight": e.weight} for e in graph.edges],
        "directed": graph.directed,
    }
    return json.dumps(doc, indent=2) + "\n"


def export_graph(graph, format, labels=None):
    """Serialize to ``dot`` or ``json`` bytes; output is deterministic."""
    if format == "dot":
        return to_dot(graph, labels).encode("utf-8")
    if format == "json":
        return to_json(graph).encode("utf-8")
    raise ValueError(f"unknown graph format {format!r}")


def graph_from_json(data):
    doc = json.loads(data)
    nodes = [Node(n["id"], StyleClass.parse(n["style"]), n["mean_year"], int(n["degree"]))
             for n in doc["nodes"]]
    edges = [Edge(e["src"], e["dst"], float(e["weight"])) for e in doc["edges"]]
    return InfluenceGraph(nodes, edges, bool(doc.get("directed", False)))


def read_index_mapping(text):
    """Parse an ``index,artist_name`` CSV into {artist_name: index}."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and set(rows[0]) != {"index", "artist_name"}:
        raise ValueError("index mapping CSV must have header index,artist_name")
    return {r["artist_name"]: r["index"] for r in rows}


def expected_linkage_report(graph, names):
    """Status of each expected linkage given {artist_id: display name}.

    Informational only: returns rows of (name_a, name_b, status) where status
    is ``linked``, ``not linked`` or ``absent``.
    """
    by_name = {v: k for k, v in names.items()}
    edges = graph.edge_set()
    out = []
    for a, b in EXPECTED_LINKAGES:
        ia, ib = by_name.get(a), by_name.get(b)
        if ia is None or ib is None:
            status = "absent"
        elif frozenset((ia, ib)) in edges or (ia, ib) in edges or (ib, ia) in edges:
            status = "linked"
        else:
            status = "not linked"
        out.append((a, b, status))
    return out


def timeline_check(graph):
    """Edges violating earlier -> later; empty for any graph built by build_lineage."""
    years = {n.artist_id: n.mean_year for n in graph.nodes}
    return [e for e in graph.edges if years[e.src] > years[e.dst]]


def has_cycle(graph):
    adj = {n.artist_id: [] for n in graph.nodes}
    for e in graph.edges:
        adj[e.src].append(e.dst)
    state = {}

    def visit(u):
        state[u] = 1
        for v in adj[u]:
            if state.get(v) == 1 or (v not in state and visit(v)):
                return True
        state[u] = 2
        return False

    return any(u not in state and visit(u) for u in adj)

