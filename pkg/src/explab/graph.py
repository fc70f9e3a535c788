"""Graph data model and structural primitives.

Graphs are small, undirected, simple and immutable. Node features are a
``node_count x feat_dim`` float array; optional integer ``node_tags`` carry
discrete node types that every matching routine must respect.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidSize, NodeCountMismatch, ShapeMismatch, SizeCapExceeded

CONTAINMENT_NODE_CAP = 64
CANONICAL_NODE_CAP = 64
CANONICAL_LEAF_BUDGET = 200_000


def _norm_edge(u, v):
    u, v = int(u), int(v)
    return (u, v) if u < v else (v, u)


class Graph:
    """Undirected simple graph with node features and optional node tags."""

    __slots__ = ("node_count", "edges", "features", "node_tags", "_adj", "_hash")

    def __init__(self, node_count, edges=(), features=None, node_tags=None):
        n = int(node_count)
        if n < 0:
            raise ValueError("node_count must be nonnegative")
        edge_set = set()
        for u, v in edges:
            e = _norm_edge(u, v)
            if e[0] == e[1]:
                raise ValueError(f"self-loop on node {e[0]}")
            if e[0] < 0 or e[1] >= n:
                raise ValueError(f"edge {e} out of range for {n} nodes")
            edge_set.add(e)
        if features is None:
            feats = np.ones((n, 1), dtype=np.float64)
        else:
            feats = np.array(features, dtype=np.float64, copy=True)
            if feats.ndim == 1 and n == 0:
                feats = feats.reshape(0, 0)
            if feats.ndim != 2 or feats.shape[0] != n:
                raise ShapeMismatch(f"features must have {n} rows, got shape {feats.shape}")
        feats.setflags(write=False)
        tags = None
        if node_tags is not None:
            tags = tuple(int(t) for t in node_tags)
            if len(tags) != n:
                raise ShapeMismatch(f"node_tags must have length {n}")
        self._init(n, frozenset(edge_set), feats, tags)

    def _init(self, n, edges, feats, tags):
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "node_tags", tags)
        object.__setattr__(self, "_adj", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Same vertex set, tags and features; new (already normalized) edge set."""
        g = object.__new__(Graph)
        g._init(self.node_count, frozenset(edges), self.features, self.node_tags)
        return g

    @property
    def feat_dim(self) -> int:
        return self.features.shape[1]

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def adjacency(self) -> tuple[frozenset, ...]:
        if self._adj is None:
            nbrs = [set() for _ in range(self.node_count)]
            for u, v in self.edges:
                nbrs[u].add(v)
                nbrs[v].add(u)
            object.__setattr__(self, "_adj", tuple(frozenset(s) for s in nbrs))
        return self._adj

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def tag(self, v: int) -> int:
        return 0 if self.node_tags is None else self.node_tags[v]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and self.edges == other.edges
            and self.node_tags == other.node_tags
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
        )

    def __hash__(self):
        if self._hash is None:
            h = hash((self.node_count, self.edges, self.node_tags,
                      self.features.shape, self.features.tobytes()))
            object.__setattr__(self, "_hash", h)
        return self._hash

    def __repr__(self):
        return f"Graph(n={self.node_count}, m={self.edge_count})"


@dataclass(frozen=True)
class LabeledGraph:
    graph: Graph
    label: int


@dataclass(frozen=True)
class Explanation:
    """Vertex subset of a parent graph together with its induced edges."""

    vertex_subset: frozenset
    edge_subset: frozenset

    @classmethod
    def induced(cls, parent: Graph, vertices: Iterable[int]) -> "Explanation":
        vs = frozenset(int(v) for v in vertices)
        if any(v < 0 or v >= parent.node_count for v in vs):
            raise ValueError("explanation vertex outside parent graph")
        es = frozenset(e for e in parent.edges if e[0] in vs and e[1] in vs)
        return cls(vs, es)

    @classmethod
    def whole(cls, parent: Graph) -> "Explanation":
        return cls(frozenset(range(parent.node_count)), parent.edges)

    @property
    def edge_count(self) -> int:
        return len(self.edge_subset)

    def is_valid_for(self, parent: Graph) -> bool:
        if any(v < 0 or v >= parent.node_count for v in self.vertex_subset):
            return False
        induced = {e for e in parent.edges
                   if e[0] in self.vertex_subset and e[1] in self.vertex_subset}
        return induced == set(self.edge_subset)

    def as_graph(self, parent: Graph) -> Graph:
        """The explanation as a standalone graph, vertices renumbered ascending."""
        order = sorted(self.vertex_subset)
        index = {v: i for i, v in enumerate(order)}
        tags = None if parent.node_tags is None else [parent.node_tags[v] for v in order]
        feats = parent.features[order] if order else np.zeros((0, parent.feat_dim))
        return Graph(len(order), [(index[u], index[v]) for u, v in self.edge_subset], feats, tags)


# ---------------------------------------------------------------------------
# subgraph monomorphism


def _match_order(pattern: Graph) -> list[int]:
    adj = pattern.adjacency
    deg = pattern.degrees()
    remaining = set(range(pattern.node_count))
    order: list[int] = []
    placed: set[int] = set()
    while remaining:
        best = max(remaining, key=lambda v: (len(adj[v] & placed), deg[v], -v))
        order.append(best)
        placed.add(best)
        remaining.discard(best)
    return order


def find_embedding(pattern: Graph, host: Graph, cap: int = CONTAINMENT_NODE_CAP) -> Optional[dict]:
    """Return an injective, edge- and tag-preserving map pattern -> host, or None."""
    if pattern.node_count > cap:
        raise SizeCapExceeded(f"pattern has {pattern.node_count} nodes (cap {cap})")
    if pattern.node_count == 0:
        return {}
    if pattern.node_count > host.node_count or pattern.edge_count > host.edge_count:
        return None
    pdeg = pattern.degrees()
    hdeg = host.degrees()
    # degree-sequence domination is necessary for a monomorphism
    if any(p > h for p, h in zip(sorted(pdeg, reverse=True), sorted(hdeg, reverse=True))):
        return None
    if pattern.node_tags is not None or host.node_tags is not None:
        need: dict[int, int] = {}
        for v in range(pattern.node_count):
            need[pattern.tag(v)] = need.get(pattern.tag(v), 0) + 1
        have: dict[int, int] = {}
        for v in range(host.node_count):
            have[host.tag(v)] = have.get(host.tag(v), 0) + 1
        if any(have.get(t, 0) < c for t, c in need.items()):
            return None

    padj, hadj = pattern.adjacency, host.adjacency
    order = _match_order(pattern)
    pos = {v: i for i, v in enumerate(order)}
    # for each pattern vertex, its neighbors placed earlier in the order
    back = [[u for u in padj[v] if pos[u] < pos[v]] for v in order]
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def candidates(i):
        p = order[i]
        prev = back[i]
        if prev:
            pool = hadj[mapping[prev[0]]]
        else:
            pool = range(host.node_count)
        ptag, pd = pattern.tag(p), pdeg[p]
        for h in sorted(pool):
            if h in used or hdeg[h] < pd or host.tag(h) != ptag:
                continue
            if all(mapping[u] in hadj[h] for u in prev):
                yield h

    def extend(i):
        if i == len(order):
            return True
        p = order[i]
        for h in candidates(i):
            mapping[p] = h
            used.add(h)
            if extend(i + 1):
                return True
            del mapping[p]
            used.discard(h)
        return False

    return dict(mapping) if extend(0) else None


@functools.lru_cache(maxsize=200_000)
def _contains_cached(pattern: Graph, host: Graph, cap: int) -> bool:
    return find_embedding(pattern, host, cap) is not None


def contains_subgraph(pattern: Graph, host: Graph, cap: int = CONTAINMENT_NODE_CAP) -> bool:
    """True iff ``pattern`` embeds into ``host`` as a (not necessarily induced) subgraph."""
    return _contains_cached(pattern, host, cap)


# ---------------------------------------------------------------------------
# canonical form


def _components(g: Graph) -> list[list[int]]:
    adj = g.adjacency
    seen = [False] * g.node_count
    comps = []
    for s in range(g.node_count):
        if seen[s]:
            continue
        seen[s] = True
        stack, comp = [s], []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        comps.append(sorted(comp))
    return comps


def _refine(adj, colors):
    """Equitable refinement; cell order is a function of the old cell order only."""
    ncells = len(set(colors))
    while True:
        sigs = [(colors[v], tuple(sorted(colors[u] for u in adj[v]))) for v in range(len(colors))]
        uniq = sorted(set(sigs))
        if len(uniq) == ncells:
            return colors
        rank = {s: i for i, s in enumerate(uniq)}
        colors = [rank[s] for s in sigs]
        ncells = len(uniq)


def _canonical_component(adj, tags, budget):
    """Minimal (tags, adjacency-bits) code over an individualization-refinement tree."""
    n = len(adj)
    init = sorted({(tags[v], len(adj[v])) for v in range(n)})
    rank = {s: i for i, s in enumerate(init)}
    colors = _refine(adj, [rank[(tags[v], len(adj[v]))] for v in range(n)])
    best = None
    leaves = 0
    pair_index = {}
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            pair_index[(i, j)] = k
            k += 1
    total = k

    def twins(v, w):
        return (adj[v] - {w}) == (adj[w] - {v})

    def search(cols):
        nonlocal best, leaves
        if len(set(cols)) == n:
            leaves += 1
            if leaves > budget:
                raise SizeCapExceeded("canonical labeling search exceeded its leaf budget")
            order = sorted(range(n), key=lambda v: cols[v])
            code = 0
            for u in range(n):
                cu = cols[u]
                for w in adj[u]:
                    cw = cols[w]
                    if cu < cw:
                        code |= 1 << (total - 1 - pair_index[(cu, cw)])
            key = (tuple(tags[v] for v in order), code)
            if best is None or key < best:
                best = key
            return
        counts = {}
        for c in cols:
            counts[c] = counts.get(c, 0) + 1
        target = min(c for c, cnt in counts.items() if cnt > 1)
        members = [v for v in range(n) if cols[v] == target]
        reps: list[int] = []
        for v in members:
            # swapping twins is an automorphism fixing the current partition
            if not any(twins(v, r) for r in reps):
                reps.append(v)
        for v in reps:
            ind = [(c, 0 if u == v else 1) for u, c in enumerate(cols)]
            order = {s: i for i, s in enumerate(sorted(set(ind)))}
            search(_refine(adj, [order[s] for s in ind]))

    search(colors)
    return best


def canonical_key(g: Graph, cap: int = CANONICAL_NODE_CAP) -> bytes:
    """Byte string equal for two graphs iff they are isomorphic with matching tags."""
    return _canonical_key_cached(g, cap)


@functools.lru_cache(maxsize=200_000)
def _canonical_key_cached(g: Graph, cap: int) -> bytes:
    if g.node_count > cap:
        raise SizeCapExceeded(f"graph has {g.node_count} nodes (canonical cap {cap})")
    parts = []
    for comp in _components(g):
        local = {v: i for i, v in enumerate(comp)}
        adj = [frozenset(local[u] for u in g.adjacency[v]) for v in comp]
        tags = [g.tag(v) for v in comp]
        ctags, code = _canonical_component(adj, tags, CANONICAL_LEAF_BUDGET)
        parts.append(f"{len(comp)}:{','.join(map(str, ctags))}:{code:x}")
    parts.sort()
    return f"n{g.node_count}|".encode() + "|".join(parts).encode()


def labeled_hash(g: Graph) -> bytes:
    """Non-canonical digest of the labeled graph; used where canonicalization is refused."""
    return hashlib.sha256(to_text(g).encode()).digest()


def graph_id(g: Graph) -> bytes:
    try:
        return canonical_key(g)
    except SizeCapExceeded:
        return b"h:" + labeled_hash(g)


# ---------------------------------------------------------------------------
# constructions


def disjoint_union(a: Graph, b: Graph) -> Graph:
    if a.node_count and b.node_count and a.feat_dim != b.feat_dim:
        raise ShapeMismatch(f"feature dims differ: {a.feat_dim} vs {b.feat_dim}")
    if a.node_count == 0:
        return b
    if b.node_count == 0:
        return a
    off = a.node_count
    edges = list(a.edges) + [(u + off, v + off) for u, v in b.edges]
    feats = np.vstack([a.features, b.features])
    tags = None
    if a.node_tags is not None or b.node_tags is not None:
        tags = [a.tag(v) for v in range(a.node_count)] + [b.tag(v) for v in range(b.node_count)]
    return Graph(a.node_count + b.node_count, edges, feats, tags)


def union_all(graphs: Sequence[Graph]) -> Graph:
    return functools.reduce(disjoint_union, graphs, Graph(0, features=np.zeros((0, 1))))


def edge_symmetric_difference(a: Graph, b: Graph) -> int:
    if a.node_count != b.node_count:
        raise NodeCountMismatch(f"{a.node_count} != {b.node_count}")
    return len(a.edges ^ b.edges)


MOTIF_KINDS = ("cycle", "star", "house", "matching", "path")


def gen_motif(kind: str, size: int) -> Graph:
    """Named motif with a fixed node ordering.

    ``size`` counts nodes, except for ``matching`` where it counts edges.
    """
    if kind == "cycle":
        if size < 3:
            raise InvalidSize("cycle needs at least 3 nodes")
        edges = [(j, j + 1) for j in range(size - 1)] + [(0, size - 1)]
        return Graph(size, edges)
    if kind == "star":
        if size < 4:
            raise InvalidSize("star needs at least 4 nodes (center degree >= 3)")
        return Graph(size, [(0, j) for j in range(1, size)])
    if kind == "house":
        if size != 5:
            raise InvalidSize("house has exactly 5 nodes")
        return Graph(5, [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (3, 4)])
    if kind == "matching":
        if size < 0:
            raise InvalidSize("matching size must be nonnegative")
        return Graph(2 * size, [(2 * j, 2 * j + 1) for j in range(size)])
    if kind == "path":
        if size < 1:
            raise InvalidSize("path needs at least 1 node")
        return Graph(size, [(j, j + 1) for j in range(size - 1)])
    raise InvalidSize(f"unknown motif kind {kind!r}")


def gen_ba(n: int, attach: int, rng) -> Graph:
    """Barabasi-Albert graph: ``attach`` seed nodes, then each new node links to
    ``attach`` distinct existing nodes chosen proportionally to degree."""
    if attach < 1 or n <= attach:
        raise InvalidSize(f"need n > attach >= 1, got n={n}, attach={attach}")
    rng = np.random.default_rng(rng)
    edges = []
    targets = list(range(attach))
    repeated: list[int] = []
    for source in range(attach, n):
        for t in targets:
            edges.append((source, t))
        repeated.extend(targets)
        repeated.extend([source] * attach)
        chosen: list[int] = []
        while len(chosen) < attach:
            pick = repeated[int(rng.integers(len(repeated)))]
            if pick not in chosen:
                chosen.append(pick)
        targets = chosen
    return Graph(n, edges)


def relabel(g: Graph, perm: Sequence[int]) -> Graph:
    """Graph with node ``v`` renamed to ``perm[v]``."""
    inv = np.argsort(perm)
    tags = None if g.node_tags is None else [g.node_tags[i] for i in inv]
    return Graph(g.node_count, [(perm[u], perm[v]) for u, v in g.edges], g.features[inv], tags)


def is_isomorphic_bruteforce(a: Graph, b: Graph) -> bool:
    """Exhaustive permutation test. Only for tiny graphs."""
    if a.node_count != b.node_count or a.edge_count != b.edge_count:
        return False
    n = a.node_count
    for perm in itertools.permutations(range(n)):
        if a.node_tags is not None or b.node_tags is not None:
            if any(a.tag(v) != b.tag(perm[v]) for v in range(n)):
                continue
        if all(_norm_edge(perm[u], perm[v]) in b.edges for u, v in a.edges):
            return True
    return False


# ---------------------------------------------------------------------------
# serialization


def to_text(g: Graph) -> str:
    lines = [f"n {g.node_count} {g.feat_dim}"]
    for v in range(g.node_count):
        tag = "-" if g.node_tags is None else str(g.node_tags[v])
        feats = " ".join(repr(float(x)) for x in g.features[v])
        lines.append(f"v {v} {tag} {feats}".rstrip())
    for u, v in g.sorted_edges():
        lines.append(f"e {u} {v}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Graph:
    n = d = None
    tags: list = []
    feats: list = []
    edges = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "n":
            n, d = int(parts[1]), int(parts[2])
        elif parts[0] == "v":
            idx = int(parts[1])
            if idx != len(feats):
                raise ValueError(f"node lines out of order at {idx}")
            tags.append(None if parts[2] == "-" else int(parts[2]))
            row = [float(x) for x in parts[3:]]
            if len(row) != d:
                raise ValueError(f"node {idx} has {len(row)} features, expected {d}")
            feats.append(row)
        elif parts[0] == "e":
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise ValueError(f"unrecognized line: {line!r}")
    if n is None:
        raise ValueError("missing header line")
    if len(feats) != n:
        raise ValueError(f"expected {n} node lines, got {len(feats)}")
    node_tags = None if all(t is None for t in tags) else tags
    return Graph(n, edges, np.array(feats, dtype=np.float64).reshape(n, d), node_tags)


def to_json_dict(g: Graph) -> dict:
    return {
        "n": g.node_count,
        "feat_dim": g.feat_dim,
        "tags": None if g.node_tags is None else list(g.node_tags),
        "features": [[float(x) for x in row] for row in g.features],
        "edges": [list(e) for e in g.sorted_edges()],
    }


def from_json_dict(d: dict) -> Graph:
    n, fd = int(d["n"]), int(d["feat_dim"])
    feats = np.array(d["features"], dtype=np.float64).reshape(n, fd)
    return Graph(n, [tuple(e) for e in d["edges"]], feats, d.get("tags"))


def round_half_up(x: float) -> int:
    # tolerance absorbs products such as 0.1 * 45 landing just below .5
    return int(math.floor(x + 0.5 + 1e-9))
