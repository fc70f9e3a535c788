"""Finite classification problems with ground-truth explainers.

An :class:`ExactProblem` lists ``P(graph, label)`` explicitly, so every
statistical quantity can be computed by enumeration. A :class:`SamplerProblem`
only knows how to draw labeled graphs from a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import graph as gr
from .errors import ExplainerUndefined, InvalidSize
from .graph import Explanation, Graph, LabeledGraph

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Entry:
    graph: Graph
    label: int
    prob: float
    explanation: Explanation


class TableExplainer:
    """Explainer backed by a table of known graphs.

    Exact matches return the stored explanation; isomorphic copies get the
    stored explanation transported along an isomorphism. Anything else goes
    to ``fallback`` when one is given.
    """

    def __init__(self, pairs: Sequence[tuple[Graph, Explanation]], fallback=None):
        self._exact = {}
        self._by_key = {}
        for g, e in pairs:
            self._exact.setdefault(g, e)
            self._by_key.setdefault(gr.graph_id(g), (g, e))
        self.fallback = fallback

    def __call__(self, g: Graph) -> Explanation:
        hit = self._exact.get(g)
        if hit is not None:
            return hit
        ref = self._by_key.get(gr.graph_id(g))
        if ref is not None:
            ref_g, ref_e = ref
            if ref_g.node_count == g.node_count and ref_g.edge_count == g.edge_count:
                mapping = gr.find_embedding(ref_g, g, cap=max(ref_g.node_count, 1))
                if mapping is not None:
                    return Explanation.induced(g, (mapping[v] for v in ref_e.vertex_subset))
        if self.fallback is not None:
            return self.fallback(g)
        raise ExplainerUndefined(f"no explanation known for {g!r}")


class MotifExplainer:
    """Returns the first motif (in priority order) that embeds into the graph."""

    def __init__(self, motifs: Sequence[Graph]):
        self.motifs = list(motifs)

    def __call__(self, g: Graph) -> Explanation:
        for m in self.motifs:
            mapping = gr.find_embedding(m, g)
            if mapping is not None:
                return Explanation.induced(g, mapping.values())
        raise ExplainerUndefined(f"none of the motifs embeds into {g!r}")


class IdentityExplainer:
    def __call__(self, g: Graph) -> Explanation:
        return Explanation.whole(g)


class ExactProblem:
    """Finite-support joint distribution over (graph, label) with explanations.

    Entries whose graphs are isomorphic describe the same input; they must
    carry different labels, and together encode ``P(Y | graph)``.
    """

    def __init__(self, entries: Sequence[Entry], num_classes: int, name: str = "custom",
                 explainer: Optional[Callable[[Graph], Explanation]] = None):
        if num_classes < 1:
            raise ValueError("num_classes must be positive")
        self.entries = tuple(entries)
        self.num_classes = int(num_classes)
        self.name = name
        total = sum(e.prob for e in self.entries)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        ids = []
        groups: dict[bytes, int] = {}
        for e in self.entries:
            if not 0.0 < e.prob <= 1.0:
                raise ValueError(f"probability {e.prob} outside (0, 1]")
            if not 0 <= e.label < self.num_classes:
                raise ValueError(f"label {e.label} outside [0, {self.num_classes})")
            if not e.explanation.is_valid_for(e.graph):
                raise ValueError("explanation is not an induced subgraph of its graph")
            gid = gr.graph_id(e.graph)
            ids.append(groups.setdefault(gid, len(groups)))
        self.graph_ids = tuple(ids)
        seen: dict[int, set] = {}
        for gid, e in zip(ids, self.entries):
            labels = seen.setdefault(gid, set())
            if e.label in labels:
                raise ValueError("two entries share a graph and a label")
            labels.add(e.label)
        self.explainer = explainer or TableExplainer([(e.graph, e.explanation) for e in self.entries])

    @property
    def probs(self) -> np.ndarray:
        return np.array([e.prob for e in self.entries])

    def __len__(self):
        return len(self.entries)

    def distinct_graphs(self) -> list[tuple[Graph, float, Explanation]]:
        """One row per input graph with its marginal probability."""
        out: dict[int, list] = {}
        for gid, e in zip(self.graph_ids, self.entries):
            if gid in out:
                out[gid][1] += e.prob
            else:
                out[gid] = [e.graph, e.prob, e.explanation]
        return [tuple(v) for v in out.values()]

    def label_distribution(self) -> dict[int, np.ndarray]:
        """graph id -> vector P(Y = y | graph)."""
        mass: dict[int, np.ndarray] = {}
        for gid, e in zip(self.graph_ids, self.entries):
            mass.setdefault(gid, np.zeros(self.num_classes))[e.label] += e.prob
        return {gid: v / v.sum() for gid, v in mass.items()}

    def with_explanations(self, explain: Callable[[Graph], Explanation], name=None) -> "ExactProblem":
        entries = [Entry(e.graph, e.label, e.prob, explain(e.graph)) for e in self.entries]
        return ExactProblem(entries, self.num_classes, name or self.name, explainer=explain)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "num_classes": self.num_classes,
            "entries": [
                {
                    "graph": gr.to_json_dict(e.graph),
                    "label": e.label,
                    "prob": e.prob,
                    "explanation": {
                        "vertices": sorted(e.explanation.vertex_subset),
                        "edges": [list(x) for x in sorted(e.explanation.edge_subset)],
                    },
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExactProblem":
        entries = []
        for item in d["entries"]:
            g = gr.from_json_dict(item["graph"])
            expl = Explanation.induced(g, item["explanation"]["vertices"])
            given = item["explanation"].get("edges")
            if given is not None and {tuple(sorted(x)) for x in given} != set(expl.edge_subset):
                raise ValueError("explanation edges are not the induced edge set")
            entries.append(Entry(g, int(item["label"]), float(item["prob"]), expl))
        return cls(entries, int(d["num_classes"]), d.get("name", "custom"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "ExactProblem":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class SamplerProblem:
    """Seeded generator of labeled graphs with their explanations."""

    generator: Callable[[np.random.Generator], tuple[LabeledGraph, Explanation]]
    explainer: Callable[[Graph], Explanation]
    num_classes: int
    name: str = "sampler"
    seed: int = 0
    params: dict = field(default_factory=dict)

    def draw(self, rng) -> tuple[LabeledGraph, Explanation]:
        return self.generator(np.random.default_rng(rng))

    def draw_many(self, count: int, rng) -> list[tuple[LabeledGraph, Explanation]]:
        rng = np.random.default_rng(rng)
        return [self.generator(rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# concrete problems


def _uniform_two_class(graphs0, expl0, graphs1, expl1, name, explainer=None) -> ExactProblem:
    p0, p1 = 0.5 / len(graphs0), 0.5 / len(graphs1)
    entries = [Entry(g, 0, p0, e) for g, e in zip(graphs0, expl0)]
    entries += [Entry(g, 1, p1, e) for g, e in zip(graphs1, expl1)]
    return ExactProblem(entries, 2, name, explainer)


def example1_problem(K: int) -> ExactProblem:
    """Cycles C_i (6 <= i <= 5+K) each joined with a triangle (label 0) or a
    square (label 1); the explanation is the triangle or the square."""
    if K < 2:
        raise InvalidSize("K must be at least 2")
    c3, c4 = gr.gen_motif("cycle", 3), gr.gen_motif("cycle", 4)
    g0, e0, g1, e1 = [], [], [], []
    for i in range(6, 6 + K):
        ci = gr.gen_motif("cycle", i)
        for small, gs, es in ((c3, g0, e0), (c4, g1, e1)):
            g = gr.disjoint_union(ci, small)
            gs.append(g)
            es.append(Explanation.induced(g, range(i, i + small.node_count)))
    table = TableExplainer(list(zip(g0 + g1, e0 + e1)), fallback=MotifExplainer([c3, c4]))
    return _uniform_two_class(g0, e0, g1, e1, f"example1:{K}", table)


def example2_problem(n: int, star_explanation: str = "minimal") -> ExactProblem:
    """Label 0: cycle C_a plus a matching, n edges, max degree 2.
    Label 1: star with k >= 3 leaves plus a matching, n+1 edges, acyclic.

    The label-1 explanation is the star's center with its three lowest
    leaves (``"minimal"``); ``"full"`` returns the whole star component.
    """
    if n < 10:
        raise InvalidSize("n must be at least 10")
    if star_explanation not in ("minimal", "full"):
        raise ValueError("star_explanation must be 'minimal' or 'full'")
    g0, e0, g1, e1 = [], [], [], []
    for a in range(3, n + 1):
        g = gr.disjoint_union(gr.gen_motif("cycle", a), gr.gen_motif("matching", n - a))
        g0.append(g)
        e0.append(Explanation.induced(g, range(a)))
    for k in range(3, n + 2):
        g = gr.disjoint_union(gr.gen_motif("star", k + 1), gr.gen_motif("matching", n + 1 - k))
        g1.append(g)
        size = 4 if star_explanation == "minimal" else k + 1
        e1.append(Explanation.induced(g, range(size)))
    cycles = [gr.gen_motif("cycle", a) for a in range(3, n + 1)]
    stars = [gr.gen_motif("star", 4)] if star_explanation == "minimal" else []
    table = TableExplainer(list(zip(g0 + g1, e0 + e1)), fallback=MotifExplainer(cycles + stars))
    return _uniform_two_class(g0, e0, g1, e1, f"example2:{n}", table)


def ba2motifs_sampler(num_nodes: int = 25, rng_seed: int = 0) -> SamplerProblem:
    """Barabasi-Albert tree with a house (label 0) or 5-cycle (label 1) hung
    off a uniformly chosen base node by a single bridge edge."""
    if num_nodes < 13:
        raise InvalidSize("num_nodes must be at least 13")
    base_n = num_nodes - 5
    house, cycle = gr.gen_motif("house", 5), gr.gen_motif("cycle", 5)

    def generate(rng: np.random.Generator):
        label = int(rng.integers(2))
        base = gr.gen_ba(base_n, 1, rng)
        motif = house if label == 0 else cycle
        anchor = int(rng.integers(base_n))
        edges = list(base.edges) + [(u + base_n, v + base_n) for u, v in motif.edges]
        edges.append((anchor, base_n))
        g = Graph(num_nodes, edges)
        return LabeledGraph(g, label), Explanation.induced(g, range(base_n, num_nodes))

    return SamplerProblem(generate, MotifExplainer([house, cycle]), 2,
                          f"ba2motifs:{num_nodes}", rng_seed, {"num_nodes": num_nodes})


def sample_training_set(problem, m: int, rng) -> list[tuple[LabeledGraph, Explanation]]:
    """``m`` i.i.d. draws together with their ground-truth explanations."""
    if m < 1:
        raise InvalidSize("training set size must be at least 1")
    rng = np.random.default_rng(rng)
    if isinstance(problem, SamplerProblem):
        return problem.draw_many(m, rng)
    idx = rng.choice(len(problem.entries), size=m, p=problem.probs)
    return [(LabeledGraph(problem.entries[i].graph, problem.entries[i].label),
             problem.entries[i].explanation) for i in idx]


def sample_entry_indices(problem: ExactProblem, m: int, rng) -> np.ndarray:
    if m < 1:
        raise InvalidSize("training set size must be at least 1")
    return np.random.default_rng(rng).choice(len(problem.entries), size=m, p=problem.probs)


RANDOM_MOTIFS = (("cycle", 3), ("cycle", 4), ("cycle", 5), ("star", 4))


def random_exact_problem(rng, max_entries: int = 20, num_classes: int = 2,
                         noise: float = 0.3) -> ExactProblem:
    """Random problem of motif-plus-filler graphs with noisy labels.

    Explanations are the motif component. The motif pool is chosen so that
    no motif embeds into a graph carrying a different motif, hence the
    containment condition on explanations holds.
    """
    rng = np.random.default_rng(rng)
    fillers = [gr.gen_motif("path", k) for k in range(1, 9)] + \
              [gr.gen_motif("cycle", k) for k in range(6, 10)]
    pairs = [(mi, fi) for mi in range(len(RANDOM_MOTIFS)) for fi in range(len(fillers))]
    entries_left = max_entries
    chosen = rng.permutation(len(pairs))
    rows = []
    for pi in chosen:
        if entries_left < 1:
            break
        mi, fi = pairs[pi]
        motif = gr.gen_motif(*RANDOM_MOTIFS[mi])
        g = gr.disjoint_union(motif, fillers[fi])
        expl = Explanation.induced(g, range(motif.node_count))
        # each motif leans towards its own label; noisy graphs spread some mass
        major = mi % num_classes
        weight = rng.random() + 0.05
        if num_classes > 1 and entries_left >= num_classes and rng.random() < 0.5:
            q = rng.dirichlet(np.ones(num_classes)) * noise
            q[major] += 1.0 - noise
            labels = list(range(num_classes))
        else:
            q = np.eye(num_classes)[major]
            labels = [major]
        for y in labels:
            rows.append((g, y, weight * q[y], expl))
        entries_left -= len(labels)
    total = sum(r[2] for r in rows)
    entries = [Entry(g, y, p / total, e) for g, y, p, e in rows]
    # renormalize the last entry so the sum is 1 to double precision
    drift = 1.0 - sum(e.prob for e in entries)
    last = entries[-1]
    entries[-1] = Entry(last.graph, last.label, last.prob + drift, last.explanation)
    return ExactProblem(entries, num_classes, "random")


def noisy_example1_problem(K: int, flip: float) -> ExactProblem:
    """example1 with each graph's label flipped with probability ``flip``."""
    base = example1_problem(K)
    entries = []
    for e in base.entries:
        entries.append(Entry(e.graph, e.label, e.prob * (1.0 - flip), e.explanation))
        if flip > 0:
            entries.append(Entry(e.graph, 1 - e.label, e.prob * flip, e.explanation))
    entries = [e for e in entries if e.prob > 0]
    return ExactProblem(entries, 2, f"example1:{K}:flip{flip}", base.explainer)


def parse_problem(spec: str):
    """Build a problem from ``kind:param`` such as ``example1:12``,
    ``example2:12``, ``ba2motifs:25`` or ``file:path.json``."""
    kind, _, arg = spec.partition(":")
    if kind == "example1":
        return example1_problem(int(arg or 5))
    if kind == "example2":
        return example2_problem(int(arg or 12))
    if kind == "ba2motifs":
        return ba2motifs_sampler(int(arg or 25))
    if kind == "file":
        return ExactProblem.load(arg)
    raise ValueError(f"unknown problem kind {kind!r}")
