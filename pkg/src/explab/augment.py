"""Graph perturbation and augmentation operators.

All counts are rounded half-up. Every operator takes an explicit RNG (a
``numpy.random.Generator`` or anything ``default_rng`` accepts) and is
deterministic given it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import graph as gr
from .errors import EmptyGraphAfterDrop, ExplanationNotInGraph, NotEnoughAbsentPairs
from .graph import Explanation, Graph, LabeledGraph, round_half_up

AUGMENT_KINDS = (
    "pi_keep_fraction", "ood_add_fraction", "ood_remove_fraction",
    "edge_insert", "edge_drop", "node_drop", "feature_drop", "mixup",
)
DEFAULT_RATES = {
    "pi_keep_fraction": 0.9, "ood_add_fraction": 1.0, "ood_remove_fraction": 0.3,
    "edge_insert": 0.1, "edge_drop": 0.1, "node_drop": 0.1, "feature_drop": 0.1, "mixup": 2,
}


def _check_explanation(g: Graph, expl: Explanation) -> None:
    if not expl.is_valid_for(g):
        raise ExplanationNotInGraph("explanation is not an induced subgraph of the graph")


def _sample(items: list, k: int, rng) -> list:
    if k <= 0:
        return []
    idx = rng.choice(len(items), size=k, replace=False)
    return [items[i] for i in sorted(idx)]


def pi_perturb(g: Graph, expl: Explanation, keep_fraction: float = 0.9, rng=None) -> Graph:
    """Keep the explanation and a uniform sample of the other edges."""
    if not 0.0 <= keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in [0, 1]")
    _check_explanation(g, expl)
    rng = np.random.default_rng(rng)
    rest = sorted(g.edges - expl.edge_subset)
    kept = _sample(rest, round_half_up(keep_fraction * len(rest)), rng)
    return g.with_edges(expl.edge_subset | frozenset(kept))


def ood_perturb(g: Graph, expl: Explanation, mode: str, fraction: float, rng=None) -> Graph:
    """Add or remove ``fraction * |non-explanation edges|`` edges outside the
    explanation. Added edges join two vertices that are both outside it."""
    if fraction < 0:
        raise ValueError("fraction must be nonnegative")
    _check_explanation(g, expl)
    rng = np.random.default_rng(rng)
    rest = sorted(g.edges - expl.edge_subset)
    count = round_half_up(fraction * len(rest))
    if mode == "remove":
        if count > len(rest):
            raise ValueError("cannot remove more edges than exist")
        dropped = set(_sample(rest, count, rng))
        return g.with_edges(g.edges - dropped)
    if mode == "add":
        outside = [v for v in range(g.node_count) if v not in expl.vertex_subset]
        absent = [(u, v) for i, u in enumerate(outside) for v in outside[i + 1:] if (u, v) not in g.edges]
        if count > len(absent):
            raise NotEnoughAbsentPairs(f"need {count} new edges, only {len(absent)} pairs free")
        return g.with_edges(g.edges | frozenset(_sample(absent, count, rng)))
    raise ValueError(f"unknown mode {mode!r}")


def _drop_nodes(g: Graph, drop: set) -> Graph:
    keep = [v for v in range(g.node_count) if v not in drop]
    index = {v: i for i, v in enumerate(keep)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    tags = None if g.node_tags is None else [g.node_tags[v] for v in keep]
    return Graph(len(keep), edges, g.features[keep], tags)


def baseline_augment(lg: LabeledGraph, kind: str, rate: float = 0.1, rng=None) -> LabeledGraph:
    """Label-preserving random augmentation: ``edge_insert``, ``edge_drop``,
    ``node_drop`` or ``feature_drop``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    g = lg.graph
    n = g.node_count
    if kind == "edge_insert":
        absent = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in g.edges]
        added = _sample(absent, round_half_up(rate * len(absent)), rng)
        out = g.with_edges(g.edges | frozenset(added))
    elif kind == "edge_drop":
        edges = g.sorted_edges()
        dropped = set(_sample(edges, round_half_up(rate * len(edges)), rng))
        out = g.with_edges(g.edges - dropped)
    elif kind == "node_drop":
        k = round_half_up(rate * n)
        if k >= n and n > 0:
            raise EmptyGraphAfterDrop(f"dropping {k} of {n} nodes leaves nothing")
        if k == 0:
            return lg
        out = _drop_nodes(g, set(_sample(list(range(n)), k, rng)))
    elif kind == "feature_drop":
        cols = _sample(list(range(g.feat_dim)), round_half_up(rate * g.feat_dim), rng)
        if not cols:
            return lg
        feats = np.array(g.features)
        feats[:, cols] = 0.0
        out = gr.Graph(n, g.edges, feats, g.node_tags)
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    return LabeledGraph(out, lg.label)


def mixup_augment(gi: LabeledGraph, gj: LabeledGraph, rng=None, cross_edges: int = 2) -> LabeledGraph:
    """Block-diagonal union of two graphs plus random edges between the blocks.

    The result keeps the first graph's label.
    """
    rng = np.random.default_rng(rng)
    a, b = gi.graph, gj.graph
    if a.node_count == 0 or b.node_count == 0:
        return gi
    union = gr.disjoint_union(a, b)
    off = a.node_count
    total = a.node_count * b.node_count
    picks = rng.choice(total, size=min(cross_edges, total), replace=False)
    cross = [(int(p) // b.node_count, off + int(p) % b.node_count) for p in sorted(picks)]
    return LabeledGraph(union.with_edges(union.edges | frozenset(cross)), gi.label)


@dataclass(frozen=True)
class AugmentSpec:
    """One augmentation operator with its rate (edge count for ``mixup``)."""

    kind: str
    rate: Optional[float] = None

    def __post_init__(self):
        if self.kind not in AUGMENT_KINDS:
            raise ValueError(f"unknown augmentation kind {self.kind!r}")
        rate = DEFAULT_RATES[self.kind] if self.rate is None else self.rate
        object.__setattr__(self, "rate", rate)
        if self.kind == "mixup":
            if rate < 0 or int(rate) != rate:
                raise ValueError("mixup rate is a nonnegative edge count")
        elif self.kind == "ood_add_fraction":
            if rate < 0:
                raise ValueError("ood_add_fraction must be nonnegative")
        elif not 0.0 <= rate <= 1.0:
            raise ValueError(f"{self.kind} rate must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentSpec":
        unknown = set(d) - {"kind", "rate"}
        if unknown:
            raise ValueError(f"unknown augment keys {sorted(unknown)}")
        return cls(d["kind"], d.get("rate"))

    def apply(self, lg: LabeledGraph, expl: Explanation, rng, pool=None) -> LabeledGraph:
        """Produce one augmented copy of ``lg``; ``pool`` supplies mixup partners."""
        rng = np.random.default_rng(rng)
        g = lg.graph
        if self.kind == "pi_keep_fraction":
            return LabeledGraph(pi_perturb(g, expl, self.rate, rng), lg.label)
        if self.kind == "ood_add_fraction":
            return LabeledGraph(ood_perturb(g, expl, "add", self.rate, rng), lg.label)
        if self.kind == "ood_remove_fraction":
            return LabeledGraph(ood_perturb(g, expl, "remove", self.rate, rng), lg.label)
        if self.kind == "mixup":
            if not pool:
                raise ValueError("mixup needs a pool of partner graphs")
            partner = pool[int(rng.integers(len(pool)))]
            return mixup_augment(lg, partner, rng, int(self.rate))
        return baseline_augment(lg, self.kind, self.rate, rng)
