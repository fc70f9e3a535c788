"""ERM, explanation-assisted ERM and data-augmentation ERM over two
hypothesis classes, with exact and Monte Carlo error evaluation.

Two hypothesis classes are supported:

* ``table``: every function of the isomorphism class of the input graph.
* ``edge_count``: every function of the number of edges.

Both are "realize anything constant on equal features" classes, so ERM is a
majority vote per feature value.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import graph as gr
from .errors import BudgetTooLarge, MissingExplanation
from .graph import Explanation, Graph, LabeledGraph
from .problems import ExactProblem, SamplerProblem

COMBINATORIAL_CANDIDATE_LIMIT = 10**6
HYPOTHESIS_KINDS = ("table", "edge_count")


@dataclass(frozen=True)
class HypothesisClass:
    kind: str = "table"
    num_classes: int = 2
    domain: tuple = ()

    def __post_init__(self):
        if self.kind not in HYPOTHESIS_KINDS:
            raise ValueError(f"unknown hypothesis class {self.kind!r}")

    def feature(self, g: Graph):
        if self.kind == "table":
            return gr.canonical_key(g)
        return g.edge_count

    def realizes(self, graphs: Sequence[Graph], labeling: Sequence[int]) -> bool:
        """True iff some member of the class assigns ``labeling`` to ``graphs``."""
        seen = {}
        for g, y in zip(graphs, labeling):
            if seen.setdefault(self.feature(g), y) != y:
                return False
        return True


def _encode_feature(f) -> str:
    return f.hex() if isinstance(f, bytes) else str(f)


def _query_seed(seed: int, g: Graph) -> int:
    digest = hashlib.sha256(seed.to_bytes(8, "little", signed=False) + gr.graph_id(g)).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class Classifier:
    """A fitted hypothesis, optionally wrapped by training explanations.

    With a wrapper, a query that contains some training explanation is
    labeled by a uniform draw from the labels of all matching training
    explanations. The draw is a deterministic function of ``seed`` and the
    query's isomorphism class.
    """

    hclass: HypothesisClass
    table: dict = field(default_factory=dict)
    default: int = 0
    wrapper: tuple = ()
    seed: int = 0

    def base_predict(self, g: Graph) -> int:
        return self.table.get(self.hclass.feature(g), self.default)

    def matched_labels(self, g: Graph) -> list[int]:
        return [y for expl, y in self.wrapper if gr.contains_subgraph(expl, g)]

    def predict(self, g: Graph) -> int:
        labels = self.matched_labels(g)
        if not labels:
            return self.base_predict(g)
        rng = np.random.default_rng(_query_seed(self.seed, g))
        return labels[int(rng.integers(len(labels)))]

    def label_distribution(self, g: Graph) -> np.ndarray:
        """Probability of each output label over the uniform wrapper draw."""
        out = np.zeros(self.hclass.num_classes)
        labels = self.matched_labels(g)
        if labels:
            for y in labels:
                out[y] += 1.0 / len(labels)
        else:
            out[self.base_predict(g)] = 1.0
        return out

    def to_json_dict(self) -> dict:
        return {
            "kind": self.hclass.kind,
            "num_classes": self.hclass.num_classes,
            "table": {_encode_feature(k): v for k, v in sorted(self.table.items(), key=lambda kv: _encode_feature(kv[0]))},
            "default": self.default,
            "wrapper": [{"explanation": gr.to_json_dict(e), "label": y} for e, y in self.wrapper],
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Classifier":
        h = HypothesisClass(d["kind"], int(d["num_classes"]))
        if h.kind == "table":
            table = {bytes.fromhex(k): v for k, v in d["table"].items()}
        else:
            table = {int(k): v for k, v in d["table"].items()}
        wrapper = tuple((gr.from_json_dict(w["explanation"]), int(w["label"])) for w in d["wrapper"])
        return cls(h, table, int(d["default"]), wrapper, int(d["seed"]))


TrainItem = Union[LabeledGraph, tuple]


def _split(item) -> tuple[LabeledGraph, Optional[Explanation]]:
    if isinstance(item, LabeledGraph):
        return item, None
    lg, expl = item
    return lg, expl


def erm_fit(H: HypothesisClass, T: Sequence[TrainItem]) -> Classifier:
    """Majority label per feature value (ties to the lower label); unseen
    feature values map to label 0."""
    votes: dict = {}
    for item in T:
        lg, _ = _split(item)
        votes.setdefault(H.feature(lg.graph), np.zeros(H.num_classes, dtype=np.int64))[lg.label] += 1
    table = {f: int(np.argmax(v)) for f, v in votes.items()}
    return Classifier(H, table, 0)


def _wrapper_from(T) -> tuple:
    out = []
    for item in T:
        lg, expl = _split(item)
        if expl is None:
            raise MissingExplanation("explanation-assisted learning needs every explanation")
        out.append((_explanation_graph(lg.graph, expl), lg.label))
    return tuple(out)


@functools.lru_cache(maxsize=100_000)
def _explanation_graph(g: Graph, expl: Explanation) -> Graph:
    return expl.as_graph(g)


def ea_erm_fit(H: HypothesisClass, T: Sequence[TrainItem], seed: int = 0) -> Classifier:
    wrapper = _wrapper_from(T)
    base = erm_fit(H, T)
    return Classifier(H, base.table, base.default, wrapper, seed)


# ---------------------------------------------------------------------------
# explanation-preserving perturbation sets


def _padded_distance(a: Graph, b: Graph) -> int:
    # graphs of different sizes are compared on the union of their index ranges
    return len(a.edges ^ b.edges)


def enumerate_sgamma(g: Graph, explanation: Explanation, gamma: float, universe="combinatorial") -> list[Graph]:
    """All graphs of ``universe`` that contain the explanation and lie within
    ``gamma * |E|`` edge flips of ``g``.

    ``universe`` is either ``"combinatorial"`` (every graph on the vertex set
    of ``g``) or a finite collection of graphs (an :class:`ExactProblem` or a
    sequence), in which case edge sets are compared index-wise.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    budget = int(math.floor(gamma * g.edge_count + 1e-9))
    expl_g = _explanation_graph(g, explanation)
    if isinstance(universe, str):
        if universe != "combinatorial":
            raise ValueError(f"unknown universe {universe!r}")
        return list(_sgamma_combinatorial(g, explanation, budget, expl_g))
    pool = [e.graph for e in universe.entries] if isinstance(universe, ExactProblem) else list(universe)
    out, seen = [], set()
    for h in pool:
        if h in seen:
            continue
        seen.add(h)
        if _padded_distance(g, h) <= budget and gr.contains_subgraph(expl_g, h):
            out.append(h)
    return out


@functools.lru_cache(maxsize=4096)
def _sgamma_combinatorial(g: Graph, explanation: Explanation, budget: int, expl_g: Graph) -> tuple:
    n = g.node_count
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    count = sum(math.comb(len(pairs), j) for j in range(min(budget, len(pairs)) + 1))
    if count > COMBINATORIAL_CANDIDATE_LIMIT:
        raise BudgetTooLarge(f"{count} candidate graphs exceed {COMBINATORIAL_CANDIDATE_LIMIT}")
    needed = explanation.edge_subset
    out = []
    for j in range(min(budget, len(pairs)) + 1):
        for flips in itertools.combinations(pairs, j):
            edges = g.edges.symmetric_difference(flips)
            h = g.with_edges(edges)
            if needed <= edges or gr.contains_subgraph(expl_g, h):
                out.append(h)
    return tuple(out)


def augmented_training_set(T, gamma: float, universe="combinatorial") -> list[tuple[LabeledGraph, Explanation]]:
    """Training set followed by every perturbation of every element.

    Each training graph contributes its perturbations other than itself, so
    ``gamma = 0`` leaves the training set unchanged.
    """
    out = []
    extra = []
    for item in T:
        lg, expl = _split(item)
        if expl is None:
            raise MissingExplanation("augmentation needs every explanation")
        out.append((lg, expl))
        for h in enumerate_sgamma(lg.graph, expl, gamma, universe):
            if h != lg.graph:
                extra.append((LabeledGraph(h, lg.label), None))
    return out + extra


def da_erm_fit(H: HypothesisClass, T: Sequence[TrainItem], gamma: float,
               universe="combinatorial", seed: int = 0) -> Classifier:
    wrapper = _wrapper_from(T)
    base = erm_fit(H, augmented_training_set(T, gamma, universe))
    return Classifier(H, base.table, base.default, wrapper, seed)


# ---------------------------------------------------------------------------
# evaluation


def eval_error(c: Classifier, problem, n_samples: Optional[int] = None, rng=None):
    """Statistical error of ``c``.

    For an :class:`ExactProblem` the result is exact: the wrapper's random
    draw is mixed analytically. For a :class:`SamplerProblem` pass
    ``n_samples``; the result is ``(mean, standard_error)`` of a Monte Carlo
    estimate.
    """
    if isinstance(problem, SamplerProblem):
        if not n_samples:
            raise ValueError("sampler evaluation needs n_samples")
        rng = np.random.default_rng(rng)
        wrong = np.array([float(c.predict(lg.graph) != lg.label)
                          for lg, _ in problem.draw_many(n_samples, rng)])
        return float(wrong.mean()), float(wrong.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    total = 0.0
    for e in problem.entries:
        total += e.prob * (1.0 - c.label_distribution(e.graph)[e.label])
    return float(total)


def empirical_risk(c: Classifier, T) -> float:
    if not T:
        return 0.0
    return sum(c.base_predict(_split(t)[0].graph) != _split(t)[0].label for t in T) / len(T)


LEARNERS = ("erm", "ea_erm", "da_erm")


def fit_learner(name: str, H: HypothesisClass, T, seed: int = 0, gamma: float = 0.0,
                universe="combinatorial") -> Classifier:
    if name == "erm":
        return erm_fit(H, T)
    if name == "ea_erm":
        return ea_erm_fit(H, T, seed)
    if name == "da_erm":
        return da_erm_fit(H, T, gamma, universe, seed)
    raise ValueError(f"unknown learner {name!r}")
