"""Brute-force explanation-assisted VC dimension.

The standard VC dimension is the special case where the explainer is the
identity, so every graph is its own explanation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import graph as gr
from .errors import InvalidRange, SearchSpaceTooLarge
from .learners import HypothesisClass
from .problems import IdentityExplainer

MAX_FULL_SEARCH = 30
SUBSET_BUDGET = 2_000_000


@dataclass
class ShatterCertificate:
    dimension: int
    witness: list[int]
    witness_keys: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {"dimension": self.dimension, "witness": self.witness, "witness_keys": self.witness_keys}


def is_shattered(H: HypothesisClass, graphs: Sequence[gr.Graph]) -> bool:
    for labeling in itertools.product(range(2), repeat=len(graphs)):
        if not H.realizes(graphs, labeling):
            return False
    return True


def vc_ea(H: HypothesisClass, explainer: Optional[Callable] = None,
          instance_space: Sequence[gr.Graph] = (), cap: Optional[int] = None) -> ShatterCertificate:
    """Largest set of graphs with pairwise-distinct explanations that ``H``
    shatters. ``explainer=None`` means the identity explainer."""
    explainer = explainer or IdentityExplainer()
    graphs = list(instance_space)
    if cap is None:
        cap = len(graphs)
    if len(graphs) > MAX_FULL_SEARCH and cap >= len(graphs):
        raise SearchSpaceTooLarge(f"{len(graphs)} graphs need an explicit cap below that size")
    keys = [gr.graph_id(explainer(g).as_graph(g)) for g in graphs]
    best: list[int] = []
    examined = 0

    def find(size, start, chosen, used_keys):
        # depth-first over subsets whose explanations are pairwise distinct
        nonlocal examined
        if len(chosen) == size:
            examined += 1
            if examined > SUBSET_BUDGET:
                raise SearchSpaceTooLarge("subset budget exhausted")
            return list(chosen) if is_shattered(H, [graphs[i] for i in chosen]) else None
        for i in range(start, len(graphs)):
            if keys[i] in used_keys:
                continue
            chosen.append(i)
            used_keys.add(keys[i])
            hit = find(size, i + 1, chosen, used_keys)
            chosen.pop()
            used_keys.discard(keys[i])
            if hit is not None:
                return hit
        return None

    # subsets of shattered sets are shattered, so the first empty size ends the search
    for size in range(1, min(cap, len(graphs)) + 1):
        hit = find(size, 0, [], set())
        if hit is None:
            break
        best = hit
    return ShatterCertificate(len(best), best, [keys[i].hex() for i in best])


def theorem1_bound(d: int, eps: float, delta: float) -> float:
    """Sample-complexity bound shape ``d ln^2(d)/eps^2 + ln(1/delta)/eps^2``
    with unit constant and natural logarithms. For plotting, not prediction."""
    if d < 1:
        raise InvalidRange("d must be a positive integer")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidRange("eps and delta must lie in (0, 1)")
    return d * math.log(max(d, 2)) ** 2 / eps**2 + math.log(1.0 / delta) / eps**2
