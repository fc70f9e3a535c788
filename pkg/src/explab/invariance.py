"""Exact invariance and information quantities of an :class:`ExactProblem`.

Everything here is computed by enumerating the support, so results are exact
up to floating point. Mutual information is reported in nats.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import graph as gr
from .errors import Condition1Violated, ExplainerUndefined
from .problems import ExactProblem

TOL = 1e-12


def explanation_graph(entry) -> gr.Graph:
    return entry.explanation.as_graph(entry.graph)


def explanation_keys(problem: ExactProblem) -> list[bytes]:
    keys = []
    for e in problem.entries:
        if e.explanation is None:
            raise ExplainerUndefined("support entry without an explanation")
        keys.append(gr.graph_id(explanation_graph(e)))
    return keys


def _joint_by(problem: ExactProblem, keys) -> dict:
    """key -> array of P(key, Y = y)."""
    out: dict = {}
    for k, e in zip(keys, problem.entries):
        out.setdefault(k, np.zeros(problem.num_classes))[e.label] += e.prob
    return out


def zeta_exact(problem: ExactProblem) -> float:
    """Probability that two independent graphs sharing an explanation
    disagree on their labels, weighted by the explanation's mass."""
    total = 0.0
    for mass in _joint_by(problem, explanation_keys(problem)).values():
        p = mass.sum()
        q = mass / p
        total += p * (1.0 - float(np.dot(q, q)))
    return total


def bayes_error_exact(problem: ExactProblem) -> float:
    joint = _joint_by(problem, problem.graph_ids)
    return float(sum(m.sum() - m.max() for m in joint.values()))


def expl_bayes_error_exact(problem: ExactProblem) -> float:
    """Bayes error of the best classifier that only sees the explanation."""
    joint = _joint_by(problem, explanation_keys(problem))
    return float(sum(m.sum() - m.max() for m in joint.values()))


def check_condition1(problem: ExactProblem) -> bool:
    """Whenever one graph's explanation embeds into another graph, the two
    graphs must have the same explanation (up to isomorphism)."""
    rows = {}
    for gid, e in zip(problem.graph_ids, problem.entries):
        rows.setdefault(gid, e)
    rows = list(rows.values())
    expl = [explanation_graph(e) for e in rows]
    keys = [gr.graph_id(x) for x in expl]
    for i, ei in enumerate(expl):
        for j, row in enumerate(rows):
            if keys[i] != keys[j] and gr.contains_subgraph(ei, row.graph):
                return False
    return True


def conditional_mi_exact(problem: ExactProblem) -> float:
    """I(Y; G | explanation) in nats."""
    if not check_condition1(problem):
        raise Condition1Violated(
            "explanation containment does not pin down the explanation; "
            "conditioning on the containment event is not supported")
    ekeys = explanation_keys(problem)
    # P(e, g, y)
    cells: dict = {}
    for ek, gid, e in zip(ekeys, problem.graph_ids, problem.entries):
        cells.setdefault(ek, {}).setdefault((gid, e.label), 0.0)
        cells[ek][(gid, e.label)] += e.prob
    total = 0.0
    for joint in cells.values():
        pe = sum(joint.values())
        pg: dict = {}
        py: dict = {}
        for (gid, y), p in joint.items():
            pg[gid] = pg.get(gid, 0.0) + p
            py[y] = py.get(y, 0.0) + p
        for (gid, y), p in joint.items():
            if p > 0:
                # P(y,g|e) / (P(y|e) P(g|e)) = p * pe / (py * pg)
                total += p * math.log(p * pe / (py[y] * pg[gid]))
    return max(total, 0.0)


def expected_explanation_edges(problem: ExactProblem) -> float:
    return float(sum(e.prob * e.explanation.edge_count for e in problem.entries))


@dataclass
class InvarianceReport:
    zeta: float
    kappa_nats: float
    expected_expl_edges: float
    bayes_error: float
    expl_bayes_error: float
    condition1_holds: bool

    @property
    def zeta_bound_holds(self) -> bool:
        return bool(self.zeta <= 2.0 * self.expl_bayes_error + TOL)

    @property
    def bayes_order_holds(self) -> bool:
        return bool(self.bayes_error <= self.expl_bayes_error + TOL)

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["zeta_le_2_expl_bayes_error"] = self.zeta_bound_holds
        d["bayes_error_le_expl_bayes_error"] = self.bayes_order_holds
        return d


def invariance_report(problem: ExactProblem, strict: bool = True) -> InvarianceReport:
    """All invariance quantities at once. With ``strict`` a violated
    ``zeta <= 2 * expl_bayes_error`` raises instead of being reported."""
    cond = check_condition1(problem)
    kappa = conditional_mi_exact(problem)
    report = InvarianceReport(
        zeta=zeta_exact(problem),
        kappa_nats=kappa,
        expected_expl_edges=expected_explanation_edges(problem),
        bayes_error=bayes_error_exact(problem),
        expl_bayes_error=expl_bayes_error_exact(problem),
        condition1_holds=cond,
    )
    if strict and not report.zeta_bound_holds:
        raise AssertionError(f"zeta={report.zeta} exceeds 2 * {report.expl_bayes_error}")
    return report
