import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from explab import graph as gr
from explab.errors import Condition1Violated
from explab.graph import Explanation
from explab.invariance import (
    bayes_error_exact, check_condition1, conditional_mi_exact, expected_explanation_edges,
    expl_bayes_error_exact, invariance_report, zeta_exact,
)
from explab.problems import (
    Entry, ExactProblem, example1_problem, example2_problem, noisy_example1_problem,
    random_exact_problem,
)


def zeta_bruteforce(problem):
    """Enumerate (G, G', G'') triples: G picks the explanation class, G' and
    G'' are independent draws conditioned on that class."""
    keys = [gr.canonical_key(e.explanation.as_graph(e.graph)) for e in problem.entries]
    mass = {}
    for k, e in zip(keys, problem.entries):
        mass[k] = mass.get(k, 0.0) + e.prob
    total = 0.0
    for k0, e0 in zip(keys, problem.entries):
        for k1, e1 in zip(keys, problem.entries):
            for k2, e2 in zip(keys, problem.entries):
                if k1 == k0 and k2 == k0 and e1.label != e2.label:
                    total += e0.prob * (e1.prob / mass[k0]) * (e2.prob / mass[k0])
    return total


def tri_square(tri_q, sq_q, tri_p=0.5):
    """Two graphs (triangle+C6, square+C6), each with a label distribution."""
    c6 = gr.gen_motif("cycle", 6)
    entries = []
    for motif, p, q in ((gr.gen_motif("cycle", 3), tri_p, tri_q), (gr.gen_motif("cycle", 4), 1 - tri_p, sq_q)):
        g = gr.disjoint_union(motif, c6)
        expl = Explanation.induced(g, range(motif.node_count))
        entries += [Entry(g, y, p * qy, expl) for y, qy in enumerate(q) if qy > 0]
    return ExactProblem(entries, 2)


def relabel_explanations(problem, explain):
    return ExactProblem([Entry(e.graph, e.label, e.prob, explain(e.graph)) for e in problem.entries],
                        problem.num_classes)


class TestZeta:
    def test_example1(self):
        assert zeta_exact(example1_problem(5)) == 0.0

    def test_example2(self):
        assert zeta_exact(example2_problem(12)) == 0.0

    def test_single_class_even_split(self):
        p = tri_square((0.5, 0.5), (0.5, 0.5))
        constant = relabel_explanations(p, lambda g: Explanation.induced(g, []))
        assert zeta_exact(constant) == pytest.approx(0.5, abs=1e-12)

    def test_two_classes_noisy(self):
        p = tri_square((0.9, 0.1), (0.1, 0.9))
        assert zeta_exact(p) == pytest.approx(0.18, abs=1e-12)
        assert zeta_exact(p) == pytest.approx(zeta_bruteforce(p), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_matches_bruteforce(self, seed):
        p = random_exact_problem(seed)
        assert abs(zeta_exact(p) - zeta_bruteforce(p)) <= 1e-12


class TestMutualInformation:
    def test_example1(self):
        assert conditional_mi_exact(example1_problem(8)) == 0.0

    def test_identity_explainer(self):
        p = tri_square((0.7, 0.3), (0.2, 0.8))
        whole = relabel_explanations(p, Explanation.whole)
        assert conditional_mi_exact(whole) == pytest.approx(0.0, abs=1e-12)

    def test_constant_explainer_gives_plain_mi(self):
        p = tri_square((0.7, 0.3), (0.2, 0.8), tri_p=0.4)
        constant = relabel_explanations(p, lambda g: Explanation.induced(g, []))
        # I(Y; G) by hand from the joint table
        joint = np.array([[0.4 * 0.7, 0.4 * 0.3], [0.6 * 0.2, 0.6 * 0.8]])
        pg, py = joint.sum(1), joint.sum(0)
        expected = sum(joint[i, j] * math.log(joint[i, j] / (pg[i] * py[j])) for i in range(2) for j in range(2))
        assert conditional_mi_exact(constant) == pytest.approx(expected, abs=1e-12)

    def test_nonnegative(self):
        for seed in range(20):
            assert conditional_mi_exact(random_exact_problem(seed)) >= -1e-12

    def test_refuses_without_condition1(self):
        bad = example2_problem(10, star_explanation="full")
        assert not check_condition1(bad)
        with pytest.raises(Condition1Violated):
            conditional_mi_exact(bad)


class TestBayesError:
    def test_deterministic_labels(self):
        assert bayes_error_exact(example1_problem(4)) == 0.0

    def test_one_noisy_graph(self):
        g = gr.gen_motif("cycle", 5)
        e = Explanation.whole(g)
        p = ExactProblem([Entry(g, 0, 0.9, e), Entry(g, 1, 0.1, e)], 2)
        assert bayes_error_exact(p) == pytest.approx(0.1, abs=1e-12)

    def test_explanation_is_coarser(self):
        for seed in range(100):
            p = random_exact_problem(seed)
            assert bayes_error_exact(p) <= expl_bayes_error_exact(p) + 1e-12


class TestCondition1:
    def test_examples_hold(self):
        assert check_condition1(example1_problem(10))
        assert check_condition1(example2_problem(12))

    def test_constructed_violation(self):
        c3, c4 = gr.gen_motif("cycle", 3), gr.gen_motif("cycle", 4)
        g1 = gr.disjoint_union(c3, gr.gen_motif("path", 2))
        g2 = gr.disjoint_union(c4, c3)
        p = ExactProblem([Entry(g1, 0, 0.5, Explanation.induced(g1, range(3))),
                          Entry(g2, 1, 0.5, Explanation.induced(g2, range(4)))], 2)
        assert not check_condition1(p)


class TestReport:
    def test_example1(self):
        r = invariance_report(example1_problem(5))
        assert (r.zeta, r.kappa_nats, r.bayes_error, r.condition1_holds) == (0.0, 0.0, 0.0, True)

    @pytest.mark.parametrize("K", [2, 5, 9])
    def test_expected_edges(self, K):
        assert expected_explanation_edges(example1_problem(K)) == pytest.approx(3.5, abs=1e-12)

    def test_zeta_bound_on_random_problems(self):
        for seed in range(100):
            r = invariance_report(random_exact_problem(seed))
            assert r.zeta <= 2 * r.expl_bayes_error + 1e-12

    def test_zeta_vanishes_with_noise(self):
        flips = [0.3, 0.1, 0.03, 0.01, 0.0]
        zetas = [zeta_exact(noisy_example1_problem(4, f)) for f in flips]
        kappas = [conditional_mi_exact(noisy_example1_problem(4, f)) for f in flips]
        assert all(a > b for a, b in zip(zetas, zetas[1:]))
        assert zetas[-1] == 0.0 and kappas[-1] == 0.0
