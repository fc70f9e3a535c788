import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from explab import graph as gr
from explab.errors import BudgetTooLarge, MissingExplanation
from explab.graph import Explanation, LabeledGraph
from explab.learners import (
    Classifier, HypothesisClass, augmented_training_set, da_erm_fit, ea_erm_fit,
    empirical_risk, enumerate_sgamma, erm_fit, eval_error,
)
from explab.problems import (
    ba2motifs_sampler, example1_problem, example2_problem, random_exact_problem, sample_training_set,
)

TABLE = HypothesisClass("table")
COUNT = HypothesisClass("edge_count")


def entry_item(problem, i):
    e = problem.entries[i]
    return LabeledGraph(e.graph, e.label), e.explanation


class TestErm:
    def test_example2_two_samples(self):
        p = example2_problem(12)
        T = [entry_item(p, 0), entry_item(p, len(p.entries) - 1)]
        assert eval_error(erm_fit(COUNT, T), p) == 0.0

    def test_empty_is_constant_zero(self):
        c = erm_fit(TABLE, [])
        p = example1_problem(5)
        assert all(c.predict(e.graph) == 0 for e in p.entries)
        assert eval_error(c, p) == pytest.approx(0.5, abs=1e-12)

    def test_table_error_is_unseen_label1_mass(self):
        p = example1_problem(5)
        T = sample_training_set(p, 2, 11)
        seen = {gr.canonical_key(lg.graph) for lg, _ in T}
        expected = sum(e.prob for e in p.entries if e.label == 1 and gr.canonical_key(e.graph) not in seen)
        assert eval_error(erm_fit(TABLE, T), p) == pytest.approx(expected, abs=1e-12)

    def test_ties_go_to_lower_label(self):
        g = gr.gen_motif("cycle", 5)
        c = erm_fit(TABLE, [LabeledGraph(g, 1), LabeledGraph(g, 0)])
        assert c.predict(g) == 0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 1)), min_size=1, max_size=12))
    def test_edge_count_erm_minimizes_risk(self, data):
        # brute force: every labeling of the observed edge counts
        T = [LabeledGraph(gr.gen_motif("matching", k), y) for k, y in data]
        counts = sorted({k for k, _ in data})
        best = min(sum(dict(zip(counts, labels))[k] != y for k, y in data)
                   for labels in itertools.product((0, 1), repeat=len(counts))) / len(T)
        assert empirical_risk(erm_fit(COUNT, T), T) == pytest.approx(best)


class TestEaErm:
    def test_one_sample_per_class_is_perfect(self):
        p = example1_problem(10)
        T = [entry_item(p, 0), entry_item(p, 10)]
        assert eval_error(ea_erm_fit(TABLE, T, 0), p) == pytest.approx(0.0, abs=1e-12)

    def test_missing_explanation(self):
        with pytest.raises(MissingExplanation):
            ea_erm_fit(TABLE, [LabeledGraph(gr.gen_motif("cycle", 3), 0)])

    def test_fallback_to_base(self):
        p = example1_problem(5)
        c = ea_erm_fit(TABLE, [entry_item(p, 0)], 0)
        query = gr.gen_motif("path", 4)
        assert c.matched_labels(query) == [] and c.predict(query) == c.base_predict(query)

    def test_uniform_draw_over_seeds(self):
        g = gr.gen_motif("cycle", 3)
        T = [(LabeledGraph(g, 0), Explanation.whole(g)), (LabeledGraph(g, 1), Explanation.whole(g))]
        query = gr.disjoint_union(g, gr.gen_motif("cycle", 7))
        freq = np.mean([ea_erm_fit(TABLE, T, s).predict(query) == 0 for s in range(10_000)])
        assert abs(freq - 0.5) <= 0.02

    def test_repeated_queries_agree(self):
        p = example1_problem(6)
        c = ea_erm_fit(TABLE, sample_training_set(p, 6, 2), seed=5)
        assert all(c.predict(e.graph) == c.predict(gr.relabel(e.graph, list(range(e.graph.node_count))[::-1]))
                   for e in p.entries)

    def test_mixing_rule_matches_simulation(self):
        g = gr.gen_motif("cycle", 3)
        T = [(LabeledGraph(g, 0), Explanation.whole(g)), (LabeledGraph(g, 1), Explanation.whole(g))]
        query = gr.disjoint_union(g, gr.gen_motif("cycle", 6))
        exact = 1.0 - ea_erm_fit(TABLE, T, 0).label_distribution(query)[0]
        sim = np.mean([ea_erm_fit(TABLE, T, s).predict(query) != 0 for s in range(100_000)])
        assert exact == 0.5 and abs(sim - exact) < 3 * math.sqrt(0.25 / 100_000)

    def test_agrees_with_training_labels(self):
        p = example1_problem(8)
        T = sample_training_set(p, 10, 4)
        c = ea_erm_fit(TABLE, T, 1)
        assert all(c.predict(lg.graph) == lg.label for lg, _ in T)

    def test_beats_erm_at_four_samples(self):
        p = example1_problem(10)
        rng = np.random.default_rng(0)
        ea, erm = [], []
        for t in range(200):
            T = sample_training_set(p, 4, rng)
            ea.append(eval_error(ea_erm_fit(TABLE, T, t), p))
            erm.append(eval_error(erm_fit(TABLE, T), p))
        assert np.mean(ea) < np.mean(erm)


class TestSgamma:
    def test_gamma_zero_is_singleton(self):
        p = example2_problem(10)
        e = p.entries[0]
        assert enumerate_sgamma(e.graph, e.explanation, 0.0) == [e.graph]
        assert enumerate_sgamma(e.graph, e.explanation, 0.0, p) == [e.graph]

    def test_example2_neighbourhood(self):
        n = 12
        p = example2_problem(n)
        e = p.entries[2]
        cycle = e.explanation.as_graph(e.graph)
        out = enumerate_sgamma(e.graph, e.explanation, 1 / n)
        assert len(out) > 1
        for h in out:
            assert h.edge_count <= n + 1
            assert gr.contains_subgraph(cycle, h)
            assert gr.edge_symmetric_difference(h, e.graph) <= 1

    def test_whole_explanation(self):
        g = gr.gen_motif("cycle", 5)
        for h in enumerate_sgamma(g, Explanation.whole(g), 0.6):
            assert gr.contains_subgraph(g, h)

    def test_budget_refusal(self):
        g = gr.gen_motif("path", 24)
        with pytest.raises(BudgetTooLarge):
            enumerate_sgamma(g, Explanation.whole(g), 0.5)

    def test_combinatorial_count(self):
        # C4 with one flip: 2 chords may be added, deleting any cycle edge loses the cycle
        g = gr.gen_motif("cycle", 4)
        out = enumerate_sgamma(g, Explanation.whole(g), 0.25)
        assert len(out) == 3

    def test_gamma_zero_augmentation_is_identity(self):
        T = sample_training_set(example1_problem(5), 5, 0)
        assert [lg for lg, _ in augmented_training_set(T, 0.0)] == [lg for lg, _ in T]


class TestDaErm:
    @pytest.mark.parametrize("seed", range(10))
    def test_gamma_zero_equals_ea_erm(self, seed):
        p = example1_problem(6)
        T = sample_training_set(p, 5, seed)
        a, b = ea_erm_fit(TABLE, T, seed), da_erm_fit(TABLE, T, 0.0, seed=seed)
        for e in p.entries:
            assert np.array_equal(a.label_distribution(e.graph), b.label_distribution(e.graph))

    def test_example2_augmentation_collides(self):
        n = 12
        p = example2_problem(n)
        T = [entry_item(p, 0), entry_item(p, len(p.entries) - 1)]
        assert eval_error(da_erm_fit(COUNT, T, 1 / n), p) > 0.0

    def test_support_mode_never_worse_than_erm(self):
        p = example1_problem(5)
        for seed in range(20):
            T = sample_training_set(p, 3, seed)
            for gamma in (0.0, 0.1, 0.5, 1.0):
                da = da_erm_fit(TABLE, T, gamma, universe=p, seed=seed)
                assert eval_error(da, p) <= eval_error(erm_fit(TABLE, T), p) + 1e-12


class TestEvaluation:
    def test_perfect_classifier(self):
        p = example1_problem(4)
        table = {gr.canonical_key(e.graph): e.label for e in p.entries}
        assert eval_error(Classifier(TABLE, table), p) == 0.0

    def test_wrapped_half_mass(self):
        g = gr.gen_motif("cycle", 3)
        host = gr.disjoint_union(g, gr.gen_motif("cycle", 6))
        p = example1_problem(2)
        wrapped = Classifier(TABLE, {}, 0, ((g, 0), (g, 1)), 0)
        # every label-0 graph of the problem contains C3 and gets label 0 with probability 1/2
        err = eval_error(wrapped, p)
        label1 = sum(e.prob for e in p.entries if e.label == 1)
        assert err == pytest.approx(0.5 * (1 - label1) + label1, abs=1e-12)
        assert wrapped.label_distribution(host)[0] == 0.5

    def test_sampler_mode_within_three_standard_errors(self):
        p = random_exact_problem(3)
        c = erm_fit(TABLE, sample_training_set(p, 4, 1))
        exact = eval_error(c, p)
        idx = np.random.default_rng(0).choice(len(p.entries), size=20_000, p=p.probs)
        wrong = np.array([c.predict(p.entries[i].graph) != p.entries[i].label for i in idx], dtype=float)
        assert abs(wrong.mean() - exact) <= 3 * wrong.std(ddof=1) / math.sqrt(len(wrong)) + 1e-12

    def test_sampler_problem_returns_mean_and_stderr(self):
        c = Classifier(COUNT, {}, 0)
        mean, se = eval_error(c, ba2motifs_sampler(20), n_samples=400, rng=0)
        assert abs(mean - 0.5) < 4 * se + 1e-9 and se > 0

    def test_classifier_json_round_trip(self):
        p = example1_problem(4)
        c = ea_erm_fit(TABLE, sample_training_set(p, 4, 2), seed=9)
        back = Classifier.from_json_dict(c.to_json_dict())
        for e in p.entries:
            assert back.predict(e.graph) == c.predict(e.graph)
