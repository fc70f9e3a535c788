import numpy as np
import pytest

from explab import graph as gr
from explab.errors import InvalidSize
from explab.problems import (
    ExactProblem, ba2motifs_sampler, example1_problem, example2_problem, parse_problem,
    random_exact_problem, sample_training_set,
)


def has_star(g):
    return max(g.degrees(), default=0) >= 3


def has_cycle(g):
    # a forest has exactly n - components edges
    return g.edge_count > g.node_count - len(gr._components(g))


class TestExample1:
    def test_support(self):
        p = example1_problem(5)
        assert len(p.entries) == 10
        assert np.allclose(p.probs, 0.1)

    def test_components(self):
        p = example1_problem(4)
        c3, c4 = gr.gen_motif("cycle", 3), gr.gen_motif("cycle", 4)
        for e in p.entries:
            expl = e.explanation.as_graph(e.graph)
            assert gr.canonical_key(expl) == gr.canonical_key(c3 if e.label == 0 else c4)

    def test_distinct_keys(self):
        p = example1_problem(8)
        assert len({gr.canonical_key(e.graph) for e in p.entries}) == 16

    def test_invalid(self):
        with pytest.raises(InvalidSize):
            example1_problem(1)


class TestExample2:
    def test_edge_counts(self):
        n = 12
        p = example2_problem(n)
        for e in p.entries:
            assert e.graph.edge_count == (n if e.label == 0 else n + 1)

    def test_cycle_xor_star(self):
        for e in example2_problem(12).entries:
            if e.label == 0:
                assert has_cycle(e.graph) and not has_star(e.graph)
            else:
                assert has_star(e.graph) and not has_cycle(e.graph)

    def test_label_is_function_of_explanation(self):
        by_key = {}
        for e in example2_problem(12).entries:
            by_key.setdefault(gr.canonical_key(e.explanation.as_graph(e.graph)), set()).add(e.label)
        assert all(len(labels) == 1 for labels in by_key.values())

    def test_distinct_keys(self):
        p = example2_problem(12)
        assert len({gr.canonical_key(e.graph) for e in p.entries}) == len(p.entries)

    def test_invalid(self):
        with pytest.raises(InvalidSize):
            example2_problem(9)


class TestBa2Motifs:
    def test_motif_and_explanation(self):
        s = ba2motifs_sampler(25)
        house, c5 = gr.gen_motif("house", 5), gr.gen_motif("cycle", 5)
        for lg, expl in s.draw_many(50, 0):
            assert lg.graph.node_count == 25 and lg.graph.edge_count == 19 + 1 + expl.edge_count
            motif = house if lg.label == 0 else c5
            assert gr.contains_subgraph(motif, lg.graph)
            assert expl.edge_count == (6 if lg.label == 0 else 5)
            assert gr.canonical_key(expl.as_graph(lg.graph)) == gr.canonical_key(motif)

    def test_deterministic(self):
        s = ba2motifs_sampler(25)
        a, b = s.draw_many(5, 9), s.draw_many(5, 9)
        assert [x[0] for x in a] == [x[0] for x in b]

    def test_motif_explainer_finds_motif(self):
        s = ba2motifs_sampler(20)
        for lg, expl in s.draw_many(10, 1):
            assert s.explainer(lg.graph).vertex_subset == expl.vertex_subset

    def test_invalid(self):
        with pytest.raises(InvalidSize):
            ba2motifs_sampler(12)


class TestSampling:
    def test_sizes(self):
        p = example1_problem(5)
        assert len(sample_training_set(p, 1, 0)) == 1
        with pytest.raises(InvalidSize):
            sample_training_set(p, 0, 0)

    def test_class_frequency(self):
        T = sample_training_set(example1_problem(5), 10_000, 3)
        assert abs(np.mean([lg.label for lg, _ in T]) - 0.5) <= 0.02

    def test_explanations_embed(self):
        for lg, expl in sample_training_set(example2_problem(10), 30, 1):
            assert gr.contains_subgraph(expl.as_graph(lg.graph), lg.graph)


class TestExactProblemModel:
    def test_rejects_bad_mass(self):
        p = example1_problem(3)
        with pytest.raises(ValueError):
            ExactProblem(p.entries[:-1], 2)

    def test_json_round_trip(self, tmp_path):
        p = random_exact_problem(5)
        path = tmp_path / "p.json"
        p.save(path)
        q = parse_problem(f"file:{path}")
        assert q.num_classes == p.num_classes
        assert [(e.graph, e.label, e.prob, e.explanation) for e in q.entries] == \
               [(e.graph, e.label, e.prob, e.explanation) for e in p.entries]

    def test_random_problems_valid(self):
        for seed in range(30):
            p = random_exact_problem(seed)
            assert len(p.entries) <= 20
            assert abs(p.probs.sum() - 1.0) <= 1e-12
