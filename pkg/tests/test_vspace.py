import math
import random
from fractions import Fraction

import pytest

from stand import (
    Dataset,
    FeatureSchema,
    Literal,
    ambiguity,
    certainty_batch,
    enumerate_G,
    fit,
    incremental_update,
    instance_certainty,
    leaf_generalization,
    mini_space_size,
    render_dnf,
)
from stand.data import Example, satisfies_all
from stand.tree import unchanged_modulo_new
from stand.vspace import LeafGeneralization, render_conjunction

from conftest import exhaustive_examples, random_dataset


class TestLeafGeneralization:
    def test_and_leaf_two_paths_one_conjunction(self, d_and):
        t = fit(d_and)
        g = leaf_generalization(t, (0,))
        assert len(g.paths) == 2
        expansions = g.expansions()
        assert expansions == [frozenset({Literal(0, 1), Literal(1, 1)})]
        assert g.specific_extension == ()
        assert len(g.union_options) == 4

    def test_option_dataset_cartesian_product_leaf(self, d7_option):
        t = fit(d7_option, alpha=1.0)
        g = leaf_generalization(t, (4,))
        assert len(g.paths) == 1
        assert [len(options) for options in g.paths[0]] == [2, 2]
        got = {frozenset(c) for c in g.expansions()}
        x2, x4, x6 = Literal(1, 1), Literal(3, 1), Literal(5, 1)
        not_x5 = Literal(4, 1, negated=True)
        assert got == {
            frozenset({x4, x2}),
            frozenset({x6, x2}),
            frozenset({x4, not_x5}),
            frozenset({x6, not_x5}),
        }

    def test_single_sample_root_leaf(self, schema2):
        d = Dataset(schema2, (schema2.example(["1", "0"], 1),))
        t = fit(d)
        g = leaf_generalization(t, t.root)
        assert g.paths == ((),)
        assert g.expansions() == [frozenset()]
        assert set(g.specific_extension) == {Literal(0, 1), Literal(1, 0)}

    def test_non_leaf_rejected(self, d_and):
        t = fit(d_and)
        with pytest.raises(ValueError):
            leaf_generalization(t, t.root)

    @pytest.mark.parametrize("seed", range(10))
    def test_every_expansion_selects_exactly_the_leaf_samples(self, seed):
        rng = random.Random(seed)
        d = random_dataset(rng, rng.randint(2, 5), rng.randint(3, 12))
        t = fit(d, alpha=1.0)
        for leaf in t.leaves():
            g = leaf_generalization(t, leaf.key)
            for conj in g.expansions():
                selected = tuple(
                    i for i in range(len(d)) if satisfies_all(d.examples[i], conj)
                )
                assert selected == leaf.key

    @pytest.mark.parametrize("seed", range(10))
    def test_specific_extension_true_of_all_leaf_samples(self, seed):
        rng = random.Random(seed + 50)
        d = random_dataset(rng, rng.randint(2, 5), rng.randint(3, 12), n_values=3)
        t = fit(d, alpha=1.0)
        option_features = {}
        for leaf in t.leaves():
            g = leaf_generalization(t, leaf.key)
            used = {lit.feature for _, lit in g.union_options}
            for lit in g.specific_extension:
                assert lit.feature not in used
                assert all(satisfies_all(d.examples[i], [lit]) for i in leaf.key)


class TestMiniSpaceSize:
    def _g(self, option_sizes, n_specific):
        paths = (
            tuple(
                tuple(Literal(i, 0) for _ in range(size))
                for i, size in enumerate(option_sizes)
            ),
        )
        specific = tuple(Literal(10 + i, 0) for i in range(n_specific))
        return LeafGeneralization((0,), paths, (), specific)

    def test_two_by_two_with_two_specific(self):
        assert mini_space_size(self._g((2, 2), 2)) == (24, False)

    def test_identity_case(self):
        assert mini_space_size(self._g((1,), 0)) == (1, False)

    def test_three_by_two_with_three_specific(self):
        assert mini_space_size(self._g((3, 2), 3)) == (144, False)

    def test_overflow_saturates_with_flag(self):
        size, overflowed = mini_space_size(self._g((2,), 30))
        assert overflowed is True
        assert size == 2**63 - 1


class TestAmbiguity:
    def test_option_counts_plus_specific(self, d7_option):
        t = fit(d7_option, alpha=1.0)
        report = ambiguity(t)
        # leaf [4]: options (2 + 2) plus specific literals on 3 free features
        assert report.per_leaf[(4,)] == 7

    def test_and_leaf_four_options(self, d_and):
        t = fit(d_and)
        assert ambiguity(t).per_leaf[(0,)] == 4

    def test_root_leaf_counts_only_specific(self, schema2):
        d = Dataset(schema2, (schema2.example(["1", "0"], 1),))
        t = fit(d)
        assert ambiguity(t).per_leaf[t.root] == 2

    def test_total_is_sum(self, d_and):
        report = ambiguity(fit(d_and))
        assert report.total == sum(report.per_leaf.values())
        assert all(a >= 1 for a in report.per_leaf.values())


class TestInstanceCertainty:
    def test_memorized_positive_sample(self, d_and, schema2):
        t = fit(d_and)
        report = instance_certainty(t, schema2.example(["1", "1"]))
        assert report.signed_ic == 1.0
        assert report.ic_minus is None
        key = report.accepted_plus[0]
        a, a_prime = report.per_leaf[key]
        assert a == a_prime

    def test_memorized_negative_sample(self, d_and, schema2):
        t = fit(d_and)
        report = instance_certainty(t, schema2.example(["0", "0"]))
        assert report.signed_ic == -1.0
        assert report.ic_plus is None

    def test_partial_satisfaction_ratio(self):
        # single positive leaf with A=10 (8 options + 2 specific literals);
        # x satisfies the 8 options but neither specific literal, and its
        # all-ones prefix keeps it off every negative edge
        s = FeatureSchema.binary(10)
        pos = s.example(["1"] * 10, 1)
        neg = s.example(["0"] * 8 + ["1", "1"], 0)
        t = fit(Dataset(s, (pos, neg)))
        pos_leaf = next(k for k, n in t.nodes.items() if n.leaf_label == 1)
        assert ambiguity(t).per_leaf[pos_leaf] == 10
        x = s.example(["1"] * 8 + ["0", "0"])
        report = instance_certainty(t, x)
        assert report.accepted_minus == ()
        assert report.per_leaf[pos_leaf] == (10, 8)
        assert report.ic_plus == 0.8
        assert report.signed_ic == 0.8

    def test_unroutable_example_scores_zero(self, d_and, schema2):
        # one-vs-rest splits always route somewhere, so a no-leaf route can
        # only come from a degenerate hand-built node with a single edge
        from stand import StandTree
        from stand.tree import StandNode, _with_parents

        root = (0, 1, 2, 3)
        nodes = {
            root: StandNode(root, (), ((Literal(0, 1), (0, 1)),), None),
            (0, 1): StandNode((0, 1), (), (), 1),
        }
        degenerate = StandTree(d_and, 1.0, root, _with_parents(nodes))
        x = schema2.example(["0", "0"])
        assert degenerate.route(x) == frozenset()
        report = instance_certainty(degenerate, x)
        assert report.signed_ic == 0.0
        assert report.accepted_plus == () and report.accepted_minus == ()
        assert degenerate.predict(x) == 0

    def test_tie_resolves_positive(self):
        s = FeatureSchema.binary(2)
        d = Dataset(s, (Example((1, 0), 1), Example((0, 1), 0)))
        t = fit(d)
        report = instance_certainty(t, Example((1, 1)))
        if report.ic_plus == report.ic_minus:
            assert report.signed_ic == report.ic_plus

    @pytest.mark.parametrize("seed", range(8))
    def test_training_samples_score_plus_minus_one(self, seed):
        rng = random.Random(seed + 300)
        d = random_dataset(rng, rng.randint(3, 6), rng.randint(4, 12))
        t = fit(d, alpha=1.0)
        if any(len({d.examples[i].label for i in leaf.key}) > 1 for leaf in t.leaves()):
            pytest.skip("zero-gain majority leaf present")
        for x in d.examples:
            report = instance_certainty(t, x)
            assert abs(report.signed_ic) == 1.0
            assert (report.signed_ic > 0) == (x.label == 1)

    @pytest.mark.parametrize("seed", range(6))
    def test_signed_range_and_per_leaf_bounds(self, seed):
        rng = random.Random(seed + 400)
        d = random_dataset(rng, 4, rng.randint(4, 12))
        t = fit(d, alpha=1.0)
        for x in exhaustive_examples(d.schema):
            report = instance_certainty(t, x)
            assert -1.0 <= report.signed_ic <= 1.0
            for a, a_prime in report.per_leaf.values():
                assert 0 <= a_prime <= a

    def test_batch_matches_single(self):
        rng = random.Random(17)
        d = random_dataset(rng, 4, 9)
        t = fit(d, alpha=1.0)
        examples = list(exhaustive_examples(d.schema))
        batch = certainty_batch(t, examples)
        for i, x in enumerate(examples):
            single = instance_certainty(t, x)
            assert batch["signed_ic"][i] == pytest.approx(single.signed_ic, abs=1e-12)
            assert batch["prediction"][i] == single.prediction

    def test_duplicate_confirmation_never_changes_model(self):
        rng = random.Random(23)
        for _ in range(20):
            d = random_dataset(rng, rng.randint(2, 5), rng.randint(3, 10))
            t = fit(d, alpha=1.0)
            x = d.examples[rng.randrange(len(d))]
            t2 = incremental_update(t, [x])
            assert unchanged_modulo_new(t, t2)
            assert ambiguity(t).total == ambiguity(t2).total

    @pytest.mark.xfail(
        strict=True,
        reason=(
            "per-leaf bound shrink under consistent positive examples is a "
            "tendency, not an invariant: a novel example changes evidence-unit "
            "counts, and fresh near-best ties at ancestors can add options to "
            "a surviving leaf (roughly 1 in 300 probes at this seed); the "
            "duplicate-confirmation form above holds unconditionally"
        ),
    )
    def test_accepting_leaf_ambiguity_never_grows_on_consistent_positive(self):
        rng = random.Random(557)
        for _ in range(120):
            d = random_dataset(rng, rng.randint(3, 6), rng.randint(4, 12))
            t = fit(d, alpha=1.0)
            amb = ambiguity(t)
            for _ in range(15):
                x = Example(tuple(rng.randrange(2) for _ in range(d.schema.arity)))
                rep = instance_certainty(t, x)
                if not rep.accepted_plus:
                    continue
                t2 = incremental_update(t, [x.with_label(1)])
                amb2 = ambiguity(t2)
                stripped = {
                    tuple(i for i in k if i < len(d)): v
                    for k, v in amb2.per_leaf.items()
                }
                for leaf in rep.accepted_plus:
                    if leaf in stripped:
                        assert stripped[leaf] <= amb.per_leaf[leaf]


class TestEnumerateG:
    def test_and_dataset_single_cover_single_statement(self, d_and):
        t = fit(d_and)
        statements, truncated = enumerate_G(t, limit=16)
        assert truncated is False
        assert statements == [(frozenset({Literal(0, 1), Literal(1, 1)}),)]

    def test_limit_zero_truncates(self, d_and):
        t = fit(d_and)
        statements, truncated = enumerate_G(t, limit=0)
        assert statements == []
        assert truncated is True

    def test_option_dataset_pairs_leaf_alternatives(self, d7_option):
        t = fit(d7_option, alpha=1.0)
        statements, truncated = enumerate_G(t, limit=64)
        assert truncated is False
        # single cover {leaf [4], leaf [1,3]}: 4 alternative conjunctions
        # for the first times 2 (either negated root literal) for the second
        assert len(statements) == 8
        rendered = {render_dnf(s, t.schema) for s in statements}
        assert "OR(AND(X2=1,X4=1),AND(X4=0))" in rendered
        for conj_text in ("AND(X2=1,X4=1)", "AND(X2=1,X6=1)",
                          "AND(X4=1,X5=0)", "AND(X5=0,X6=1)"):
            assert any(conj_text in text for text in rendered)

    @pytest.mark.parametrize("seed", range(8))
    def test_every_statement_classifies_training_set_perfectly(self, seed):
        rng = random.Random(seed + 500)
        d = random_dataset(rng, rng.randint(2, 4), rng.randint(3, 10))
        t = fit(d, alpha=1.0)
        if any(len({d.examples[i].label for i in leaf.key}) > 1 for leaf in t.leaves()):
            pytest.skip("not separable by greedy gini")
        statements, _ = enumerate_G(t, limit=200)
        assert statements
        for dnf in statements:
            for x in d.examples:
                accepted = any(satisfies_all(x, conj) for conj in dnf)
                assert accepted == (x.label == 1)


class TestRendering:
    def test_binary_negation_renders_as_opposite_value(self, d7_option):
        t = fit(d7_option, alpha=1.0)
        g = leaf_generalization(t, (4,))
        rendered = {render_conjunction(c, t.schema) for c in g.expansions()}
        assert rendered == {
            "AND(X2=1,X4=1)",
            "AND(X2=1,X6=1)",
            "AND(X4=1,X5=0)",
            "AND(X5=0,X6=1)",
        }

    def test_dnf_rendering(self, d_and, schema2):
        t = fit(d_and)
        statements, _ = enumerate_G(t, limit=4)
        assert render_dnf(statements[0], schema2) == "OR(AND(X1=1,X2=1))"
