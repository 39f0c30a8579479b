import itertools

import numpy as np
import pytest

from conftest import and_table_blackbox, bit0_table_blackbox
from limetree.bench import make_trial_domain
from limetree.blackbox import SyntheticSpec, make_synthetic
from limetree.errors import CapacityError
from limetree.explain import (CounterfactualQuery, counterfactual, exemplars,
                              extract_rule, feature_importance, render_tree,
                              shortest_explanation, what_if)
from limetree.guarantees import fit_complete
from limetree.sampling import enumerate_domain, enumeration_sample
from limetree.tree import fit_tree, materialize_targets


def brute_force_counterfactuals(bb, domain, query, d):
    """Pure-python reference: walk all 2^d points, apply constraints and the
    target predicate against the black box, keep minimal-distance winners."""
    ref = [1] * d if query.reference is None else [int(b) for b in query.reference]
    winners, best = [], None
    for bits in itertools.product([0, 1], repeat=d):
        ok = all(bits[f] == v for f, v in query.given.items())
        ok = ok and all(bits[f] == ref[f] for f in query.despite)
        if not ok:
            continue
        row = bb.predict_batch([domain.from_interpretable(list(bits))])[0]
        kind = query.target[0]
        if kind == "argmax_is":
            hit = int(np.argmax(row)) == query.target[1]
        elif kind == "argmax_not":
            hit = int(np.argmax(row)) != query.target[1]
        else:
            hit = row[query.target[1]] >= query.target[2]
        if not hit:
            continue
        dist = sum(1 for a, b in zip(bits, ref) if a != b)
        if best is None or dist < best:
            best, winners = dist, [bits]
        elif dist == best:
            winners.append(bits)
    return best, sorted(winners)


@pytest.fixture
def d3_setup():
    domain = make_trial_domain(3, seed=21)
    bb = bit0_table_blackbox(domain)
    tree = fit_complete(bb, domain, classes=range(3))
    return domain, bb, tree


class TestFeatureImportance:
    def test_and_tree_hand_trace(self, domain_d2):
        # uniform weights over the AND table; by-hand gains are 0.0625 at
        # the root and 0.125 at the second split, normalizing to 1/3, 2/3
        bb = and_table_blackbox(domain_d2)
        pts = enumerate_domain(2)
        targets = materialize_targets(bb, domain_d2, pts)
        tree = fit_tree(pts, targets, np.ones(4), 2)
        imp = feature_importance(tree)
        assert imp == pytest.approx([1 / 3, 2 / 3])

    def test_stump_importance_sums_to_one(self, d3_setup):
        domain, bb, _ = d3_setup
        ws = enumeration_sample(3)
        targets = materialize_targets(bb, domain, ws.points)
        tree = fit_tree(ws.points, targets, ws.weights, 1)
        imp = feature_importance(tree)
        assert imp.sum() == pytest.approx(1.0)
        assert imp[0] == pytest.approx(1.0)  # only bit 0 matters

    def test_leaf_only_tree_is_all_zero(self):
        pts = enumerate_domain(2)
        tree = fit_tree(pts, np.full((4, 2), 0.5), np.ones(4), 2)
        assert feature_importance(tree).tolist() == [0.0, 0.0]


class TestRules:
    def test_rule_literals_match_path(self, d3_setup):
        _, _, tree = d3_setup
        leaf = int(tree.leaves()[0])
        rule = extract_rule(tree, leaf)
        assert rule.leaf == leaf
        assert [(f, bool(v)) for f, v in rule.literals] == tree.path_to(leaf)
        assert rule.to_json()["literals"][0]["feature"] == 0

    def test_rule_prediction_matches_leaf(self, d3_setup):
        _, _, tree = d3_setup
        for leaf in tree.leaves():
            rule = extract_rule(tree, int(leaf))
            assert np.array_equal(rule.prediction, tree.pred[leaf])


class TestExemplars:
    def test_radius_zero_only_anchor(self, d3_setup):
        _, _, tree = d3_setup
        anchor = int(tree.route(np.ones(3))[0])
        res = exemplars(tree, anchor, radius=0)
        assert res.neighbors == []
        assert any(p.tolist() == [1, 1, 1] for p in res.anchor_points)

    def test_radius_one_neighbors_sorted(self, d3_setup):
        _, _, tree = d3_setup
        anchor = int(tree.route(np.ones(3))[0])
        res = exemplars(tree, anchor, radius=1)
        dists = [n["distance"] for n in res.neighbors]
        assert dists == sorted(dists)
        assert all(d <= 1 for d in dists)

    def test_class_filter(self, d3_setup):
        _, _, tree = d3_setup
        anchor = int(tree.route(np.ones(3))[0])
        anchor_cls = int(np.argmax(tree.pred[anchor]))
        same = exemplars(tree, anchor, radius=3, class_filter="same")
        diff = exemplars(tree, anchor, radius=3, class_filter="different")
        assert all(n["argmax_class"] == anchor_cls for n in same.neighbors)
        assert all(n["argmax_class"] != anchor_cls for n in diff.neighbors)
        both = exemplars(tree, anchor, radius=3, class_filter="any")
        assert len(both.neighbors) == len(same.neighbors) + len(diff.neighbors)

    def test_over_budget_requires_flag(self, d3_setup):
        _, _, tree = d3_setup
        anchor = int(tree.route(np.ones(3))[0])
        with pytest.raises(CapacityError):
            exemplars(tree, anchor, radius=1, budget=4)
        res = exemplars(tree, anchor, radius=1, budget=4, leaf_level_only=True)
        assert res.anchor_points == []

    def test_bad_arguments(self, d3_setup):
        _, _, tree = d3_setup
        anchor = int(tree.leaves()[0])
        with pytest.raises(ValueError):
            exemplars(tree, anchor, radius=-1)
        with pytest.raises(ValueError):
            exemplars(tree, anchor, radius=1, class_filter="near")


class TestWhatIf:
    def test_tree_oracle(self, d3_setup):
        _, _, tree = d3_setup
        res = what_if([0, 1, 1], "tree", tree=tree)
        assert res.oracle == "tree"
        assert res.probabilities.tolist() == pytest.approx([0.15, 0.7, 0.15])

    def test_blackbox_oracle(self, d3_setup):
        domain, bb, tree = d3_setup
        res = what_if([1, 0, 1], "blackbox", tree=tree, bb=bb, domain=domain)
        assert res.oracle == "blackbox"
        assert res.probabilities.tolist() == pytest.approx([0.6, 0.25, 0.15])

    def test_unknown_oracle(self, d3_setup):
        _, _, tree = d3_setup
        with pytest.raises(ValueError):
            what_if([1, 1, 1], "guess", tree=tree)


class TestCounterfactual:
    def test_matches_brute_force_basic(self, d3_setup):
        domain, bb, tree = d3_setup
        query = CounterfactualQuery(target=("argmax_is", 1))
        res = counterfactual(query, tree, domain, bb)
        best, winners = brute_force_counterfactuals(bb, domain, query, 3)
        assert res.distance == best == 1
        assert sorted(tuple(p) for p in res.points) == winners

    def test_given_constraint(self, d3_setup):
        domain, bb, tree = d3_setup
        query = CounterfactualQuery(target=("argmax_is", 1), given={1: 0})
        res = counterfactual(query, tree, domain, bb)
        best, winners = brute_force_counterfactuals(bb, domain, query, 3)
        assert res.distance == best
        assert sorted(tuple(p) for p in res.points) == winners
        assert all(p[1] == 0 for p in res.points)

    def test_despite_makes_impossible(self, d3_setup):
        domain, bb, tree = d3_setup
        # class 1 needs bit 0 to drop, but despite freezes it at the anchor
        query = CounterfactualQuery(target=("argmax_is", 1), despite={0})
        res = counterfactual(query, tree, domain, bb)
        assert res.impossible
        assert res.points == []
        assert res.to_json()["distance"] is None

    def test_prob_at_least(self, d3_setup):
        domain, bb, tree = d3_setup
        query = CounterfactualQuery(target=("prob_at_least", 1, 0.5))
        res = counterfactual(query, tree, domain, bb)
        best, winners = brute_force_counterfactuals(bb, domain, query, 3)
        assert res.distance == best
        assert sorted(tuple(p) for p in res.points) == winners

    def test_tree_oracle_on_complete_tree_agrees(self, d3_setup):
        domain, bb, tree = d3_setup
        q_tree = CounterfactualQuery(target=("argmax_not", 1), oracle="tree")
        q_bb = CounterfactualQuery(target=("argmax_not", 1))
        res_t = counterfactual(q_tree, tree, domain, bb)
        res_b = counterfactual(q_bb, tree, domain, bb)
        assert res_t.distance == res_b.distance
        assert [p.tolist() for p in res_t.points] == [p.tolist() for p in res_b.points]

    def test_validation_errors(self, d3_setup):
        domain, bb, tree = d3_setup
        with pytest.raises(ValueError):
            counterfactual(CounterfactualQuery(target=("flip", 1)),
                           tree, domain, bb)
        with pytest.raises(ValueError):
            counterfactual(CounterfactualQuery(target=("argmax_is", 1),
                                               given={0: 0}, despite={0}),
                           tree, domain, bb)
        with pytest.raises(ValueError):
            counterfactual(CounterfactualQuery(target=("argmax_is", 1),
                                               given={7: 1}),
                           tree, domain, bb)

    def test_random_queries_match_brute_force(self):
        rng = np.random.default_rng(30)
        domain = make_trial_domain(5, seed=30)
        bb = make_synthetic(SyntheticSpec("boolean-table", 5, 3, 30),
                            domain=domain)
        tree = fit_complete(bb, domain, classes=range(3))
        for _ in range(15):
            given = {int(f): int(rng.integers(0, 2))
                     for f in rng.choice(5, size=rng.integers(0, 2), replace=False)}
            despite = {int(f) for f in rng.choice(5, size=rng.integers(0, 2),
                                                  replace=False)} - set(given)
            query = CounterfactualQuery(
                target=("argmax_is", int(rng.integers(0, 3))),
                given=given, despite=despite)
            res = counterfactual(query, tree, domain, bb)
            best, winners = brute_force_counterfactuals(bb, domain, query, 5)
            assert res.distance == best
            assert sorted(tuple(p) for p in res.points) == winners


class TestShortestExplanation:
    def test_bit0_class(self, d3_setup):
        domain, bb, tree = d3_setup
        # class 1 wins whenever bit 0 is off: the empty instance suffices
        length, pts = shortest_explanation(1, tree, domain, bb)
        assert length == 0
        assert [p.tolist() for p in pts] == [[0, 0, 0]]

    def test_class_needing_bit0(self, d3_setup):
        domain, bb, tree = d3_setup
        length, pts = shortest_explanation(0, tree, domain, bb)
        assert length == 1
        assert [p.tolist() for p in pts] == [[1, 0, 0]]

    def test_unreachable_class(self, d3_setup):
        domain, bb, tree = d3_setup
        length, pts = shortest_explanation(2, tree, domain, bb)
        assert length is None and pts == []


class TestRenderTree:
    def test_document_shape(self, d3_setup):
        import json

        _, _, tree = d3_setup
        doc = render_tree(tree)
        assert doc["d"] == 3 and doc["width"] == 8
        leaves = [n for n in doc["nodes"] if n["kind"] == "leaf"]
        assert len(leaves) == 8
        assert all(len(n["thumbnail"]) == 3 for n in leaves)
        json.dumps(doc)
