"""The six explanation types extracted from a fitted surrogate: feature
importance, rules, exemplars, what-if answers, constrained counterfactuals
and shortest explanations, plus the tree-structure document.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError
from .guarantees import minimal_point, minimal_set
from .sampling import ENUMERATION_BUDGET, enumerate_domain
from .tree import GAIN_TOL, materialize_targets


def feature_importance(tree):
    """Gini-style importance: summed (weight-fraction x impurity-decrease)
    per split feature, normalized to sum 1 when the tree has any split.
    Sub-tolerance gains count as zero."""
    raw = np.zeros(tree.d)
    total_weight = tree.support[0]
    for i in range(tree.n_nodes):
        f = tree.feature[i]
        if f >= 0 and tree.gain[i] > GAIN_TOL:
            raw[f] += tree.gain[i] / total_weight
    s = raw.sum()
    if s > 0:
        return raw / s
    return raw


@dataclass
class Rule:
    literals: list            # [(feature, bit)] in root-to-leaf order
    prediction: np.ndarray
    leaf: int
    minimal: np.ndarray

    def to_json(self):
        return {
            "literals": [{"feature": int(f), "value": int(v)} for f, v in self.literals],
            "prediction": [float(v) for v in self.prediction],
            "leaf": int(self.leaf),
            "minimal_point": [int(b) for b in self.minimal],
        }


def extract_rule(tree, leaf):
    """Conjunction of (feature = bit) literals along the root-to-leaf path."""
    literals = [(f, 1 if went_right else 0) for f, went_right in tree.path_to(leaf)]
    return Rule(literals=literals, prediction=tree.pred[leaf].copy(),
                leaf=int(leaf), minimal=minimal_point(tree, leaf))


@dataclass
class ExemplarResult:
    anchor_leaf: int
    anchor_points: list       # enumeration points routed to the anchor leaf
    neighbors: list           # dicts: leaf, minimal_point, distance, argmax_class

    def to_json(self):
        return {
            "anchor_leaf": int(self.anchor_leaf),
            "anchor_points": [[int(b) for b in p] for p in self.anchor_points],
            "neighbors": [
                {"leaf": int(n["leaf"]),
                 "minimal_point": [int(b) for b in n["minimal_point"]],
                 "distance": int(n["distance"]),
                 "argmax_class": int(n["argmax_class"])}
                for n in self.neighbors
            ],
        }


def exemplars(tree, anchor_leaf, radius, class_filter="any",
              budget=ENUMERATION_BUDGET, leaf_level_only=False):
    """Points of the anchor leaf plus nearby leaves, nearness measured by
    Hamming distance between leaf minimal points.

    When the enumeration exceeds the budget the per-leaf point listing is
    unavailable; pass ``leaf_level_only=True`` to still get the neighbor
    leaves."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if class_filter not in ("same", "different", "any"):
        raise ValueError("class_filter must be same/different/any")

    anchor_min = minimal_point(tree, anchor_leaf)
    anchor_cls = int(np.argmax(tree.pred[anchor_leaf]))

    anchor_points = []
    if 2 ** tree.d <= budget:
        pts = enumerate_domain(tree.d)
        routed = tree.route(pts)
        anchor_points = [pts[i] for i in np.flatnonzero(routed == anchor_leaf)]
    elif not leaf_level_only:
        raise CapacityError("enumeration over budget; use leaf_level_only")

    neighbors = []
    for leaf, mpt in minimal_set(tree).items():
        if leaf == anchor_leaf:
            continue
        dist = int(np.sum(mpt != anchor_min))
        if dist > radius:
            continue
        cls = int(np.argmax(tree.pred[leaf]))
        if class_filter == "same" and cls != anchor_cls:
            continue
        if class_filter == "different" and cls == anchor_cls:
            continue
        neighbors.append({"leaf": leaf, "minimal_point": mpt,
                          "distance": dist, "argmax_class": cls})
    neighbors.sort(key=lambda n: (n["distance"], _bits_value(n["minimal_point"])))
    return ExemplarResult(anchor_leaf=int(anchor_leaf),
                          anchor_points=anchor_points, neighbors=neighbors)


def _bits_value(bits):
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


@dataclass
class WhatIfResult:
    probabilities: np.ndarray
    oracle: str               # which oracle actually answered

    def to_json(self):
        return {"probabilities": [float(v) for v in self.probabilities],
                "oracle": self.oracle}


def what_if(point, oracle, tree=None, bb=None, domain=None):
    point = np.asarray(point)
    if oracle == "tree":
        return WhatIfResult(probabilities=tree.predict(point), oracle="tree")
    if oracle == "blackbox":
        row = materialize_targets(bb, domain, [point],
                                  tree.classes if tree is not None else None)[0]
        return WhatIfResult(probabilities=row, oracle="blackbox")
    raise ValueError("oracle must be 'tree' or 'blackbox'")


# -- counterfactuals -------------------------------------------------------


@dataclass
class CounterfactualQuery:
    """Target predicate plus user constraints.

    target: ('argmax_is', c) | ('argmax_not', a) | ('prob_at_least', c, theta)
    given: features forced to a specific bit
    despite: features frozen at their reference value
    """

    target: tuple
    reference: np.ndarray = None
    given: dict = field(default_factory=dict)
    despite: set = field(default_factory=set)
    oracle: str = "blackbox"

    def validate(self, d):
        if self.target[0] not in ("argmax_is", "argmax_not", "prob_at_least"):
            raise ValueError("unknown target predicate %r" % (self.target[0],))
        overlap = set(self.given) & set(self.despite)
        if overlap:
            raise ValueError("given and despite overlap on features %s"
                             % sorted(overlap))
        for f in list(self.given) + list(self.despite):
            if not (0 <= f < d):
                raise ValueError("constrained feature %r out of range" % (f,))
        ref = self.reference
        if ref is None:
            ref = np.ones(d, dtype=np.uint8)
        ref = np.asarray(ref, dtype=np.uint8)
        for f, bit in self.given.items():
            if f in self.despite and ref[f] != bit:
                raise ValueError("given conflicts with despite on feature %d" % f)
        return ref


@dataclass
class CounterfactualResult:
    distance: int             # None when no point satisfies the query
    points: list
    oracle: str
    constraints_echo: dict

    @property
    def impossible(self):
        return self.distance is None

    def to_json(self):
        return {
            "distance": None if self.distance is None else int(self.distance),
            "points": [[int(b) for b in p] for p in self.points],
            "oracle": self.oracle,
            "constraints_echo": self.constraints_echo,
        }


def _oracle_rows(points, oracle, tree, domain, bb):
    """Class-probability rows for candidate points under the chosen oracle,
    together with the class indices the columns refer to."""
    if oracle == "tree":
        return tree.predict_rows(points), list(tree.classes)
    rows = materialize_targets(bb, domain, points)
    return rows, list(range(rows.shape[1]))


def _predicate_mask(rows, classes, target):
    kind = target[0]
    if kind == "prob_at_least":
        _, c, theta = target
        col = classes.index(c)
        return rows[:, col] >= theta
    c = target[1]
    arg = np.asarray(classes)[np.argmax(rows, axis=1)]
    if kind == "argmax_is":
        return arg == c
    return arg != c


def candidate_points(tree, d, budget=ENUMERATION_BUDGET):
    """Full enumeration when affordable, else the tree's minimal set."""
    if 2 ** d <= budget:
        return enumerate_domain(d)
    return np.array(list(minimal_set(tree).values()), dtype=np.uint8)


def counterfactual(query, tree, domain, bb, budget=ENUMERATION_BUDGET):
    """All constraint-satisfying points at minimal Hamming distance from
    the reference; an empty result means the query is impossible."""
    ref = query.validate(tree.d)
    cands = candidate_points(tree, tree.d, budget)

    mask = np.ones(len(cands), dtype=bool)
    for f, bit in query.given.items():
        mask &= cands[:, f] == bit
    for f in query.despite:
        mask &= cands[:, f] == ref[f]
    cands = cands[mask]
    echo = {"given": {int(k): int(v) for k, v in query.given.items()},
            "despite": sorted(int(f) for f in query.despite),
            "target": list(query.target)}
    if len(cands) == 0:
        return CounterfactualResult(None, [], query.oracle, echo)

    rows, classes = _oracle_rows(cands, query.oracle, tree, domain, bb)
    ok = _predicate_mask(rows, classes, query.target)
    cands = cands[ok]
    if len(cands) == 0:
        return CounterfactualResult(None, [], query.oracle, echo)

    dists = (cands != ref[None, :]).sum(axis=1)
    best = int(dists.min())
    winners = cands[dists == best]
    order = np.argsort([_bits_value(p) for p in winners], kind="stable")
    return CounterfactualResult(best, [winners[i] for i in order],
                                query.oracle, echo)


def shortest_explanation(target_class, tree, domain, bb, oracle="blackbox",
                         budget=ENUMERATION_BUDGET):
    """All oracle-argmax points for the class with the fewest preserved
    segments; returns (length, points) with length None when none exist."""
    cands = candidate_points(tree, tree.d, budget)
    rows, classes = _oracle_rows(cands, oracle, tree, domain, bb)
    ok = np.asarray(classes)[np.argmax(rows, axis=1)] == target_class
    cands = cands[ok]
    if len(cands) == 0:
        return None, []
    ones = cands.sum(axis=1)
    best = int(ones.min())
    winners = cands[ones == best]
    order = np.argsort([_bits_value(p) for p in winners], kind="stable")
    return best, [winners[i] for i in order]


def render_tree(tree, domain=None):
    """Structure document: every node with its split feature, every leaf
    with prediction, support, minimal point and a thumbnail reference."""
    leaves_min = minimal_set(tree)
    nodes = []
    for i in range(tree.n_nodes):
        if tree.feature[i] >= 0:
            nodes.append({"id": i, "kind": "split",
                          "feature": int(tree.feature[i]),
                          "left": int(tree.left[i]),
                          "right": int(tree.right[i])})
        else:
            bits = leaves_min[i]
            nodes.append({
                "id": i, "kind": "leaf",
                "prediction": [float(v) for v in tree.pred[i]],
                "support": float(tree.support[i]),
                "minimal_point": [int(b) for b in bits],
                "thumbnail": "".join(str(int(b)) for b in bits),
            })
    return {"d": tree.d, "classes": list(tree.classes),
            "depth": tree.depth, "width": tree.width, "nodes": nodes,
            "variant": tree.meta.get("variant", "greedy")}
