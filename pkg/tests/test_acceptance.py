"""Acceptance suite. Each test prints one PASS/FAIL line for its criterion;
run with -s (or read the captured output) to see the scoreboard."""

import subprocess
import sys
import time

import numpy as np
from scipy import stats

from test_explain import brute_force_counterfactuals
from test_ridge import wls_oracle
from limetree.bench import (ExperimentConfig, make_trial_blackbox,
                            make_trial_domain, run_depth_sweep,
                            run_single_trial)
from limetree.explain import CounterfactualQuery, counterfactual
from limetree.guarantees import fit_complete, minimal_set, relabel_leaves
from limetree.ridge import fit_ridge
from limetree.sampling import (build_weighted_sample, cosine_distance,
                               enumerate_domain, enumeration_sample,
                               exponential_kernel)
from limetree.tree import fit_tree, loss_limetree, materialize_targets


def report(n, ok, detail):
    print("CRITERION %d: %s (%s)" % (n, "PASS" if ok else "FAIL", detail))
    assert ok, detail


def criterion1_suite():
    """56 seeded black boxes: one per (d, family, replicate) cell."""
    cases = []
    families = ["segment-logit", "boolean-table"]
    for d in range(4, 11):
        for r in range(8):
            family = families[r % 2]
            seed = d * 100 + r
            domain = make_trial_domain(d, seed)
            bb = make_trial_blackbox(family, d, 4, seed, domain)
            cases.append((d, domain, bb))
    return cases


def test_criterion_1_complete_trees_exact_zero():
    start = time.monotonic()
    cases = criterion1_suite()
    worst = 0.0
    for d, domain, bb in cases:
        star = fit_complete(bb, domain, classes=range(4))
        pts = enumerate_domain(d)
        truth = materialize_targets(bb, domain, pts)
        loss = loss_limetree(truth, star.predict_rows(pts), np.ones(len(pts)))
        worst = max(worst, loss)
    elapsed = time.monotonic() - start
    ok = worst == 0.0 and len(cases) >= 50 and elapsed < 60.0
    report(1, ok, "%d black boxes, worst loss %r, %.1fs" %
           (len(cases), worst, elapsed))


def test_criterion_2_relabel_exact_at_minimal_points():
    mismatches = 0
    checked = 0
    for d, domain, bb in criterion1_suite():
        sample = enumeration_sample(d)
        targets = materialize_targets(bb, domain, sample.points)
        for depth in range(1, d + 1):
            tree = fit_tree(sample.points, targets, sample.weights, depth)
            tree.classes = list(range(targets.shape[1]))
            rel = relabel_leaves(tree, bb, domain)
            for leaf, mpt in minimal_set(rel).items():
                truth = materialize_targets(bb, domain, [mpt])[0]
                checked += 1
                if not np.array_equal(rel.pred[leaf], truth):
                    mismatches += 1
    report(2, mismatches == 0,
           "%d leaf/minimal-point checks, %d mismatches" % (checked, mismatches))


def test_criterion_3_counterfactual_oracle_equivalence():
    rng = np.random.default_rng(99)
    mismatches = 0
    total = 0
    targets_pool = [("argmax_is",), ("argmax_not",), ("prob_at_least",)]
    for s in range(10):
        d = int(rng.integers(3, 9))
        domain = make_trial_domain(d, seed=500 + s)
        family = "segment-logit" if s % 2 else "boolean-table"
        bb = make_trial_blackbox(family, d, 3, 500 + s, domain)
        tree = fit_complete(bb, domain, classes=range(3))
        for _ in range(20):
            kind = targets_pool[int(rng.integers(0, 3))][0]
            cls = int(rng.integers(0, 3))
            if kind == "prob_at_least":
                tgt = (kind, cls, float(rng.uniform(0.2, 0.8)))
            else:
                tgt = (kind, cls)
            n_given = int(rng.integers(0, min(3, d)))
            given = {int(f): int(rng.integers(0, 2))
                     for f in rng.choice(d, size=n_given, replace=False)}
            n_desp = int(rng.integers(0, min(3, d)))
            despite = {int(f) for f in
                       rng.choice(d, size=n_desp, replace=False)} - set(given)
            query = CounterfactualQuery(target=tgt, given=given, despite=despite)
            res = counterfactual(query, tree, domain, bb)
            best, winners = brute_force_counterfactuals(bb, domain, query, d)
            total += 1
            got = sorted(tuple(p) for p in res.points)
            if res.distance != best or got != winners:
                mismatches += 1
    report(3, total == 200 and mismatches == 0,
           "%d queries, %d mismatches" % (total, mismatches))


def test_criterion_4_method_ordering_sign_test():
    config = ExperimentConfig(family="segment-logit", trials=100, d=8, top=3,
                              class_count=5, seed=42)
    limet, lime = [], []
    for t in range(config.trials):
        losses, _ = run_single_trial(config, t)
        limet.append(losses[("limet", "limetree_loss", "top_3")])
        lime.append(losses[("lime", "limetree_loss", "top_3")])
    limet = np.asarray(limet)
    lime = np.asarray(lime)
    wins = int((limet < lime).sum())
    ties = int((limet == lime).sum())
    p = stats.binomtest(wins, len(limet) - ties, 0.5,
                        alternative="greater").pvalue
    ok = limet.mean() < lime.mean() and p < 0.05
    report(4, ok, "mean limet %.4f < mean lime %.4f, %d/%d wins, sign test "
           "p=%.2e" % (limet.mean(), lime.mean(), wins, len(limet), p))


def test_criterion_5_depth_sweep_monotone_per_trial():
    violations = 0
    curves = 0
    for seed in range(200, 210):
        config = ExperimentConfig(family="segment-logit", trials=1, d=6,
                                  top=3, class_count=4, seed=seed)
        rows = run_depth_sweep(config)
        curve = [r["mean"] for r in rows if r["method"] == "limet"]
        curves += 1
        if any(b > a + 1e-12 for a, b in zip(curve, curve[1:])):
            violations += 1
    report(5, violations == 0,
           "%d single-trial curves, %d monotonicity violations"
           % (curves, violations))


def test_criterion_6_loss_unit_anchors():
    anchor = loss_limetree([[1.0, 0.0, 0.0]], [[0.0, 0.0, 1.0]], [1.0])
    kernel = exponential_kernel(0.0, 0.25)
    self_dist = cosine_distance([1, 1, 1, 1], [1, 1, 1, 1])
    ok = anchor == 1.0 and kernel == 1.0 and self_dist == 0.0
    report(6, ok, "max-loss %r, k(0) %r, self-distance %r"
           % (anchor, kernel, self_dist))


def test_criterion_7_ridge_oracle():
    rng = np.random.default_rng(77)
    worst_wls = 0.0
    worst_res = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 7))
        X = enumerate_domain(d).astype(float)
        y = rng.random(2 ** d)
        w = rng.random(2 ** d) + 0.1
        surr = fit_ridge(X, y, w, alpha=0.0)
        theta = wls_oracle(X, y, w)
        got = np.concatenate([[surr.intercept], surr.coefficients])
        worst_wls = max(worst_wls, float(np.abs(got - theta).max()))
        for alpha in (0.1, 1.0, 10.0):
            surr = fit_ridge(X, y, w, alpha=alpha)
            Xa = np.hstack([np.ones((2 ** d, 1)), X])
            A = Xa.T @ (w[:, None] * Xa)
            pen = np.eye(d + 1) * alpha
            pen[0, 0] = 0.0
            th = np.concatenate([[surr.intercept], surr.coefficients])
            res = np.abs((A + pen) @ th - Xa.T @ (w * y)).max()
            worst_res = max(worst_res, float(res))
    ok = worst_wls < 1e-9 and worst_res < 1e-8
    report(7, ok, "worst WLS gap %.2e, worst residual %.2e"
           % (worst_wls, worst_res))


def test_criterion_8_deterministic_csv(tmp_path):
    args = [sys.executable, "-m", "limetree.cli", "bench", "fidelity",
            "--seed", "42", "--trials", "3", "--d", "5", "--top", "2",
            "--class-count", "3"]
    a = subprocess.run(args, capture_output=True)
    b = subprocess.run(args, capture_output=True)
    ok = a.returncode == 0 and b.returncode == 0 and a.stdout == b.stdout \
        and len(a.stdout) > 0
    report(8, ok, "%d bytes, byte-identical reruns: %s"
           % (len(a.stdout), a.stdout == b.stdout))


def test_criterion_9_greedy_vs_complete_contrast():
    # near-uniform proximity weights: every split gain on the xor-pair
    # structure cancels below tolerance, so greedy stalls at the root while
    # the fixed-order complete tree is exact; see notes on kernel width
    d = 2
    domain = make_trial_domain(d, seed=900)
    bb = make_trial_blackbox("xor-pair", d, 2, 900, domain)
    sample = build_weighted_sample(enumerate_domain(d), kernel_width=1e6)
    targets = materialize_targets(bb, domain, sample.points)
    tree = fit_tree(sample.points, targets, sample.weights, d)
    greedy_loss = loss_limetree(targets, tree.predict_rows(sample.points),
                                sample.weights)
    star = fit_complete(bb, domain, classes=range(2))
    star_loss = loss_limetree(targets, star.predict_rows(sample.points),
                              sample.weights)
    ok = greedy_loss > 0.2 and star_loss == 0.0 and tree.depth == 0
    report(9, ok, "greedy depth %d loss %.4f > 0.2, complete loss %r"
           % (tree.depth, greedy_loss, star_loss))
