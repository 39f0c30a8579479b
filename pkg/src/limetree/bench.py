"""Benchmark harness: fidelity tables and depth-complexity sweeps over
seeded synthetic black boxes.

Absolute numbers from any fixed pretrained network are out of reach here;
what the harness reproduces are the structural facts: the exact-zero
column of the complete-tree variant, the method ordering, and the
monotone loss-vs-depth curves. CSV output is byte-stable for a fixed
seed.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .blackbox import SyntheticSpec, make_synthetic
from .domain import InterpretableDomain, build_grid_segmentation
from .guarantees import fit_complete, relabel_leaves
from .ridge import DEFAULT_ALPHA, fit_ridge
from .sampling import DEFAULT_KERNEL_WIDTH, enumeration_sample
from .tree import (fit_limetree, fit_tree, loss_lime, loss_limetree,
                   materialize_targets)

CSV_COLUMNS = ["method", "metric", "class_scope", "mean", "stderr", "trials", "d"]
METHODS = ["lime", "limet", "limet_relabel", "limet_star"]


@dataclass
class ExperimentConfig:
    family: str = "segment-logit"
    trials: int = 10
    d: int = 8
    top: int = 3
    class_count: int = 5
    seed: int = 42
    kernel_width: float = DEFAULT_KERNEL_WIDTH
    epsilon: float = 0.95
    alpha: float = DEFAULT_ALPHA
    out: str = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.top < 1 or self.top > self.class_count:
            raise ValueError("top must lie in 1..class_count")
        if self.family == "xor-pair":
            self.class_count = max(2, min(self.class_count, self.class_count))


def _trial_seed(master, t):
    return master * 1000003 + t


def make_trial_domain(d, seed):
    """Synthetic anchor: a 1 x d grid of distinct non-black segment colors."""
    rng = np.random.default_rng(seed)
    colors = rng.integers(30, 256, size=(d, 3), dtype=np.int64).astype(np.uint8)
    anchor = np.repeat(colors[None, :, :], 4, axis=0)          # (4, d, 3)
    anchor = np.repeat(anchor, 4, axis=1)                      # (4, 4d, 3)
    seg = build_grid_segmentation(width=4 * d, height=4, rows=1, cols=d)
    return InterpretableDomain.for_image(anchor, seg)


def make_trial_blackbox(family, d, class_count, seed, domain):
    if family == "xor-pair":
        class_count = max(2, class_count)
    spec = SyntheticSpec(kind=family, d=d, class_count=class_count, seed=seed)
    return make_synthetic(spec, domain=domain)


def run_single_trial(config, t):
    """Fit all four surrogates for one seeded trial; returns per-method
    losses keyed by metric."""
    seed = _trial_seed(config.seed, t)
    domain = make_trial_domain(config.d, seed)
    bb = make_trial_blackbox(config.family, config.d, config.class_count,
                             seed, domain)
    sample = enumeration_sample(config.d, config.kernel_width)
    anchor_row = bb.predict_batch([domain.anchor])[0]
    top_classes = [int(c) for c in
                   np.argsort(-anchor_row, kind="stable")[:config.top]]

    targets = materialize_targets(bb, domain, sample.points, top_classes)
    w = sample.weights

    tree, report = fit_limetree(bb, domain, sample, top_classes,
                                config.epsilon, depth_cap=config.d)
    tree_rel = relabel_leaves(tree, bb, domain)
    tree_star = fit_complete(bb, domain, top_classes)
    ridge_models = [fit_ridge(sample.points, targets[:, i], w, config.alpha,
                              class_index=c)
                    for i, c in enumerate(top_classes)]

    preds = {
        "limet": tree.predict_rows(sample.points),
        "limet_relabel": tree_rel.predict_rows(sample.points),
        "limet_star": tree_star.predict_rows(sample.points),
        "lime": np.column_stack([m.predict(sample.points) for m in ridge_models]),
    }

    losses = {}
    for method, g in preds.items():
        for rank in range(config.top):
            losses[(method, "lime_loss", "class_%d" % (rank + 1))] = \
                loss_lime(targets[:, rank], g[:, rank], w)
        for k in range(1, config.top + 1):
            losses[(method, "limetree_loss", "top_%d" % k)] = \
                loss_limetree(targets[:, :k], g[:, :k], w, halve=k > 1)
    return losses, report


def run_fidelity_experiment(config):
    """Mean +/- standard error of each loss per method over the trials."""
    per_key = {}
    for t in range(config.trials):
        losses, _ = run_single_trial(config, t)
        for key, value in losses.items():
            per_key.setdefault(key, []).append(value)

    rows = []
    for method in METHODS:
        for key in sorted(k for k in per_key if k[0] == method):
            values = np.asarray(per_key[key])
            stderr = (values.std(ddof=1) / np.sqrt(len(values))
                      if len(values) > 1 else 0.0)
            rows.append({
                "method": key[0], "metric": key[1], "class_scope": key[2],
                "mean": float(values.mean()), "stderr": float(stderr),
                "trials": config.trials, "d": config.d,
            })
    return rows


def run_depth_sweep(config):
    """Per-depth loss curves for the tree methods, with the linear baseline
    as a depth-independent row."""
    per_key = {}
    for t in range(config.trials):
        seed = _trial_seed(config.seed, t)
        domain = make_trial_domain(config.d, seed)
        bb = make_trial_blackbox(config.family, config.d, config.class_count,
                                 seed, domain)
        sample = enumeration_sample(config.d, config.kernel_width)
        anchor_row = bb.predict_batch([domain.anchor])[0]
        top_classes = [int(c) for c in
                       np.argsort(-anchor_row, kind="stable")[:config.top]]
        targets = materialize_targets(bb, domain, sample.points, top_classes)
        w = sample.weights

        ridge_models = [fit_ridge(sample.points, targets[:, i], w,
                                  config.alpha, class_index=c)
                        for i, c in enumerate(top_classes)]
        lime_pred = np.column_stack([m.predict(sample.points)
                                     for m in ridge_models])
        lime_loss = loss_limetree(targets, lime_pred, w)

        for depth in range(1, config.d + 1):
            tree = fit_tree(sample.points, targets, w, depth)
            loss = loss_limetree(targets, tree.predict_rows(sample.points), w)
            rel = relabel_leaves(tree, bb, domain)
            rel_loss = loss_limetree(targets, rel.predict_rows(sample.points), w)
            per_key.setdefault(("limet", depth), []).append(loss)
            per_key.setdefault(("limet_relabel", depth), []).append(rel_loss)
            per_key.setdefault(("lime", depth), []).append(lime_loss)

        star = fit_complete(bb, domain, top_classes)
        star_loss = loss_limetree(targets, star.predict_rows(sample.points), w)
        per_key.setdefault(("limet_star", config.d), []).append(star_loss)

    rows = []
    for (method, depth) in sorted(per_key, key=lambda k: (k[0], k[1])):
        values = np.asarray(per_key[(method, depth)])
        stderr = (values.std(ddof=1) / np.sqrt(len(values))
                  if len(values) > 1 else 0.0)
        rows.append({
            "method": method, "metric": "limetree_loss",
            "class_scope": "top_%d" % config.top, "depth": depth,
            "complexity": depth / config.d, "mean": float(values.mean()),
            "stderr": float(stderr), "trials": len(values), "d": config.d,
        })
    return rows


def rows_to_csv(rows, columns=None):
    if not rows:
        return ""
    columns = columns or list(rows[0].keys())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(rows, path, columns=None):
    text = rows_to_csv(rows, columns)
    with open(path, "w") as fh:
        fh.write(text)
    return text
