"""Command-line entry points: benchmark runs, one-shot explanation of an
image, and the HTTP service."""

import json

import click
import numpy as np

from . import bench
from .blackbox import blackbox_from_descriptor
from .domain import InterpretableDomain, build_grid_segmentation, load_image, load_mask
from .explain import feature_importance, render_tree
from .guarantees import fit_complete, relabel_leaves, verify_fidelity
from .ridge import lime_explain
from .sampling import ENUMERATION_BUDGET, enumeration_sample
from .tree import fit_limetree, tree_to_json


@click.group()
def main():
    """Local surrogate-tree explanations for black-box classifiers."""


@main.group()
def bench_group():
    """Benchmark harness."""


main.add_command(bench_group, name="bench")


def _config_options(fn):
    opts = [
        click.option("--family", default="segment-logit",
                     type=click.Choice(["segment-logit", "boolean-table", "xor-pair"])),
        click.option("--trials", default=10, type=int),
        click.option("--d", default=8, type=int),
        click.option("--top", default=3, type=int),
        click.option("--class-count", default=5, type=int),
        click.option("--seed", default=42, type=int),
        click.option("--kernel-width", default=0.25, type=float),
        click.option("--epsilon", default=0.95, type=float),
        click.option("--out", default=None, type=click.Path()),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_config(family, trials, d, top, class_count, seed, kernel_width,
                  epsilon, out):
    if family == "xor-pair":
        class_count = max(2, min(class_count, 3))
        top = min(top, class_count)
    return bench.ExperimentConfig(
        family=family, trials=trials, d=d, top=top, class_count=class_count,
        seed=seed, kernel_width=kernel_width, epsilon=epsilon, out=out)


@bench_group.command("fidelity")
@_config_options
def bench_fidelity(**kwargs):
    """Mean per-method losses over seeded synthetic trials."""
    config = _build_config(**kwargs)
    rows = bench.run_fidelity_experiment(config)
    text = bench.rows_to_csv(rows, bench.CSV_COLUMNS)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@bench_group.command("depth-sweep")
@_config_options
def bench_depth_sweep(**kwargs):
    """Loss-vs-depth curves per method."""
    config = _build_config(**kwargs)
    rows = bench.run_depth_sweep(config)
    columns = ["method", "metric", "class_scope", "depth", "complexity",
               "mean", "stderr", "trials", "d"]
    text = bench.rows_to_csv(rows, columns)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--image", required=True, type=click.Path(exists=True))
@click.option("--mask", default=None, type=click.Path(exists=True),
              help="Label image; mutually exclusive with --grid.")
@click.option("--grid", default=None, help="ROWSxCOLS grid segmentation.")
@click.option("--classes", default=3, type=int, help="Explain the top-n classes.")
@click.option("--epsilon", default=0.95, type=float)
@click.option("--blackbox", "blackbox_json", default=None,
              help="Black-box descriptor JSON; defaults to a seeded synthetic.")
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path())
def explain(image, mask, grid, classes, epsilon, blackbox_json, seed, out):
    """Fit surrogates for one image and write the explanation bundle."""
    anchor = load_image(image)
    if mask:
        seg = load_mask(mask)
    elif grid:
        rows, cols = (int(v) for v in grid.lower().split("x"))
        seg = build_grid_segmentation(anchor.shape[1], anchor.shape[0], rows, cols)
    else:
        raise click.UsageError("provide --mask or --grid")
    domain = InterpretableDomain.for_image(anchor, seg)

    if blackbox_json:
        desc = json.loads(blackbox_json)
    else:
        desc = {"type": "synthetic", "kind": "segment-logit", "d": domain.d,
                "class_count": max(classes, 2), "seed": seed}
    bb = blackbox_from_descriptor(desc, domain=domain)

    sample = enumeration_sample(domain.d)
    anchor_row = bb.predict_batch([domain.anchor])[0]
    top = [int(c) for c in np.argsort(-anchor_row, kind="stable")[:classes]]

    tree, report = fit_limetree(bb, domain, sample, top, epsilon)
    relabeled = relabel_leaves(tree, bb, domain)
    bundle = {
        "d": domain.d,
        "domain": domain.to_json(),
        "classes": [int(c) for c in top],
        "anchor_probabilities": [float(v) for v in anchor_row],
        "fit_report": report.to_json(),
        "tree": tree_to_json(tree),
        "tree_relabeled": tree_to_json(relabeled),
        "feature_importance": [float(v) for v in feature_importance(tree)],
        "lime_baseline": lime_explain(bb, domain, sample, top).to_json(),
        "structure": render_tree(tree, domain),
        "fidelity": verify_fidelity(relabeled, bb, domain, "minimal-set").to_json(),
    }
    if 2 ** domain.d <= ENUMERATION_BUDGET:
        star = fit_complete(bb, domain, top)
        bundle["tree_complete"] = tree_to_json(star)
        bundle["fidelity_complete"] = verify_fidelity(
            star, bb, domain, "full-enumeration").to_json()
    with open(out, "w") as fh:
        json.dump(bundle, fh, indent=2, sort_keys=True)
    click.echo("wrote %s (d=%d, final loss %.6f)"
               % (out, domain.d, report.final_loss))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--sessions-dir", default="./limetree-sessions", type=click.Path())
def serve(host, port, sessions_dir):
    """Run the HTTP explanation service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(sessions_dir), host=host, port=port)


if __name__ == "__main__":
    main()
