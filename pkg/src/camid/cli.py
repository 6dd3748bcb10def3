"""``camid`` command line: extract, train, predict, eval, synth.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .classify import KNN_DEFAULT_K, LAMBDA_GRID, MLP_DEFAULT_HIDDEN, MLP_DEFAULT_LAMBDA, TrainConfig
from .dataset import read_manifest, source_id
from .errors import CamidError, DataError, LabelOutOfRange
from .evaluation import confusion, confusion_csv, grid_csv, render_confusion, render_grid
from .extract import FEATURE_SETS, default_params, extract_manifest
from .features_dwd import dwd_slot_names
from .features_lbp import AUTO, lbp_slot_names
from .pipeline import load_model, save_model, train_pipeline
from .store import merge_caches, read_cache, read_predictions, write_cache, write_predictions

log = logging.getLogger("camid")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
MAX_SKIPPED_FRACTION = 0.05


class UsageError(CamidError):
    exit_code = EXIT_USAGE


def _tau(text):
    if text.lower() == AUTO:
        return AUTO
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError("tau must be >= 0")
    return value


def _offset(text):
    try:
        dr, dc = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("offset must look like 0,1")
    return dr, dc


def _float_list(text):
    if text == "paper":
        return list(LAMBDA_GRID)
    return [float(v) for v in text.split(",")]


def _int_list(text):
    return [int(v) for v in text.split(",")]


# --- commands ------------------------------------------------------------------------

def cmd_extract(args):
    if args.describe_features:
        names = dwd_slot_names() if args.features == "dwd" else lbp_slot_names()
        for i, name in enumerate(names):
            print(f"{i}\t{name}")
        return EXIT_OK
    if args.manifest is None or args.out is None:
        raise UsageError("extract needs a manifest and --out")
    if args.include_original and not args.augment:
        raise UsageError("--include-original only applies with --augment")
    manifest = read_manifest(args.manifest)
    params = default_params(args.features, args.tau, args.gray_levels, args.offset)
    summary = extract_manifest(manifest, args.features, params, args.augment,
                               args.include_original, args.jobs)
    write_cache(summary.cache, args.out)
    log.info("wrote %d rows of %d %s features to %s", len(summary.cache.ids),
             summary.cache.dimension, args.features, args.out)
    if summary.skipped_fraction > MAX_SKIPPED_FRACTION:
        log.error("%d of %d images failed", len(summary.skipped), summary.total)
        return EXIT_DATA
    return EXIT_OK


def cmd_train(args):
    cache = merge_caches([read_cache(p) for p in args.caches])
    fs = cache.feature_set
    cfg = TrainConfig(args.learning_rate, args.max_iters, args.tol, args.seed, args.grad_check_every)
    hidden = None
    if args.model == "knn":
        grid = args.k or [KNN_DEFAULT_K[fs]]
    elif args.model == "logreg":
        grid = args.lambda_grid or ([args.lam] if args.lam is not None else list(LAMBDA_GRID))
    else:
        hidden = args.hidden or MLP_DEFAULT_HIDDEN[fs]
        grid = args.lambda_grid or [args.lam if args.lam is not None else MLP_DEFAULT_LAMBDA[fs]]

    pca_k = pca_tol = None
    if args.pca is not None:
        value = float(args.pca)
        if value >= 1 and value.is_integer():
            pca_k = int(value)
        else:
            pca_tol = value
    result = train_pipeline(cache, args.model, grid, cfg, args.split, pca_k, pca_tol,
                            pca_relative=not args.pca_absolute, pca_center=not args.no_center,
                            hidden=hidden, intercept=not args.no_intercept)
    save_model(result.pipeline, args.out)

    param_name = "k" if args.model == "knn" else "lambda"
    report_dir = Path(args.report_dir) if args.report_dir else Path(args.out).parent
    report_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.out).stem
    text = (f"model {args.model} on {fs} features ({cache.dimension} dims, "
            f"{len(result.train_ids)} train / {len(result.holdout_ids)} held out)\n")
    if result.pipeline.pca is not None:
        text += f"PCA keeps {result.pipeline.pca.model.k} components\n"
    text += "\n" + render_grid(result.grid, param_name) + "\n" + render_confusion(result.holdout)
    (report_dir / f"{stem}_selection.txt").write_text(text)
    (report_dir / f"{stem}_selection.csv").write_text(grid_csv(result.grid, param_name))
    (report_dir / f"{stem}_holdout.csv").write_text(confusion_csv(result.holdout))
    if not args.no_figures:
        from .plotting import plot_confusion, plot_grid, plot_pca_spectrum
        plot_confusion(result.holdout, report_dir / f"{stem}_holdout.png")
        if len(result.grid.params) > 1:
            plot_grid(result.grid, report_dir / f"{stem}_selection.png", param_name,
                      log_x=args.model != "knn")
        if result.pipeline.pca is not None:
            plot_pca_spectrum(result.pipeline.pca.model, report_dir / f"{stem}_pca.png")
    print(text, end="")
    return EXIT_OK


def cmd_predict(args):
    model = load_model(args.model)
    cache = read_cache(args.cache)
    model.check_cache(cache)
    if args.proba and model.model_type == "knn":
        raise UsageError("--proba is available for logreg and mlp models")
    pred = model.predict(cache.values)
    names = [model.class_names[i] for i in pred]
    proba = model.predict_proba(cache.values) if args.proba else None
    write_predictions(args.out, cache.ids, names, proba, model.class_names)
    log.info("wrote %d predictions to %s", len(names), args.out)
    return EXIT_OK


def _truth(path):
    """Ground truth from a manifest or a labeled feature cache: (id->label, names)."""
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("#camid-features"):
        cache = read_cache(path)
        return dict(zip(cache.ids, cache.labels.tolist())), list(cache.class_names)
    manifest = read_manifest(path)
    return ({e.id: e.label for e in manifest.entries if e.label is not None},
            list(manifest.class_names))


def cmd_eval(args):
    ids, predicted = read_predictions(args.predictions)
    truth, names = _truth(args.truth)
    index = {n: i for i, n in enumerate(names)}
    y_true, y_pred = [], []
    for sid, name in zip(ids, predicted):
        lab = truth.get(sid, truth.get(source_id(sid)))
        if lab is None:
            raise DataError(f"no ground truth for {sid!r}")
        if name not in index:
            raise LabelOutOfRange(f"predicted class {name!r} is not one of {names}")
        y_true.append(lab)
        y_pred.append(index[name])
    cm = confusion(y_true, y_pred, len(names), names)
    text = render_confusion(cm)
    print(text, end="")
    if args.out_prefix:
        prefix = Path(args.out_prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.txt").write_text(text)
        Path(f"{prefix}.csv").write_text(confusion_csv(cm))
        if not args.no_figures:
            from .plotting import plot_confusion
            plot_confusion(cm, f"{prefix}.png")
    return EXIT_OK


def cmd_synth(args):
    from .synthetic import make_dataset
    m = make_dataset(args.out, args.classes, args.per_class, args.size, args.size, args.seed,
                     args.noise)
    log.info("wrote %d synthetic images to %s", len(m), args.out)
    print(Path(args.out) / "manifest.csv")
    return EXIT_OK


# --- parser --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="camid", description="Camera-model identification from "
                                "wavelet and noise-residual LBP features.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extract", help="extract features for every image of a manifest")
    e.add_argument("manifest", nargs="?")
    e.add_argument("--features", choices=FEATURE_SETS, default="lbp")
    e.add_argument("--tau", type=_tau, default=AUTO, help="denoising threshold or 'auto'")
    e.add_argument("--augment", action="store_true", help="four quadrant crops per image")
    e.add_argument("--include-original", action="store_true",
                   help="keep the full image as a fifth sample when augmenting")
    e.add_argument("--gray-levels", type=int, default=16)
    e.add_argument("--offset", type=_offset, default=(0, 1))
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out")
    e.add_argument("--describe-features", action="store_true",
                   help="print the feature slot map and exit")
    e.set_defaults(func=cmd_extract)

    t = sub.add_parser("train", help="train a classifier on feature caches")
    t.add_argument("caches", nargs="+")
    t.add_argument("--model", choices=("logreg", "knn", "mlp"), default="logreg")
    t.add_argument("--lambda", dest="lam", type=float)
    t.add_argument("--lambda-grid", type=_float_list, help="comma list or 'paper'")
    t.add_argument("--k", type=_int_list, help="neighbor count (comma list = grid)")
    t.add_argument("--hidden", type=int)
    t.add_argument("--pca", help="components (integer) or relative tolerance (< 1)")
    t.add_argument("--pca-absolute", action="store_true",
                   help="apply the PCA tolerance to the raw eigenvalue tail")
    t.add_argument("--no-center", action="store_true", help="PCA without mean removal")
    t.add_argument("--no-intercept", action="store_true")
    t.add_argument("--split", type=float, default=0.8)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--learning-rate", type=float, default=1.0)
    t.add_argument("--max-iters", type=int, default=2000)
    t.add_argument("--tol", type=float, default=1e-6)
    t.add_argument("--grad-check-every", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--report-dir")
    t.add_argument("--no-figures", action="store_true")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("predict", help="write fname,camera predictions")
    r.add_argument("model")
    r.add_argument("cache")
    r.add_argument("--out", required=True)
    r.add_argument("--proba", action="store_true")
    r.set_defaults(func=cmd_predict)

    v = sub.add_parser("eval", help="confusion matrix of predictions against ground truth")
    v.add_argument("predictions")
    v.add_argument("truth", help="labeled manifest or feature cache")
    v.add_argument("--out-prefix")
    v.add_argument("--no-figures", action="store_true")
    v.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="write a synthetic labeled image set")
    s.add_argument("--out", required=True)
    s.add_argument("--classes", type=int, default=4)
    s.add_argument("--per-class", type=int, default=60)
    s.add_argument("--size", type=int, default=96)
    s.add_argument("--noise", type=float, default=4.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except CamidError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
