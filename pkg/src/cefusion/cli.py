"""Command-line pipeline: synth -> optimize -> fuse / predict -> eval.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O or data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .emotions import BASIC_NAMES, COMPOUND_NAMES
from .exceptions import ConfigurationError, DataError, ParameterError
from .io import (
    load_dataset,
    read_labels,
    read_manifest,
    read_predictions,
    read_weights,
    write_diagnostics,
    write_predictions,
    write_weights,
)
from .metrics import evaluate, normalize_metric
from .rules import RuleConfig, compound_scores, decide, normalize_rule, rule_diagnostics
from .search import SearchConfig, search
from .synthetic import PRESETS, generate_synthetic, preset, profile_from_dict, write_synthetic

logger = logging.getLogger("cefusion")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3
LOG_ENV = "CEFUSION_LOG_LEVEL"


class UsageError(Exception):
    """Bad flags or an impossible request; maps to exit code 2."""


def _pct(x: float) -> str:
    return f"{100 * x:.2f}"


def cmd_synth(args) -> int:
    if args.profile:
        try:
            profile = profile_from_dict(json.loads(Path(args.profile).read_text()))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise DataError(f"{args.profile}: invalid profile: {exc}") from None
        if args.seed is not None:
            profile = profile.with_seed(args.seed)
    else:
        profile = preset(args.preset, seed=args.seed, frame_count=args.frames)
    data = generate_synthetic(profile)
    path = write_synthetic(data, profile, args.out)
    print(f"wrote {profile.frame_count} frames x {len(profile.model_ids)} models -> {path}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    manifest = read_manifest(args.manifest)
    if manifest.labels_for("basic") is None:
        raise UsageError("optimization requires labels (manifest has no basic-emotion labels)")
    ds = load_dataset(manifest, tasks=("basic",))
    y = ds.labels["basic"]
    keep = y >= 0
    cfg = SearchConfig(
        trials=args.trials, seed=0 if args.seed is None else args.seed, alpha=args.alpha,
        metric=args.metric, mode=args.mode, v_strategy=args.v_strategy, n_jobs=args.jobs,
    )
    result = search(cfg, ds.X[keep], y[keep], ds.model_ids)
    provenance = {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "alpha": cfg.alpha,
        "metric": cfg.metric,
        "v_strategy": cfg.v_strategy,
        "validation_dataset_id": manifest.dataset_id,
        "score": result.best_score,
        "trial_index": result.trial_index,
    }
    write_weights(args.out, result.best_params, provenance)
    label = "F1" if cfg.metric == "macro_f1" else "UAR"
    print(f"best {label} = {_pct(result.best_score)} (trial {result.trial_index} of {cfg.trials}, "
          f"mode {cfg.mode}) -> {args.out}")
    return EXIT_OK


def _fused(args):
    manifest = read_manifest(args.manifest)
    params, _ = read_weights(args.weights)
    ds = load_dataset(manifest, tasks=())
    if tuple(params.model_ids) != ds.model_ids:
        index = {m: i for i, m in enumerate(ds.model_ids)}
        missing = [m for m in params.model_ids if m not in index]
        if missing:
            raise DataError(f"{args.weights}: models {missing} are not in {args.manifest}")
        X = ds.X[:, [index[m] for m in params.model_ids]]
    else:
        X = ds.X
    return params, params.fuse(X)


def cmd_fuse(args) -> int:
    _, fused = _fused(args)
    write_predictions(args.out, np.argmax(fused, axis=1), fused, task="basic")
    print(f"wrote {len(fused)} fused frames -> {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    params, _ = read_weights(args.weights)
    rule = normalize_rule(args.rule)
    if rule == "rule1" and params.mode != "dirichlet":
        raise UsageError("rule 1 only applies to Dirichlet-fused weights; "
                         f"{args.weights} is in {params.mode} mode")
    cfg = RuleConfig(rule, args.mask_threshold, all_masked_policy=args.all_masked_policy)
    params, fused = _fused(args)
    scores = compound_scores(fused, cfg, params.mode)
    decisions = decide(scores)
    write_predictions(args.out, decisions, scores, task="compound")
    msg = f"wrote {len(decisions)} frames ({rule}) -> {args.out}"
    if args.diagnostics:
        flags = rule_diagnostics(fused, cfg)
        n = write_diagnostics(args.diagnostics, flags)
        msg += f"; {n} flagged frames -> {args.diagnostics}"
        for name, f in flags.items():
            if f.any():
                logger.warning("%d frames %s", int(f.sum()), name.replace("_", " "))
    print(msg)
    return EXIT_OK


def cmd_eval(args) -> int:
    pred_frame, pred, _ = read_predictions(args.pred, args.task)
    lab_frame, truth = read_labels(args.labels, args.task)
    if lab_frame.size == 0:
        raise UsageError(f"{args.labels} holds no labelled frames")
    index = {int(f): i for i, f in enumerate(pred_frame)}
    missing = [int(f) for f in lab_frame if int(f) not in index]
    if missing:
        raise UsageError(f"length mismatch: {len(missing)} labelled frames have no prediction "
                         f"(first: frame {missing[0]}); {len(pred_frame)} predictions vs {len(lab_frame)} labels")
    matched = pred[[index[int(f)] for f in lab_frame]]
    names = BASIC_NAMES if args.task == "basic" else COMPOUND_NAMES
    report = evaluate(truth, matched, names, absent=args.absent)
    print(report.summary())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cefusion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="root seed (synth preset / search)")
    parser.add_argument("--log-level", default=os.environ.get(LOG_ENV, "WARNING"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", default="three-model-default", choices=sorted(PRESETS))
    src.add_argument("--profile", help="JSON synthetic profile")
    p.add_argument("--frames", type=int, default=None, help="override the preset frame count")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("optimize", help="search fusion weights on a labelled manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=["dirichlet", "hierarchical"], default="dirichlet")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--metric", default="f1", choices=["f1", "macro_f1", "uar"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--v-strategy", choices=["grid_random", "grid_exhaustive"], default="grid_random")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", required=True, help="weights JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("fuse", help="write fused basic-emotion predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("predict", help="write per-frame compound expression predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--rule", default="2", choices=["1", "2", "none", "rule1", "rule2"])
    p.add_argument("--mask-threshold", type=float, default=1.0 / 7.0)
    p.add_argument("--all-masked-policy", choices=["use_unmasked", "first_class"], default="use_unmasked")
    p.add_argument("--out", required=True)
    p.add_argument("--diagnostics", default=None, help="CSV listing all-masked / Neutral-dominant frames")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--task", choices=["basic", "compound"], default="compound")
    p.add_argument("--absent", choices=["zero", "exclude"], default="zero",
                   help="how classes with no support and no predictions enter the mean")
    p.add_argument("--out", default=None, help="optional JSON report")
    p.set_defaults(func=cmd_eval)
    return parser


def _validate(args):
    if getattr(args, "trials", 1) < 1:
        raise UsageError("--trials must be >= 1")
    if getattr(args, "frames", None) is not None and args.frames < 1:
        raise UsageError("--frames must be >= 1")
    if hasattr(args, "metric"):
        args.metric = normalize_metric(args.metric)
    if hasattr(args, "mask_threshold") and not 0 <= args.mask_threshold < 1:
        raise UsageError("--mask-threshold must be in [0, 1)")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
        return args.func(args)
    except (UsageError, ParameterError, ConfigurationError) as exc:
        print(f"cefusion {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"cefusion {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
