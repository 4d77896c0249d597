"""Command-line interface.

Subcommands mirror the pipeline stages and compose: running them manually in
order produces the same artifacts as `cue pipeline`. Exit codes are stable:

    0  success
    2  validation failure (bad data, bad arguments at the data level)
    3  missing or unreadable input file
    4  metric undefined on the given data (e.g. single-class AUROC)
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib.metadata import PackageNotFoundError, version as package_version

from . import corrector as corrector_mod
from . import dataio
from .errors import DatasetError, MetricUndefinedError, MissingInputError
from .estimators import SarConfig, SimilarityOracle, score_records
from .fusion import AUTO, FusionConfig, fuse, grid_search_w, min_max_normalize, stable_range
from .judge import JudgeConfig, build_correction_dataset, judge_all
from .metrics import CalibrationBin, calibration_csv_rows, evaluate
from .pipeline import PipelineConfig, load_config, run_pipeline
from .types import Method, split_dataset


def _version() -> str:
    try:
        return package_version("cue")
    except PackageNotFoundError:
        return "0.0.0+unpackaged"


def _load_labels(judgments_path: str) -> dict[str, int]:
    return {j.id: j.corrector_target for j in dataio.load_judgments(judgments_path)}


def _parse_w(value: str):
    if value == AUTO:
        return AUTO
    try:
        return float(value)
    except ValueError:
        raise DatasetError("--w must be 'auto' or a number in [0,1], got %r" % value) from None


def _parse_tau(value: str):
    if value == "auto":
        return "auto"
    try:
        return float(value)
    except ValueError:
        raise DatasetError("--tau must be 'auto' or a number, got %r" % value) from None


def cmd_judge(args) -> int:
    samples = dataio.load_samples(args.samples)
    records = dataio.load_records(args.generations)
    violations = dataio.validate_dataset(samples, records)
    if violations:
        raise DatasetError(
            "dataset validation failed (%d violations): %s"
            % (len(violations), "; ".join(violations[:5]))
        )
    config = JudgeConfig(rouge_threshold=args.threshold, use_llm=not args.no_llm)
    judgments = judge_all(samples, records, config)
    dataio.write_judgments(judgments, args.out)
    correct = sum(1 for j in judgments if j.correct)
    print("judged %d samples: %d correct, %d unreliable" % (len(judgments), correct, len(judgments) - correct))
    return 0


def cmd_split(args) -> int:
    samples = dataio.load_samples(args.samples)
    split = split_dataset([s.id for s in samples], args.seed, args.dev_fraction)
    dataio.write_split(split, args.out)
    print("split %d ids into %d dev / %d test (seed %d)" % (len(split.all_ids), len(split.dev_ids), len(split.test_ids), args.seed))
    return 0


def cmd_score(args) -> int:
    records = dataio.load_records(args.generations)
    method = Method(args.method)
    oracle = SimilarityOracle()
    if args.similarities:
        oracle = SimilarityOracle(
            kind="precomputed", entries=dataio.load_similarities(args.similarities)
        )
    config = SarConfig(
        sentence_temperature=args.sar_temp,
        use_length_normalized_probs=args.sar_length_normalized,
    )
    scores = score_records(
        records,
        method,
        oracle=oracle,
        config=config,
        equivalence_threshold=args.threshold,
        jobs=args.jobs,
    )
    dataio.write_scores(scores, args.out)
    print("scored %d records with %s" % (len(scores.scores), method.value))
    return 0


def cmd_train_corrector(args) -> int:
    samples = dataio.load_samples(args.samples)
    judgments = dataio.load_judgments(args.judgments)
    dataset = build_correction_dataset(samples, judgments)
    train_on = args.train_on
    if train_on is None:
        train_on = "dev" if args.split else "all"
    if train_on == "dev":
        if not args.split:
            raise DatasetError("--train-on dev requires --split")
        split = dataio.load_split(args.split)
        dataset = [row for row in dataset if row[0] in split.dev_ids]
    extractor = corrector_mod.FeatureExtractor(
        n_buckets=args.buckets, hash_seed=args.hash_seed
    )
    model = corrector_mod.train(
        dataset,
        extractor,
        seed=args.seed,
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch,
    )
    corrector_mod.save_model(model, args.out)
    print(
        "trained corrector on %d examples (final mean loss %.6f)"
        % (model.training_meta["n_examples"], model.training_meta["final_loss"])
    )
    return 0


def cmd_corrector_score(args) -> int:
    if args.external:
        if not args.generations:
            raise DatasetError("--external requires --generations")
        records = dataio.load_records(args.generations)
        scores = corrector_mod.scores_from_external(records)
    else:
        if not args.model or not args.samples:
            raise DatasetError("corrector-score needs --model and --samples (or --external)")
        model = corrector_mod.load_model(args.model)
        samples = dataio.load_samples(args.samples)
        scores = corrector_mod.score_samples(model, samples)
    dataio.write_scores(scores, args.out)
    print("wrote %d corrector scores" % len(scores.scores))
    return 0


def cmd_fuse(args) -> int:
    raw = dataio.load_scores(args.scores)
    corrector_scores = dataio.load_scores(args.corrector)
    labels = _load_labels(args.judgments)
    split = dataio.load_split(args.split)
    normalized = min_max_normalize(raw)
    missing = sorted(i for i in split.all_ids if i not in labels)
    if missing:
        raise DatasetError("split ids missing from judgments: %s" % ", ".join(missing[:10]))
    dev_labels = {i: labels[i] for i in split.dev_ids}

    config = FusionConfig(w=_parse_w(args.w), grid_step=args.grid_step)
    if config.w == AUTO:
        w_star, curve = grid_search_w(normalized, corrector_scores, dev_labels, config)
    else:
        from .metrics import auroc
        from .types import ScoreSet

        w_star = float(config.w)
        dev_fused = fuse(
            ScoreSet(normalized.method, {i: normalized.scores[i] for i in dev_labels}, True),
            ScoreSet(
                corrector_scores.method,
                {i: corrector_scores.scores[i] for i in dev_labels},
                True,
            ),
            w_star,
        )
        curve = [(w_star, auroc(dev_fused.scores, dev_labels))]
    lo, hi = stable_range(curve, w_star, args.stable_tolerance)
    fused = fuse(normalized, corrector_scores, w_star)
    dataio.write_scores(fused, args.out)
    dataio.write_json(
        {
            "method": raw.method.value,
            "w_star": w_star,
            "objective": "auroc",
            "curve": [[w, value] for w, value in curve],
            "stable_range": [lo, hi],
            "normalization": {"min": min(raw.scores.values()), "max": max(raw.scores.values())},
        },
        args.report,
    )
    print("fused with w*=%.3f (stable range %.3f-%.3f)" % (w_star, lo, hi))
    return 0


def cmd_evaluate(args) -> int:
    score_set = dataio.load_scores(args.scores)
    labels = _load_labels(args.judgments)
    split = dataio.load_split(args.split)
    # Raw vanilla scores are always min-max normalized (ECE needs [0,1] and
    # the pipeline evaluates the normalized form); fused and corrector scores
    # are produced in [0,1] and pass through untouched.
    method_label = score_set.method.value
    if score_set.method not in (Method.FUSED, Method.CORRECTOR):
        score_set = min_max_normalize(score_set)
    vanilla_scores = None
    if args.vanilla:
        vanilla_set = dataio.load_scores(args.vanilla)
        if vanilla_set.method not in (Method.FUSED, Method.CORRECTOR):
            vanilla_set = min_max_normalize(vanilla_set)
        vanilla_scores = vanilla_set.scores
        if score_set.method is Method.FUSED:
            method_label = vanilla_set.method.value
    try:
        lambda_01, lambda_10 = (float(part) for part in args.costs.split(","))
    except ValueError:
        raise DatasetError("--costs must be 'lambda_01,lambda_10', got %r" % args.costs) from None
    report = evaluate(
        score_set.scores,
        labels,
        split,
        method=method_label,
        tau=_parse_tau(args.tau),
        bins=args.bins,
        lambda_01=lambda_01,
        lambda_10=lambda_10,
        vanilla_scores=vanilla_scores,
    )
    dataio.write_json(report, args.out)
    if args.calibration_csv:
        table = [
            CalibrationBin(b["lo"], b["hi"], b["count"], b["conf"], b["acc"])
            for b in report["ece"]["bins"]
        ]
        dataio.atomic_write_text(
            args.calibration_csv, "\n".join(calibration_csv_rows(table)) + "\n"
        )
    print(
        "%s: test AUROC %.4f, F1 %.4f, ECE %.4f, risk %.4f"
        % (
            report["method"],
            report["auroc"],
            report["f1"]["f1"],
            report["ece"]["value"],
            report["risk"]["value"],
        )
    )
    return 0


def cmd_pipeline(args) -> int:
    overrides = {
        "samples": args.samples,
        "generations": args.generations,
        "similarities": args.similarities,
        "out_dir": args.out_dir,
        "seed": args.seed,
        "jobs": args.jobs,
        "w": _parse_w(args.w) if args.w is not None else None,
        "train_on": args.train_on,
    }
    if args.methods is not None:
        overrides["methods"] = tuple(part for part in args.methods.split(",") if part)
    if args.config:
        config = load_config(args.config, overrides)
    else:
        fields = {k: v for k, v in overrides.items() if v is not None}
        config = PipelineConfig(**fields)
    summary = run_pipeline(config)
    for method, numbers in summary["methods"].items():
        print(
            "%s: w*=%.3f test AUROC %.4f (vanilla %.4f, improvement %+.4f)"
            % (
                method,
                numbers["w_star"],
                numbers["auroc"],
                numbers["vanilla_auroc"],
                numbers["improvement"],
            )
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cue",
        description="Judge answers, train a corrector, fuse it with uncertainty scores, evaluate.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + _version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("judge", help="label each primary answer correct/unreliable")
    p.add_argument("--samples", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.7, help="ROUGE-L rule threshold")
    p.add_argument("--no-llm", action="store_true", help="ignore llm_judge fields")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("split", help="deterministic dev/test split")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dev-fraction", type=float, default=0.5)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("score", help="compute a vanilla uncertainty score")
    p.add_argument(
        "--method",
        required=True,
        choices=[m.value for m in Method if m not in (Method.CORRECTOR, Method.FUSED)],
    )
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--similarities", help="precomputed similarities.jsonl sidecar")
    p.add_argument("--threshold", type=float, default=0.7, help="SE clustering threshold")
    p.add_argument("--sar-temp", type=float, default=0.001, help="SAR sentence temperature")
    p.add_argument("--sar-length-normalized", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train-corrector", help="train the question->unreliability classifier")
    p.add_argument("--judgments", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", help="split.json (train on its dev ids)")
    p.add_argument("--train-on", choices=["dev", "all"], default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--buckets", type=int, default=2**18)
    p.add_argument("--hash-seed", type=int, default=0)
    p.set_defaults(func=cmd_train_corrector)

    p = sub.add_parser("corrector-score", help="score questions with a trained corrector")
    p.add_argument("--model")
    p.add_argument("--samples")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--external",
        action="store_true",
        help="pass through external_corrector_prob from --generations instead",
    )
    p.add_argument("--generations")
    p.set_defaults(func=cmd_corrector_score)

    p = sub.add_parser("fuse", help="fuse normalized vanilla scores with corrector scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--corrector", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--w", default=AUTO, help="fusion weight in [0,1], or 'auto' to grid-search")
    p.add_argument("--grid-step", type=float, default=0.001)
    p.add_argument("--stable-tolerance", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="AUROC/F1/ECE/decision-risk report on the test split")
    p.add_argument("--scores", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--vanilla", help="vanilla scores for a delta section")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--tau", default="auto")
    p.add_argument("--costs", default="1,1", help="lambda_01,lambda_10")
    p.add_argument("--out", required=True)
    p.add_argument("--calibration-csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run every stage from one config")
    p.add_argument("--config", help="JSON config; flags below override it")
    p.add_argument("--samples")
    p.add_argument("--generations")
    p.add_argument("--similarities")
    p.add_argument("--out-dir")
    p.add_argument("--methods", help="comma-separated method list")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--w")
    p.add_argument("--train-on", choices=["dev", "all"])
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingInputError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except MetricUndefinedError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except DatasetError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
