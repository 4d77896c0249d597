"""End-to-end pipeline: judge -> split -> corrector -> score -> fuse -> evaluate.

One corrector is trained per run and reused across every requested method;
each method gets its own grid-searched fusion weight. All artifacts are
written atomically, contain no timestamps, and use sorted JSON keys, so a
rerun with unchanged inputs and seed is byte-identical.

Artifacts in out_dir:

    judgments.jsonl            correctness labels
    split.json                 dev/test ids + seed
    corrector.model            trained corrector (JSON container)
    corrector_scores.jsonl     corrector probabilities for all samples
    scores_<method>.jsonl      raw vanilla scores
    fused_<method>.jsonl       fused scores
    fusion_<method>.json       w*, curve, stable range, normalization stats
    eval_<method>.json         test metrics with vanilla deltas
    calibration_<method>.csv   plot-ready calibration table
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass

from . import corrector as corrector_mod
from . import dataio
from .errors import DatasetError, MissingInputError
from .estimators import SarConfig, SimilarityOracle, score_records
from .fusion import AUTO, FusionConfig, fuse, grid_search_w, min_max_normalize, stable_range
from .judge import JudgeConfig, build_correction_dataset, judge_all
from .metrics import auroc, evaluate
from .types import ESTIMATOR_METHODS, Method, ScoreSet, split_dataset

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    """Everything run_pipeline needs; JSON-loadable with flag overrides."""

    samples: str = "samples.jsonl"
    generations: str = "generations.jsonl"
    out_dir: str = "out"
    similarities: str | None = None
    methods: tuple[str, ...] = ("pe",)
    seed: int = 42
    dev_fraction: float = 0.5
    rouge_threshold: float = 0.7
    use_llm_judge: bool = True
    equivalence_threshold: float = 0.7
    sar_temperature: float = 0.001
    sar_length_normalized: bool = False
    w: float | str = AUTO
    grid_step: float = 0.001
    stable_tolerance: float = 0.01
    bins: int = 10
    lambda_01: float = 1.0
    lambda_10: float = 1.0
    tau: float | str = "auto"
    corrector_source: str = "train"  # or "external"
    train_on: str = "dev"  # or "all"
    epochs: int = 10
    learning_rate: float = 0.1
    batch_size: int = 32
    n_buckets: int = 2**18
    hash_seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if isinstance(self.methods, list):
            self.methods = tuple(self.methods)
        if self.corrector_source not in ("train", "external"):
            raise DatasetError(
                "corrector_source must be 'train' or 'external', got %r"
                % self.corrector_source
            )
        if self.train_on not in ("dev", "all"):
            raise DatasetError("train_on must be 'dev' or 'all', got %r" % self.train_on)
        for name in self.methods:
            method = _parse_method(name)
            if method not in ESTIMATOR_METHODS:
                raise DatasetError(
                    "method %s is not a vanilla estimator" % method.value
                )


def _parse_method(name: str) -> Method:
    try:
        return Method(name)
    except ValueError:
        raise DatasetError("unknown method: %r" % name) from None


def load_config(path: str, overrides: dict | None = None) -> PipelineConfig:
    """Read a JSON config file and apply flag overrides (flags win)."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise MissingInputError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise DatasetError("%s: invalid config JSON: %s" % (path, exc)) from exc
    if not isinstance(payload, dict):
        raise DatasetError("%s: config must be a JSON object" % path)
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(payload) - known
    if unknown:
        raise DatasetError("%s: unknown config keys: %s" % (path, ", ".join(sorted(unknown))))
    if overrides:
        payload.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**payload)


def _score_file_suffix(method: Method) -> str:
    return method.value


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute every stage; returns a summary of artifacts and key numbers."""
    samples = dataio.load_samples(config.samples)
    records = dataio.load_records(config.generations)
    violations = dataio.validate_dataset(samples, records)
    if violations:
        raise DatasetError(
            "dataset validation failed (%d violations): %s"
            % (len(violations), "; ".join(violations[:5]))
        )

    os.makedirs(config.out_dir, exist_ok=True)
    out = lambda name: os.path.join(config.out_dir, name)  # noqa: E731

    judge_config = JudgeConfig(
        rouge_threshold=config.rouge_threshold, use_llm=config.use_llm_judge
    )
    judgments = judge_all(samples, records, judge_config)
    dataio.write_judgments(judgments, out("judgments.jsonl"))
    labels = {j.id: j.corrector_target for j in judgments}

    split = split_dataset([s.id for s in samples], config.seed, config.dev_fraction)
    dataio.write_split(split, out("split.json"))

    if config.corrector_source == "external":
        corrector_scores = corrector_mod.scores_from_external(records)
    else:
        correction_dataset = build_correction_dataset(samples, judgments)
        if config.train_on == "dev":
            correction_dataset = [
                row for row in correction_dataset if row[0] in split.dev_ids
            ]
        extractor = corrector_mod.FeatureExtractor(
            n_buckets=config.n_buckets, hash_seed=config.hash_seed
        )
        model = corrector_mod.train(
            correction_dataset,
            extractor,
            seed=config.seed,
            epochs=config.epochs,
            learning_rate=config.learning_rate,
            batch_size=config.batch_size,
        )
        corrector_mod.save_model(model, out("corrector.model"))
        corrector_scores = corrector_mod.score_samples(model, samples)
    dataio.write_scores(corrector_scores, out("corrector_scores.jsonl"))

    oracle = SimilarityOracle()
    if config.similarities is not None:
        oracle = SimilarityOracle(
            kind="precomputed", entries=dataio.load_similarities(config.similarities)
        )
    sar_config = SarConfig(
        sentence_temperature=config.sar_temperature,
        use_length_normalized_probs=config.sar_length_normalized,
    )
    dev_labels = {i: labels[i] for i in split.dev_ids}

    summary: dict = {"out_dir": config.out_dir, "methods": {}}
    for name in config.methods:
        method = _parse_method(name)
        suffix = _score_file_suffix(method)
        raw = score_records(
            records,
            method,
            oracle=oracle,
            config=sar_config,
            equivalence_threshold=config.equivalence_threshold,
            jobs=config.jobs,
        )
        dataio.write_scores(raw, out("scores_%s.jsonl" % suffix))
        normalized = min_max_normalize(raw)

        fusion_config = FusionConfig(w=config.w, grid_step=config.grid_step)
        if fusion_config.w == AUTO:
            w_star, curve = grid_search_w(
                normalized, corrector_scores, dev_labels, fusion_config
            )
        else:
            w_star = float(fusion_config.w)
            dev_fused = fuse(
                ScoreSet(method, {i: normalized.scores[i] for i in dev_labels}, True),
                ScoreSet(Method.CORRECTOR, {i: corrector_scores.scores[i] for i in dev_labels}, True),
                w_star,
            )
            curve = [(w_star, auroc(dev_fused.scores, dev_labels))]
        lo, hi = stable_range(curve, w_star, config.stable_tolerance)
        fused = fuse(normalized, corrector_scores, w_star)
        dataio.write_scores(fused, out("fused_%s.jsonl" % suffix))
        dataio.write_json(
            {
                "method": method.value,
                "w_star": w_star,
                "objective": "auroc",
                "curve": [[w, value] for w, value in curve],
                "stable_range": [lo, hi],
                "normalization": {
                    "min": min(raw.scores.values()),
                    "max": max(raw.scores.values()),
                },
            },
            out("fusion_%s.json" % suffix),
        )

        report = evaluate(
            fused.scores,
            labels,
            split,
            method=method.value,
            tau=config.tau,
            bins=config.bins,
            lambda_01=config.lambda_01,
            lambda_10=config.lambda_10,
            vanilla_scores=normalized.scores,
        )
        dataio.write_json(report, out("eval_%s.json" % suffix))
        from .metrics import CalibrationBin, calibration_csv_rows

        table = [
            CalibrationBin(b["lo"], b["hi"], b["count"], b["conf"], b["acc"])
            for b in report["ece"]["bins"]
        ]
        dataio.atomic_write_text(
            out("calibration_%s.csv" % suffix), "\n".join(calibration_csv_rows(table)) + "\n"
        )

        summary["methods"][method.value] = {
            "w_star": w_star,
            "stable_range": [lo, hi],
            "auroc": report["auroc"],
            "vanilla_auroc": report["deltas"]["vanilla"]["auroc"],
            "improvement": report["deltas"]["improvement"]["auroc"],
        }
        logger.info(
            "%s: w*=%.3f test AUROC %.4f (vanilla %.4f)",
            method.value,
            w_star,
            report["auroc"],
            report["deltas"]["vanilla"]["auroc"],
        )
    return summary
