"""Correct uncertainty estimates for LLM answers with a trained corrector.

The package judges target-model answers (ROUGE-L rule OR LLM verdict),
trains a lightweight question classifier on the resulting labels, fuses its
probability with normalized vanilla uncertainty scores through a
grid-searched weight, and evaluates the result (AUROC, F1, ECE, decision
risk). See the README for the file formats and CLI.
"""

from .errors import CueError, DatasetError, MetricUndefinedError, MissingInputError
from .types import (
    DatasetSplit,
    Generation,
    GenerationRecord,
    Judgment,
    Method,
    Sample,
    ScoreSet,
    split_dataset,
)
from .dataio import validate_dataset
from .judge import JudgeConfig, build_correction_dataset, judge_all, judge_sample, rouge_l
from .estimators import SarConfig, SimilarityOracle, score_record, score_records
from .corrector import CorrectorModel, FeatureExtractor, bce_loss, featurize, predict, train
from .fusion import FusionConfig, fuse, grid_search_w, min_max_normalize, stable_range
from .metrics import DecisionCosts, auroc, decision_risk, ece, evaluate, f1, select_threshold
from .pipeline import PipelineConfig, run_pipeline

__all__ = [
    "CueError",
    "DatasetError",
    "MetricUndefinedError",
    "MissingInputError",
    "Sample",
    "Generation",
    "GenerationRecord",
    "Judgment",
    "ScoreSet",
    "DatasetSplit",
    "Method",
    "split_dataset",
    "validate_dataset",
    "JudgeConfig",
    "rouge_l",
    "judge_sample",
    "judge_all",
    "build_correction_dataset",
    "SarConfig",
    "SimilarityOracle",
    "score_record",
    "score_records",
    "FeatureExtractor",
    "CorrectorModel",
    "featurize",
    "bce_loss",
    "train",
    "predict",
    "FusionConfig",
    "min_max_normalize",
    "fuse",
    "grid_search_w",
    "stable_range",
    "DecisionCosts",
    "auroc",
    "f1",
    "select_threshold",
    "ece",
    "decision_risk",
    "evaluate",
    "PipelineConfig",
    "run_pipeline",
]
