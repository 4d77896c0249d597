"""Evaluation metrics: AUROC, F1, calibration (ECE), and decision risk.

Label convention everywhere: 1 = unreliable (the positive class), 0 =
reliable. Uncertainty scores should rank unreliable samples higher. The
thresholded decision is score > tau => predict unreliable.

Calibration follows the complement convention: confidence = 1 - uncertainty
(scores must already be in [0,1]) and accuracy of a bin is its fraction of
reliable samples, so a well-calibrated scorer has conf ~ acc in every bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError, MetricUndefinedError
from .types import DatasetSplit


@dataclass(frozen=True)
class DecisionCosts:
    """Asymmetric misclassification costs around threshold tau.

    lambda_01 is charged when a reliable sample is flagged unreliable
    (false alarm); lambda_10 when an unreliable one slips through.
    """

    lambda_01: float = 1.0
    lambda_10: float = 1.0
    tau: float = 0.5

    def __post_init__(self) -> None:
        if self.lambda_01 < 0 or self.lambda_10 < 0:
            raise ValueError("decision costs must be >= 0")


@dataclass(frozen=True)
class CalibrationBin:
    lo: float
    hi: float
    count: int
    conf: float
    acc: float


def _aligned(scores: dict[str, float], labels: dict[str, int]):
    missing = sorted(i for i in labels if i not in scores)
    if missing:
        raise DatasetError("ids missing from scores: %s" % ", ".join(missing[:10]))
    ids = sorted(labels)
    y = np.array([labels[i] for i in ids], dtype=np.int64)
    if not np.isin(y, (0, 1)).all():
        raise DatasetError("labels must be 0 or 1")
    s = np.array([scores[i] for i in ids], dtype=np.float64)
    if not np.isfinite(s).all():
        raise DatasetError("non-finite score in evaluation input")
    return s, y


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    n = len(values)
    sorted_values = values[order]
    while i < n:
        j = i
        while j + 1 < n and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(scores: dict[str, float], labels: dict[str, int]) -> float:
    """P(random unreliable sample outranks random reliable one), ties = 1/2.

    Computed with the Mann-Whitney rank statistic, so heavy ties are exact.
    """
    s, y = _aligned(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("AUROC undefined on one class")
    ranks = _average_ranks(s)
    rank_sum = float(ranks[y == 1].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def f1(scores: dict[str, float], labels: dict[str, int], tau: float) -> tuple[float, float, float]:
    """(precision, recall, f1) of the score > tau unreliable-detector."""
    if not math.isfinite(tau):
        raise DatasetError("tau must be finite, got %r" % tau)
    s, y = _aligned(scores, labels)
    predicted = s > tau
    tp = int(np.sum(predicted & (y == 1)))
    fp = int(np.sum(predicted & (y == 0)))
    fn = int(np.sum(~predicted & (y == 1)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2.0 * precision * recall / (precision + recall)


def select_threshold(scores: dict[str, float], labels_dev: dict[str, int]) -> float:
    """The tau maximizing dev F1; candidates are midpoints between adjacent
    sorted unique scores plus sentinels below the minimum and above the
    maximum. Ties go to the smallest tau."""
    s, y = _aligned(scores, labels_dev)
    if len(set(y.tolist())) < 2:
        raise MetricUndefinedError("threshold selection needs both classes in dev")
    unique = sorted(set(s.tolist()))
    candidates = [unique[0] - 1.0]
    for a, b in zip(unique, unique[1:]):
        candidates.append((a + b) / 2.0)
    candidates.append(unique[-1] + 1.0)
    best_tau = candidates[0]
    best_f1 = -1.0
    for tau in candidates:
        _, _, value = f1(scores, labels_dev, tau)
        if value > best_f1:
            best_f1 = value
            best_tau = tau
    return best_tau


def _bin_index(confidence: float, m: int) -> int:
    """Equal-width bins over [0,1], right-closed except the first includes 0."""
    if confidence <= 0.0:
        return 0
    return min(int(math.ceil(confidence * m)) - 1, m - 1)


def ece(
    uncertainty_scores: dict[str, float], labels: dict[str, int], m: int = 10
) -> tuple[float, list[CalibrationBin]]:
    """Expected calibration error plus the per-bin table behind it.

    confidence = 1 - uncertainty; bin accuracy = fraction reliable (label 0);
    ECE = sum over bins of (count/n) * |acc - conf|. Empty bins contribute 0
    and appear in the table with count 0.
    """
    if m < 1:
        raise DatasetError("ECE needs at least one bin")
    s, y = _aligned(uncertainty_scores, labels)
    if len(s) == 0:
        raise DatasetError("ECE needs at least one sample")
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise DatasetError("ECE needs scores in [0,1]; normalize first")
    confidences = 1.0 - s
    accuracies = (y == 0).astype(np.float64)
    counts = [0] * m
    conf_sums = [0.0] * m
    acc_sums = [0.0] * m
    for c, a in zip(confidences.tolist(), accuracies.tolist()):
        b = _bin_index(c, m)
        counts[b] += 1
        conf_sums[b] += c
        acc_sums[b] += a
    n = len(s)
    bins = []
    total = 0.0
    for b in range(m):
        lo = b / m
        hi = (b + 1) / m
        if counts[b] == 0:
            bins.append(CalibrationBin(lo=lo, hi=hi, count=0, conf=0.0, acc=0.0))
            continue
        conf = conf_sums[b] / counts[b]
        acc = acc_sums[b] / counts[b]
        total += counts[b] / n * abs(acc - conf)
        bins.append(CalibrationBin(lo=lo, hi=hi, count=counts[b], conf=conf, acc=acc))
    return total, bins


def decision_risk(scores: dict[str, float], labels: dict[str, int], costs: DecisionCosts) -> float:
    """Mean cost of thresholding at costs.tau under the lambda costs."""
    s, y = _aligned(scores, labels)
    if len(s) == 0:
        raise DatasetError("decision risk needs at least one sample")
    predicted = s > costs.tau
    false_alarms = int(np.sum(predicted & (y == 0)))
    misses = int(np.sum(~predicted & (y == 1)))
    return (false_alarms * costs.lambda_01 + misses * costs.lambda_10) / len(s)


def _test_metrics(
    scores: dict[str, float],
    labels: dict[str, int],
    split: DatasetSplit,
    tau,
    bins: int,
    lambda_01: float,
    lambda_10: float,
) -> dict:
    dev_labels = {i: labels[i] for i in split.dev_ids}
    test_labels = {i: labels[i] for i in split.test_ids}
    if tau == "auto":
        tau = select_threshold(scores, dev_labels)
    tau = float(tau)
    precision, recall, f1_value = f1(scores, test_labels, tau)
    ece_value, table = ece(scores, test_labels, bins)
    risk = decision_risk(scores, test_labels, DecisionCosts(lambda_01, lambda_10, tau))
    return {
        "auroc": auroc(scores, test_labels),
        "f1": {"precision": precision, "recall": recall, "f1": f1_value, "tau": tau},
        "ece": {
            "value": ece_value,
            "bins": [
                {"lo": b.lo, "hi": b.hi, "count": b.count, "conf": b.conf, "acc": b.acc}
                for b in table
            ],
        },
        "risk": {
            "tau": tau,
            "lambda_01": lambda_01,
            "lambda_10": lambda_10,
            "value": risk,
        },
    }


def evaluate(
    scores: dict[str, float],
    labels: dict[str, int],
    split: DatasetSplit,
    method: str,
    tau="auto",
    bins: int = 10,
    lambda_01: float = 1.0,
    lambda_10: float = 1.0,
    vanilla_scores: dict[str, float] | None = None,
) -> dict:
    """Full test-split report; tau comes from the dev split when "auto".

    With vanilla_scores given, the report also carries the vanilla metrics
    (with its own auto-selected tau) and fused-minus-vanilla deltas, mirroring
    a vanilla / corrected / improvement presentation. Positive auroc/f1
    deltas and negative ece/risk deltas mean the correction helped.
    """
    missing = sorted(i for i in split.all_ids if i not in labels)
    if missing:
        raise DatasetError("split ids missing from labels: %s" % ", ".join(missing[:10]))
    report = {
        "method": method,
        "n_dev": len(split.dev_ids),
        "n_test": len(split.test_ids),
    }
    report.update(_test_metrics(scores, labels, split, tau, bins, lambda_01, lambda_10))
    if vanilla_scores is not None:
        vanilla = _test_metrics(vanilla_scores, labels, split, tau, bins, lambda_01, lambda_10)
        report["deltas"] = {
            "vanilla": {
                "auroc": vanilla["auroc"],
                "f1": vanilla["f1"]["f1"],
                "ece": vanilla["ece"]["value"],
                "risk": vanilla["risk"]["value"],
                "tau": vanilla["f1"]["tau"],
            },
            "improvement": {
                "auroc": report["auroc"] - vanilla["auroc"],
                "f1": report["f1"]["f1"] - vanilla["f1"]["f1"],
                "ece": report["ece"]["value"] - vanilla["ece"]["value"],
                "risk": report["risk"]["value"] - vanilla["risk"]["value"],
            },
        }
    return report


def calibration_csv_rows(table: list[CalibrationBin]) -> list[str]:
    """Plot-ready CSV lines: bin_lo,bin_hi,count,confidence,accuracy."""
    rows = ["bin_lo,bin_hi,count,confidence,accuracy"]
    for b in table:
        rows.append("%g,%g,%d,%.10g,%.10g" % (b.lo, b.hi, b.count, b.conf, b.acc))
    return rows
