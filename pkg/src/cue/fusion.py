"""Score normalization and corrector fusion.

The fused uncertainty of a sample is a convex combination of its min-max
normalized vanilla score and its corrector probability:

    fused = w * normalized + (1 - w) * corrector

The weight is either fixed or grid-searched on the development split at
grid_step resolution, maximizing AUROC against the unreliable-class labels;
ties go to the smallest w (maximal corrector contribution). stable_range
reports how far w can move from w* before dev AUROC drops by more than a
tolerance (default 1 point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DatasetError
from .metrics import auroc
from .types import Method, ScoreSet

AUTO = "auto"


@dataclass(frozen=True)
class FusionConfig:
    """Fusion weight (a float in [0,1] or "auto") and grid-search knobs."""

    w: float | str = AUTO
    grid_step: float = 0.001
    objective: str = "auroc"

    def __post_init__(self) -> None:
        if self.objective != "auroc":
            raise ValueError("unsupported fusion objective: %r" % self.objective)
        if isinstance(self.w, str):
            if self.w != AUTO:
                raise ValueError("w must be a number in [0,1] or %r, got %r" % (AUTO, self.w))
            if not 0.0 < self.grid_step <= 0.5:
                raise ValueError("grid_step must be in (0, 0.5], got %g" % self.grid_step)
        elif not 0.0 <= self.w <= 1.0:
            raise ValueError("w must be in [0,1], got %g" % self.w)


def min_max_normalize(score_set: ScoreSet) -> ScoreSet:
    """Map scores affinely onto [0,1]; a constant set maps to all 0.5."""
    if not score_set.scores:
        raise DatasetError("cannot normalize an empty score set")
    for sample_id, value in score_set.scores.items():
        if not math.isfinite(value):
            raise DatasetError("non-finite score for id: %s" % sample_id)
    lo = min(score_set.scores.values())
    hi = max(score_set.scores.values())
    if hi == lo:
        normalized = {i: 0.5 for i in score_set.scores}
    else:
        span = hi - lo
        normalized = {i: (v - lo) / span for i, v in score_set.scores.items()}
    return ScoreSet(method=score_set.method, scores=normalized, normalized=True)


def _check_unit_interval(score_set: ScoreSet, name: str) -> None:
    for sample_id, value in score_set.scores.items():
        if not 0.0 <= value <= 1.0:
            raise DatasetError(
                "%s score %g outside [0,1] for id: %s (normalize first)"
                % (name, value, sample_id)
            )


def fuse(normalized_scores: ScoreSet, corrector_scores: ScoreSet, w: float) -> ScoreSet:
    """Elementwise w * normalized + (1-w) * corrector over matching ids."""
    if not 0.0 <= w <= 1.0:
        raise DatasetError("fusion weight must be in [0,1], got %g" % w)
    left = set(normalized_scores.scores)
    right = set(corrector_scores.scores)
    if left != right:
        diff = sorted(left ^ right)
        raise DatasetError(
            "score sets cover different ids (symmetric difference: %s)"
            % ", ".join(diff[:10])
        )
    _check_unit_interval(normalized_scores, "normalized")
    _check_unit_interval(corrector_scores, "corrector")
    if w == 1.0:
        fused = dict(normalized_scores.scores)
    elif w == 0.0:
        fused = dict(corrector_scores.scores)
    else:
        fused = {
            i: w * normalized_scores.scores[i] + (1.0 - w) * corrector_scores.scores[i]
            for i in normalized_scores.scores
        }
    return ScoreSet(method=Method.FUSED, scores=fused, normalized=True)


def grid_points(step: float) -> list[float]:
    """The grid {0, step, 2*step, ..., 1}; 1.0 is always included."""
    points = []
    k = 0
    while True:
        w = k * step
        if w >= 1.0 - 1e-12:
            break
        points.append(w)
        k += 1
    points.append(1.0)
    return points


def grid_search_w(
    normalized_scores: ScoreSet,
    corrector_scores: ScoreSet,
    dev_labels: dict[str, int],
    config: FusionConfig = FusionConfig(),
) -> tuple[float, list[tuple[float, float]]]:
    """Maximize dev AUROC of the fused scores over the weight grid.

    Returns (w_star, curve) where curve lists (w, auroc) at every grid point.
    Ties break toward the smallest w. Raises MetricUndefinedError when the
    dev labels contain a single class (AUROC undefined).
    """
    if not dev_labels:
        raise DatasetError("grid search needs non-empty dev labels")
    missing = sorted(
        i
        for i in dev_labels
        if i not in normalized_scores.scores or i not in corrector_scores.scores
    )
    if missing:
        raise DatasetError("dev ids missing from scores: %s" % ", ".join(missing[:10]))
    dev_norm = ScoreSet(
        method=normalized_scores.method,
        scores={i: normalized_scores.scores[i] for i in dev_labels},
        normalized=True,
    )
    dev_cor = ScoreSet(
        method=corrector_scores.method,
        scores={i: corrector_scores.scores[i] for i in dev_labels},
        normalized=True,
    )
    curve: list[tuple[float, float]] = []
    best_w = 0.0
    best_value = -math.inf
    for w in grid_points(config.grid_step):
        fused = fuse(dev_norm, dev_cor, w)
        value = auroc(fused.scores, dev_labels)
        curve.append((w, value))
        if value > best_value:
            best_value = value
            best_w = w
    return best_w, curve


def stable_range(
    curve: list[tuple[float, float]], w_star: float, tolerance: float = 0.01
) -> tuple[float, float]:
    """Maximal contiguous grid interval around w* within the AUROC tolerance."""
    index = None
    for i, (w, _) in enumerate(curve):
        if w == w_star:
            index = i
            break
    if index is None:
        raise DatasetError("w_star %g is not on the curve grid" % w_star)
    floor_value = curve[index][1] - tolerance
    lo = index
    while lo > 0 and curve[lo - 1][1] >= floor_value:
        lo -= 1
    hi = index
    while hi + 1 < len(curve) and curve[hi + 1][1] >= floor_value:
        hi += 1
    return curve[lo][0], curve[hi][0]
