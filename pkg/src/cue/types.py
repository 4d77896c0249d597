"""Core record types shared across the pipeline.

All types are immutable after construction, so they can be handed to
concurrent scorers without copying. Field-level invariants that need the
whole dataset (id cross-references, length agreement, value ranges) are
checked by :func:`cue.dataio.validate_dataset` rather than in constructors,
so that a partially broken file can still be loaded and reported on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from random import Random

from .errors import DatasetError


class Method(str, Enum):
    """Score producers, spelled exactly as they appear in scores.jsonl and the CLI."""

    PE = "pe"
    LN_PE = "ln-pe"
    SE = "se"
    SAR_T = "sar-t"
    SAR_S = "sar-s"
    SAR = "sar"
    LS = "ls"
    VC = "vc"
    PTRUE = "ptrue"
    CORRECTOR = "corrector"
    FUSED = "fused"


#: methods that require token logprobs on every generation of a record
LOGIT_METHODS = frozenset(
    {Method.PE, Method.LN_PE, Method.SE, Method.SAR_T, Method.SAR_S, Method.SAR}
)

#: methods computable straight from a generations file (everything but the
#: corrector-derived and fused sets)
ESTIMATOR_METHODS = (
    Method.PE,
    Method.LN_PE,
    Method.SE,
    Method.SAR_T,
    Method.SAR_S,
    Method.SAR,
    Method.LS,
    Method.VC,
    Method.PTRUE,
)


@dataclass(frozen=True)
class Sample:
    """A question with its reference answer."""

    id: str
    question: str
    reference_answer: str


@dataclass(frozen=True)
class Generation:
    """One sampled response with optional per-token logprobs.

    ``tokens`` and ``token_logprobs`` are parallel sequences; both may be
    None for records that only support text-based or pass-through scoring.
    """

    text: str
    tokens: tuple[str, ...] | None = None
    token_logprobs: tuple[float, ...] | None = None

    @property
    def has_logprobs(self) -> bool:
        return self.tokens is not None and self.token_logprobs is not None

    def sequence_logprob(self) -> float:
        """Log-probability of the whole sequence (sum of token logprobs)."""
        if self.token_logprobs is None:
            raise DatasetError("method requires token logprobs")
        return math.fsum(self.token_logprobs)


@dataclass(frozen=True)
class GenerationRecord:
    """All sampled generations for one question, plus pass-through fields."""

    id: str
    generations: tuple[Generation, ...]
    primary_index: int = 0
    verbal_confidence: float | None = None
    p_true: float | None = None
    llm_judge: bool | None = None
    external_corrector_prob: float | None = None

    @property
    def primary(self) -> Generation:
        """The response used for judging."""
        return self.generations[self.primary_index]

    @property
    def has_logprobs(self) -> bool:
        return all(g.has_logprobs for g in self.generations)


@dataclass(frozen=True)
class Judgment:
    """Binary correctness verdict for a record's primary response."""

    id: str
    rouge_l: float
    rule_correct: bool
    llm_correct: bool | None
    correct: bool
    corrector_target: int


@dataclass(frozen=True)
class ScoreSet:
    """Per-sample scores produced by one method."""

    method: Method
    scores: dict[str, float]
    normalized: bool = False


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint dev/test id sets with the seed that produced them."""

    dev_ids: frozenset[str]
    test_ids: frozenset[str]
    seed: int

    def __post_init__(self) -> None:
        overlap = self.dev_ids & self.test_ids
        if overlap:
            raise DatasetError(
                "dev and test sets overlap: %s" % ", ".join(sorted(overlap)[:5])
            )

    @property
    def all_ids(self) -> frozenset[str]:
        return self.dev_ids | self.test_ids


def split_dataset(ids, seed: int, dev_fraction: float = 0.5) -> DatasetSplit:
    """Split ids into dev/test by a seeded Fisher-Yates shuffle of the sorted ids.

    Deterministic and platform-independent: only Random.random() is consumed,
    whose stream is stable across Python versions for a fixed seed. The dev
    set gets round(dev_fraction * n) ids (half-up rounding).
    """
    unique = sorted(set(ids))
    if len(unique) < 2:
        raise DatasetError("split needs >=2 samples")
    if not 0.0 < dev_fraction < 1.0:
        raise DatasetError("dev_fraction must be in (0, 1), got %r" % dev_fraction)

    rng = Random(seed)
    order = list(unique)
    for i in range(len(order) - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        order[i], order[j] = order[j], order[i]

    n_dev = int(math.floor(dev_fraction * len(order) + 0.5))
    return DatasetSplit(
        dev_ids=frozenset(order[:n_dev]),
        test_ids=frozenset(order[n_dev:]),
        seed=seed,
    )
