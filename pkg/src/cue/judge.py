"""Answer judging: min-normalized ROUGE-L plus an optional LLM verdict.

The lexical rule computes the longest common subsequence between the primary
generation and the reference answer over lowercased, punctuation-stripped
word tokens, normalized by the SHORTER length:

    rouge_l(a, b) = LCS(a, b) / min(len(a), len(b))

(This deliberately differs from the usual F-measure ROUGE-L: a short answer
fully contained in a long reference scores 1.0.) A sample is rule-correct
when rouge_l exceeds the threshold (default 0.7, strict), and correct when
either the rule fires or the LLM verdict is true. The corrector trains on
the complement: target = 1 - correct.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DatasetError
from .types import GenerationRecord, Judgment, Sample

_EDGE_PUNCT = ".,;:!?\"'`()[]{}<>"


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip punctuation off token edges."""
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(_EDGE_PUNCT)
        if token:
            tokens.append(token)
    return tokens


def lcs_length(a: list[str], b: list[str]) -> int:
    """Length of the longest common subsequence, O(len(a) * len(b)).

    Rolling single-row DP keeps memory linear in the shorter sequence.
    """
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    row = [0] * (len(b) + 1)
    for x in a:
        prev_diag = 0
        for j, y in enumerate(b, start=1):
            prev_row = row[j]
            if x == y:
                row[j] = prev_diag + 1
            elif row[j - 1] > row[j]:
                row[j] = row[j - 1]
            prev_diag = prev_row
    return row[len(b)]


def rouge_l(candidate: str, reference: str) -> float:
    """LCS length over the shorter token sequence; 0.0 if either is empty."""
    cand = normalize_tokens(candidate)
    ref = normalize_tokens(reference)
    if not cand or not ref:
        return 0.0
    return lcs_length(cand, ref) / min(len(cand), len(ref))


@dataclass(frozen=True)
class JudgeConfig:
    """Controls the lexical rule and how LLM verdicts combine with it."""

    rouge_threshold: float = 0.7
    use_llm: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.rouge_threshold <= 1.0:
            raise ValueError(
                "rouge_threshold must be in (0, 1], got %g" % self.rouge_threshold
            )


def judge_sample(
    sample: Sample, record: GenerationRecord, config: JudgeConfig = JudgeConfig()
) -> Judgment:
    """Judge the record's primary generation against the reference answer.

    correct = rule_correct OR (llm verdict is true). A missing LLM verdict
    (null) simply contributes nothing; disabling LLM judging via the config
    masks the verdict entirely.
    """
    score = rouge_l(record.primary.text, sample.reference_answer)
    rule_correct = score > config.rouge_threshold
    llm_correct = record.llm_judge if config.use_llm else None
    correct = rule_correct or llm_correct is True
    return Judgment(
        id=sample.id,
        rouge_l=score,
        rule_correct=rule_correct,
        llm_correct=llm_correct,
        correct=correct,
        corrector_target=0 if correct else 1,
    )


def judge_all(
    samples: list[Sample],
    records: list[GenerationRecord],
    config: JudgeConfig = JudgeConfig(),
) -> list[Judgment]:
    """Judge every sample, requiring a generation record for each."""
    by_id = {record.id: record for record in records}
    judgments = []
    for sample in samples:
        record = by_id.get(sample.id)
        if record is None:
            raise DatasetError("missing record: %s" % sample.id)
        judgments.append(judge_sample(sample, record, config))
    return judgments


def build_correction_dataset(
    samples: list[Sample], judgments: list[Judgment]
) -> list[tuple[str, str, int]]:
    """Pair each question with its corrector target: (id, question, 1 - correct)."""
    by_id = {j.id: j for j in judgments}
    dataset = []
    for sample in samples:
        judgment = by_id.get(sample.id)
        if judgment is None:
            raise DatasetError("missing judgment: %s" % sample.id)
        dataset.append((sample.id, sample.question, judgment.corrector_target))
    return dataset
