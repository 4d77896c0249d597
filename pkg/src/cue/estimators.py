"""Vanilla uncertainty estimators over sampled generations.

Implemented methods (higher = less reliable):

  pe      predictive entropy: -(1/B) sum_b ln P(y_b)
  ln-pe   length-normalized PE: -(1/B) sum_b mean_l logprob_{b,l}
  se      semantic entropy over meaning clusters: -(1/C) sum_i ln P(c_i),
          P(c_i) = sum_{b in c_i} exp(seq logprob_b)
  sar-t   token-relevance-weighted PE: per generation, weights
          w_l = r_l / sum_k r_k (uniform when all r_l = 0), score
          -(sum_l w_l * logprob_l), averaged over B
  sar-s   sentence-shifted PE: P'(y_b) = p(y_b) + (1/t) sum_{j!=b} sim(b,j) p(y_j),
          score -(1/B) sum_b ln P'(y_b); may be negative when shifted mass
          exceeds 1 (documented, not an error)
  sar     sar-s applied to token-reweighted probabilities
          p~(y_b) = exp(sum_l w_l * logprob_{b,l})
  ls      1 - mean pairwise rouge_l over generation texts
  vc      1 - verbal_confidence / 100
  ptrue   1 - p_true

Similarities come from a SimilarityOracle: either recomputed from ROUGE-L on
the generation texts or read from a precomputed sidecar (the adapter supplies
semantic similarities that way). All estimators are pure per-record functions;
records may be scored in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations

from .errors import DatasetError
from .judge import rouge_l
from .types import Generation, GenerationRecord, Method, ScoreSet

#: methods whose score can be computed by this module
SCOREABLE = (
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
class SarConfig:
    """Knobs for the SAR family.

    sentence_temperature scales how strongly neighboring generations shift a
    sentence's probability mass; use_length_normalized_probs switches the
    sentence formula from raw sequence probabilities to exp(mean token
    logprob).
    """

    sentence_temperature: float = 0.001
    use_length_normalized_probs: bool = False

    def __post_init__(self) -> None:
        if not self.sentence_temperature > 0:
            raise ValueError(
                "sentence_temperature must be > 0, got %g" % self.sentence_temperature
            )


@dataclass(frozen=True)
class SimilarityOracle:
    """Source of generation-pair similarities and per-token relevances.

    kind="rouge_l" recomputes everything from generation texts; kind
    ="precomputed" reads matrices loaded from similarities.jsonl (entries
    keyed by record id). Precomputed pairwise matrices must be symmetric with
    a unit diagonal. The oracle is read-only, so it can be shared across
    scoring workers.
    """

    kind: str = "rouge_l"
    entries: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("rouge_l", "precomputed"):
            raise ValueError("unknown similarity oracle kind: %r" % self.kind)

    def _entry(self, record: GenerationRecord) -> dict:
        entry = self.entries.get(record.id)
        if entry is None:
            raise DatasetError("no similarity entry for id: %s" % record.id)
        return entry

    def pairwise(self, record: GenerationRecord, i: int, j: int) -> float:
        """Similarity in [0,1] between generations i and j of the record."""
        if i == j:
            return 1.0
        if self.kind == "rouge_l":
            return rouge_l(record.generations[i].text, record.generations[j].text)
        matrix = self._entry(record).get("pairwise")
        if matrix is None:
            raise DatasetError("no pairwise similarities for id: %s" % record.id)
        n = len(record.generations)
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise DatasetError(
                "pairwise matrix shape mismatch for id %s (need %dx%d)" % (record.id, n, n)
            )
        value = float(matrix[i][j])
        if abs(value - float(matrix[j][i])) > 1e-9:
            raise DatasetError("pairwise matrix not symmetric for id: %s" % record.id)
        if not 0.0 <= value <= 1.0:
            raise DatasetError(
                "pairwise similarity %g outside [0,1] for id: %s" % (value, record.id)
            )
        return value

    def token_relevance(self, record: GenerationRecord, b: int) -> list[float]:
        """Relevance in [0,1] of each token of generation b.

        The rouge_l kind scores token l by how much the text changes when it
        is dropped: r_l = 1 - rouge_l(full text, text without token l).
        """
        generation = record.generations[b]
        if generation.tokens is None:
            raise DatasetError("method requires token logprobs: %s" % record.id)
        if self.kind == "precomputed":
            rows = self._entry(record).get("token_relevance")
            if rows is None:
                raise DatasetError("no token relevances for id: %s" % record.id)
            if len(rows) != len(record.generations):
                raise DatasetError(
                    "token_relevance needs one row per generation for id: %s" % record.id
                )
            row = [float(r) for r in rows[b]]
            if len(row) != len(generation.tokens):
                raise DatasetError(
                    "token_relevance row %d has %d values for %d tokens (id: %s)"
                    % (b, len(row), len(generation.tokens), record.id)
                )
            for r in row:
                if not 0.0 <= r <= 1.0:
                    raise DatasetError(
                        "token relevance %g outside [0,1] for id: %s" % (r, record.id)
                    )
            return row
        tokens = list(generation.tokens)
        relevances = []
        for l in range(len(tokens)):
            reduced = " ".join(tokens[:l] + tokens[l + 1 :])
            relevances.append(1.0 - rouge_l(generation.text, reduced))
        return relevances


def _require_logprobs(record: GenerationRecord) -> None:
    if not record.generations or not record.has_logprobs:
        raise DatasetError("method requires token logprobs: %s" % record.id)


def predictive_entropy(record: GenerationRecord) -> float:
    """Mean negative sequence log-probability over the B generations."""
    _require_logprobs(record)
    total = math.fsum(g.sequence_logprob() for g in record.generations)
    return -total / len(record.generations)


def _mean_token_logprob(generation: Generation, record_id: str) -> float:
    if not generation.token_logprobs:
        raise DatasetError("empty generation: %s" % record_id)
    return math.fsum(generation.token_logprobs) / len(generation.token_logprobs)


def length_normalized_pe(record: GenerationRecord) -> float:
    """PE over per-token mean logprobs instead of sequence sums."""
    _require_logprobs(record)
    total = math.fsum(_mean_token_logprob(g, record.id) for g in record.generations)
    return -total / len(record.generations)


def cluster_generations(
    record: GenerationRecord,
    oracle: SimilarityOracle,
    equivalence_threshold: float = 0.7,
) -> list[list[int]]:
    """Greedy first-fit clustering of generations by meaning.

    Visits generations in input order and joins the first cluster whose
    representative (its first member) is similar in both directions at or
    above the threshold; otherwise opens a new cluster. The result partitions
    the generation indices deterministically.
    """
    clusters: list[list[int]] = []
    for i in range(len(record.generations)):
        for cluster in clusters:
            rep = cluster[0]
            if (
                oracle.pairwise(record, rep, i) >= equivalence_threshold
                and oracle.pairwise(record, i, rep) >= equivalence_threshold
            ):
                cluster.append(i)
                break
        else:
            clusters.append([i])
    return clusters


def semantic_entropy(record: GenerationRecord, clusters: list[list[int]]) -> float:
    """Mean negative log cluster probability, P(c) = sum of member seq probs."""
    _require_logprobs(record)
    seq_probs = [math.exp(g.sequence_logprob()) for g in record.generations]
    log_cluster_probs = []
    for cluster in clusters:
        prob = math.fsum(seq_probs[i] for i in cluster)
        if prob <= 0.0:
            raise DatasetError("cluster probability underflow: %s" % record.id)
        log_cluster_probs.append(math.log(prob))
    return -math.fsum(log_cluster_probs) / len(clusters)


def _token_weights(relevances: list[float], record_id: str) -> list[float]:
    if not relevances:
        raise DatasetError("empty generation: %s" % record_id)
    total = math.fsum(relevances)
    if total <= 0.0:
        return [1.0 / len(relevances)] * len(relevances)
    return [r / total for r in relevances]


def sar_token(record: GenerationRecord, oracle: SimilarityOracle) -> float:
    """Relevance-weighted negative token logprob, averaged over generations."""
    _require_logprobs(record)
    scores = []
    for b, generation in enumerate(record.generations):
        weights = _token_weights(oracle.token_relevance(record, b), record.id)
        scores.append(
            -math.fsum(w * lp for w, lp in zip(weights, generation.token_logprobs))
        )
    return math.fsum(scores) / len(scores)


def _sequence_probs(record: GenerationRecord, config: SarConfig) -> list[float]:
    if config.use_length_normalized_probs:
        return [math.exp(_mean_token_logprob(g, record.id)) for g in record.generations]
    return [math.exp(g.sequence_logprob()) for g in record.generations]


def _sentence_shifted_entropy(
    record: GenerationRecord,
    oracle: SimilarityOracle,
    probs: list[float],
    config: SarConfig,
) -> float:
    inv_t = 1.0 / config.sentence_temperature
    shifted_logs = []
    for b in range(len(probs)):
        shift = math.fsum(
            oracle.pairwise(record, b, j) * probs[j]
            for j in range(len(probs))
            if j != b
        )
        shifted = probs[b] + inv_t * shift
        if shifted <= 0.0:
            raise DatasetError("cluster probability underflow: %s" % record.id)
        shifted_logs.append(math.log(shifted))
    return -math.fsum(shifted_logs) / len(shifted_logs)


def sar_sentence(
    record: GenerationRecord, oracle: SimilarityOracle, config: SarConfig = SarConfig()
) -> float:
    """Entropy over similarity-shifted sequence probabilities."""
    _require_logprobs(record)
    return _sentence_shifted_entropy(record, oracle, _sequence_probs(record, config), config)


def sar_combined(
    record: GenerationRecord, oracle: SimilarityOracle, config: SarConfig = SarConfig()
) -> float:
    """Sentence shift applied to token-reweighted sequence probabilities."""
    _require_logprobs(record)
    reweighted = []
    for b, generation in enumerate(record.generations):
        weights = _token_weights(oracle.token_relevance(record, b), record.id)
        reweighted.append(
            math.exp(math.fsum(w * lp for w, lp in zip(weights, generation.token_logprobs)))
        )
    return _sentence_shifted_entropy(record, oracle, reweighted, config)


def lexical_similarity_uncertainty(record: GenerationRecord) -> float:
    """One minus the mean pairwise ROUGE-L over all unordered text pairs."""
    n = len(record.generations)
    if n < 2:
        raise DatasetError("LS needs >=2 generations: %s" % record.id)
    sims = [
        rouge_l(record.generations[i].text, record.generations[j].text)
        for i, j in combinations(range(n), 2)
    ]
    return 1.0 - math.fsum(sims) / len(sims)


def verbal_confidence_uncertainty(record: GenerationRecord) -> float:
    if record.verbal_confidence is None:
        raise DatasetError("method vc requires verbal_confidence: %s" % record.id)
    return 1.0 - record.verbal_confidence / 100.0


def ptrue_uncertainty(record: GenerationRecord) -> float:
    if record.p_true is None:
        raise DatasetError("method ptrue requires p_true: %s" % record.id)
    return 1.0 - record.p_true


def score_record(
    record: GenerationRecord,
    method: Method,
    oracle: SimilarityOracle | None = None,
    config: SarConfig | None = None,
    equivalence_threshold: float = 0.7,
) -> float:
    """Score one record with the given method."""
    oracle = oracle if oracle is not None else SimilarityOracle()
    config = config if config is not None else SarConfig()
    if method is Method.PE:
        return predictive_entropy(record)
    if method is Method.LN_PE:
        return length_normalized_pe(record)
    if method is Method.SE:
        clusters = cluster_generations(record, oracle, equivalence_threshold)
        return semantic_entropy(record, clusters)
    if method is Method.SAR_T:
        return sar_token(record, oracle)
    if method is Method.SAR_S:
        return sar_sentence(record, oracle, config)
    if method is Method.SAR:
        return sar_combined(record, oracle, config)
    if method is Method.LS:
        return lexical_similarity_uncertainty(record)
    if method is Method.VC:
        return verbal_confidence_uncertainty(record)
    if method is Method.PTRUE:
        return ptrue_uncertainty(record)
    raise DatasetError("method %s is not computed by the estimators" % method.value)


def score_records(
    records: list[GenerationRecord],
    method: Method,
    oracle: SimilarityOracle | None = None,
    config: SarConfig | None = None,
    equivalence_threshold: float = 0.7,
    jobs: int = 1,
) -> ScoreSet:
    """Score every record; with jobs > 1, fan out across a process pool.

    Results are merged in input order either way, so the output is
    deterministic regardless of worker count.
    """
    worker = partial(
        score_record,
        method=method,
        oracle=oracle,
        config=config,
        equivalence_threshold=equivalence_threshold,
    )
    if jobs > 1 and len(records) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(worker, records, chunksize=32))
    else:
        values = [worker(record) for record in records]
    return ScoreSet(
        method=method,
        scores={record.id: value for record, value in zip(records, values)},
        normalized=False,
    )
