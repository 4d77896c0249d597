"""Produce the core pipeline's input files from a local model stack.

Four operations, each emitting schema-exact JSONL that the core package
accepts unchanged:

- generate: sample B answers per question with per-token natural-log
  probabilities, plus elicited verbal confidence and p(true)
- judge_llm: merge strict True/False judge verdicts into the records
- similarity_sidecar: pairwise similarity matrices and token relevance rows
- train_encoder_corrector: train a small text classifier on judged
  questions and merge its unreliability probability into the records

Every output file gets a `<file>.meta.json` sidecar recording the model
identifiers, prompt versions, and seeds that produced it. The built-in
backends are deterministic local stand-ins so the whole stack runs offline;
real model backends plug in through the same two-method protocols.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import random
import tempfile
from dataclasses import dataclass

logger = logging.getLogger(__name__)


class AdapterError(Exception):
    """Base for adapter failures."""


class DataError(AdapterError):
    """Malformed or inconsistent input data (CLI exit 2)."""


class MissingInputError(AdapterError):
    """A required input file cannot be read (CLI exit 3)."""


class ModelError(AdapterError):
    """A model backend failed; generate() retries these."""


GENERATION_PROMPT_V1 = (
    "Answer the question with a short phrase.\n"
    "Question: {question}\n"
    "Answer:"
)

VC_PROMPT_V1 = (
    "Read the question and your answer, then provide your confidence score "
    "ranging from 0 to 100.\n"
    "Question: {question}\n"
    "Answer: {answer}\n"
    "Confidence:"
)

PTRUE_PROMPT_V1 = (
    "Question: {question}\n"
    "Proposed answer: {answer}\n"
    "Is the proposed answer true? Reply with the probability that it is."
)

JUDGE_PROMPT_V1 = (
    "You are grading short answers. Reply with exactly one word, "
    "True or False, and nothing else.\n"
    "Question: {question}\n"
    "Reference answer: {reference}\n"
    "Candidate answer: {candidate}\n"
    "Is the candidate answer correct?"
)

_PROMPTS = {
    "generation": GENERATION_PROMPT_V1,
    "verbal_confidence": VC_PROMPT_V1,
    "p_true": PTRUE_PROMPT_V1,
    "judge": JUDGE_PROMPT_V1,
}

_EDGE_PUNCT = ".,;:!?\"'`()[]{}<>"

_STOPWORDS = frozenset(
    "a an and are as at be by for from in is it of on or that the this to was what which who with".split()
)


def normalize_tokens(text: str) -> list[str]:
    """Lowercased whitespace tokens with edge punctuation stripped."""
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(_EDGE_PUNCT)
        if token:
            tokens.append(token)
    return tokens


def _hash01(key: str) -> float:
    """Deterministic pseudo-random value in [0, 1) from a string key."""
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def _lcs_similarity(a: list[str], b: list[str]) -> float:
    """LCS length over the shorter token count; 0 when either is empty."""
    if not a or not b:
        return 0.0
    if len(a) < len(b):
        a, b = b, a
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            current = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = current
    return row[len(b)] / min(len(a), len(b))


@dataclass(frozen=True)
class AdapterConfig:
    """Model identifiers, sampling parameters, and training hyperparameters."""

    target_model: str = "toy-lm/1"
    b: int = 3
    temperature: float = 0.0
    max_tokens: int = 12
    judge_model: str = "toy-judge/1"
    judge_prompt: str = JUDGE_PROMPT_V1
    similarity_model: str = "lcs-overlap/1"
    encoder: str = "hashed-bow/1"
    epochs: int = 200
    learning_rate: float = 0.5
    batch_size: int = 16
    n_buckets: int = 2**16
    hash_seed: int = 0
    seed: int = 0
    retries: int = 2
    shard_size: int = 16

    def __post_init__(self) -> None:
        if self.b < 1:
            raise ValueError("b must be >= 1, got %d" % self.b)
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0, got %g" % self.temperature)
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1, got %d" % self.max_tokens)
        if self.retries < 0:
            raise ValueError("retries must be >= 0, got %d" % self.retries)
        if self.shard_size < 1:
            raise ValueError("shard_size must be >= 1, got %d" % self.shard_size)
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0, got %d" % self.epochs)
        if self.n_buckets < 2:
            raise ValueError("n_buckets must be >= 2, got %d" % self.n_buckets)


# ---------------------------------------------------------------------------
# file plumbing


def load_samples(path: str) -> list[dict]:
    """Read samples.jsonl rows ({"id", "question", "answer"} strings)."""
    rows = []
    seen = set()
    for lineno, obj in _iter_jsonl(path):
        for key in ("id", "question", "reference_answer"):
            if not isinstance(obj.get(key), str) or not obj[key]:
                raise DataError("%s:%d: needs a non-empty string %r" % (path, lineno, key))
        if obj["id"] in seen:
            raise DataError("%s:%d: duplicate sample id %s" % (path, lineno, obj["id"]))
        seen.add(obj["id"])
        rows.append(
            {
                "id": obj["id"],
                "question": obj["question"],
                "reference_answer": obj["reference_answer"],
            }
        )
    if not rows:
        raise DataError("%s: no samples" % path)
    return rows


def load_record_rows(path: str) -> list[dict]:
    """Read generations.jsonl rows, checking only what the adapter touches."""
    rows = []
    for lineno, obj in _iter_jsonl(path):
        if not isinstance(obj.get("id"), str) or not obj["id"]:
            raise DataError("%s:%d: needs a non-empty string 'id'" % (path, lineno))
        generations = obj.get("generations")
        if not isinstance(generations, list) or not generations:
            raise DataError("%s:%d: needs a non-empty 'generations' list" % (path, lineno))
        for i, gen in enumerate(generations):
            if not isinstance(gen, dict) or not isinstance(gen.get("text"), str):
                raise DataError("%s:%d: generation %d needs a 'text' string" % (path, lineno, i))
        rows.append(obj)
    if not rows:
        raise DataError("%s: no generation records" % path)
    return rows


def _iter_jsonl(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise MissingInputError("cannot read %s: %s" % (path, exc)) from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError("%s:%d: invalid JSON: %s" % (path, lineno, exc)) from exc
        if not isinstance(obj, dict):
            raise DataError("%s:%d: expected a JSON object" % (path, lineno))
        yield lineno, obj


def write_jsonl_sharded(path: str, rows: list[dict], shard_size: int) -> None:
    """Write rows in append-only shards, then merge atomically into path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    shards = []
    for number, start in enumerate(range(0, len(rows), shard_size)):
        shard_path = "%s.shard-%04d" % (path, number)
        with open(shard_path, "a", encoding="utf-8") as handle:
            for row in rows[start : start + shard_size]:
                handle.write(json.dumps(row, sort_keys=True) + "\n")
        shards.append(shard_path)
    descriptor, temp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8") as out:
            for shard_path in shards:
                with open(shard_path, "r", encoding="utf-8") as handle:
                    out.write(handle.read())
        os.replace(temp_path, path)
    except BaseException:
        os.unlink(temp_path)
        raise
    finally:
        for shard_path in shards:
            os.unlink(shard_path)


def write_meta(path: str, payload: dict) -> str:
    """Write the provenance sidecar for an output file; returns its path."""
    meta_path = path + ".meta.json"
    directory = os.path.dirname(os.path.abspath(meta_path))
    descriptor, temp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        os.replace(temp_path, meta_path)
    except BaseException:
        os.unlink(temp_path)
        raise
    return meta_path


# ---------------------------------------------------------------------------
# backends

class ToyLocalModel:
    """Deterministic offline stand-in for a sampled language model.

    Answers echo the question's content words; token log-probabilities are
    stable hashes in [-1.0, -0.05], jittered only when temperature > 0.
    """

    name = "toy-lm/1"

    def complete(self, question: str, index: int, config: AdapterConfig, rng) -> dict:
        content = [t for t in normalize_tokens(question) if t not in _STOPWORDS]
        if not content:
            content = ["unknown"]
        budget = max(1, config.max_tokens - 2)
        tokens = (["the"] + content)[:budget]
        if index > 0:
            tokens = tokens + ["take", str(index)]
        if config.temperature > 0 and rng.random() < min(1.0, config.temperature):
            tokens = tokens + [rng.choice(content)]
        tokens = tokens[: config.max_tokens]
        logprobs = []
        for position, token in enumerate(tokens):
            value = -(0.05 + 0.95 * _hash01("lm/%d/%s" % (position, token)))
            if config.temperature > 0:
                value -= config.temperature * rng.random()
            logprobs.append(round(value, 6))
        return {"text": " ".join(tokens), "tokens": tokens, "token_logprobs": logprobs}

    def verbal_confidence(self, question: str, answer: str) -> float:
        return round(100.0 * _hash01("vc/%s/%s" % (question, answer)), 4)

    def p_true(self, question: str, answer: str) -> float:
        return round(_hash01("pt/%s/%s" % (question, answer)), 6)


class ToyJudgeModel:
    """Deterministic judge: replies "True" when token overlap is high."""

    name = "toy-judge/1"

    def reply(self, prompt: str, question: str, reference: str, candidate: str) -> str:
        similarity = _lcs_similarity(normalize_tokens(reference), normalize_tokens(candidate))
        return "True" if similarity > 0.6 else "False"


_TARGET_MODELS = {ToyLocalModel.name: ToyLocalModel}
_JUDGE_MODELS = {ToyJudgeModel.name: ToyJudgeModel}


def build_target_model(name: str):
    if name not in _TARGET_MODELS:
        raise DataError("unknown target model: %s" % name)
    return _TARGET_MODELS[name]()


def build_judge_model(name: str):
    if name not in _JUDGE_MODELS:
        raise DataError("unknown judge model: %s" % name)
    return _JUDGE_MODELS[name]()


# ---------------------------------------------------------------------------
# operations

def generate(
    samples: list[dict],
    config: AdapterConfig = AdapterConfig(),
    model=None,
) -> tuple[list[dict], list[dict]]:
    """Sample B generations per question; returns (records, failures).

    A sample whose backend calls keep failing after config.retries extra
    attempts is excluded from the records and reported in failures as
    {"id", "generations": null, "error"} so the main file never carries a
    schema-invalid line.
    """
    model = model if model is not None else build_target_model(config.target_model)
    records = []
    failures = []
    for sample in samples:
        rng = random.Random("%d/%s" % (config.seed, sample["id"]))
        error = None
        for attempt in range(config.retries + 1):
            try:
                generations = [
                    model.complete(sample["question"], index, config, rng)
                    for index in range(config.b)
                ]
                primary = generations[0]["text"]
                record = {
                    "id": sample["id"],
                    "generations": generations,
                    "primary_index": 0,
                    "verbal_confidence": model.verbal_confidence(sample["question"], primary),
                    "p_true": model.p_true(sample["question"], primary),
                    "llm_judge": None,
                    "external_corrector_prob": None,
                }
                error = None
                break
            except ModelError as exc:
                error = str(exc)
                logger.warning(
                    "sample %s attempt %d failed: %s", sample["id"], attempt + 1, exc
                )
        if error is not None:
            logger.error("sample %s failed after %d attempts", sample["id"], config.retries + 1)
            failures.append({"id": sample["id"], "generations": None, "error": error})
        else:
            records.append(record)
    return records, failures


def write_generate_outputs(
    path: str, records: list[dict], failures: list[dict], config: AdapterConfig
) -> None:
    write_jsonl_sharded(path, records, config.shard_size)
    if failures:
        write_jsonl_sharded(path + ".errors.jsonl", failures, config.shard_size)
    write_meta(
        path,
        {
            "model": config.target_model,
            "prompts": {
                "generation": _PROMPTS["generation"],
                "verbal_confidence": _PROMPTS["verbal_confidence"],
                "p_true": _PROMPTS["p_true"],
            },
            "sampling": {
                "b": config.b,
                "temperature": config.temperature,
                "max_tokens": config.max_tokens,
            },
            "seed": config.seed,
            "failures": len(failures),
        },
    )


def parse_verdict(reply: str) -> bool | None:
    """Strict single-word True/False parse; anything else is None."""
    word = reply.strip().rstrip(".").lower()
    if word == "true":
        return True
    if word == "false":
        return False
    logger.warning("unparseable judge reply %r", reply)
    return None


def judge_llm(
    samples: list[dict],
    records: list[dict],
    config: AdapterConfig = AdapterConfig(),
    judge=None,
) -> list[dict]:
    """Merge judge verdicts into copies of the record rows."""
    judge = judge if judge is not None else build_judge_model(config.judge_model)
    answers = {s["id"]: s["reference_answer"] for s in samples}
    questions = {s["id"]: s["question"] for s in samples}
    merged = []
    for record in records:
        if record["id"] not in answers:
            raise DataError("no sample for record id: %s" % record["id"])
        primary = record["generations"][record.get("primary_index", 0)]["text"]
        prompt = config.judge_prompt.format(
            question=questions[record["id"]],
            reference=answers[record["id"]],
            candidate=primary,
        )
        reply = judge.reply(prompt, questions[record["id"]], answers[record["id"]], primary)
        merged.append({**record, "llm_judge": parse_verdict(reply)})
    return merged


def similarity_sidecar(records: list[dict], config: AdapterConfig = AdapterConfig()) -> list[dict]:
    """Pairwise similarity matrices plus token relevance rows per record.

    Similarity is LCS overlap on normalized tokens (symmetric with unit
    diagonal by construction). Token relevance marks stopwords low and
    longer content words higher, always inside [0, 1].
    """
    rows = []
    for record in records:
        texts = [normalize_tokens(g["text"]) for g in record["generations"]]
        size = len(texts)
        pairwise = [[1.0] * size for _ in range(size)]
        for i in range(size):
            for j in range(i + 1, size):
                value = _lcs_similarity(texts[i], texts[j])
                pairwise[i][j] = pairwise[j][i] = value
        relevance = []
        for generation in record["generations"]:
            tokens = generation.get("tokens") or generation["text"].split()
            row = []
            for raw in tokens:
                core = raw.lower().strip(_EDGE_PUNCT)
                if not core or core in _STOPWORDS:
                    row.append(0.1)
                else:
                    row.append(min(1.0, 0.3 + 0.08 * len(core)))
            relevance.append(row)
        rows.append({"id": record["id"], "pairwise": pairwise, "token_relevance": relevance})
    return rows


# ---------------------------------------------------------------------------
# encoder corrector

def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    value = math.exp(z)
    return value / (1.0 + value)


def _features(question: str, config: AdapterConfig) -> dict[int, float]:
    tokens = normalize_tokens(question)
    key = config.hash_seed.to_bytes(8, "little", signed=True)
    counts: dict[int, float] = {}
    grams = [(1, t) for t in tokens]
    grams += [(2, "%s %s" % pair) for pair in zip(tokens, tokens[1:])]
    for order, gram in grams:
        data = ("%d:%s" % (order, gram)).encode("utf-8")
        digest = hashlib.blake2b(data, digest_size=8, key=key).digest()
        bucket = int.from_bytes(digest, "little") % config.n_buckets
        counts[bucket] = counts.get(bucket, 0.0) + 1.0
    return counts


def load_targets(path: str) -> dict[str, int]:
    """Read corrector targets from a judgments.jsonl file."""
    targets = {}
    for lineno, obj in _iter_jsonl(path):
        if not isinstance(obj.get("id"), str) or not obj["id"]:
            raise DataError("%s:%d: needs a non-empty string 'id'" % (path, lineno))
        target = obj.get("corrector_target")
        if isinstance(target, bool) or target not in (0, 1):
            raise DataError("%s:%d: corrector_target must be 0 or 1" % (path, lineno))
        targets[obj["id"]] = int(target)
    if not targets:
        raise DataError("%s: no judgments" % path)
    return targets


def train_encoder_corrector(
    samples: list[dict],
    targets: dict[str, int],
    records: list[dict],
    config: AdapterConfig = AdapterConfig(),
) -> tuple[dict, list[dict]]:
    """Train the question classifier; returns (model, merged record rows).

    The stand-in encoder is a hashed unigram+bigram bag with a logistic
    head trained by mini-batch SGD; the training seed, hyperparameters, and
    encoder identifier all land in the returned model dict.
    """
    dataset = [
        (_features(s["question"], config), targets[s["id"]])
        for s in samples
        if s["id"] in targets
    ]
    if not dataset:
        raise DataError("no judged samples to train on")
    weights: dict[int, float] = {}
    bias = 0.0
    rng = random.Random(config.seed)
    for _ in range(config.epochs):
        order = list(range(len(dataset)))
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grad: dict[int, float] = {}
            grad_bias = 0.0
            for row_index in batch:
                features, target = dataset[row_index]
                z = sum(weights.get(i, 0.0) * v for i, v in features.items()) + bias
                residual = _sigmoid(z) - target
                for i, v in features.items():
                    grad[i] = grad.get(i, 0.0) + residual * v
                grad_bias += residual
            scale = config.learning_rate / len(batch)
            for i, g in grad.items():
                weights[i] = weights.get(i, 0.0) - scale * g
            bias -= scale * grad_bias

    model = {
        "format": "cue-adapter-encoder/1",
        "encoder": config.encoder,
        "n_buckets": config.n_buckets,
        "hash_seed": config.hash_seed,
        "seed": config.seed,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "weights": {str(i): weights[i] for i in sorted(weights)},
        "bias": bias,
    }
    probabilities = {
        s["id"]: predict_encoder(model, s["question"]) for s in samples
    }
    merged = []
    for record in records:
        if record["id"] not in probabilities:
            raise DataError("no sample for record id: %s" % record["id"])
        merged.append({**record, "external_corrector_prob": probabilities[record["id"]]})
    return model, merged


def predict_encoder(model: dict, question: str) -> float:
    """Probability the question will be answered unreliably."""
    config = AdapterConfig(n_buckets=model["n_buckets"], hash_seed=model["hash_seed"])
    features = _features(question, config)
    weights = model["weights"]
    z = sum(weights.get(str(i), 0.0) * v for i, v in features.items()) + model["bias"]
    return _sigmoid(z)
