"""JSONL parsing, schema validation, and atomic file output.

File formats (all UTF-8, newline-delimited, unknown keys ignored with a
warning):

  samples.jsonl      {"id": str, "question": str, "reference_answer": str}
  generations.jsonl  {"id": str, "generations": [{"text": str, "tokens": [str],
                      "token_logprobs": [float]}], "primary_index": int?,
                      "verbal_confidence": float|null, "p_true": float|null,
                      "llm_judge": bool|null, "external_corrector_prob": float|null}
  judgments.jsonl    {"id": str, "rouge_l": float, "rule_correct": bool,
                      "llm_correct": bool|null, "correct": bool, "corrector_target": int}
  scores.jsonl       {"id": str, "method": str, "score": float}
  similarities.jsonl {"id": str, "pairwise": [[float]], "token_relevance": [[float]]}
  split.json         {"dev_ids": [str], "test_ids": [str], "seed": int}

Structural problems (missing keys, wrong JSON types) raise DatasetError at
load time; semantic problems (ranges, length agreement, id cross-references)
are collected by validate_dataset so a whole file can be reported on at once.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from typing import Iterable, Iterator, Mapping

from .errors import DatasetError, MissingInputError
from .types import (
    DatasetSplit,
    Generation,
    GenerationRecord,
    Judgment,
    LOGIT_METHODS,
    Method,
    Sample,
    ScoreSet,
)

logger = logging.getLogger(__name__)

_SAMPLE_KEYS = {"id", "question", "reference_answer"}
_RECORD_KEYS = {
    "id",
    "generations",
    "primary_index",
    "verbal_confidence",
    "p_true",
    "llm_judge",
    "external_corrector_prob",
}
_GENERATION_KEYS = {"text", "tokens", "token_logprobs"}
_JUDGMENT_KEYS = {"id", "rouge_l", "rule_correct", "llm_correct", "correct", "corrector_target"}
_SCORE_KEYS = {"id", "method", "score"}
_SIMILARITY_KEYS = {"id", "pairwise", "token_relevance"}


def _iter_jsonl(path: str) -> Iterator[tuple[int, dict]]:
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise MissingInputError("cannot read %s: %s" % (path, exc)) from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError("%s:%d: invalid JSON: %s" % (path, lineno, exc)) from exc
            if not isinstance(obj, dict):
                raise DatasetError("%s:%d: expected an object" % (path, lineno))
            yield lineno, obj


def _warn_unknown(obj: Mapping, known: set[str], where: str) -> None:
    unknown = set(obj) - known
    if unknown:
        logger.warning("%s: ignoring unknown keys: %s", where, ", ".join(sorted(unknown)))


def _require(obj: Mapping, key: str, types, where: str):
    if key not in obj:
        raise DatasetError("%s: missing required key %r" % (where, key))
    value = obj[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise DatasetError("%s: key %r has wrong type bool" % (where, key))
    if not isinstance(value, types):
        raise DatasetError("%s: key %r has wrong type %s" % (where, key, type(value).__name__))
    return value


def _optional_number(obj: Mapping, key: str, where: str) -> float | None:
    value = obj.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DatasetError("%s: key %r must be a number or null" % (where, key))
    return float(value)


def load_samples(path: str) -> list[Sample]:
    samples = []
    for lineno, obj in _iter_jsonl(path):
        where = "%s:%d" % (path, lineno)
        _warn_unknown(obj, _SAMPLE_KEYS, where)
        samples.append(
            Sample(
                id=_require(obj, "id", str, where),
                question=_require(obj, "question", str, where),
                reference_answer=_require(obj, "reference_answer", str, where),
            )
        )
    return samples


def _parse_generation(obj: Mapping, where: str) -> Generation:
    _warn_unknown(obj, _GENERATION_KEYS, where)
    text = _require(obj, "text", str, where)
    tokens = obj.get("tokens")
    logprobs = obj.get("token_logprobs")
    if tokens is not None:
        if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
            raise DatasetError("%s: tokens must be a list of strings" % where)
        tokens = tuple(tokens)
    if logprobs is not None:
        if not isinstance(logprobs, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in logprobs
        ):
            raise DatasetError("%s: token_logprobs must be a list of numbers" % where)
        logprobs = tuple(float(v) for v in logprobs)
    return Generation(text=text, tokens=tokens, token_logprobs=logprobs)


def load_records(path: str) -> list[GenerationRecord]:
    records = []
    for lineno, obj in _iter_jsonl(path):
        where = "%s:%d" % (path, lineno)
        _warn_unknown(obj, _RECORD_KEYS, where)
        gen_objs = _require(obj, "generations", list, where)
        generations = tuple(
            _parse_generation(g, "%s generation %d" % (where, i))
            for i, g in enumerate(gen_objs)
        )
        primary_index = obj.get("primary_index", 0)
        if isinstance(primary_index, bool) or not isinstance(primary_index, int):
            raise DatasetError("%s: primary_index must be an integer" % where)
        llm_judge = obj.get("llm_judge")
        if llm_judge is not None and not isinstance(llm_judge, bool):
            raise DatasetError("%s: llm_judge must be a boolean or null" % where)
        records.append(
            GenerationRecord(
                id=_require(obj, "id", str, where),
                generations=generations,
                primary_index=primary_index,
                verbal_confidence=_optional_number(obj, "verbal_confidence", where),
                p_true=_optional_number(obj, "p_true", where),
                llm_judge=llm_judge,
                external_corrector_prob=_optional_number(obj, "external_corrector_prob", where),
            )
        )
    return records


def record_to_dict(record: GenerationRecord) -> dict:
    gens = []
    for g in record.generations:
        gens.append(
            {
                "text": g.text,
                "tokens": list(g.tokens) if g.tokens is not None else None,
                "token_logprobs": list(g.token_logprobs) if g.token_logprobs is not None else None,
            }
        )
    return {
        "id": record.id,
        "generations": gens,
        "primary_index": record.primary_index,
        "verbal_confidence": record.verbal_confidence,
        "p_true": record.p_true,
        "llm_judge": record.llm_judge,
        "external_corrector_prob": record.external_corrector_prob,
    }


def sample_to_dict(sample: Sample) -> dict:
    return {
        "id": sample.id,
        "question": sample.question,
        "reference_answer": sample.reference_answer,
    }


def load_judgments(path: str) -> list[Judgment]:
    judgments = []
    for lineno, obj in _iter_jsonl(path):
        where = "%s:%d" % (path, lineno)
        _warn_unknown(obj, _JUDGMENT_KEYS, where)
        llm_correct = obj.get("llm_correct")
        if llm_correct is not None and not isinstance(llm_correct, bool):
            raise DatasetError("%s: llm_correct must be a boolean or null" % where)
        judgments.append(
            Judgment(
                id=_require(obj, "id", str, where),
                rouge_l=float(_require(obj, "rouge_l", (int, float), where)),
                rule_correct=_require(obj, "rule_correct", bool, where),
                llm_correct=llm_correct,
                correct=_require(obj, "correct", bool, where),
                corrector_target=_require(obj, "corrector_target", int, where),
            )
        )
    return judgments


def write_judgments(judgments: Iterable[Judgment], path: str) -> None:
    lines = []
    for j in judgments:
        lines.append(
            json.dumps(
                {
                    "id": j.id,
                    "rouge_l": j.rouge_l,
                    "rule_correct": j.rule_correct,
                    "llm_correct": j.llm_correct,
                    "correct": j.correct,
                    "corrector_target": j.corrector_target,
                },
                sort_keys=True,
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n" if lines else "")


def load_scores(path: str) -> ScoreSet:
    scores: dict[str, float] = {}
    method: Method | None = None
    for lineno, obj in _iter_jsonl(path):
        where = "%s:%d" % (path, lineno)
        _warn_unknown(obj, _SCORE_KEYS, where)
        sample_id = _require(obj, "id", str, where)
        raw_method = _require(obj, "method", str, where)
        try:
            line_method = Method(raw_method)
        except ValueError:
            raise DatasetError("%s: unknown method %r" % (where, raw_method)) from None
        if method is None:
            method = line_method
        elif line_method is not method:
            raise DatasetError(
                "%s: mixed methods in one score file (%s vs %s)"
                % (where, method.value, line_method.value)
            )
        if sample_id in scores:
            raise DatasetError("%s: duplicate score for id %r" % (where, sample_id))
        scores[sample_id] = float(_require(obj, "score", (int, float), where))
    if method is None:
        raise DatasetError("%s: empty score file" % path)
    normalized = all(0.0 <= s <= 1.0 for s in scores.values())
    return ScoreSet(method=method, scores=scores, normalized=normalized)


def write_scores(score_set: ScoreSet, path: str) -> None:
    lines = [
        json.dumps({"id": i, "method": score_set.method.value, "score": s}, sort_keys=True)
        for i, s in sorted(score_set.scores.items())
    ]
    atomic_write_text(path, "\n".join(lines) + "\n" if lines else "")


def load_split(path: str) -> DatasetSplit:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
    except OSError as exc:
        raise MissingInputError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise DatasetError("%s: invalid JSON: %s" % (path, exc)) from exc
    for key in ("dev_ids", "test_ids", "seed"):
        if key not in obj:
            raise DatasetError("%s: missing key %r" % (path, key))
    return DatasetSplit(
        dev_ids=frozenset(obj["dev_ids"]),
        test_ids=frozenset(obj["test_ids"]),
        seed=int(obj["seed"]),
    )


def write_split(split: DatasetSplit, path: str) -> None:
    payload = {
        "dev_ids": sorted(split.dev_ids),
        "test_ids": sorted(split.test_ids),
        "seed": split.seed,
    }
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_similarities(path: str) -> dict[str, dict]:
    """Load the precomputed similarity sidecar, keyed by record id.

    Each entry holds a pairwise matrix (list of rows) and optional
    token_relevance rows (one per generation). Shape agreement against the
    generations file is checked by the similarity oracle at scoring time.
    """
    entries: dict[str, dict] = {}
    for lineno, obj in _iter_jsonl(path):
        where = "%s:%d" % (path, lineno)
        _warn_unknown(obj, _SIMILARITY_KEYS, where)
        sample_id = _require(obj, "id", str, where)
        pairwise = obj.get("pairwise")
        relevance = obj.get("token_relevance")
        if pairwise is None and relevance is None:
            raise DatasetError("%s: needs pairwise and/or token_relevance" % where)
        entries[sample_id] = {"pairwise": pairwise, "token_relevance": relevance}
    return entries


def atomic_write_text(path: str, content: str) -> None:
    """Write via a temp file in the target directory, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(content)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def write_json(payload, path: str) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def validate_dataset(samples: list[Sample], records: list[GenerationRecord]) -> list[str]:
    """Cross-check samples against generation records.

    Returns a list of human-readable violations; an empty list means the
    dataset is valid. A record without token logprobs is NOT a violation
    (it simply cannot feed logit-based methods); a length mismatch between
    tokens and token_logprobs is.
    """
    violations: list[str] = []
    sample_ids: set[str] = set()
    for sample in samples:
        if not sample.id:
            violations.append("sample with empty id")
            continue
        if sample.id in sample_ids:
            violations.append("duplicate sample id: %s" % sample.id)
        sample_ids.add(sample.id)
        if not sample.question:
            violations.append("%s: empty question" % sample.id)

    record_ids: set[str] = set()
    for record in records:
        rid = record.id
        if rid in record_ids:
            violations.append("duplicate record id: %s" % rid)
        record_ids.add(rid)
        if rid not in sample_ids:
            violations.append("orphan record: %s" % rid)
        if not record.generations:
            violations.append("%s: record has no generations" % rid)
        elif not 0 <= record.primary_index < len(record.generations):
            violations.append(
                "%s: primary_index %d out of range for %d generations"
                % (rid, record.primary_index, len(record.generations))
            )
        for i, gen in enumerate(record.generations):
            has_tokens = gen.tokens is not None
            has_logprobs = gen.token_logprobs is not None
            if has_tokens != has_logprobs:
                violations.append(
                    "%s generation %d: length mismatch (tokens without token_logprobs "
                    "or vice versa)" % (rid, i)
                )
            elif has_tokens and len(gen.tokens) != len(gen.token_logprobs):
                violations.append(
                    "%s generation %d: length mismatch (%d tokens vs %d token_logprobs)"
                    % (rid, i, len(gen.tokens), len(gen.token_logprobs))
                )
            if has_logprobs:
                for lp in gen.token_logprobs:
                    if lp > 0.0:
                        violations.append(
                            "%s generation %d: token logprob %g > 0" % (rid, i, lp)
                        )
                        break
        if record.verbal_confidence is not None and not 0.0 <= record.verbal_confidence <= 100.0:
            violations.append(
                "%s: verbal_confidence %g outside [0, 100]" % (rid, record.verbal_confidence)
            )
        if record.p_true is not None and not 0.0 <= record.p_true <= 1.0:
            violations.append("%s: p_true %g outside [0, 1]" % (rid, record.p_true))
        if record.external_corrector_prob is not None and not (
            0.0 <= record.external_corrector_prob <= 1.0
        ):
            violations.append(
                "%s: external_corrector_prob %g outside [0, 1]"
                % (rid, record.external_corrector_prob)
            )

    for sample_id in sorted(sample_ids - record_ids):
        violations.append("missing record: %s" % sample_id)
    return violations


def method_availability(records: list[GenerationRecord]) -> dict[Method, int]:
    """How many records can feed each scoring method.

    Used for reporting: a record without logprobs is still valid, it just
    narrows which methods can run on it.
    """
    counts = {method: 0 for method in Method if method is not Method.FUSED}
    for record in records:
        if record.generations and record.has_logprobs:
            for method in LOGIT_METHODS:
                counts[method] += 1
        if len(record.generations) >= 2:
            counts[Method.LS] += 1
        if record.verbal_confidence is not None:
            counts[Method.VC] += 1
        if record.p_true is not None:
            counts[Method.PTRUE] += 1
        if record.external_corrector_prob is not None:
            counts[Method.CORRECTOR] += 1
    return counts
