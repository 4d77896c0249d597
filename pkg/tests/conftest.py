"""Shared builders for test records and datasets."""

from __future__ import annotations

import json
import os

import pytest

from cue.types import Generation, GenerationRecord, Sample

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def make_generation(logprobs=None, text="alpha beta", tokens=None) -> Generation:
    """A generation whose tokens default to one synthetic token per logprob."""
    if logprobs is None:
        return Generation(text=text)
    logprobs = tuple(float(v) for v in logprobs)
    if tokens is None:
        tokens = tuple("t%d" % i for i in range(len(logprobs)))
    return Generation(text=text, tokens=tuple(tokens), token_logprobs=logprobs)


def make_record(
    record_id="r0",
    logprob_rows=None,
    texts=None,
    **kwargs,
) -> GenerationRecord:
    """Build a record from per-generation logprob rows and/or texts."""
    if logprob_rows is None and texts is None:
        raise ValueError("need logprob_rows or texts")
    n = len(logprob_rows) if logprob_rows is not None else len(texts)
    generations = []
    for b in range(n):
        row = logprob_rows[b] if logprob_rows is not None else None
        text = texts[b] if texts is not None else "gen %d" % b
        generations.append(make_generation(row, text=text))
    return GenerationRecord(id=record_id, generations=tuple(generations), **kwargs)


def make_sample(sample_id="r0", question="what is it", answer="it") -> Sample:
    return Sample(id=sample_id, question=question, reference_answer=answer)


@pytest.fixture
def data_dir() -> str:
    return DATA_DIR


def write_jsonl(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
