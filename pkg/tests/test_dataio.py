import json
import os

import pytest

from cue import dataio
from cue.errors import DatasetError, MissingInputError
from cue.types import Judgment, Method, ScoreSet, split_dataset

from conftest import make_record, make_sample, write_jsonl


@pytest.fixture
def sample_rows():
    return [
        {"id": "a", "question": "q one", "reference_answer": "one"},
        {"id": "b", "question": "q two", "reference_answer": "two"},
    ]


@pytest.fixture
def record_rows():
    gen = {"text": "one", "tokens": ["one"], "token_logprobs": [-0.5]}
    return [
        {"id": "a", "generations": [gen]},
        {"id": "b", "generations": [gen, dict(gen, text="two")], "verbal_confidence": 80.0},
    ]


class TestLoaders:
    def test_samples_round_trip(self, tmp_path, sample_rows):
        path = str(tmp_path / "samples.jsonl")
        write_jsonl(path, sample_rows)
        samples = dataio.load_samples(path)
        assert [s.id for s in samples] == ["a", "b"]
        assert samples[0].question == "q one"

    def test_records_round_trip(self, tmp_path, record_rows):
        path = str(tmp_path / "generations.jsonl")
        write_jsonl(path, record_rows)
        records = dataio.load_records(path)
        assert records[0].generations[0].token_logprobs == (-0.5,)
        assert records[1].verbal_confidence == 80.0
        assert records[1].p_true is None
        # serialize back and reload: identical structures
        write_jsonl(
            str(tmp_path / "again.jsonl"), [dataio.record_to_dict(r) for r in records]
        )
        assert dataio.load_records(str(tmp_path / "again.jsonl")) == records

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(MissingInputError):
            dataio.load_samples(str(tmp_path / "nope.jsonl"))

    def test_bad_json_is_dataset_error(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a"\n', encoding="utf-8")
        with pytest.raises(DatasetError, match="invalid JSON"):
            dataio.load_samples(str(path))

    def test_non_object_line_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("[1, 2]\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="expected an object"):
            dataio.load_samples(str(path))

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "question": "q"}\n', encoding="utf-8")
        with pytest.raises(DatasetError, match="reference_answer"):
            dataio.load_samples(str(path))

    def test_unknown_keys_warned_not_fatal(self, tmp_path, caplog):
        path = tmp_path / "samples.jsonl"
        write_jsonl(
            str(path),
            [{"id": "a", "question": "q", "reference_answer": "r", "extra": 1}],
        )
        with caplog.at_level("WARNING"):
            samples = dataio.load_samples(str(path))
        assert len(samples) == 1
        assert any("unknown keys" in message for message in caplog.messages)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "samples.jsonl"
        path.write_text(
            '\n{"id": "a", "question": "q", "reference_answer": "r"}\n\n',
            encoding="utf-8",
        )
        assert len(dataio.load_samples(str(path))) == 1

    def test_wrong_type_rejected(self, tmp_path):
        path = tmp_path / "gen.jsonl"
        write_jsonl(str(path), [{"id": "a", "generations": [{"text": 5}]}])
        with pytest.raises(DatasetError, match="wrong type"):
            dataio.load_records(str(path))

    def test_bool_is_not_a_number(self, tmp_path):
        path = tmp_path / "gen.jsonl"
        write_jsonl(
            str(path),
            [{"id": "a", "generations": [], "verbal_confidence": True}],
        )
        with pytest.raises(DatasetError, match="verbal_confidence"):
            dataio.load_records(str(path))


class TestJudgments:
    def test_round_trip(self, tmp_path):
        judgments = [
            Judgment("a", 1.0, True, None, True, 0),
            Judgment("b", 0.0, False, True, True, 0),
            Judgment("c", 0.2, False, False, False, 1),
        ]
        path = str(tmp_path / "judgments.jsonl")
        dataio.write_judgments(judgments, path)
        assert dataio.load_judgments(path) == judgments

    def test_llm_correct_must_be_bool_or_null(self, tmp_path):
        path = tmp_path / "j.jsonl"
        write_jsonl(
            str(path),
            [
                {
                    "id": "a",
                    "rouge_l": 1.0,
                    "rule_correct": True,
                    "llm_correct": "yes",
                    "correct": True,
                    "corrector_target": 0,
                }
            ],
        )
        with pytest.raises(DatasetError, match="llm_correct"):
            dataio.load_judgments(str(path))


class TestScores:
    def test_round_trip_and_sorted_output(self, tmp_path):
        scores = ScoreSet(Method.PE, {"b": 2.0, "a": 1.0}, normalized=False)
        path = str(tmp_path / "scores.jsonl")
        dataio.write_scores(scores, path)
        lines = open(path, encoding="utf-8").read().splitlines()
        assert json.loads(lines[0])["id"] == "a"
        loaded = dataio.load_scores(path)
        assert loaded.method is Method.PE
        assert loaded.scores == scores.scores

    def test_normalized_flag_inferred(self, tmp_path):
        path = str(tmp_path / "scores.jsonl")
        dataio.write_scores(ScoreSet(Method.CORRECTOR, {"a": 0.25, "b": 0.75}), path)
        assert dataio.load_scores(path).normalized

    def test_mixed_methods_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_jsonl(
            str(path),
            [
                {"id": "a", "method": "pe", "score": 1.0},
                {"id": "b", "method": "se", "score": 1.0},
            ],
        )
        with pytest.raises(DatasetError, match="mixed methods"):
            dataio.load_scores(str(path))

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_jsonl(
            str(path),
            [
                {"id": "a", "method": "pe", "score": 1.0},
                {"id": "a", "method": "pe", "score": 2.0},
            ],
        )
        with pytest.raises(DatasetError, match="duplicate score"):
            dataio.load_scores(str(path))

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DatasetError, match="empty score file"):
            dataio.load_scores(str(path))

    def test_unknown_method_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_jsonl(str(path), [{"id": "a", "method": "nope", "score": 1.0}])
        with pytest.raises(DatasetError, match="unknown method"):
            dataio.load_scores(str(path))


class TestSplitIO:
    def test_round_trip(self, tmp_path):
        split = split_dataset(["a", "b", "c", "d"], seed=9)
        path = str(tmp_path / "split.json")
        dataio.write_split(split, path)
        assert dataio.load_split(path) == split

    def test_missing_key(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_text('{"dev_ids": ["a"]}', encoding="utf-8")
        with pytest.raises(DatasetError, match="test_ids"):
            dataio.load_split(str(path))


class TestSimilarities:
    def test_load(self, tmp_path):
        path = tmp_path / "sims.jsonl"
        write_jsonl(
            str(path),
            [{"id": "a", "pairwise": [[1.0, 0.5], [0.5, 1.0]], "token_relevance": [[0.1], [0.9]]}],
        )
        entries = dataio.load_similarities(str(path))
        assert entries["a"]["pairwise"][0][1] == 0.5

    def test_needs_some_payload(self, tmp_path):
        path = tmp_path / "sims.jsonl"
        write_jsonl(str(path), [{"id": "a"}])
        with pytest.raises(DatasetError, match="pairwise and/or token_relevance"):
            dataio.load_similarities(str(path))


class TestValidateDataset:
    def test_well_formed_dataset_is_clean(self):
        samples = [make_sample("a"), make_sample("b")]
        records = [
            make_record("a", logprob_rows=[[-1.0]]),
            make_record("b", logprob_rows=[[-1.0], [-2.0, -0.5]]),
        ]
        assert dataio.validate_dataset(samples, records) == []

    def test_length_mismatch(self):
        from cue.types import Generation, GenerationRecord

        record = GenerationRecord(
            id="a",
            generations=(
                Generation(text="x", tokens=("x", "y"), token_logprobs=(-1.0,)),
            ),
        )
        violations = dataio.validate_dataset([make_sample("a")], [record])
        assert any("length mismatch" in v for v in violations)

    def test_tokens_without_logprobs_is_mismatch(self):
        from cue.types import Generation, GenerationRecord

        record = GenerationRecord(
            id="a", generations=(Generation(text="x", tokens=("x",)),)
        )
        violations = dataio.validate_dataset([make_sample("a")], [record])
        assert any("length mismatch" in v for v in violations)

    def test_orphan_record(self):
        violations = dataio.validate_dataset(
            [make_sample("a")],
            [make_record("a", logprob_rows=[[-1.0]]), make_record("zz", logprob_rows=[[-1.0]])],
        )
        assert "orphan record: zz" in violations

    def test_missing_record(self):
        violations = dataio.validate_dataset(
            [make_sample("a"), make_sample("b")], [make_record("a", logprob_rows=[[-1.0]])]
        )
        assert "missing record: b" in violations

    def test_duplicate_ids(self):
        violations = dataio.validate_dataset(
            [make_sample("a"), make_sample("a")],
            [make_record("a", logprob_rows=[[-1.0]]), make_record("a", logprob_rows=[[-1.0]])],
        )
        assert any("duplicate sample id" in v for v in violations)
        assert any("duplicate record id" in v for v in violations)

    def test_empty_question_and_id(self):
        violations = dataio.validate_dataset(
            [make_sample("", question="q"), make_sample("b", question="")],
            [make_record("b", logprob_rows=[[-1.0]])],
        )
        assert any("empty id" in v for v in violations)
        assert any("empty question" in v for v in violations)

    def test_positive_logprob(self):
        violations = dataio.validate_dataset(
            [make_sample("a")], [make_record("a", logprob_rows=[[0.2]])]
        )
        assert any("> 0" in v for v in violations)

    def test_range_checks(self):
        record = make_record(
            "a",
            logprob_rows=[[-1.0]],
            verbal_confidence=140.0,
            p_true=1.5,
            external_corrector_prob=-0.1,
        )
        violations = dataio.validate_dataset([make_sample("a")], [record])
        assert any("verbal_confidence" in v for v in violations)
        assert any("p_true" in v for v in violations)
        assert any("external_corrector_prob" in v for v in violations)

    def test_primary_index_bounds(self):
        record = make_record("a", logprob_rows=[[-1.0]], primary_index=3)
        violations = dataio.validate_dataset([make_sample("a")], [record])
        assert any("primary_index" in v for v in violations)

    def test_record_without_generations(self):
        from cue.types import GenerationRecord

        record = GenerationRecord(id="a", generations=())
        violations = dataio.validate_dataset([make_sample("a")], [record])
        assert any("no generations" in v for v in violations)

    def test_missing_logprobs_is_not_a_violation(self):
        record = make_record("a", texts=["hello there"])
        assert dataio.validate_dataset([make_sample("a")], [record]) == []


class TestAtomicWrite:
    def test_writes_content_and_cleans_temp(self, tmp_path):
        path = str(tmp_path / "sub" / "file.txt")
        dataio.atomic_write_text(path, "hello\n")
        assert open(path, encoding="utf-8").read() == "hello\n"
        leftovers = [n for n in os.listdir(tmp_path / "sub") if n != "file.txt"]
        assert leftovers == []

    def test_overwrites_in_place(self, tmp_path):
        path = str(tmp_path / "file.txt")
        dataio.atomic_write_text(path, "one")
        dataio.atomic_write_text(path, "two")
        assert open(path, encoding="utf-8").read() == "two"


class TestMethodAvailability:
    def test_counts(self):
        records = [
            make_record("a", logprob_rows=[[-1.0], [-2.0]]),
            make_record("b", texts=["x"], verbal_confidence=50.0, p_true=0.5),
        ]
        counts = dataio.method_availability(records)
        assert counts[Method.PE] == 1
        assert counts[Method.LS] == 1  # only the two-generation record
        assert counts[Method.VC] == 1
        assert counts[Method.PTRUE] == 1
