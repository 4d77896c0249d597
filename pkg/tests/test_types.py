import math

import pytest

from cue.errors import DatasetError
from cue.types import (
    DatasetSplit,
    Generation,
    GenerationRecord,
    Method,
    split_dataset,
)

from conftest import make_record


class TestMethod:
    def test_wire_values(self):
        assert Method.PE.value == "pe"
        assert Method.LN_PE.value == "ln-pe"
        assert Method.SAR_T.value == "sar-t"
        assert Method.SAR_S.value == "sar-s"
        assert Method.PTRUE.value == "ptrue"
        assert Method("corrector") is Method.CORRECTOR
        assert Method("fused") is Method.FUSED

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            Method("entropy")


class TestGeneration:
    def test_sequence_logprob_sums_tokens(self):
        gen = Generation(text="a b", tokens=("a", "b"), token_logprobs=(-0.5, -1.5))
        assert gen.sequence_logprob() == -2.0
        assert gen.has_logprobs

    def test_sequence_logprob_requires_logprobs(self):
        gen = Generation(text="a b")
        assert not gen.has_logprobs
        with pytest.raises(DatasetError, match="token logprobs"):
            gen.sequence_logprob()


class TestGenerationRecord:
    def test_primary_follows_index(self):
        record = make_record("r1", texts=["first", "second", "third"], primary_index=2)
        assert record.primary.text == "third"

    def test_has_logprobs_needs_every_generation(self):
        record = GenerationRecord(
            id="r1",
            generations=(
                Generation(text="a", tokens=("a",), token_logprobs=(-1.0,)),
                Generation(text="b"),
            ),
        )
        assert not record.has_logprobs


class TestSplitDataset:
    def test_cardinality_and_disjointness(self):
        split = split_dataset(["a", "b", "c", "d"], seed=7, dev_fraction=0.5)
        assert len(split.dev_ids) == 2
        assert len(split.test_ids) == 2
        assert not split.dev_ids & split.test_ids
        assert split.all_ids == {"a", "b", "c", "d"}

    def test_deterministic_given_seed(self):
        ids = ["s%d" % i for i in range(37)]
        first = split_dataset(ids, seed=123)
        second = split_dataset(list(reversed(ids)), seed=123)
        assert first == second

    def test_seed_changes_split(self):
        ids = ["s%d" % i for i in range(40)]
        assert split_dataset(ids, 1).dev_ids != split_dataset(ids, 2).dev_ids

    def test_dev_size_rounds_half_up(self):
        split = split_dataset(["a", "b", "c"], seed=0, dev_fraction=0.5)
        assert len(split.dev_ids) == 2  # round(1.5) half-up

    def test_too_few_ids(self):
        with pytest.raises(DatasetError, match="split needs >=2 samples"):
            split_dataset(["only"], seed=0)

    def test_fraction_bounds(self):
        with pytest.raises(DatasetError, match="dev_fraction"):
            split_dataset(["a", "b"], seed=0, dev_fraction=1.0)

    def test_overlapping_split_rejected(self):
        with pytest.raises(DatasetError, match="overlap"):
            DatasetSplit(dev_ids=frozenset({"a"}), test_ids=frozenset({"a", "b"}), seed=0)

    def test_fraction_extremes_keep_both_sides_nonempty_or_not(self):
        # tiny fractions may empty one side; the type allows it, the
        # cardinality just follows the rounding rule
        split = split_dataset(["a", "b", "c", "d"], seed=0, dev_fraction=0.1)
        assert len(split.dev_ids) == 0 or len(split.dev_ids) == 1
        assert math.isclose(len(split.dev_ids) + len(split.test_ids), 4)
