import math

import numpy as np
import pytest

from cue.errors import DatasetError, MetricUndefinedError
from cue.fusion import (
    FusionConfig,
    fuse,
    grid_points,
    grid_search_w,
    min_max_normalize,
    stable_range,
)
from cue.metrics import auroc
from cue.types import Method, ScoreSet

from oracles import auroc_pairwise, grid_search_oracle, stable_range_oracle


def scoreset(values: dict, method=Method.PE, normalized=False):
    return ScoreSet(method=method, scores=values, normalized=normalized)


class TestFusionConfig:
    def test_auto_needs_sane_grid_step(self):
        FusionConfig(w="auto", grid_step=0.5)
        with pytest.raises(ValueError):
            FusionConfig(w="auto", grid_step=0.0)
        with pytest.raises(ValueError):
            FusionConfig(w="auto", grid_step=0.6)

    def test_fixed_w_range(self):
        FusionConfig(w=0.0)
        FusionConfig(w=1.0)
        with pytest.raises(ValueError):
            FusionConfig(w=1.5)
        with pytest.raises(ValueError):
            FusionConfig(w="sometimes")

    def test_objective_fixed(self):
        with pytest.raises(ValueError):
            FusionConfig(objective="f1")


class TestMinMaxNormalize:
    def test_hand_example(self):
        result = min_max_normalize(scoreset({"a": 2.0, "b": 4.0, "c": 6.0}))
        assert result.scores == {"a": 0.0, "b": 0.5, "c": 1.0}
        assert result.normalized

    def test_constant_set_maps_to_half(self):
        result = min_max_normalize(scoreset({"a": 3.0, "b": 3.0, "c": 3.0}))
        assert result.scores == {"a": 0.5, "b": 0.5, "c": 0.5}

    def test_extremes_unchanged(self):
        result = min_max_normalize(scoreset({"a": 0.0, "b": 1.0}))
        assert result.scores == {"a": 0.0, "b": 1.0}

    def test_non_finite_names_id(self):
        with pytest.raises(DatasetError, match="badid"):
            min_max_normalize(scoreset({"ok": 1.0, "badid": math.inf}))

    def test_empty_set(self):
        with pytest.raises(DatasetError, match="empty"):
            min_max_normalize(scoreset({}))

    def test_preserves_auroc_when_spread(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            scores = {"s%d" % i: float(rng.normal()) for i in range(30)}
            labels = {i: int(rng.integers(0, 2)) for i in scores}
            if len(set(labels.values())) < 2:
                continue
            normalized = min_max_normalize(scoreset(scores))
            assert auroc(normalized.scores, labels) == pytest.approx(
                auroc(scores, labels), abs=1e-12
            )


class TestFuse:
    def test_w_one_is_identity_on_normalized(self):
        norm = scoreset({"a": 0.2, "b": 0.9}, normalized=True)
        cor = scoreset({"a": 0.5, "b": 0.5}, method=Method.CORRECTOR, normalized=True)
        assert fuse(norm, cor, 1.0).scores == norm.scores

    def test_w_zero_is_identity_on_corrector(self):
        norm = scoreset({"a": 0.2, "b": 0.9}, normalized=True)
        cor = scoreset({"a": 0.4, "b": 0.6}, method=Method.CORRECTOR, normalized=True)
        assert fuse(norm, cor, 0.0).scores == cor.scores

    def test_hand_example(self):
        norm = scoreset({"a": 0.2}, normalized=True)
        cor = scoreset({"a": 0.8}, method=Method.CORRECTOR, normalized=True)
        assert fuse(norm, cor, 0.5).scores["a"] == pytest.approx(0.5, abs=1e-12)

    def test_output_method_and_range(self):
        norm = scoreset({"a": 0.0, "b": 1.0}, normalized=True)
        cor = scoreset({"a": 1.0, "b": 0.0}, method=Method.CORRECTOR, normalized=True)
        fused = fuse(norm, cor, 0.25)
        assert fused.method is Method.FUSED
        assert all(0.0 <= v <= 1.0 for v in fused.scores.values())

    def test_id_mismatch_lists_difference(self):
        norm = scoreset({"a": 0.2, "b": 0.9}, normalized=True)
        cor = scoreset({"a": 0.4, "zz": 0.6}, method=Method.CORRECTOR, normalized=True)
        with pytest.raises(DatasetError, match="symmetric difference.*b, zz"):
            fuse(norm, cor, 0.5)

    def test_rejects_unnormalized_inputs(self):
        norm = scoreset({"a": 3.0}, normalized=True)
        cor = scoreset({"a": 0.5}, method=Method.CORRECTOR, normalized=True)
        with pytest.raises(DatasetError, match="normalize first"):
            fuse(norm, cor, 0.5)

    def test_rejects_bad_weight(self):
        norm = scoreset({"a": 0.5}, normalized=True)
        cor = scoreset({"a": 0.5}, method=Method.CORRECTOR, normalized=True)
        with pytest.raises(DatasetError, match="weight"):
            fuse(norm, cor, 1.5)

    def test_monotone_in_both_inputs(self):
        cor = scoreset({"a": 0.3, "b": 0.3}, method=Method.CORRECTOR, normalized=True)
        lower = fuse(scoreset({"a": 0.2, "b": 0.2}, normalized=True), cor, 0.4)
        higher = fuse(scoreset({"a": 0.4, "b": 0.2}, normalized=True), cor, 0.4)
        assert higher.scores["a"] >= lower.scores["a"]
        assert higher.scores["b"] == lower.scores["b"]


class TestGridPoints:
    def test_default_step_has_1001_points(self):
        points = grid_points(0.001)
        assert len(points) == 1001
        assert points[0] == 0.0
        assert points[-1] == 1.0
        assert all(b > a for a, b in zip(points, points[1:]))

    def test_coarse_step(self):
        points = grid_points(0.25)
        assert points == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_uneven_step_still_ends_at_one(self):
        points = grid_points(0.3)
        assert points[-1] == 1.0
        assert points[0] == 0.0


class TestGridSearch:
    def setup_method(self):
        # corrector separates the labels perfectly; vanilla is constant
        self.labels = {"a": 1, "b": 0, "c": 1, "d": 0}
        self.cor = scoreset(
            {"a": 0.9, "b": 0.1, "c": 0.8, "d": 0.2},
            method=Method.CORRECTOR,
            normalized=True,
        )
        self.const = scoreset(
            {"a": 0.5, "b": 0.5, "c": 0.5, "d": 0.5}, normalized=True
        )

    def test_corrector_informative_vanilla_constant(self):
        w_star, curve = grid_search_w(
            self.const, self.cor, self.labels, FusionConfig(grid_step=0.1)
        )
        assert w_star == 0.0
        assert dict(curve)[0.0] == 1.0

    def test_vanilla_informative_corrector_constant(self):
        norm = scoreset(
            {"a": 0.9, "b": 0.1, "c": 0.8, "d": 0.2}, normalized=True
        )
        const_cor = scoreset(
            {"a": 0.5, "b": 0.5, "c": 0.5, "d": 0.5},
            method=Method.CORRECTOR,
            normalized=True,
        )
        w_star, curve = grid_search_w(
            norm, const_cor, self.labels, FusionConfig(grid_step=0.1)
        )
        # every w > 0 ties at AUROC 1; the smallest such w wins
        points = grid_points(0.1)
        assert w_star == points[1]
        values = dict(curve)
        assert values[0.0] == 0.5
        assert all(values[w] == 1.0 for w in points[1:])

    def test_identical_inputs_tie_everywhere(self):
        same = {"a": 0.9, "b": 0.1, "c": 0.8, "d": 0.2}
        w_star, curve = grid_search_w(
            scoreset(dict(same), normalized=True),
            scoreset(dict(same), method=Method.CORRECTOR, normalized=True),
            self.labels,
            FusionConfig(grid_step=0.25),
        )
        assert w_star == 0.0
        assert len({value for _, value in curve}) == 1

    def test_single_class_dev(self):
        labels = {"a": 1, "b": 1}
        with pytest.raises(MetricUndefinedError, match="AUROC undefined on one class"):
            grid_search_w(
                scoreset({"a": 0.1, "b": 0.9}, normalized=True),
                scoreset({"a": 0.2, "b": 0.8}, method=Method.CORRECTOR, normalized=True),
                labels,
                FusionConfig(grid_step=0.5),
            )

    def test_missing_dev_ids(self):
        with pytest.raises(DatasetError, match="dev ids missing"):
            grid_search_w(
                scoreset({"a": 0.1}, normalized=True),
                scoreset({"a": 0.2}, method=Method.CORRECTOR, normalized=True),
                {"a": 1, "zz": 0},
                FusionConfig(grid_step=0.5),
            )

    def test_matches_exhaustive_oracle_on_random_instances(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            n = int(rng.integers(6, 25))
            ids = ["s%d" % i for i in range(n)]
            labels = {i: int(rng.integers(0, 2)) for i in ids}
            if len(set(labels.values())) < 2:
                labels[ids[0]] = 0
                labels[ids[1]] = 1
            norm = {i: float(rng.random()) for i in ids}
            cor = {i: float(rng.random()) for i in ids}
            config = FusionConfig(grid_step=0.05)
            w_star, curve = grid_search_w(
                scoreset(norm, normalized=True),
                scoreset(cor, method=Method.CORRECTOR, normalized=True),
                labels,
                config,
            )
            oracle_w, oracle_curve = grid_search_oracle(
                norm, cor, labels, [w for w, _ in curve]
            )
            assert w_star == oracle_w
            for (w, value), (ow, ovalue) in zip(curve, oracle_curve):
                assert w == ow
                assert value == pytest.approx(ovalue, abs=1e-12)


class TestStableRange:
    def test_flat_curve_spans_everything(self):
        curve = [(w, 0.8) for w in grid_points(0.25)]
        assert stable_range(curve, 0.5, 0.01) == (0.0, 1.0)

    def test_isolated_spike(self):
        curve = [(0.0, 0.5), (0.25, 0.5), (0.5, 0.9), (0.75, 0.5), (1.0, 0.5)]
        assert stable_range(curve, 0.5, 0.01) == (0.5, 0.5)

    def test_contiguity_blocks_disconnected_points(self):
        # the 1.0 point is within tolerance but separated by a dip
        curve = [(0.0, 0.9), (0.25, 0.5), (0.5, 0.9), (0.75, 0.895), (1.0, 0.9)]
        assert stable_range(curve, 0.5, 0.01) == (0.5, 1.0)

    def test_w_star_must_be_on_grid(self):
        with pytest.raises(DatasetError, match="not on the curve grid"):
            stable_range([(0.0, 0.5), (1.0, 0.6)], 0.37, 0.01)

    def test_matches_linear_scan_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            ws = grid_points(0.1)
            values = [float(rng.random()) for _ in ws]
            curve = list(zip(ws, values))
            w_star = ws[int(np.argmax(values))]
            assert stable_range(curve, w_star, 0.05) == stable_range_oracle(
                curve, w_star, 0.05
            )
