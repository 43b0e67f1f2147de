from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scopetrack.errors import DimensionError, MaskFormatError
from scopetrack.model import (
    BBox,
    ClassDistribution,
    QuerySlot,
    RleMask,
    box_iou,
    mask_iou,
    rle_decode,
    rle_encode,
    validate_stream,
)
from conftest import make_empty_slot, make_slot, make_stream, unit_vec


def pixel_iou(a: BBox, b: BBox, size: int = 16) -> float:
    """Rasterization oracle: count half-open integer pixels."""
    grid_a = np.zeros((size, size), dtype=bool)
    grid_b = np.zeros((size, size), dtype=bool)
    grid_a[int(a.y1):int(a.y2), int(a.x1):int(a.x2)] = True
    grid_b[int(b.y1):int(b.y2), int(b.x1):int(b.x2)] = True
    union = (grid_a | grid_b).sum()
    return (grid_a & grid_b).sum() / union if union else 0.0


class TestRle:
    def test_all_background(self):
        mask = rle_encode(np.zeros((2, 2)))
        assert mask.runs == (4,)
        assert np.array_equal(rle_decode(mask), np.zeros((2, 2), dtype=np.uint8))

    def test_all_foreground(self):
        mask = rle_encode(np.ones((2, 2)))
        assert mask.runs == (0, 4)
        assert np.array_equal(rle_decode(mask), np.ones((2, 2), dtype=np.uint8))

    def test_hand_walked_scan(self):
        # row-major flattening of [[1,0,0],[0,1,1]] is 1 0 0 0 1 1
        grid = np.array([[1, 0, 0], [0, 1, 1]], dtype=np.uint8)
        mask = rle_encode(grid)
        assert mask.runs == (0, 1, 3, 2)
        assert np.array_equal(rle_decode(mask), grid)

    def test_empty_grid_rejected(self):
        with pytest.raises(DimensionError):
            rle_encode(np.zeros((0, 3)))

    def test_malformed_runs_rejected(self):
        with pytest.raises(MaskFormatError):
            RleMask(height=2, width=2, runs=(3,))
        with pytest.raises(MaskFormatError):
            RleMask(height=2, width=2, runs=(1, 0, 3))
        with pytest.raises(MaskFormatError):
            RleMask(height=2, width=2, runs=(-1, 5))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 64), st.integers(1, 64))
    @settings(max_examples=150, deadline=None)
    def test_round_trip(self, seed, h, w):
        rng = np.random.Generator(np.random.Philox(seed))
        grid = (rng.random((h, w)) < rng.random()).astype(np.uint8)
        assert np.array_equal(rle_decode(rle_encode(grid)), grid)


class TestBoxIou:
    def test_identity(self):
        assert box_iou(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2)) == 1.0

    def test_disjoint(self):
        assert box_iou(BBox(0, 0, 1, 1), BBox(2, 2, 3, 3)) == 0.0

    def test_partial_overlap_matches_rasterization(self):
        a, b = BBox(0, 0, 2, 2), BBox(1, 0, 3, 2)
        # pixel oracle: intersection 2 px, union 6 px
        assert pixel_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)
        assert box_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)

    def test_degenerate_is_zero(self):
        assert box_iou(BBox(1, 1, 1, 1), BBox(0, 0, 2, 2)) == 0.0
        assert box_iou(BBox(1, 1, 1, 1), BBox(1, 1, 1, 1)) == 0.0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_symmetric_bounded_and_matches_oracle(self, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        x1, y1 = rng.integers(0, 12, size=2)
        x2, y2 = x1 + rng.integers(0, 5), y1 + rng.integers(0, 5)
        u1, v1 = rng.integers(0, 12, size=2)
        u2, v2 = u1 + rng.integers(0, 5), v1 + rng.integers(0, 5)
        a = BBox(float(x1), float(y1), float(x2), float(y2))
        b = BBox(float(u1), float(v1), float(u2), float(v2))
        iou = box_iou(a, b)
        assert iou == box_iou(b, a)
        assert 0.0 <= iou <= 1.0
        assert iou == pytest.approx(pixel_iou(a, b), abs=1e-12)

    def test_bad_box_rejected(self):
        with pytest.raises(DimensionError):
            BBox(2, 0, 1, 1)
        with pytest.raises(DimensionError):
            BBox(0, 0, float("nan"), 1)


class TestMaskIou:
    def test_identity(self):
        m = rle_encode(np.array([[1, 0], [1, 1]]))
        assert mask_iou(m, m) == 1.0

    def test_zero_vs_full(self):
        zeros = rle_encode(np.zeros((3, 3)))
        ones = rle_encode(np.ones((3, 3)))
        assert mask_iou(zeros, ones) == 0.0

    def test_counted_overlap(self):
        # |A|=2, |B|=3, intersection 1 -> 1/4
        a = rle_encode(np.array([[1, 1, 0], [0, 0, 0]]))
        b = rle_encode(np.array([[0, 1, 1], [1, 0, 0]]))
        assert mask_iou(a, b) == 0.25

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            mask_iou(rle_encode(np.ones((2, 2))), rle_encode(np.ones((2, 3))))

    def test_matches_decode_oracle_on_random_pairs(self):
        rng = np.random.Generator(np.random.Philox(11))
        for _ in range(1000):
            h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            ga = (rng.random((h, w)) < rng.random()).astype(np.uint8)
            gb = (rng.random((h, w)) < rng.random()).astype(np.uint8)
            a, b = rle_encode(ga), rle_encode(gb)
            da, db = rle_decode(a).astype(bool), rle_decode(b).astype(bool)
            union = int((da | db).sum())
            want = int((da & db).sum()) / union if union else 0.0
            assert mask_iou(a, b) == want
            assert mask_iou(a, b) == mask_iou(b, a)


class TestClassDistribution:
    def test_residual_mass(self):
        dist = ClassDistribution((0.3, 0.2))
        assert dist.no_object_mass == pytest.approx(0.5)

    def test_overfull_rejected(self):
        with pytest.raises(DimensionError):
            ClassDistribution((0.8, 0.4))


class TestValidateStream:
    def test_well_formed(self, header):
        stream = make_stream(header, [
            [make_slot(unit_vec(0)), make_empty_slot(unit_vec(1))]
            for _ in range(3)
        ])
        assert validate_stream(stream) == []

    def test_missing_slot_names_frame(self, header):
        stream = make_stream(header, [
            [make_slot(unit_vec(0)), make_empty_slot(unit_vec(1))],
            [make_slot(unit_vec(0))],
        ])
        violations = validate_stream(stream)
        assert len(violations) == 1
        assert "frame 1" in violations[0]

    def test_wrong_embedding_length_names_slot(self, header):
        stream = make_stream(header, [
            [make_slot(unit_vec(0)), make_slot((1.0, 0.0), probs=(0.9, 0.0))],
        ])
        violations = validate_stream(stream)
        assert len(violations) == 1
        assert "slot 1" in violations[0]

    def test_non_increasing_frame_index(self, header):
        from scopetrack.model import FramePrediction, VideoStream
        frames = (
            FramePrediction(3, (make_slot(unit_vec(0)), make_empty_slot(unit_vec(1)))),
            FramePrediction(3, (make_slot(unit_vec(0)), make_empty_slot(unit_vec(1)))),
        )
        stream = VideoStream(header=header, frames=frames)
        assert any("strictly increasing" in v for v in validate_stream(stream))

    def test_non_finite_embedding_rejected(self):
        with pytest.raises(DimensionError):
            QuerySlot(
                embedding=(float("inf"), 0.0),
                box=BBox(0, 0, 1, 1),
                classes=ClassDistribution((0.5,)),
            )
