import numpy as np
import pytest

from templot.core import ImageBuffer, SegmentMask, bbox_from_mask, write_json
from templot.errors import DimensionMismatch, InvalidGrid, SchemaError
from templot.proposals import (
    SceneTruth,
    SegmenterParams,
    load_manifest,
    load_manifest_masks,
    oracle_segment,
    point_grid,
    write_manifest,
)


class TestPointGrid:
    def test_paper_geometry(self):
        pts = point_grid(1800, 697, 64)
        assert len(pts) == 64 * 25 == 1600

    def test_square_image(self):
        pts = point_grid(100, 100, 4)
        assert len(pts) == 16

    def test_all_points_inside(self):
        pts = point_grid(100, 50, 10)
        assert len(pts) == 10 * 5
        for x, y in pts:
            assert 0 < x < 100 and 0 < y < 50

    def test_no_duplicate_points(self):
        pts = point_grid(640, 480, 16)
        assert len(set(pts)) == len(pts)

    def test_transpose_symmetry(self):
        a = point_grid(200, 80, 12)
        b = point_grid(80, 200, 12)
        assert sorted((y, x) for x, y in a) == sorted((x, y) for x, y in b)

    def test_rejects_degenerate(self):
        with pytest.raises(InvalidGrid):
            point_grid(100, 100, 1)
        with pytest.raises(InvalidGrid):
            point_grid(10000, 10, 2)  # short side rounds to zero


def _scene_image(w=64, h=48):
    rng = np.random.default_rng(0)
    return ImageBuffer(rng.integers(0, 256, (h, w, 3)).astype(np.uint8))


def _disk_mask(w, h, cx, cy, r):
    yy, xx = np.mgrid[0:h, 0:w]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


class TestManifest:
    def test_roundtrip(self, tmp_path):
        image = _scene_image()
        img_path = tmp_path / "img.png"
        image.save_png(str(img_path))
        masks = [
            SegmentMask.from_bitmap(_disk_mask(64, 48, 20, 20, 6)),
            SegmentMask.from_bitmap(_disk_mask(64, 48, 45, 30, 8)),
        ]
        path = tmp_path / "m.json"
        write_manifest(str(path), "img", "img.png", masks, confidences=[0.9, None])
        loaded = load_manifest(str(path))
        assert loaded.image_id == "img"
        assert len(loaded.proposals) == 2
        assert [p.mask for p in loaded.proposals] == masks
        assert loaded.proposals[0].source_confidence == 0.9
        assert loaded.proposals[1].source_confidence is None
        # bbox recomputed from the mask, not trusted
        for p in loaded.proposals:
            assert p.bbox == bbox_from_mask(p.mask)
            assert (p.crop.height, p.crop.width) == (p.bbox.height, p.bbox.width)
        ii, mm, cc = load_manifest_masks(str(path))
        assert ii == "img" and mm == masks

    def test_empty_mask_dropped_with_count(self, tmp_path):
        image = _scene_image()
        image.save_png(str(tmp_path / "img.png"))
        masks = [
            SegmentMask.from_bitmap(_disk_mask(64, 48, 20, 20, 6)),
            SegmentMask.from_bitmap(np.zeros((48, 64), dtype=bool)),
            SegmentMask.from_bitmap(_disk_mask(64, 48, 45, 30, 8)),
        ]
        path = tmp_path / "m.json"
        write_manifest(str(path), "img", "img.png", masks)
        loaded = load_manifest(str(path))
        assert len(loaded.proposals) == 2
        assert loaded.empty_dropped == 1

    def test_dimension_mismatch(self, tmp_path):
        image = _scene_image()
        image.save_png(str(tmp_path / "img.png"))
        bad = SegmentMask.from_bitmap(np.ones((10, 10), dtype=bool))
        path = tmp_path / "m.json"
        write_manifest(str(path), "img", "img.png", [bad])
        with pytest.raises(DimensionMismatch):
            load_manifest(str(path))

    def test_schema_error(self, tmp_path):
        path = tmp_path / "m.json"
        write_json(str(path), {"image_id": "x"})
        with pytest.raises(SchemaError):
            load_manifest(str(path))

    def test_missing_image(self, tmp_path):
        from templot.errors import ImageLoadError

        mask = SegmentMask.from_bitmap(np.ones((4, 4), dtype=bool))
        path = tmp_path / "m.json"
        write_manifest(str(path), "img", "nowhere.png", [mask])
        with pytest.raises(ImageLoadError):
            load_manifest(str(path))

    def test_segmenter_params_roundtrip(self):
        params = SegmenterParams(points_long_side=32, predicted_iou_threshold=0.88)
        assert SegmenterParams.from_json(params.to_json()) == params


class TestOracleSegment:
    def _truth(self):
        image = _scene_image(128, 96)
        masks = [
            SegmentMask.from_bitmap(_disk_mask(128, 96, 30, 30, 10)),
            SegmentMask.from_bitmap(_disk_mask(128, 96, 90, 60, 12)),
        ]
        return SceneTruth(image=image, icon_masks=masks, text_boxes=[])

    def test_zero_perturbation_is_identity(self):
        truth = self._truth()
        proposals = oracle_segment(truth, perturbation=0, seed=3)
        for p, m in zip(proposals[:2], truth.icon_masks):
            assert p.mask == m

    def test_deterministic(self):
        truth = self._truth()
        a = oracle_segment(truth, perturbation=2, seed=3)
        b = oracle_segment(truth, perturbation=2, seed=3)
        assert [p.mask for p in a] == [p.mask for p in b]
        assert [p.bbox for p in a] == [p.bbox for p in b]

    def test_perturbation_bounds_bbox(self):
        truth = self._truth()
        proposals = oracle_segment(truth, perturbation=2, seed=11)
        for p, m in zip(proposals[:2], truth.icon_masks):
            gt_box = bbox_from_mask(m)
            assert abs(p.bbox.x_min - gt_box.x_min) <= 2
            assert abs(p.bbox.y_min - gt_box.y_min) <= 2
            assert abs(p.bbox.x_max - gt_box.x_max) <= 2
            assert abs(p.bbox.y_max - gt_box.y_max) <= 2

    def test_distractor_count(self):
        truth = self._truth()
        proposals = oracle_segment(truth, perturbation=0, seed=3, distractor_factor=2.0)
        assert len(proposals) == 2 + 4
        # distractors avoid icons entirely
        icon_boxes = [bbox_from_mask(m) for m in truth.icon_masks]
        for p in proposals[2:]:
            assert all(p.bbox.intersection_area(b) == 0 for b in icon_boxes)
