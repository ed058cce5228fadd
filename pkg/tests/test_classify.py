import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from templot import classify as C
from templot.core import BoundingBox, ImageBuffer, SegmentMask
from templot.errors import DimensionMismatch, ZeroVector
from templot.histfilter import ColorHistogram, TemplateEntry
from templot.proposals import make_proposal


def solid_image(color, w=32, h=32):
    px = np.zeros((h, w, 3), dtype=np.uint8)
    px[:, :] = color
    return ImageBuffer(px)


class TestPreprocess:
    def test_mean_color_gives_near_zero_tensor(self):
        # (124, 116, 104) is within 2/255 of the ImageNet mean per channel
        t = C.preprocess_crop(solid_image((124, 116, 104), 224, 224))
        assert t.shape == (224, 224, 3)
        assert np.abs(t).max() < 0.02

    def test_output_shape_contract(self):
        rng = np.random.default_rng(0)
        crop = ImageBuffer(rng.integers(0, 256, (17, 63, 3)).astype(np.uint8))
        assert C.preprocess_crop(crop).shape == (224, 224, 3)

    def test_resize_roundtrip_through_upscale(self):
        # nearest-neighbor 2x upscale followed by bilinear downscale-by-2
        # must land back on the original values (half-pixel-center sampling)
        rng = np.random.default_rng(1)
        base = rng.integers(0, 256, (56, 56, 3)).astype(np.uint8)
        upscaled = np.repeat(np.repeat(base, 2, axis=0), 2, axis=1)
        back = C.bilinear_resize(upscaled.astype(np.float64) / 255.0, 56, 56)
        assert np.abs(back - base.astype(np.float64) / 255.0).max() < 2.0 / 255.0

    def test_alpha_composites_over_midgray(self):
        px = np.zeros((8, 8, 4), dtype=np.uint8)  # fully transparent
        t = C.preprocess_crop(ImageBuffer(px))
        expected = (128.0 / 255.0 - C.IMAGENET_MEAN) / C.IMAGENET_STD
        assert np.abs(t - expected).max() < 1e-12


class TestReferenceExtract:
    def test_deterministic_and_normalized(self):
        rng = np.random.default_rng(2)
        crop = ImageBuffer(rng.integers(0, 256, (40, 40, 3)).astype(np.uint8))
        a = C.reference_extract(crop)
        b = C.reference_extract(crop)
        assert (a == b).all()
        assert a.shape == (768,)
        assert abs(float(np.linalg.norm(a)) - 1.0) < 1e-6

    def test_scale_robustness(self):
        rng = np.random.default_rng(3)
        base = rng.integers(0, 256, (48, 48, 3)).astype(np.uint8)
        a = C.reference_extract(ImageBuffer(base))
        up = np.repeat(np.repeat(base, 2, axis=0), 2, axis=1)
        b = C.reference_extract(ImageBuffer(up))
        assert float(np.dot(a, b)) > 0.99


class TestMinMaxScale:
    def test_midpoint(self):
        stats = C.TemplateFeatureStats(mins=np.array([2.0]), maxs=np.array([6.0]))
        assert C.minmax_scale(np.array([4.0]), stats)[0] == pytest.approx(0.5)

    def test_endpoints(self):
        stats = C.TemplateFeatureStats(mins=np.array([2.0]), maxs=np.array([6.0]))
        assert C.minmax_scale(np.array([2.0]), stats)[0] == 0.0
        assert C.minmax_scale(np.array([6.0]), stats)[0] == 1.0

    def test_degenerate_dimension(self):
        stats = C.TemplateFeatureStats(mins=np.array([3.0, 0.0]), maxs=np.array([3.0, 1.0]))
        out = C.minmax_scale(np.array([99.0, 0.25]), stats)
        assert out[0] == 0.5 and out[1] == 0.25

    def test_dimension_mismatch(self):
        stats = C.TemplateFeatureStats(mins=np.zeros(3), maxs=np.ones(3))
        with pytest.raises(DimensionMismatch):
            C.minmax_scale(np.zeros(4), stats)


class TestEmbeddingDissimilarity:
    def test_identity(self):
        v = np.array([1.0, 2.0, 3.0])
        assert C.embedding_dissimilarity(v, v) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal(self):
        assert C.embedding_dissimilarity(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(1.0)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            a = rng.standard_normal(16)
            b = rng.standard_normal(16)
            dot = sum(float(x) * float(y) for x, y in zip(a, b))
            na = math.sqrt(sum(float(x) ** 2 for x in a))
            nb = math.sqrt(sum(float(y) ** 2 for y in b))
            assert C.embedding_dissimilarity(a, b) == pytest.approx(1 - dot / (na * nb), abs=1e-12)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            C.embedding_dissimilarity(np.zeros(4), np.ones(4))


class TestPatchDissimilarity:
    def test_identity_of_indiscernibles(self):
        rng = np.random.default_rng(5)
        a = ImageBuffer(rng.integers(0, 256, (30, 30, 3)).astype(np.uint8))
        assert C.patch_dissimilarity(a, a) == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            a = ImageBuffer(rng.integers(0, 256, (20, 25, 3)).astype(np.uint8))
            b = ImageBuffer(rng.integers(0, 256, (31, 18, 3)).astype(np.uint8))
            assert C.patch_dissimilarity(a, b) == C.patch_dissimilarity(b, a)

    def test_black_vs_white_closed_form(self):
        black = solid_image((0, 0, 0), 224, 224)
        white = solid_image((255, 255, 255), 224, 224)
        expected = float(np.mean(1.0 / C.IMAGENET_STD))
        assert C.patch_dissimilarity(black, white) == pytest.approx(expected, abs=1e-9)


def _proposal_at(x0, y0, size, pid=0, image=None):
    if image is None:
        rng = np.random.default_rng(7)
        image = ImageBuffer(rng.integers(0, 256, (128, 128, 3)).astype(np.uint8))
    bitmap = np.zeros((image.height, image.width), dtype=bool)
    bitmap[y0:y0 + size, x0:x0 + size] = True
    return make_proposal(pid, image, bitmap)


def _template(class_id):
    px = np.zeros((16, 16, 4), dtype=np.uint8)
    px[:, :, :3] = (class_id * 20 % 256, 100, 150)
    px[:, :, 3] = 255
    return TemplateEntry(
        class_id=class_id,
        name=f"t{class_id}",
        image=ImageBuffer(px),
        histogram=ColorHistogram(8, np.ones(512, dtype=np.int64)),
        pixel_area=256,
    )


class TestClassifyProposal:
    def test_argmin_below_threshold(self):
        p = _proposal_at(10, 10, 20)
        scores = {0: 0.12, 1: 0.30}
        out = C.classify_proposal(
            p, [(_template(0), 0.9), (_template(1), 0.8)], lambda pr, t: scores[t.class_id], 0.7
        )
        assert out.result is not None
        assert out.result.class_id == 0
        assert out.result.score == 0.12
        assert out.pairs_evaluated == 2

    def test_all_above_threshold(self):
        p = _proposal_at(10, 10, 20)
        out = C.classify_proposal(p, [(_template(0), 0.9)], lambda pr, t: 0.9, 0.7)
        assert out.result is None

    def test_tie_breaks_by_correlation_then_class(self):
        p = _proposal_at(10, 10, 20)
        out = C.classify_proposal(
            p,
            [(_template(2), 0.7), (_template(1), 0.9), (_template(3), 0.9)],
            lambda pr, t: 0.5,
            0.7,
        )
        assert out.result.class_id == 1  # higher correlation wins, then lower id

    def test_failing_pair_skipped_and_counted(self):
        from templot.errors import DataError

        p = _proposal_at(10, 10, 20)

        def scorer(pr, t):
            if t.class_id == 0:
                raise DataError("corrupt")
            return 0.2

        out = C.classify_proposal(p, [(_template(0), 0.9), (_template(1), 0.8)], scorer, 0.7)
        assert out.result.class_id == 1
        assert out.pairs_failed == 1

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(8)
        p = _proposal_at(5, 5, 30)
        templates = [(_template(i), float(rng.random())) for i in range(6)]
        raw = {t.class_id: float(rng.random()) for t, _ in templates}
        base = C.classify_proposal(p, templates, lambda pr, t: raw[t.class_id], 0.8)
        mono = C.classify_proposal(
            p, templates, lambda pr, t: math.exp(raw[t.class_id]), math.exp(0.8)
        )
        assert base.result.class_id == mono.result.class_id


def _match(score, x0, y0, size=20, class_id=0):
    bbox = BoundingBox(x0, y0, x0 + size, y0 + size)
    mask = SegmentMask(width=256, height=256, runs=(256 * 256,))
    return C.MatchResult(class_id=class_id, score=score, bbox=bbox, mask=mask)


class TestNms:
    def test_keeps_best_overlapping(self):
        kept = C.nms([_match(0.3, 0, 0), _match(0.2, 5, 0)], 0.10)
        assert len(kept) == 1 and kept[0].score == 0.2

    def test_keeps_low_overlap_pairs(self):
        a, b = _match(0.2, 0, 0), _match(0.3, 19, 19)
        from templot.core import iou

        assert iou(a.bbox, b.bbox) < 0.10
        assert len(C.nms([a, b], 0.10)) == 2

    def test_threshold_is_inclusive(self):
        # overlap exactly at the threshold survives ("more than 10%" suppresses)
        a = _match(0.2, 0, 0, size=10)
        b = _match(0.3, 0, 5, size=10)
        from templot.core import iou

        t = iou(a.bbox, b.bbox)
        assert len(C.nms([a, b], t)) == 2
        assert len(C.nms([a, b], t - 1e-9)) == 1

    def test_coverage_mode(self):
        outer = _match(0.2, 0, 0, size=40)
        inner = _match(0.3, 5, 5, size=10)
        assert len(C.nms([outer, inner], 0.10, "coverage")) == 1
        assert len(C.nms([outer, inner], 0.10, "iou")) == 2

    def test_idempotent_on_random_sets(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            n = int(rng.integers(1, 12))
            matches = [
                _match(
                    float(rng.random()),
                    int(rng.integers(0, 100)),
                    int(rng.integers(0, 100)),
                    size=int(rng.integers(5, 40)),
                    class_id=int(rng.integers(0, 4)),
                )
                for _ in range(n)
            ]
            once = C.nms(matches, 0.10)
            twice = C.nms(once, 0.10)
            assert once == twice
            assert len(once) <= len(matches)

    @given(st.integers(0, 2 ** 31 - 1), st.floats(0.05, 0.5))
    @settings(max_examples=100, deadline=None)
    def test_no_accepted_pair_overlaps(self, seed, threshold):
        rng = np.random.default_rng(seed)
        matches = [
            _match(
                float(rng.random()),
                int(rng.integers(0, 80)),
                int(rng.integers(0, 80)),
                size=int(rng.integers(5, 50)),
            )
            for _ in range(int(rng.integers(1, 10)))
        ]
        from templot.core import iou

        kept = C.nms(matches, threshold)
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert iou(a.bbox, b.bbox) <= threshold


class TestFeatureFiles:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(10)
        mat = rng.standard_normal((5, 12)).astype(np.float32)
        path = str(tmp_path / "f.tbof")
        C.write_features(path, [3, 1, 4, 1, 5], mat)
        ids, back = C.read_features(path)
        assert ids == [3, 1, 4, 1, 5]
        assert np.allclose(back, mat, atol=0)

    def test_header_layout(self, tmp_path):
        path = str(tmp_path / "f.tbof")
        C.write_features(path, [0], np.zeros((1, 3), dtype=np.float32))
        blob = open(path, "rb").read()
        assert blob[:4] == b"TBOF"
        import struct

        version, dim, count = struct.unpack_from("<HII", blob, 4)
        assert (version, dim, count) == (1, 3, 1)
        assert len(blob) == 14 + 12

    def test_bad_magic(self, tmp_path):
        path = str(tmp_path / "f.tbof")
        with open(path, "wb") as fh:
            fh.write(b"NOPE" + b"\0" * 20)
        from templot.errors import SchemaError

        with pytest.raises(SchemaError):
            C.read_features(path)

    def test_pair_scores_roundtrip(self, tmp_path):
        from templot.core import write_json

        path = str(tmp_path / "pairs.json")
        write_json(path, {"pairs": [{"proposal_id": 1, "class_id": 2, "score": 0.25}]})
        table = C.read_pair_scores(path)
        assert table == {(1, 2): 0.25}

    def test_pair_scores_reject_negative(self, tmp_path):
        from templot.core import write_json
        from templot.errors import SchemaError

        path = str(tmp_path / "pairs.json")
        write_json(path, {"pairs": [{"proposal_id": 1, "class_id": 2, "score": -0.5}]})
        with pytest.raises(SchemaError):
            C.read_pair_scores(path)
