import os
from dataclasses import replace

import numpy as np
import pytest

from templot import synth
from templot.classify import embedding_dissimilarity, reference_extract
from templot.core import bbox_from_mask, iou
from templot.errors import PlacementFailure
from templot.histfilter import load_templates
from templot.textremoval import text_coverage

SPEC = synth.SceneSpec(width=640, height=420, class_count=6, icons_min=4, icons_max=6, seed=3)


@pytest.fixture(scope="module")
def templates():
    return synth.generate_templates(6, size=40, seed=3)


class TestTemplates:
    def test_deterministic(self, templates):
        again = synth.generate_templates(6, size=40, seed=3)
        for a, b in zip(templates, again):
            assert (a.image.pixels == b.image.pixels).all()

    def test_distinct_class_ids(self, templates):
        assert [t.class_id for t in templates] == list(range(6))

    def test_pairwise_feature_distinctness(self, templates):
        feats = [reference_extract(t.image) for t in templates]
        for i in range(len(feats)):
            for j in range(i + 1, len(feats)):
                assert embedding_dissimilarity(feats[i], feats[j]) >= 0.05

    def test_written_set_loads(self, tmp_path, templates):
        index = synth.write_templates(str(tmp_path / "templates"), templates)
        entries = load_templates(index)
        assert len(entries) == 6
        assert all(e.pixel_area > 0 for e in entries)


class TestScene:
    def test_deterministic(self, templates):
        a = synth.generate_scene(SPEC, templates, "x")
        b = synth.generate_scene(SPEC, templates, "x")
        assert (a.image.pixels == b.image.pixels).all()
        assert a.text_mask == b.text_mask
        assert [m.runs for m in a.icon_masks] == [m.runs for m in b.icon_masks]

    def test_annotations_match_masks(self, templates):
        bundle = synth.generate_scene(SPEC, templates, "x")
        for entry, mask in zip(bundle.annotations.entries, bundle.icon_masks):
            assert entry.bbox == bbox_from_mask(mask)

    def test_icons_disjoint_and_inside(self, templates):
        bundle = synth.generate_scene(SPEC, templates, "x")
        boxes = [e.bbox for e in bundle.annotations.entries]
        for i, a in enumerate(boxes):
            assert not a.touches_border(SPEC.width, SPEC.height)
            for b in boxes[i + 1:]:
                assert iou(a, b) == 0.0

    def test_no_text_means_empty_artifacts(self, templates):
        bundle = synth.generate_scene(replace(SPEC, text_density=0.0), templates, "x")
        assert bundle.text_mask.area == 0
        assert bundle.ocr_boxes == []

    def test_text_density_produces_text(self, templates):
        bundle = synth.generate_scene(replace(SPEC, text_density=0.6), templates, "x")
        assert bundle.text_mask.area > 0
        assert len(bundle.ocr_boxes) > 0
        # pure-ink pixels carry exactly the font color
        pure = bundle.pure_text_mask.to_bitmap()
        assert pure.any()
        px = bundle.image.pixels[pure]
        assert (px == np.array(SPEC.font_color)).all()

    def test_heavy_coverage_present(self, templates):
        bundle = synth.generate_scene(
            replace(SPEC, text_density=0.8, heavy_text_fraction=1.0, seed=5), templates, "x"
        )
        covs = [text_coverage(e.bbox, bundle.text_mask) for e in bundle.annotations.entries]
        assert max(covs) > 0.4

    def test_icon_areas_inside_prefilter_bounds(self, templates):
        by_class = {t.class_id: t for t in templates}
        for seed in range(4):
            bundle = synth.generate_scene(replace(SPEC, seed=seed), templates, "x")
            for entry, mask in zip(bundle.annotations.entries, bundle.icon_masks):
                t = by_class[entry.class_id]
                t_area = int((t.image.pixels[:, :, 3] > 0).sum())
                ratio = mask.area / t_area
                assert 0.25 < ratio < 2.0

    def test_font_color_guard(self, templates):
        dominant = synth._dominant_color(templates[0].image)
        clash = tuple(int(v) for v in dominant)
        with pytest.raises(ValueError):
            synth.generate_scene(replace(SPEC, font_color=clash), templates, "x")

    def test_placement_failure_when_too_dense(self, templates):
        dense = synth.SceneSpec(
            width=120, height=90, class_count=6, icons_min=60, icons_max=60, seed=0
        )
        with pytest.raises(PlacementFailure):
            synth.generate_scene(dense, templates, "x")


class TestDataset:
    def test_layout_and_reload(self, tmp_path, templates):
        out = str(tmp_path / "ds")
        manifest = synth.write_dataset(out, SPEC, image_count=2, template_size=40)
        assert manifest["image_count"] == 2
        for sub in ("images", "annotations", "masks", "textmasks", "ocr", "templates"):
            assert os.path.isdir(os.path.join(out, sub))
        from templot.proposals import load_manifest

        loaded = load_manifest(os.path.join(out, "masks", "scene_0000.json"))
        assert loaded.image_id == "scene_0000"
        assert len(loaded.proposals) >= SPEC.icons_min
        # masks in the manifest reproduce the stored annotations exactly
        from templot.evaluation import GroundTruthAnnotation

        ann = GroundTruthAnnotation.load(os.path.join(out, "annotations", "scene_0000.json"))
        assert [p.bbox for p in loaded.proposals] == [e.bbox for e in ann.entries]

    def test_rewrite_is_byte_identical(self, tmp_path):
        out1 = str(tmp_path / "a")
        out2 = str(tmp_path / "b")
        spec = replace(SPEC, text_density=0.5)
        synth.write_dataset(out1, spec, image_count=1, template_size=40)
        synth.write_dataset(out2, spec, image_count=1, template_size=40)
        for sub in ("images/scene_0000.png", "annotations/scene_0000.json", "manifest.json"):
            a = open(os.path.join(out1, sub), "rb").read()
            b = open(os.path.join(out2, sub), "rb").read()
            assert a == b
