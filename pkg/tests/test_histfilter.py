import math

import numpy as np
import pytest

from templot.core import ImageBuffer
from templot.errors import EmptyRegion, ZeroVariance
from templot.histfilter import (
    ColorHistogram,
    TemplateEntry,
    area_prefilter,
    compute_histogram,
    correlation_or_zero,
    histogram_correlation,
    load_templates,
    shortlist,
)


def uniform_crop(color, w=10, h=10):
    px = np.zeros((h, w, 3), dtype=np.uint8)
    px[:, :] = color
    return ImageBuffer(px)


def hist_from_counts(counts, bins=8):
    arr = np.zeros(bins ** 3, dtype=np.int64)
    for idx, c in counts.items():
        arr[idx] = c
    return ColorHistogram(bins_per_channel=bins, counts=arr)


def naive_hist(pixels, bins):
    counts = np.zeros(bins ** 3, dtype=np.int64)
    for r, g, b in pixels.reshape(-1, 3).astype(int):
        rb = r * bins // 256
        gb = g * bins // 256
        bb = b * bins // 256
        counts[(rb * bins + gb) * bins + bb] += 1
    return counts


class TestComputeHistogram:
    def test_uniform_red_single_bin(self):
        h = compute_histogram(uniform_crop((255, 0, 0)), bins_per_channel=8)
        idx = (7 * 8 + 0) * 8 + 0
        assert h.counts[idx] == 100
        assert h.total == 100

    def test_masked_subset(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[:4, :10] = True
        h = compute_histogram(uniform_crop((255, 0, 0)), mask=mask, bins_per_channel=8)
        assert h.total == 40

    def test_matches_naive_binning(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            px = rng.integers(0, 256, (7, 9, 3)).astype(np.uint8)
            h = compute_histogram(ImageBuffer(px), bins_per_channel=8)
            assert (h.counts == naive_hist(px, 8)).all()

    def test_rgba_defaults_to_alpha_mask(self):
        px = np.zeros((4, 4, 4), dtype=np.uint8)
        px[:2, :, :3] = (10, 20, 30)
        px[:2, :, 3] = 255
        h = compute_histogram(ImageBuffer(px))
        assert h.total == 8

    def test_empty_region(self):
        mask = np.zeros((10, 10), dtype=bool)
        with pytest.raises(EmptyRegion):
            compute_histogram(uniform_crop((1, 2, 3)), mask=mask)


class TestCorrelation:
    def test_self_correlation(self):
        h = hist_from_counts({0: 5, 9: 3, 100: 7})
        assert histogram_correlation(h, h) == pytest.approx(1.0)

    def test_disjoint_one_hot_closed_form(self):
        # Pearson of two disjoint one-hot vectors of length 512 is -1/511
        a = hist_from_counts({3: 1})
        b = hist_from_counts({77: 1})
        assert histogram_correlation(a, b) == pytest.approx(-1.0 / 511.0, abs=1e-12)

    def test_scale_invariance(self):
        h = hist_from_counts({0: 5, 9: 3, 100: 7})
        h3 = ColorHistogram(bins_per_channel=8, counts=h.counts * 3)
        assert histogram_correlation(h, h3) == pytest.approx(1.0)

    def test_symmetry_and_affine_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = ColorHistogram(8, rng.integers(0, 50, 512).astype(np.int64))
            b = ColorHistogram(8, rng.integers(0, 50, 512).astype(np.int64))
            ab = histogram_correlation(a, b)
            assert ab == pytest.approx(histogram_correlation(b, a), abs=1e-12)
            a_aff = ColorHistogram(8, (a.counts * 4 + 11).astype(np.int64))
            assert histogram_correlation(a_aff, b) == pytest.approx(ab, abs=1e-9)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            av = rng.integers(0, 30, 512).astype(np.float64)
            bv = rng.integers(0, 30, 512).astype(np.float64)
            if av.std() == 0 or bv.std() == 0:
                continue
            expected = float(
                np.sum((av - av.mean()) * (bv - bv.mean()))
                / math.sqrt(np.sum((av - av.mean()) ** 2) * np.sum((bv - bv.mean()) ** 2))
            )
            got = histogram_correlation(
                ColorHistogram(8, av.astype(np.int64)), ColorHistogram(8, bv.astype(np.int64))
            )
            assert got == pytest.approx(expected, abs=1e-12)

    def test_zero_variance_raises_and_maps_to_zero(self):
        flat = ColorHistogram(8, np.ones(512, dtype=np.int64))
        spiky = hist_from_counts({0: 5, 1: 9})
        with pytest.raises(ZeroVariance):
            histogram_correlation(flat, spiky)
        assert correlation_or_zero(flat, spiky) == 0.0


def _template(class_id, counts, area=400):
    px = np.zeros((20, 20, 4), dtype=np.uint8)
    px[:, :, 3] = 255
    return TemplateEntry(
        class_id=class_id,
        name=f"t{class_id}",
        image=ImageBuffer(px),
        histogram=hist_from_counts(counts),
        pixel_area=area,
    )


class TestAreaPrefilter:
    def test_ratio_one_keeps(self):
        assert area_prefilter(400, [_template(0, {0: 1})], (0.25, 2.0))

    def test_too_small_rejected(self):
        assert not area_prefilter(90, [_template(0, {0: 1})], (0.25, 2.0))

    def test_too_large_rejected(self):
        assert not area_prefilter(900, [_template(0, {0: 1})], (0.25, 2.0))

    def test_any_template_suffices(self):
        ts = [_template(0, {0: 1}, area=400), _template(1, {1: 1}, area=900)]
        assert area_prefilter(900, ts, (0.25, 2.0))


class TestShortlist:
    def test_ninety_percent_rule(self):
        # correlations {A: 0.9, B: 0.85, C: 0.6} -> cutoff 0.81 keeps A, B
        a = _template(0, {0: 90, 1: 10, 2: 5})
        proposal = hist_from_counts({0: 86, 1: 15, 2: 5})
        b_counts = {0: 80, 1: 18, 2: 9}
        c_counts = {5: 50, 6: 50}
        b = _template(1, b_counts)
        c = _template(2, c_counts)
        listed = shortlist(proposal, [a, b, c], 0.5, 0.9)
        corrs = {t.class_id: corr for t, corr in listed}
        full = {
            t.class_id: correlation_or_zero(proposal, t.histogram) for t in (a, b, c)
        }
        best = max(full.values())
        expected = {cid for cid, c0 in full.items() if c0 >= 0.9 * best}
        assert set(corrs) == expected
        assert listed[0][1] == max(corrs.values())

    def test_below_threshold_withddraws(self):
        t = _template(0, {0: 10, 1: 1})
        proposal = hist_from_counts({100: 10, 101: 1})
        assert shortlist(proposal, [t], 0.5, 0.9) == []

    def test_single_template(self):
        t = _template(0, {0: 10, 1: 1})
        proposal = hist_from_counts({0: 12, 1: 1})
        listed = shortlist(proposal, [t], 0.5, 0.9)
        assert len(listed) == 1 and listed[0][0] is t

    def test_subset_and_best_first(self):
        rng = np.random.default_rng(9)
        templates = [
            _template(i, {int(k): int(v) for k, v in zip(rng.integers(0, 512, 6), rng.integers(1, 40, 6))})
            for i in range(8)
        ]
        proposal = hist_from_counts(
            {int(k): int(v) for k, v in zip(rng.integers(0, 512, 6), rng.integers(1, 40, 6))}
        )
        listed = shortlist(proposal, templates, -1.0, 0.9)
        assert len(listed) >= 1
        assert {t.class_id for t, _ in listed} <= {t.class_id for t in templates}
        corrs = [c for _, c in listed]
        assert corrs == sorted(corrs, reverse=True)


class TestLoadTemplates:
    def test_load_and_histogram_from_alpha(self, tmp_path):
        px = np.zeros((8, 8, 4), dtype=np.uint8)
        px[2:6, 2:6, :3] = (200, 40, 40)
        px[2:6, 2:6, 3] = 255
        ImageBuffer(px).save_png(str(tmp_path / "a.png"))
        from templot.core import write_json

        write_json(str(tmp_path / "index.json"), [{"class_id": 0, "name": "a", "file": "a.png"}])
        entries = load_templates(str(tmp_path / "index.json"))
        assert len(entries) == 1
        assert entries[0].pixel_area == 16
        assert entries[0].histogram.total == 16
