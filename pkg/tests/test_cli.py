import json
import os
import subprocess
import sys

import pytest

from templot.cli import main

DS_ARGS = ["--images", "3", "--classes", "6", "--width", "640", "--height", "420", "--seed", "4"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("cli") / "ds")
    assert main(["synth", "--output", out, *DS_ARGS]) == 0
    return out


@pytest.fixture(scope="module")
def text_dataset(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("cli") / "dstext")
    assert main(["synth", "--output", out, *DS_ARGS, "--text-density", "0.6"]) == 0
    return out


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestDetectEvaluate:
    def test_oracle_detect_then_evaluate(self, dataset, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["detect", "--dataset", dataset, "--output", out, "--perturbation", "0"]) == 0
        assert os.path.isfile(os.path.join(out, "detections.json"))
        ev = str(tmp_path / "eval")
        assert main(["evaluate", "--detections", os.path.join(out, "detections.json"),
                     "--dataset", dataset, "--output", ev]) == 0
        metrics = json.load(open(os.path.join(ev, "metrics.json")))
        assert metrics["precision"] == 1.0
        assert metrics["recall"] == 1.0
        assert metrics["misclassification_rate"] == 0.0

    def test_missing_template_index_exits_2_with_path(self, dataset, tmp_path, capsys):
        out = str(tmp_path / "out")
        missing = str(tmp_path / "nope" / "index.json")
        code = main(["detect", "--dataset", dataset, "--templates", missing, "--output", out])
        captured = capsys.readouterr()
        assert code == 2
        err = json.loads(captured.err.strip())
        assert missing in err["message"]

    def test_malformed_manifest_exits_3(self, dataset, tmp_path, capsys):
        bad_dir = tmp_path / "manifests"
        bad_dir.mkdir()
        (bad_dir / "x.json").write_text("{\"image_id\": \"x\"}")
        out = str(tmp_path / "out")
        code = main([
            "detect", "--templates", os.path.join(dataset, "templates", "index.json"),
            "--manifests", str(bad_dir), "--output", out,
        ])
        captured = capsys.readouterr()
        assert code == 3
        assert json.loads(captured.err.strip())["error"] == "SchemaError"

    def test_evaluate_hand_built_thirds(self, tmp_path, capsys):
        # 3 gt icons; detections: correct, wrong class, far away
        from templot.core import ImageBuffer, write_json
        import numpy as np

        img_dir = tmp_path / "images"
        gt_dir = tmp_path / "gt"
        img_dir.mkdir()
        gt_dir.mkdir()
        ImageBuffer(np.zeros((400, 400, 3), dtype=np.uint8)).save_png(str(img_dir / "img.png"))
        write_json(str(gt_dir / "img.json"), {
            "image_id": "img",
            "entries": [
                {"class_id": 0, "bbox": [10, 10, 30, 30]},
                {"class_id": 1, "bbox": [50, 50, 70, 70]},
                {"class_id": 2, "bbox": [100, 100, 130, 130]},
            ],
        })
        dets = tmp_path / "detections.json"
        write_json(str(dets), [
            {"image_id": "img", "class_id": 0, "score": 0.1, "bbox": [10, 10, 30, 30], "metric": "perceptual"},
            {"image_id": "img", "class_id": 5, "score": 0.1, "bbox": [50, 50, 70, 70], "metric": "perceptual"},
            {"image_id": "img", "class_id": 2, "score": 0.1, "bbox": [300, 300, 330, 330], "metric": "perceptual"},
        ])
        out = str(tmp_path / "ev")
        assert main(["evaluate", "--detections", str(dets), "--ground-truth", str(gt_dir),
                     "--images", str(img_dir), "--output", out]) == 0
        metrics = json.load(open(os.path.join(out, "metrics.json")))
        assert metrics["precision"] == pytest.approx(1 / 3)
        assert metrics["recall"] == pytest.approx(1 / 3)
        assert metrics["misclassification_rate"] == pytest.approx(1 / 3)


class TestDeterminism:
    def test_rerun_and_jobs_width_byte_identical(self, dataset, tmp_path):
        outs = []
        for name, jobs in (("a", "1"), ("b", "1"), ("c", "3")):
            out = str(tmp_path / name)
            assert main(["detect", "--dataset", dataset, "--output", out,
                         "--perturbation", "2", "--seed", "7", "--jobs", jobs]) == 0
            outs.append(out)
        ref = read_bytes(os.path.join(outs[0], "detections.json"))
        for out in outs[1:]:
            assert read_bytes(os.path.join(out, "detections.json")) == ref
        ref_counters = read_bytes(os.path.join(outs[0], "counters.json"))
        for out in outs[1:]:
            assert read_bytes(os.path.join(out, "counters.json")) == ref_counters

    def test_synth_rerun_byte_identical(self, dataset, tmp_path):
        again = str(tmp_path / "ds2")
        assert main(["synth", "--output", again, *DS_ARGS]) == 0
        for rel in ("manifest.json", "images/scene_0000.png", "masks/scene_0001.json"):
            assert read_bytes(os.path.join(dataset, rel)) == read_bytes(os.path.join(again, rel))


class TestCalibrate:
    def test_calibrate_writes_table(self, dataset, tmp_path, capsys):
        out = str(tmp_path / "cal")
        assert main(["calibrate", "--dataset", dataset, "--metric", "perceptual",
                     "--perturbation", "2", "--seed", "7", "--output", out]) == 0
        doc = json.load(open(os.path.join(out, "calibration.json")))
        assert doc["metric_mode"] == "perceptual"
        assert 0 < doc["recommended_metric_threshold"]
        assert doc["best_f1"] == pytest.approx(1.0)
        rows = doc["rows"]
        assert all({"threshold", "precision", "recall", "f1"} <= set(r) for r in rows)
        # recall is non-decreasing in the threshold
        recalls = [r["recall"] for r in rows]
        assert recalls == sorted(recalls)


class TestRemoveTextAndTextRemovalDetect:
    def test_remove_text_outputs(self, text_dataset, tmp_path):
        out = str(tmp_path / "rt")
        assert main(["remove-text", "--images", os.path.join(text_dataset, "images"),
                     "--ocr", os.path.join(text_dataset, "ocr"), "--output", out]) == 0
        assert os.path.isfile(os.path.join(out, "font_model.json"))
        assert os.path.isfile(os.path.join(out, "textmasks", "scene_0000.json"))
        assert os.path.isfile(os.path.join(out, "inpainted", "scene_0000.png"))

    def test_detect_with_font_model_reuse(self, text_dataset, tmp_path):
        rt = str(tmp_path / "rt")
        assert main(["remove-text", "--images", os.path.join(text_dataset, "images"),
                     "--ocr", os.path.join(text_dataset, "ocr"), "--output", rt]) == 0
        out = str(tmp_path / "out")
        assert main(["detect", "--dataset", text_dataset, "--output", out,
                     "--text-removal", "--font-model", os.path.join(rt, "font_model.json"),
                     "--perturbation", "0"]) == 0
        assert os.path.isdir(os.path.join(out, "textmasks"))


class TestAnnotation:
    def test_detect_annotate_writes_pngs(self, dataset, tmp_path):
        out = str(tmp_path / "out")
        assert main(["detect", "--dataset", dataset, "--output", out,
                     "--perturbation", "0", "--annotate"]) == 0
        assert os.path.isfile(os.path.join(out, "annotated", "scene_0000.png"))

    def test_evaluate_annotate_failures(self, dataset, tmp_path):
        out = str(tmp_path / "out")
        assert main(["detect", "--dataset", dataset, "--output", out, "--perturbation", "0"]) == 0
        ev = str(tmp_path / "ev")
        assert main(["evaluate", "--detections", os.path.join(out, "detections.json"),
                     "--dataset", dataset, "--output", ev, "--annotate-failures"]) == 0
        assert os.path.isfile(os.path.join(ev, "failures", "scene_0000.png"))


class TestBenchAndValidate:
    def test_bench_prints_table(self, dataset, tmp_path, capsys):
        out = str(tmp_path / "bench")
        assert main(["bench", "--dataset", dataset, "--output", out, "--perturbation", "0"]) == 0
        captured = capsys.readouterr()
        assert "per image" in captured.out or "per icon" in captured.out
        doc = json.load(open(os.path.join(out, "timing_report.json")))
        assert doc["image_count"] == 3
        assert all(v >= 0 for v in doc["per_icon_ms"].values())

    def test_validate_dataset_artifacts(self, dataset):
        assert main(["validate", "--kind", "manifest",
                     os.path.join(dataset, "masks", "scene_0000.json")]) == 0
        assert main(["validate", "--kind", "ground-truth",
                     os.path.join(dataset, "annotations", "scene_0000.json")]) == 0
        assert main(["validate", "--kind", "ocr",
                     os.path.join(dataset, "ocr", "scene_0000.json")]) == 0

    def test_validate_rejects_garbage(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"width\": 3}")
        assert main(["validate", "--kind", "textmask", str(bad)]) == 3

    def test_validate_features_and_pairs(self, tmp_path):
        import numpy as np
        from templot.classify import write_features
        from templot.core import write_json

        f = str(tmp_path / "t.tbof")
        write_features(f, [0, 1], np.zeros((2, 4), dtype=np.float32))
        assert main(["validate", "--kind", "features", f]) == 0
        p = str(tmp_path / "p.json")
        write_json(p, {"pairs": [{"proposal_id": 0, "class_id": 1, "score": 0.5}]})
        assert main(["validate", "--kind", "pair-scores", p]) == 0


class TestEntrypoint:
    def test_console_script_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "templot.cli", "--help"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        assert "synth" in proc.stdout and "detect" in proc.stdout
