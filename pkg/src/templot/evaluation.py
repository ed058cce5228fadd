"""Detection-to-ground-truth matching and metric reports.

A detection matches a ground-truth icon when each box's midpoint lies in
the other box (mutual containment). Competing candidates resolve greedily
by smallest midpoint distance. Precision counts correct-class matches over
all predictions; recall counts them over the kept ground truth; the
misclassification rate is wrong-class matches over all predictions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from templot.core import BoundingBox, SegmentMask, read_json
from templot.errors import SchemaError


@dataclass(frozen=True)
class GroundTruthEntry:
    class_id: int
    bbox: BoundingBox
    mask: Optional[SegmentMask] = None


@dataclass(frozen=True)
class GroundTruthAnnotation:
    image_id: str
    entries: list[GroundTruthEntry]

    def to_json(self) -> dict[str, Any]:
        return {
            "image_id": self.image_id,
            "entries": [
                {"class_id": e.class_id, "bbox": e.bbox.as_list()} for e in self.entries
            ],
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "GroundTruthAnnotation":
        try:
            image_id = str(raw["image_id"])
            entries = [
                GroundTruthEntry(class_id=int(e["class_id"]), bbox=BoundingBox.from_list(e["bbox"]))
                for e in raw["entries"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad ground truth: {exc}") from exc
        return cls(image_id=image_id, entries=entries)

    @classmethod
    def load(cls, path: str) -> "GroundTruthAnnotation":
        return cls.from_json(read_json(path))


@dataclass
class MatchReport:
    true_detections: list[tuple[int, int]] = field(default_factory=list)  # (gt, det)
    misclassified: list[tuple[int, int]] = field(default_factory=list)
    false_positives: list[int] = field(default_factory=list)
    missed_gt: list[int] = field(default_factory=list)
    excluded_border_gt: int = 0
    # per-class tallies keyed by gt (or predicted, for false positives) class
    per_class: dict[int, dict[str, int]] = field(default_factory=dict)


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    misclassification_rate: float
    f1: float
    true_count: int
    misclassified_count: int
    false_positive_count: int
    missed_count: int
    excluded_border_gt: int
    zero_denominator: bool
    per_class: dict[int, dict[str, int]]

    def to_json(self) -> dict[str, Any]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "misclassification_rate": self.misclassification_rate,
            "f1": self.f1,
            "counts": {
                "true_detections": self.true_count,
                "misclassified": self.misclassified_count,
                "false_positives": self.false_positive_count,
                "missed_gt": self.missed_count,
                "excluded_border_gt": self.excluded_border_gt,
            },
            "zero_denominator": self.zero_denominator,
            "per_class": {str(k): v for k, v in sorted(self.per_class.items())},
        }


def filter_border_gt(
    entries: Sequence[GroundTruthEntry], image_width: int, image_height: int
) -> tuple[list[GroundTruthEntry], int]:
    """Drop ground truth whose box touches any image border."""
    kept = [e for e in entries if not e.bbox.touches_border(image_width, image_height)]
    return kept, len(entries) - len(kept)


def _mutual_midpoint(det_box: BoundingBox, gt_box: BoundingBox, mutual: bool) -> bool:
    dmx, dmy = det_box.midpoint
    gmx, gmy = gt_box.midpoint
    forward = gt_box.contains_point(dmx, dmy)
    if not mutual:
        return forward
    return forward and det_box.contains_point(gmx, gmy)


def match(
    detections: Sequence[Any],
    ground_truth: Sequence[GroundTruthEntry],
    mutual: bool = True,
) -> MatchReport:
    """Assign detections to border-filtered ground truth entries.

    Detections need `class_id` and `bbox` attributes. Candidate pairs pass
    the midpoint rule; each gt takes at most one detection, resolved by
    smallest midpoint distance (stable on ties by gt then detection index).
    """
    report = MatchReport()
    candidates: list[tuple[float, int, int]] = []
    for gi, gt in enumerate(ground_truth):
        gmx, gmy = gt.bbox.midpoint
        for di, det in enumerate(detections):
            if not _mutual_midpoint(det.bbox, gt.bbox, mutual):
                continue
            dmx, dmy = det.bbox.midpoint
            dist = math.hypot(dmx - gmx, dmy - gmy)
            candidates.append((dist, gi, di))
    candidates.sort()
    gt_taken: set[int] = set()
    det_taken: set[int] = set()
    for _, gi, di in candidates:
        if gi in gt_taken or di in det_taken:
            continue
        gt_taken.add(gi)
        det_taken.add(di)
        gt_class = ground_truth[gi].class_id
        det_class = detections[di].class_id
        tally = report.per_class.setdefault(gt_class, {"true": 0, "misclassified": 0, "false_positive": 0, "missed": 0})
        if gt_class == det_class:
            report.true_detections.append((gi, di))
            tally["true"] += 1
        else:
            report.misclassified.append((gi, di))
            tally["misclassified"] += 1
    for di, det in enumerate(detections):
        if di not in det_taken:
            report.false_positives.append(di)
            tally = report.per_class.setdefault(det.class_id, {"true": 0, "misclassified": 0, "false_positive": 0, "missed": 0})
            tally["false_positive"] += 1
    for gi, gt in enumerate(ground_truth):
        if gi not in gt_taken:
            report.missed_gt.append(gi)
            tally = report.per_class.setdefault(gt.class_id, {"true": 0, "misclassified": 0, "false_positive": 0, "missed": 0})
            tally["missed"] += 1
    return report


def merge_reports(reports: Sequence[MatchReport]) -> MatchReport:
    """Order-independent aggregation of per-image reports (counts only;
    index lists are offset-free and used for tallies, not identity)."""
    merged = MatchReport()
    for r in reports:
        merged.true_detections.extend([(-1, -1)] * len(r.true_detections))
        merged.misclassified.extend([(-1, -1)] * len(r.misclassified))
        merged.false_positives.extend([-1] * len(r.false_positives))
        merged.missed_gt.extend([-1] * len(r.missed_gt))
        merged.excluded_border_gt += r.excluded_border_gt
        for cls, tally in r.per_class.items():
            dst = merged.per_class.setdefault(cls, {"true": 0, "misclassified": 0, "false_positive": 0, "missed": 0})
            for k, v in tally.items():
                dst[k] += v
    return merged


def metrics(report: MatchReport) -> MetricsReport:
    true_n = len(report.true_detections)
    mis_n = len(report.misclassified)
    fp_n = len(report.false_positives)
    miss_n = len(report.missed_gt)
    predictions = true_n + mis_n + fp_n
    kept_gt = true_n + mis_n + miss_n
    zero_den = predictions == 0 or kept_gt == 0
    precision = true_n / predictions if predictions else 0.0
    recall = true_n / kept_gt if kept_gt else 0.0
    mis_rate = mis_n / predictions if predictions else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return MetricsReport(
        precision=precision,
        recall=recall,
        misclassification_rate=mis_rate,
        f1=f1,
        true_count=true_n,
        misclassified_count=mis_n,
        false_positive_count=fp_n,
        missed_count=miss_n,
        excluded_border_gt=report.excluded_border_gt,
        zero_denominator=zero_den,
        per_class=report.per_class,
    )


@dataclass(frozen=True)
class CoverageBin:
    bin_index: int
    low: float
    high: float
    detected: int
    missed: int


def coverage_bins(
    per_gt: Sequence[tuple[float, bool]], bin_width: float = 0.1
) -> list[CoverageBin]:
    """Histogram ground truth by text coverage.

    per_gt holds (coverage, detected) pairs; coverage 1.0 lands in the top
    bin. Bins partition the kept ground truth exactly.
    """
    n_bins = int(round(1.0 / bin_width))
    counts = [[0, 0] for _ in range(n_bins)]
    for cov, detected in per_gt:
        idx = min(int(cov / bin_width), n_bins - 1)
        counts[idx][0 if detected else 1] += 1
    return [
        CoverageBin(
            bin_index=i,
            low=i * bin_width,
            high=(i + 1) * bin_width,
            detected=c[0],
            missed=c[1],
        )
        for i, c in enumerate(counts)
    ]


def coverage_csv(bins: Sequence[CoverageBin]) -> str:
    lines = ["bin,detected,missed"]
    for b in bins:
        lines.append(f"{b.bin_index},{b.detected},{b.missed}")
    return "\n".join(lines) + "\n"


PER_IMAGE_STAGES = ("segmentation_ingest", "mask_generation", "inpainting")
PER_ICON_STAGES = ("histogram_comparison", "classification", "nms")


class StageTimings:
    """Wall-clock accumulator with the per-image vs per-proposal split.

    Image load/save is never inside a timed section. The clock is
    injectable so the aggregation can be tested exactly.
    """

    def __init__(self, clock: Callable[[], float] = time.perf_counter):
        self._clock = clock
        self.totals: dict[str, float] = {}
        self.image_count = 0
        self.proposal_count = 0

    def timed(self, stage: str):
        timings = self

        class _Section:
            def __enter__(self_inner):
                self_inner.start = timings._clock()
                return self_inner

            def __exit__(self_inner, *exc):
                timings.totals[stage] = timings.totals.get(stage, 0.0) + (
                    timings._clock() - self_inner.start
                )
                return False

        return _Section()

    def add(self, stage: str, seconds: float) -> None:
        self.totals[stage] = self.totals.get(stage, 0.0) + seconds

    def merge(self, other: "StageTimings") -> None:
        for stage, total in other.totals.items():
            self.add(stage, total)
        self.image_count += other.image_count
        self.proposal_count += other.proposal_count


@dataclass(frozen=True)
class TimingReport:
    per_image_ms: dict[str, float]
    per_icon_ms: dict[str, float]
    image_count: int
    proposal_count: int

    def to_json(self) -> dict[str, Any]:
        return {
            "per_image_ms": dict(sorted(self.per_image_ms.items())),
            "per_icon_ms": dict(sorted(self.per_icon_ms.items())),
            "image_count": self.image_count,
            "proposal_count": self.proposal_count,
        }


def collect_timings(timings: StageTimings) -> TimingReport:
    """Reduce raw totals to mean milliseconds per image / per icon proposal."""
    per_image = {}
    per_icon = {}
    for stage, total in timings.totals.items():
        ms = total * 1000.0
        if stage in PER_ICON_STAGES:
            per_icon[stage] = ms / timings.proposal_count if timings.proposal_count else 0.0
        else:
            per_image[stage] = ms / timings.image_count if timings.image_count else 0.0
    return TimingReport(
        per_image_ms=per_image,
        per_icon_ms=per_icon,
        image_count=timings.image_count,
        proposal_count=timings.proposal_count,
    )
