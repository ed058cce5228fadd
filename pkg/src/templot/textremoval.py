"""Font-color discovery and text removal.

Pixels sampled from OCR boxes of a few sample images are unmixed by
FastICA; the projected colors are clustered with a BIRCH CF-tree; clusters
not shared across the samples are discarded; the surviving cluster that
best concentrates inside OCR boxes is taken as the font color. Each image
is then masked by projected-color distance, the mask is cleaned by
dilation and erosion, and the masked pixels are filled by an iterative
boundary inpainter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from templot import kernels
from templot.core import BoundingBox, ImageBuffer, SegmentMask, read_json
from templot.errors import (
    AllZeroMasks,
    DegenerateData,
    DimensionMismatch,
    NoSharedCluster,
    SchemaError,
    UnfillableMask,
)


@dataclass(frozen=True)
class OcrBox:
    bbox: BoundingBox
    confidence: Optional[float] = None


def load_ocr_boxes(path: str) -> list[OcrBox]:
    raw = read_json(path)
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: OCR file must be a JSON list")
    boxes = []
    for item in raw:
        try:
            bbox = BoundingBox.from_list(item["bbox"])
            conf = item.get("confidence")
            boxes.append(OcrBox(bbox=bbox, confidence=None if conf is None else float(conf)))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad OCR entry {item!r}: {exc}") from exc
    return boxes


def ocr_boxes_to_json(boxes: Sequence[OcrBox]) -> list[dict[str, Any]]:
    return [{"bbox": b.bbox.as_list(), "confidence": b.confidence} for b in boxes]


# --------------------------------------------------------------------------
# FastICA
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IcaModel:
    mean: np.ndarray        # (d,)
    whitening: np.ndarray   # (rank, d); whitened = whitening @ (x - mean)
    unmixing: np.ndarray    # (k, rank); rows orthonormal
    converged: bool = True

    @property
    def components(self) -> int:
        return self.unmixing.shape[0]

    def project(self, colors: np.ndarray) -> np.ndarray:
        """Map (n, d) colors into the k-dimensional independent space."""
        x = np.asarray(colors, dtype=np.float64)
        return (x - self.mean) @ self.whitening.T @ self.unmixing.T

    def to_json(self) -> dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "whitening": self.whitening.tolist(),
            "unmixing": self.unmixing.tolist(),
            "converged": self.converged,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "IcaModel":
        try:
            return cls(
                mean=np.asarray(raw["mean"], dtype=np.float64),
                whitening=np.asarray(raw["whitening"], dtype=np.float64),
                unmixing=np.asarray(raw["unmixing"], dtype=np.float64),
                converged=bool(raw.get("converged", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad ICA model JSON: {exc}") from exc


def _symmetric_decorrelate(w: np.ndarray) -> np.ndarray:
    s = w @ w.T
    vals, vecs = np.linalg.eigh(s)
    vals = np.maximum(vals, 1e-12)
    return vecs @ np.diag(vals ** -0.5) @ vecs.T @ w


def fastica(
    samples: np.ndarray,
    components: int = 3,
    tolerance: float = 1e-4,
    max_iterations: int = 200,
    seed: int = 0,
) -> IcaModel:
    """Symmetric fixed-point FastICA with tanh nonlinearity.

    Centers, whitens through the covariance eigendecomposition (eigenvalues
    below 1e-10 are dropped), runs the parallel update with symmetric
    decorrelation after every step, and stops when every row satisfies
    |1 - |<w_new, w_old>|| < tolerance. A run that exhausts max_iterations
    returns the best iterate with converged=False.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("samples must be (n, d)")
    n, d = x.shape
    if n < 10 * components:
        raise DegenerateData(f"need at least {10 * components} samples, got {n}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    keep = eigvals > 1e-10
    if not keep.any():
        raise DegenerateData("samples have rank 0 after centering")
    eigvals = eigvals[keep]
    eigvecs = eigvecs[:, keep]
    whitening = (eigvecs / np.sqrt(eigvals)).T  # (rank, d)
    z = xc @ whitening.T                        # (n, rank)
    rank = z.shape[1]
    k = min(components, rank)

    rng = np.random.default_rng(seed)
    w = _symmetric_decorrelate(rng.standard_normal((k, rank)))
    converged = False
    for _ in range(max_iterations):
        wx = z @ w.T
        g = np.tanh(wx)
        g_prime_mean = (1.0 - g ** 2).mean(axis=0)
        w_new = (g.T @ z) / n - g_prime_mean[:, None] * w
        w_new = _symmetric_decorrelate(w_new)
        delta = float(np.max(np.abs(1.0 - np.abs(np.sum(w_new * w, axis=1)))))
        w = w_new
        if delta < tolerance:
            converged = True
            break
    return IcaModel(mean=mean, whitening=whitening, unmixing=w, converged=converged)


# --------------------------------------------------------------------------
# BIRCH clustering over projected colors
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FontColorCluster:
    centroid_projected: np.ndarray
    centroid_rgb: Optional[np.ndarray]
    radius: float
    member_count: int

    def to_json(self) -> dict[str, Any]:
        return {
            "centroid_projected": self.centroid_projected.tolist(),
            "centroid_rgb": None if self.centroid_rgb is None else self.centroid_rgb.tolist(),
            "radius": self.radius,
            "member_count": self.member_count,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "FontColorCluster":
        try:
            rgb = raw.get("centroid_rgb")
            return cls(
                centroid_projected=np.asarray(raw["centroid_projected"], dtype=np.float64),
                centroid_rgb=None if rgb is None else np.asarray(rgb, dtype=np.float64),
                radius=float(raw["radius"]),
                member_count=int(raw.get("member_count", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad cluster JSON: {exc}") from exc


def _d2(a: tuple, b: tuple) -> float:
    s = 0.0
    for x, y in zip(a, b):
        d = x - y
        s += d * d
    return s


class _CFEntry:
    """Clustering feature: count, linear sum, scalar squared sum (and the
    aligned RGB linear sum when colors ride along). Scalar tuples keep the
    per-point insertion cost tiny."""

    __slots__ = ("n", "ls", "ss", "rgb_ls", "child", "_centroid")

    def __init__(self, point: tuple, rgb: Optional[tuple], child=None):
        self.n = 1
        self.ls = list(point)
        self.ss = _d2(point, (0.0,) * len(point))
        self.rgb_ls = list(rgb) if rgb is not None else None
        self.child = child
        self._centroid = tuple(point)

    @property
    def centroid(self) -> tuple:
        return self._centroid

    @property
    def radius(self) -> float:
        c = self._centroid
        return math.sqrt(max(self.ss / self.n - _d2(c, (0.0,) * len(c)), 0.0))

    def radius_with(self, point: tuple) -> float:
        n = self.n + 1
        ss = self.ss + _d2(point, (0.0,) * len(point))
        norm_c = 0.0
        for i, p in enumerate(point):
            ci = (self.ls[i] + p) / n
            norm_c += ci * ci
        return math.sqrt(max(ss / n - norm_c, 0.0))

    def absorb(self, point: tuple, rgb: Optional[tuple]) -> None:
        self.n += 1
        for i, p in enumerate(point):
            self.ls[i] += p
        self.ss += _d2(point, (0.0,) * len(point))
        if rgb is not None and self.rgb_ls is not None:
            for i, p in enumerate(rgb):
                self.rgb_ls[i] += p
        self._centroid = tuple(v / self.n for v in self.ls)

    def refresh_from_child(self) -> None:
        entries = self.child.entries
        self.n = sum(e.n for e in entries)
        dims = len(entries[0].ls)
        self.ls = [sum(e.ls[i] for e in entries) for i in range(dims)]
        self.ss = sum(e.ss for e in entries)
        if self.rgb_ls is not None:
            self.rgb_ls = [sum(e.rgb_ls[i] for e in entries) for i in range(3)]
        self._centroid = tuple(v / self.n for v in self.ls)


class _CFNode:
    __slots__ = ("entries", "is_leaf")

    def __init__(self, is_leaf: bool):
        self.entries: list[_CFEntry] = []
        self.is_leaf = is_leaf


def _entry_for_node(node: _CFNode, with_rgb: bool) -> _CFEntry:
    entry = _CFEntry.__new__(_CFEntry)
    entry.child = node
    entry.n = 0
    entry.ls = None
    entry.ss = 0.0
    entry.rgb_ls = [0.0, 0.0, 0.0] if with_rgb else None
    entry.refresh_from_child()
    return entry


def _split_node(node: _CFNode, with_rgb: bool) -> _CFEntry:
    """Farthest-pair seeding: the two most distant entries seed the halves;
    the node keeps one half, the returned sibling entry wraps the other."""
    entries = node.entries
    cents = [e.centroid for e in entries]
    best_pair = (0, 1)
    best_d = -1.0
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            d = _d2(cents[i], cents[j])
            if d > best_d:
                best_d = d
                best_pair = (i, j)
    s1, s2 = best_pair
    group1, group2 = [], []
    for idx, e in enumerate(entries):
        d1 = _d2(cents[idx], cents[s1])
        d2 = _d2(cents[idx], cents[s2])
        (group1 if d1 <= d2 else group2).append(e)
    if not group2:  # degenerate geometry; force a non-empty half
        group2.append(group1.pop())
    node.entries = group1
    sibling = _CFNode(node.is_leaf)
    sibling.entries = group2
    return _entry_for_node(sibling, with_rgb)


def _insert(
    node: _CFNode,
    point: tuple,
    rgb: Optional[tuple],
    threshold: float,
    branching: int,
    sink: list,
) -> Optional[_CFEntry]:
    if node.is_leaf:
        best = None
        best_d = math.inf
        for e in node.entries:
            d = _d2(e.centroid, point)
            if d < best_d:
                best_d = d
                best = e
        if best is not None and best.radius_with(point) <= threshold:
            best.absorb(point, rgb)
            sink.append(best)
        else:
            fresh = _CFEntry(point, rgb)
            node.entries.append(fresh)
            sink.append(fresh)
    else:
        best = None
        best_d = math.inf
        for e in node.entries:
            d = _d2(e.centroid, point)
            if d < best_d:
                best_d = d
                best = e
        split = _insert(best.child, point, rgb, threshold, branching, sink)
        best.refresh_from_child()
        if split is not None:
            node.entries.append(split)
    if len(node.entries) > branching:
        return _split_node(node, rgb is not None)
    return None


def _collect_leaf_entries(node: _CFNode) -> list[_CFEntry]:
    if node.is_leaf:
        return list(node.entries)
    out = []
    for e in node.entries:
        out.extend(_collect_leaf_entries(e.child))
    return out


def birch_cluster(
    points: np.ndarray,
    radius_threshold: float,
    branching_factor: int = 50,
    rgb: Optional[np.ndarray] = None,
    return_labels: bool = False,
):
    """CF-tree clustering: a point joins the nearest leaf entry when the
    merged entry radius stays within the threshold, otherwise it opens a new
    entry; overfull nodes split by farthest-pair seeding. Leaf entries are
    the clusters, with exact centroid and radius from the CF sums.

    With `rgb` given (aligned n x 3 colors) each cluster carries the exact
    mean color of its members. With return_labels=True the per-point leaf
    assignment is returned alongside.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n < 1:
        raise DegenerateData("need at least one point")
    if radius_threshold <= 0:
        raise ValueError("radius_threshold must be > 0")
    if branching_factor < 2:
        raise ValueError("branching_factor must be >= 2")
    rgb_arr = None
    if rgb is not None:
        rgb_arr = np.asarray(rgb, dtype=np.float64)
        if rgb_arr.shape != (n, 3):
            raise DimensionMismatch("rgb must be (n, 3) aligned with points")

    pts_t = [tuple(row) for row in pts.tolist()]
    rgb_t = None if rgb_arr is None else [tuple(row) for row in rgb_arr.tolist()]

    root = _CFNode(is_leaf=True)
    point_entries: list[_CFEntry] = []
    for i in range(n):
        sink: list = []
        split = _insert(root, pts_t[i], None if rgb_t is None else rgb_t[i],
                        radius_threshold, branching_factor, sink)
        point_entries.append(sink[0])
        if split is not None:
            old_root_entry = _entry_for_node(root, rgb_t is not None)
            new_root = _CFNode(is_leaf=False)
            new_root.entries = [old_root_entry, split]
            root = new_root

    leaves = _collect_leaf_entries(root)
    clusters = [
        FontColorCluster(
            centroid_projected=np.asarray(e.centroid, dtype=np.float64),
            centroid_rgb=None if e.rgb_ls is None else np.asarray(e.rgb_ls, dtype=np.float64) / e.n,
            radius=e.radius,
            member_count=e.n,
        )
        for e in leaves
    ]
    if not return_labels:
        return clusters
    index = {id(e): i for i, e in enumerate(leaves)}
    labels = np.array([index[id(e)] for e in point_entries], dtype=np.int64)
    return clusters, labels


# --------------------------------------------------------------------------
# Cluster reduction and selection
# --------------------------------------------------------------------------

def _merge_group(group: Sequence[FontColorCluster]) -> FontColorCluster:
    total = sum(c.member_count for c in group)
    proj = np.sum([c.centroid_projected * c.member_count for c in group], axis=0) / total
    rgb = None
    if all(c.centroid_rgb is not None for c in group):
        rgb = np.sum([c.centroid_rgb * c.member_count for c in group], axis=0) / total
    radius = float(sum(c.radius * c.member_count for c in group) / total)
    return FontColorCluster(centroid_projected=proj, centroid_rgb=rgb, radius=radius, member_count=total)


def _merge_within(clusters: Sequence[FontColorCluster], tolerance: float) -> list[FontColorCluster]:
    ordered = sorted(clusters, key=lambda c: -c.member_count)
    groups: list[list[FontColorCluster]] = []
    for c in ordered:
        placed = False
        for g in groups:
            if float(np.linalg.norm(g[0].centroid_rgb - c.centroid_rgb)) <= tolerance:
                g.append(c)
                placed = True
                break
        if not placed:
            groups.append([c])
    return [_merge_group(g) for g in groups]


def reduce_across_samples(
    per_sample_clusters: Sequence[Sequence[FontColorCluster]],
    merge_tolerance: float = 20.0,
) -> list[FontColorCluster]:
    """Keep clusters whose mean color has a counterpart within the tolerance
    in every sample; near-duplicates within a sample merge first. Matched
    groups collapse to their count-weighted average."""
    if len(per_sample_clusters) < 2:
        raise ValueError("need at least 2 samples to reduce across")
    for sample in per_sample_clusters:
        for c in sample:
            if c.centroid_rgb is None:
                raise DimensionMismatch("reduce_across_samples needs RGB centroids")
    merged_samples = [_merge_within(s, merge_tolerance) for s in per_sample_clusters]
    reference, *others = merged_samples
    out: list[FontColorCluster] = []
    for c0 in reference:
        group = [c0]
        complete = True
        for sample in others:
            dists = [float(np.linalg.norm(c0.centroid_rgb - c.centroid_rgb)) for c in sample]
            best = int(np.argmin(dists)) if dists else -1
            if best < 0 or dists[best] > merge_tolerance:
                complete = False
                break
            group.append(sample[best])
        if complete:
            out.append(_merge_group(group))
    if not out:
        raise NoSharedCluster("no color cluster is shared across all samples")
    return out


def mask_from_cluster(
    image: ImageBuffer,
    model: IcaModel,
    cluster: FontColorCluster,
    color_tolerance: Optional[float] = None,
) -> SegmentMask:
    """Foreground = pixels whose projected color lies within
    max(radius, tolerance) of the cluster centroid (default tolerance is
    1.5x the radius)."""
    tol = 1.5 * cluster.radius if color_tolerance is None else color_tolerance
    effective = max(cluster.radius, tol) + 1e-9
    flat = image.rgb().reshape(-1, 3).astype(np.float64)
    proj = model.project(flat)
    d2 = np.sum((proj - cluster.centroid_projected) ** 2, axis=1)
    fg = (d2 <= effective * effective).reshape(image.height, image.width)
    return SegmentMask.from_bitmap(fg)


def select_best_cluster(
    clusters: Sequence[FontColorCluster],
    sample_image: ImageBuffer,
    ocr_boxes: Sequence[OcrBox],
    model: IcaModel,
    color_tolerance: Optional[float] = None,
) -> FontColorCluster:
    """Score = (masked pixels inside any OCR box / total masked pixels) *
    number of OCR boxes; the argmax wins, larger member_count breaking ties."""
    if not clusters:
        raise ValueError("clusters must be non-empty")
    if not ocr_boxes:
        raise ValueError("need at least one OCR box")
    box_region = np.zeros((sample_image.height, sample_image.width), dtype=bool)
    for b in ocr_boxes:
        box_region[b.bbox.y_min:b.bbox.y_max, b.bbox.x_min:b.bbox.x_max] = True
    best: Optional[tuple[float, int, FontColorCluster]] = None
    any_nonzero = False
    for cluster in clusters:
        bitmap = mask_from_cluster(sample_image, model, cluster, color_tolerance).to_bitmap()
        total = int(bitmap.sum())
        if total == 0:
            score = 0.0
        else:
            any_nonzero = True
            inside = int((bitmap & box_region).sum())
            score = inside / total * len(ocr_boxes)
        key = (score, cluster.member_count)
        if best is None or key > (best[0], best[1]):
            best = (score, cluster.member_count, cluster)
    if not any_nonzero:
        raise AllZeroMasks("every candidate cluster masks zero pixels")
    return best[2]


# --------------------------------------------------------------------------
# Mask post-processing, inpainting, coverage
# --------------------------------------------------------------------------

def morph(mask: SegmentMask, op: str, iterations: int = 1) -> SegmentMask:
    """Binary 3x3 morphology; pixels beyond the border count as background."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if op not in ("dilate", "erode"):
        raise ValueError(f"unknown morphology op {op!r}")
    if iterations == 0:
        return mask
    bitmap = mask.to_bitmap().astype(np.uint8)
    fn = kernels.dilate if op == "dilate" else kernels.erode
    return SegmentMask.from_bitmap(fn(bitmap, iterations).astype(bool))


def clean_text_mask(mask: SegmentMask, dilate_iters: int = 2, erode_iters: int = 1) -> SegmentMask:
    """Default post-process: dilate then erode with a net expansion so
    anti-aliased glyph outlines end up inside the mask."""
    return morph(morph(mask, "dilate", dilate_iters), "erode", erode_iters)


def naive_inpaint(image: ImageBuffer, mask: SegmentMask, max_passes: int = 512) -> ImageBuffer:
    """Deterministic boundary fill standing in for an external inpainting
    model: every pass fills masked pixels that touch unmasked ones with the
    average of those neighbors. Unmasked pixels pass through bit-identical."""
    if (mask.width, mask.height) != (image.width, image.height):
        raise DimensionMismatch(
            f"mask {mask.width}x{mask.height} vs image {image.width}x{image.height}"
        )
    bitmap = mask.to_bitmap()
    if not bitmap.any():
        return image
    if bitmap.all():
        raise UnfillableMask("mask covers the whole image")
    ys, xs = np.nonzero(bitmap)
    y0 = max(0, int(ys.min()) - 1)
    y1 = min(image.height, int(ys.max()) + 2)
    x0 = max(0, int(xs.min()) - 1)
    x1 = min(image.width, int(xs.max()) + 2)
    window = np.ascontiguousarray(image.pixels[y0:y1, x0:x1])
    wmask = np.ascontiguousarray(bitmap[y0:y1, x0:x1].astype(np.uint8))
    filled, _remaining = kernels.inpaint(window, wmask, max_passes)
    out = image.pixels.copy()
    out[y0:y1, x0:x1] = filled
    return ImageBuffer(out)


def text_coverage(bbox: BoundingBox, mask: SegmentMask) -> float:
    """Fraction of the box's pixels under the text mask."""
    bitmap = mask.to_bitmap()
    if bbox.x_max > mask.width or bbox.y_max > mask.height:
        raise DimensionMismatch(f"bbox {bbox.as_list()} outside {mask.width}x{mask.height}")
    region = bitmap[bbox.y_min:bbox.y_max, bbox.x_min:bbox.x_max]
    return float(region.sum()) / bbox.area


# --------------------------------------------------------------------------
# Font model discovery and persistence
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FontModel:
    ica: IcaModel
    cluster: FontColorCluster

    def to_json(self) -> dict[str, Any]:
        doc = self.ica.to_json()
        doc["cluster"] = self.cluster.to_json()
        return doc

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "FontModel":
        if "cluster" not in raw:
            raise SchemaError("font model JSON missing 'cluster'")
        return cls(ica=IcaModel.from_json(raw), cluster=FontColorCluster.from_json(raw["cluster"]))


@dataclass(frozen=True)
class FontDiscoveryParams:
    sample_count: int = 3
    max_pixels: int = 50_000
    birch_pixels: int = 6_000  # per-sample cap for the CF-tree pass
    components: int = 3
    branching_factor: int = 50
    radius_scale: float = 0.25   # BIRCH threshold = radius_scale * pooled std
    merge_tolerance: float = 20.0
    seed: int = 0


def _ocr_pixels(image: ImageBuffer, boxes: Sequence[OcrBox]) -> np.ndarray:
    region = np.zeros((image.height, image.width), dtype=bool)
    for b in boxes:
        region[b.bbox.y_min:b.bbox.y_max, b.bbox.x_min:b.bbox.x_max] = True
    return image.rgb()[region].astype(np.float64)


def discover_font_model(
    sample_images: Sequence[ImageBuffer],
    sample_ocr: Sequence[Sequence[OcrBox]],
    params: FontDiscoveryParams = FontDiscoveryParams(),
) -> FontModel:
    """Fit the ICA model and pick the font color cluster from the OCR boxes
    of the sample images."""
    usable = [
        (img, boxes) for img, boxes in zip(sample_images, sample_ocr) if boxes
    ][: params.sample_count]
    if not usable:
        raise NoSharedCluster("no sample image carries OCR boxes")
    rng = np.random.default_rng(params.seed)
    per_sample_pixels = []
    for img, boxes in usable:
        px = _ocr_pixels(img, boxes)
        per_sample_pixels.append(px)
    pooled = np.concatenate(per_sample_pixels, axis=0)
    if pooled.shape[0] > params.max_pixels:
        idx = rng.choice(pooled.shape[0], size=params.max_pixels, replace=False)
        idx.sort()
        pooled = pooled[idx]
    model = fastica(pooled, components=params.components, seed=params.seed)

    projected_pooled = model.project(pooled)
    pooled_std = float(np.sqrt(np.mean(np.var(projected_pooled, axis=0))))
    threshold = max(params.radius_scale * pooled_std, 1e-6)

    per_sample_clusters = []
    for px in per_sample_pixels:
        if px.shape[0] > params.birch_pixels:
            idx = rng.choice(px.shape[0], size=params.birch_pixels, replace=False)
            idx.sort()
            px = px[idx]
        proj = model.project(px)
        clusters = birch_cluster(
            proj, threshold, branching_factor=params.branching_factor, rgb=px
        )
        per_sample_clusters.append(clusters)

    if len(per_sample_clusters) >= 2:
        reduced = reduce_across_samples(per_sample_clusters, params.merge_tolerance)
    else:
        reduced = _merge_within(per_sample_clusters[0], params.merge_tolerance)
    sample_img, boxes = usable[0]
    cluster = select_best_cluster(reduced, sample_img, boxes, model)
    return FontModel(ica=model, cluster=cluster)
