"""Evaluation metrics for probability maps and recovered layouts.

Map metrics: IoU, accuracy, precision, recall and F1 of thresholded maps.
Layout metrics: 3D IoU of the room prisms, corner error (mean corner pixel
distance over the image diagonal; an adopted convention) and pixel error of
simple (ceiling/floor/wall) and complete (per-wall) segmentations.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import polygon, raycast
from .layout import Layout3D, LayoutError, LayoutModel
from .layout3d import CornerSet
from .sphere import ImageGeometry

SS = "SS"
CS = "CS"


def _ratio(num: int, den: int, both_empty: bool) -> float:
    if den == 0:
        return 1.0 if both_empty else 0.0
    return num / den


def map_metrics(pred: np.ndarray, gt: np.ndarray, threshold: float = 0.5) -> dict:
    """IoU, Acc, P, R and F1 of ``pred > threshold`` against ``gt > threshold``.

    Empty denominators give 1 when prediction and ground truth are both empty
    and 0 otherwise.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction shape {pred.shape} != ground truth shape {gt.shape}")
    p = pred > threshold
    g = gt > threshold
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = p.size - tp - fp - fn
    both_empty = tp + fp + fn == 0
    prec = _ratio(tp, tp + fp, both_empty)
    rec = _ratio(tp, tp + fn, both_empty)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    return {
        "IoU": _ratio(tp, tp + fp + fn, both_empty),
        "Acc": (tp + tn) / p.size,
        "P": prec,
        "R": rec,
        "F1": f1,
    }


@dataclass
class SegmentationMap:
    labels: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in (SS, CS):
            raise ValueError(f"unknown segmentation mode {self.mode!r}")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.mode == SS and (self.labels.min() < 0 or self.labels.max() > 2):
            raise ValueError("SS labels must be 0 (ceiling), 1 (floor) or 2 (wall)")
        if self.labels.min() < 0:
            raise ValueError("labels must be non-negative")


def render_segmentation(geom: ImageGeometry, l3d: Layout3D, mode: str = CS) -> SegmentationMap:
    """Label each pixel by the first surface its ray meets.

    CS mode numbers walls 2.. by the longitude of their left corner.
    """
    surface, _ = raycast.cast_pixels(geom, l3d)
    if mode == SS:
        return SegmentationMap(np.minimum(surface, raycast.WALL0), SS)
    rank = raycast.wall_rank(raycast.left_to_right(l3d))
    walls = surface >= raycast.WALL0
    labels = surface.copy()
    labels[walls] = raycast.WALL0 + rank[surface[walls] - raycast.WALL0]
    return SegmentationMap(labels, CS)


def align_walls(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Relabel predicted walls onto GT walls by greedy maximum overlap (one-to-one).

    Unmatched predicted walls get label -1 so every one of their pixels counts
    as an error.
    """
    out = pred.copy()
    pw = np.unique(pred[pred >= raycast.WALL0])
    gw = np.unique(gt[gt >= raycast.WALL0])
    overlaps = []
    for a in pw:
        pa = pred == a
        for b in gw:
            n = int(np.count_nonzero(pa & (gt == b)))
            if n:
                overlaps.append((-n, int(a), int(b)))
    overlaps.sort()
    mapping: dict[int, int] = {}
    used = set()
    for _, a, b in overlaps:
        if a in mapping or b in used:
            continue
        mapping[a] = b
        used.add(b)
    for a in pw:
        out[pred == a] = mapping.get(int(a), -1)
    return out


def pixel_error(pred: SegmentationMap, gt: SegmentationMap) -> float:
    """Fraction of pixels labelled differently (after wall alignment in CS mode)."""
    if pred.mode != gt.mode:
        raise ValueError(f"segmentation modes differ: {pred.mode} vs {gt.mode}")
    if pred.labels.shape != gt.labels.shape:
        raise ValueError("segmentation shapes differ")
    p = align_walls(pred.labels, gt.labels) if pred.mode == CS else pred.labels
    return float(np.count_nonzero(p != gt.labels)) / p.size


def corner_error(pred, gt, geom: ImageGeometry) -> float:
    """Mean corner distance in pixels over the image diagonal.

    Both sets must have the same number of ceiling/floor pairs; they are
    matched in left-to-right order under the best cyclic shift, with column
    differences taken around the seam.
    """
    pa = _pairs(pred)
    ga = _pairs(gt)
    if len(pa) != len(ga):
        raise LayoutError(f"corner count mismatch: {len(pa)} predicted vs {len(ga)} ground-truth pairs")
    w = geom.width
    best = np.inf
    for shift in range(len(pa)):
        d = np.roll(pa, -shift, axis=0) - ga
        du = np.abs(d[..., 0]) % w
        du = np.minimum(du, w - du)
        dist = np.hypot(du, d[..., 1]).mean()
        best = min(best, dist)
    return float(best / geom.diagonal)


def _pairs(c) -> np.ndarray:
    if isinstance(c, CornerSet):
        return c.pairs
    if isinstance(c, LayoutModel):
        return c.walls
    return np.asarray(c, dtype=np.float64).reshape(-1, 2, 2)


def iou3d(a: Layout3D, b: Layout3D) -> float:
    """Volume IoU of two vertical room prisms spanning y in [-1, ceiling_height]."""
    inter_area = polygon.intersection_area(a.floor, b.floor)
    overlap_h = max(0.0, min(a.ceiling_height, b.ceiling_height) + 1.0)
    inter = inter_area * overlap_h
    union = a.volume + b.volume - inter
    return float(inter / union)


@dataclass
class MetricReport:
    """Layout metrics as fractions in [0, 1]; map metrics optional."""

    iou3d: float | None = None
    ce: float | None = None
    pe_ss: float | None = None
    pe_cs: float | None = None
    maps: dict | None = None

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def evaluate_layout(geom: ImageGeometry, pred_corners, gt_corners, pred_3d: Layout3D,
                    gt_3d: Layout3D) -> MetricReport:
    """3DIoU, CE, PE^SS and PE^CS for one panorama.

    CE is left undefined (None) when the corner counts differ.
    """
    try:
        ce = corner_error(pred_corners, gt_corners, geom)
    except LayoutError:
        ce = None
    return MetricReport(
        iou3d=iou3d(pred_3d, gt_3d),
        ce=ce,
        pe_ss=pixel_error(render_segmentation(geom, pred_3d, SS), render_segmentation(geom, gt_3d, SS)),
        pe_cs=pixel_error(render_segmentation(geom, pred_3d, CS), render_segmentation(geom, gt_3d, CS)),
    )


LAYOUT_COLUMNS = (("3DIoU", "iou3d"), ("CE", "ce"), ("PE^SS", "pe_ss"), ("PE^CS", "pe_cs"))


def layout_table(rows: dict[str, MetricReport]) -> str:
    """Plain-text table with the layout metrics as percentages (2 decimals)."""
    name_w = max([len("method")] + [len(k) for k in rows])
    head = f"{'method':<{name_w}}" + "".join(f"{c:>9}" for c, _ in LAYOUT_COLUMNS)
    lines = [head, "-" * len(head)]
    for name, rep in rows.items():
        cells = []
        for _, attr in LAYOUT_COLUMNS:
            v = getattr(rep, attr)
            cells.append(f"{'n/a' if v is None else f'{100 * v:.2f}':>9}")
        lines.append(f"{name:<{name_w}}" + "".join(cells))
    return "\n".join(lines)


MAP_COLUMNS = ("IoU", "Acc", "P", "R", "F1")


def map_table(rows: dict[str, dict]) -> str:
    """Map metrics per row name, as fractions with 3 decimals."""
    name_w = max([len("map")] + [len(k) for k in rows])
    head = f"{'map':<{name_w}}" + "".join(f"{c:>8}" for c in MAP_COLUMNS)
    lines = [head, "-" * len(head)]
    for name, m in rows.items():
        lines.append(f"{name:<{name_w}}" + "".join(f"{m[c]:>8.3f}" for c in MAP_COLUMNS))
    return "\n".join(lines)
