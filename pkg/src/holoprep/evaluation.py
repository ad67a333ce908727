"""Detection and classification metrics.

Detection scoring follows the standard protocol behind mAP at IoU 0.5: greedy
confidence-ordered matching against unmatched same-class ground truths, then
per-class average precision from the precision envelope over recall. All-point
(continuous) interpolation is the default; 11-point is available via a flag.
Classification scoring produces a confusion matrix and overall accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import Annotation, BBox

ALL_POINT = "all"
ELEVEN_POINT = "11point"


@dataclass(frozen=True)
class Detection:
    """A scored box prediction on one image."""

    image_id: str
    box: BBox
    class_id: int
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")


@dataclass(frozen=True)
class EvalResult:
    """Metrics container shared by detection and classification scoring."""

    class_names: tuple[str, ...]
    per_class_ap: Mapping[str, float] = field(default_factory=dict)
    map50: float | None = None
    pr_curves: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    tp: int = 0
    fp: int = 0
    n_gt: int = 0
    confusion: np.ndarray | None = None
    accuracy: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "classes": list(self.class_names),
            "per_class_ap": {k: v for k, v in self.per_class_ap.items()},
            "map50": self.map50,
            "tp": self.tp,
            "fp": self.fp,
            "n_gt": self.n_gt,
            "accuracy": self.accuracy,
            "confusion": None if self.confusion is None else self.confusion.tolist(),
        }


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 for disjoint boxes. Boxes must share a space."""
    if a.space is not b.space:
        raise ValueError("IoU requires boxes in the same coordinate space")
    x0, y0 = max(a.x0, b.x0), max(a.y0, b.y0)
    x1, y1 = min(a.x1, b.x1), min(a.y1, b.y1)
    inter = max(0.0, x1 - x0) * max(0.0, y1 - y0)
    if inter == 0.0:
        return 0.0
    # areas from the same corner arithmetic as the intersection, so
    # identical boxes give exactly 1.0
    area_a = (a.x1 - a.x0) * (a.y1 - a.y0)
    area_b = (b.x1 - b.x0) * (b.y1 - b.y0)
    return inter / (area_a + area_b - inter)


@dataclass(frozen=True)
class MatchedDetection:
    detection: Detection
    is_tp: bool
    matched_iou: float


def match_detections(
    detections: Sequence[Detection],
    ground_truths: Mapping[str, Sequence[Annotation]],
    iou_threshold: float = 0.5,
) -> list[MatchedDetection]:
    """Greedy TP/FP assignment in descending confidence order (ties keep input order).

    Each detection claims the unmatched same-class ground truth with the
    highest IoU at or above the threshold on its image; every ground truth
    matches at most one detection. Returns matches in the scoring order.
    """
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))
    taken: set[tuple[str, int]] = set()
    results = []
    for i in order:
        det = detections[i]
        candidates = ground_truths.get(det.image_id, ())
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(candidates):
            if gt.class_id != det.class_id or (det.image_id, j) in taken:
                continue
            overlap = iou(det.box, gt.box)
            if overlap > best_iou:
                best_iou, best_j = overlap, j
        if best_j >= 0 and best_iou >= iou_threshold:
            taken.add((det.image_id, best_j))
            results.append(MatchedDetection(det, True, best_iou))
        else:
            results.append(MatchedDetection(det, False, best_iou))
    return results


def precision_recall_points(tp_flags: Sequence[bool], n_ground_truth: int) -> list[tuple[float, float]]:
    """(recall, precision) after each detection in confidence order."""
    points = []
    tp = fp = 0
    for flag in tp_flags:
        tp += 1 if flag else 0
        fp += 0 if flag else 1
        recall = tp / n_ground_truth if n_ground_truth > 0 else 0.0
        points.append((recall, tp / (tp + fp)))
    return points


def average_precision(
    tp_flags: Sequence[bool],
    n_ground_truth: int,
    interpolation: str = ALL_POINT,
) -> float:
    """Area under the precision envelope as a function of recall.

    Precision is replaced by its running maximum from the right, and the
    envelope is integrated with exact rectangles (all-point interpolation).
    With interpolation="11point", precision is instead averaged at recalls
    0.0, 0.1, ..., 1.0. Returns 0 when there is no ground truth.
    """
    if interpolation not in (ALL_POINT, ELEVEN_POINT):
        raise ValueError(f"interpolation must be '{ALL_POINT}' or '{ELEVEN_POINT}'")
    if n_ground_truth <= 0 or not tp_flags:
        return 0.0
    points = precision_recall_points(tp_flags, n_ground_truth)
    recalls = np.array([0.0] + [r for r, _ in points])
    precisions = np.array([0.0] + [p for _, p in points])
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    if interpolation == ELEVEN_POINT:
        samples = []
        for level in np.linspace(0.0, 1.0, 11):
            reachable = envelope[recalls >= level - 1e-12]
            samples.append(float(reachable.max()) if reachable.size else 0.0)
        return float(np.mean(samples))
    ap = 0.0
    for k in range(1, len(recalls)):
        ap += (recalls[k] - recalls[k - 1]) * envelope[k]
    return float(ap)


def map50(
    detections: Sequence[Detection],
    ground_truths: Mapping[str, Sequence[Annotation]],
    class_names: Sequence[str],
    iou_threshold: float = 0.5,
    interpolation: str = ALL_POINT,
) -> EvalResult:
    """Mean average precision over classes with at least one ground truth.

    Ground truths are keyed by image id. Classes absent from the ground truth
    are excluded from the mean; an entirely empty ground truth is an error.
    """
    gt_counts = {c: 0 for c in range(len(class_names))}
    for anns in ground_truths.values():
        for ann in anns:
            if not 0 <= ann.class_id < len(class_names):
                raise ValueError(f"ground-truth class {ann.class_id} outside vocabulary of {len(class_names)}")
            gt_counts[ann.class_id] += 1
    total_gt = sum(gt_counts.values())
    if total_gt == 0:
        raise ValueError("no ground-truth annotations; mAP is undefined")

    matches = match_detections(detections, ground_truths, iou_threshold)
    per_class_ap: dict[str, float] = {}
    pr_curves: dict[str, tuple[tuple[float, float], ...]] = {}
    scored = []
    for class_id, cname in enumerate(class_names):
        if gt_counts[class_id] == 0:
            continue
        flags = [m.is_tp for m in matches if m.detection.class_id == class_id]
        per_class_ap[cname] = average_precision(flags, gt_counts[class_id], interpolation)
        pr_curves[cname] = tuple(precision_recall_points(flags, gt_counts[class_id]))
        scored.append(per_class_ap[cname])
    tp = sum(1 for m in matches if m.is_tp)
    return EvalResult(
        class_names=tuple(class_names),
        per_class_ap=per_class_ap,
        map50=float(np.mean(scored)) if scored else 0.0,
        pr_curves=pr_curves,
        tp=tp,
        fp=len(matches) - tp,
        n_gt=total_gt,
    )


def classification_metrics(
    predicted: Sequence[int],
    truth: Sequence[int],
    n_classes: int,
    class_names: Sequence[str] | None = None,
) -> EvalResult:
    """Confusion matrix (rows = truth, cols = predicted) and overall accuracy."""
    if len(predicted) != len(truth):
        raise ValueError(f"prediction/truth length mismatch: {len(predicted)} vs {len(truth)}")
    names = tuple(class_names) if class_names is not None else tuple(str(i) for i in range(n_classes))
    if len(names) != n_classes:
        raise ValueError("class_names length must equal n_classes")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for p, t in zip(predicted, truth):
        if not (0 <= p < n_classes and 0 <= t < n_classes):
            raise ValueError(f"label out of range [0, {n_classes}): pred={p} truth={t}")
        confusion[t, p] += 1
    total = int(confusion.sum())
    accuracy = float(np.trace(confusion) / total) if total else 0.0
    return EvalResult(class_names=names, confusion=confusion, accuracy=accuracy, n_gt=total)
