"""Pixel confusion matrix and the OA / F1 / IoU scores derived from it.

The building class (mask value 1) is the positive class.  Counts are
plain integers, so merging partial matrices computed in parallel is
exact and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


def _check_binary(arr: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(arr)
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 values")
    return arr


def accumulate(cm: ConfusionMatrix, pred: np.ndarray, gt: np.ndarray) -> ConfusionMatrix:
    """Add per-pixel counts for one prediction/ground-truth pair."""
    pred = _check_binary(pred, "pred")
    gt = _check_binary(gt, "gt")
    if pred.shape != gt.shape:
        raise DimensionError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    p = pred == 1
    g = gt == 1
    return cm + ConfusionMatrix(
        tp=int(np.sum(p & g)),
        fp=int(np.sum(p & ~g)),
        fn=int(np.sum(~p & g)),
        tn=int(np.sum(~p & ~g)),
    )


def _check_total(cm: ConfusionMatrix) -> None:
    if cm.total == 0:
        raise ValueError("no pixels evaluated")


def overall_accuracy(cm: ConfusionMatrix) -> float:
    _check_total(cm)
    return (cm.tp + cm.tn) / cm.total


def f1(cm: ConfusionMatrix) -> float:
    """Building-class F1.  tp = fp = fn = 0 scores 1 so all-background
    tiles predicted as all-background do not poison aggregates."""
    _check_total(cm)
    denom = 2 * cm.tp + cm.fp + cm.fn
    if denom == 0:
        return 1.0
    return 2 * cm.tp / denom


def iou(cm: ConfusionMatrix) -> float:
    """Building-class intersection over union; same empty-class convention as f1."""
    _check_total(cm)
    denom = cm.tp + cm.fp + cm.fn
    if denom == 0:
        return 1.0
    return cm.tp / denom


def metrics_line(cm: ConfusionMatrix) -> str:
    """Machine-readable one-liner with 4 decimal places."""
    return (f"OA={overall_accuracy(cm):.4f} F1={f1(cm):.4f} "
            f"IoU={iou(cm):.4f}")
