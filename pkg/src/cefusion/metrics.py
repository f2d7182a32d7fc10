"""Confusion matrices, macro-F1 and UAR.

Undefined precision / recall / F1 (zero denominators) count as 0 and
stay in the mean unless ``absent="exclude"`` is passed, in which case
classes with neither support nor predictions are dropped from the mean.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, ParameterError

ABSENT_POLICIES = ("zero", "exclude")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DataError(f"confusion matrix must be square, got {c.shape}")
        if len(self.class_names) != c.shape[0]:
            raise DataError("class_names length does not match matrix size")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.class_names != other.class_names:
            raise DataError("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.counts + other.counts, self.class_names)


def confusion(truth, pred, n_classes: int, class_names=None) -> ConfusionMatrix:
    """Rows are true labels, columns predictions."""
    t = np.asarray(truth)
    p = np.asarray(pred)
    if t.shape != p.shape or t.ndim != 1:
        raise DataError(f"truth and predictions must be 1-D of equal length, got {t.shape} and {p.shape}")
    if t.size and (t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes):
        raise DataError(f"labels must lie in [0, {n_classes})")
    t = t.astype(np.int64)
    p = p.astype(np.int64)
    counts = np.bincount(t * n_classes + p, minlength=n_classes * n_classes).reshape(n_classes, n_classes)
    names = tuple(class_names) if class_names is not None else tuple(str(i) for i in range(n_classes))
    return ConfusionMatrix(counts, names)


def _check(cm: ConfusionMatrix, absent: str):
    if absent not in ABSENT_POLICIES:
        raise ParameterError(f"absent must be one of {ABSENT_POLICIES}, got {absent!r}")
    if cm.counts.size == 0 or cm.total == 0:
        raise DataError("cannot score an empty confusion matrix")


def _safe_div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def per_class_recall(cm: ConfusionMatrix) -> np.ndarray:
    c = cm.counts
    return _safe_div(np.diag(c), c.sum(axis=1))


def per_class_precision(cm: ConfusionMatrix) -> np.ndarray:
    c = cm.counts
    return _safe_div(np.diag(c), c.sum(axis=0))


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    # 2TP / (2TP + FP + FN) equals 2PR/(P+R) and is 0 whenever P+R is 0.
    c = cm.counts
    tp = np.diag(c)
    return _safe_div(2 * tp, c.sum(axis=0) + c.sum(axis=1))


def _present(cm: ConfusionMatrix) -> np.ndarray:
    c = cm.counts
    return (c.sum(axis=0) + c.sum(axis=1)) > 0


def macro_f1(cm: ConfusionMatrix, absent: str = "zero") -> float:
    _check(cm, absent)
    f1 = per_class_f1(cm)
    if absent == "exclude":
        f1 = f1[_present(cm)]
    return float(f1.mean())


def uar(cm: ConfusionMatrix, absent: str = "zero") -> float:
    _check(cm, absent)
    rec = per_class_recall(cm)
    if absent == "exclude":
        rec = rec[_present(cm)]
    return float(rec.mean())


METRICS = {"macro_f1": macro_f1, "uar": uar}


def normalize_metric(metric: str) -> str:
    m = str(metric).lower().replace("-", "_")
    m = {"f1": "macro_f1", "macro_f1": "macro_f1", "uar": "uar"}.get(m, m)
    if m not in METRICS:
        raise ParameterError(f"metric must be one of {tuple(METRICS)} (or 'f1'), got {metric!r}")
    return m


def score_labels(truth, pred, n_classes: int, metric: str = "macro_f1") -> float:
    return METRICS[normalize_metric(metric)](confusion(truth, pred, n_classes))


@dataclass(frozen=True)
class EvaluationReport:
    macro_f1: float
    uar: float
    per_class_f1: tuple[float, ...]
    per_class_recall: tuple[float, ...]
    confusion: ConfusionMatrix
    frames_evaluated: int

    def to_dict(self) -> dict:
        names = self.confusion.class_names
        return {
            "macro_f1": self.macro_f1,
            "uar": self.uar,
            "per_class_f1": dict(zip(names, self.per_class_f1)),
            "per_class_recall": dict(zip(names, self.per_class_recall)),
            "confusion": {"class_names": list(names), "counts": self.confusion.counts.tolist()},
            "frames_evaluated": self.frames_evaluated,
        }

    def summary(self) -> str:
        """Percentages with two decimals, e.g. ``F1 = 46.79  UAR = 51.79``."""
        return f"F1 = {100 * self.macro_f1:.2f}  UAR = {100 * self.uar:.2f}  (frames = {self.frames_evaluated})"


def evaluate(truth, pred, class_names, absent: str = "zero") -> EvaluationReport:
    cm = confusion(truth, pred, len(class_names), class_names)
    _check(cm, absent)
    f1 = per_class_f1(cm)
    rec = per_class_recall(cm)
    return EvaluationReport(
        macro_f1=macro_f1(cm, absent),
        uar=uar(cm, absent),
        per_class_f1=tuple(float(x) for x in f1),
        per_class_recall=tuple(float(x) for x in rec),
        confusion=cm,
        frames_evaluated=cm.total,
    )
