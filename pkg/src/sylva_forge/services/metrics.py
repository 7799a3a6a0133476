"""
Segmentation metrics over confusion matrices.

Rows are ground truth and columns prediction. Classes with no support
(zero row sum) are left out of the class-average accuracy, classes with an
empty union are left out of the mean IoU.
"""

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from sylva_forge.core.exceptions import DomainError, ForgeValidationError
from sylva_forge.core.parallel import chunk_bounds, parallel_map
from sylva_forge.models.enums import Category
from sylva_forge.models.reports import ClassReport, EvalReport
from sylva_forge.schema.categories import get_collapse

logger = logging.getLogger(__name__)

CHUNK_SAMPLES = 1 << 20


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix with class names."""

    counts: np.ndarray
    classes: tuple[str, ...]

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ForgeValidationError(f"Confusion matrix must be square, got shape {counts.shape}")
        if (counts < 0).any():
            raise ForgeValidationError("Confusion matrix counts must be non-negative")
        if len(self.classes) != counts.shape[0]:
            raise ForgeValidationError(
                f"{len(self.classes)} class names for a {counts.shape[0]}-class matrix"
            )
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "classes", tuple(self.classes))

    @classmethod
    def of(cls, counts, classes: Sequence[str] | None = None) -> "ConfusionMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        if classes is None:
            classes = default_class_names(counts.shape[0])
        return cls(counts, tuple(classes))

    @property
    def size(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise ForgeValidationError("Cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.counts + other.counts, self.classes)


def default_class_names(c: int) -> tuple[str, ...]:
    """Category slugs for four classes, plain indices otherwise."""
    if c == len(Category):
        return tuple(cat.slug for cat in Category)
    return tuple(str(i) for i in range(c))


def _as_matrix(m: ConfusionMatrix | np.ndarray | Sequence[Sequence[int]]) -> ConfusionMatrix:
    return m if isinstance(m, ConfusionMatrix) else ConfusionMatrix.of(m)


def confusion(
    truth,
    pred,
    c: int,
    classes: Sequence[str] | None = None,
    workers: int | None = None,
) -> ConfusionMatrix:
    """
    M[t][p] counts samples with truth t predicted as p.

    Args:
        truth: Integer class codes.
        pred: Integer class codes, same length as `truth`.
        c: Number of classes.
        classes: Optional class names for reports.
        workers: Threads over fixed-size chunks.

    Raises:
        ForgeValidationError: Lengths differ or a code is outside [0, c).
    """
    truth = np.asarray(truth, dtype=np.int64).reshape(-1)
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    if len(truth) != len(pred):
        raise ForgeValidationError(
            f"Truth and prediction lengths differ: {len(truth)} vs {len(pred)}"
        )
    if c < 1:
        raise ForgeValidationError(f"Class count must be >= 1, got {c}")
    for name, values in (("truth", truth), ("prediction", pred)):
        bad = (values < 0) | (values >= c)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ForgeValidationError(f"{name} label {values[i]} at index {i} outside [0, {c})")

    def count(span: tuple[int, int]) -> np.ndarray:
        lo, hi = span
        return np.bincount(truth[lo:hi] * c + pred[lo:hi], minlength=c * c)

    spans = chunk_bounds(len(truth), math.ceil(len(truth) / CHUNK_SAMPLES))
    counts = np.sum(parallel_map(count, spans, workers), axis=0).reshape(c, c)
    return ConfusionMatrix.of(counts, classes)


def overall_accuracy(m) -> float:
    """Trace over total."""
    m = _as_matrix(m)
    if m.total == 0:
        raise DomainError("Overall accuracy of an empty confusion matrix")
    return float(np.trace(m.counts) / m.total)


def class_avg_accuracy(m) -> float:
    """Mean row recall over classes with support."""
    counts = _as_matrix(m).counts
    support = counts.sum(axis=1)
    present = support > 0
    if not present.any():
        raise DomainError("Class average accuracy needs at least one class with support")
    return float(np.mean(np.diag(counts)[present] / support[present]))


def _ious(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    tp = np.diag(counts).astype(np.float64)
    union = counts.sum(axis=1) + counts.sum(axis=0) - tp
    iou = np.divide(tp, union, out=np.zeros_like(tp), where=union > 0)
    return iou, union > 0


def mean_iou(m) -> float:
    """Mean of TP / (TP + FP + FN) over classes with a non-empty union."""
    iou, valid = _ious(_as_matrix(m).counts)
    if not valid.any():
        raise DomainError("Mean IoU needs at least one class with a non-empty union")
    return float(iou[valid].mean())


def mean_iou_chunked(matrices: Iterable) -> float:
    """Average of per-matrix mean IoUs, skipping matrices with nothing to score."""
    values = []
    for m in matrices:
        _, valid = _ious(_as_matrix(m).counts)
        if valid.any():
            values.append(mean_iou(m))
    if not values:
        raise DomainError("No matrix with a non-empty union to average")
    return float(np.mean(values))


def collapse(m, mapping: Mapping[str, str]) -> ConfusionMatrix:
    """Sum counts into superclasses; superclass order is first appearance in class order."""
    m = _as_matrix(m)
    missing = [name for name in m.classes if name not in mapping]
    if missing:
        raise ForgeValidationError(f"Collapse mapping is not total, missing: {missing}")
    supers = list(dict.fromkeys(mapping[name] for name in m.classes))
    membership = np.zeros((m.size, len(supers)), dtype=np.int64)
    for i, name in enumerate(m.classes):
        membership[i, supers.index(mapping[name])] = 1
    return ConfusionMatrix(membership.T @ m.counts @ membership, tuple(supers))


def class_report(m) -> list[ClassReport]:
    m = _as_matrix(m)
    counts = m.counts
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    tp = np.diag(counts)
    iou, valid = _ious(counts)
    return [
        ClassReport(
            name=name,
            support=int(support[i]),
            predicted=int(predicted[i]),
            recall=float(tp[i] / support[i]) if support[i] else None,
            precision=float(tp[i] / predicted[i]) if predicted[i] else None,
            iou=float(iou[i]) if valid[i] else None,
        )
        for i, name in enumerate(m.classes)
    ]


def evaluate_matrix(m, source: str, collapse_name: str | None = None) -> EvalReport:
    """Full report of one matrix, with a collapsed sub-report when asked."""
    m = _as_matrix(m)
    collapsed = None
    if collapse_name is not None:
        mapping = get_collapse(collapse_name)
        if mapping is None:
            raise ForgeValidationError(f"Unknown collapse '{collapse_name}'")
        collapsed = evaluate_matrix(collapse(m, mapping), f"{source} [{collapse_name}]")
    report = EvalReport(
        source=source,
        classes=list(m.classes),
        matrix=m.counts.tolist(),
        total=m.total,
        overall_accuracy=overall_accuracy(m),
        class_avg_accuracy=class_avg_accuracy(m),
        mean_iou=mean_iou(m),
        per_class=class_report(m),
        collapsed=collapsed,
    )
    logger.info(
        f"Evaluated: source={source} total={report.total} oa={report.overall_accuracy:.4f} "
        f"macc={report.class_avg_accuracy:.4f} miou={report.mean_iou:.4f}"
    )
    return report
