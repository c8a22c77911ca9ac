"""Segmentation evaluation: confusion matrix, IoU/mIoU, precision/recall,
F_beta, class histograms, and inverse-frequency class weights.

Classes with an empty union (never in truth nor prediction) and classes
on the ignore list are excluded from aggregate means rather than counted
as zero, so absent classes do not drag the average down.
"""

from collections import namedtuple

import numpy as np

from .cloud import ClassSchema

DEFAULT_BETAS = (2.0,)

PrecisionRecall = namedtuple(
    "PrecisionRecall",
    ["precision", "recall", "precision_undefined", "recall_undefined"])
Histogram = namedtuple("Histogram", ["counts", "fractions"])
ClassWeights = namedtuple("ClassWeights", ["weights", "absent"])


class ConfusionMatrix:
    """C x C integer counts; rows are ground truth, columns predictions."""

    def __init__(self, schema: ClassSchema, counts=None):
        self.schema = schema
        c = schema.num_classes
        if counts is None:
            counts = np.zeros((c, c), dtype=np.int64)
        else:
            counts = np.asarray(counts, dtype=np.int64)
            if counts.shape != (c, c):
                raise ValueError(f"counts shape {counts.shape} != ({c}, {c})")
            if (counts < 0).any():
                raise ValueError("counts must be non-negative")
        self.counts = counts

    def accumulate(self, truth_labels, pred_labels, ignore=()) -> "ConfusionMatrix":
        """Add one batch of (truth, prediction) label pairs.

        Points whose truth label is in ``ignore`` are skipped entirely.
        """
        truth = np.asarray(truth_labels).astype(np.int64, copy=False)
        pred = np.asarray(pred_labels).astype(np.int64, copy=False)
        if truth.shape != pred.shape:
            raise ValueError(
                f"label arrays differ in length: {truth.shape} vs {pred.shape}")
        c = self.schema.num_classes
        if len(truth):
            if truth.min() < 0 or truth.max() >= c or pred.min() < 0 or pred.max() >= c:
                raise ValueError(f"label outside schema range [0, {c})")
        if ignore:
            keep = ~np.isin(truth, list(ignore))
            truth, pred = truth[keep], pred[keep]
        if len(truth):
            flat = truth * c + pred
            self.counts += np.bincount(flat, minlength=c * c).reshape(c, c)
        return self

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.schema is not self.schema and other.schema != self.schema:
            raise ValueError("cannot merge matrices with different schemas")
        return ConfusionMatrix(self.schema, self.counts + other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def tp(self, c: int) -> int:
        return int(self.counts[c, c])

    def fp(self, c: int) -> int:
        return int(self.counts[:, c].sum() - self.counts[c, c])

    def fn(self, c: int) -> int:
        return int(self.counts[c, :].sum() - self.counts[c, c])

    def support(self, c: int) -> int:
        """Ground-truth point count for class c."""
        return int(self.counts[c, :].sum())


def iou(cm: ConfusionMatrix, c: int) -> float:
    """TP / (TP + FP + FN); NaN when the union is empty (class absent)."""
    union = cm.tp(c) + cm.fp(c) + cm.fn(c)
    if union == 0:
        return float("nan")
    return cm.tp(c) / union


def evaluable_classes(cm: ConfusionMatrix, ignore=()) -> list:
    """Class ids that enter aggregate means: not ignored, non-empty union."""
    skip = set(ignore) | set(cm.schema.eval_ignore)
    out = []
    for c in range(cm.schema.num_classes):
        if c in skip:
            continue
        if cm.tp(c) + cm.fp(c) + cm.fn(c) > 0:
            out.append(c)
    return out


def miou(cm: ConfusionMatrix, ignore=()) -> float:
    classes = evaluable_classes(cm, ignore)
    if not classes:
        raise ValueError("mIoU undefined: no evaluable classes")
    return float(np.mean([iou(cm, c) for c in classes]))


def precision_recall(cm: ConfusionMatrix, c: int) -> PrecisionRecall:
    """Per-class precision and recall; 0/0 yields 0 with an undefined flag."""
    tp, fp, fn = cm.tp(c), cm.fp(c), cm.fn(c)
    p_undef = (tp + fp) == 0
    r_undef = (tp + fn) == 0
    precision = 0.0 if p_undef else tp / (tp + fp)
    recall = 0.0 if r_undef else tp / (tp + fn)
    return PrecisionRecall(precision, recall, p_undef, r_undef)


def f_beta(precision: float, recall: float, beta: float) -> float:
    """(1 + beta^2) P R / (beta^2 P + R); zero when the numerator is zero."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    num = (1.0 + beta * beta) * precision * recall
    if num == 0.0:
        return 0.0
    return num / (beta * beta * precision + recall)


def class_histogram(labels, schema: ClassSchema) -> Histogram:
    """Counts and fractions per schema class; all-zero for empty input."""
    labels = np.asarray(labels).astype(np.int64, copy=False)
    c = schema.num_classes
    if len(labels) and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"label outside schema range [0, {c})")
    counts = np.bincount(labels, minlength=c)
    total = counts.sum()
    fractions = counts / total if total else np.zeros(c)
    return Histogram(counts, fractions)


def inverse_frequency_weights(counts) -> ClassWeights:
    """w_c = total / (present_class_count * n_c); absent classes get 0.

    The n-weighted average of the weights over present classes is 1
    (sum of w_c * n_c equals the total count).
    """
    counts = np.asarray(counts, dtype=np.float64)
    present = counts > 0
    if not present.any():
        raise ValueError("all-zero histogram has no weights")
    total = counts.sum()
    weights = np.zeros_like(counts)
    weights[present] = total / (present.sum() * counts[present])
    return ClassWeights(weights, ~present)


class ClassReport:
    """Per-class and aggregate metrics for one evaluation run."""

    def __init__(self, cm: ConfusionMatrix, betas=DEFAULT_BETAS, ignore=()):
        self.schema = cm.schema
        self.betas = tuple(betas)
        self.ignore = frozenset(ignore) | frozenset(cm.schema.eval_ignore)
        self.evaluable = evaluable_classes(cm, ignore)

        self.per_class = {}
        for c in range(cm.schema.num_classes):
            pr = precision_recall(cm, c)
            entry = {
                "name": cm.schema.classes[c].name,
                "iou": iou(cm, c),
                "precision": pr.precision,
                "recall": pr.recall,
                "undefined": pr.precision_undefined and pr.recall_undefined,
                "support": cm.support(c),
                "f_beta": {beta: f_beta(pr.precision, pr.recall, beta)
                           for beta in self.betas},
            }
            self.per_class[c] = entry

        self.miou = miou(cm, ignore)
        self.macro_f_beta = {
            beta: float(np.mean([self.per_class[c]["f_beta"][beta]
                                 for c in self.evaluable]))
            for beta in self.betas
        }

    def to_dict(self) -> dict:
        def clean(x):
            return None if isinstance(x, float) and np.isnan(x) else x
        return {
            "schema": self.schema.name,
            "miou": self.miou,
            "macro_f_beta": {f"{b:g}": v for b, v in self.macro_f_beta.items()},
            "betas": [float(b) for b in self.betas],
            "ignored_classes": sorted(self.ignore),
            "classes": [
                {
                    "id": c,
                    "name": e["name"],
                    "iou": clean(e["iou"]),
                    "precision": e["precision"],
                    "recall": e["recall"],
                    "undefined": bool(e["undefined"]),
                    "support": e["support"],
                    "f_beta": {f"{b:g}": v for b, v in e["f_beta"].items()},
                }
                for c, e in self.per_class.items()
            ],
        }

    def to_text(self, row_label: str = "run") -> str:
        """Aligned table: one mIoU column, then per-class columns."""
        names = [self.per_class[c]["name"] for c in self.per_class]
        header = [row_label, "mIoU"] + names

        def fmt(c, value):
            if c not in self.evaluable or np.isnan(value):
                return "---"
            return f"{value:.4f}"

        rows = [["iou", f"{self.miou:.4f}"] +
                [fmt(c, self.per_class[c]["iou"]) for c in self.per_class]]
        rows.append(["precision", "---"] +
                    [fmt(c, self.per_class[c]["precision"]) for c in self.per_class])
        rows.append(["recall", "---"] +
                    [fmt(c, self.per_class[c]["recall"]) for c in self.per_class])
        for beta in self.betas:
            rows.append([f"f{beta:g}", f"{self.macro_f_beta[beta]:.4f}"] +
                        [fmt(c, self.per_class[c]["f_beta"][beta])
                         for c in self.per_class])

        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
                 for r in [header] + rows]
        return "\n".join(lines)
