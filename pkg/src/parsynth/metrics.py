"""Multi-label recognition metrics.

Two views of the same prediction matrix:

* label-based, one row per attribute: precision / recall / F1 plus
  ``label_accuracy`` = (TPR + TNR) / 2 (the "mA" column of reports);
* example-based, one number per matrix: per-image set overlap between
  predicted and ground-truth positive labels, averaged over images.

Everything is kept at full precision on a 0-100 percent scale; rounding to
two decimals happens only when writing reports.  Any 0/0 ratio evaluates
to 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-attribute binary confusion quadruples (vectors of length M)."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def evaluated(self) -> np.ndarray:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def positives(self) -> np.ndarray:
        """Ground-truth positive count per attribute."""
        return self.tp + self.fn


@dataclass(frozen=True)
class AttributeMetrics:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    label_accuracy: np.ndarray


@dataclass(frozen=True)
class ExampleMetrics:
    acc: float
    prec: float
    rec: float
    f1: float


def binarize(probabilities: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(probabilities) >= threshold).astype(np.int64)


def _check_binary_pair(preds, truth) -> tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(preds)
    truth = np.asarray(truth)
    if preds.shape != truth.shape or preds.ndim != 2:
        raise ValueError(
            f"shape mismatch: preds {preds.shape} vs truth {truth.shape}")
    for name, m in (("preds", preds), ("truth", truth)):
        if not np.isin(m, (0, 1)).all():
            raise ValueError(f"{name} must contain only 0/1 entries")
    return preds.astype(bool), truth.astype(bool)


def confusion(preds: np.ndarray, truth: np.ndarray) -> ConfusionCounts:
    p, t = _check_binary_pair(preds, truth)
    return ConfusionCounts(
        tp=(p & t).sum(axis=0),
        fp=(p & ~t).sum(axis=0),
        fn=(~p & t).sum(axis=0),
        tn=(~p & ~t).sum(axis=0),
    )


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def attribute_metrics(c: ConfusionCounts) -> AttributeMetrics:
    precision = _safe_div(c.tp, c.tp + c.fp)
    recall = _safe_div(c.tp, c.tp + c.fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    tnr = _safe_div(c.tn, c.tn + c.fp)
    return AttributeMetrics(
        precision=precision * 100.0,
        recall=recall * 100.0,
        f1=f1 * 100.0,
        label_accuracy=(recall + tnr) / 2.0 * 100.0,
    )


def positive_jaccard(c: ConfusionCounts) -> np.ndarray:
    """Per-attribute |P∩G| / |P∪G| over images, the report "Acc" column."""
    return _safe_div(c.tp, c.tp + c.fp + c.fn) * 100.0


def example_metrics(preds: np.ndarray, truth: np.ndarray) -> ExampleMetrics:
    """Instance-based metrics over positive labels.

    Per image i with predicted set P and ground-truth set G:
    Acc=|P∩G|/|P∪G|, Prec=|P∩G|/|P|, Rec=|P∩G|/|G|, F1 harmonic; the means
    run over images where P∪G is non-empty.
    """
    p, t = _check_binary_pair(preds, truth)
    inter = (p & t).sum(axis=1).astype(np.float64)
    union = (p | t).sum(axis=1).astype(np.float64)
    np_pred = p.sum(axis=1).astype(np.float64)
    np_true = t.sum(axis=1).astype(np.float64)
    keep = union > 0
    if not keep.any():
        return ExampleMetrics(0.0, 0.0, 0.0, 0.0)
    acc = _safe_div(inter, union)[keep]
    prec = _safe_div(inter, np_pred)[keep]
    rec = _safe_div(inter, np_true)[keep]
    f1 = _safe_div(2 * prec * rec, prec + rec)
    return ExampleMetrics(
        acc=float(acc.mean() * 100.0),
        prec=float(prec.mean() * 100.0),
        rec=float(rec.mean() * 100.0),
        f1=float(f1.mean() * 100.0),
    )


def write_metrics_report(path: str | Path, names: list[str] | tuple[str, ...],
                         c: ConfusionCounts) -> None:
    """Report CSV: attribute, ma, acc, prec, rec, f1, num_images."""
    am = attribute_metrics(c)
    jac = positive_jaccard(c)
    pos = c.positives
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["attribute", "ma", "acc", "prec", "rec", "f1", "num_images"])
        for i, name in enumerate(names):
            w.writerow([
                name,
                f"{am.label_accuracy[i]:.2f}",
                f"{jac[i]:.2f}",
                f"{am.precision[i]:.2f}",
                f"{am.recall[i]:.2f}",
                f"{am.f1[i]:.2f}",
                int(pos[i]),
            ])
