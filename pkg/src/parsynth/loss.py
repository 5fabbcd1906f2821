"""Augmented binary cross-entropy over the extended label alphabet.

Per train image i with M attributes, predicted probabilities p and labels y:

    L_i = -(1/M) * sum_m  w_im * ( 1[y_im != 0] * log p_im
                                 + 1[y_im == 0] * log(1 - p_im) )

with per-entry weights

    w_im = 0                 if y_im == -1   (uncertain: ignored)
    w_im = weight_augmented  if y_im == 3    (prompt-implied positive)
    w_im = 1                 if y_im in {0, 1, 2}

When every label is 0/1 and all weights are 1 this reduces to the standard
mean binary cross-entropy.  Probabilities are clamped to
[eps, 1 - eps] (eps = 1e-7) before the logs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .manifest import DatasetManifest

EPSILON = 1e-7


def _check_inputs(targets, probabilities):
    t = np.asarray(targets)
    p = np.asarray(probabilities, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 2:
        raise ValueError(f"shape mismatch: targets {t.shape} vs probs {p.shape}")
    if not np.isin(t, (-1, 0, 1, 2, 3)).all():
        raise ValueError("targets contain values outside {-1,0,1,2,3}")
    if not np.isfinite(p).all():
        raise ValueError("probabilities contain non-finite values")
    return t, p


def weights_for(targets: np.ndarray, weight_augmented: float = 0.5) -> np.ndarray:
    """Per-entry loss weights for an extended-label target matrix."""
    if not 0.0 <= weight_augmented <= 1.0:
        raise ValueError("weight_augmented must be in [0, 1]")
    t = np.asarray(targets)
    w = np.ones(t.shape, dtype=np.float64)
    w[t == -1] = 0.0
    w[t == 3] = weight_augmented
    return w


def bce_augmented(targets: np.ndarray, probabilities: np.ndarray,
                  weight_augmented: float = 0.5,
                  ) -> tuple[np.ndarray, float]:
    """Per-image losses (length N) and their mean."""
    t, p = _check_inputs(targets, probabilities)
    w = weights_for(t, weight_augmented)
    pc = np.clip(p, EPSILON, 1.0 - EPSILON)
    pos_term = np.where(t != 0, np.log(pc), 0.0)
    neg_term = np.where(t == 0, np.log1p(-pc), 0.0)
    per_image = -(w * (pos_term + neg_term)).sum(axis=1) / t.shape[1]
    return per_image, float(per_image.mean()) if len(per_image) else 0.0


def bce_augmented_grad(targets: np.ndarray, probabilities: np.ndarray,
                       weight_augmented: float = 0.5) -> np.ndarray:
    """d L_i / d p_im for every entry; exactly zero where the weight is."""
    t, p = _check_inputs(targets, probabilities)
    w = weights_for(t, weight_augmented)
    m = t.shape[1]
    pc = np.clip(p, EPSILON, 1.0 - EPSILON)
    grad = np.where(t != 0, -1.0 / pc, 1.0 / (1.0 - pc))
    return (w / m) * grad


def export_targets(labels: np.ndarray) -> np.ndarray:
    """Trainer-facing 0/1 targets: {1,2,3} -> 1; {0,-1} -> 0.

    A -1 exports as 0 but carries zero weight, so the value never reaches
    the loss.
    """
    arr = np.asarray(labels)
    return (arr >= 1).astype(np.int64)


def emit_weight_matrix(m: DatasetManifest, weight_augmented: float,
                       path: str | Path) -> int:
    """Write one row per train record: id, M target columns, M weight
    columns.  Returns the number of rows written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = m.schema.names
    rows = 0
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id"]
                   + [f"target_{n}" for n in names]
                   + [f"weight_{n}" for n in names])
        for rec in m.records:
            if rec.split != "train":
                continue
            labels = np.asarray(rec.labels)
            targets = export_targets(labels)
            weights = weights_for(labels[None, :], weight_augmented)[0]
            w.writerow([rec.id]
                       + [str(int(v)) for v in targets]
                       + [f"{v:g}" for v in weights])
            rows += 1
    return rows
