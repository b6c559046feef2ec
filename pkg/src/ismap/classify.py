"""Transductive prediction from anchor dot products."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass
class Prediction:
    labels: np.ndarray
    decision: np.ndarray  # (N, C)
    abstain: np.ndarray

    @property
    def binary(self):
        return self.decision.shape[1] == 2


def predict(R, anchors):
    """Classify every row of ``R`` by its dot products with the class anchors.

    Two classes use the single class-0 anchor: positive dot product means
    class 0, negative class 1.  More classes take the argmax over anchors.
    Rows whose decision values are all zero abstain and fall back to class 0.
    """
    R = np.asarray(R, dtype=np.float64)
    idx = anchors.anchors if hasattr(anchors, "anchors") else np.asarray(anchors)
    if len(idx) == 2:
        dot = R @ R[idx[0]]
        decision = np.column_stack([dot, -dot])
    else:
        decision = R @ R[idx].T
    abstain = np.all(decision == 0.0, axis=1)
    # argmax returns the first (lowest class id) on ties
    labels = np.argmax(decision, axis=1)
    return Prediction(labels=labels.astype(np.int64), decision=decision, abstain=abstain)


def score(prediction, truth, mask=None):
    """Percentage of masked points whose prediction matches ``truth``."""
    truth = np.asarray(truth)
    pred = prediction.labels if hasattr(prediction, "labels") else np.asarray(prediction)
    mask = np.ones(truth.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ParameterError("mask", "evaluation mask selects no points")
    return 100.0 * float(np.mean(pred[mask] == truth[mask]))


def nearest_centroid_baseline(points, labels):
    """Input-space baseline: label every point by the closest class centroid.

    Centroids are the means of the labeled points (``labels >= 0``).
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels[labels >= 0])
    cent = np.stack([points[labels == c].mean(axis=0) for c in classes])
    d = ((points[:, None, :] - cent[None]) ** 2).sum(axis=2)
    return classes[np.argmin(d, axis=1)]


def save_predictions_csv(prediction, path, ids=None):
    n = prediction.labels.size
    ids = np.arange(n) if ids is None else ids
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "predicted"] + [f"decision_{c}" for c in range(prediction.decision.shape[1])])
        for i in range(n):
            w.writerow([ids[i], int(prediction.labels[i])] + [repr(float(v)) for v in prediction.decision[i]])
