"""Embedding post-processing: PCA spectra, principal-axis alignment, exports."""

import csv
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from . import _kernels
from .constraints import feasibility_metrics  # noqa: F401  (re-exported)
from .errors import ParameterError

MAX_RANK = 64


@dataclass
class EmbeddingResult:
    coords: np.ndarray
    spectrum: np.ndarray
    energy: np.ndarray
    report: Any = None
    anchors: Any = None
    prediction: Optional[Any] = None

    @property
    def rank(self):
        return self.coords.shape[1]


def _centered_gram(R):
    R = np.asarray(R, dtype=np.float64)
    if not np.all(np.isfinite(R)):
        raise ParameterError("R", "non-finite entries")
    Rc = R - R.mean(axis=0)
    return Rc, Rc.T @ Rc


def pca_spectrum(R, tol=1e-12):
    """Singular values of column-centred ``R`` and cumulative energy fractions.

    Computed from a cyclic Jacobi eigen-decomposition of the small
    ``rank x rank`` scatter matrix.
    """
    if R.shape[1] > MAX_RANK:
        raise ParameterError("R", f"rank {R.shape[1]} exceeds the supported {MAX_RANK}")
    _, C = _centered_gram(R)
    w, _ = _kernels.jacobi_eigh(C, tol, 100)
    s = np.sqrt(np.clip(np.sort(w)[::-1], 0.0, None))
    total = float(np.sum(s * s))
    energy = np.cumsum(s * s) / total if total > 0 else np.zeros_like(s)
    return s, energy


def align_to_principal_axes(R, tol=1e-12):
    """Rotate ``R`` so its columns follow decreasing variance (``R R^T`` kept)."""
    R = np.asarray(R, dtype=np.float64)
    _, C = _centered_gram(R)
    w, V = _kernels.jacobi_eigh(C, tol, 100)
    order = np.argsort(-w, kind="stable")
    return R @ V[:, order]


def make_embedding(R, report=None, anchors=None):
    s, e = pca_spectrum(R)
    return EmbeddingResult(coords=np.asarray(R), spectrum=s, energy=e, report=report, anchors=anchors)


def save_coords_csv(result, path, labels=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for n, row in enumerate(result.coords):
            out = [repr(float(v)) for v in row]
            if labels is not None:
                out.append("" if labels[n] < 0 else str(int(labels[n])))
            w.writerow(out)


def save_spectrum_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "singular_value", "cumulative_energy"])
        for i, (s, e) in enumerate(zip(result.spectrum, result.energy)):
            w.writerow([i, repr(float(s)), repr(float(e))])
