"""Point-cloud datasets: containers, CSV I/O, train/test splits, swiss rolls."""

import csv
import math
import re
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._random import stream
from .errors import ParameterError, ParseError

UNLABELED = -1

LABELINGS = ("none", "two_class_patches", "three_class_bands", "three_class_random")


@dataclass
class Dataset:
    """Points with optional partial labels.

    ``labels`` uses ``UNLABELED`` (-1) for points without a class.  ``truth``
    holds ground-truth labels kept aside by :func:`split_train_test`.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    ids: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1 or self.points.shape[1] < 1:
            raise ParameterError("points", f"expected a non-empty N x d matrix, got shape {self.points.shape}")
        if not np.all(np.isfinite(self.points)):
            raise ParameterError("points", "coordinates must be finite")
        n = self.points.shape[0]
        if self.ids is None:
            self.ids = np.arange(n)
        self.ids = np.asarray(self.ids)
        if self.ids.shape != (n,):
            raise ParameterError("ids", "need one id per point")
        if len(np.unique(self.ids)) != n:
            raise ParameterError("ids", "ids must be unique")
        for name in ("labels", "truth"):
            lab = getattr(self, name)
            if lab is None:
                continue
            lab = np.asarray(lab, dtype=np.int64)
            if lab.shape != (n,):
                raise ParameterError(name, f"need {n} entries, got {lab.shape}")
            if np.any(lab < UNLABELED):
                raise ParameterError(name, "class ids must be >= 0 (or -1 for unlabeled)")
            setattr(self, name, lab)
        known = np.concatenate([a[a >= 0] for a in (self.labels, self.truth) if a is not None] or [np.empty(0, np.int64)])
        if known.size and known.max() >= len(np.unique(known)):
            raise ParameterError("labels", "class ids must be contiguous 0..C-1")

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def n_classes(self):
        known = [a[a >= 0] for a in (self.labels, self.truth) if a is not None]
        if not known or not any(k.size for k in known):
            return 0
        return int(max(k.max() for k in known if k.size)) + 1

    @property
    def labeled_mask(self):
        if self.labels is None:
            return np.zeros(self.n_points, dtype=bool)
        return self.labels >= 0


@dataclass
class SwissRollSpec:
    n_points: int = 1500
    t_range: tuple = (1.5 * math.pi, 4.5 * math.pi)
    height: float = 15.0
    noise_sd: float = 0.0
    labeling: str = "none"
    seed: int = 0

    def validate(self):
        if int(self.n_points) != self.n_points or self.n_points < 4:
            raise ParameterError("n_points", f"must be an integer >= 4, got {self.n_points}")
        lo, hi = self.t_range
        if not lo > 0:
            raise ParameterError("t_range", "lower bound must be > 0")
        if not hi > lo:
            raise ParameterError("t_range", "upper bound must exceed lower bound")
        if not self.height > 0:
            raise ParameterError("height", "must be positive")
        if not self.noise_sd >= 0:
            raise ParameterError("noise_sd", "must be nonnegative")
        if self.labeling not in LABELINGS:
            raise ParameterError("labeling", f"must be one of {LABELINGS}")
        return self


def swiss_roll_parameters(spec):
    """Return the sampled roll parameters ``(t, h)`` used by :func:`gen_swiss_roll`."""
    t, h, _, _ = _sample_roll(spec.validate())
    return t, h


def _sample_roll(spec):
    rng = stream(spec.seed, "dataset")
    n = int(spec.n_points)
    lo, hi = (float(v) for v in spec.t_range)
    t = rng.uniform(lo, hi, n)
    h = rng.uniform(0.0, spec.height, n)
    noise = rng.standard_normal((n, 3))
    if spec.labeling == "none":
        labels = None
    elif spec.labeling == "two_class_patches":
        labels = (np.floor(t / math.pi) + np.floor(2.0 * h / spec.height)).astype(np.int64) % 2
    elif spec.labeling == "three_class_bands":
        labels = np.clip(np.floor(3.0 * (t - lo) / (hi - lo)), 0, 2).astype(np.int64)
    else:
        labels = rng.integers(0, 3, n)
    return t, h, noise, labels


def gen_swiss_roll(spec):
    """Sample a swiss roll ``(t cos t, h, t sin t)`` with the requested labeling."""
    spec.validate()
    t, h, noise, labels = _sample_roll(spec)
    pts = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    if spec.noise_sd > 0:
        pts = pts + spec.noise_sd * noise
    return Dataset(points=pts, labels=labels)


_INT_RE = re.compile(r"^[+-]?\d+$")


def load_csv(path, has_labels=None, header=False):
    """Read a dataset from comma-separated text.

    One row per point.  When ``has_labels`` is None the last column is taken
    as a label column if every entry in it is empty or an integer literal.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    if header and rows:
        rows = rows[1:]
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(1, "no data rows")
    width = len(rows[0])
    for n, r in enumerate(rows, 1):
        if len(r) != width:
            raise ParseError(n, f"expected {width} fields, got {len(r)}")
    if has_labels is None:
        last = [r[-1].strip() for r in rows]
        has_labels = width >= 2 and all(c == "" or _INT_RE.match(c) for c in last)
    ncoord = width - 1 if has_labels else width
    if ncoord < 1:
        raise ParseError(1, "no coordinate columns")
    pts = np.empty((len(rows), ncoord))
    labels = np.full(len(rows), UNLABELED, dtype=np.int64) if has_labels else None
    for n, r in enumerate(rows, 1):
        try:
            pts[n - 1] = [float(c) for c in r[:ncoord]]
        except ValueError:
            bad = next(c for c in r[:ncoord] if not _is_float(c))
            raise ParseError(n, f"non-numeric coordinate {bad!r}") from None
        if has_labels:
            c = r[-1].strip()
            if c == "":
                continue
            if not _INT_RE.match(c):
                raise ParseError(n, f"label {c!r} is not an integer")
            if int(c) < 0:
                raise ParseError(n, f"negative class id {c}")
            labels[n - 1] = int(c)
    if not np.all(np.isfinite(pts)):
        bad = int(np.nonzero(~np.all(np.isfinite(pts), axis=1))[0][0]) + 1
        raise ParseError(bad, "non-finite coordinate")
    return Dataset(points=pts, labels=labels)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def save_csv(dataset, path, labels=None):
    """Write ``dataset`` as CSV with round-trip (17 significant digit) precision.

    ``labels`` overrides which label vector is written (e.g. ``dataset.truth``).
    """
    lab = dataset.labels if labels is None else np.asarray(labels)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for n in range(dataset.n_points):
            row = [repr(float(v)) for v in dataset.points[n]]
            if lab is not None:
                row.append("" if lab[n] < 0 else str(int(lab[n])))
            w.writerow(row)


def load_magic_gamma(path):
    """Read the UCI MAGIC gamma telescope file (10 features, class g/h).

    Gamma ('g') maps to class 0, hadron ('h') to class 1.
    """
    pts, labels = [], []
    with open(path, newline="") as fh:
        for n, r in enumerate(csv.reader(fh), 1):
            if not r:
                continue
            if len(r) != 11:
                raise ParseError(n, f"expected 11 fields, got {len(r)}")
            try:
                pts.append([float(c) for c in r[:10]])
            except ValueError:
                raise ParseError(n, "non-numeric feature") from None
            cls = r[10].strip()
            if cls not in ("g", "h"):
                raise ParseError(n, f"unknown class {cls!r}")
            labels.append(0 if cls == "g" else 1)
    return Dataset(points=np.array(pts), labels=np.array(labels))


def subsample(dataset, n, seed):
    """Uniformly pick ``n`` rows (without replacement, original order kept)."""
    if not 0 < n <= dataset.n_points:
        raise ParameterError("n", f"must be in 1..{dataset.n_points}")
    rng = stream(seed, "subsample")
    idx = np.sort(rng.choice(dataset.n_points, size=n, replace=False))
    pick = lambda a: None if a is None else a[idx]
    return Dataset(points=dataset.points[idx], labels=pick(dataset.labels),
                   ids=dataset.ids[idx], truth=pick(dataset.truth))


def split_train_test(dataset, n_train, seed):
    """Keep labels on ``n_train`` uniformly chosen points, hide the rest.

    The hidden labels move to ``truth``; the point matrix is shared untouched.
    """
    n = dataset.n_points
    if dataset.labels is None or np.any(dataset.labels < 0):
        raise ParameterError("dataset", "split_train_test needs a fully labeled dataset")
    if not 0 < n_train < n:
        raise ParameterError("n_train", f"must satisfy 0 < n_train < {n}, got {n_train}")
    rng = stream(seed, "split")
    keep = np.zeros(n, dtype=bool)
    keep[rng.choice(n, size=n_train, replace=False)] = True
    labels = np.where(keep, dataset.labels, UNLABELED)
    return replace(dataset, labels=labels, truth=dataset.labels.copy())
