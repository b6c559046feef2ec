"""Isometry equalities and anchor sign constraints on a factor matrix ``R``.

Kernel entries are never formed: ``K = R R^T`` is only touched through
row differences (isometry) and row dot products (separation).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._random import stream
from .errors import ParameterError

ANCHOR_STRATEGIES = ("first_labeled", "random_labeled")


class EqualityConstraint(NamedTuple):
    i: int
    j: int
    target: float


class SeparationConstraint(NamedTuple):
    anchor: int
    i: int
    sign: int
    margin: float = 0.0


@dataclass
class AnchorAssignment:
    """``anchors[c]`` is the labeled point whose embedding is class ``c``'s normal."""

    anchors: np.ndarray

    def __post_init__(self):
        self.anchors = np.asarray(self.anchors, dtype=np.int64)
        if len(np.unique(self.anchors)) != len(self.anchors):
            raise ParameterError("anchors", "anchors must be distinct")

    @property
    def n_classes(self):
        return len(self.anchors)

    @property
    def hyperplanes(self):
        """Anchors that carry a separating hyperplane: one for two classes."""
        return self.anchors[:1] if self.n_classes == 2 else self.anchors


@dataclass
class ConstraintSet:
    """Struct-of-arrays constraint storage.

    Equalities ``|r_i - r_j|^2 = d_ij`` live in ``eq_i, eq_j, eq_d``;
    separations ``sign * <r_a, r_i> >= margin`` in ``sep_a, sep_i, sep_sign,
    sep_margin``.
    """

    eq_i: np.ndarray
    eq_j: np.ndarray
    eq_d: np.ndarray
    sep_a: np.ndarray
    sep_i: np.ndarray
    sep_sign: np.ndarray
    sep_margin: np.ndarray
    anchors: AnchorAssignment = None
    n_points: int = 0

    @property
    def n_eq(self):
        return self.eq_i.shape[0]

    @property
    def n_sep(self):
        return self.sep_a.shape[0]

    @property
    def equalities(self):
        return [EqualityConstraint(int(i), int(j), float(d)) for i, j, d in zip(self.eq_i, self.eq_j, self.eq_d)]

    @property
    def separations(self):
        return [
            SeparationConstraint(int(a), int(i), int(s), float(m))
            for a, i, s, m in zip(self.sep_a, self.sep_i, self.sep_sign, self.sep_margin)
        ]

    def scaled(self, length):
        """Same constraints with coordinates measured in units of ``length``."""
        s2 = 1.0 / (length * length)
        return ConstraintSet(self.eq_i, self.eq_j, self.eq_d * s2, self.sep_a, self.sep_i,
                             self.sep_sign, self.sep_margin * s2, self.anchors, self.n_points)


def empty_constraints(n_points):
    z = np.zeros(0, dtype=np.int64)
    return ConstraintSet(z, z, np.zeros(0), z, z, np.zeros(0), np.zeros(0), None, n_points)


def select_anchors(dataset, strategy="first_labeled", seed=0):
    """Pick one labeled point per class as that class's anchor."""
    if strategy not in ANCHOR_STRATEGIES:
        raise ParameterError("strategy", f"must be one of {ANCHOR_STRATEGIES}")
    labels = dataset.labels
    n_classes = dataset.n_classes
    if labels is None or n_classes == 0:
        raise ParameterError("dataset", "anchor selection needs labels")
    rng = stream(seed, "anchors") if strategy == "random_labeled" else None
    anchors = []
    for c in range(n_classes):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            raise ParameterError("dataset", f"class {c} has no labeled point")
        anchors.append(members[0] if rng is None else rng.choice(members))
    return AnchorAssignment(np.array(anchors))


def build_constraints(graph, dataset=None, anchors=None, margin=0.0):
    """Assemble isometry equalities and one-vs-rest sign constraints.

    Two classes use a single hyperplane (the class-0 anchor); more classes
    use one hyperplane per class.  Only labeled points are constrained.
    """
    if margin < 0:
        raise ParameterError("margin", "must be >= 0")
    n = graph.n_points
    if dataset is not None and dataset.n_points != n:
        raise ParameterError("dataset", f"graph has {n} points, dataset {dataset.n_points}")
    cs = empty_constraints(n)
    cs.eq_i, cs.eq_j, cs.eq_d = graph.edge_i.copy(), graph.edge_j.copy(), graph.edge_d.copy()
    if anchors is None:
        return cs
    if dataset is None or dataset.labels is None:
        raise ParameterError("dataset", "separation constraints need labels")
    labels = dataset.labels
    for c, a in enumerate(anchors.anchors):
        if labels[a] != c:
            raise ParameterError("anchors", f"anchor {a} is not a labeled point of class {c}")
    labeled = np.flatnonzero(labels >= 0)
    sa, si, ss = [], [], []
    for a in anchors.hyperplanes:
        c = labels[a]
        pts = labeled[labeled != a]
        sa.append(np.full(pts.size, a))
        si.append(pts)
        ss.append(np.where(labels[pts] == c, 1.0, -1.0))
    cs.sep_a = np.concatenate(sa).astype(np.int64)
    cs.sep_i = np.concatenate(si).astype(np.int64)
    cs.sep_sign = np.concatenate(ss)
    cs.sep_margin = np.full(cs.sep_a.size, float(margin))
    cs.anchors = anchors
    return cs


def _check_rows(R, *idx):
    n = R.shape[0]
    for i in idx:
        if not 0 <= i < n:
            raise ParameterError("index", f"{i} out of range for {n} rows")


def eq_residual(R, c):
    """``|r_i - r_j|^2 - d_ij`` for one equality constraint."""
    _check_rows(R, c.i, c.j)
    diff = R[c.i] - R[c.j]
    return float(diff @ diff - c.target)


def eq_residual_grad(R, c):
    """Gradient of :func:`eq_residual` with respect to ``R`` (dense, N x d')."""
    _check_rows(R, c.i, c.j)
    G = np.zeros_like(R, dtype=np.float64)
    diff = R[c.i] - R[c.j]
    G[c.i] += 2.0 * diff
    G[c.j] -= 2.0 * diff
    return G


def sep_value(R, c):
    """``sign * <r_a, r_i> - margin``; nonnegative when satisfied."""
    _check_rows(R, c.anchor, c.i)
    return float(c.sign * (R[c.anchor] @ R[c.i]) - c.margin)


def sep_value_grad(R, c):
    _check_rows(R, c.anchor, c.i)
    G = np.zeros_like(R, dtype=np.float64)
    G[c.anchor] += c.sign * R[c.i]
    G[c.i] += c.sign * R[c.anchor]
    return G


def eq_residuals(R, cs):
    R = np.ascontiguousarray(R, dtype=np.float64)
    return _kernels.eq_residuals(R, cs.eq_i, cs.eq_j, cs.eq_d)


def sep_values(R, cs):
    R = np.ascontiguousarray(R, dtype=np.float64)
    return _kernels.sep_values(R, cs.sep_a, cs.sep_i, cs.sep_sign, cs.sep_margin)


def eq_rrmse(h, targets):
    """Relative RMS equality residual in percent.

    Zero-target constraints contribute their absolute residual.
    """
    if h.size == 0:
        return 0.0
    safe = np.where(targets > 0, targets, 1.0)
    rel = h / safe
    return float(100.0 * np.sqrt(np.mean(rel * rel)))


def violation_tolerance(R, cs):
    """Absolute slack below zero tolerated before a separation counts as violated."""
    if cs.n_sep == 0:
        return 0.0
    norms = np.linalg.norm(R, axis=1)
    return 1e-9 * float(np.mean(norms[np.unique(cs.sep_a)]) * np.mean(norms))


def feasibility_metrics(R, cs):
    """Return ``(eq_rrmse_percent, sep_violation_rate, max_abs_residual)``."""
    R = np.ascontiguousarray(R, dtype=np.float64)
    if R.shape[0] != cs.n_points and cs.n_points:
        raise ParameterError("R", f"expected {cs.n_points} rows, got {R.shape[0]}")
    h = eq_residuals(R, cs)
    rr = eq_rrmse(h, cs.eq_d)
    if cs.n_sep:
        g = sep_values(R, cs)
        rate = float(np.mean(g < -violation_tolerance(R, cs)))
    else:
        rate = 0.0
    max_abs = float(np.max(np.abs(h))) if h.size else 0.0
    return rr, rate, max_abs
