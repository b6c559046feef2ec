"""k-nearest-neighbour graphs with squared-distance targets."""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError


@dataclass
class NeighborGraph:
    """Symmetrised k-NN edges plus each point's furthest point.

    Attributes
    ----------
    edge_i, edge_j : (E,) int arrays
        Edge endpoints with ``edge_i < edge_j``, sorted lexicographically.
    edge_d : (E,) float array
        Squared input-space distance of each edge.
    neighbors : (N, k) int array
        Directed k-NN lists, nearest first.
    far_j, far_d : (N,) arrays
        Furthest point of every point and its squared distance.
    """

    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_d: np.ndarray
    neighbors: np.ndarray
    far_j: np.ndarray
    far_d: np.ndarray
    k: int

    @property
    def n_points(self):
        return self.neighbors.shape[0]

    @property
    def n_edges(self):
        return self.edge_i.shape[0]

    @property
    def edges(self):
        return list(zip(self.edge_i.tolist(), self.edge_j.tolist(), self.edge_d.tolist()))

    @property
    def furthest(self):
        return list(zip(range(self.n_points), self.far_j.tolist(), self.far_d.tolist()))


def pairwise_sq_dist(x_i, x_j):
    """Squared Euclidean distance between two vectors."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    if x_i.shape != x_j.shape:
        raise ParameterError("x_j", f"dimension mismatch {x_i.shape} vs {x_j.shape}")
    diff = x_i - x_j
    return float(np.dot(diff, diff))


def _row_sq_dist(X, a, b):
    # same kernel as the residual evaluation, so X itself has zero residual
    return _kernels.eq_residuals(X, a, b, np.zeros(a.shape[0]))


def build_knn(dataset, k):
    """Build the symmetrised k-NN graph of ``dataset`` by exact brute force.

    Ties are broken towards the smaller index.  Furthest points are found by
    a full scan over all points, not only the neighbourhood.
    """
    X = dataset.points if hasattr(dataset, "points") else np.ascontiguousarray(dataset, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ParameterError("dataset", "need at least 2 points")
    if int(k) != k or not 1 <= k < n:
        raise ParameterError("k", f"must satisfy 1 <= k < N={n}, got {k}")
    k = int(k)
    X = np.ascontiguousarray(X, dtype=np.float64)
    nbr, far = _kernels.knn_scan(X, k, 0)
    src = np.repeat(np.arange(n), k)
    dst = nbr.ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    key = np.unique(lo * n + hi)
    ei = key // n
    ej = key % n
    return NeighborGraph(
        edge_i=ei,
        edge_j=ej,
        edge_d=_row_sq_dist(X, ei, ej),
        neighbors=nbr,
        far_j=far,
        far_d=_row_sq_dist(X, np.arange(n), far),
        k=k,
    )


def save_edges_csv(graph, path):
    """Export the edge list as ``i,j,d_ij`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "d_ij"])
        for i, j, d in graph.edges:
            w.writerow([i, j, repr(d)])
