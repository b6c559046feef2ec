import numpy as np
import pytest

from ismap import Dataset, build_knn, pairwise_sq_dist
from ismap.errors import ParameterError
from ismap.graph import save_edges_csv


def brute_knn(X, k):
    # direct oracle: full distance matrix, stable sort, self excluded
    D = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(D, np.inf)
    nbr = np.argsort(D, axis=1, kind="stable")[:, :k]
    np.fill_diagonal(D, -np.inf)
    far = np.argmax(D, axis=1)
    edges = {(min(i, j), max(i, j)) for i in range(len(X)) for j in nbr[i]}
    return nbr, far, edges


def test_line_of_points():
    X = np.array([[0.0], [1.0], [3.0], [6.0]])
    g = build_knn(Dataset(X), 1)
    assert g.edges == [(0, 1, 1.0), (1, 2, 4.0), (2, 3, 9.0)]
    assert list(g.far_j) == [3, 3, 0, 0]
    assert list(g.far_d) == [36.0, 25.0, 9.0, 36.0]


def test_ties_break_towards_lower_index():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    g = build_knn(Dataset(X), 1)
    assert g.neighbors[0, 0] == 1


def test_k_equal_n_minus_one_is_complete_graph(rng):
    X = rng.standard_normal((7, 3))
    g = build_knn(Dataset(X), 6)
    assert g.n_edges == 21


@pytest.mark.parametrize("k", [0, 5, 2.5])
def test_invalid_k(k):
    with pytest.raises(ParameterError) as exc:
        build_knn(Dataset(np.zeros((5, 2)) + np.arange(5)[:, None]), k)
    assert exc.value.field == "k"


def test_matches_brute_force(rng):
    X = rng.standard_normal((120, 4))
    g = build_knn(Dataset(X), 6)
    nbr, far, edges = brute_knn(X, 6)
    assert np.array_equal(g.neighbors, nbr)
    assert np.array_equal(g.far_j, far)
    assert set(zip(g.edge_i.tolist(), g.edge_j.tolist())) == edges
    d = ((X[g.edge_i] - X[g.edge_j]) ** 2).sum(axis=1)
    np.testing.assert_allclose(g.edge_d, d, rtol=1e-12)


def test_permutation_invariance(rng):
    X = rng.standard_normal((80, 3))
    perm = rng.permutation(80)
    a = build_knn(Dataset(X), 5)
    b = build_knn(Dataset(X[perm]), 5)
    ea = set(zip(a.edge_i.tolist(), a.edge_j.tolist()))
    eb = {tuple(sorted((int(perm[i]), int(perm[j])))) for i, j in zip(b.edge_i, b.edge_j)}
    assert ea == eb


def test_neighbor_lists_are_nested(rng):
    X = rng.standard_normal((60, 2))
    for k in range(1, 8):
        small = build_knn(Dataset(X), k)
        big = build_knn(Dataset(X), k + 1)
        assert np.array_equal(big.neighbors[:, :k], small.neighbors)
        assert set(small.edges) <= set(big.edges)


def test_furthest_beyond_kth_neighbor(small_roll):
    g = build_knn(small_roll, 5)
    X = small_roll.points
    kth = ((X - X[g.neighbors[:, -1]]) ** 2).sum(axis=1)
    assert np.all(g.far_d >= kth)


def test_pairwise_sq_dist():
    assert pairwise_sq_dist([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert pairwise_sq_dist([0.0, 0.0], [3.0, 4.0]) == 25.0
    with pytest.raises(ParameterError):
        pairwise_sq_dist([0.0], [0.0, 1.0])


def test_pairwise_matches_gram_form(rng):
    a, b = rng.standard_normal(10), rng.standard_normal(10)
    ref = a @ a + b @ b - 2 * a @ b
    assert abs(pairwise_sq_dist(a, b) - ref) <= 1e-12 * abs(ref)


def test_edge_export(tmp_path, small_roll):
    g = build_knn(small_roll, 3)
    save_edges_csv(g, tmp_path / "e.csv")
    rows = (tmp_path / "e.csv").read_text().splitlines()
    assert rows[0] == "i,j,d_ij"
    assert len(rows) == g.n_edges + 1
