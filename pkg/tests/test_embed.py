import numpy as np
import pytest

from ismap import (
    Dataset,
    SwissRollSpec,
    align_to_principal_axes,
    build_constraints,
    build_knn,
    feasibility_metrics,
    gen_swiss_roll,
    pca_spectrum,
)
from ismap.constraints import ConstraintSet
from ismap.dataset import swiss_roll_parameters
from ismap.embed import make_embedding, save_coords_csv, save_spectrum_csv
from ismap.errors import ParameterError


def test_rank_one():
    R = np.zeros((10, 3))
    R[:, 1] = np.arange(10.0)
    s, e = pca_spectrum(R)
    assert s[0] > 0 and np.all(s[1:] == 0)
    assert e[-1] == 1.0


def test_known_spectrum(rng):
    n = 40
    U, _ = np.linalg.qr(rng.standard_normal((n, 3)))
    U -= U.mean(axis=0)
    U, _ = np.linalg.qr(U)  # centred orthonormal columns
    U -= U.mean(axis=0)
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    R = U @ np.diag([3.0, 2.0, 1.0]) @ Q
    s, _ = pca_spectrum(R)
    np.testing.assert_allclose(s, [3.0, 2.0, 1.0], atol=1e-10)


def test_matches_dense_eigensolver(rng):
    R = rng.standard_normal((50, 6))
    Rc = R - R.mean(axis=0)
    ref = np.sqrt(np.sort(np.linalg.eigvalsh(Rc.T @ Rc))[::-1])
    s, e = pca_spectrum(R)
    np.testing.assert_allclose(s, ref, rtol=1e-9)
    assert np.all(np.diff(e) >= 0) and e[-1] == pytest.approx(1.0)


def test_rotation_invariance(rng):
    R = rng.standard_normal((30, 5))
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    np.testing.assert_allclose(pca_spectrum(R @ Q)[0], pca_spectrum(R)[0], atol=1e-9)


def test_rejects_bad_input():
    with pytest.raises(ParameterError):
        pca_spectrum(np.full((3, 2), np.nan))
    with pytest.raises(ParameterError):
        pca_spectrum(np.zeros((3, 65)))


def test_alignment(rng):
    R = rng.standard_normal((25, 4)) * [5.0, 3.0, 2.0, 1.0]
    A = align_to_principal_axes(R)
    np.testing.assert_allclose(A @ A.T, R @ R.T, atol=1e-10)
    var = A.var(axis=0)
    assert np.all(np.diff(var) <= 1e-12)
    # already aligned: same columns up to sign
    B = align_to_principal_axes(A)
    np.testing.assert_allclose(np.abs(B), np.abs(A), atol=1e-9)


def test_alignment_reveals_rank(rng):
    R = rng.standard_normal((30, 2)) @ rng.standard_normal((2, 5))
    A = align_to_principal_axes(R)
    assert np.all((A - A.mean(axis=0))[:, 2:].var(axis=0) <= 1e-10)


def arc_length(t):
    return 0.5 * (t * np.sqrt(1 + t * t) + np.arcsinh(t))


def test_analytic_unrolling_is_nearly_isometric():
    spec = SwissRollSpec(n_points=1500, seed=1)
    ds = gen_swiss_roll(spec)
    t, h = swiss_roll_parameters(spec)
    R = np.column_stack([arc_length(t), h])
    cs = build_constraints(build_knn(ds, 5))
    rr, rate, _ = feasibility_metrics(R, cs)
    # chords on the curved sheet versus straight segments in the plane
    assert rr < 0.5
    assert rate == 0.0


def test_source_is_exactly_feasible(small_roll):
    cs = build_constraints(build_knn(small_roll, 5))
    rr, _, max_abs = feasibility_metrics(small_roll.points, cs)
    assert rr == 0.0 and max_abs == 0.0


def test_one_violation_in_hundred():
    R = np.zeros((101, 2))
    R[0] = [1.0, 0.0]
    R[1:, 0] = 1.0
    R[1:, 1] = np.arange(100.0)
    R[50, 0] = -1.0
    z = np.zeros(0, dtype=np.int64)
    cs = ConstraintSet(z, z, np.zeros(0), np.zeros(100, dtype=np.int64), np.arange(1, 101),
                       np.ones(100), np.zeros(100), None, 101)
    _, rate, _ = feasibility_metrics(R, cs)
    assert rate == pytest.approx(0.01)


def test_exports(tmp_path, rng):
    res = make_embedding(rng.standard_normal((4, 2)))
    save_coords_csv(res, tmp_path / "c.csv", labels=np.array([0, -1, 1, 0]))
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[1].endswith(",")
    save_spectrum_csv(res, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "index,singular_value,cumulative_energy" and len(lines) == 3
    back = np.loadtxt(tmp_path / "c.csv", delimiter=",", usecols=(0, 1))
    assert np.array_equal(back, res.coords)
