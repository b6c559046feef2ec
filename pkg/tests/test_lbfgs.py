import numpy as np
import pytest

from ismap import lbfgs_minimize
from ismap.errors import NumericalAbort
from ismap.lbfgs import strong_wolfe


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


@pytest.mark.parametrize("dim", [1, 3, 8])
def test_isotropic_quadratic_is_exact(dim, rng):
    c = rng.standard_normal(dim)
    x0 = rng.standard_normal(dim) * 10

    def fun(x):
        return float((x - c) @ (x - c)), 2 * (x - c)

    res = lbfgs_minimize(fun, x0, grad_tol=1e-12)
    assert res.status == "converged"
    assert res.n_iter <= dim + 2
    np.testing.assert_allclose(res.x, c, rtol=0, atol=1e-12 * max(1.0, np.abs(c).max()))


def test_rosenbrock():
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), grad_tol=1e-10, max_inner=500)
    assert res.f < 1e-10
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-5)


def test_ill_conditioned_quadratic(rng):
    d = np.logspace(0, 4, 30)
    res = lbfgs_minimize(lambda x: (0.5 * float(x @ (d * x)), d * x), rng.standard_normal(30),
                         grad_tol=1e-8, max_inner=2000)
    assert res.status == "converged"
    assert np.abs(res.x).max() < 1e-8


def test_early_exit_returns_start():
    x0 = np.array([1.0, 1.0])
    res = lbfgs_minimize(rosenbrock, x0, grad_tol=1e-6)
    assert res.n_iter == 0
    assert res.status == "converged"
    assert np.array_equal(res.x, x0)


def test_iteration_cap():
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), grad_tol=1e-14, max_inner=3)
    assert res.n_iter == 3
    assert res.status == "max_iter"


def test_stall_on_bad_gradient():
    # gradient points uphill: no step can give sufficient decrease
    res = lbfgs_minimize(lambda x: (float(x @ x), -2 * x), np.array([1.0, 2.0]))
    assert res.status == "stalled"
    assert res.stalled


def test_preconditioner_is_used(rng):
    d = np.logspace(0, 6, 20)
    fun = lambda x: (0.5 * float(x @ (d * x)), d * x)  # noqa: E731
    plain = lbfgs_minimize(fun, np.ones(20), grad_tol=1e-9, max_inner=5000)
    pre = lbfgs_minimize(fun, np.ones(20), grad_tol=1e-9, max_inner=5000, precond=lambda v: v / d)
    assert pre.status == "converged"
    assert pre.n_iter <= 3 < plain.n_iter


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        lbfgs_minimize(rosenbrock, np.zeros(2), memory=0)
    with pytest.raises(NumericalAbort):
        lbfgs_minimize(lambda x: (np.nan, x), np.zeros(2))


def test_strong_wolfe_conditions_hold():
    x = np.array([-1.2, 1.0])
    f0, g0 = rosenbrock(x)
    d = -g0
    a, f, g, _ = strong_wolfe(rosenbrock, x, f0, g0, d, 1e-3, c1=1e-4, c2=0.9)
    assert a > 0
    assert f <= f0 + 1e-4 * a * (g0 @ d)
    assert abs(g @ d) <= 0.9 * abs(g0 @ d)
