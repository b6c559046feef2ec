import numpy as np
import pytest

from ismap import SwissRollSpec, gen_swiss_roll


def central_diff(f, X, eps=1e-6):
    """Central finite-difference gradient of scalar ``f`` at matrix ``X``."""
    X = np.array(X, dtype=np.float64)
    G = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        old = X[idx]
        X[idx] = old + eps
        fp = f(X)
        X[idx] = old - eps
        fm = f(X)
        X[idx] = old
        G[idx] = (fp - fm) / (2 * eps)
    return G


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_roll():
    return gen_swiss_roll(SwissRollSpec(n_points=200, labeling="two_class_patches", seed=3))


def random_al_instance(rng, center=False):
    """Random state, constraint set and objective for gradient checks."""
    from ismap import ObjectiveKind, SolverState
    from ismap.constraints import ConstraintSet

    n = int(rng.integers(4, 31))
    p = int(rng.integers(1, 6))
    m_eq = int(rng.integers(1, 3 * n))
    m_sep = int(rng.integers(1, 2 * n))
    ei = rng.integers(0, n, m_eq)
    ej = (ei + rng.integers(1, n, m_eq)) % n
    sa = rng.integers(0, n, m_sep)
    si = (sa + rng.integers(1, n, m_sep)) % n
    cs = ConstraintSet(ei, ej, rng.uniform(0.1, 3.0, m_eq), sa, si,
                       rng.choice([-1.0, 1.0], m_sep), rng.uniform(0, 0.3, m_sep), None, n)
    state = SolverState(
        R=rng.standard_normal((n, p)),
        lambda_eq=rng.standard_normal(m_eq),
        mu_ineq=np.abs(rng.standard_normal(m_sep)),
        sigma=float(rng.uniform(0.5, 20.0)),
        lambda_center=rng.standard_normal(p) if center else None,
    )
    if rng.random() < 0.5:
        kind = ObjectiveKind("mvu")
    else:
        kind = ObjectiveKind("mfnu", far_j=rng.integers(0, n, n))
    return state, cs, kind


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
