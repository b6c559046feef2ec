"""Limited-memory BFGS with a strong Wolfe line search."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import NumericalAbort


@dataclass
class LBFGSResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    n_iter: int
    n_eval: int
    status: str  # "converged", "max_iter" or "stalled"

    @property
    def stalled(self):
        return self.status == "stalled"


def _two_loop(g, S, Y, rho, precond=None):
    q = g.copy()
    alpha = []
    for s, y, r in zip(reversed(S), reversed(Y), reversed(rho)):
        a = r * (s @ q)
        alpha.append(a)
        q -= a * y
    if precond is not None:
        if S:
            s, y = S[-1], Y[-1]
            q = ((s @ y) / (y @ precond(y))) * precond(q)
        else:
            q = precond(q)
    elif S:
        s, y = S[-1], Y[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, r), a in zip(zip(S, Y, rho), reversed(alpha)):
        b = r * (y @ q)
        q += (a - b) * s
    return q


def _cubic_min(a, fa, da, b, fb, db):
    # minimiser of the cubic interpolating (a, fa, da) and (b, fb, db)
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0 or not np.isfinite(disc):
        return None
    d2 = np.copysign(np.sqrt(disc), b - a)
    den = db - da + 2.0 * d2
    if den == 0:
        return None
    x = b - (b - a) * (db + d2 - d1) / den
    return x if np.isfinite(x) else None


def strong_wolfe(fun, x, f0, g0, d, alpha0, c1=1e-4, c2=0.9, max_eval=30, alpha_max=1e10):
    """Find a step satisfying the strong Wolfe conditions along ``d``.

    Returns ``(alpha, f, g, n_eval)``; ``alpha`` is 0 when no step with
    sufficient decrease was found.
    """
    dphi0 = g0 @ d
    n_eval = 0

    def phi(a):
        nonlocal n_eval
        n_eval += 1
        f, g = fun(x + a * d)
        return f, g, g @ d

    def zoom(lo, hi):
        a_lo, f_lo, g_lo, d_lo = lo
        a_hi, f_hi, _, d_hi = hi
        while n_eval < max_eval:
            w = abs(a_hi - a_lo)
            if w <= 1e-16 * max(1.0, abs(a_lo)):
                break
            a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi) if np.isfinite(f_hi) else None
            lo_b, hi_b = min(a_lo, a_hi), max(a_lo, a_hi)
            if a is None or not (lo_b + 0.1 * w <= a <= hi_b - 0.1 * w):
                a = 0.5 * (a_lo + a_hi)
            f, g, dp = phi(a)
            if not np.isfinite(f) or f > f0 + c1 * a * dphi0 or f >= f_lo:
                a_hi, f_hi, d_hi = a, f, dp
            else:
                if abs(dp) <= -c2 * dphi0:
                    return a, f, g, n_eval
                if dp * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, g_lo, d_lo = a, f, g, dp
        # interval exhausted: fall back to the best sufficient-decrease point
        return a_lo, f_lo, g_lo, n_eval

    prev = (0.0, f0, g0, dphi0)
    a = alpha0
    for it in range(max_eval):
        f, g, dp = phi(a)
        if not np.isfinite(f) or f > f0 + c1 * a * dphi0 or (it > 0 and f >= prev[1]):
            return zoom(prev, (a, f, g, dp))
        if abs(dp) <= -c2 * dphi0:
            return a, f, g, n_eval
        if dp >= 0:
            return zoom((a, f, g, dp), prev)
        prev = (a, f, g, dp)
        if a >= alpha_max:
            return a, f, g, n_eval
        a = min(4.0 * a, alpha_max)
    return prev[0], prev[1], prev[2], n_eval


def lbfgs_minimize(fun, x0, memory=10, grad_tol=1e-6, max_inner=1000, c1=1e-4, c2=0.9, precond=None):
    """Minimise ``fun`` (returning ``(value, gradient)``) from ``x0``.

    Stops when the gradient max-norm drops to ``grad_tol`` or after
    ``max_inner`` iterations.  A failed line search after a steepest-descent
    restart ends the run with status ``"stalled"``.

    ``precond``, if given, applies a fixed symmetric positive definite
    approximation of the inverse Hessian; it replaces the scaled identity
    as the seed matrix of the two-loop recursion.
    """
    if memory < 1:
        raise ValueError("memory must be >= 1")
    x = np.array(x0, dtype=np.float64, copy=True)
    f, g = fun(x)
    n_eval = 1
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericalAbort(f"non-finite objective at the starting point (f={f})")
    S, Y, rho = deque(maxlen=memory), deque(maxlen=memory), deque(maxlen=memory)
    status = "max_iter"
    it = 0
    if np.max(np.abs(g), initial=0.0) <= grad_tol:
        return LBFGSResult(x, f, g, 0, n_eval, "converged")
    while it < max_inner:
        d = -_two_loop(g, S, Y, rho, precond)
        gd = g @ d
        if not gd < 0:
            S.clear(), Y.clear(), rho.clear()
            d = -g
            gd = -(g @ g)
        if S or precond is not None:
            alpha0 = 1.0
        else:
            alpha0 = min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-300))
        alpha, f_new, g_new, ne = strong_wolfe(fun, x, f, g, d, alpha0, c1, c2)
        n_eval += ne
        if alpha == 0.0:
            if S:
                S.clear(), Y.clear(), rho.clear()
                continue
            status = "stalled"
            break
        it += 1
        s = alpha * d
        y = g_new - g
        sy = s @ y
        x = x + s
        f, g = f_new, g_new
        if sy > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            S.append(s)
            Y.append(y)
            rho.append(1.0 / sy)
        if np.max(np.abs(g)) <= grad_tol:
            status = "converged"
            break
    return LBFGSResult(x, f, g, it, n_eval, status)
