"""Hot numeric kernels.

Every kernel exists twice: a scalar-loop version compiled with numba
``@njit`` and a vectorised pure-numpy version.  The numba path is used
when numba imports cleanly and ``ISMAP_DISABLE_NUMBA`` is unset (or "0").
Both paths produce the same results up to floating-point summation order.
"""

import os

import numpy as np

_DISABLE = os.environ.get("ISMAP_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLE:
        raise ImportError("numba disabled by ISMAP_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _scatter_rows(G, idx, vals):
    # np.add.at is unbuffered but slow; bincount per column is exact and fast
    n = G.shape[0]
    for m in range(G.shape[1]):
        G[:, m] += np.bincount(idx, weights=vals[:, m], minlength=n)


def eq_penalty_np(R, ei, ej, ed, ew, lam, sigma, G, h_out):
    # residuals are weighted per edge: h = ew * (|r_i - r_j|^2 - d)
    diff = R[ei] - R[ej]
    h = ew * (np.einsum("ij,ij->i", diff, diff) - ed)
    h_out[:] = h
    coef = 2.0 * ew * (sigma * h - lam)
    contrib = coef[:, None] * diff
    _scatter_rows(G, ei, contrib)
    _scatter_rows(G, ej, -contrib)
    return float(np.sum(-lam * h + 0.5 * sigma * h * h))


def sep_penalty_np(R, sa, si, ss, sm, mu, sigma, G, g_out):
    ra = R[sa]
    ri = R[si]
    g = ss * np.einsum("ij,ij->i", ra, ri) - sm
    g_out[:] = g
    t = np.maximum(0.0, mu - sigma * g)
    coef = -t * ss
    _scatter_rows(G, sa, coef[:, None] * ri)
    _scatter_rows(G, si, coef[:, None] * ra)
    return float(np.sum(t * t - mu * mu) / (2.0 * sigma))


def pair_spread_np(R, fi, ff, scale, G):
    diff = R[fi] - R[ff]
    contrib = (2.0 * scale) * diff
    _scatter_rows(G, fi, contrib)
    _scatter_rows(G, ff, -contrib)
    return float(np.einsum("ij,ij->", diff, diff))


def eq_residuals_np(R, ei, ej, ed):
    diff = R[ei] - R[ej]
    return np.einsum("ij,ij->i", diff, diff) - ed


def sep_values_np(R, sa, si, ss, sm):
    return ss * np.einsum("ij,ij->i", R[sa], R[si]) - sm


def knn_scan_np(X, k, block_rows=0):
    """Exact k-NN and furthest point by blocked brute force."""
    n, d = X.shape
    if block_rows <= 0:
        block_rows = max(1, min(n, (1 << 23) // max(1, n * d)))
    nbr = np.empty((n, k), dtype=np.int64)
    far = np.empty(n, dtype=np.int64)
    for start in range(0, n, block_rows):
        stop = min(n, start + block_rows)
        diff = X[start:stop, None, :] - X[None, :, :]
        D = np.zeros((stop - start, n))
        for m in range(d):
            D += diff[:, :, m] * diff[:, :, m]
        rows = np.arange(stop - start)
        # argmax returns the first maximum, i.e. the smaller index on ties
        far[start:stop] = np.argmax(D, axis=1)
        D[rows, np.arange(start, stop)] = np.inf
        # stable sort keeps index order among equal distances
        nbr[start:stop] = np.argsort(D, axis=1, kind="stable")[:, :k]
    return nbr, far


def jacobi_eigh_np(A, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigensolver with vectorised row/column rotations."""
    A = np.array(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(abs(np.trace(A)), np.max(np.abs(A)) if n else 0.0, 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                gap = A[q, q] - A[p, p]
                if abs(apq) <= 1e-150 * abs(gap) or apq == 0.0:
                    # negligible next to the diagonal gap: drop it
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = gap / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def eq_penalty_nb(R, ei, ej, ed, ew, lam, sigma, G, h_out):
        p = R.shape[1]
        val = 0.0
        for e in range(ei.shape[0]):
            i = ei[e]
            j = ej[e]
            s = 0.0
            for m in range(p):
                t = R[i, m] - R[j, m]
                s += t * t
            h = ew[e] * (s - ed[e])
            h_out[e] = h
            val += -lam[e] * h + 0.5 * sigma * h * h
            coef = 2.0 * ew[e] * (sigma * h - lam[e])
            for m in range(p):
                t = coef * (R[i, m] - R[j, m])
                G[i, m] += t
                G[j, m] -= t
        return val

    @njit(cache=True)
    def sep_penalty_nb(R, sa, si, ss, sm, mu, sigma, G, g_out):
        p = R.shape[1]
        val = 0.0
        for c in range(sa.shape[0]):
            a = sa[c]
            i = si[c]
            dot = 0.0
            for m in range(p):
                dot += R[a, m] * R[i, m]
            g = ss[c] * dot - sm[c]
            g_out[c] = g
            t = mu[c] - sigma * g
            if t < 0.0:
                t = 0.0
            val += (t * t - mu[c] * mu[c]) / (2.0 * sigma)
            if t > 0.0:
                coef = -t * ss[c]
                for m in range(p):
                    ra = R[a, m]
                    G[a, m] += coef * R[i, m]
                    G[i, m] += coef * ra
        return val

    @njit(cache=True)
    def pair_spread_nb(R, fi, ff, scale, G):
        p = R.shape[1]
        val = 0.0
        for e in range(fi.shape[0]):
            i = fi[e]
            f = ff[e]
            for m in range(p):
                t = R[i, m] - R[f, m]
                val += t * t
                G[i, m] += 2.0 * scale * t
                G[f, m] -= 2.0 * scale * t
        return val

    @njit(cache=True)
    def eq_residuals_nb(R, ei, ej, ed):
        out = np.empty(ei.shape[0])
        for e in range(ei.shape[0]):
            s = 0.0
            for m in range(R.shape[1]):
                t = R[ei[e], m] - R[ej[e], m]
                s += t * t
            out[e] = s - ed[e]
        return out

    @njit(cache=True)
    def sep_values_nb(R, sa, si, ss, sm):
        out = np.empty(sa.shape[0])
        for c in range(sa.shape[0]):
            dot = 0.0
            for m in range(R.shape[1]):
                dot += R[sa[c], m] * R[si[c], m]
            out[c] = ss[c] * dot - sm[c]
        return out

    @njit(cache=True)
    def knn_scan_nb(X, k, block_rows=0):
        n, d = X.shape
        nbr = np.empty((n, k), dtype=np.int64)
        far = np.empty(n, dtype=np.int64)
        bd = np.empty(k)
        bj = np.empty(k, dtype=np.int64)
        for i in range(n):
            for q in range(k):
                bd[q] = np.inf
                bj[q] = -1
            fd = -1.0
            fj = 0
            for j in range(n):
                s = 0.0
                for m in range(d):
                    t = X[i, m] - X[j, m]
                    s += t * t
                if s > fd:
                    fd = s
                    fj = j
                if j == i or not s < bd[k - 1]:
                    continue
                # insertion keeps earlier (smaller) indices ahead on ties
                q = k - 1
                while q > 0 and bd[q - 1] > s:
                    bd[q] = bd[q - 1]
                    bj[q] = bj[q - 1]
                    q -= 1
                bd[q] = s
                bj[q] = j
            for q in range(k):
                nbr[i, q] = bj[q]
            far[i] = fj
        return nbr, far

    @njit(cache=True)
    def jacobi_eigh_nb(A, tol=1e-12, max_sweeps=100):
        A = A.copy()
        n = A.shape[0]
        V = np.eye(n)
        scale = 1e-300
        tr = 0.0
        for i in range(n):
            tr += A[i, i]
            for j in range(n):
                if abs(A[i, j]) > scale:
                    scale = abs(A[i, j])
        if abs(tr) > scale:
            scale = abs(tr)
        for _ in range(max_sweeps):
            off = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off += A[i, j] * A[i, j]
            if np.sqrt(off) <= tol * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    gap = A[q, q] - A[p, p]
                    if abs(apq) <= 1e-150 * abs(gap) or apq == 0.0:
                        A[p, q] = 0.0
                        A[q, p] = 0.0
                        continue
                    theta = gap / (2.0 * apq)
                    if theta != 0.0:
                        t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    else:
                        t = 1.0
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(n):
                        ap = A[r, p]
                        aq = A[r, q]
                        A[r, p] = c * ap - s * aq
                        A[r, q] = s * ap + c * aq
                    for r in range(n):
                        ap = A[p, r]
                        aq = A[q, r]
                        A[p, r] = c * ap - s * aq
                        A[q, r] = s * ap + c * aq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    for r in range(n):
                        vp = V[r, p]
                        vq = V[r, q]
                        V[r, p] = c * vp - s * vq
                        V[r, q] = s * vp + c * vq
        w = np.empty(n)
        for i in range(n):
            w[i] = A[i, i]
        return w, V

    eq_penalty = eq_penalty_nb
    sep_penalty = sep_penalty_nb
    pair_spread = pair_spread_nb
    eq_residuals = eq_residuals_nb
    sep_values = sep_values_nb
    knn_scan = knn_scan_nb
    jacobi_eigh = jacobi_eigh_nb
else:
    eq_penalty = eq_penalty_np
    sep_penalty = sep_penalty_np
    pair_spread = pair_spread_np
    eq_residuals = eq_residuals_np
    sep_values = sep_values_np
    knn_scan = knn_scan_np
    jacobi_eigh = jacobi_eigh_np


BACKEND = "numba" if HAS_NUMBA else "numpy"
