"""Augmented-Lagrangian solver for the low-rank unfolding programs.

The kernel ``K = R R^T`` is optimised through its factor ``R`` (N x rank).
Each outer step minimises the augmented Lagrangian with L-BFGS and then
updates the multipliers and, when feasibility stalls, the penalty.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import _kernels
from ._random import stream
from .constraints import feasibility_metrics, eq_rrmse, violation_tolerance
from .errors import NumericalAbort, ParameterError
from .lbfgs import lbfgs_minimize
from .objective import objective_value_grad

INITS = ("random_gaussian", "input_pca", "geodesic_mds")


@dataclass
class SolverConfig:
    """Solver settings.

    ``sep_slack`` tightens every separation internally to
    ``g >= sep_slack`` so that the inexact multiplier iteration still ends
    with ``g >= 0``; ``"auto"`` derives it from the input geometry (see
    ``separation_slack``).

    ``feas_tol`` is in percent of relative RMS equality error.  With
    ``relative_residuals`` each equality is divided by its target length
    inside the penalty, so the penalty measures the same quantity as
    ``feas_tol``.  ``grad_tol``
    defaults to ``1e-6 * N``.  ``center`` defaults to on without separation
    constraints and off with them.  ``objective_weight="auto"`` rescales the
    objective so that it equals the number of equality constraints at the
    input geometry; the optimiser's feasible set is unaffected.
    """

    rank: int = 3
    sigma0: float = 1.0
    sigma_growth: float = 10.0
    sigma_max: float = 1e8
    feas_tol: float = 0.1
    grad_tol: Optional[float] = None
    max_outer: int = 50
    max_inner: int = 1000
    lbfgs_memory: int = 10
    init: str = "random_gaussian"
    init_scale: Optional[float] = None
    seed: int = 0
    center: Optional[bool] = None
    objective_weight: object = "auto"
    multiplier_updates: bool = True
    precondition: bool = True
    relative_residuals: bool = True
    sep_slack: object = "auto"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.rank) != self.rank or self.rank < 1:
            raise ParameterError("rank", "must be a positive integer")
        if not self.sigma0 > 0:
            raise ParameterError("sigma0", "must be > 0")
        if not self.sigma_growth > 1:
            raise ParameterError("sigma_growth", "must be > 1")
        if not self.sigma_max >= self.sigma0:
            raise ParameterError("sigma_max", "must be >= sigma0")
        if not self.feas_tol >= 0:
            raise ParameterError("feas_tol", "must be >= 0")
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ParameterError("grad_tol", "must be > 0")
        for name in ("max_outer", "max_inner", "lbfgs_memory"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ParameterError(name, "must be a positive integer")
        if self.init not in INITS:
            raise ParameterError("init", f"must be one of {INITS}")
        if self.init_scale is not None and not self.init_scale > 0:
            raise ParameterError("init_scale", "must be > 0")
        w = self.objective_weight
        if not (w == "auto" or (isinstance(w, (int, float)) and not isinstance(w, bool) and w >= 0)):
            raise ParameterError("objective_weight", 'must be "auto" or a number >= 0')
        v = self.sep_slack
        if not (v == "auto" or (isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0)):
            raise ParameterError("sep_slack", 'must be "auto" or a number >= 0')
        return self

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ParameterError(unknown[0], "unknown solver config key")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


@dataclass
class SolverState:
    """Iterate and multipliers; coordinates in units of ``length_scale``."""

    R: np.ndarray
    lambda_eq: np.ndarray
    mu_ineq: np.ndarray
    sigma: float
    lambda_center: Optional[np.ndarray] = None
    outer_iter: int = 0
    inner_iters: int = 0
    length_scale: float = 1.0


@dataclass
class SolveReport:
    converged: bool
    objective: float
    eq_rrmse: float
    sep_violation_rate: float
    max_abs_residual: float
    outer_iterations: int
    inner_iterations: int
    wall_time: float
    sigma: float = 0.0
    stalled_inner: int = 0
    n_eq: int = 0
    n_sep: int = 0
    history: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self, path=None, **extra):
        doc = {**self.to_dict(), **extra}
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def aug_lagrangian_value_grad(state, constraints, kind, objective_weight=1.0, center=False,
                              eq_weights=None):
    """Augmented Lagrangian of the negated objective and its gradient in ``R``.

    ``-w*obj(R) - sum lam*h + sigma/2 sum h^2 + sum Phi(g, mu, sigma)`` where
    ``Phi(g, mu, sigma) = (max(0, mu - sigma*g)^2 - mu^2) / (2 sigma)``.  With
    ``center`` the column sums of ``R`` are treated as extra equalities.
    ``eq_weights`` rescales each equality residual (default 1).
    """
    R = np.ascontiguousarray(state.R, dtype=np.float64)
    cs = constraints
    if R.shape[0] != cs.n_points and cs.n_points:
        raise ParameterError("R", f"expected {cs.n_points} rows, got {R.shape[0]}")
    if state.lambda_eq.shape != (cs.n_eq,) or state.mu_ineq.shape != (cs.n_sep,):
        raise ParameterError("state", "multiplier sizes do not match the constraint set")
    G = np.zeros_like(R)
    sigma = float(state.sigma)
    obj, _ = objective_value_grad(R, kind, scale=-objective_weight, out=G)
    value = -objective_weight * obj
    h = np.empty(cs.n_eq)
    ew = np.ones(cs.n_eq) if eq_weights is None else np.asarray(eq_weights, dtype=np.float64)
    value += _kernels.eq_penalty(R, cs.eq_i, cs.eq_j, cs.eq_d, ew, state.lambda_eq, sigma, G, h)
    g = np.empty(cs.n_sep)
    value += _kernels.sep_penalty(R, cs.sep_a, cs.sep_i, cs.sep_sign, cs.sep_margin, state.mu_ineq, sigma, G, g)
    if center:
        c = R.sum(axis=0)
        lam_c = state.lambda_center if state.lambda_center is not None else np.zeros_like(c)
        value += float(-lam_c @ c + 0.5 * sigma * (c @ c))
        G += (sigma * c - lam_c)[None, :]
    return float(value), G


def equality_weights(cs, relative=True):
    """Per-equality residual weights: ``1/d`` (relative) or all ones."""
    if not relative or cs.n_eq == 0:
        return np.ones(cs.n_eq)
    d = cs.eq_d
    pos = d > 0
    # zero-length targets keep an absolute residual, as in eq_rrmse
    return np.where(pos, 1.0 / np.where(pos, d, 1.0), 1.0)


def laplacian_preconditioner(state, cs, n, p, eq_weights=None):
    """Factor a weighted k-NN graph Laplacian approximating the Hessian.

    Edge weights are the Gauss-Newton curvature ``4 sigma d_e / p`` plus the
    positive part of the current edge stress; active separation constraints
    add to the diagonal.  Returns a function applying the inverse to a flat
    ``N * p`` vector.
    """
    from scipy.sparse import coo_matrix, diags
    from scipy.sparse.linalg import splu

    sigma = state.sigma
    R = state.R
    ew = np.ones(cs.n_eq) if eq_weights is None else eq_weights
    h = ew * _kernels.eq_residuals(R, cs.eq_i, cs.eq_j, cs.eq_d)
    w = 4.0 * sigma * ew * ew * cs.eq_d / p + np.maximum(0.0, 2.0 * ew * (sigma * h - state.lambda_eq))
    diag = np.bincount(cs.eq_i, w, n) + np.bincount(cs.eq_j, w, n)
    if cs.n_sep:
        g = _kernels.sep_values(R, cs.sep_a, cs.sep_i, cs.sep_sign, cs.sep_margin)
        act = (state.mu_ineq - sigma * g) > 0
        sq = np.einsum("ij,ij->i", R, R) / p
        sq *= float(np.mean(cs.sep_sign * cs.sep_sign))
        diag += sigma * (np.bincount(cs.sep_a[act], sq[cs.sep_i[act]], n)
                         + np.bincount(cs.sep_i[act], sq[cs.sep_a[act]], n))
    shift = 1e-2 * max(float(np.mean(diag)), 1e-12)
    off = coo_matrix((-w, (cs.eq_i, cs.eq_j)), shape=(n, n))
    P = (off + off.T + diags(diag + shift)).tocsc()
    lu = splu(P)

    def apply(v):
        return lu.solve(v.reshape(n, p)).ravel()

    return apply


def separation_slack(dataset, cs, factor=0.1):
    """Internal margin added to every separation, in squared input units.

    A point at distance ``delta`` from an anchor but of the other class forces
    ``|r_a| <= delta``, and two opposite-class neighbours at distance
    ``delta_e`` can then be at most ``|r_a| * delta_e`` apart in dot product.
    The slack is ``factor`` times the product of the smallest such distances
    measured in the input, which keeps the tightened problem feasible.
    """
    if cs.n_sep == 0:
        return 0.0
    X = dataset.points
    opp = cs.sep_sign < 0
    if opp.any():
        diff = X[cs.sep_a[opp]] - X[cs.sep_i[opp]]
        d_anchor = float(np.sqrt(np.min(np.einsum("ij,ij->i", diff, diff))))
    else:
        d_anchor = 0.0
    lab = dataset.labels
    if lab is not None and cs.n_eq:
        li, lj = lab[cs.eq_i], lab[cs.eq_j]
        cross = (li >= 0) & (lj >= 0) & (li != lj)
        d_edge = float(np.sqrt(np.min(cs.eq_d[cross]))) if cross.any() else d_anchor
    else:
        d_edge = d_anchor
    return factor * d_anchor * d_edge


def _length_scale(dataset, graph, cs):
    if cs.n_eq:
        m = float(np.mean(cs.eq_d))
        if m > 0:
            return math.sqrt(m)
    if graph is not None and np.mean(graph.far_d) > 0:
        return math.sqrt(float(np.mean(graph.far_d)))
    return 1.0


def geodesic_mds(cs, n, p, rng, n_landmarks=1000):
    """Landmark MDS on k-NN graph geodesics (an Isomap-style unrolled start).

    Returns an ``n x p`` matrix; columns beyond the positive spectrum are zero.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    W = coo_matrix((np.sqrt(cs.eq_d), (cs.eq_i, cs.eq_j)), shape=(n, n)).tocsr()
    L = min(n, n_landmarks)
    land = np.sort(rng.choice(n, size=L, replace=False)) if L < n else np.arange(n)
    D = dijkstra(W, directed=False, indices=land)
    finite = np.isfinite(D)
    if not finite.all():
        # disconnected pieces: place them beyond the largest finite distance
        D[~finite] = 2.0 * D[finite].max()
    D2 = D * D
    Dl = D2[:, land]
    J = np.eye(L) - 1.0 / L
    B = -0.5 * J @ Dl @ J
    w, V = np.linalg.eigh(B)
    order = np.argsort(w)[::-1][:p]
    w, V = w[order], V[:, order]
    keep = w > 1e-12 * max(w[0], 1e-300)
    out = np.zeros((n, p))
    # distance-based triangulation of every point against the landmarks
    pinv = V[:, keep] / np.sqrt(w[keep])
    out[:, keep] = -0.5 * (D2 - Dl.mean(axis=1)[:, None]).T @ pinv
    return out - out.mean(axis=0)


def initial_factor(dataset, cs, config, length):
    """Starting ``R`` in units of ``length``; ``cs`` is already rescaled."""
    n, p = dataset.n_points, int(config.rank)
    rng = stream(config.seed, "init")
    if cs.n_eq:
        base = float(np.mean(np.sqrt(cs.eq_d)))
    else:
        base = 1.0
    if config.init == "random_gaussian":
        scale = config.init_scale if config.init_scale is not None else base / math.sqrt(p)
        return scale * rng.standard_normal((n, p))
    if config.init == "geodesic_mds" and cs.n_eq:
        R = geodesic_mds(cs, n, p, rng)
        q = int(np.sum(np.any(R != 0, axis=0)))
    else:
        X = (dataset.points - dataset.points.mean(axis=0)) / length
        _, _, Vt = np.linalg.svd(X, full_matrices=False)
        q = min(p, Vt.shape[0])
        R = np.zeros((n, p))
        R[:, :q] = X @ Vt[:q].T
    # zero columns stay zero under every gradient here, so seed them
    pad = config.init_scale if config.init_scale is not None else 1e-2 * base
    R[:, q:] = pad * rng.standard_normal((n, p - q))
    return R


def outer_solve(dataset, graph, constraints, kind, config=None, callback=None):
    """Solve the low-rank program; returns ``(EmbeddingResult, SolveReport)``.

    Infeasible termination is not an error: the report carries
    ``converged=False`` with the reached feasibility.
    """
    from .embed import make_embedding

    config = config or SolverConfig()
    t0 = time.perf_counter()
    n = dataset.n_points
    p = int(config.rank)
    cs0 = constraints
    if cs0.n_points and cs0.n_points != n:
        raise ParameterError("constraints", f"built for {cs0.n_points} points, dataset has {n}")
    length = _length_scale(dataset, graph, cs0)
    cs = cs0.scaled(length)
    # separations are tightened by the slack and measured in units of it
    slack = config.sep_slack
    if slack == "auto":
        slack = separation_slack(dataset, cs0)
    slack = float(slack) / (length * length)
    sep_w = 1.0
    if cs.n_sep:
        if slack > 0:
            sep_w = 1.0 / slack
        else:
            Xs = (dataset.points - dataset.points.mean(axis=0)) / length
            sep_w = 1.0 / max(float(np.mean(np.einsum("ij,ij->i", Xs, Xs))), 1e-300)
        cs = replace(cs, sep_sign=cs.sep_sign * sep_w, sep_margin=(cs.sep_margin + slack) * sep_w)
    center = config.center if config.center is not None else cs.n_sep == 0
    grad_tol = config.grad_tol if config.grad_tol is not None else 1e-6 * n

    w = config.objective_weight
    if w == "auto":
        Xs = (dataset.points - dataset.points.mean(axis=0)) / length
        ref, _ = objective_value_grad(Xs, kind)
        w = max(cs.n_eq, 1) / ref if ref > 0 else 1.0
    w = float(w)

    state = SolverState(
        R=initial_factor(dataset, cs, config, length),
        lambda_eq=np.zeros(cs.n_eq),
        mu_ineq=np.zeros(cs.n_sep),
        sigma=float(config.sigma0),
        lambda_center=np.zeros(p) if center else None,
        length_scale=length,
    )

    ew = equality_weights(cs, config.relative_residuals)

    def fun(x):
        state.R = x.reshape(n, p)
        value, G = aug_lagrangian_value_grad(state, cs, kind, w, center, ew)
        return value, G.ravel()

    def infeasibility(R, g_prev_mu):
        h = ew * _kernels.eq_residuals(R, cs.eq_i, cs.eq_j, cs.eq_d)
        g = _kernels.sep_values(R, cs.sep_a, cs.sep_i, cs.sep_sign, cs.sep_margin)
        comp = np.minimum(g, g_prev_mu / state.sigma)
        total = h @ h + comp @ comp
        if center:
            c = R.sum(axis=0)
            total += c @ c
        return h, g, math.sqrt(total)

    history = []
    stalled = 0
    prev_v = math.inf
    rr = rate = 0.0
    for outer in range(int(config.max_outer)):
        precond = laplacian_preconditioner(state, cs, n, p, ew) if config.precondition and cs.n_eq else None
        res = lbfgs_minimize(fun, state.R.ravel(), memory=config.lbfgs_memory,
                             grad_tol=grad_tol, max_inner=config.max_inner, precond=precond)
        if not np.isfinite(res.f) or not np.all(np.isfinite(res.x)):
            raise NumericalAbort(f"non-finite augmented Lagrangian at outer step {outer}")
        state.R = res.x.reshape(n, p)
        state.outer_iter = outer + 1
        state.inner_iters += res.n_iter
        stalled += res.stalled
        h, g, v = infeasibility(state.R, state.mu_ineq)
        rr = eq_rrmse(h / ew, cs.eq_d)
        rate = float(np.mean(g + sep_w * slack < -sep_w * violation_tolerance(state.R, cs))) if cs.n_sep else 0.0
        history.append({"outer": outer + 1, "eq_rrmse": rr, "sep_violation_rate": rate,
                        "sigma": state.sigma, "inner": res.n_iter, "status": res.status})
        if callback is not None:
            callback(state, history[-1])
        # the centroid may drift by at most feas_tol percent of the length unit
        drift = float(np.linalg.norm(state.R.mean(axis=0))) if center else 0.0
        if rr <= config.feas_tol and rate == 0.0 and drift <= 0.01 * config.feas_tol:
            break
        if config.multiplier_updates:
            state.lambda_eq = state.lambda_eq - state.sigma * h
            state.mu_ineq = np.maximum(0.0, state.mu_ineq - state.sigma * g)
            if center:
                state.lambda_center = state.lambda_center - state.sigma * state.R.sum(axis=0)
            if v > 0.25 * prev_v:
                state.sigma = min(state.sigma * config.sigma_growth, config.sigma_max)
        else:
            state.sigma = min(state.sigma * config.sigma_growth, config.sigma_max)
        prev_v = v

    R = state.R * length
    obj, _ = objective_value_grad(R, kind)
    rr, rate, max_abs = feasibility_metrics(R, cs0)
    report = SolveReport(
        converged=rr <= config.feas_tol and rate == 0.0,
        objective=obj,
        eq_rrmse=rr,
        sep_violation_rate=rate,
        max_abs_residual=max_abs,
        outer_iterations=state.outer_iter,
        inner_iterations=state.inner_iters,
        wall_time=time.perf_counter() - t0,
        sigma=state.sigma,
        stalled_inner=stalled,
        n_eq=cs0.n_eq,
        n_sep=cs0.n_sep,
        history=history,
    )
    report.state = state
    return make_embedding(R, report, cs0.anchors), report
