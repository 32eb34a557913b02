"""Optimization on the manifold of fixed-rank matrices.

Embedded-submanifold geometry for rank-r matrices factored as M = U S V'
(U, V orthonormal, S an r x r core). Provides the tangent-space machinery,
a conjugate-gradient solver, a trust-region solver, and an alternating
least-squares baseline for masked completion objectives.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp


class RankDeficiencyError(RuntimeError):
    """Iterate left the fixed-rank manifold (core became singular)."""


RANK_FLOOR = 1e-12  # sigma_min >= RANK_FLOOR * sigma_max

TERM_GRAD = "grad_tol"
TERM_TARGET = "objective_target"
TERM_MAXITER = "max_iters"
TERM_RELCHANGE = "rel_change"
TERM_RANK = "rank_collapse"


@dataclass(frozen=True)
class FixedRankPoint:
    u: np.ndarray  # p x r, orthonormal columns
    s: np.ndarray  # r x r core
    v: np.ndarray  # q x r, orthonormal columns

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape[0], self.v.shape[0]

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    def to_dense(self) -> np.ndarray:
        return self.u @ self.s @ self.v.T

    def check(self, tol: float = 1e-10) -> None:
        r = self.rank
        if not np.allclose(self.u.T @ self.u, np.eye(r), atol=tol):
            raise ValueError("U columns are not orthonormal")
        if not np.allclose(self.v.T @ self.v, np.eye(r), atol=tol):
            raise ValueError("V columns are not orthonormal")
        sv = np.linalg.svd(self.s, compute_uv=False)
        if sv[-1] < RANK_FLOOR * sv[0]:
            raise RankDeficiencyError("core is numerically rank deficient")


@dataclass(frozen=True)
class TangentVector:
    base: FixedRankPoint
    m: np.ndarray  # r x r
    up: np.ndarray  # p x r with U'Up = 0
    vp: np.ndarray  # q x r with V'Vp = 0

    def to_ambient(self) -> np.ndarray:
        X = self.base
        return X.u @ self.m @ X.v.T + self.up @ X.v.T + X.u @ self.vp.T


def tangent_zero(X: FixedRankPoint) -> TangentVector:
    r = X.rank
    p, q = X.shape
    return TangentVector(X, np.zeros((r, r)), np.zeros((p, r)), np.zeros((q, r)))


def tangent_add(a: TangentVector, b: TangentVector, beta: float = 1.0) -> TangentVector:
    if a.base is not b.base:
        raise ValueError("tangent vectors live at different base points")
    return TangentVector(a.base, a.m + beta * b.m, a.up + beta * b.up, a.vp + beta * b.vp)


def tangent_scale(a: TangentVector, alpha: float) -> TangentVector:
    return TangentVector(a.base, alpha * a.m, alpha * a.up, alpha * a.vp)


def tangent_inner(a: TangentVector, b: TangentVector) -> float:
    return float(np.sum(a.m * b.m) + np.sum(a.up * b.up) + np.sum(a.vp * b.vp))


def tangent_norm(a: TangentVector) -> float:
    return np.sqrt(tangent_inner(a, a))


@dataclass(frozen=True)
class SmoothCost:
    """Euclidean cost f with gradient, evaluated on dense matrices.

    ``grad`` may return a dense array or a scipy sparse matrix. ``ehess``
    (optional) is the Euclidean Hessian action on a dense direction.
    """

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    shape: tuple[int, int]
    ehess: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass
class SolveTrace:
    records: list[tuple[int, float, float, float, float]]  # iter, f, |g|, step, elapsed
    point: FixedRankPoint
    reason: str

    @property
    def iterations(self) -> int:
        return self.records[-1][0] if self.records else 0

    @property
    def final_objective(self) -> float:
        return self.records[-1][1] if self.records else np.nan

    def objectives(self) -> np.ndarray:
        return np.array([r[1] for r in self.records])

    def iterations_to(self, target: float) -> int | None:
        for it, f, *_ in self.records:
            if f <= target:
                return it
        return None

    def to_csv(self) -> str:
        lines = ["iter,objective,grad_norm,step,elapsed_seconds"]
        for it, f, g, st, el in self.records:
            lines.append(f"{it},{f:.17g},{g:.17g},{st:.17g},{el:.17g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 500
    grad_tol: float = 1e-9
    f_target: float = -np.inf  # stop once the objective falls at or below this
    rel_change_tol: float = 0.0
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 50
    tr_radius0: float = 1.0
    tr_radius_max: float = 1e4
    tr_accept: float = 0.1
    tr_max_cg: int = 250  # cap on truncated-CG steps per outer iteration


def project_tangent(X: FixedRankPoint, Z) -> TangentVector:
    """Orthogonal projection of an ambient (dense or sparse) matrix."""
    p, q = X.shape
    if sp.issparse(Z):
        if Z.shape != (p, q):
            raise ValueError(f"ambient shape {Z.shape} != {(p, q)}")
        ZV = Z @ X.v
        ZtU = Z.T @ X.u
    else:
        Z = np.asarray(Z, dtype=float)
        if Z.shape != (p, q):
            raise ValueError(f"ambient shape {Z.shape} != {(p, q)}")
        ZV = Z @ X.v
        ZtU = Z.T @ X.u
    m = X.u.T @ ZV
    up = ZV - X.u @ m
    vp = ZtU - X.v @ m.T
    return TangentVector(X, m, up, vp)


def riemannian_gradient(cost: SmoothCost, X: FixedRankPoint) -> TangentVector:
    return project_tangent(X, cost.grad(X.to_dense()))


def retract(X: FixedRankPoint, xi: TangentVector, alpha: float = 1.0) -> FixedRankPoint:
    """Metric projection retraction: rank-r truncation of M + alpha*xi.

    Works on the small factors only; never forms a p x q matrix.
    """
    if xi.base is not X:
        raise ValueError("tangent vector is not based at X")
    r = X.rank
    qu, ru = np.linalg.qr(alpha * xi.up)
    qv, rv = np.linalg.qr(alpha * xi.vp)
    S = np.zeros((2 * r, 2 * r))
    S[:r, :r] = X.s + alpha * xi.m
    S[:r, r:] = rv.T
    S[r:, :r] = ru
    us, sv, vts = np.linalg.svd(S)
    if sv[r - 1] < RANK_FLOOR * max(sv[0], np.finfo(float).tiny):
        raise RankDeficiencyError(
            f"rank collapse in retraction: sigma_min/sigma_max = {sv[r-1]/max(sv[0],1e-300):.3e}"
        )
    u_new = np.hstack([X.u, qu]) @ us[:, :r]
    v_new = np.hstack([X.v, qv]) @ vts[:r, :].T
    return FixedRankPoint(u_new, np.diag(sv[:r]), v_new)


def transport(X_from: FixedRankPoint, X_to: FixedRankPoint, xi: TangentVector) -> TangentVector:
    """Vector transport by tangent-space projection at the target point."""
    if xi.base is not X_from:
        raise ValueError("tangent vector is not based at X_from")
    return project_tangent(X_to, xi.to_ambient())


def random_point(p: int, q: int, r: int, rng: np.random.Generator) -> FixedRankPoint:
    u, _ = np.linalg.qr(rng.standard_normal((p, r)))
    v, _ = np.linalg.qr(rng.standard_normal((q, r)))
    s = np.diag(1.0 + rng.random(r))
    return FixedRankPoint(u, s, v)


def random_tangent(X: FixedRankPoint, rng: np.random.Generator) -> TangentVector:
    p, q = X.shape
    r = X.rank
    m = rng.standard_normal((r, r))
    up = rng.standard_normal((p, r))
    up -= X.u @ (X.u.T @ up)
    vp = rng.standard_normal((q, r))
    vp -= X.v @ (X.v.T @ vp)
    return TangentVector(X, m, up, vp)


def svd_initialization(M0, r: int, rng: np.random.Generator | None = None, perturb: float = 0.0) -> FixedRankPoint:
    """Rank-r truncated SVD of a dense seed matrix, optionally perturbed."""
    M0 = np.asarray(M0, dtype=float)
    if perturb > 0.0:
        if rng is None:
            raise ValueError("perturbation requires a generator")
        M0 = M0 + perturb * rng.standard_normal(M0.shape)
    u, s, vt = np.linalg.svd(M0, full_matrices=False)
    s = s[:r].copy()
    floor = max(s[0], 1.0) * 1e-8
    s[s < floor] = floor  # keep the start strictly inside the manifold
    return FixedRankPoint(u[:, :r], np.diag(s), vt[:r, :].T)


def _record(records, it, f, gnorm, step, t0):
    records.append((it, float(f), float(gnorm), float(step), time.perf_counter() - t0))


def rcg_solve(cost: SmoothCost, X0: FixedRankPoint, opts: SolverOptions | None = None) -> SolveTrace:
    """Riemannian conjugate gradient (Polak-Ribiere+, Armijo backtracking)."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    X = X0
    f = cost.f(X.to_dense())
    g = riemannian_gradient(cost, X)
    gnorm = tangent_norm(g)
    records: list = []
    _record(records, 0, f, gnorm, 0.0, t0)
    if gnorm <= opts.grad_tol:
        return SolveTrace(records, X, TERM_GRAD)
    if f <= opts.f_target:
        return SolveTrace(records, X, TERM_TARGET)

    d = tangent_scale(g, -1.0)
    step = 1.0
    reason = TERM_MAXITER
    for it in range(1, opts.max_iters + 1):
        gd = tangent_inner(g, d)
        if gd >= 0:  # not a descent direction: restart with steepest descent
            d = tangent_scale(g, -1.0)
            gd = -gnorm * gnorm
        alpha = 2.0 * step
        f_new = None
        X_new = None
        retracted = False
        for _ in range(opts.max_backtracks):
            try:
                X_try = retract(X, d, alpha)
            except RankDeficiencyError:
                alpha *= opts.backtrack
                continue
            retracted = True
            f_try = cost.f(X_try.to_dense())
            if f_try <= f + opts.armijo_c1 * alpha * gd:
                f_new, X_new = f_try, X_try
                break
            alpha *= opts.backtrack
        if X_new is None:
            reason = TERM_RELCHANGE if retracted else TERM_RANK
            break
        step = alpha
        g_new = riemannian_gradient(cost, X_new)
        g_old_t = transport(X, X_new, g)
        d_t = transport(X, X_new, d)
        beta = max(
            0.0,
            tangent_inner(g_new, tangent_add(g_new, g_old_t, -1.0)) / (gnorm * gnorm),
        )
        d = tangent_add(tangent_scale(g_new, -1.0), d_t, beta)
        rel = abs(f - f_new) / max(1.0, abs(f))
        X, g, f_prev, f = X_new, g_new, f, f_new
        gnorm = tangent_norm(g)
        _record(records, it, f, gnorm, step, t0)
        if f <= opts.f_target:
            reason = TERM_TARGET
            break
        if gnorm <= opts.grad_tol:
            reason = TERM_GRAD
            break
        if opts.rel_change_tol > 0 and rel < opts.rel_change_tol:
            reason = TERM_RELCHANGE
            break
    return SolveTrace(records, X, reason)


def _hessian_action(cost: SmoothCost, X: FixedRankPoint, g: TangentVector, egrad) -> Callable:
    """Riemannian Hessian action at X.

    Exact when the cost supplies a Euclidean Hessian action (projection plus
    the fixed-rank curvature correction); otherwise a finite difference of
    the Riemannian gradient along a retracted step.
    """
    if cost.ehess is not None:
        s_inv = np.linalg.inv(X.s)

        def action(eta: TangentVector) -> TangentVector:
            amb = eta.to_ambient()
            h = project_tangent(X, cost.ehess(amb))
            t1 = (egrad @ eta.vp) @ s_inv.T
            up = np.asarray(t1 - X.u @ (X.u.T @ t1))
            t2 = (egrad.T @ eta.up) @ s_inv
            vp = np.asarray(t2 - X.v @ (X.v.T @ t2))
            return TangentVector(X, h.m, h.up + up, h.vp + vp)

        return action

    def action(eta: TangentVector) -> TangentVector:
        nrm = tangent_norm(eta)
        if nrm == 0.0:
            return tangent_zero(X)
        t = 1e-5 / nrm
        X_t = retract(X, eta, t)
        g_t = project_tangent(X, cost.grad(X_t.to_dense()))
        return tangent_scale(tangent_add(g_t, g, -1.0), 1.0 / t)

    return action


def _truncated_cg(g: TangentVector, hess, radius: float, X: FixedRankPoint, max_cg: int):
    """Steihaug truncated CG for the trust-region subproblem."""
    eta = tangent_zero(X)
    r_vec = g
    d = tangent_scale(g, -1.0)
    r2 = tangent_inner(r_vec, r_vec)
    r2_0 = r2
    if r2 == 0.0:
        return eta
    for _ in range(max_cg):
        hd = hess(d)
        dhd = tangent_inner(d, hd)
        if dhd <= 0:
            return _to_boundary(eta, d, radius)
        alpha = r2 / dhd
        eta_new = tangent_add(eta, d, alpha)
        if tangent_norm(eta_new) >= radius:
            return _to_boundary(eta, d, radius)
        r_new = tangent_add(r_vec, hd, alpha)
        r2_new = tangent_inner(r_new, r_new)
        eta, r_vec = eta_new, r_new
        if r2_new <= r2_0 * min(0.25, np.sqrt(r2_0)) ** 2 or np.sqrt(r2_new) <= 1e-14:
            return eta
        d = tangent_add(tangent_scale(r_new, -1.0), d, r2_new / r2)
        r2 = r2_new
    return eta


def _to_boundary(eta: TangentVector, d: TangentVector, radius: float) -> TangentVector:
    ee = tangent_inner(eta, eta)
    ed = tangent_inner(eta, d)
    dd = tangent_inner(d, d)
    tau = (-ed + np.sqrt(ed * ed + dd * (radius * radius - ee))) / dd
    return tangent_add(eta, d, tau)


def rtr_solve(cost: SmoothCost, X0: FixedRankPoint, opts: SolverOptions | None = None) -> SolveTrace:
    """Riemannian trust region with a truncated-CG subproblem solver."""
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    X = X0
    f = cost.f(X.to_dense())
    egrad = cost.grad(X.to_dense())
    g = project_tangent(X, egrad)
    gnorm = tangent_norm(g)
    records: list = []
    _record(records, 0, f, gnorm, opts.tr_radius0, t0)
    if gnorm <= opts.grad_tol:
        return SolveTrace(records, X, TERM_GRAD)
    if f <= opts.f_target:
        return SolveTrace(records, X, TERM_TARGET)

    radius = opts.tr_radius0
    dim = X.rank * (sum(X.shape) - X.rank)
    reason = TERM_MAXITER
    it = 0
    accepted = 0
    while accepted < opts.max_iters and it < 4 * opts.max_iters:
        it += 1
        hess = _hessian_action(cost, X, g, egrad)
        eta = _truncated_cg(g, hess, radius, X, max_cg=min(dim, opts.tr_max_cg))
        try:
            X_try = retract(X, eta, 1.0)
        except RankDeficiencyError:
            radius *= 0.25
            if radius < 1e-14:
                reason = TERM_RANK
                break
            continue
        f_try = cost.f(X_try.to_dense())
        model_drop = -(tangent_inner(g, eta) + 0.5 * tangent_inner(eta, hess(eta)))
        rho = (f - f_try) / model_drop if model_drop > 0 else -np.inf
        enorm = tangent_norm(eta)
        if rho < 0.25:
            radius *= 0.25
        elif rho > 0.75 and enorm >= 0.99 * radius:
            radius = min(2.0 * radius, opts.tr_radius_max)
        if rho >= opts.tr_accept and f_try <= f:
            accepted += 1
            X, f = X_try, f_try
            egrad = cost.grad(X.to_dense())
            g = project_tangent(X, egrad)
            gnorm = tangent_norm(g)
            _record(records, accepted, f, gnorm, radius, t0)
            if f <= opts.f_target:
                reason = TERM_TARGET
                break
            if gnorm <= opts.grad_tol:
                reason = TERM_GRAD
                break
        elif radius < 1e-14:
            reason = TERM_GRAD if gnorm <= 1e-6 else TERM_RELCHANGE
            break
    return SolveTrace(records, X, reason)


@dataclass(frozen=True)
class MaskedLeastSquares:
    """Targets on an index set: minimize sum over (i,j,t) of (M_ij - t)^2."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    p: int
    q: int

    def __post_init__(self):
        if not (len(self.rows) == len(self.cols) == len(self.values)):
            raise ValueError("index/value length mismatch")


def masked_ls_cost(spec: MaskedLeastSquares) -> SmoothCost:
    """Dense-matrix form of the masked least-squares objective."""
    rows, cols, vals = spec.rows, spec.cols, spec.values

    def f(M: np.ndarray) -> float:
        return float(np.sum((M[rows, cols] - vals) ** 2))

    def grad(M: np.ndarray):
        return sp.csr_matrix(
            (2.0 * (M[rows, cols] - vals), (rows, cols)), shape=(spec.p, spec.q)
        )

    def ehess(Zdot: np.ndarray):
        return sp.csr_matrix((2.0 * Zdot[rows, cols], (rows, cols)), shape=(spec.p, spec.q))

    return SmoothCost(f, grad, (spec.p, spec.q), ehess)


def altmin_solve(
    spec: MaskedLeastSquares,
    r: int,
    X0: FixedRankPoint,
    opts: SolverOptions | None = None,
) -> SolveTrace:
    """Alternating exact least squares on the factorization M = X Y'.

    Each sweep solves the row subproblems for X with Y fixed, then the
    column subproblems for Y; the objective is nonincreasing per half-sweep.
    """
    if r < 1:
        raise ValueError("rank must be >= 1")
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    p, q = spec.p, spec.q
    Xf = X0.u @ X0.s
    Yf = X0.v.copy()
    rows_by_i = [np.flatnonzero(spec.rows == i) for i in range(p)]
    cols_by_j = [np.flatnonzero(spec.cols == j) for j in range(q)]

    def _ls(F: np.ndarray, t: np.ndarray) -> np.ndarray:
        # normal equations with scale-relative Tikhonov; min-norm fallback
        G = F.T @ F
        G_reg = G + 1e-12 * (1.0 + np.trace(G)) * np.eye(r)
        rhs = F.T @ t
        try:
            return np.linalg.solve(G_reg, rhs)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(F, t, rcond=None)[0]

    def objective() -> float:
        vals = np.einsum("ij,ij->i", Xf[spec.rows], Yf[spec.cols])
        return float(np.sum((vals - spec.values) ** 2))

    def grad_norm() -> float:
        resid = np.einsum("ij,ij->i", Xf[spec.rows], Yf[spec.cols]) - spec.values
        G = sp.csr_matrix((2.0 * resid, (spec.rows, spec.cols)), shape=(p, q))
        gx = G @ Yf
        gy = G.T @ Xf
        return float(np.sqrt(np.sum(gx * gx) + np.sum(gy * gy)))

    f = objective()
    records: list = []
    _record(records, 0, f, grad_norm(), 0.0, t0)
    reason = TERM_MAXITER
    for sweep in range(1, opts.max_iters + 1):
        for i in range(p):
            idx = rows_by_i[i]
            if idx.size == 0:
                continue
            Yi = Yf[spec.cols[idx]]
            Xf[i] = _ls(Yi, spec.values[idx])
        for j in range(q):
            idx = cols_by_j[j]
            if idx.size == 0:
                continue
            Xj = Xf[spec.rows[idx]]
            Yf[j] = _ls(Xj, spec.values[idx])
        f_prev, f = f, objective()
        _record(records, sweep, f, grad_norm(), 1.0, t0)
        if f <= opts.f_target:
            reason = TERM_TARGET
            break
        if opts.rel_change_tol > 0 and abs(f_prev - f) < opts.rel_change_tol * max(1.0, abs(f_prev)):
            reason = TERM_RELCHANGE
            break
    # factored result as a (possibly rank-deficient) point; orthogonalize
    qx, rx = np.linalg.qr(Xf)
    qy, ry = np.linalg.qr(Yf)
    point = FixedRankPoint(qx, rx @ ry.T, qy)
    return SolveTrace(records, point, reason)
