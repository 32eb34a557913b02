"""ADMM solver for standard-form cone programs.

Operates on the homogeneous self-dual embedding of the primal-dual pair, so
infeasible problems terminate with Farkas-type certificates instead of
diverging. Each iteration solves one fixed linear system (factored once at
setup) and projects onto the cone product blockwise.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cones import SOC, ZERO, project_cone_product, project_dual_cone_product
from .program import StandardConicProgram

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITERATIONS = "max_iterations"

_DENSE_FACTOR_LIMIT = 1500  # below this column count, factor I + A'A densely


class SolverFailure(RuntimeError):
    """Numerical breakdown inside the conic solver."""


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 10_000
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    eps_infeas: float = 1e-7
    alpha: float = 1.5  # over-relaxation
    equilibrate: bool = False
    check_every: int = 10
    initial_point: np.ndarray | None = None  # warm primal iterate, length n


@dataclass
class ConicSolution:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    objective: float
    iterations: int
    certificate: np.ndarray | None = None


def _ruiz_scales(A: sp.csc_matrix, cones, iters: int = 10):
    """Ruiz-style equilibration; rows of an SOC block share one scale."""
    m, n = A.shape
    d = np.ones(m)
    e = np.ones(n)
    starts = []
    at = 0
    for k in cones:
        starts.append((at, at + k.dim, k.kind))
        at += k.dim
    M = A.copy()
    for _ in range(iters):
        M = sp.diags(d) @ A @ sp.diags(e)
        Ma = abs(M)
        rn = np.asarray(Ma.max(axis=1).todense()).ravel()
        for lo, hi, kind in starts:
            if kind == SOC:
                rn[lo:hi] = rn[lo:hi].max()
        cn = np.asarray(Ma.max(axis=0).todense()).ravel()
        rn[rn == 0] = 1.0
        cn[cn == 0] = 1.0
        d /= np.sqrt(rn)
        e /= np.sqrt(cn)
    return d, e


class AdmmSolver:
    """Solver bound to one program; the linear-system factorization is cached.

    ``update(prog)`` accepts a re-stuffed program with the identical sparsity
    pattern and refreshes only the numeric setup.
    """

    def __init__(self, prog: StandardConicProgram, opts: SolverOptions | None = None):
        self.opts = opts or SolverOptions()
        self._pattern = prog.pattern()
        self._setup(prog)

    def update(self, prog: StandardConicProgram) -> None:
        indices, indptr = prog.pattern()
        if not (
            np.array_equal(indices, self._pattern[0])
            and np.array_equal(indptr, self._pattern[1])
        ):
            raise ValueError("program pattern differs from the solver's pattern")
        self._setup(prog)

    def _setup(self, prog: StandardConicProgram) -> None:
        self.prog = prog
        m, n = prog.m, prog.n
        if self.opts.equilibrate:
            self._d, self._e = _ruiz_scales(prog.A, prog.cones)
        else:
            self._d = np.ones(m)
            self._e = np.ones(n)
        A = sp.diags(self._d) @ prog.A @ sp.diags(self._e)
        A = sp.csc_matrix(A)
        self._A = A
        self._b = self._d * prog.b
        self._c = self._e * prog.c
        if not (np.all(np.isfinite(A.data)) and np.all(np.isfinite(self._b)) and np.all(np.isfinite(self._c))):
            raise ValueError("program contains non-finite data")

        P = (sp.identity(n, format="csc") + A.T @ A).tocsc()
        if n <= _DENSE_FACTOR_LIMIT:
            cho = sla.cho_factor(P.toarray(), lower=True, check_finite=False)
            self._solve_P = lambda r: sla.cho_solve(cho, r, check_finite=False)
        else:
            lu = spla.splu(P)
            self._solve_P = lu.solve
        # g = M^{-1} h with M = [[I, A'], [-A, I]], h = (c, b)
        gx, gy = self._solve_M(self._c, self._b)
        self._g = (gx, gy)
        self._g_dot_h = float(self._c @ gx + self._b @ gy)

    def _solve_M(self, w1: np.ndarray, w2: np.ndarray):
        z1 = self._solve_P(w1 - self._A.T @ w2)
        z2 = w2 + self._A @ z1
        return z1, z2

    def _solve_IQ(self, w: np.ndarray) -> np.ndarray:
        """Solve (I + Q) z = w for the skew embedding matrix Q."""
        n, m = self.prog.n, self.prog.m
        w1, w2, w3 = w[:n], w[n : n + m], w[n + m]
        r1 = w1 - w3 * self._c
        r2 = w2 - w3 * self._b
        p1, p2 = self._solve_M(r1, r2)
        # Sherman-Morrison for (M + h h') zeta = r
        hp = self._c @ p1 + self._b @ p2
        coef = hp / (1.0 + self._g_dot_h)
        z1 = p1 - coef * self._g[0]
        z2 = p2 - coef * self._g[1]
        z3 = w3 + self._c @ z1 + self._b @ z2
        return np.concatenate([z1, z2, [z3]])

    def solve(self) -> ConicSolution:
        opts = self.opts
        prog = self.prog
        n, m = prog.n, prog.m
        A, b, c = self._A, self._b, self._c
        cones = prog.cones

        u = np.zeros(n + m + 1)
        v = np.zeros(n + m + 1)
        u[-1] = 1.0
        v[-1] = 1.0
        if opts.initial_point is not None:
            x0 = np.asarray(opts.initial_point, float)
            if x0.size != n:
                raise ValueError("initial point has wrong length")
            u[:n] = x0 / self._e

        best: ConicSolution | None = None
        it = 0
        for it in range(1, opts.max_iters + 1):
            ut = self._solve_IQ(u + v)
            t = opts.alpha * ut + (1.0 - opts.alpha) * u
            w = t - v
            u_new = np.empty_like(u)
            u_new[:n] = w[:n]
            u_new[n : n + m] = project_dual_cone_product(w[n : n + m], cones)
            u_new[-1] = max(w[-1], 0.0)
            v = v - t + u_new
            u = u_new

            if it % opts.check_every == 0 or it == opts.max_iters:
                sol = self._classify(u, v, it)
                if sol is not None:
                    return sol

        sol = self._extract(u, v, it, MAX_ITERATIONS)
        return sol

    def _candidates(self, u: np.ndarray, v: np.ndarray):
        n, m = self.prog.n, self.prog.m
        tau = u[-1]
        ux, uy = u[:n], u[n : n + m]
        vs = v[n : n + m]
        return tau, ux, uy, vs

    def _classify(self, u, v, it) -> ConicSolution | None:
        opts = self.opts
        n, m = self.prog.n, self.prog.m
        A, b, c = self._A, self._b, self._c
        d, e = self._d, self._e
        tau, ux, uy, vs = self._candidates(u, v)

        if tau > 1e-12:
            # unscaled candidate triple
            x = e * (ux / tau)
            y = d * (uy / tau)
            s = (vs / tau) / d
            A0, b0, c0 = self.prog.A, self.prog.b, self.prog.c
            ax = A0 @ x
            pres = np.linalg.norm(ax + s - b0)
            aty = A0.T @ y
            dres = np.linalg.norm(aty + c0)
            cx = float(c0 @ x)
            by = float(b0 @ y)
            gap = abs(cx + by)
            ok_p = pres <= opts.eps_abs + opts.eps_rel * max(
                np.linalg.norm(ax), np.linalg.norm(s), np.linalg.norm(b0)
            )
            ok_d = dres <= opts.eps_abs + opts.eps_rel * max(np.linalg.norm(aty), np.linalg.norm(c0))
            ok_g = gap <= opts.eps_abs + opts.eps_rel * max(abs(cx), abs(by))
            if ok_p and ok_d and ok_g:
                return ConicSolution(x, y, s, OPTIMAL, pres, dres, cx, it)

        # infeasibility certificates on the raw homogeneous iterate
        y_raw = d * uy
        bty = float(self.prog.b @ y_raw)
        if bty < 0:
            ycert = y_raw / (-bty)
            if np.linalg.norm(self.prog.A.T @ ycert) <= opts.eps_infeas:
                return ConicSolution(
                    np.full(n, np.nan),
                    ycert,
                    np.full(m, np.nan),
                    PRIMAL_INFEASIBLE,
                    np.nan,
                    np.nan,
                    np.nan,
                    it,
                    certificate=ycert,
                )
        x_raw = e * ux
        ctx = float(self.prog.c @ x_raw)
        if ctx < 0:
            xcert = x_raw / (-ctx)
            res = self.prog.A @ xcert
            scert = project_cone_product(-res, self.prog.cones)
            if np.linalg.norm(res + scert) <= opts.eps_infeas:
                return ConicSolution(
                    xcert,
                    np.full(m, np.nan),
                    scert,
                    DUAL_INFEASIBLE,
                    np.nan,
                    np.nan,
                    np.nan,
                    it,
                    certificate=xcert,
                )
        return None

    def _extract(self, u, v, it, status) -> ConicSolution:
        n, m = self.prog.n, self.prog.m
        tau, ux, uy, vs = self._candidates(u, v)
        tau = max(tau, 1e-12)
        x = self._e * (ux / tau)
        y = self._d * (uy / tau)
        s = (vs / tau) / self._d
        pres = float(np.linalg.norm(self.prog.A @ x + s - self.prog.b))
        dres = float(np.linalg.norm(self.prog.A.T @ y + self.prog.c))
        return ConicSolution(x, y, s, status, pres, dres, float(self.prog.c @ x), it)


def admm_solve(prog: StandardConicProgram, opts: SolverOptions | None = None) -> ConicSolution:
    """One-shot solve; see AdmmSolver for the re-stuffing workflow."""
    solver = AdmmSolver(prog, opts)
    sol = solver.solve()
    if not np.all(np.isfinite(sol.x)) and sol.status in (OPTIMAL, MAX_ITERATIONS):
        raise SolverFailure(f"non-finite iterate after {sol.iterations} iterations")
    return sol
