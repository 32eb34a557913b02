"""Acceptance gate: one printed pass/fail line per criterion.

Each test exercises one of the eleven release criteria at its stated
tolerance and runtime budget and prints a single summary line (visible even
under pytest capture). The heavy figure replications (criteria 3-5) dominate
the runtime; everything else finishes in seconds.
"""
import itertools
import time
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import pytest

from udnopt import activity, beamforming as bf, tim
from udnopt import manifold as mf
from udnopt.conic import (
    Cone,
    SolverOptions,
    StandardConicProgram,
    admm_solve,
    project_cone,
)
from udnopt.harness import ExperimentConfig, cli
from udnopt.harness import experiments as ex


def _report(capsys, num: int, name: str, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    with capsys.disabled():
        print(f"\nACCEPTANCE {num:2d} [{name}]: {verdict} ({detail})")
    assert ok, f"criterion {num} ({name}): {detail}"


def _isotonic_fit(y: np.ndarray) -> np.ndarray:
    """Least-squares nondecreasing fit via pool-adjacent-violators."""
    vals = list(map(float, y))
    weights = [1.0] * len(vals)
    i = 0
    while i < len(vals) - 1:
        if vals[i] > vals[i + 1] + 1e-12:
            w = weights[i] + weights[i + 1]
            v = (weights[i] * vals[i] + weights[i + 1] * vals[i + 1]) / w
            vals[i:i + 2] = [v]
            weights[i:i + 2] = [w]
            i = max(i - 1, 0)
        else:
            i += 1
    return np.repeat(vals, np.asarray(weights, dtype=int))


def _isotonic_deviation(counts: np.ndarray, increasing: bool) -> float:
    """Total |counts - fit| against the best monotone fit, in trials."""
    y = np.asarray(counts, dtype=float)
    if not increasing:
        y = y[::-1]
    return float(np.abs(y - _isotonic_fit(y)).sum())


# --------------------------------------------------------------------------
# 1. cone projection suite


def test_criterion_1_cone_suite(capsys):
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst = {"idem": 0.0, "exp": 0.0, "polar": 0.0}
    cones = (Cone.zero(7), Cone.nonneg(7), Cone.soc(7))
    for cone in cones:
        for _ in range(1000):
            v = rng.standard_normal(cone.dim) * rng.uniform(0.1, 10.0)
            u = rng.standard_normal(cone.dim) * rng.uniform(0.1, 10.0)
            pv = project_cone(v, cone)
            pu = project_cone(u, cone)
            worst["idem"] = max(
                worst["idem"], np.linalg.norm(project_cone(pv, cone) - pv)
            )
            worst["exp"] = max(
                worst["exp"],
                np.linalg.norm(pu - pv) - np.linalg.norm(u - v),
            )
            # Moreau decomposition: residual lies in the polar cone and is
            # orthogonal to the projection.
            res = v - pv
            worst["polar"] = max(
                worst["polar"],
                abs(pv @ res),
                np.linalg.norm(project_cone(res, cone)),
            )
    elapsed = time.time() - t0
    ok = (
        worst["idem"] <= 1e-9
        and worst["exp"] <= 1e-9
        and worst["polar"] <= 1e-8
        and elapsed < 10.0
    )
    _report(
        capsys, 1, "cone projection suite", ok,
        f"idempotence {worst['idem']:.1e}, expansiveness excess {worst['exp']:.1e}, "
        f"polar residual {worst['polar']:.1e}, {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# 2. conic solver vs. an independent first-order oracle


def _proj_cone_inline(z: np.ndarray, cones) -> np.ndarray:
    """Cone projection written independently of the package (oracle-side)."""
    out = np.empty_like(z)
    at = 0
    for c in cones:
        blk = z[at:at + c.dim]
        if c.kind == "zero":
            out[at:at + c.dim] = 0.0
        elif c.kind == "nonneg":
            out[at:at + c.dim] = np.maximum(blk, 0.0)
        else:
            t, v = blk[0], blk[1:]
            nv = np.linalg.norm(v)
            if nv <= t:
                out[at:at + c.dim] = blk
            elif nv <= -t:
                out[at:at + c.dim] = 0.0
            else:
                a = 0.5 * (t + nv)
                out[at] = a
                out[at + 1:at + c.dim] = a * v / nv if nv > 0 else 0.0
        at += c.dim
    return out


def _pdhg_objective(prog: StandardConicProgram, iters: int = 30_000) -> float:
    """Primal-dual hybrid gradient on min c'x s.t. b - Ax in K.

    Saddle form min_x max_{y in polar(K)} c'x + y'(Ax - b); dual step
    projects onto the polar cone via Moreau. Returns the better of the last
    iterate and the ergodic average of the second half.
    """
    A = prog.A.toarray()
    b, c = prog.b, prog.c
    step = 0.99 / np.linalg.norm(A, 2)
    x = np.zeros(prog.n)
    y = np.zeros(prog.m)
    xbar = x.copy()
    xsum = np.zeros(prog.n)
    count = 0
    for k in range(iters):
        v = y + step * (b - A @ xbar)
        y = v - _proj_cone_inline(v, prog.cones)
        xnew = x - step * (c - A.T @ y)
        xbar = 2.0 * xnew - x
        x = xnew
        if k >= iters // 2:
            xsum += x
            count += 1
    avg = c @ (xsum / count)
    last = c @ x
    # prefer the iterate with smaller cone violation
    viol_last = np.linalg.norm(
        (b - A @ x) - _proj_cone_inline(b - A @ x, prog.cones)
    )
    xa = xsum / count
    viol_avg = np.linalg.norm(
        (b - A @ xa) - _proj_cone_inline(b - A @ xa, prog.cones)
    )
    return last if viol_last <= viol_avg else avg


def _random_socp(seed: int, n: int, m_pos: int, m_soc: int) -> StandardConicProgram:
    rng = np.random.default_rng(seed)
    A1 = rng.standard_normal((m_pos, n))
    x0 = rng.standard_normal(n)
    b1 = A1 @ x0 + rng.uniform(0.5, 1.5, m_pos)
    A2 = rng.standard_normal((m_soc, n))
    b2 = A2 @ x0
    b2[0] += 2.0 + np.linalg.norm(b2[1:] - A2[1:] @ x0)
    c = rng.standard_normal(n)
    A3 = np.vstack([np.zeros(n), -np.eye(n)])
    b3 = np.concatenate([[10.0], np.zeros(n)])
    A = sp.csc_matrix(np.vstack([A1, A2, A3]))
    b = np.concatenate([b1, b2, b3])
    return StandardConicProgram(
        c, A, b, (Cone.nonneg(m_pos), Cone.soc(m_soc), Cone.soc(n + 1))
    )


def test_criterion_2_solver_vs_oracle(capsys):
    t0 = time.time()
    tight = SolverOptions(eps_abs=1e-9, eps_rel=1e-9)
    worst = 0.0
    for s in range(50):
        rng = np.random.default_rng(4000 + s)
        n = int(rng.integers(4, 18))  # total m = m_pos + m_soc + n + 1 <= 50
        m_pos = int(rng.integers(2, 16))
        m_soc = int(rng.integers(2, 33 - n - m_pos))
        prog = _random_socp(s, n, m_pos, m_soc)
        sol = admm_solve(prog, tight)
        assert sol.status == "optimal"
        oracle = _pdhg_objective(prog)
        rel = abs(sol.objective - oracle) / max(1.0, abs(oracle))
        worst = max(worst, rel)

    # analytic case 1: min x s.t. x >= 1  -> x* = 1
    lp = StandardConicProgram(
        np.array([1.0]), sp.csc_matrix([[-1.0]]), np.array([-1.0]),
        (Cone.nonneg(1),),
    )
    sol = admm_solve(lp, tight)
    analytic_ok = sol.status == "optimal" and abs(sol.objective - 1.0) <= 1e-5
    # analytic case 2: min t s.t. t >= ||(3,4)||  -> t* = 5
    soc = StandardConicProgram(
        np.array([1.0]), sp.csc_matrix([[-1.0], [0.0], [0.0]]),
        np.array([0.0, 3.0, 4.0]), (Cone.soc(3),),
    )
    sol = admm_solve(soc, tight)
    analytic_ok &= sol.status == "optimal" and abs(sol.objective - 5.0) <= 1e-5
    # analytic case 3: infeasible pair x >= 1, -x >= 0 with a Farkas witness
    infeas = StandardConicProgram(
        np.array([1.0]), sp.csc_matrix([[-1.0], [1.0]]),
        np.array([-1.0, 0.0]), (Cone.nonneg(2),),
    )
    sol = admm_solve(infeas)
    y = sol.certificate
    analytic_ok &= (
        sol.status == "primal_infeasible"
        and y is not None
        and np.all(y >= -1e-9)
        and abs(infeas.b @ y + 1.0) <= 1e-5
        and np.linalg.norm(infeas.A.T @ y) <= 1e-5
    )

    elapsed = time.time() - t0
    ok = worst <= 1e-3 and analytic_ok and elapsed < 60.0
    _report(
        capsys, 2, "solver vs first-order oracle", ok,
        f"worst relative gap {worst:.2e} over 50 SOCPs, "
        f"analytic cases {'ok' if analytic_ok else 'FAILED'}, {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# 3. sparse phase transition (scaled Fig. 2(a))


def test_criterion_3_sparse_phase_transition(capsys):
    t0 = time.time()
    cfg = ExperimentConfig(
        kind="sparse-pt", seed=0, trials=20, n=50, m=2,
        k_min=1, k_max=20, l_min=4, l_max=50, l_step=4,
    )
    grid = ex.run_sparse_phase_transition(cfg)
    trials = grid.trials
    # the plotted grid starts at L = 4, where a single active device is
    # already often recoverable; probe L in {1, 2, 3} with the same cell
    # sampler so every row has its low anchor available
    head_ls = (1, 2, 3)
    head = np.array(
        [
            [ex._sparse_cell((cfg.seed, cfg.n, cfg.m, K, L, trials)) for L in head_ls]
            for K in grid.axis1
        ]
    )
    successes = np.hstack([head, grid.successes])
    probs = successes / trials
    ls = np.asarray(head_ls + tuple(grid.axis2))
    transition_ok = True
    deviation = 0.0
    detail_bad = []
    for i, K in enumerate(grid.axis1):
        row = probs[i]
        low = np.flatnonzero(row <= 0.10)
        high = np.flatnonzero(row >= 0.90)
        has = low.size > 0 and high.size > 0 and ls[low[0]] < ls[high[-1]]
        if not has:
            transition_ok = False
            detail_bad.append(f"K={K}")
        deviation = max(deviation, _isotonic_deviation(successes[i], True))
    elapsed = time.time() - t0
    ok = transition_ok and deviation <= 2.0 and elapsed < 15 * 60
    _report(
        capsys, 3, "sparse recovery phase transition", ok,
        f"transition present for all K{'' if transition_ok else ' except ' + ','.join(detail_bad)}, "
        f"max isotonic deviation {deviation:.1f} trials, {elapsed / 60:.1f} min",
    )


# --------------------------------------------------------------------------
# 4. NMSE curve (scaled Fig. 2(b))


def test_criterion_4_nmse_curve(capsys):
    t0 = time.time()
    cfg = ExperimentConfig(
        kind="nmse", seed=0, trials=20, n=50, m=2, k=10,
        noise_sd=0.1, l_min=4, l_max=48, l_step=4,
    )
    table = ex.run_nmse_curve(cfg)
    means = np.array([r[1] for r in table.rows])
    stderrs = np.array([r[2] for r in table.rows])
    mono_ok = bool(np.all(means[1:] <= means[:-1] + stderrs[:-1]))

    control = ExperimentConfig(
        kind="nmse", seed=0, trials=20, n=50, m=2, k=10,
        noise_sd=0.0, l_min=50, l_max=50, l_step=4,
    )
    ctrl = ex.run_nmse_curve(control)
    ctrl_mean = ctrl.rows[0][1]
    elapsed = time.time() - t0
    ok = mono_ok and ctrl_mean <= 1e-10 and elapsed < 10 * 60
    _report(
        capsys, 4, "NMSE vs pilot length", ok,
        f"monotone within one stderr: {mono_ok}, noiseless L=N control "
        f"{ctrl_mean:.1e}, {elapsed / 60:.1f} min",
    )


# --------------------------------------------------------------------------
# 5. TIM phase transition (scaled Fig. 4)


def test_criterion_5_tim_phase_transition(capsys):
    t0 = time.time()
    cfg = ExperimentConfig(
        kind="tim-pt", seed=0, trials=20, k=30, rank_max=10,
        s_step=58, restarts=10,
    )
    grid = ex.run_tim_phase_transition(cfg)
    trials = grid.trials
    svals = np.asarray(grid.axis2)
    # monotone nonincreasing in |S| per rank, nondecreasing in rank per |S|
    dev_rows = max(
        _isotonic_deviation(grid.successes[i], increasing=False)
        for i in range(len(grid.axis1))
    )
    dev_cols = max(
        _isotonic_deviation(grid.successes[:, j], increasing=True)
        for j in range(len(grid.axis2))
    )
    s0 = int(np.flatnonzero(svals == 0)[0])
    boundary_s0 = bool(np.all(grid.successes[:, s0] == trials))
    # the r = K column sits above the plotted rank range; evaluate it with
    # the same per-cell sampling used by the grid
    full_rank_wins = [
        ex._tim_cell((cfg.seed, 30, 30, int(s), trials, cfg.restarts))
        for s in svals
    ]
    boundary_rk = all(w == trials for w in full_rank_wins)
    elapsed = time.time() - t0
    ok = (
        dev_rows <= 2.0 and dev_cols <= 2.0
        and boundary_s0 and boundary_rk
        and elapsed < 30 * 60
    )
    _report(
        capsys, 5, "TIM phase transition", ok,
        f"isotonic deviation rows {dev_rows:.1f} / cols {dev_cols:.1f} trials, "
        f"|S|=0 boundary {boundary_s0}, r=K boundary {boundary_rk}, "
        f"{elapsed / 60:.1f} min",
    )


# --------------------------------------------------------------------------
# 6. convergence comparison (Fig. 5)


def test_criterion_6_convergence_comparison(capsys):
    t0 = time.time()
    cfg = ExperimentConfig(
        kind="converge", seed=0, trials=10, p=100, q=100, rank=5,
        omega=400, solvers=("rcg", "rtr", "altmin"), max_iters=500,
        f_tol=1e-6,
    )
    table, traces = ex.run_convergence_comparison(cfg)
    hits = {s: {} for s in cfg.solvers}
    for seed_idx, solver, iters, _, _ in table.rows:
        hits[solver][seed_idx] = iters
    rcg_ok = sum(1 for v in hits["rcg"].values() if v >= 0)
    rtr_ok = sum(1 for v in hits["rtr"].values() if v >= 0)
    faster = sum(
        1
        for i in range(cfg.trials)
        if (hits["rtr"][i] if hits["rtr"][i] >= 0 else np.inf)
        <= (hits["altmin"][i] if hits["altmin"][i] >= 0 else np.inf)
    )
    monotone = all(
        all(
            tr.records[j + 1][1] <= tr.records[j][1] + 1e-12
            for j in range(len(tr.records) - 1)
        )
        for runs in traces.values()
        for tr in runs
    )
    elapsed = time.time() - t0
    ok = rcg_ok >= 9 and rtr_ok >= 9 and faster >= 9 and monotone and elapsed < 5 * 60
    _report(
        capsys, 6, "solver convergence comparison", ok,
        f"rcg {rcg_ok}/10 and rtr {rtr_ok}/10 reach 1e-6 in 500 iters, "
        f"rtr<=altmin on {faster}/10, traces monotone: {monotone}, {elapsed:.0f}s",
    )


# --------------------------------------------------------------------------
# 7. manifold geometry suite


def _random_masked_cost(rng, p, q, n_obs):
    idx = rng.choice(p * q, size=n_obs, replace=False)
    rows, cols = np.unravel_index(idx, (p, q))
    vals = rng.standard_normal(n_obs)
    return mf.masked_ls_cost(mf.MaskedLeastSquares(rows, cols, vals, p, q))


def test_criterion_7_manifold_geometry(capsys):
    t0 = time.time()
    rng = np.random.default_rng(7)
    costs = [
        _random_masked_cost(rng, 20, 15, 90),
        _random_masked_cost(rng, 30, 30, 200),
    ]
    worst_grad = 0.0
    worst_slope = np.inf
    worst_gauge = 0.0
    for cost in costs:
        p, q = cost.shape
        r = 3
        for _ in range(10):
            X = mf.random_point(p, q, r, rng)
            M = X.to_dense()
            f0 = cost.f(M)
            g = mf.riemannian_gradient(cost, X)
            for _ in range(10):
                xi = mf.random_tangent(X, rng)
                xi = mf.tangent_scale(xi, 1.0 / mf.tangent_norm(xi))
                h = 1e-6
                fd = (
                    cost.f(mf.retract(X, xi, h).to_dense())
                    - cost.f(mf.retract(X, xi, -h).to_dense())
                ) / (2 * h)
                an = mf.tangent_inner(g, xi)
                worst_grad = max(
                    worst_grad, abs(fd - an) / max(1.0, abs(an))
                )
            # second-order retraction test: || R_X(t xi) - (X + t xi) || = O(t^2)
            xi = mf.random_tangent(X, rng)
            xi = mf.tangent_scale(xi, 1.0 / mf.tangent_norm(xi))
            amb = xi.to_ambient()
            ts = np.array([1e-2, 1e-3])
            errs = [
                np.linalg.norm(mf.retract(X, xi, t).to_dense() - (M + t * amb))
                for t in ts
            ]
            if errs[1] > 0:
                slope = np.log(errs[0] / errs[1]) / np.log(ts[0] / ts[1])
                worst_slope = min(worst_slope, slope)
            # gauge invariance: rotating the factorization leaves f, |grad| alone
            Qu = np.linalg.qr(rng.standard_normal((r, r)))[0]
            Qv = np.linalg.qr(rng.standard_normal((r, r)))[0]
            Xg = mf.FixedRankPoint(X.u @ Qu, Qu.T @ X.s @ Qv, X.v @ Qv)
            worst_gauge = max(
                worst_gauge,
                abs(cost.f(Xg.to_dense()) - f0) / max(1.0, abs(f0)),
                abs(
                    mf.tangent_norm(mf.riemannian_gradient(cost, Xg))
                    - mf.tangent_norm(g)
                )
                / max(1.0, mf.tangent_norm(g)),
            )
    elapsed = time.time() - t0
    ok = (
        worst_grad <= 1e-5
        and worst_slope >= 1.9
        and worst_gauge <= 1e-8
        and elapsed < 30.0
    )
    _report(
        capsys, 7, "manifold geometry suite", ok,
        f"gradient-FD gap {worst_grad:.1e}, retraction slope {worst_slope:.2f}, "
        f"gauge gap {worst_gauge:.1e}, {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# 8. TIM exact properties


LINKS_5 = frozenset(
    {(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (2, 4), (3, 0), (3, 4), (4, 0)}
)
CACHES_5 = {
    0: frozenset({1, 4}),
    1: frozenset({0, 4}),
    2: frozenset({1, 3}),
    3: frozenset({1, 2}),
    4: frozenset({0, 2, 3}),
}


def test_criterion_8_tim_exact(capsys):
    t0 = time.time()
    opts = tim.CompletionOptions(restarts=6, max_iters=120, tr_max_cg=25)
    rank1_ok = True
    for K in range(1, 5):
        positions = [(i, j) for i in range(K) for j in range(K) if i != j]
        for bits in range(2 ** len(positions)):
            zero = frozenset(
                positions[t] for t in range(len(positions)) if bits >> t & 1
            )
            feasible, _ = tim.attempt_fixed_rank(tim.SideInfoMask(K, zero), 1, opts)
            if feasible != (not zero):
                rank1_ok = False
    full_ok = True
    for K in (3, 4, 5):
        all_off = frozenset(
            (i, j) for i in range(K) for j in range(K) if i != j
        )
        res = tim.min_rank_complete(tim.SideInfoMask(K, all_off), opts)
        if not (res.success and res.rank == K and res.dof == Fraction(1, K)):
            full_ok = False
    topo = tim.NetworkTopology(5, LINKS_5, CACHES_5)
    res5 = tim.min_rank_complete(tim.build_mask(topo), opts)
    example_ok = res5.success and res5.rank == 2 and res5.dof == Fraction(1, 2)
    elapsed = time.time() - t0
    ok = rank1_ok and full_ok and example_ok and elapsed < 5 * 60
    _report(
        capsys, 8, "TIM exact properties", ok,
        f"rank-1 iff empty (exhaustive K<=4): {rank1_ok}, full interference "
        f"rank=K: {full_ok}, 5-user example rank {res5.rank}, {elapsed:.0f}s",
    )


# --------------------------------------------------------------------------
# 9. GSBF vs exhaustive oracle


def _oracle_power(inst) -> float:
    best = np.inf
    rrhs = range(inst.L)
    for size in range(1, inst.L + 1):
        for combo in itertools.combinations(rrhs, size):
            sol = bf.socp_power_min(inst, frozenset(combo))
            if sol.status == bf.FEASIBLE:
                best = min(
                    best, bf.network_power(inst, sol.beamformer, frozenset(combo))
                )
    return best


def test_criterion_9_gsbf_oracle_gap(capsys):
    t0 = time.time()
    gaps = []
    feasible_all = True
    never_below = True
    for seed in range(20):
        inst = bf.random_instance(L=4, K=3, seed=seed)
        sol = bf.group_sparse_beamforming(inst)
        if sol.status != bf.FEASIBLE:
            feasible_all = False
            continue
        oracle = _oracle_power(inst)
        if sol.network_power < oracle - 1e-6:
            never_below = False
        gaps.append((sol.network_power - oracle) / oracle)
    gaps = np.array(gaps)
    med = float(np.median(gaps))
    elapsed = time.time() - t0
    ok = feasible_all and never_below and med <= 0.10 and elapsed < 10 * 60
    _report(
        capsys, 9, "GSBF oracle gap", ok,
        f"always feasible: {feasible_all}, relative gap median {med:.4f} "
        f"(q75 {np.quantile(gaps, 0.75):.4f}, max {gaps.max():.4f}), "
        f"{elapsed:.0f}s",
    )


# --------------------------------------------------------------------------
# 10. group-lasso certificates


def test_criterion_10_group_lasso_certificates(capsys):
    t0 = time.time()
    rng = np.random.default_rng(10)
    shutoff_ok = True
    worst_active = 0.0
    worst_inactive = 0.0
    for i in range(100):
        N = int(rng.integers(20, 61))
        K = int(rng.integers(1, max(2, N // 5)))
        L = int(rng.integers(max(4, K), N))
        inst = activity.generate_instance(N, 2, K, L, 0.1, int(rng.integers(2**32)))
        lmax = activity.lambda_max(inst.observations, inst.pilots)
        est0 = activity.group_lasso_solve(inst.observations, inst.pilots, lmax)
        if np.any(est0.theta_hat != 0):
            shutoff_ok = False
        lam = 0.3 * lmax
        est = activity.group_lasso_solve(inst.observations, inst.pilots, lam)
        ra, ri = activity.kkt_residuals(
            est.theta_hat, inst.observations, inst.pilots, lam
        )
        worst_active = max(worst_active, ra / lam)
        worst_inactive = max(worst_inactive, ri / lam)
    elapsed = time.time() - t0
    ok = (
        shutoff_ok
        and worst_active <= 1e-5
        and worst_inactive <= 1e-5
        and elapsed < 60.0
    )
    _report(
        capsys, 10, "group-lasso certificates", ok,
        f"shutoff exact: {shutoff_ok}, worst KKT residual/lambda "
        f"active {worst_active:.1e} / inactive {worst_inactive:.1e}, "
        f"{elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# 11. determinism under parallelism


def test_criterion_11_determinism(capsys, tmp_path):
    t0 = time.time()
    runs = {}
    for tag, jobs in (("a", 1), ("b", 4), ("c", 4)):
        out = tmp_path / f"sparse_{tag}.csv"
        code = cli.main(
            [
                "sparse-pt", "--n", "20", "--m", "2", "--k-min", "0",
                "--k-max", "4", "--l-min", "4", "--l-step", "8",
                "--trials", "5", "--seed", "3", "--jobs", str(jobs),
                "--out", str(out),
            ]
        )
        assert code == 0
        runs[tag] = out.read_bytes()
    sparse_ok = runs["a"] == runs["b"] == runs["c"]

    tim_runs = {}
    for tag, jobs in (("a", 1), ("b", 4)):
        out = tmp_path / f"tim_{tag}.csv"
        code = cli.main(
            [
                "tim-pt", "--k", "6", "--rank-max", "3", "--s-step", "10",
                "--restarts", "3", "--trials", "4", "--seed", "5",
                "--jobs", str(jobs), "--out", str(out),
            ]
        )
        assert code == 0
        tim_runs[tag] = out.read_bytes()
    tim_ok = tim_runs["a"] == tim_runs["b"]
    elapsed = time.time() - t0
    ok = sparse_ok and tim_ok
    _report(
        capsys, 11, "determinism under parallelism", ok,
        f"sparse-pt bitwise identical across jobs 1/4/4: {sparse_ok}, "
        f"tim-pt jobs 1/4: {tim_ok}, {elapsed:.0f}s",
    )
