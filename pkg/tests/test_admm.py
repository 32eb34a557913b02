"""ADMM conic solver: analytic cases, oracle agreement, certificates."""
import numpy as np
import pytest
import scipy.sparse as sp

from udnopt.conic import (
    Cone,
    SolverOptions,
    StandardConicProgram,
    admm_solve,
)

TIGHT = SolverOptions(eps_abs=1e-9, eps_rel=1e-9)


def _lp_x_ge_1() -> StandardConicProgram:
    # min x  s.t.  x >= 1   (x* = 1)
    A = sp.csc_matrix(np.array([[-1.0]]))
    return StandardConicProgram(np.array([1.0]), A, np.array([-1.0]), (Cone.nonneg(1),))


def _soc_t_eq_5() -> StandardConicProgram:
    # min t  s.t.  t >= ||(3, 4)||   (t* = 5)
    A = sp.csc_matrix(np.array([[-1.0], [0.0], [0.0]]))
    b = np.array([0.0, 3.0, 4.0])
    return StandardConicProgram(np.array([1.0]), A, b, (Cone.soc(3),))


def _infeasible_pair() -> StandardConicProgram:
    # x >= 1 and -x >= 0 cannot hold together
    A = sp.csc_matrix(np.array([[-1.0], [1.0]]))
    b = np.array([-1.0, 0.0])
    return StandardConicProgram(np.array([1.0]), A, b, (Cone.nonneg(2),))


def _unbounded() -> StandardConicProgram:
    # min -x s.t. x >= 0: dual infeasible (unbounded below)
    A = sp.csc_matrix(np.array([[-1.0]]))
    return StandardConicProgram(np.array([-1.0]), A, np.array([0.0]), (Cone.nonneg(1),))


def test_lp_analytic():
    sol = admm_solve(_lp_x_ge_1(), TIGHT)
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(1.0, abs=1e-5)
    assert sol.objective == pytest.approx(1.0, abs=1e-5)


def test_soc_analytic():
    sol = admm_solve(_soc_t_eq_5(), TIGHT)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(5.0, abs=1e-5)


def test_primal_infeasibility_certificate():
    sol = admm_solve(_infeasible_pair())
    assert sol.status == "primal_infeasible"
    y = sol.certificate
    assert y is not None
    # Farkas: y in K* (nonneg), b'y = -1, A'y ~ 0
    prog = _infeasible_pair()
    assert np.all(y >= -1e-9)
    assert prog.b @ y == pytest.approx(-1.0, abs=1e-6)
    assert np.linalg.norm(prog.A.T @ y) <= 1e-5


def test_dual_infeasibility_certificate():
    sol = admm_solve(_unbounded())
    assert sol.status == "dual_infeasible"
    xr = sol.certificate
    prog = _unbounded()
    assert prog.c @ xr == pytest.approx(-1.0, abs=1e-6)
    # Ax_r stays in the recession cone: -A x_r in K
    resid = -prog.A @ xr
    assert np.all(resid >= -1e-6)


def _random_socp(seed: int, n=12, m_soc=6, m_pos=8):
    """Feasible SOCP with a strictly interior point by construction."""
    rng = np.random.default_rng(seed)
    A1 = rng.standard_normal((m_pos, n))
    x0 = rng.standard_normal(n)
    b1 = A1 @ x0 + rng.uniform(0.5, 1.5, m_pos)  # b - Ax0 > 0
    A2 = rng.standard_normal((m_soc, n))
    b2 = A2 @ x0
    b2[0] += 2.0 + np.linalg.norm(b2[1:] - A2[1:] @ x0)  # strict SOC slack
    c = rng.standard_normal(n)
    # bound the feasible set so the problem has a finite optimum: ||x|| <= 10
    A3 = np.vstack([np.zeros(n), -np.eye(n)])
    b3 = np.concatenate([[10.0], np.zeros(n)])
    A = sp.csc_matrix(np.vstack([A1, A2, A3]))
    b = np.concatenate([b1, b2, b3])
    cones = (Cone.nonneg(m_pos), Cone.soc(m_soc), Cone.soc(n + 1))
    return StandardConicProgram(c, A, b, cones)


@pytest.mark.parametrize("seed", range(8))
def test_matches_cvxpy_on_random_socps(seed):
    cp = pytest.importorskip("cvxpy")
    prog = _random_socp(seed)
    sol = admm_solve(prog, TIGHT)
    assert sol.status == "optimal"

    x = cp.Variable(prog.n)
    slack = prog.b - prog.A.toarray() @ x
    cons, at = [], 0
    for cone in prog.cones:
        blk = slack[at : at + cone.dim]
        cons.append(blk >= 0 if cone.kind == "nonneg" else cp.SOC(blk[0], blk[1:]))
        at += cone.dim
    problem = cp.Problem(cp.Minimize(prog.c @ x), cons)
    problem.solve(solver=cp.CLARABEL)
    assert sol.objective == pytest.approx(problem.value, rel=1e-5, abs=1e-6)


def test_equilibration_changes_nothing_numerically():
    prog = _random_socp(3)
    # badly scale a row block and a column
    plain = admm_solve(prog, TIGHT)
    eq = admm_solve(prog, SolverOptions(eps_abs=1e-9, eps_rel=1e-9, equilibrate=True))
    assert eq.status == "optimal"
    assert eq.objective == pytest.approx(plain.objective, rel=1e-6)


def test_max_iterations_status():
    sol = admm_solve(_random_socp(0), SolverOptions(max_iters=3, eps_abs=1e-14, eps_rel=1e-14))
    assert sol.status == "max_iterations"


def test_warm_start_accepted():
    prog = _lp_x_ge_1()
    cold = admm_solve(prog, TIGHT)
    warm = admm_solve(
        prog,
        SolverOptions(eps_abs=1e-9, eps_rel=1e-9, initial_point=cold.x),
    )
    assert warm.status == "optimal"
    assert warm.iterations <= cold.iterations
