"""Real embedding of complex cone programs."""
import numpy as np
import pytest

from udnopt.conic import (
    Block,
    ComplexConicProgram,
    NONNEG_BLOCK,
    SOC_BLOCK,
    ZERO_BLOCK,
    SolverOptions,
    admm_solve,
    embed_complex,
    row,
)

TIGHT = SolverOptions(eps_abs=1e-9, eps_rel=1e-9)


def _solve(cprog):
    emb = embed_complex(cprog)
    sol = admm_solve(emb.program, TIGHT)
    assert sol.status == "optimal"
    return emb.recover(sol.x), sol


def test_recover_interleaving():
    # min Re(conj(1+2j) z) over ||z|| <= 1: z* = -(1+2j)/sqrt(5)
    target = 1.0 + 2.0j
    blocks = (Block(SOC_BLOCK, (row(const=1.0), row(z_idx=[0], z_coef=[1.0]))),)
    cprog = ComplexConicProgram(1, 0, np.array([np.conj(target)]), np.zeros(0), blocks)
    (z, w), sol = _solve(cprog)
    assert w.size == 0
    assert z[0] == pytest.approx(-target / np.sqrt(5), abs=1e-6)
    assert sol.objective == pytest.approx(-np.sqrt(5), abs=1e-6)


def test_zero_block_pins_both_parts():
    # z = 3 - 4j exactly; minimize ||z|| via epigraph t
    blocks = (
        Block(ZERO_BLOCK, (row(z_idx=[0], z_coef=[1.0], const=-(3.0 - 4.0j)),)),
        Block(SOC_BLOCK, (row(w_idx=[0], w_coef=[1.0]), row(z_idx=[0], z_coef=[1.0]))),
    )
    cprog = ComplexConicProgram(1, 1, np.zeros(1, complex), np.ones(1), blocks)
    (z, w), sol = _solve(cprog)
    assert z[0] == pytest.approx(3.0 - 4.0j, abs=1e-6)
    assert w[0] == pytest.approx(5.0, abs=1e-6)


def test_nonneg_block_uses_real_part():
    # min w s.t. Re(conj(h) z) - 1 >= 0, |z| <= w: the phase of z aligns with h
    h = np.exp(1j * 0.7)
    blocks = (
        Block(NONNEG_BLOCK, (row(z_idx=[0], z_coef=[np.conj(h)], const=-1.0),)),
        Block(SOC_BLOCK, (row(w_idx=[0], w_coef=[1.0]), row(z_idx=[0], z_coef=[1.0]))),
    )
    cprog = ComplexConicProgram(1, 1, np.zeros(1, complex), np.ones(1), blocks)
    (z, w), _ = _solve(cprog)
    assert w[0] == pytest.approx(1.0, abs=1e-6)
    assert z[0] == pytest.approx(h, abs=1e-6)


def test_soc_norm_preserved_under_embedding():
    # embedded SOC dimension is 1 + 2*(rows-1) and the complex 2-norm carries over
    blocks = (
        Block(
            SOC_BLOCK,
            (
                row(w_idx=[0], w_coef=[1.0]),
                row(z_idx=[0], z_coef=[1.0]),
                row(z_idx=[1], z_coef=[1.0]),
            ),
        ),
        Block(
            ZERO_BLOCK,
            (
                row(z_idx=[0], z_coef=[1.0], const=-(1.0 + 1.0j)),
                row(z_idx=[1], z_coef=[1.0], const=-(2.0 - 1.0j)),
            ),
        ),
    )
    cprog = ComplexConicProgram(2, 1, np.zeros(2, complex), np.ones(1), blocks)
    emb = embed_complex(cprog)
    assert emb.program.cones[0].dim == 5
    (z, w), _ = _solve(cprog)
    assert w[0] == pytest.approx(np.sqrt(abs(1 + 1j) ** 2 + abs(2 - 1j) ** 2), abs=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_matches_cvxpy_on_random_complex_socp(seed):
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(seed)
    n, m = 4, 3
    H = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
    g = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    # min ||z|| s.t. Hz = g_ls residual fixed: use Hz = H z0 for feasibility
    z0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    rhs = H @ z0
    blocks = [
        Block(
            ZERO_BLOCK,
            tuple(row(z_idx=range(n), z_coef=H[i], const=-rhs[i]) for i in range(m)),
        ),
        Block(
            SOC_BLOCK,
            (row(w_idx=[0], w_coef=[1.0]), *(row(z_idx=[j], z_coef=[1.0]) for j in range(n))),
        ),
    ]
    cprog = ComplexConicProgram(n, 1, np.zeros(n, complex), np.ones(1), tuple(blocks))
    (z, w), sol = _solve(cprog)

    zc = cp.Variable(n, complex=True)
    problem = cp.Problem(cp.Minimize(cp.norm(zc, 2)), [H @ zc == rhs])
    problem.solve(solver=cp.CLARABEL)
    assert w[0] == pytest.approx(problem.value, rel=1e-6, abs=1e-7)
    assert np.linalg.norm(H @ z - rhs) <= 1e-6
