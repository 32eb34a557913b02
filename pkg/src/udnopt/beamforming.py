"""Group-sparse beamforming and user admission for cloud radio access.

A C-RAN instance has L remote radio heads (RRHs) serving K single-antenna
users. Switching an RRH off zeroes its whole block of beamforming
coefficients, so network-power minimization couples a combinatorial RRH
selection with a convex power-minimization SOCP. The three-stage heuristic
induces the group-sparsity structure with a weighted mixed l1/l2 program,
orders RRHs by their group norms, and greedily tests deactivations. User
admission relaxes each QoS constraint with a nonnegative slack and minimizes
the slack l1 norm.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .conic import (
    Block,
    ComplexConicProgram,
    NONNEG_BLOCK,
    OPTIMAL,
    PRIMAL_INFEASIBLE,
    SOC_BLOCK,
    SolverFailure,
    SolverOptions,
    admm_solve,
    embed_complex,
    row,
)

FEASIBLE = "optimal"
INFEASIBLE = "infeasible"

_DEFAULT_SOLVER_OPTIONS = SolverOptions(eps_abs=1e-8, eps_rel=1e-8, max_iters=100_000)


@dataclass(frozen=True)
class CranInstance:
    """Downlink C-RAN with per-RRH channel blocks stacked row-wise.

    ``channels`` is N x K complex with N = sum of antenna counts; rows
    ``rrh_slice(l)`` hold h_{lk} for RRH l. SINR targets are linear scale;
    a target of zero means user k imposes no QoS constraint.
    """

    n_antennas: tuple  # per-RRH antenna counts N_l
    p_max: tuple  # per-RRH transmit budgets P_l (watts)
    efficiency: tuple  # amplifier drain efficiencies eta_l in (0, 1]
    p_static: tuple  # fronthaul/static powers P^c_l (watts)
    sinr_targets: tuple  # gamma_k, linear scale
    noise_power: tuple  # sigma^2_k (watts)
    channels: np.ndarray  # N x K complex

    def __post_init__(self):
        L, K = self.L, self.K
        if not (len(self.p_max) == len(self.efficiency) == len(self.p_static) == L):
            raise ValueError("per-RRH array length mismatch")
        if len(self.noise_power) != K:
            raise ValueError("per-user array length mismatch")
        if self.channels.shape != (self.N, K):
            raise ValueError("channel matrix shape mismatch")
        if min(self.n_antennas, default=1) < 1:
            raise ValueError("antenna counts must be positive")
        arrays = (self.p_max, self.efficiency, self.p_static, self.noise_power)
        if any(v <= 0 for arr in arrays for v in arr):
            raise ValueError("powers, efficiencies and noise must be positive")
        if any(e > 1 for e in self.efficiency):
            raise ValueError("efficiency must lie in (0, 1]")
        if any(g < 0 for g in self.sinr_targets):
            raise ValueError("SINR targets must be nonnegative")

    @property
    def L(self) -> int:
        return len(self.n_antennas)

    @property
    def K(self) -> int:
        return len(self.sinr_targets)

    @property
    def N(self) -> int:
        return int(sum(self.n_antennas))

    def rrh_slice(self, l: int) -> slice:
        start = int(sum(self.n_antennas[:l]))
        return slice(start, start + self.n_antennas[l])


def random_instance(
    L: int,
    K: int,
    seed: int,
    n_antennas: int = 2,
    p_max: float = 1.0,
    efficiency: float = 0.25,
    p_static: float = 5.0,
    sinr_target: float = 1.0,
    noise_power: float = 1.0,
) -> CranInstance:
    """Random ensemble with i.i.d. CN(0,1) channels, fixed power model."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, L, K, n_antennas)))
    N = L * n_antennas
    H = (rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))) / np.sqrt(2.0)
    return CranInstance(
        (n_antennas,) * L,
        (p_max,) * L,
        (efficiency,) * L,
        (p_static,) * L,
        (sinr_target,) * K,
        (noise_power,) * K,
        H,
    )


def dump_instance(inst: CranInstance) -> str:
    """Text serialization: counts, per-RRH arrays, per-user arrays, channels
    row by row as interleaved real/imag parts."""
    out = io.StringIO()
    print(inst.L, inst.K, file=out)
    for arr in (inst.n_antennas, inst.p_max, inst.efficiency, inst.p_static,
                inst.sinr_targets, inst.noise_power):
        print(" ".join("%.17g" % v for v in arr), file=out)
    for i in range(inst.N):
        parts = []
        for k in range(inst.K):
            parts += ["%.17g" % inst.channels[i, k].real, "%.17g" % inst.channels[i, k].imag]
        print(" ".join(parts), file=out)
    return out.getvalue()


def load_instance(text: str) -> CranInstance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    L, K = map(int, lines[0].split())
    rows = [list(map(float, ln.split())) for ln in lines[1:]]
    if len(rows) < 6:
        raise ValueError("truncated instance document")
    n_antennas = tuple(int(v) for v in rows[0])
    if len(n_antennas) != L:
        raise ValueError("antenna count row length mismatch")
    N = sum(n_antennas)
    if len(rows) != 6 + N:
        raise ValueError("channel row count mismatch")
    H = np.empty((N, K), dtype=complex)
    for i in range(N):
        vals = rows[6 + i]
        if len(vals) != 2 * K:
            raise ValueError("channel row width mismatch")
        H[i] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
    return CranInstance(
        n_antennas,
        tuple(rows[1]),
        tuple(rows[2]),
        tuple(rows[3]),
        tuple(rows[4]),
        tuple(rows[5]),
        H,
    )


@dataclass(frozen=True)
class BeamformingSolution:
    status: str
    beamformer: np.ndarray  # N x K complex, inactive RRH blocks exactly zero
    active: frozenset  # active RRH indices
    transmit_power: float  # sum_l (1/eta_l) ||z~_l||^2
    network_power: float  # transmit + static power of the active set
    sinrs: np.ndarray  # achieved per-user SINR (linear)


@dataclass(frozen=True)
class AdmissionInstance:
    """User admission over a C-RAN with every RRH active: QoS constraint i is
    the SOC SINR constraint of user i, relaxed by a slack z_i >= 0."""

    cran: CranInstance


@dataclass(frozen=True)
class SparseObjectiveSpec:
    """Instantiation of the composite objective f1 + f2 over constraint set C.

    f1 is the combinatorial part (weighted group-support count, or plain
    cardinality for admission); f2 is the total transmit power (zero for
    admission).
    """

    kind: str  # "gsbf" or "admission"
    weights: np.ndarray
    constraint_set: str

    def f1(self, inst: CranInstance, V: np.ndarray) -> float:
        if self.kind == "gsbf":
            return float(
                sum(
                    w
                    for l, w in enumerate(self.weights)
                    if np.linalg.norm(V[inst.rrh_slice(l)]) > 0
                )
            )
        return float(np.count_nonzero(self.weights))  # placeholder for ||z||_0

    def f2(self, inst: CranInstance, V: np.ndarray) -> float:
        if self.kind != "gsbf":
            return 0.0
        return transmit_power(inst, V)


def gsbf_weights(inst: CranInstance) -> np.ndarray:
    """Group weights sqrt(P^c_l K / sum_k ||h_lk||^2): bias switching-off
    toward RRHs with high static power and weak channels."""
    w = np.empty(inst.L)
    for l in range(inst.L):
        g = np.linalg.norm(inst.channels[inst.rrh_slice(l)]) ** 2
        if g == 0:
            w[l] = np.inf
        else:
            w[l] = np.sqrt(inst.p_static[l] * inst.K / g)
    return w


def transmit_power(inst: CranInstance, V: np.ndarray) -> float:
    return float(
        sum(
            np.linalg.norm(V[inst.rrh_slice(l)]) ** 2 / inst.efficiency[l]
            for l in range(inst.L)
        )
    )


def network_power(inst: CranInstance, V: np.ndarray, active) -> float:
    """Total network power: transmit power plus static power of active RRHs."""
    if V.shape != (inst.N, inst.K):
        raise ValueError("beamformer shape mismatch")
    return transmit_power(inst, V) + float(sum(inst.p_static[l] for l in active))


def achieved_sinrs(inst: CranInstance, V: np.ndarray) -> np.ndarray:
    out = np.empty(inst.K)
    G = inst.channels.conj().T @ V  # G[k, j] = h_k^H v_j
    for k in range(inst.K):
        sig = abs(G[k, k]) ** 2
        interf = float(np.sum(np.abs(G[k]) ** 2) - sig)
        out[k] = sig / (interf + inst.noise_power[k])
    return out


def _check_feasible(inst: CranInstance, V: np.ndarray, active, tol: float = 1e-6) -> bool:
    sinrs = achieved_sinrs(inst, V)
    for k, g in enumerate(inst.sinr_targets):
        if g > 0 and sinrs[k] < g * (1 - 10 * tol) - tol:
            return False
    for l in active:
        if np.linalg.norm(V[inst.rrh_slice(l)]) ** 2 > inst.p_max[l] * (1 + tol) + tol:
            return False
    return True


def _active_rows(inst: CranInstance, active: list) -> np.ndarray:
    return np.concatenate([np.arange(inst.N)[inst.rrh_slice(l)] for l in active])


def _sinr_blocks(inst: CranInstance, active: list, var, n_extra_w: int = 0, slack_for=None):
    """SOC SINR blocks over the active-row variable layout.

    ``var(i_local, k)`` maps (local antenna row, user) to the complex variable
    index; ``slack_for`` optionally maps user k to a real slack variable index
    added to the cone's top row.
    """
    rows_glob = _active_rows(inst, active)
    blocks = []
    for k, gamma in enumerate(inst.sinr_targets):
        if gamma == 0:
            continue  # no QoS constraint for this user
        hk = inst.channels[rows_glob, k]
        top_w_idx, top_w_coef = [], []
        if slack_for is not None:
            top_w_idx, top_w_coef = [slack_for(k)], [1.0]
        top = row(
            z_idx=[var(i, k) for i in range(len(rows_glob))],
            z_coef=np.sqrt(1.0 + 1.0 / gamma) * hk.conj(),
            w_idx=top_w_idx,
            w_coef=top_w_coef,
        )
        body = [
            row(
                z_idx=[var(i, j) for i in range(len(rows_glob))],
                z_coef=hk.conj(),
            )
            for j in range(inst.K)
        ]
        body.append(row(const=np.sqrt(inst.noise_power[k])))
        blocks.append(Block(SOC_BLOCK, (top, *body)))
    return blocks


def _rrh_power_blocks(inst: CranInstance, active: list, var):
    blocks = []
    at = 0
    for l in active:
        nl = inst.n_antennas[l]
        top = row(const=np.sqrt(inst.p_max[l]))
        body = [
            row(z_idx=[var(at + i, k)], z_coef=[1.0])
            for i in range(nl)
            for k in range(inst.K)
        ]
        blocks.append(Block(SOC_BLOCK, (top, *body)))
        at += nl
    return blocks


def _expand(inst: CranInstance, active: list, z: np.ndarray, K: int) -> np.ndarray:
    """Scatter the active-row solution back into a full N x K beamformer."""
    V = np.zeros((inst.N, K), dtype=complex)
    V[_active_rows(inst, active)] = z.reshape(-1, K, order="C")
    return V


def socp_power_min(
    inst: CranInstance,
    active=None,
    options: SolverOptions | None = None,
) -> BeamformingSolution:
    """Transmit-power minimization over a fixed active RRH set.

    Minimizes sum_l (1/eta_l)||z~_l||^2 subject to SOC SINR constraints
    sqrt(1+1/gamma_k) Re(h_k^H v_k) >= ||(h_k^H V, sigma_k)|| and per-RRH
    power budgets; infeasible targets yield an explicit infeasible result.
    """
    active = sorted(range(inst.L) if active is None else active)
    if not active:
        raise ValueError("active set must be nonempty")
    options = options or _DEFAULT_SOLVER_OPTIONS
    if all(g == 0 for g in inst.sinr_targets) or inst.K == 0:
        V = np.zeros((inst.N, inst.K), dtype=complex)
        return BeamformingSolution(
            FEASIBLE, V, frozenset(active), 0.0,
            network_power(inst, V, active), achieved_sinrs(inst, V),
        )
    na = int(sum(inst.n_antennas[l] for l in active))
    K = inst.K
    nv = na * K

    def var(i: int, k: int) -> int:
        return i * K + k

    # real variable 0 is the epigraph t of ||diag(1/sqrt(eta)) z||, so the
    # optimal transmit power is t^2
    scale = np.empty(na)
    at = 0
    for l in active:
        scale[at : at + inst.n_antennas[l]] = 1.0 / np.sqrt(inst.efficiency[l])
        at += inst.n_antennas[l]
    obj_top = row(w_idx=[0], w_coef=[1.0])
    obj_body = [
        row(z_idx=[var(i, k)], z_coef=[scale[i]]) for i in range(na) for k in range(K)
    ]
    blocks = [Block(SOC_BLOCK, (obj_top, *obj_body))]
    blocks += _sinr_blocks(inst, active, var)
    blocks += _rrh_power_blocks(inst, active, var)

    cprog = ComplexConicProgram(
        n_complex=nv,
        n_real=1,
        obj_z=np.zeros(nv, dtype=complex),
        obj_w=np.ones(1),
        blocks=tuple(blocks),
    )
    emb = embed_complex(cprog)
    sol = admm_solve(emb.program, options)
    if sol.status == PRIMAL_INFEASIBLE:
        V = np.zeros((inst.N, K), dtype=complex)
        return BeamformingSolution(
            INFEASIBLE, V, frozenset(active), 0.0, 0.0, achieved_sinrs(inst, V)
        )
    if sol.status != OPTIMAL:
        raise SolverFailure(f"power minimization ended with status {sol.status}")
    z, _ = emb.recover(sol.x)
    V = _expand(inst, active, z, K)
    if not _check_feasible(inst, V, active):
        raise SolverFailure("solver returned an infeasible beamformer")
    return BeamformingSolution(
        FEASIBLE,
        V,
        frozenset(active),
        transmit_power(inst, V),
        network_power(inst, V, active),
        achieved_sinrs(inst, V),
    )


def _stage1_group_norms(inst: CranInstance, options: SolverOptions) -> np.ndarray | None:
    """Weighted mixed l1/l2 relaxation; returns per-RRH group norms of the
    minimizer, or None when the instance is infeasible."""
    active = list(range(inst.L))
    K, na = inst.K, inst.N
    nv = na * K
    w = gsbf_weights(inst)
    finite_w = np.where(np.isfinite(w), w, 0.0)
    wmax = finite_w.max() if finite_w.size else 1.0
    w = np.where(np.isfinite(w), w, 10.0 * max(wmax, 1.0))
    # normalize: the minimizer is scale-invariant and the solver is not
    w = w / w.max() if w.max() > 0 else np.ones_like(w)

    def var(i: int, k: int) -> int:
        return i * K + k

    # real variable l is the epigraph s_l of ||z~_l||
    blocks = []
    at = 0
    for l in range(inst.L):
        nl = inst.n_antennas[l]
        top = row(w_idx=[l], w_coef=[1.0])
        body = [
            row(z_idx=[var(at + i, k)], z_coef=[1.0])
            for i in range(nl)
            for k in range(K)
        ]
        blocks.append(Block(SOC_BLOCK, (top, *body)))
        at += nl
    # per-RRH budgets reuse the epigraphs: sqrt(P_l) - s_l >= 0
    blocks.append(
        Block(
            NONNEG_BLOCK,
            tuple(
                row(w_idx=[l], w_coef=[-1.0], const=np.sqrt(inst.p_max[l]))
                for l in range(inst.L)
            ),
        )
    )
    blocks += _sinr_blocks(inst, active, var)
    cprog = ComplexConicProgram(
        n_complex=nv,
        n_real=inst.L,
        obj_z=np.zeros(nv, dtype=complex),
        obj_w=w.astype(float),
        blocks=tuple(blocks),
    )
    emb = embed_complex(cprog)
    sol = admm_solve(emb.program, options)
    if sol.status == PRIMAL_INFEASIBLE:
        return None
    if sol.status != OPTIMAL:
        raise SolverFailure(f"stage-1 relaxation ended with status {sol.status}")
    z, _ = emb.recover(sol.x)
    V = _expand(inst, active, z, K)
    return np.array([np.linalg.norm(V[inst.rrh_slice(l)]) for l in range(inst.L)])


def group_sparse_beamforming(
    inst: CranInstance, options: SolverOptions | None = None
) -> BeamformingSolution:
    """Three-stage network-power minimization.

    Stage 1 solves the weighted mixed l1/l2 relaxation; stage 2 orders RRHs by
    ascending group norm; stage 3 greedily tests deactivations in that order,
    keeping each one whose restricted power minimization stays feasible, and
    returns the feasible prefix with the smallest network power.
    """
    options = options or _DEFAULT_SOLVER_OPTIONS
    norms = _stage1_group_norms(inst, options)
    if norms is None:
        V = np.zeros((inst.N, inst.K), dtype=complex)
        return BeamformingSolution(
            INFEASIBLE, V, frozenset(range(inst.L)), 0.0, 0.0, achieved_sinrs(inst, V)
        )
    order = np.lexsort((np.arange(inst.L), norms))
    active = set(range(inst.L))
    best = socp_power_min(inst, active, options)
    if best.status != FEASIBLE:
        return best
    for l in order:
        trial = active - {l}
        if not trial:
            continue
        cand = socp_power_min(inst, trial, options)
        if cand.status == FEASIBLE:
            active = trial
            if cand.network_power < best.network_power:
                best = cand
    return best


def admission_objective_spec(inst: CranInstance) -> SparseObjectiveSpec:
    return SparseObjectiveSpec("admission", np.ones(inst.K), "SOC SINR slacks, z >= 0")


def gsbf_objective_spec(inst: CranInstance) -> SparseObjectiveSpec:
    return SparseObjectiveSpec("gsbf", gsbf_weights(inst), "SOC SINR + per-RRH budgets")


def _restrict_users(inst: CranInstance, users: list) -> CranInstance:
    return replace(
        inst,
        sinr_targets=tuple(inst.sinr_targets[k] for k in users),
        noise_power=tuple(inst.noise_power[k] for k in users),
        channels=inst.channels[:, users],
    )


def user_admission(
    adm: AdmissionInstance, options: SolverOptions | None = None
) -> tuple[frozenset, BeamformingSolution]:
    """l1 slack minimization followed by deflation.

    Solves min sum_i z_i over beamformers and slacks z >= 0 with each SINR
    cone relaxed by z_i; users with z_i below the scale-relative threshold are
    tentatively admitted, then the admitted set is shrunk by removing the
    largest-slack user until the restricted power minimization is feasible.
    """
    inst = adm.cran
    options = options or _DEFAULT_SOLVER_OPTIONS
    active = list(range(inst.L))
    users = list(range(inst.K))
    while users:
        slack = _admission_slacks(_restrict_users(inst, users), options)
        eps_adm = 1e-5 * (1.0 + slack.max())
        if np.all(slack <= eps_adm):
            cand = socp_power_min(_restrict_users(inst, users), active, options)
            if cand.status == FEASIBLE:
                V = np.zeros((inst.N, inst.K), dtype=complex)
                V[:, users] = cand.beamformer
                final = BeamformingSolution(
                    FEASIBLE, V, frozenset(active), cand.transmit_power,
                    network_power(inst, V, active), achieved_sinrs(inst, V),
                )
                return frozenset(users), final
        # drop the worst-slack user (ties toward the larger index) and retry
        drop = int(np.lexsort((np.arange(len(slack)), -slack))[0])
        users.pop(drop)
    V = np.zeros((inst.N, inst.K), dtype=complex)
    final = BeamformingSolution(
        FEASIBLE, V, frozenset(active), 0.0,
        network_power(inst, V, active), achieved_sinrs(inst, V),
    )
    return frozenset(), final


def _admission_slacks(inst: CranInstance, options: SolverOptions) -> np.ndarray:
    """Optimal slacks of min sum_i z_i s.t. each SINR cone relaxed by z_i >= 0
    with every RRH active and per-RRH budgets enforced."""
    K, na = inst.K, inst.N
    nv = na * K
    active = list(range(inst.L))

    def var(i: int, k: int) -> int:
        return i * K + k

    blocks = [
        Block(
            NONNEG_BLOCK,
            tuple(row(w_idx=[k], w_coef=[1.0]) for k in range(K)),
        )
    ]
    blocks += _sinr_blocks(inst, active, var, slack_for=lambda k: k)
    blocks += _rrh_power_blocks(inst, active, var)
    cprog = ComplexConicProgram(
        n_complex=nv,
        n_real=K,
        obj_z=np.zeros(nv, dtype=complex),
        obj_w=np.ones(K),
        blocks=tuple(blocks),
    )
    emb = embed_complex(cprog)
    sol = admm_solve(emb.program, options)
    if sol.status != OPTIMAL:
        raise SolverFailure(f"admission relaxation ended with status {sol.status}")
    _, slack = emb.recover(sol.x)
    return np.maximum(slack, 0.0)
