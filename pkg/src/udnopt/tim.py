"""Side-information modeling and low-rank completion for interference management.

Network connectivity (and optional receiver caches) become an incomplete
matrix with unit diagonal, zeros on interfering entries, and free entries
elsewhere. The smallest rank of a completion equals the number of channel
uses of the induced scheme, so the achievable degrees of freedom is 1/rank.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import manifold as mf

FIXED_ONE = 1
FIXED_ZERO = 0
FREE = -1


@dataclass(frozen=True)
class NetworkTopology:
    """K user pairs, connected interfering links, optional per-receiver caches.

    Indices are 0-based internally; the text file format uses 1-based labels.
    """

    K: int
    links: frozenset  # (i, j) with i != j: transmitter j interferes at receiver i
    caches: dict = field(default_factory=dict)  # receiver -> frozenset of cached messages

    def __post_init__(self):
        for i, j in self.links:
            if i == j:
                raise ValueError("connectivity set must not contain self-pairs")
            if not (0 <= i < self.K and 0 <= j < self.K):
                raise ValueError(f"link ({i}, {j}) outside user range")
        for k, cached in self.caches.items():
            if not 0 <= k < self.K:
                raise ValueError(f"cache receiver {k} outside user range")
            if k in cached:
                raise ValueError("a receiver must not cache its own message")
            for j in cached:
                if not 0 <= j < self.K:
                    raise ValueError(f"cached message {j} outside user range")


@dataclass(frozen=True)
class SideInfoMask:
    """Entry states of the modeling matrix: unit diagonal, zeros, free."""

    K: int
    fixed_zero: frozenset  # off-diagonal (i, j) pairs forced to zero

    def __post_init__(self):
        for i, j in self.fixed_zero:
            if i == j:
                raise ValueError("diagonal entries are fixed to one, not zero")
            if not (0 <= i < self.K and 0 <= j < self.K):
                raise ValueError(f"entry ({i}, {j}) outside the matrix")

    def state(self, i: int, j: int) -> int:
        if i == j:
            return FIXED_ONE
        if (i, j) in self.fixed_zero:
            return FIXED_ZERO
        return FREE

    def state_matrix(self) -> np.ndarray:
        S = np.full((self.K, self.K), FREE, dtype=int)
        np.fill_diagonal(S, FIXED_ONE)
        for i, j in self.fixed_zero:
            S[i, j] = FIXED_ZERO
        return S


@dataclass(frozen=True)
class CompletionResult:
    rank: int
    matrix: np.ndarray
    residual: float  # masked cost value at the returned completion
    success: bool
    restarts_used: int
    heuristic: bool = True  # returned rank is an upper bound, not certified

    @property
    def dof(self) -> Fraction:
        return dof(self.rank)


@dataclass(frozen=True)
class PrecoderDecoderSet:
    decoders: np.ndarray  # r x K, decoder for user i in column i
    precoders: np.ndarray  # r x K
    n: int  # channel uses = rank

    def reconstruct(self) -> np.ndarray:
        return self.decoders.conj().T @ self.precoders


def build_mask(topology: NetworkTopology) -> SideInfoMask:
    """Interference entries are nulled unless the receiver caches the message."""
    zero = set()
    for i, j in topology.links:
        if j not in topology.caches.get(i, frozenset()):
            zero.add((i, j))
    return SideInfoMask(topology.K, frozenset(zero))


def load_topology(text: str) -> NetworkTopology:
    """Parse the topology format: `K`, then `conn i j` lines, then optional
    `cache k j1 j2 ...` lines; user labels are 1-based in the file."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty topology file")
    K = int(lines[0])
    links = set()
    caches: dict = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "conn":
            if len(parts) != 3:
                raise ValueError(f"bad conn line: {ln!r}")
            links.add((int(parts[1]) - 1, int(parts[2]) - 1))
        elif parts[0] == "cache":
            k = int(parts[1]) - 1
            caches[k] = frozenset(int(t) - 1 for t in parts[2:])
        else:
            raise ValueError(f"unknown directive {parts[0]!r}")
    return NetworkTopology(K, frozenset(links), caches)


def dump_topology(topology: NetworkTopology) -> str:
    lines = [str(topology.K)]
    for i, j in sorted(topology.links):
        lines.append(f"conn {i + 1} {j + 1}")
    for k in sorted(topology.caches):
        cached = " ".join(str(j + 1) for j in sorted(topology.caches[k]))
        lines.append(f"cache {k + 1} {cached}")
    return "\n".join(lines) + "\n"


def masked_cost(mask: SideInfoMask) -> mf.SmoothCost:
    """f(M) = sum_i (M_ii - 1)^2 + sum over fixed zeros of M_ij^2."""
    K = mask.K
    di = np.arange(K)
    if mask.fixed_zero:
        zr, zc = map(np.array, zip(*sorted(mask.fixed_zero)))
    else:
        zr = np.empty(0, dtype=int)
        zc = np.empty(0, dtype=int)

    def f(M: np.ndarray) -> float:
        return float(np.sum((M[di, di] - 1.0) ** 2) + np.sum(M[zr, zc] ** 2))

    def grad(M: np.ndarray) -> np.ndarray:
        G = np.zeros((K, K))
        G[di, di] = 2.0 * (M[di, di] - 1.0)
        G[zr, zc] += 2.0 * M[zr, zc]
        return G

    def ehess(H: np.ndarray) -> np.ndarray:
        G = np.zeros((K, K))
        G[di, di] = 2.0 * H[di, di]
        G[zr, zc] += 2.0 * H[zr, zc]
        return G

    return mf.SmoothCost(f=f, grad=grad, shape=(K, K), ehess=ehess)


def masked_target(mask: SideInfoMask) -> mf.MaskedLeastSquares:
    """Same objective as masked_cost, in the alternating-minimization form."""
    K = mask.K
    di = np.arange(K)
    if mask.fixed_zero:
        zr, zc = map(np.array, zip(*sorted(mask.fixed_zero)))
    else:
        zr = np.empty(0, dtype=int)
        zc = np.empty(0, dtype=int)
    rows = np.concatenate([di, zr])
    cols = np.concatenate([di, zc])
    vals = np.concatenate([np.ones(K), np.zeros(len(zr))])
    return mf.MaskedLeastSquares(rows, cols, vals, K, K)


def seed_matrix(mask: SideInfoMask) -> np.ndarray:
    """Mask-completed seed: ones on the diagonal, zeros elsewhere."""
    return np.eye(mask.K)


@dataclass(frozen=True)
class CompletionOptions:
    r_max: int | None = None  # default K
    restarts: int = 10
    eps_feas: float = 1e-6
    solver: str = "rtr"  # rtr | rcg; rtr escapes the seed's saddle far more reliably
    max_iters: int = 300
    tr_max_cg: int = 40
    perturb: float = 1e-2
    seed: int = 0
    # restart early-abort: once `count` restarts finished, stop if the best
    # objective still exceeds `level` (hopeless rank, restarts will not help);
    # restart 0 sits at an exact saddle of the seed, hence counts start at 2
    abort_rules: tuple = ((2, 10.0), (4, 0.5))


def complete_at_rank(mask: SideInfoMask, r: int, opts: CompletionOptions) -> tuple[float, mf.FixedRankPoint]:
    """Best masked-cost value over the configured restarts at fixed rank r.

    Restart 0 starts from the unperturbed truncated-SVD seed; later restarts
    perturb the seed with per-restart RNG streams. Stops early once a restart
    reaches the feasibility threshold.
    """
    cost = masked_cost(mask)
    seed0 = seed_matrix(mask)
    solver = {"rcg": mf.rcg_solve, "rtr": mf.rtr_solve}[opts.solver]
    sopts = mf.SolverOptions(
        max_iters=opts.max_iters,
        grad_tol=1e-10,
        f_target=0.01 * opts.eps_feas,
        tr_max_cg=opts.tr_max_cg,
    )
    best_f = np.inf
    best_pt = None
    for restart in range(max(1, opts.restarts)):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(opts.seed, r, restart)))
        perturb = 0.0 if restart == 0 else opts.perturb
        try:
            X0 = mf.svd_initialization(seed0, r, rng, perturb=perturb)
            trace = solver(cost, X0, sopts)
        except mf.RankDeficiencyError:
            continue
        f = trace.final_objective
        if f < best_f:
            best_f = f
            best_pt = trace.point
        if best_f <= opts.eps_feas:
            break
        if any(restart + 1 >= count and best_f > level for count, level in opts.abort_rules):
            break
    if best_pt is None:  # every restart collapsed; report the seed itself
        X0 = mf.svd_initialization(seed0, r, np.random.default_rng(0), perturb=0.0)
        best_pt, best_f = X0, cost.f(X0.to_dense())
    return best_f, best_pt


def attempt_fixed_rank(mask: SideInfoMask, r: int, opts: CompletionOptions) -> tuple[bool, float]:
    """Feasibility of a completion at rank exactly r: (success, best cost).

    Rank 1 is decided exactly (see min_rank_complete); other ranks run the
    restarted manifold search.
    """
    if r < 1 or r > mask.K:
        raise ValueError("rank outside 1..K")
    if r == 1:
        feasible = not mask.fixed_zero
        return feasible, 0.0 if feasible else float(len(mask.fixed_zero))
    f, _ = complete_at_rank(mask, r, opts)
    return f <= opts.eps_feas, f


def min_rank_complete(mask: SideInfoMask, opts: CompletionOptions | None = None) -> CompletionResult:
    """Incremental rank search for the smallest feasible completion rank.

    Rank 1 is decided exactly: a rank-1 completion M = a b' needs
    a_i b_i = 1 for all i and a_i b_j = 0 on fixed zeros, which is impossible
    once any entry is fixed to zero; with no fixed zeros the all-ones matrix
    completes the mask. Ranks >= 2 are searched heuristically with restarts,
    so the returned rank is an upper bound on the true minimum.
    """
    opts = opts or CompletionOptions()
    K = mask.K
    r_max = opts.r_max if opts.r_max is not None else K

    if not mask.fixed_zero:
        ones = np.ones((K, K))
        return CompletionResult(1, ones, 0.0, True, 0, heuristic=False)

    used = 0
    best_f = np.inf
    best_M = seed_matrix(mask)
    best_r = min(2, r_max)
    for r in range(2, r_max + 1):
        f, pt = complete_at_rank(mask, r, opts)
        used += 1
        if f < best_f:
            best_f, best_M, best_r = f, pt.to_dense(), r
        if f <= opts.eps_feas:
            return CompletionResult(r, pt.to_dense(), f, True, used)
    return CompletionResult(best_r, best_M, best_f, False, used)


@dataclass(frozen=True)
class NuclearNormOptions:
    rho: float = 1.0
    max_iters: int = 2000
    tol: float = 1e-9
    rank_threshold: float = 1e-6  # singular values > threshold * sigma_max count
    eps_feas: float = 1e-6


def nuclear_norm_complete(mask: SideInfoMask, opts: NuclearNormOptions | None = None) -> CompletionResult:
    """Nuclear-norm surrogate completion by splitting iterations.

    Alternates singular-value soft-thresholding with re-imposition of the
    fixed entries (ADMM on ||M||_* + indicator of the mask constraints).
    """
    opts = opts or NuclearNormOptions()
    K = mask.K
    state = mask.state_matrix()
    fixed = state != FREE
    fixed_vals = np.where(state == FIXED_ONE, 1.0, 0.0)

    def impose(M: np.ndarray) -> np.ndarray:
        out = M.copy()
        out[fixed] = fixed_vals[fixed]
        return out

    Z = seed_matrix(mask)
    U_dual = np.zeros((K, K))
    M = Z.copy()
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        # M-update: prox of the nuclear norm at Z - U_dual
        W = Z - U_dual
        uu, ss, vvt = np.linalg.svd(W, full_matrices=False)
        ss = np.maximum(ss - 1.0 / opts.rho, 0.0)
        M = (uu * ss) @ vvt
        Z_new = impose(M + U_dual)
        U_dual = U_dual + M - Z_new
        delta = np.linalg.norm(Z_new - Z)
        Z = Z_new
        if delta <= opts.tol and np.linalg.norm(M - Z) <= opts.tol:
            converged = True
            break

    completed = impose(M)
    sv = np.linalg.svd(completed, compute_uv=False)
    rank = int(np.sum(sv > opts.rank_threshold * max(sv[0], np.finfo(float).tiny)))
    rank = max(rank, 1)
    residual = masked_cost(mask).f(M)
    return CompletionResult(
        rank, completed, residual, converged and residual <= opts.eps_feas, it
    )


def extract_precoders(M: np.ndarray, r: int, eps_feas: float = 1e-6) -> PrecoderDecoderSet:
    """Factor M = A^H B with r-row factors via the truncated SVD."""
    M = np.asarray(M)
    uu, ss, vvt = np.linalg.svd(M, full_matrices=False)
    if len(ss) > r and ss[r] > 1e-9 * max(ss[0], np.finfo(float).tiny):
        raise ValueError(f"matrix has numerical rank above {r}")
    root = np.sqrt(ss[:r])
    A = (uu[:, :r] * root).conj().T  # r x K
    B = (root[:, None]) * vvt[:r, :]  # r x K
    recon = A.conj().T @ B
    if np.max(np.abs(recon - M)) > max(np.sqrt(eps_feas), 1e-8) * (1 + np.max(np.abs(M))):
        raise ValueError("factorization failed to reproduce the matrix")
    return PrecoderDecoderSet(A, B, r)


def dof(rank: int) -> Fraction:
    """Achievable degrees of freedom: one over the channel-use count."""
    if rank < 1:
        raise ValueError("rank must be a positive integer")
    return Fraction(1, rank)
