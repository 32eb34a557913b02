"""Deterministic experiment drivers behind the CLI.

Every Monte-Carlo trial derives its RNG stream from (base seed, cell
coordinates, trial index), so cells are order-independent and results are
bitwise-identical regardless of the parallelism degree: workers return
results keyed by submission order and assembly is cell-major, trial-minor.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import activity, beamforming, manifold, tim


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    trials: int = 20
    jobs: int = 1
    # sparse-pt / nmse dimensions
    n: int = 100
    m: int = 2
    k_min: int = 0
    k_max: int = 20
    l_min: int = 4
    l_max: int | None = None  # default n
    l_step: int = 4
    k: int = 20  # active devices (nmse) / network size (tim-pt)
    noise_sd: float = 0.1
    lambda_scale: float = 1.0
    # tim-pt
    rank_max: int = 10
    s_step: int = 58
    restarts: int = 10
    # converge
    p: int = 100
    q: int = 100
    rank: int = 5
    omega: int = 400
    solvers: tuple = ("rcg", "rtr", "altmin")
    max_iters: int = 500
    f_tol: float = 1e-6
    # gsbf / admission generators
    l_rrh: int = 4
    k_users: int = 3
    sinr_target: float = 1.0
    p_max: float = 1.0
    instance: str | None = None

    def validated(self) -> "ExperimentConfig":
        kinds = ("sparse-pt", "nmse", "tim-pt", "converge", "gsbf", "admission")
        if self.kind not in kinds:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1 or self.jobs < 1:
            raise ConfigError("trials and jobs must be >= 1")
        if self.kind == "sparse-pt":
            if not (0 <= self.k_min <= self.k_max <= self.n):
                raise ConfigError("need 0 <= k_min <= k_max <= n")
            if self.l_step < 1 or self.l_min < 1:
                raise ConfigError("l_min and l_step must be >= 1")
        if self.kind == "nmse" and not (0 <= self.k <= self.n):
            raise ConfigError("need 0 <= k <= n")
        if self.kind == "tim-pt":
            if not (1 <= self.rank_max <= self.k):
                raise ConfigError("need 1 <= rank_max <= k")
            if self.s_step < 1 or self.restarts < 1:
                raise ConfigError("s_step and restarts must be >= 1")
        if self.kind == "converge":
            bad = set(self.solvers) - {"rcg", "rtr", "altmin"}
            if bad or not self.solvers:
                raise ConfigError(f"unknown solvers {sorted(bad)}")
            if not (1 <= self.rank <= min(self.p, self.q)):
                raise ConfigError("need 1 <= rank <= min(p, q)")
            if self.omega < 0 or self.omega > self.p * self.q - min(self.p, self.q):
                raise ConfigError("omega out of range")
        if self.kind in ("gsbf", "admission") and self.instance is None:
            if self.l_rrh < 1 or self.k_users < 0:
                raise ConfigError("need l_rrh >= 1 and k_users >= 0")
        return self


@dataclass
class Table:
    """Small CSV table with a structured-text metadata sidecar."""

    header: tuple
    rows: list
    metadata: dict

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        for r in self.rows:
            lines.append(",".join(_fmt(v) for v in r))
        return "\n".join(lines) + "\n"

    def metadata_text(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self.metadata.items())


@dataclass
class HeatmapGrid:
    axis1_name: str
    axis2_name: str
    axis1: tuple
    axis2: tuple
    successes: np.ndarray  # len(axis1) x len(axis2)
    trials: int
    metadata: dict

    def __post_init__(self):
        if self.successes.min() < 0 or self.successes.max() > self.trials:
            raise ValueError("success counts out of range")

    def probability(self) -> np.ndarray:
        return self.successes / self.trials

    def to_csv(self) -> str:
        lines = ["axis1,axis2,successes,trials,probability"]
        for i, a1 in enumerate(self.axis1):
            for j, a2 in enumerate(self.axis2):
                s = int(self.successes[i, j])
                lines.append(f"{a1},{a2},{s},{self.trials},{_fmt(s / self.trials)}")
        return "\n".join(lines) + "\n"

    def metadata_text(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self.metadata.items())


def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _trial_seed(*parts) -> int:
    ss = np.random.SeedSequence(entropy=tuple(int(x) for x in parts))
    return int(ss.generate_state(1)[0])


def _map_ordered(fn, args: list, jobs: int) -> list:
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args, chunksize=1))


def _base_metadata(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": cfg.kind,
        "base_seed": cfg.seed,
        "trials_per_cell": cfg.trials,
        "seed_derivation": "SeedSequence(entropy=(base_seed, cell coordinates, trial))",
    }


# --------------------------------------------------------------------------
# sparse recovery phase transition


def _sparse_cell(args) -> int:
    base, n, m, K, L, trials = args
    wins = 0
    for t in range(trials):
        seed = _trial_seed(base, K, L, t)
        inst = activity.generate_instance(n, m, K, L, 0.0, seed)
        est = activity.basis_pursuit_group(inst.observations, inst.pilots)
        if K == 0:
            wins += int(not np.any(est.theta_hat))
            continue
        supp = activity.detect_support(est.theta_hat, "top-k", k=K)
        err = np.linalg.norm(est.theta_hat - inst.theta) / np.linalg.norm(inst.theta)
        wins += int(supp == inst.support and err <= 1e-5)
    return wins


def run_sparse_phase_transition(cfg: ExperimentConfig) -> HeatmapGrid:
    """Empirical success probability of noiseless group basis pursuit over a
    (sparsity K, pilot length L) grid."""
    cfg = cfg.validated()
    ks = tuple(range(cfg.k_min, cfg.k_max + 1))
    l_max = cfg.n if cfg.l_max is None else cfg.l_max
    ls = tuple(range(cfg.l_min, l_max + 1, cfg.l_step))
    if not ls:
        raise ConfigError("empty L range")
    cells = [(cfg.seed, cfg.n, cfg.m, K, L, cfg.trials) for K in ks for L in ls]
    wins = _map_ordered(_sparse_cell, cells, cfg.jobs)
    successes = np.asarray(wins, dtype=int).reshape(len(ks), len(ls))
    meta = _base_metadata(cfg) | {
        "axis1": "K (active devices)",
        "axis2": "L (pilot length)",
        "N": cfg.n,
        "M": cfg.m,
        "criterion": "exact top-K support recovery and relative error <= 1e-5",
        "solver": "group basis pursuit (conic ADMM) with least-squares polish",
    }
    return HeatmapGrid("K", "L", ks, ls, successes, cfg.trials, meta)


# --------------------------------------------------------------------------
# NMSE curve


def _nmse_cell(args) -> list:
    base, n, m, K, L, noise_sd, lam_scale, trials = args
    out = []
    for t in range(trials):
        seed = _trial_seed(base, K, L, t)
        inst = activity.generate_instance(n, m, K, L, noise_sd, seed)
        lam = activity.default_lambda(noise_sd, m, n, lam_scale)
        est = activity.group_lasso_solve(inst.observations, inst.pilots, lam)
        out.append(activity.nmse(est.theta_hat, inst.theta))
    return out


def run_nmse_curve(cfg: ExperimentConfig) -> Table:
    """Mean NMSE (with standard error) of the group-lasso estimate versus
    pilot length."""
    cfg = cfg.validated()
    l_max = cfg.n if cfg.l_max is None else cfg.l_max
    ls = tuple(range(cfg.l_min, l_max + 1, cfg.l_step))
    if not ls:
        raise ConfigError("empty L range")
    cells = [
        (cfg.seed, cfg.n, cfg.m, cfg.k, L, cfg.noise_sd, cfg.lambda_scale, cfg.trials)
        for L in ls
    ]
    results = _map_ordered(_nmse_cell, cells, cfg.jobs)
    rows = []
    for L, vals in zip(ls, results):
        arr = np.asarray(vals)
        stderr = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
        rows.append((L, float(arr.mean()), stderr, len(arr)))
    meta = _base_metadata(cfg) | {
        "N": cfg.n,
        "M": cfg.m,
        "K": cfg.k,
        "noise_sd": cfg.noise_sd,
        "lambda_rule": f"{cfg.lambda_scale} * noise_sd * sqrt(M log N)",
        "estimator": "group lasso (accelerated proximal gradient)",
    }
    return Table(("L", "mean_nmse", "stderr_nmse", "trials"), rows, meta)


# --------------------------------------------------------------------------
# TIM phase transition


def _tim_cell(args) -> int:
    base, K, r, s, trials, restarts = args
    offdiag = [(i, j) for i in range(K) for j in range(K) if i != j]
    wins = 0
    for t in range(trials):
        ss = np.random.SeedSequence(entropy=(int(base), int(r), int(s), int(t)))
        sample_ss, solve_ss = ss.spawn(2)
        rng = np.random.default_rng(sample_ss)
        picks = rng.choice(len(offdiag), size=s, replace=False) if s else []
        mask = tim.SideInfoMask(K, frozenset(offdiag[i] for i in picks))
        opts = tim.CompletionOptions(
            restarts=restarts,
            max_iters=100,
            tr_max_cg=25,
            seed=int(solve_ss.generate_state(1)[0]),
        )
        ok, _ = tim.attempt_fixed_rank(mask, r, opts)
        wins += int(ok)
    return wins


def run_tim_phase_transition(cfg: ExperimentConfig) -> HeatmapGrid:
    """Success probability of fixed-rank completion of random side-information
    masks over a (rank, |S|) grid."""
    cfg = cfg.validated()
    K = cfg.k
    ranks = tuple(range(1, cfg.rank_max + 1))
    s_max = K * (K - 1)
    svals = tuple(range(0, s_max + 1, cfg.s_step))
    cells = [(cfg.seed, K, r, s, cfg.trials, cfg.restarts) for r in ranks for s in svals]
    wins = _map_ordered(_tim_cell, cells, cfg.jobs)
    successes = np.asarray(wins, dtype=int).reshape(len(ranks), len(svals))
    meta = _base_metadata(cfg) | {
        "axis1": "rank r",
        "axis2": "|S| (interference constraints)",
        "K": K,
        "restarts": cfg.restarts,
        "criterion": "best masked cost <= 1e-6 over restarts (rank 1 decided exactly)",
        "solver": "Riemannian trust region on the fixed-rank manifold",
    }
    return HeatmapGrid("r", "S", ranks, svals, successes, cfg.trials, meta)


# --------------------------------------------------------------------------
# convergence comparison


def _converge_instance(cfg: ExperimentConfig, seed_idx: int):
    """Masked objective sum_i (M_ii - 1)^2 + sum_Omega M_ij^2 with Omega
    uniform over off-diagonal positions, plus the shared initialization."""
    ss = np.random.SeedSequence(entropy=(cfg.seed, cfg.p, cfg.q, cfg.rank, seed_idx))
    rng = np.random.default_rng(ss)
    d = min(cfg.p, cfg.q)
    offdiag = [(i, j) for i in range(cfg.p) for j in range(cfg.q) if i != j]
    picks = rng.choice(len(offdiag), size=cfg.omega, replace=False)
    zr = np.array([offdiag[i][0] for i in picks], dtype=int)
    zc = np.array([offdiag[i][1] for i in picks], dtype=int)
    rows = np.concatenate([np.arange(d), zr])
    cols = np.concatenate([np.arange(d), zc])
    vals = np.concatenate([np.ones(d), np.zeros(cfg.omega)])
    spec = manifold.MaskedLeastSquares(rows, cols, vals, cfg.p, cfg.q)
    seed_mat = np.zeros((cfg.p, cfg.q))
    seed_mat[np.arange(d), np.arange(d)] = 1.0
    X0 = manifold.svd_initialization(seed_mat, cfg.rank, rng, perturb=1e-1)
    return spec, X0


def _run_one_solver(solver, spec, X0, cfg: ExperimentConfig) -> manifold.SolveTrace:
    cost = manifold.masked_ls_cost(spec)
    opts = manifold.SolverOptions(max_iters=cfg.max_iters, f_target=0.1 * cfg.f_tol)
    if solver == "rcg":
        return manifold.rcg_solve(cost, X0, opts)
    if solver == "rtr":
        return manifold.rtr_solve(cost, X0, opts)
    return manifold.altmin_solve(spec, cfg.rank, X0, opts)


def run_convergence_comparison(cfg: ExperimentConfig):
    """Runs the selected solvers from a shared initialization on each seed.

    Returns (summary Table, traces) with traces[solver] the per-seed
    SolveTrace list.
    """
    cfg = cfg.validated()
    rows = []
    traces: dict = {s: [] for s in cfg.solvers}
    for seed_idx in range(cfg.trials):
        spec, X0 = _converge_instance(cfg, seed_idx)
        for solver in cfg.solvers:
            tr = _run_one_solver(solver, spec, X0, cfg)
            traces[solver].append(tr)
            hit = tr.iterations_to(cfg.f_tol)
            rows.append(
                (
                    seed_idx,
                    solver,
                    -1 if hit is None else hit,
                    tr.final_objective,
                    tr.records[-1][4] if tr.records else 0.0,
                )
            )
    meta = _base_metadata(cfg) | {
        "p": cfg.p,
        "q": cfg.q,
        "rank": cfg.rank,
        "omega": cfg.omega,
        "objective": "sum_i (M_ii - 1)^2 + sum_Omega M_ij^2",
        "f_tol": cfg.f_tol,
        "solvers": " ".join(cfg.solvers),
        "iterations_to_tol_note": "-1 means the tolerance was not reached",
    }
    table = Table(
        ("seed", "solver", "iterations_to_tol", "final_objective", "elapsed_seconds"),
        rows,
        meta,
    )
    return table, traces


# --------------------------------------------------------------------------
# beamforming demos


def _demo_instance(cfg: ExperimentConfig) -> beamforming.CranInstance:
    if cfg.instance is not None:
        with open(cfg.instance) as fh:
            return beamforming.load_instance(fh.read())
    return beamforming.random_instance(
        cfg.l_rrh,
        cfg.k_users,
        seed=cfg.seed,
        sinr_target=cfg.sinr_target,
        p_max=cfg.p_max,
    )


def run_gsbf_demo(cfg: ExperimentConfig) -> Table:
    """Group-sparse beamforming on one instance, with the all-active baseline
    and (for L <= 4) the exhaustive active-set oracle."""
    cfg = cfg.validated()
    inst = _demo_instance(cfg)
    sol = beamforming.group_sparse_beamforming(inst)
    meta = _base_metadata(cfg) | {"L": inst.L, "K": inst.K}
    rows = [("status", sol.status)]
    if sol.status != beamforming.FEASIBLE:
        return Table(("field", "value"), rows, meta)
    baseline = beamforming.socp_power_min(inst)
    rows += [
        ("active_set", " ".join(map(str, sorted(sol.active)))),
        ("network_power", sol.network_power),
        ("transmit_power", sol.transmit_power),
        ("all_active_network_power", baseline.network_power),
    ]
    if inst.L <= 4:
        best = None
        for rsz in range(1, inst.L + 1):
            for sub in itertools.combinations(range(inst.L), rsz):
                cand = beamforming.socp_power_min(inst, set(sub))
                if cand.status == beamforming.FEASIBLE and (
                    best is None or cand.network_power < best
                ):
                    best = cand.network_power
        rows.append(("oracle_network_power", best))
        rows.append(("oracle_gap", (sol.network_power - best) / best))
    return Table(("field", "value"), rows, meta)


def run_admission_demo(cfg: ExperimentConfig) -> Table:
    """User admission via l1 slack minimization with deflation."""
    cfg = cfg.validated()
    inst = _demo_instance(cfg)
    admitted, sol = beamforming.user_admission(beamforming.AdmissionInstance(inst))
    meta = _base_metadata(cfg) | {"L": inst.L, "K": inst.K}
    rows = [
        ("admitted_users", " ".join(map(str, sorted(admitted)))),
        ("admitted_count", len(admitted)),
        ("total_users", inst.K),
        ("transmit_power", sol.transmit_power),
    ]
    return Table(("field", "value"), rows, meta)
