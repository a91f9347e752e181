"""End-to-end matching pipeline and its baselines.

Each epoch solves every modality pair's transport problem (warm-started from
the previous epoch), couples the resulting distance grid with an entropic
transport step over modalities, and takes one multiplicative gradient step on
the modality marginals. The final node-level plan is the coupling-weighted sum
of the per-pair plans.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .errors import InternalConsistencyError, NumericInstabilityError
from .graphs import Graph
from .gw import (
    GwConfig,
    GwMatrix,
    TransportPlan,
    _default_threads,
    gw_cost,
    gw_distance_matrix,
    solve_gw,
    uniform_marginal,
)
from .relational import RelationalSet, build_relational_set
from .upper import (
    ModalityCoupling,
    entropic_wasserstein,
    marginal_gradient,
    update_marginals,
)

__all__ = [
    "DhotConfig",
    "MatchResult",
    "aggregate",
    "match",
    "single_modal_baseline",
    "linear_fusion_baseline",
    "result_to_dict",
    "result_to_json",
]

IDENTITY_TOL = 1e-8


@dataclass
class DhotConfig:
    """All pipeline knobs, JSON-round-trippable.

    ``k_modalities`` counts the base relational matrices; ``highpass`` appends
    one more. ``gamma`` is the marginal step size (0 freezes the marginals at
    uniform) and ``kl_weight`` scales the pull toward uniform marginals.
    ``seed`` is echoed into reports and drives any randomized harness around
    the pipeline; the pipeline itself is deterministic.
    """

    k_modalities: int = 3
    epochs: int = 10
    lambda_low: float = 0.01
    outer_iters: int = 20
    inner_iters: int = 20
    warm_start: bool = True
    lambda_up: float = 0.05
    sinkhorn_iters: int = 100
    gamma: float = 1.0
    kl_weight: float = 1.0
    highpass: bool = False
    normalize_relational: bool = True
    seed_from_fusion: bool = False
    early_stop: bool = False
    thread_count: int = field(default_factory=_default_threads)
    seed: int = 0

    def __post_init__(self) -> None:
        counts = (
            self.k_modalities,
            self.epochs,
            self.outer_iters,
            self.inner_iters,
            self.sinkhorn_iters,
            self.thread_count,
        )
        if min(counts) < 1:
            raise ValueError("all iteration/modality counts must be >= 1")
        if self.lambda_low <= 0.0 or self.lambda_up <= 0.0:
            raise ValueError("regularization weights must be > 0")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        if self.kl_weight < 0.0:
            raise ValueError("kl_weight must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DhotConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "DhotConfig":
        return cls.from_dict(json.loads(text))

    def gw_config(self) -> GwConfig:
        return GwConfig(
            lambda_low=self.lambda_low,
            outer_iters=self.outer_iters,
            inner_iters=self.inner_iters,
            warm_start=self.warm_start,
            thread_count=self.thread_count,
            early_stop=self.early_stop,
        )


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Everything one matching run produces.

    ``epoch_traces`` records the modality-level transport cost per epoch and
    ``marginal_history`` the modality marginals entering each epoch plus the
    final updated pair, so marginal drift can be inspected after the fact.
    """

    final_plan: TransportPlan
    coupling: ModalityCoupling
    gw_matrix: GwMatrix
    epoch_traces: tuple[float, ...]
    marginal_history: tuple[tuple[np.ndarray, np.ndarray], ...]

    @property
    def hot_objective(self) -> float:
        return self.epoch_traces[-1]


def aggregate(
    plans: tuple[tuple[TransportPlan, ...], ...],
    coupling: ModalityCoupling,
) -> TransportPlan:
    """Coupling-weighted sum of the per-pair plans, T = sum theta[p,q] T^(p,q)."""
    k = coupling.theta.shape[0]
    if len(plans) != k or any(len(row) != coupling.theta.shape[1] for row in plans):
        raise ValueError("plan grid shape must match the coupling")
    total = float(coupling.theta.sum())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"coupling weights sum to {total}, expected 1")
    ref = plans[0][0]
    for row in plans:
        for plan in row:
            if plan.matrix.shape != ref.matrix.shape:
                raise ValueError("all plans must share one shape")
            if (
                np.abs(plan.mu_s - ref.mu_s).max() > 1e-6
                or np.abs(plan.mu_t - ref.mu_t).max() > 1e-6
            ):
                raise ValueError("plans disagree on their marginals")
    matrix = np.zeros_like(ref.matrix)
    for p, row in enumerate(plans):
        for q, plan in enumerate(row):
            matrix += coupling.theta[p, q] * plan.matrix
    return TransportPlan(matrix, ref.mu_s, ref.mu_t)


def _fused_matrices(set_s: RelationalSet, set_t: RelationalSet) -> tuple[np.ndarray, np.ndarray]:
    fused_s = np.sum(np.stack(set_s.matrices), axis=0)
    fused_t = np.sum(np.stack(set_t.matrices), axis=0)
    return fused_s, fused_t


def _constant_plan_grid(plan: TransportPlan, k: int) -> tuple[tuple[TransportPlan, ...], ...]:
    return tuple(tuple(plan for _ in range(k)) for _ in range(k))


def match(gs: Graph, gt: Graph, cfg: DhotConfig | None = None) -> MatchResult:
    """Match the nodes of two attributed graphs.

    When the source graph is larger than the target the roles are swapped
    internally and every returned object is transposed back, so callers always
    receive a |Vs| x |Vt| plan. Numeric failures surface as
    NumericInstabilityError tagged with epoch, modality pair, and iteration.
    """
    cfg = cfg if cfg is not None else DhotConfig()
    if gs.node_count > gt.node_count:
        return _transpose_result(match(gt, gs, cfg))
    set_s = build_relational_set(
        gs, cfg.k_modalities, highpass=cfg.highpass, normalize=cfg.normalize_relational
    )
    set_t = build_relational_set(
        gt, cfg.k_modalities, highpass=cfg.highpass, normalize=cfg.normalize_relational
    )
    k = set_s.k
    mu_s = uniform_marginal(gs.node_count)
    mu_t = uniform_marginal(gt.node_count)
    nu_s = np.full(k, 1.0 / k)
    nu_t = np.full(k, 1.0 / k)
    gw_cfg = cfg.gw_config()

    warm = None
    if cfg.seed_from_fusion:
        fused_s, fused_t = _fused_matrices(set_s, set_t)
        seed_run = solve_gw(
            fused_s,
            fused_t,
            mu_s,
            mu_t,
            lambda_low=cfg.lambda_low,
            outer_iters=cfg.outer_iters,
            inner_iters=cfg.inner_iters,
            early_stop=cfg.early_stop,
        )
        warm = _constant_plan_grid(seed_run.plan, k)

    traces: list[float] = []
    history: list[tuple[np.ndarray, np.ndarray]] = []
    gwm: GwMatrix | None = None
    coupling: ModalityCoupling | None = None
    for epoch in range(cfg.epochs):
        try:
            gwm = gw_distance_matrix(
                set_s, set_t, mu_s, mu_t, gw_cfg, warm_plans=warm if cfg.warm_start else None
            )
        except NumericInstabilityError as err:
            err.epoch = epoch + 1
            raise
        coupling = entropic_wasserstein(
            gwm.distances, nu_s, nu_t, lambda_up=cfg.lambda_up, iters=cfg.sinkhorn_iters
        )
        traces.append(coupling.entropic_cost)
        history.append((np.array(nu_s), np.array(nu_t)))
        if cfg.gamma > 0.0:
            grads = marginal_gradient(
                coupling.scaling_a,
                coupling.scaling_b,
                cfg.lambda_up,
                nu_s,
                nu_t,
                kl_weight=cfg.kl_weight,
            )
            nu_s, nu_t = update_marginals(nu_s, nu_t, grads, cfg.gamma)
        warm = gwm.plans
    history.append((np.array(nu_s), np.array(nu_t)))
    final = aggregate(gwm.plans, coupling)
    return MatchResult(final, coupling, gwm, tuple(traces), tuple(history))


def _transpose_result(res: MatchResult) -> MatchResult:
    k = res.gw_matrix.k
    plans = tuple(
        tuple(res.gw_matrix.plans[q][p].transpose() for q in range(k)) for p in range(k)
    )
    gwm = GwMatrix(res.gw_matrix.distances.T.copy(), plans)
    coupling = ModalityCoupling(
        theta=res.coupling.theta.T.copy(),
        nu_s=res.coupling.nu_t,
        nu_t=res.coupling.nu_s,
        entropic_cost=res.coupling.entropic_cost,
        regularized_cost=res.coupling.regularized_cost,
        scaling_a=res.coupling.scaling_b,
        scaling_b=res.coupling.scaling_a,
    )
    history = tuple((nu_t, nu_s) for nu_s, nu_t in res.marginal_history)
    return MatchResult(
        res.final_plan.transpose(), coupling, gwm, res.epoch_traces, history
    )


def single_modal_baseline(
    gs: Graph,
    gt: Graph,
    cfg: DhotConfig | None = None,
    *,
    diag_only: bool = False,
) -> tuple[tuple[int, int], MatchResult]:
    """Pick the single best modality pair by its transport distance.

    Solves the full pair grid once and returns the 1-based (p, q) of the
    smallest distance together with that pair's plan as the final answer.
    ``diag_only`` restricts the choice to matched modalities p = q, which is
    classic one-modality matching.
    """
    cfg = cfg if cfg is not None else DhotConfig()
    if gs.node_count > gt.node_count:
        (p, q), res = single_modal_baseline(gt, gs, cfg, diag_only=diag_only)
        return (q, p), _transpose_result(res)
    set_s = build_relational_set(
        gs, cfg.k_modalities, highpass=cfg.highpass, normalize=cfg.normalize_relational
    )
    set_t = build_relational_set(
        gt, cfg.k_modalities, highpass=cfg.highpass, normalize=cfg.normalize_relational
    )
    mu_s = uniform_marginal(gs.node_count)
    mu_t = uniform_marginal(gt.node_count)
    gwm = gw_distance_matrix(set_s, set_t, mu_s, mu_t, cfg.gw_config())
    k = gwm.k
    masked = np.array(gwm.distances)
    if diag_only:
        off = ~np.eye(k, dtype=bool)
        masked[off] = np.inf
    p, q = np.unravel_index(int(np.argmin(masked)), masked.shape)
    best = float(gwm.distances[p, q])
    nu_s = np.zeros(k)
    nu_t = np.zeros(k)
    nu_s[p] = 1.0
    nu_t[q] = 1.0
    theta = np.outer(nu_s, nu_t)
    coupling = ModalityCoupling(
        theta=theta,
        nu_s=nu_s,
        nu_t=nu_t,
        entropic_cost=best,
        regularized_cost=best,
        scaling_a=np.ones(k),
        scaling_b=np.ones(k),
    )
    res = MatchResult(
        final_plan=gwm.plans[p][q],
        coupling=coupling,
        gw_matrix=gwm,
        epoch_traces=(best,),
        marginal_history=((nu_s, nu_t),),
    )
    return (int(p) + 1, int(q) + 1), res


def linear_fusion_baseline(
    gs: Graph, gt: Graph, cfg: DhotConfig | None = None
) -> tuple[float, MatchResult]:
    """Solve one transport problem on the entrywise sums of the relational sets.

    Returns the fused distance and a result whose grid entry (p, q) holds the
    pairwise objective of the shared fused plan on modalities (p, q). Before
    returning, verifies the algebraic decomposition tying the sum of those
    per-pair objectives to the fused objective: the bilinear cross terms match
    exactly, and the squared terms differ by the explicit spread penalty
    mu^T (K sum_k D_k o D_k - (sum_k D_k) o (sum_k D_k)) mu
    on each side. A violation beyond 1e-8 raises InternalConsistencyError.
    """
    cfg = cfg if cfg is not None else DhotConfig()
    if gs.node_count > gt.node_count:
        dist, res = linear_fusion_baseline(gt, gs, cfg)
        return dist, _transpose_result(res)
    set_s = build_relational_set(
        gs, cfg.k_modalities, highpass=cfg.highpass, normalize=cfg.normalize_relational
    )
    set_t = build_relational_set(
        gt, cfg.k_modalities, highpass=cfg.highpass, normalize=cfg.normalize_relational
    )
    k = set_s.k
    mu_s = uniform_marginal(gs.node_count)
    mu_t = uniform_marginal(gt.node_count)
    fused_s, fused_t = _fused_matrices(set_s, set_t)
    run = solve_gw(
        fused_s,
        fused_t,
        mu_s,
        mu_t,
        lambda_low=cfg.lambda_low,
        outer_iters=cfg.outer_iters,
        inner_iters=cfg.inner_iters,
        early_stop=cfg.early_stop,
    )
    t_star = run.plan
    pair_objectives = np.zeros((k, k))
    for p in range(k):
        for q in range(k):
            cost = gw_cost(set_s.matrices[p], set_t.matrices[q], t_star)
            pair_objectives[p, q] = float(np.sum(cost * t_star.matrix))
    _check_fusion_identity(set_s, set_t, t_star, pair_objectives, run.distance)
    nu = np.full(k, 1.0 / k)
    theta = np.full((k, k), 1.0 / (k * k))
    coupling = ModalityCoupling(
        theta=theta,
        nu_s=nu,
        nu_t=np.array(nu),
        entropic_cost=float(np.sum(theta * pair_objectives)),
        regularized_cost=float(np.sum(theta * pair_objectives)),
        scaling_a=np.ones(k),
        scaling_b=np.ones(k),
    )
    res = MatchResult(
        final_plan=t_star,
        coupling=coupling,
        gw_matrix=GwMatrix(pair_objectives, _constant_plan_grid(t_star, k)),
        epoch_traces=(float(run.distance),),
        marginal_history=((nu, np.array(nu)),),
    )
    return float(run.distance), res


def _spread_penalty(mats: tuple[np.ndarray, ...], left: np.ndarray, right: np.ndarray) -> float:
    """left^T (K sum_k D_k o D_k - (sum_k D_k) o (sum_k D_k)) right, always >= 0.

    ``left`` is the plan's realized marginal on that side (the vector the
    squared cost terms actually contract against) and ``right`` the prescribed
    one baked into the pointwise cost.
    """
    k = len(mats)
    sq_sum = np.sum(np.stack([m * m for m in mats]), axis=0)
    fused = np.sum(np.stack(mats), axis=0)
    gap = k * sq_sum - fused * fused
    return float(left @ gap @ right)


def _check_fusion_identity(
    set_s: RelationalSet,
    set_t: RelationalSet,
    t_star: TransportPlan,
    pair_objectives: np.ndarray,
    fused_distance: float,
) -> None:
    fused_s, fused_t = _fused_matrices(set_s, set_t)
    # cross terms are bilinear, so summing them over pairs equals the fused term
    cross_sum = 0.0
    for p in range(len(set_s.matrices)):
        for q in range(len(set_t.matrices)):
            cross_sum += float(
                np.sum((set_s.matrices[p] @ t_star.matrix @ set_t.matrices[q].T) * t_star.matrix)
            )
    cross_fused = float(np.sum((fused_s @ t_star.matrix @ fused_t.T) * t_star.matrix))
    scale = max(1.0, abs(cross_fused))
    if abs(cross_sum - cross_fused) > IDENTITY_TOL * scale:
        raise InternalConsistencyError(
            f"bilinear cross terms disagree: {cross_sum!r} vs {cross_fused!r}"
        )
    row_sums = t_star.matrix.sum(axis=1)
    col_sums = t_star.matrix.sum(axis=0)
    expected = (
        fused_distance
        + _spread_penalty(set_s.matrices, row_sums, t_star.mu_s)
        + _spread_penalty(set_t.matrices, col_sums, t_star.mu_t)
    )
    got = float(pair_objectives.sum())
    scale = max(1.0, abs(expected))
    if abs(got - expected) > IDENTITY_TOL * scale:
        raise InternalConsistencyError(
            f"pairwise objective sum {got!r} does not decompose into fused objective "
            f"plus spread penalties {expected!r}"
        )


def result_to_dict(res: MatchResult, cfg: DhotConfig) -> dict:
    """Plain-data view of a result, stable across runs for fixed inputs."""
    return {
        "config": cfg.to_dict(),
        "hot_objective": res.hot_objective,
        "epoch_traces": list(res.epoch_traces),
        "gw_distances": res.gw_matrix.distances.tolist(),
        "theta": res.coupling.theta.tolist(),
        "nu_s": res.coupling.nu_s.tolist(),
        "nu_t": res.coupling.nu_t.tolist(),
        "marginal_history": [
            {"nu_s": ns.tolist(), "nu_t": nt.tolist()} for ns, nt in res.marginal_history
        ],
        "final_plan": res.final_plan.matrix.tolist(),
    }


def result_to_json(res: MatchResult, cfg: DhotConfig) -> str:
    """Canonical JSON serialization: sorted keys, no whitespace drift."""
    return json.dumps(result_to_dict(res, cfg), sort_keys=True, separators=(",", ":"))
