"""The dual-population two-stage optimization loop.

Stage 1 evolves both populations with crossover-and-mutation offspring: the
main population under strict feasible-first selection, the auxiliary one
ignoring constraints. Once the auxiliary population stops moving in
objective space, the run switches to stage 2: the front relationship is
classified, a relaxation schedule starts, and per-type hybrid operator
plans generate offspring whose volume is balanced by the resource
allocator. The auxiliary population is then steered through three phases
(re-exploration, angular subregion selection, exploitation) keyed on the
relaxation value.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .core import (
    Bounds,
    EvalCounter,
    Population,
    RngStream,
    Solution,
    evaluate_batch,
)
from .metrics import IGD_EMPTY, MetricConfig, igd
from .problems import Problem, reference_front
from .schedule import (
    DraState,
    EpsilonSchedule,
    aux_size,
    dra_allocate,
    epsilon_final,
    epsilon_initial,
    no_dra_factors,
)
from .selection import (
    angle_subregion_select,
    environmental_select,
    unconstrained_nondominated,
)
from .staging import (
    HistoryNotReady,
    PointHistory,
    TypeTracker,
    classify_relationship,
    rs_metric,
    should_switch,
    track_type,
)
from .variation import (
    OperatorParams,
    de_current_to_pbest,
    de_current_to_rand,
    de_rand_1,
    de_transfer,
    ga_offspring,
    random_pool,
    tournament_pool,
)

logger = logging.getLogger(__name__)

ABLATION_VARIANTS = (
    "WoRR", "WoS1C", "WoOP", "Wo3P", "Eps1",
    "HOps-T1", "HOps-T2", "HOps-T3", "HOps-T4", "WoDRA",
)


@dataclass(frozen=True)
class RunConfig:
    pop_size: int = 100
    max_fe: int = 50_000
    eps0: float = 0.2
    curvature: float = 15.0
    phase1_eps: float = 0.195
    phase3_eps: float = 0.005
    opposition_eps: float = 0.0005
    delta: float = 1e-4
    history_gap: int = 10
    history_delta: float = 1e-7
    pbest_fraction: float = 0.1
    coincident_threshold: float = 0.9
    fixed_aux_size: int | None = None
    reset_cnt_on_update: bool = False
    igd_points: int = 1000
    hv_offset: float = 1.1
    # ablation switches
    strict_switch_only: bool = False     # tightest switch threshold only
    stage1_isolated_main: bool = False   # main union excludes aux offspring
    disable_opposition: bool = False
    force_angle_selection: bool = False  # angular selection in every stage-2 step
    initial_epsilon_only: bool = False   # single-phase exponential relaxation
    force_hops_type: int | None = None
    disable_dra: bool = False
    ll_signal: Callable | None = field(default=None, compare=False)

    def operator_params(self, _dimension: int) -> OperatorParams:
        return OperatorParams(pbest_fraction=self.pbest_fraction)

    def fingerprint_payload(self) -> dict:
        payload = {}
        for f in fields(self):
            if f.name == "ll_signal":
                continue
            payload[f.name] = getattr(self, f.name)
        return payload


def apply_ablation(config: RunConfig, variant: str) -> RunConfig:
    """Return a config with one algorithm component removed or pinned."""
    if variant == "full":
        return config
    table = {
        "WoRR": {"strict_switch_only": True},
        "WoS1C": {"stage1_isolated_main": True},
        "WoOP": {"disable_opposition": True},
        "Wo3P": {"force_angle_selection": True},
        "Eps1": {"initial_epsilon_only": True},
        "HOps-T1": {"force_hops_type": 1},
        "HOps-T2": {"force_hops_type": 2},
        "HOps-T3": {"force_hops_type": 3},
        "HOps-T4": {"force_hops_type": 4},
        "WoDRA": {"disable_dra": True},
    }
    if variant not in table:
        raise ValueError(f"unknown variant {variant!r}; expected 'full' or one of {ABLATION_VARIANTS}")
    return replace(config, **table[variant])


@dataclass(frozen=True)
class HopsPlan:
    """Operator lists and mating-pool kinds for one relationship type."""

    main_ops: tuple[str, ...]
    main_pools: tuple[str, ...]
    aux_ops: tuple[str, ...]
    aux_pools: tuple[str, ...]


HOPS_PLANS = {
    1: HopsPlan(("de", "ga"), ("T", "T"), ("transfer", "pbest"), ("T", "T")),
    2: HopsPlan(("ga", "de"), ("T", "R"), ("transfer", "pbest"), ("T", "R")),
    3: HopsPlan(("cur_rand",), ("T",), ("cur_rand", "pbest", "de"), ("T", "R", "R")),
    4: HopsPlan(("ga", "de"), ("T", "R"), ("transfer", "cur_rand", "pbest"), ("T", "R", "R")),
}


class RunState:
    """Everything one run owns: both populations, counters, schedule and
    trackers. Never shared across runs."""

    def __init__(self, problem: Problem, config: RunConfig, seed: int):
        self.problem = problem
        self.config = config
        self.seed = int(seed)
        self.rng = RngStream(seed)
        self.counter = EvalCounter(config.max_fe)
        self.params = config.operator_params(problem.dimension)
        self.pop_main: Population = Population([])
        self.pop_aux: Population = Population([])
        self.g = 1
        self.flag = 0
        self.switch_fe: int | None = None
        self.switch_generation: int | None = None
        self.type_at_switch: int | None = None
        self.schedule: EpsilonSchedule | None = None
        self.epsilon = config.eps0
        self.tracker = TypeTracker(type=0, reset_on_update=config.reset_cnt_on_update)
        self.dra = DraState()
        self.history = PointHistory(gap=config.history_gap, delta=config.history_delta)
        self.phase = 0
        self.log: list[dict] = []

        front = reference_front(problem, config.igd_points)
        self.ref_points = front.points
        self.metric_cfg = MetricConfig.from_front(front.points, reference_offset=config.hv_offset)

    @property
    def fe(self) -> int:
        return self.counter.count


@dataclass
class RunResult:
    """Per-generation log plus the final feasible nondominated front."""

    problem_id: str
    dimension: int
    seed: int
    log: list[dict]
    front_decisions: np.ndarray
    front_objectives: np.ndarray
    front_cv: np.ndarray
    final_igd: float
    final_hv: float
    switch_generation: int | None
    type_at_switch: int | None
    evaluations: int
    wall_time: float
    fingerprint: str


def _fingerprint(problem: Problem, config: RunConfig, seed: int) -> str:
    payload = {
        "problem": problem.id,
        "dimension": problem.dimension,
        "seed": seed,
        "config": config.fingerprint_payload(),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def initialize(problem: Problem, config: RunConfig, seed: int) -> RunState:
    """Two independent uniform populations, evaluated; 2N budget units."""
    if config.pop_size < 5:
        raise ValueError("population size must be at least 5")
    if config.max_fe < 2 * config.pop_size:
        raise ValueError("budget must cover the two initial populations")
    state = RunState(problem, config, seed)
    n = config.pop_size
    X_main = problem.bounds.sample(n, state.rng.gen)
    X_aux = problem.bounds.sample(n, state.rng.gen)
    state.pop_main = Population(evaluate_batch(problem, X_main, state.counter, config.delta))
    state.pop_aux = Population(evaluate_batch(problem, X_aux, state.counter, config.delta))
    state.history.record(0, state.pop_aux)
    _append_log(state, generation=0, stage=0)
    return state


def feasible_front(pop: Population) -> np.ndarray:
    """Objective matrix of the feasible nondominated members (may be empty)."""
    feas = [s for s in pop if s.cv == 0.0]
    if not feas:
        return np.empty((0, 0))
    F = np.array([s.objectives for s in feas])
    return F[unconstrained_nondominated(F)]


def _append_log(state: RunState, generation: int, stage: int) -> None:
    F = feasible_front(state.pop_main)
    if F.size:
        gen_igd = igd(F, state.ref_points)
        gen_hv = state.metric_cfg.normalized_hypervolume(F)
    else:
        gen_igd = IGD_EMPTY
        gen_hv = 0.0
    state.log.append({
        "g": generation,
        "fe": state.fe,
        "stage": stage,
        "phase": state.phase,
        "eps": state.epsilon,
        "type": state.tracker.type,
        "cnt": state.tracker.cnt,
        "f1": state.dra.f1,
        "f2": state.dra.f2,
        "aux": len(state.pop_aux),
        "fr_main": state.pop_main.feasible_ratio(),
        "fr_aux": state.pop_aux.feasible_ratio(),
        "igd": gen_igd,
        "hv": gen_hv,
    })


def try_switch(state: RunState) -> None:
    """Check the stage-transition condition; on trigger, classify the front
    relationship and freeze the relaxation schedule."""
    if state.flag != 0:
        raise RuntimeError("switch already happened")
    try:
        latest = state.history.latest_generation
        rs = rs_metric(state.history, latest) if latest is not None else 1.0
    except HistoryNotReady:
        rs = 1.0
    if should_switch(rs, state.g, strict_only=state.config.strict_switch_only):
        state.flag = 1
        state.switch_fe = state.fe
        state.switch_generation = state.g
        seed_type = classify_relationship(state.pop_main, state.pop_aux,
                                          state.config.coincident_threshold)
        state.type_at_switch = seed_type
        state.tracker = TypeTracker(type=seed_type, cnt=0,
                                    reset_on_update=state.config.reset_cnt_on_update)
        state.schedule = EpsilonSchedule(
            switch_fe=state.switch_fe,
            max_fe=state.config.max_fe,
            eps0=state.config.eps0,
            curvature=state.config.curvature,
        )


def stage1_step(state: RunState) -> None:
    """One co-evolution generation before the switch.

    Both populations breed by crossover and mutation; the auxiliary
    offspring also join the main population's selection pool unless the
    isolated-main ablation is active.
    """
    cfg = state.config
    n = cfg.pop_size
    rng = state.rng.gen

    pool_main = random_pool(state.pop_main, n, rng)
    X1 = ga_offspring(pool_main, state.params, 1, state.problem.bounds, rng)
    off1 = evaluate_batch(state.problem, X1, state.counter, cfg.delta)

    pool_aux = random_pool(state.pop_aux, n, rng)
    X2 = ga_offspring(pool_aux, state.params, 1, state.problem.bounds, rng)
    off2 = evaluate_batch(state.problem, X2, state.counter, cfg.delta)

    main_union = list(state.pop_main) + off1
    if not cfg.stage1_isolated_main:
        main_union += off2
    state.pop_main = environmental_select(main_union, n, epsilon=0.0)
    state.pop_aux = environmental_select(list(state.pop_aux) + off2, n, epsilon=math.inf)

    state.history.record(state.g, state.pop_aux)
    _append_log(state, generation=state.g, stage=0)
    state.g += 1


def opposition_offspring(pop_aux: Population, bounds: Bounds) -> np.ndarray:
    """Mirror each member through a tanh-scaled midpoint of the bounds."""
    if not len(pop_aux):
        raise ValueError("empty population")
    tc = math.tanh(math.log(len(pop_aux)) * 0.8)
    X = pop_aux.decisions()
    mirrored = (bounds.lower + bounds.upper) * tc - X
    return np.clip(mirrored, bounds.lower, bounds.upper)


def _build_pool(pop: Population, kind: str, k: int, epsilon: float,
                rng: np.random.Generator) -> list[Solution]:
    if kind == "T":
        return tournament_pool(pop, k, epsilon, rng)
    if kind == "R":
        return random_pool(pop, k, rng)
    raise ValueError(f"unknown pool kind {kind!r}")


_DE_FAMILY = {"de", "cur_rand", "pbest"}


def _run_operator(state: RunState, op: str, kind: str, k: int, source: str) -> np.ndarray:
    """Apply one plan operator, returning exactly k offspring rows."""
    rng = state.rng.gen
    bounds = state.problem.bounds
    params = state.params
    if op == "transfer":
        return de_transfer(state.pop_main, state.pop_aux, params, rng, count=k)

    pop = state.pop_main if source == "main" else state.pop_aux
    pool_eps = 0.0 if source == "main" else math.inf
    draw = max(k, 4) if op in _DE_FAMILY else k
    pool = _build_pool(pop, kind, draw, pool_eps, rng)
    if op == "ga":
        X = ga_offspring(pool, params, 2, bounds, rng)
    elif op == "de":
        X = de_rand_1(pool, params, bounds, rng)
    elif op == "cur_rand":
        X = de_current_to_rand(pool, params, bounds, rng)
    elif op == "pbest":
        X = de_current_to_pbest(pool, state.pop_main, params, bounds, rng)
    else:
        raise ValueError(f"unknown operator {op!r}")
    return X[:k]


def hops_generate(state: RunState, eff_type: int, f1: float, f2: float
                  ) -> tuple[list[Solution], list[Solution]]:
    """Generate evaluated offspring batches per the type's operator plan.

    Pool sizes are round(f * N) per operator; a pool that rounds to zero
    makes its operator emit nothing. Main-population tournaments use the
    strict ordering, auxiliary ones the unconstrained ordering.
    """
    plan = HOPS_PLANS[eff_type]
    n = state.config.pop_size
    off1: list[Solution] = []
    off2: list[Solution] = []
    for target, ops, kinds, factor, source in (
        (off1, plan.main_ops, plan.main_pools, f1, "main"),
        (off2, plan.aux_ops, plan.aux_pools, f2, "aux"),
    ):
        k = round(factor * n)
        for op, kind in zip(ops, kinds):
            if k <= 0:
                logger.debug("operator %s skipped: pool size rounded to 0", op)
                continue
            X = _run_operator(state, op, kind, k, source)
            target.extend(evaluate_batch(state.problem, X, state.counter, state.config.delta))
    return off1, off2


def stage2_step(state: RunState) -> None:
    """One generation of the second stage.

    Computes the relaxation value for this generation, optionally emits
    opposition offspring against deceptive constraints, allocates offspring
    volume, runs the hybrid operator plan, and routes the auxiliary
    population through the phase logic.
    """
    cfg = state.config
    n = cfg.pop_size
    fr_main = state.pop_main.feasible_ratio()
    fr_aux = state.pop_aux.feasible_ratio()
    if cfg.fixed_aux_size is not None:
        n_s = cfg.fixed_aux_size
    elif n >= 25:
        n_s = aux_size(fr_aux, n)
    else:
        n_s = n  # the 25-member floor presumes a population of at least 25

    if cfg.initial_epsilon_only:
        eps = epsilon_initial(state.schedule, state.fe)
    else:
        eps = epsilon_final(state.schedule, state.fe, state.tracker.type)
    state.epsilon = eps

    off3: list[Solution] = []
    if (not cfg.disable_opposition and (fr_main == 1.0 or fr_main == 0.0)
            and fr_aux == 0.0 and eps > cfg.opposition_eps):
        X3 = opposition_offspring(state.pop_aux, state.problem.bounds)
        off3 = evaluate_batch(state.problem, X3, state.counter, cfg.delta)

    eff_type = cfg.force_hops_type if cfg.force_hops_type is not None else (
        4 if state.tracker.cnt > 3 else state.tracker.type)
    plan = HOPS_PLANS[eff_type]
    if cfg.disable_dra:
        f1, f2 = no_dra_factors(len(plan.main_ops), len(plan.aux_ops))
        state.dra = DraState(f1=f1, f2=f2)
    else:
        ll = cfg.ll_signal(state) if cfg.ll_signal is not None else 0.0
        state.dra = dra_allocate(state.dra, state.tracker.type, ll, fr_main, fr_aux,
                                 state.tracker.cnt)

    off1, off2 = hops_generate(state, eff_type, state.dra.f1, state.dra.f2)
    off = off1 + off2 + off3

    state.pop_main = environmental_select(list(state.pop_main) + off, n, epsilon=0.0)

    if cfg.force_angle_selection:
        state.phase = 2
        state.pop_aux = angle_subregion_select(state.pop_aux, off, n_s, eps)
    elif eps >= cfg.phase1_eps:
        state.phase = 1
        state.pop_aux = environmental_select(list(state.pop_aux) + off, n_s, epsilon=math.inf)
        ntype = classify_relationship(state.pop_main, state.pop_aux, cfg.coincident_threshold)
        state.tracker = track_type(state.tracker, ntype)
    elif eps <= cfg.phase3_eps or state.tracker.type in (1, 2):
        state.phase = 3
        sel_eps = 0.0 if state.tracker.type == 1 else eps
        state.pop_aux = environmental_select(list(state.pop_aux) + off, n_s, epsilon=sel_eps)
    else:
        state.phase = 2
        state.pop_aux = angle_subregion_select(state.pop_aux, off, n_s, eps)

    _append_log(state, generation=state.g, stage=1)
    state.g += 1


def run(problem: Problem, config: RunConfig | None = None, seed: int = 0) -> RunResult:
    """Execute a full run and return its log and final front."""
    config = config or RunConfig()
    started = time.perf_counter()
    state = initialize(problem, config, seed)

    while state.fe < config.max_fe:
        if state.flag == 0:
            try_switch(state)
            stage1_step(state)
        else:
            stage2_step(state)
    assert state.fe <= config.max_fe

    feas = [s for s in state.pop_main if s.cv == 0.0]
    if feas:
        F = np.array([s.objectives for s in feas])
        keep = unconstrained_nondominated(F)
        front = [feas[i] for i in keep]
        front_decisions = np.array([s.decisions for s in front])
        front_objectives = np.array([s.objectives for s in front])
        front_cv = np.array([s.cv for s in front])
        final_igd = igd(front_objectives, state.ref_points)
        final_hv = state.metric_cfg.normalized_hypervolume(front_objectives)
    else:
        front_decisions = np.empty((0, problem.dimension))
        front_objectives = np.empty((0, problem.n_objectives))
        front_cv = np.empty(0)
        final_igd = IGD_EMPTY
        final_hv = 0.0

    return RunResult(
        problem_id=problem.id,
        dimension=problem.dimension,
        seed=state.seed,
        log=state.log,
        front_decisions=front_decisions,
        front_objectives=front_objectives,
        front_cv=front_cv,
        final_igd=final_igd,
        final_hv=final_hv,
        switch_generation=state.switch_generation,
        type_at_switch=state.type_at_switch,
        evaluations=state.fe,
        wall_time=time.perf_counter() - started,
        fingerprint=_fingerprint(problem, config, seed),
    )
