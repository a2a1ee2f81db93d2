import json
import math

import numpy as np
import pytest

from dpcmo.core import Bounds, EvalCounter, Population, evaluate_batch
from dpcmo.engine import (
    HOPS_PLANS,
    RunConfig,
    apply_ablation,
    feasible_front,
    hops_generate,
    initialize,
    opposition_offspring,
    run,
    stage1_step,
    stage2_step,
    try_switch,
)
from dpcmo.problems import Problem, make_problem
from dpcmo.schedule import EpsilonSchedule
from dpcmo.staging import TypeTracker


def constant_problem(dimension=6):
    """Every point maps to the same feasible objectives; the auxiliary
    population is stationary from the first generation."""

    def ev(X):
        n = len(X)
        F = np.tile([1.0, 2.0], (n, 1))
        G = np.full((n, 1), -1.0)
        return F, G, np.empty((n, 0))

    def sampler(n):
        t = np.linspace(0.0, 1.0, n)
        return np.column_stack([1.0 + t, 2.0 - t])

    return Problem(id="constant", n_objectives=2, dimension=dimension,
                   bounds=Bounds(np.zeros(dimension), np.ones(dimension)),
                   evaluate_matrix=ev, front_sampler=sampler)


def stage2_state(problem_id="P1-overlap", n=100, max_fe=200_000, seed=3,
                 rel_type=1, cnt=0, schedule=None, **config_kwargs):
    """A run state forced into stage 2 with a chosen type and schedule."""
    config = RunConfig(pop_size=n, max_fe=max_fe, **config_kwargs)
    state = initialize(make_problem(problem_id, 10), config, seed)
    state.flag = 1
    state.switch_fe = state.fe
    state.tracker = TypeTracker(type=rel_type, cnt=cnt)
    state.schedule = schedule or EpsilonSchedule(switch_fe=state.fe, max_fe=max_fe)
    return state


class TestInitialize:
    def test_counts_and_sizes(self):
        state = initialize(make_problem("P1-overlap", 10), RunConfig(pop_size=50), 1)
        assert state.fe == 100
        assert len(state.pop_main) == 50
        assert len(state.pop_aux) == 50
        assert state.flag == 0 and state.g == 1
        assert state.epsilon == 0.2
        assert state.dra.f1 == state.dra.f2 == 1.0

    def test_determinism(self):
        p = make_problem("P1-overlap", 10)
        a = initialize(p, RunConfig(pop_size=30), 7)
        b = initialize(p, RunConfig(pop_size=30), 7)
        assert np.array_equal(a.pop_main.decisions(), b.pop_main.decisions())
        assert np.array_equal(a.pop_aux.decisions(), b.pop_aux.decisions())

    def test_members_within_bounds(self):
        state = initialize(make_problem("P2-partial", 10), RunConfig(pop_size=200), 2)
        for pop in (state.pop_main, state.pop_aux):
            X = pop.decisions()
            assert np.all(X >= 0.0) and np.all(X <= 1.0)

    def test_small_budget_rejected(self):
        with pytest.raises(ValueError):
            initialize(make_problem("P1-overlap", 10), RunConfig(pop_size=100, max_fe=150), 0)

    def test_tiny_population_rejected(self):
        with pytest.raises(ValueError):
            initialize(make_problem("P1-overlap", 10), RunConfig(pop_size=4), 0)


class TestStage1:
    def test_consumes_two_batches(self):
        state = initialize(make_problem("P1-overlap", 10), RunConfig(pop_size=40), 1)
        before = state.fe
        stage1_step(state)
        assert state.fe == before + 80
        assert len(state.pop_main) == 40
        assert len(state.pop_aux) == 40
        assert state.g == 2

    def test_identical_populations_stay_fixed(self):
        state = initialize(constant_problem(), RunConfig(pop_size=30, max_fe=10_000), 5)
        stage1_step(state)
        assert np.all(state.pop_main.objectives() == [1.0, 2.0])
        assert np.all(state.pop_aux.objectives() == [1.0, 2.0])

    def test_best_member_survives_or_is_superseded(self):
        # elitism: the leading member only ever loses its seat to a
        # strictly better one
        state = initialize(make_problem("P3-separated", 10), RunConfig(pop_size=40), 7)
        from dpcmo.selection import epsilon_cdp_compare, fitness_order
        best = list(state.pop_main)[fitness_order(state.pop_main, 0.0)[0]]
        stage1_step(state)
        survives = any(s is best for s in state.pop_main)
        superseded = any(epsilon_cdp_compare(s, best, 0.0) == -1 for s in state.pop_main)
        assert survives or superseded

    def test_isolated_main_ablation_changes_outcome(self):
        p = make_problem("P3-separated", 10)
        full = initialize(p, RunConfig(pop_size=40), 9)
        isolated = initialize(p, RunConfig(pop_size=40, stage1_isolated_main=True), 9)
        for _ in range(3):
            stage1_step(full)
            stage1_step(isolated)
        assert full.fe == isolated.fe
        assert not np.array_equal(full.pop_main.decisions(), isolated.pop_main.decisions())
        # auxiliary side is untouched by the ablation
        assert np.array_equal(full.pop_aux.decisions(), isolated.pop_aux.decisions())


class TestSwitch:
    def test_generation_cap(self):
        state = initialize(make_problem("P1-overlap", 10), RunConfig(pop_size=20), 1)
        state.g = 251
        try_switch(state)
        assert state.flag == 1
        assert state.switch_fe == state.fe
        assert state.schedule is not None
        assert state.type_at_switch in (1, 2, 3)

    def test_no_switch_early(self):
        state = initialize(make_problem("P1-overlap", 10), RunConfig(pop_size=20), 1)
        stage1_step(state)
        try_switch(state)
        assert state.flag == 0

    def test_stationary_population_switches_quickly(self):
        result = run(constant_problem(), RunConfig(pop_size=20, max_fe=2000), seed=4)
        assert result.switch_generation is not None
        assert result.switch_generation <= 12

    def test_switch_happens_once(self):
        result = run(make_problem("P1-overlap", 10), RunConfig(pop_size=30, max_fe=4000), 2)
        stages = [r["stage"] for r in result.log]
        flips = sum(1 for a, b in zip(stages, stages[1:]) if a != b)
        assert flips <= 1
        assert stages == sorted(stages)


class TestOpposition:
    def test_mirror_with_symmetric_bounds(self):
        # lb + ub = 0, so the mirror is plain negation before clamping
        p = make_problem("P1-overlap", 10)
        pop = Population(evaluate_batch(p, np.random.default_rng(0).random((100, 10)),
                                        EvalCounter(100)))
        X = pop.decisions()
        out = opposition_offspring(pop, Bounds(np.full(10, -1.0), np.full(10, 1.0)))
        assert out == pytest.approx(np.clip(-X, -1.0, 1.0))

    def test_half_point_coefficient(self):
        p = constant_problem(4)
        pop = Population(evaluate_batch(p, np.full((100, 4), 0.5), EvalCounter(100)))
        out = opposition_offspring(pop, p.bounds)
        tc = math.tanh(math.log(100) * 0.8)
        assert tc == pytest.approx(0.99875, abs=1e-4)
        assert out == pytest.approx(np.full((100, 4), tc - 0.5))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            opposition_offspring(Population([]), Bounds([0.0], [1.0]))


class TestHops:
    @pytest.mark.parametrize("rel_type,f1,f2,want1,want2", [
        (1, 0.5, 0.5, 100, 100),   # 2 ops x 50 each side
        (2, 0.4, 0.3, 80, 60),
        (3, 0.25, 0.5, 25, 150),   # single main op, three aux ops
        (4, 0.5, 0.25, 100, 75),
    ])
    def test_offspring_counts(self, rel_type, f1, f2, want1, want2):
        state = stage2_state(rel_type=rel_type)
        off1, off2 = hops_generate(state, rel_type, f1, f2)
        assert len(off1) == want1
        assert len(off2) == want2

    def test_zero_pool_emits_nothing(self):
        state = stage2_state()
        off1, off2 = hops_generate(state, 1, 0.001, 0.5)
        assert off1 == []
        assert len(off2) == 100

    def test_budget_truncation(self):
        state = stage2_state(max_fe=200_000)
        state.counter.count = state.counter.budget - 30
        off1, off2 = hops_generate(state, 1, 0.5, 0.5)
        assert len(off1) + len(off2) == 30
        assert state.fe == state.counter.budget

    def test_plans_cover_all_types(self):
        assert set(HOPS_PLANS) == {1, 2, 3, 4}
        for plan in HOPS_PLANS.values():
            assert len(plan.main_ops) == len(plan.main_pools)
            assert len(plan.aux_ops) == len(plan.aux_pools)


class TestStage2Dispatch:
    def test_phase1_runs_reclassification(self):
        # fresh switch on a long budget keeps the relaxation near its start
        state = stage2_state(n=30, max_fe=500_000, rel_type=1,
                             disable_opposition=True)
        stage2_step(state)
        rec = state.log[-1]
        assert rec["phase"] == 1
        assert rec["eps"] >= 0.195

    def test_phase2_angle_selection_for_separated(self):
        state = stage2_state(n=30, rel_type=3, disable_opposition=True)
        fe = state.fe
        state.schedule = EpsilonSchedule(switch_fe=fe - 100, max_fe=fe + 300)
        stage2_step(state)
        rec = state.log[-1]
        assert rec["phase"] == 2
        assert 0.005 < rec["eps"] < 0.195

    def test_phase3_for_coincident_type(self):
        state = stage2_state(n=30, rel_type=1, disable_opposition=True)
        fe = state.fe
        state.schedule = EpsilonSchedule(switch_fe=fe - 100, max_fe=fe + 300)
        stage2_step(state)
        rec = state.log[-1]
        assert rec["phase"] == 3
        assert rec["eps"] < 0.195

    def test_phase3_when_relaxation_exhausted(self):
        state = stage2_state(n=30, rel_type=3, disable_opposition=True)
        fe = state.fe
        state.schedule = EpsilonSchedule(switch_fe=fe - 400, max_fe=fe + 10)
        stage2_step(state)
        rec = state.log[-1]
        assert rec["phase"] == 3
        assert rec["eps"] <= 0.005

    def test_aux_size_tracks_feasible_ratio(self):
        state = stage2_state(n=100, rel_type=1, disable_opposition=True)
        fr = state.pop_aux.feasible_ratio()
        stage2_step(state)
        want = max(25, math.ceil((1 - fr) * 100))
        assert state.log[-1]["aux"] == want


class TestOppositionTrigger:
    def _infeasible_state(self, **kwargs):
        # P3 with tiny decisions: every member has g < 0.5, hence infeasible
        state = stage2_state(problem_id="P3-separated", n=30, rel_type=3, **kwargs)
        X = np.random.default_rng(0).random((30, 10)) * 0.05
        state.pop_main = Population(evaluate_batch(state.problem, X, state.counter))
        state.pop_aux = Population(evaluate_batch(state.problem, X + 0.01, state.counter))
        assert state.pop_main.feasible_ratio() == 0.0
        assert state.pop_aux.feasible_ratio() == 0.0
        return state

    def test_opposition_fires_on_fully_infeasible_populations(self):
        state = self._infeasible_state()
        fe = state.fe
        stage2_step(state)
        plan = HOPS_PLANS[3]
        hops_count = (len(plan.main_ops) * round(state.dra.f1 * 30)
                      + len(plan.aux_ops) * round(state.dra.f2 * 30))
        assert state.fe - fe == hops_count + 30  # 30 mirrored offspring

    def test_opposition_disabled_by_ablation(self):
        state = self._infeasible_state(disable_opposition=True)
        fe = state.fe
        stage2_step(state)
        plan = HOPS_PLANS[3]
        hops_count = (len(plan.main_ops) * round(state.dra.f1 * 30)
                      + len(plan.aux_ops) * round(state.dra.f2 * 30))
        assert state.fe - fe == hops_count

    def test_opposition_skipped_when_aux_partially_feasible(self):
        state = stage2_state(problem_id="P3-separated", n=30, rel_type=3)
        assert state.pop_aux.feasible_ratio() > 0.0
        fe = state.fe
        stage2_step(state)
        plan = HOPS_PLANS[3]
        hops_count = (len(plan.main_ops) * round(state.dra.f1 * 30)
                      + len(plan.aux_ops) * round(state.dra.f2 * 30))
        assert state.fe - fe == hops_count


class TestAblations:
    def test_unknown_variant(self):
        with pytest.raises(ValueError, match="unknown variant"):
            apply_ablation(RunConfig(), "WoXYZ")

    def test_full_passthrough(self):
        cfg = RunConfig()
        assert apply_ablation(cfg, "full") is cfg

    @pytest.mark.parametrize("variant,attr,value", [
        ("WoRR", "strict_switch_only", True),
        ("WoS1C", "stage1_isolated_main", True),
        ("WoOP", "disable_opposition", True),
        ("Wo3P", "force_angle_selection", True),
        ("Eps1", "initial_epsilon_only", True),
        ("HOps-T2", "force_hops_type", 2),
        ("WoDRA", "disable_dra", True),
    ])
    def test_flag_wiring(self, variant, attr, value):
        assert getattr(apply_ablation(RunConfig(), variant), attr) == value

    def test_forced_plan_overrides_tracker(self):
        state = stage2_state(rel_type=1, disable_opposition=True, force_hops_type=3)
        fe = state.fe
        stage2_step(state)
        plan3 = HOPS_PLANS[3]
        want = (len(plan3.main_ops) * round(state.dra.f1 * 100)
                + len(plan3.aux_ops) * round(state.dra.f2 * 100))
        assert state.fe - fe == want

    def test_unstable_counter_selects_fallback_plan(self):
        state = stage2_state(rel_type=1, cnt=4, disable_opposition=True)
        fe = state.fe
        stage2_step(state)
        plan4 = HOPS_PLANS[4]
        want = (len(plan4.main_ops) * round(state.dra.f1 * 100)
                + len(plan4.aux_ops) * round(state.dra.f2 * 100))
        assert state.fe - fe == want

    def test_static_allocation(self):
        state = stage2_state(rel_type=1, disable_opposition=True, disable_dra=True)
        stage2_step(state)
        assert state.dra.f1 == 0.5
        assert state.dra.f2 == 0.5

    def test_single_phase_relaxation(self):
        state = stage2_state(n=30, rel_type=3, disable_opposition=True,
                             initial_epsilon_only=True)
        stage2_step(state)
        assert state.log[-1]["eps"] == pytest.approx(0.2, abs=0.01)

    def test_forced_angle_selection_every_generation(self):
        # the constant problem switches within a dozen generations
        result = run(constant_problem(),
                     apply_ablation(RunConfig(pop_size=30, max_fe=2400), "Wo3P"), 3)
        stage2 = [r for r in result.log if r["stage"] == 1]
        assert stage2
        assert all(r["phase"] == 2 for r in stage2)


class TestRun:
    def test_budget_respected_with_odd_budget(self):
        result = run(make_problem("P1-overlap", 10), RunConfig(pop_size=30, max_fe=1997), 1)
        assert result.evaluations == 1997
        fes = [r["fe"] for r in result.log]
        assert fes == sorted(fes)
        assert fes[-1] == 1997

    def test_degenerate_budget_returns_initial_front(self):
        result = run(make_problem("P3-separated", 10), RunConfig(pop_size=50, max_fe=100), 1)
        assert result.evaluations == 100
        assert len(result.log) == 1
        assert result.switch_generation is None
        assert len(result.front_objectives) > 0

    def test_deterministic_logs(self):
        p = make_problem("P2-partial", 10)
        cfg = RunConfig(pop_size=30, max_fe=3000)
        a = run(p, cfg, seed=11)
        b = run(p, cfg, seed=11)
        assert json.dumps(a.log) == json.dumps(b.log)
        assert np.array_equal(a.front_objectives, b.front_objectives)
        c = run(p, cfg, seed=12)
        assert json.dumps(a.log) != json.dumps(c.log)
        assert a.fingerprint == b.fingerprint != c.fingerprint

    def test_front_members_feasible_and_nondominated(self):
        result = run(make_problem("P1-overlap", 10), RunConfig(pop_size=40, max_fe=6000), 5)
        assert np.all(result.front_cv == 0.0)
        F = result.front_objectives
        for i in range(len(F)):
            for j in range(len(F)):
                if i != j:
                    assert not (np.all(F[j] <= F[i]) and np.any(F[j] < F[i]))

    def test_quality_improves_over_run(self):
        result = run(make_problem("P1-overlap", 10), RunConfig(pop_size=50, max_fe=10_000), 8)
        hv = [r["hv"] for r in result.log if r["hv"] > 0]
        assert hv[-1] >= hv[0]
        igd_first = next(r["igd"] for r in result.log if math.isfinite(r["igd"]))
        assert result.final_igd < igd_first

    def test_feasible_front_helper(self):
        state = initialize(make_problem("P3-separated", 10), RunConfig(pop_size=30), 2)
        F = feasible_front(state.pop_main)
        assert F.size > 0
        cvs = state.pop_main.cvs()
        assert len(F) <= (cvs == 0).sum()
