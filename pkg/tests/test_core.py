import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpcmo.core import (
    Bounds,
    BudgetExhausted,
    EvalCounter,
    Population,
    RngStream,
    Solution,
    clamp_to_bounds,
    constraint_violation,
    evaluate,
    evaluate_batch,
    pareto_dominates,
)
from dpcmo.problems import make_problem


class TestConstraintViolation:
    def test_inequality_only(self):
        assert constraint_violation([-1.0, 2.0], [], 1e-4) == 2.0

    def test_equality_at_tolerance(self):
        assert constraint_violation([], [1e-4], 1e-4) == 0.0

    def test_mixed(self):
        got = constraint_violation([0.3, -0.1], [0.2], 1e-4)
        assert got == pytest.approx(0.4999, abs=1e-15)

    def test_zero_iff_feasible(self):
        assert constraint_violation([-0.5, 0.0], [5e-5, -9e-5], 1e-4) == 0.0
        assert constraint_violation([1e-9], [], 1e-4) > 0.0
        assert constraint_violation([], [1.1e-4], 1e-4) > 0.0

    def test_rejects_nonfinite_with_index(self):
        with pytest.raises(ValueError, match="index 1"):
            constraint_violation([0.0, np.nan], [], 1e-4)
        with pytest.raises(ValueError, match="eq"):
            constraint_violation([], [np.inf], 1e-4)

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            constraint_violation([1.0], [], 0.0)

    @given(
        st.lists(st.floats(-10, 10), min_size=1, max_size=5),
        st.integers(0, 4),
        st.floats(0.01, 5.0),
    )
    def test_monotone_in_each_term(self, g, idx, bump):
        idx = idx % len(g)
        base = constraint_violation(g, [], 1e-4)
        raised = list(g)
        raised[idx] += bump
        assert constraint_violation(raised, [], 1e-4) >= base


class TestDominance:
    def test_examples(self):
        assert pareto_dominates((1, 2), (2, 3))
        assert not pareto_dominates((1, 2), (1, 2))
        assert not pareto_dominates((1, 3), (2, 2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pareto_dominates((1, 2), (1, 2, 3))

    def test_irreflexive_and_transitive(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a, b, c = rng.integers(0, 3, size=(3, 3)).astype(float)
            assert not pareto_dominates(a, a)
            if pareto_dominates(a, b) and pareto_dominates(b, c):
                assert pareto_dominates(a, c)


class TestClamp:
    def test_examples(self):
        b1 = Bounds([0.0], [1.0])
        assert clamp_to_bounds(np.array([1.5]), b1).tolist() == [1.0]
        assert clamp_to_bounds(np.array([0.5]), b1).tolist() == [0.5]
        b3 = Bounds([0.0] * 3, [1.0] * 3)
        assert clamp_to_bounds(np.array([-2.0, 0.3, 9.0]), b3).tolist() == [0.0, 0.3, 1.0]

    def test_idempotent(self):
        b = Bounds([-1.0, 0.0], [1.0, 2.0])
        rng = np.random.default_rng(3)
        X = rng.uniform(-5, 5, size=(100, 2))
        once = clamp_to_bounds(X, b)
        assert np.array_equal(clamp_to_bounds(once, b), once)

    def test_bounds_validation(self):
        with pytest.raises(ValueError):
            Bounds([0.0, 1.0], [1.0, 1.0])


class TestEvaluate:
    def test_p1_example(self):
        p = make_problem("P1-overlap", 10)
        counter = EvalCounter(10)
        x = np.array([0.25] + [0.0] * 9)
        s = evaluate(p, x, counter)
        assert s.objectives == pytest.approx([0.25, 0.5])
        assert s.cv == 0.0
        assert counter.count == 1

    def test_p3_example(self):
        p = make_problem("P3-separated", 10)
        s = evaluate(p, np.zeros(10), EvalCounter(1))
        assert s.ineq == pytest.approx([0.5])
        assert s.cv == pytest.approx(0.5)

    def test_budget_exhausted(self):
        p = make_problem("P1-overlap", 10)
        counter = EvalCounter(1)
        evaluate(p, np.zeros(10), counter)
        with pytest.raises(BudgetExhausted):
            evaluate(p, np.zeros(10), counter)

    def test_batch_truncates_at_budget(self):
        p = make_problem("P1-overlap", 10)
        counter = EvalCounter(5)
        X = np.zeros((8, 10))
        out = evaluate_batch(p, X, counter)
        assert len(out) == 5
        assert counter.count == 5
        assert evaluate_batch(p, X, counter) == []

    def test_batch_matches_single(self):
        p = make_problem("P2-partial", 10)
        rng = np.random.default_rng(11)
        X = rng.random((20, 10))
        batch = evaluate_batch(p, X, EvalCounter(20))
        for i, s in enumerate(batch):
            single = evaluate(p, X[i], EvalCounter(1))
            assert np.array_equal(s.objectives, single.objectives)
            assert s.cv == single.cv


class TestPopulation:
    def _solutions(self, F):
        return [Solution(np.zeros(2), f, np.empty(0), np.empty(0), 0.0) for f in F]

    def test_cached_points_match_recomputation(self):
        rng = np.random.default_rng(5)
        F = rng.random((40, 3))
        pop = Population(self._solutions(F))
        assert pop.ideal == pytest.approx(F.min(axis=0))
        assert pop.nadir == pytest.approx(F.max(axis=0))
        assert pop.average == pytest.approx(F.mean(axis=0))
        assert np.all(pop.ideal <= pop.average)
        assert np.all(pop.average <= pop.nadir)

    def test_feasible_ratio(self):
        sols = self._solutions(np.ones((4, 2)))
        sols[0] = Solution(np.zeros(2), np.ones(2), np.array([1.0]), np.empty(0), 1.0)
        assert Population(sols).feasible_ratio() == 0.75


class TestRngStream:
    def test_same_seed_same_stream(self):
        a = RngStream(12345).gen.random(100)
        b = RngStream(12345).gen.random(100)
        assert np.array_equal(a, b)

    def test_different_seed_differs(self):
        assert not np.array_equal(RngStream(1).gen.random(10), RngStream(2).gen.random(10))
