import numpy as np
import pytest

from dpcmo.metrics import IGD_EMPTY, MetricConfig, hypervolume, igd

from oracles import mc_hypervolume


def random_front(rng, k, m=2):
    """k mutually nondominated points inside the unit box."""
    if m == 2:
        x = np.sort(rng.uniform(0.05, 0.95, k))
        y = np.sort(rng.uniform(0.05, 0.95, k))[::-1]
        return np.column_stack([x, y])
    # 3 objectives: points on a randomly scaled simplex shell
    w = rng.dirichlet(np.ones(3), size=k)
    scale = rng.uniform(0.4, 0.9, size=(k, 1))
    return w * scale


class TestHypervolume:
    def test_single_point(self):
        assert hypervolume([[0.5, 0.5]], [1.0, 1.0]) == pytest.approx(0.25)

    def test_two_point_sweep(self):
        got = hypervolume([[0.2, 0.8], [0.8, 0.2]], [1.0, 1.0])
        assert got == pytest.approx(0.2 * 0.8 + 0.6 * 0.2)

    def test_boundary_touching_adds_nothing(self):
        assert hypervolume([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0]) == 0.0

    def test_points_beyond_reference_dropped(self):
        got = hypervolume([[0.5, 0.5], [1.5, 0.1], [0.1, 2.0]], [1.0, 1.0])
        assert got == pytest.approx(0.25)

    def test_empty(self):
        assert hypervolume(np.empty((0, 2)), [1.0, 1.0]) == 0.0
        assert hypervolume([[2.0, 2.0]], [1.0, 1.0]) == 0.0

    def test_dominated_points_do_not_change_result(self):
        front = [[0.2, 0.8], [0.8, 0.2]]
        with_dup = front + [[0.9, 0.9], [0.8, 0.2]]
        assert hypervolume(with_dup, [1, 1]) == hypervolume(front, [1, 1])

    def test_monotone_under_new_nondominated_point(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            front = random_front(rng, 6)
            base = hypervolume(front, [1, 1])
            extra = np.array([[rng.uniform(0, 0.04), rng.uniform(0, 0.04)]])
            assert hypervolume(np.vstack([front, extra]), [1, 1]) >= base

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        front = random_front(rng, 9)
        shuffled = front[rng.permutation(len(front))]
        assert hypervolume(shuffled, [1, 1]) == pytest.approx(hypervolume(front, [1, 1]))

    def test_3d_slicer_on_degenerate_third_axis(self):
        rng = np.random.default_rng(2)
        front2 = random_front(rng, 7)
        front3 = np.column_stack([front2, np.full(len(front2), 0.1)])
        hv2 = hypervolume(front2, [1.0, 1.0])
        hv3 = hypervolume(front3, [1.0, 1.0, 1.1])
        assert hv3 == pytest.approx(hv2 * 1.0)

    def test_3d_exact_cube(self):
        # one point dominating a cube corner
        assert hypervolume([[0.5, 0.5, 0.5]], [1, 1, 1]) == pytest.approx(0.125)
        # two stacked boxes
        got = hypervolume([[0.5, 0.5, 0.0], [0.0, 0.0, 0.5]], [1, 1, 1])
        assert got == pytest.approx(0.25 * 0.5 + 1.0 * 0.5)

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(3)
        for m in (2, 3):
            for trial in range(4):
                front = random_front(rng, int(rng.integers(3, 12)), m)
                ref = np.ones(m)
                exact = hypervolume(front, ref)
                est, se = mc_hypervolume(front, ref, 200_000, seed=trial)
                assert abs(exact - est) <= 3 * se + 1e-9

    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            hypervolume([[1, 2, 3, 4]], [5, 5, 5, 5])
        with pytest.raises(ValueError):
            hypervolume([[1, 2]], [1, 1, 1])


class TestIgd:
    def test_identity(self):
        front = np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]])
        assert igd(front, front) == 0.0

    def test_unit_distances(self):
        assert igd([[0.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(1.0)

    def test_adding_points_never_increases(self):
        rng = np.random.default_rng(4)
        ref = random_front(rng, 50)
        front = random_front(rng, 5)
        base = igd(front, ref)
        grown = igd(np.vstack([front, random_front(rng, 5)]), ref)
        assert grown <= base + 1e-15

    def test_empty_front_sentinel(self):
        assert igd(np.empty((0, 2)), [[0.0, 1.0]]) == IGD_EMPTY

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            igd([[0.0, 0.0]], np.empty((0, 2)))


class TestMetricConfig:
    def test_normalization_and_reference(self):
        cfg = MetricConfig(ideal=[0.0, 1.0], nadir=[2.0, 3.0])
        assert cfg.normalize([[1.0, 2.0]]) == pytest.approx(np.array([[0.5, 0.5]]))
        assert cfg.reference.tolist() == [1.1, 1.1]

    def test_from_front(self):
        pts = np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.4]])
        cfg = MetricConfig.from_front(pts)
        assert cfg.ideal.tolist() == [0.0, 0.0]
        assert cfg.nadir.tolist() == [1.0, 1.0]

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            MetricConfig(ideal=[0.0, 0.0], nadir=[1.0, 0.0])

    def test_normalized_hypervolume(self):
        cfg = MetricConfig(ideal=[0.0, 0.0], nadir=[1.0, 1.0])
        assert cfg.normalized_hypervolume(np.array([[0.55, 0.55]])) == pytest.approx(0.55 ** 2)
        assert cfg.normalized_hypervolume(np.empty((0, 2))) == 0.0
