import numpy as np
import pytest

from ckdro.embedding import (
    AmbiguityBall,
    Dataset,
    adaptive_radius,
    ambiguity_ball,
    conditional_weights_augmented,
    conditional_weights_plain,
    conditional_weights_plain_batch,
    mmd,
    regularization_schedule,
)
from ckdro.kernels import Gaussian, rkhs_distance, rkhs_distances

NEAR_EPS = 1.0 / 3.0 + 2.0**-0.25  # hand 2x2 solve plus radius formula
FAR_EPS = 0.5 + 2.0**-0.25


def single_pair():
    return Dataset(xs=np.array([[0.0]]), ys=np.array([[1.5]]))


class TestDataset:
    def test_validation(self):
        with pytest.raises(ValueError, match="equal length"):
            Dataset(xs=np.zeros((2, 1)), ys=np.zeros((3, 1)))
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(xs=np.array([[np.nan]]), ys=np.array([[1.0]]))
        with pytest.raises(ValueError, match="at least one"):
            Dataset(xs=np.zeros((0, 1)), ys=np.zeros((0, 1)))

    def test_without(self):
        ds = Dataset(xs=np.arange(4.0)[:, None], ys=np.arange(4.0)[:, None] * 2)
        cut = ds.without(1)
        np.testing.assert_array_equal(cut.xs[:, 0], [0.0, 2.0, 3.0])


class TestSchedule:
    def test_values(self):
        assert regularization_schedule(1, 1.0) == 1.0
        assert regularization_schedule(16, 1.0) == pytest.approx(0.5, abs=1e-15)
        assert regularization_schedule(10_000, 0.2) == pytest.approx(0.02, abs=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            regularization_schedule(0, 1.0)
        with pytest.raises(ValueError):
            regularization_schedule(10, 0.0)


class TestPlainWeights:
    def test_single_point_shrinkage(self):
        # (1 + lambda) w = 1 at the sample itself
        w = conditional_weights_plain(single_pair(), Gaussian(1.0), 0.5, [0.0])
        assert w[0] == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_far_query_vanishes(self):
        w = conditional_weights_plain(single_pair(), Gaussian(1.0), 0.5, [1e6])
        assert abs(w[0]) < 1e-12

    def test_midpoint_symmetry(self):
        ds = Dataset(xs=np.array([[-1.0], [1.0]]), ys=np.array([[0.0], [5.0]]))
        w = conditional_weights_plain(ds, Gaussian(1.0), 0.3, [0.0])
        assert w[0] == pytest.approx(w[1], abs=1e-12)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(4)
        ds = Dataset(xs=rng.normal(0, 1, (12, 2)), ys=rng.normal(0, 1, (12, 1)))
        perm = rng.permutation(12)
        shuffled = Dataset(xs=ds.xs[perm], ys=ds.ys[perm])
        x = rng.normal(0, 1, 2)
        w = conditional_weights_plain(ds, Gaussian(0.7), 0.2, x)
        w_perm = conditional_weights_plain(shuffled, Gaussian(0.7), 0.2, x)
        np.testing.assert_allclose(w[perm], w_perm, atol=1e-10)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(8)
        ds = Dataset(xs=rng.normal(0, 1, (15, 2)), ys=rng.normal(0, 1, (15, 1)))
        queries = rng.normal(0, 1, (4, 2))
        batch = conditional_weights_plain_batch(ds, Gaussian(1.0), 0.4, queries)
        for row, q in zip(batch, queries):
            np.testing.assert_allclose(
                row, conditional_weights_plain(ds, Gaussian(1.0), 0.4, q), atol=1e-12
            )

    def test_lambda_required_positive(self):
        with pytest.raises(ValueError):
            conditional_weights_plain(single_pair(), Gaussian(1.0), 0.0, [0.0])


class TestAugmentedWeights:
    def test_near_query_hand_case(self):
        # augmented system [[2,1],[1,2]] beta = [1,1]
        w = conditional_weights_augmented(single_pair(), Gaussian(1.0), 0.5, [0.0], m=1)
        np.testing.assert_allclose(w.beta, [1.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_far_query_hand_case(self):
        # k(x1, x) underflows to zero: system 2I beta = [0, 1]
        w = conditional_weights_augmented(single_pair(), Gaussian(1.0), 0.5, [4e4], m=1)
        np.testing.assert_allclose(w.beta, [0.0, 0.5], atol=1e-12)

    def test_m_bounds(self):
        with pytest.raises(ValueError, match="m must be"):
            conditional_weights_augmented(single_pair(), Gaussian(1.0), 0.5, [0.0], m=2)
        with pytest.raises(ValueError, match="non-finite"):
            conditional_weights_augmented(single_pair(), Gaussian(1.0), 0.5, [np.inf])

    def test_nearest_selection_ties_by_index(self):
        ds = Dataset(
            xs=np.array([[1.0], [-1.0], [3.0]]), ys=np.array([[0.0], [1.0], [2.0]])
        )
        w = conditional_weights_augmented(ds, Gaussian(1.0), 0.5, [0.0], m=1)
        assert list(w.sample_indices) == [0]  # tie between rows 0 and 1

    def test_truncated_system_matches_plain(self):
        rng = np.random.default_rng(12)
        ds = Dataset(xs=rng.normal(0, 1, (30, 2)), ys=rng.normal(0, 1, (30, 1)))
        x = rng.normal(0, 1, 2)
        m = 8
        w = conditional_weights_augmented(ds, Gaussian(1.0), 0.3, x, m=m)
        sub = Dataset(ds.xs[w.sample_indices], ds.ys[w.sample_indices])
        plain = conditional_weights_plain(sub, Gaussian(1.0), 0.3, x)
        # removing the fictitious row/column and its lam*(m+1) -> lam*m shift
        # recovers the plain estimator on the selected subset
        kq = Gaussian(1.0).pairwise(sub.xs, np.atleast_2d(x))[:, 0]
        kmm = Gaussian(1.0).pairwise(sub.xs, sub.xs)
        direct = np.linalg.solve(kmm + 0.3 * m * np.eye(m), kq)
        np.testing.assert_allclose(direct, plain, atol=1e-10)

    def test_fictitious_weight_grows_with_distance(self):
        rng = np.random.default_rng(1)
        xs = rng.normal(0.0, 0.2, (40, 1))
        ds = Dataset(xs=xs, ys=rng.normal(0, 1, (40, 1)))
        k = Gaussian(1.0)
        near = conditional_weights_augmented(ds, k, 0.2, xs[0], m=40)
        far_x = np.array([3.0])
        assert (
            rkhs_distances(k, ds.xs, far_x).min()
            >= rkhs_distances(k, ds.xs, xs[0]).min() + 0.5
        )
        far = conditional_weights_augmented(ds, k, 0.2, far_x, m=40)
        assert abs(near.fictitious) <= abs(far.fictitious)


class TestRadius:
    def test_hand_values(self):
        w = conditional_weights_augmented(single_pair(), Gaussian(1.0), 0.5, [0.0], m=1)
        assert adaptive_radius(w, 1.0, 1.0) == pytest.approx(NEAR_EPS, abs=1e-12)
        far = conditional_weights_augmented(single_pair(), Gaussian(1.0), 0.5, [4e4], m=1)
        assert adaptive_radius(far, 1.0, 1.0) == pytest.approx(FAR_EPS, abs=1e-12)
        assert adaptive_radius(far, 1.0, 1.0) > adaptive_radius(w, 1.0, 1.0)

    def test_formula_random(self):
        from ckdro.embedding import EmbeddingWeights

        rng = np.random.default_rng(3)
        for _ in range(50):
            m = int(rng.integers(1, 20))
            beta = rng.normal(0, 1, m + 1)
            ew = EmbeddingWeights(
                beta=beta, sample_indices=np.arange(m), lam=0.1, query=np.zeros(1)
            )
            r, g = float(rng.uniform(0.1, 3)), float(rng.uniform(0.1, 3))
            expected = abs(beta[-1]) * r + g * (m + 1) ** -0.25
            assert adaptive_radius(ew, r, g) == pytest.approx(expected, rel=1e-15)


class TestAmbiguityBall:
    def test_near_query_ball(self):
        ds = single_pair()
        w = conditional_weights_augmented(ds, Gaussian(1.0), 0.5, [0.0], m=1)
        ball = ambiguity_ball(w, ds, r_bound=1.0, gamma=1.0)
        np.testing.assert_allclose(ball.center_weights, [1.0 / 3.0], atol=1e-12)
        np.testing.assert_array_equal(ball.center_points, [[1.5]])
        assert ball.radius == pytest.approx(NEAR_EPS, abs=1e-12)

    def test_fixed_radius_overrides(self):
        ds = single_pair()
        w = conditional_weights_augmented(ds, Gaussian(1.0), 0.5, [0.0], m=1)
        for eps in (0.15, 3.0):
            ball = ambiguity_ball(w, ds, r_bound=1.0, gamma=1.0, radius=eps)
            assert ball.radius == eps
            np.testing.assert_allclose(ball.center_weights, [1.0 / 3.0], atol=1e-12)

    def test_r_bound_from_kernel(self):
        ds = single_pair()
        w = conditional_weights_augmented(ds, Gaussian(1.0), 0.5, [0.0], m=1)
        ball = ambiguity_ball(w, ds, kernel_y=Gaussian(2.0), gamma=1.0)
        assert ball.radius == pytest.approx(NEAR_EPS, abs=1e-12)


class TestMmd:
    def test_identical_expansions(self):
        pts = np.array([[0.0], [1.0]])
        w = np.array([0.4, 0.6])
        assert mmd(Gaussian(1.0), pts, w, pts, w) == 0.0

    def test_two_diracs(self):
        k = Gaussian(1.0)
        a, b = np.array([0.0]), np.array([1.7])
        assert mmd(k, a[None], [1.0], b[None], [1.0]) == pytest.approx(
            rkhs_distance(k, a, b), abs=1e-12
        )

    def test_double_sum_oracle(self):
        rng = np.random.default_rng(6)
        k = Gaussian(0.8)
        pa, pb = rng.normal(0, 1, (5, 2)), rng.normal(0, 1, (4, 2))
        wa, wb = rng.normal(0, 1, 5), rng.normal(0, 1, 4)
        pts = np.vstack([pa, pb])
        v = np.concatenate([wa, -wb])
        brute = 0.0
        for i in range(9):
            for j in range(9):
                brute += v[i] * v[j] * k.pairwise(pts[i][None], pts[j][None])[0, 0]
        assert mmd(k, pa, wa, pb, wb) ** 2 == pytest.approx(brute, abs=1e-10)
