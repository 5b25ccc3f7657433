"""Newton solver, norm-limited ML estimate and the perturbation-ignored estimator."""

import math

import numpy as np
import pytest
from scipy import optimize

from estimation.errors import DimensionMismatch, InvalidRadius, RankDeficient
from estimation.estimator import (
    SolverOptions,
    SolverStatus,
    has_recession_direction,
    mismodel_limit_mse,
    ml_estimate,
    perturbation_ignored_estimate,
    relate_ignored_to_ml,
    small_perturbation_relative_error,
    solve_unconstrained_v,
)
from estimation.likelihood import v_objective, v_to_w
from estimation.model import (
    PerturbedSignModel,
    RngSeed,
    make_gaussian_matrix,
    make_ones_row,
    simulate_measurements,
)
from estimation.numerics import std_normal_quantile


def _scalar_signs(n, positives):
    return np.where(np.arange(n) < positives, 1.0, -1.0)


@pytest.fixture
def vector_instance():
    H = make_gaussian_matrix(3, 200, RngSeed(31))
    model = PerturbedSignModel(H, 0.3, 1.0)
    y = simulate_measurements(model, [0.7, 0.5, -0.6], RngSeed(32))
    return model, y


class TestSolverOptions:

    def test_defaults(self):
        opts = SolverOptions()
        assert opts.grad_tol == 1e-10
        assert opts.max_iters == 100

    def test_rejects_unknown_fields(self):
        with pytest.raises(ValueError):
            SolverOptions(tolerance=1e-3)


class TestSolveUnconstrainedV:

    @pytest.mark.parametrize("positives", [5, 20, 31, 39])
    def test_scalar_closed_form(self, positives):
        """With H all ones the optimum is the quantile of the +1 fraction."""
        n = 40
        solution = solve_unconstrained_v(make_ones_row(n), _scalar_signs(n, positives))
        assert solution.converged
        assert solution.v[0] == pytest.approx(std_normal_quantile(positives / n), abs=1e-8)

    def test_scalar_closed_form_random_datasets(self):
        rng = np.random.default_rng(57)
        for _ in range(100):
            n = int(rng.integers(2, 2000))
            positives = int(rng.integers(1, n))
            y = rng.permutation(_scalar_signs(n, positives))
            solution = solve_unconstrained_v(make_ones_row(n), y)
            assert solution.converged, (n, positives)
            assert solution.v[0] == pytest.approx(std_normal_quantile(positives / n), abs=1e-8)

    def test_starting_point_does_not_matter(self, vector_instance):
        """Strict convexity: random starts reach the same minimizer."""
        model, y = vector_instance
        rng = np.random.default_rng(58)
        reference = solve_unconstrained_v(model.H, y)
        for _ in range(2):
            solution = solve_unconstrained_v(model.H, y, v0=0.5 * rng.standard_normal(3))
            assert solution.converged
            np.testing.assert_allclose(solution.v, reference.v, atol=1e-7)

    def test_quasi_separated_data_do_not_converge(self):
        """Margins that can only grow or stay at zero leave no finite minimizer."""
        H = np.array([[1.0, 2.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0, 0.0]])
        solution = solve_unconstrained_v(H, [1.0, 1.0, 1.0, -1.0, 1.0])
        assert not solution.converged
        assert solution.v[0] > 0

    def test_all_positive_signs_do_not_converge(self):
        solution = solve_unconstrained_v(make_ones_row(25), np.ones(25))
        assert not solution.converged
        assert solution.v[0] > 0

    def test_objective_trace_decreases(self, vector_instance):
        model, y = vector_instance
        trace = solve_unconstrained_v(model.H, y).objective_trace
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_matches_independent_minimizer(self, vector_instance):
        model, y = vector_instance
        solution = solve_unconstrained_v(model.H, y)
        assert solution.converged
        oracle = optimize.minimize(lambda v: v_objective(model.H, y, v), np.zeros(3),
                                   method="BFGS", options={"gtol": 1e-9})
        np.testing.assert_allclose(solution.v, oracle.x, atol=1e-5)

    def test_rank_deficient(self):
        H = np.array([[1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]])
        with pytest.raises(RankDeficient):
            solve_unconstrained_v(H, [1.0, -1.0, 1.0, -1.0])

    def test_fewer_measurements_than_parameters(self):
        with pytest.raises(RankDeficient):
            solve_unconstrained_v(np.eye(3)[:, :2], [1.0, -1.0])

    def test_mismatched_signs(self):
        with pytest.raises(DimensionMismatch):
            solve_unconstrained_v(make_ones_row(4), [1.0, -1.0])


class TestRecessionDirection:

    def test_complete_separation(self):
        assert has_recession_direction(make_ones_row(10), np.ones(10))

    def test_quasi_separation(self):
        H = np.array([[1.0, 2.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0, 0.0]])
        assert has_recession_direction(H, [1.0, 1.0, 1.0, -1.0, 1.0])

    def test_mixed_scalar_signs(self):
        assert not has_recession_direction(make_ones_row(40), _scalar_signs(40, 38))

    def test_overlapping_gaussian_data(self, vector_instance):
        model, y = vector_instance
        assert not has_recession_direction(model.H, y)


class TestMlEstimate:

    def test_interior(self):
        model = PerturbedSignModel(make_ones_row(40), 0.5, 1.0)
        report = ml_estimate(model, _scalar_signs(40, 36), R_w=4.0)
        assert report.status is SolverStatus.INTERIOR
        assert report.is_interior
        expected = v_to_w([std_normal_quantile(0.9)], 0.5, 1.0)
        np.testing.assert_allclose(report.w_hat, expected, rtol=1e-7)

    def test_projected_onto_norm_limit(self):
        model = PerturbedSignModel(make_ones_row(40), 0.5, 1.0)
        report = ml_estimate(model, _scalar_signs(40, 36), R_w=1.0)
        assert report.status is SolverStatus.PROJECTED
        assert report.w_hat[0] == pytest.approx(1.0, rel=1e-10)

    def test_beyond_unimodality_ball_is_not_interior(self):
        """38 of 40 positive signs put the v optimum outside ||v|| < 1/sigma_e."""
        model = PerturbedSignModel(make_ones_row(40), 0.5, 1.0)
        report = ml_estimate(model, _scalar_signs(40, 38), R_w=4.0)
        assert report.status is not SolverStatus.INTERIOR
        assert abs(report.w_hat[0]) <= 4.0 + 1e-8

    def test_separated_data_hit_the_limit(self):
        model = PerturbedSignModel(make_ones_row(30), 0.2, 1.0)
        report = ml_estimate(model, np.ones(30), R_w=3.0)
        assert report.status is SolverStatus.SEPARATED
        assert report.w_hat[0] == pytest.approx(3.0, rel=1e-10)

    def test_quasi_separated_data_are_separated(self):
        H = np.array([[1.0, 2.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0, 0.0]])
        model = PerturbedSignModel(H, 0.2, 1.0)
        report = ml_estimate(model, [1.0, 1.0, 1.0, -1.0, 1.0], R_w=3.0)
        assert report.status is SolverStatus.SEPARATED
        np.testing.assert_allclose(report.w_hat, [3.0, 0.0], atol=1e-8)

    def test_probit_reduction(self, vector_instance):
        model, y = vector_instance
        probit = PerturbedSignModel(model.H, 0.0, 2.0)
        report = ml_estimate(probit, y, R_w=100.0)
        assert report.is_interior
        np.testing.assert_allclose(report.w_hat, math.sqrt(2.0) * report.v_solution, rtol=1e-12)

    def test_norm_limit_respected(self, vector_instance):
        model, y = vector_instance
        for r_w in (0.1, 0.5, 1.0, 5.0):
            report = ml_estimate(model, y, R_w=r_w)
            assert np.linalg.norm(report.w_hat) <= r_w + 1e-8

    def test_invalid_radius(self, vector_instance):
        model, y = vector_instance
        with pytest.raises(InvalidRadius):
            ml_estimate(model, y, R_w=0.0)

    @pytest.mark.slow
    def test_consistency(self):
        w0 = np.array([0.7, 0.5, -0.6])
        errors = []
        for trial in range(50):
            H = make_gaussian_matrix(3, 5000, RngSeed(100, trial))
            model = PerturbedSignModel(H, 0.3, 1.0)
            y = simulate_measurements(model, w0, RngSeed(200, trial))
            report = ml_estimate(model, y, R_w=4.0 * np.linalg.norm(w0))
            errors.append(np.linalg.norm(report.w_hat - w0))
        assert np.median(errors) <= 0.15


class TestPerturbationIgnored:

    def test_equals_ml_when_unperturbed(self, vector_instance):
        model, y = vector_instance
        ignored = perturbation_ignored_estimate(model.H, y, 1.0, R_w=10.0)
        ml = ml_estimate(PerturbedSignModel(model.H, 0.0, 1.0), y, R_w=10.0)
        np.testing.assert_array_equal(ignored.w_hat, ml.w_hat)

    def test_parallel_and_shorter(self, vector_instance):
        model, y = vector_instance
        ml = ml_estimate(model, y, R_w=10.0)
        ignored = perturbation_ignored_estimate(model.H, y, model.sigma_n2, R_w=10.0)
        assert ml.is_interior and ignored.is_interior
        cosine = ml.w_hat @ ignored.w_hat / (np.linalg.norm(ml.w_hat) * np.linalg.norm(ignored.w_hat))
        assert cosine == pytest.approx(1.0, abs=1e-8)
        assert np.linalg.norm(ignored.w_hat) <= np.linalg.norm(ml.w_hat)
        np.testing.assert_allclose(
            relate_ignored_to_ml(ml.w_hat, model.sigma_e2, model.sigma_n2), ignored.w_hat,
            rtol=1e-9
        )


class TestMismodelRelations:

    def test_relate_zero(self):
        np.testing.assert_array_equal(relate_ignored_to_ml([0.0, 0.0], 0.4, 1.0), [0.0, 0.0])

    def test_relate_unperturbed_is_identity(self):
        np.testing.assert_allclose(relate_ignored_to_ml([0.3, -2.0], 0.0, 1.0), [0.3, -2.0])

    def test_relate_example(self):
        np.testing.assert_allclose(relate_ignored_to_ml([0.7, 0.5, -0.6], 0.4, 1.0),
                                   [0.58333333, 0.41666667, -0.5], atol=1e-8)

    def test_limit_mse_unperturbed(self):
        assert mismodel_limit_mse([0.7, 0.5, -0.6], 0.0, 1.0) == 0.0

    def test_limit_mse_example(self):
        assert mismodel_limit_mse([0.7, 0.5, -0.6], 0.4, 1.0) == pytest.approx(0.030556, abs=1e-6)

    def test_limit_mse_small_perturbation(self):
        w0 = np.array([0.7, 0.5, -0.6])
        sigma_e2 = 0.005
        approx = sigma_e2**2 / 4.0 * float(w0 @ w0) ** 3
        assert mismodel_limit_mse(w0, sigma_e2, 1.0) == pytest.approx(approx, rel=0.05)

    def test_small_perturbation_relative_error(self):
        assert small_perturbation_relative_error([1.0, 1.0], 0.01, 0.5) == pytest.approx(0.02)
