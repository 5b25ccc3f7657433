"""Fisher information, CRLB forms, optimal-noise formulas and gap bounds."""

import math

import numpy as np
import pytest

from estimation.crlb import (
    approx_opt_sigma_e2,
    approx_opt_sigma_n2,
    chernoff_log_objective,
    crlb_gap_bounds,
    fim_and_crlb,
    grid_argmin,
    lambda_diag,
    optimal_sigma_e2,
    optimal_sigma_n2,
    scalar_crlb,
    scalar_crlb_chernoff,
    shrink_matrix,
    split_noise_variances,
)
from estimation.errors import DomainError, SingularFim
from estimation.model import PerturbedSignModel, RngSeed, make_gaussian_matrix, make_ones_row
from estimation.numerics import std_normal_cdf, std_normal_log_pdf, sym_eigenvalues


class TestLambdaDiag:

    def test_orthogonal_measurement(self):
        model = PerturbedSignModel(np.array([[1.0, 0.0], [0.0, 1.0]]), 0.2, 1.0)
        lam = lambda_diag(model, [0.0, 2.0])
        sigma_z2 = 4.0 * 0.2 + 1.0
        assert lam[0] == pytest.approx(2.0 / (math.pi * sigma_z2), rel=1e-12)

    def test_closed_form(self):
        H = make_gaussian_matrix(2, 20, RngSeed(3))
        w = np.array([0.8, -0.4])
        model = PerturbedSignModel(H, 0.3, 0.7)
        sigma_z2 = float(w @ w) * 0.3 + 0.7
        t = H.T @ w / math.sqrt(sigma_z2)
        phi = np.exp(std_normal_log_pdf(t))
        expected = phi**2 / (sigma_z2 * std_normal_cdf(t) * std_normal_cdf(-t))
        np.testing.assert_allclose(lambda_diag(model, w), expected, rtol=1e-10)

    def test_vanishes_with_growing_noise(self):
        sigma_n2 = np.geomspace(1.0, 1e4, 40)
        lam = np.array([lambda_diag(PerturbedSignModel([[1.0]], 0.1, s), [1.0])[0]
                        for s in sigma_n2])
        assert np.all(np.diff(lam) < 0)
        assert lam[-1] < 1e-3


class TestShrinkMatrix:

    def test_unperturbed(self):
        H = make_gaussian_matrix(3, 5, RngSeed(1))
        np.testing.assert_array_equal(shrink_matrix(PerturbedSignModel(H, 0.0, 1.0), [1.0, 2.0, 3.0]), H)

    def test_sherman_morrison_inverse(self):
        w = np.array([0.7, 0.5, -0.6])
        sigma_e2, sigma_n2 = 0.4, 1.0
        sigma_z2 = float(w @ w) * sigma_e2 + sigma_n2
        left = np.eye(3) - (sigma_e2 / sigma_z2) * np.outer(w, w)
        right = np.eye(3) + (sigma_e2 / sigma_n2) * np.outer(w, w)
        np.testing.assert_allclose(left @ right, np.eye(3), atol=1e-12)
        model = PerturbedSignModel(np.eye(3), sigma_e2, sigma_n2)
        np.testing.assert_allclose(shrink_matrix(model, w), left, atol=1e-15)

    def test_rank_drop_without_additive_noise(self):
        H = make_gaussian_matrix(3, 10, RngSeed(2))
        w = np.array([1.0, 0.5, -0.3])
        M = shrink_matrix(PerturbedSignModel(H, 0.5, 1e-12), w)
        np.testing.assert_allclose(w @ M, 0.0, atol=1e-10)
        eigenvalues = sym_eigenvalues(M @ M.T)
        assert eigenvalues[-1] < 1e-12 * eigenvalues[0]


class TestFimAndCrlb:

    def test_scalar_model_matches_closed_form(self):
        rng = np.random.default_rng(81)
        for _ in range(100):
            w = float(rng.uniform(-3.0, 3.0))
            sigma_e2 = float(rng.uniform(0.0, 1.0))
            sigma_n2 = float(rng.uniform(0.05, 2.0))
            n = int(rng.integers(1, 1000))
            model = PerturbedSignModel(make_ones_row(n), sigma_e2, sigma_n2)
            report = fim_and_crlb(model, [w])
            assert report.crlb_trace == pytest.approx(scalar_crlb(w, sigma_e2, sigma_n2, n),
                                                      rel=1e-9), (w, sigma_e2, sigma_n2, n)

    def test_probit_reduction(self):
        H = make_gaussian_matrix(2, 50, RngSeed(4))
        model = PerturbedSignModel(H, 0.0, 1.0)
        report = fim_and_crlb(model, [0.3, 0.9])
        np.testing.assert_allclose(report.fim, (H * report.lambda_diag) @ H.T, rtol=1e-12)

    def test_inverse(self):
        H = make_gaussian_matrix(3, 100, RngSeed(5))
        report = fim_and_crlb(PerturbedSignModel(H, 0.3, 1.0), [0.7, 0.5, -0.6])
        np.testing.assert_allclose(report.fim @ report.crlb_matrix, np.eye(3), atol=1e-9)
        assert report.crlb_trace > 0

    def test_singular_without_additive_noise(self):
        H = make_gaussian_matrix(3, 50, RngSeed(6))
        with pytest.raises(SingularFim):
            fim_and_crlb(PerturbedSignModel(H, 0.5, 1e-12), [1.0, 0.5, -0.3])


class TestScalarCrlb:

    def test_clairvoyant_ratio(self):
        assert scalar_crlb(0.0, 0.0, 1.0, 1) == pytest.approx(math.pi / 2.0, rel=1e-12)

    def test_optimum_over_additive_noise(self):
        grid = np.geomspace(1e-2, 10.0, 4000)
        values = [scalar_crlb(1.0, 0.3, s, 1) for s in grid]
        assert grid[int(np.argmin(values))] == pytest.approx(0.88, abs=0.02)

    def test_optimum_over_perturbation(self):
        grid = np.geomspace(1e-4, 1.0, 4000)
        values = [scalar_crlb(1.0, s, 0.1, 1) for s in grid]
        assert grid[int(np.argmin(values))] == pytest.approx(0.0475, abs=0.005)

    def test_increases_with_perturbation_past_optimum(self):
        grid = np.geomspace(0.06, 10.0, 400)
        values = np.array([scalar_crlb(1.0, s, 0.1, 1) for s in grid])
        assert np.all(np.diff(values) > 0)

    def test_scales_inversely_with_n(self):
        assert scalar_crlb(1.0, 0.3, 1.0, 100) == pytest.approx(
            scalar_crlb(1.0, 0.3, 1.0, 1) / 100.0, rel=1e-12
        )

    def test_needs_additive_noise(self):
        with pytest.raises(DomainError):
            scalar_crlb(1.0, 0.3, 0.0, 1)


class TestChernoff:

    def test_tight_at_zero(self):
        assert scalar_crlb_chernoff(0.0, 0.4, 2.0, 3) == pytest.approx(math.pi * 2.0 / 6.0)
        assert scalar_crlb_chernoff(0.0, 0.4, 2.0, 3) == pytest.approx(scalar_crlb(0.0, 0.4, 2.0, 3))

    def test_direct_evaluation(self):
        sigma_z2 = 1.3
        expected = math.pi * sigma_z2 / 2.0 * 1.3**2 * math.exp(1.0 / (2.0 * sigma_z2))
        assert scalar_crlb_chernoff(1.0, 0.3, 1.0, 1) == pytest.approx(expected, rel=1e-12)

    def test_dominates_crlb(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            w = rng.uniform(-5.0, 5.0)
            sigma_e2 = rng.uniform(0.0, 2.0)
            sigma_n2 = rng.uniform(0.05, 5.0)
            assert scalar_crlb_chernoff(w, sigma_e2, sigma_n2, 1) >= \
                scalar_crlb(w, sigma_e2, sigma_n2, 1) * (1.0 - 1e-12)

    def test_log_objective_differs_by_constant(self):
        grid = np.geomspace(0.01, 10.0, 50)
        difference = [
            chernoff_log_objective(s, 0.3, 1.0) - math.log(scalar_crlb_chernoff(1.0, 0.3, s, 7))
            for s in grid
        ]
        np.testing.assert_allclose(difference, difference[0], atol=1e-10)

    def test_log_objective_value(self):
        assert chernoff_log_objective(1.0, 0.0, 1.0) == pytest.approx(0.5)


class TestOptimalNoiseFormulas:

    def test_sigma_n2_unperturbed(self):
        assert approx_opt_sigma_n2(1.0, 0.0) == pytest.approx(0.5)

    def test_sigma_n2_example(self):
        assert approx_opt_sigma_n2(1.0, 0.3) == pytest.approx(0.9831, abs=1e-4)

    def test_sigma_n2_scales_with_w_squared(self):
        assert approx_opt_sigma_n2(2.0, 0.3) == pytest.approx(4.0 * approx_opt_sigma_n2(1.0, 0.3))

    def test_sigma_n2_is_stationary_point(self):
        argmin = grid_argmin(lambda s: chernoff_log_objective(s, 0.3, 1.0), 1e-3, 1e2)
        assert argmin == pytest.approx(approx_opt_sigma_n2(1.0, 0.3), rel=1e-4)

    def test_sigma_e2_example(self):
        assert approx_opt_sigma_e2(1.0, 0.1) == pytest.approx(0.0667, abs=1e-4)

    def test_sigma_e2_boundary(self):
        assert approx_opt_sigma_e2(1.0, 1.0 / 6.0) == pytest.approx(0.0, abs=1e-15)
        assert approx_opt_sigma_e2(1.0, 1.0) == 0.0

    @pytest.mark.parametrize("formula", [approx_opt_sigma_n2, approx_opt_sigma_e2])
    def test_zero_parameter(self, formula):
        with pytest.raises(DomainError):
            formula(0.0, 0.3)

    def test_searched_optima(self):
        assert optimal_sigma_n2(1.0, 0.3) == pytest.approx(0.88, abs=0.02)
        assert optimal_sigma_e2(1.0, 0.1) == pytest.approx(0.0475, abs=0.005)

    def test_grid_argmin_refines(self):
        assert grid_argmin(lambda x: (math.log(x) - 1.0) ** 2, 0.1, 100.0, 50) == \
            pytest.approx(math.e, rel=1e-6)


class TestGapBounds:

    def test_split_noise_variances(self):
        sigma_e2, sigma_n2 = split_noise_variances(4.0, 3.0, 2.0)
        assert sigma_n2 == pytest.approx(1.0)
        assert sigma_e2 * 2.0 / sigma_n2 == pytest.approx(3.0)
        assert sigma_e2 * 2.0 + sigma_n2 == pytest.approx(4.0)

    def test_unperturbed_is_zero(self):
        H = make_gaussian_matrix(4, 300, RngSeed(9))
        bounds = crlb_gap_bounds(PerturbedSignModel(H, 0.0, 2.0), [0.5, -1.0, 0.2, 0.3])
        assert bounds.lower == 0.0
        assert bounds.upper == 0.0
        assert bounds.gap == pytest.approx(0.0, abs=1e-12)

    def test_scalar_bounds_coincide(self):
        model = PerturbedSignModel(make_ones_row(50), 0.2, 1.0)
        bounds = crlb_gap_bounds(model, [1.5])
        assert bounds.lower == pytest.approx(bounds.upper, rel=1e-12)
        assert bounds.gap == pytest.approx(bounds.lower, rel=1e-8)

    def test_sandwich(self):
        rng = np.random.default_rng(10)
        w = rng.standard_normal(4)
        H = make_gaussian_matrix(4, 300, RngSeed(11))
        sigma_z2 = 4.0 * float(w @ w)
        for gamma in np.geomspace(1e-2, 1e2, 25):
            sigma_e2, sigma_n2 = split_noise_variances(sigma_z2, gamma, float(w @ w))
            bounds = crlb_gap_bounds(PerturbedSignModel(H, sigma_e2, sigma_n2), w)
            assert bounds.lower * (1 - 1e-9) <= bounds.gap <= bounds.upper * (1 + 1e-9)
