import math

import numpy as np
import pytest
from scipy import stats

from shannon_bounds import bounds_point as bp
from shannon_bounds import dist_core as dc
from shannon_bounds import oracle_ba as ob
from shannon_bounds.errors import InfeasibleDistortion, PreconditionError, SourceError


# --- discretization ---------------------------------------------------------------


def test_discretize_gaussian_truncation():
    src = ob.discretize(dc.Gaussian(0, 1))
    assert src.truncation_mass == pytest.approx(2 * stats.norm.sf(8), rel=1e-6)
    assert src.truncation_mass < 1e-14
    assert src.pmf.sum() == pytest.approx(1.0, abs=1e-15)
    # midpoint cells add h**2 / 12 to the variance
    h = 16 / 1024
    assert src.variance == pytest.approx(1.0 + h * h / 12, abs=1e-8)


def test_discretize_uniform_is_exact():
    src = ob.discretize(dc.Uniform(0, 1), 256)
    assert src.truncation_mass == 0.0
    assert np.allclose(src.pmf, 1 / 256, rtol=1e-12)
    assert np.allclose(src.points, (np.arange(256) + 0.5) / 256)


def test_discretize_laplace_needs_wide_range():
    with pytest.raises(SourceError):
        ob.discretize(dc.Laplace(0, 1))
    src = ob.discretize(dc.Laplace(0, 1), k_sigma=12)
    assert src.truncation_mass == pytest.approx(math.exp(-12 * math.sqrt(2)), rel=1e-6)
    assert src.truncation_mass < 1e-5


def test_discretize_rejects_tiny_grid():
    with pytest.raises(PreconditionError):
        ob.discretize(dc.Gaussian(0, 1), n=8)


def test_discretized_source_validates():
    with pytest.raises(SourceError):
        ob.DiscretizedSource(np.array([0.0, 1.0]), np.array([0.5, -0.5]))
    with pytest.raises(SourceError):
        ob.DiscretizedSource(np.array([1.0, 0.0]), np.array([0.5, 0.5]))


# --- Blahut-Arimoto at a fixed slope ------------------------------------------------


def test_zero_slope_is_zero_rate():
    src = ob.discretize(dc.Gaussian(0, 1), 256)
    sol = ob.blahut_arimoto_rd(src, 0.0)
    assert sol.rate == 0.0
    assert sol.distortion_achieved == pytest.approx(src.variance, rel=1e-3)
    assert sol.output_pmf.sum() == 1.0


def test_positive_slope_rejected():
    with pytest.raises(PreconditionError):
        ob.blahut_arimoto_rd(ob.discretize(dc.Gaussian(0, 1), 256), 0.5)


def test_fixed_slope_certificate_brackets_gaussian_curve():
    src = ob.discretize(dc.Gaussian(0, 1), 512)
    sol = ob.blahut_arimoto_rd(src, -2.0, gap_tol=1e-4)
    assert sol.converged
    assert sol.rate_lower <= sol.rate
    true = 0.5 * math.log(1 / sol.distortion_achieved)
    # the grid costs a little accuracy on top of the certified gap
    assert sol.rate_lower - 1e-3 <= true <= sol.rate + 1e-3
    # the optimal Gaussian test channel has slope -1 / (2 D)
    assert sol.distortion_achieved == pytest.approx(0.25, abs=2e-3)


# --- targeted distortion ------------------------------------------------------------


@pytest.mark.parametrize("delta", [0.25, 0.5])
def test_gaussian_rate_distortion(delta):
    sol = ob.rd_at_distortion(ob.discretize(dc.Gaussian(0, 1)), delta)
    assert sol.rate == pytest.approx(0.5 * math.log(1 / delta), abs=5e-3)
    assert sol.distortion_achieved == pytest.approx(delta, rel=1e-6)
    assert sol.converged
    assert sol.certified_gap < ob.GAP_TOL


def test_uniform_oracle_inside_sandwich():
    src = dc.Uniform(0, 1)
    pair = bp.classic_rd_bounds(src, 0.02 / 12)
    rate = ob.rd_at_distortion(ob.discretize(src, 1024), 0.02 / 12).rate
    assert pair.lower <= rate <= pair.upper


def test_laplace_oracle_inside_sandwich():
    src = dc.Laplace(0, 1)
    delta = 0.1 * dc.variance(src)
    pair = bp.classic_rd_bounds(src, delta)
    rate = ob.rd_at_distortion(ob.discretize(src, k_sigma=12), delta).rate
    assert pair.lower <= rate <= pair.upper


def test_rate_curve_monotone_and_convex():
    src = ob.discretize(dc.Uniform(0, 1), 512)
    deltas = np.array([0.004, 0.008, 0.012, 0.016, 0.02])
    rates = np.array([ob.rd_at_distortion(src, d).rate for d in deltas])
    assert np.all(np.diff(rates) < 0)
    assert np.all(np.diff(rates, 2) >= -2 * ob.GAP_TOL)


def test_zero_rate_distortion_returns_zero():
    src = ob.discretize(dc.Gaussian(0, 1), 256)
    # no grid point sits at the mean, so the zero-rate distortion exceeds the variance
    zero = ob.blahut_arimoto_rd(src, 0.0).distortion_achieved
    assert zero > src.variance
    assert ob.rd_at_distortion(src, zero).rate == 0.0


@pytest.mark.parametrize("delta", [0.0, -0.1, 2.0])
def test_infeasible_distortion(delta):
    with pytest.raises(InfeasibleDistortion):
        ob.rd_at_distortion(ob.discretize(dc.Gaussian(0, 1), 256), delta)


def test_refined_grid():
    src = ob.discretize(dc.Gaussian(0, 1), 64)
    y = ob.refined_grid(src, 2)
    assert len(y) == 127
    assert np.allclose(y[::2], src.points)


# --- side information and remote ------------------------------------------------------


def test_conditional_oracle_with_independent_side_info_is_classic():
    joint = dc.product_joint(dc.Uniform(-1, 1), dc.Gaussian(0, 1))
    grid = joint.to_grid(257)
    marginal = ob.DiscretizedSource(grid.x1, np.trapezoid(grid.density, grid.x2, axis=1))
    classic = ob.rd_at_distortion(marginal, 0.15).rate
    assert ob.conditional_rd_oracle(joint, 0.15, w_cells=8) == pytest.approx(classic, abs=2 * ob.GAP_TOL)


def test_conditional_oracle_rejects_few_cells():
    with pytest.raises(PreconditionError):
        ob.conditional_rd_oracle(dc.BivariateGaussian((1, 1), 0.5), 0.25, w_cells=4)


def test_conditional_oracle_infeasible():
    with pytest.raises(InfeasibleDistortion):
        ob.conditional_rd_oracle(dc.BivariateGaussian((1, 1), 0.5), 5.0, w_cells=8)


def test_remote_oracle_gaussian():
    model = dc.AdditiveNoiseModel(dc.Gaussian(0, 1), dc.Gaussian(0, 1))
    assert ob.remote_rd_oracle(model, 0.75) == pytest.approx(0.5 * math.log(2), abs=1e-2)
    sol = ob.remote_rd_oracle(model, 0.75, full_output=True)
    assert sol.distortion_achieved == pytest.approx(0.75, rel=1e-6)


def test_remote_oracle_zero_rate_and_floor():
    model = dc.AdditiveNoiseModel(dc.Gaussian(0, 1), dc.Gaussian(0, 1))
    assert ob.remote_rd_oracle(model, 1.01) == 0.0
    with pytest.raises(InfeasibleDistortion):
        ob.remote_rd_oracle(model, 0.4)


# --- covariance searches ----------------------------------------------------------


def test_d_matrix_search_diagonal_case():
    val, D = ob.d_matrix_search(np.eye(2), 0.3, 0.2)
    assert val == pytest.approx(0.06, abs=1e-8)
    assert abs(D[0, 1]) < 1e-6


def test_d_matrix_search_rejects_singular():
    with pytest.raises(PreconditionError):
        ob.d_matrix_search(np.ones((2, 2)), 0.1, 0.1)


def test_lemma2_search_single_point_is_objective_at_k():
    rho, lam = 0.5, 0.3
    at_k = ob.lemma2_objective(1.0, 1.0, rho, lam)
    assert ob.lemma2_covariance_search(rho, lam, grid_n=1) == pytest.approx(at_k, abs=1e-12)
    assert ob.lemma2_covariance_search(rho, lam) <= at_k + 1e-12
