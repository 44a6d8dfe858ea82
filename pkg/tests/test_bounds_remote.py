import math

import numpy as np
import pytest
from scipy import integrate, stats

from shannon_bounds import bounds_remote as br
from shannon_bounds import dist_core as dc
from shannon_bounds import oracle_ba as ob
from shannon_bounds.errors import InfeasibleDistortion


def test_gaussian_reduction_closed_form():
    red = br.posterior_mean_reduction(dc.AdditiveNoiseModel(dc.Gaussian(0, 1), dc.Gaussian(0, 1)))
    assert red.construction == "closed form"
    assert red.delta0 == pytest.approx(0.5)
    assert red.v_variance == pytest.approx(0.5)
    pair = br.remote_rd_bounds(red, 0.75)
    assert pair.lower == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert pair.gap == 0.0


def test_posterior_moments_against_direct_quadrature():
    model = dc.AdditiveNoiseModel(dc.Uniform(-1, 1), dc.Gaussian(0, 0.3))
    y = np.array([-1.2, 0.0, 0.4, 2.0])
    fy, m, v = br.posterior_moments(model, y)
    sz = math.sqrt(0.3)
    for k, yy in enumerate(y):
        w = lambda x, p=0: 0.5 * x ** p * stats.norm.pdf(yy - x, scale=sz)
        z = integrate.quad(w, -1, 1)[0]
        mean = integrate.quad(lambda x: w(x, 1), -1, 1)[0] / z
        second = integrate.quad(lambda x: w(x, 2), -1, 1)[0] / z
        assert fy[k] == pytest.approx(z, rel=1e-10)
        assert m[k] == pytest.approx(mean, abs=1e-10)
        assert v[k] == pytest.approx(second - mean ** 2, abs=1e-10)


def test_reduction_total_variance():
    # Var(X) = Var(V) + delta0; the gridded pushforward carries trapezoid error
    for noise, tol in ((dc.Gaussian(0, 0.5), 1e-10), (dc.Uniform(-0.5, 0.5), 1e-6),
                       (dc.Laplace(0, 0.3), 1e-6)):
        model = dc.AdditiveNoiseModel(dc.Uniform(-1, 1), noise)
        red = br.posterior_mean_reduction(model)
        assert red.v_variance + red.delta0 == pytest.approx(1 / 3, abs=tol)


def test_gaussian_noise_uses_change_of_variables():
    model = dc.AdditiveNoiseModel(dc.Laplace(0, 1), dc.Gaussian(0, 0.5))
    red = br.posterior_mean_reduction(model)
    assert red.construction == "monotone change of variables"
    assert red.monotone
    assert red.v_entropy_power < red.v_variance


def test_non_gaussian_noise_uses_pushforward():
    model = dc.AdditiveNoiseModel(dc.Gaussian(0, 1), dc.Laplace(0, 0.5))
    red = br.posterior_mean_reduction(model)
    assert red.construction == "gridded pushforward"
    assert 0 < red.delta0 < 1
    assert red.v_entropy_power <= red.v_variance


def test_remote_infeasible_below_mmse():
    red = br.posterior_mean_reduction(dc.AdditiveNoiseModel(dc.Gaussian(0, 1), dc.Gaussian(0, 1)))
    with pytest.raises(InfeasibleDistortion):
        br.remote_rd_bounds(red, 0.5)


def test_awgn_remote_gaussian_worked_value():
    pair = br.awgn_remote_bounds(dc.Gaussian(0, 1), 1.0, 0.75)
    assert pair.lower == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert pair.upper == pytest.approx(0.5 * math.log(2), abs=1e-12)


def test_awgn_remote_below_threshold_is_invalid():
    pair = br.awgn_remote_bounds(dc.Gaussian(0, 1), 1.0, 0.4)
    assert not pair.lower_valid and not pair.upper_valid
    assert math.isnan(pair.lower) and math.isnan(pair.gap)


def test_additive_noise_gaussian_tight():
    model = dc.AdditiveNoiseModel(dc.Gaussian(0, 1), dc.Gaussian(0, 1))
    pair = br.additive_noise_remote_bounds(model, 0.75)
    assert pair.lower == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert pair.upper == pytest.approx(0.5 * math.log(2), abs=1e-12)


@pytest.mark.parametrize("delta", [0.12, 0.2])
def test_remote_forms_bracket_oracle(delta):
    model = dc.AdditiveNoiseModel(dc.Uniform(-1, 1), dc.Gaussian(0, 0.1))
    red = br.posterior_mean_reduction(model)
    rate = ob.remote_rd_oracle(model, delta)
    for pair in (br.remote_rd_bounds(red, delta), br.additive_noise_remote_bounds(model, delta, red),
                 br.awgn_remote_bounds(dc.Uniform(-1, 1), 0.1, delta)):
        if pair.lower_valid:
            assert pair.lower <= rate + 1e-2
        if pair.upper_valid:
            assert rate <= pair.upper + 1e-2
