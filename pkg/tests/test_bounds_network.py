import math

import numpy as np
import pytest

from shannon_bounds import bounds_network as bn
from shannon_bounds import bounds_remote as br
from shannon_bounds import dist_core as dc
from shannon_bounds import oracle_ba as ob
from shannon_bounds.errors import InfeasibleDistortion, PreconditionError


def gw(source, delta, rp=0.0):
    return bn.gray_wyner_bounds(bn.GrayWynerQuery(source, delta, rp))


# --- Gray-Wyner ----------------------------------------------------------------


def test_gray_wyner_worked_value():
    pair = gw(dc.BivariateGaussian((1, 1), 0.5), 0.75)
    assert pair.regime == "high"
    assert pair.lower == pytest.approx(0.5 * math.log(1.5), abs=1e-12)
    assert pair.upper == pytest.approx(0.5 * math.log(1.5), abs=1e-12)


def test_gray_wyner_low_regime_gaussian():
    pair = gw(dc.BivariateGaussian((1, 1), 0.5), 0.2)
    assert pair.regime == "low"
    assert pair.lower == pytest.approx(0.5 * math.log(0.75 / 0.04), abs=1e-12)
    assert pair.gap == pytest.approx(0.0, abs=1e-12)


def test_gray_wyner_depends_on_delta_times_exp_rp():
    b = dc.BivariateGaussian((1, 1), 0.5)
    a = gw(b, 0.3, 0.4)
    c = gw(b, 0.3 * math.exp(0.4))
    assert a.lower == pytest.approx(c.lower, abs=1e-14)


def test_gray_wyner_scales_with_variance():
    # scaling both components by 2 and the distortion by 4 leaves the rates unchanged
    for t in (0.2, 0.7):
        a = gw(dc.BivariateGaussian((1, 1), 0.5), t)
        b = gw(dc.BivariateGaussian((4, 4), 0.5), 4 * t)
        assert b.lower == pytest.approx(a.lower, abs=1e-12)
        assert b.upper == pytest.approx(a.upper, abs=1e-12)


def test_gray_wyner_trivial_regime():
    pair = gw(dc.BivariateGaussian((1, 1), 0.5), 1.2)
    assert pair.regime == "trivial"
    assert (pair.lower, pair.upper) == (0.0, 0.0)


def test_gray_wyner_continuous_at_boundary():
    b = dc.BivariateGaussian((1, 1), 0.4)
    lo, hi = gw(b, 0.6 * (1 - 1e-12)), gw(b, 0.6 * (1 + 1e-12))
    assert (lo.regime, hi.regime) == ("low", "high")
    assert lo.lower == pytest.approx(hi.lower, abs=1e-9)
    assert lo.upper == pytest.approx(hi.upper, abs=1e-9)


def test_gray_wyner_requires_symmetry():
    with pytest.raises(PreconditionError):
        bn.GrayWynerQuery(dc.BivariateGaussian((1, 2), 0.5), 0.1)


def test_gray_wyner_non_gaussian_gap():
    cov = ((0.5, 0.2), (0.2, 0.5))
    mix = dc.BivariateGaussianMixture((0.5, 0.5), ((1, 1), (-1, -1)), (cov, cov))
    c = mix.covariance
    want = 0.5 * math.log(np.linalg.det(c) / dc.joint_entropy_power(mix) ** 2)
    for t in (0.1, 0.4):
        assert gw(mix, t * c[0, 0]).gap == pytest.approx(want, abs=1e-9)


# --- Gray-Wyner machinery --------------------------------------------------------


def test_lagrangian_maximized_at_nu_star():
    rho, t = 0.5, 0.75
    n2 = 0.75
    nu = np.linspace(0.5 + 1e-4, 1.0, 4001)
    vals = np.array([bn.gw_lagrangian(v, rho, t, n2) for v in nu])
    star = bn.gw_nu_star(rho, t)
    assert star == pytest.approx(0.75)
    assert bn.gw_lagrangian(star, rho, t, n2) >= vals.max() - 1e-12
    assert np.diff(vals, 2).max() <= 0
    assert bn.gw_lagrangian(star, rho, t, n2) == pytest.approx(0.5 * math.log(1.5), abs=1e-12)


def test_lemma2_closed_form_value():
    assert bn.gw_lemma2_rhs(0.5, 0.5) == pytest.approx(-1.203176978866, abs=1e-9)


@pytest.mark.parametrize("rho, lam", [(0.5, 0.5), (0.9, 0.3), (0.7, 0.1)])
def test_lemma2_matches_covariance_search(rho, lam):
    assert bn.gw_lemma2_rhs(lam, rho) <= ob.lemma2_covariance_search(rho, lam) + 1e-3


def test_lemma2_rejects_lambda_above_rho():
    with pytest.raises(PreconditionError):
        bn.gw_lemma2_rhs(0.6, 0.5)


@pytest.mark.parametrize("rho, t, kind", [(0.5, 0.75, "scalar"), (0.5, 0.3, "two_dimensional"),
                                          (-0.5, 0.3, "two_dimensional"), (0.8, 0.9, "scalar")])
def test_constructions_hit_target(rho, t, kind):
    con = bn.gw_construction(rho, t)
    assert con.kind == kind
    assert con.achieved_mmse == pytest.approx(t, abs=1e-12)
    pair = gw(dc.BivariateGaussian((1, 1), rho), t)
    assert con.achieved_common_rate == pytest.approx(pair.upper, abs=1e-12)


def test_construction_wrong_regime_rejected():
    with pytest.raises(InfeasibleDistortion):
        bn.gw_construction(0.5, 0.2, kind="scalar")
    with pytest.raises(InfeasibleDistortion):
        bn.gw_construction(0.5, 0.7, kind="two_dimensional")


# --- CEO --------------------------------------------------------------------------


def test_ceo_worked_value():
    pair = bn.ceo_sum_rate_bounds(bn.CEOQuery(dc.Gaussian(0, 1), 1.0, 2, 0.5))
    assert pair.lower == pytest.approx(0.5 * math.log(2) + math.log(2), abs=1e-12)
    assert pair.gap == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("signal", [dc.Gaussian(0, 1), dc.Uniform(-1, 1), dc.Laplace(0, 1)])
def test_ceo_single_agent_equals_awgn(signal):
    for delta in (0.4, 0.7):
        a = br.awgn_remote_bounds(signal, 0.5, delta)
        b = bn.ceo_sum_rate_bounds(bn.CEOQuery(signal, 0.5, 1, delta))
        np.testing.assert_equal((a.lower, a.upper), (b.lower, b.upper))


def test_ceo_sum_rate_decreases_with_distortion():
    for m in (1, 2, 4):
        rates = [bn.ceo_sum_rate_bounds(bn.CEOQuery(dc.Gaussian(0, 1), 1.0, m, d)).lower
                 for d in (0.6, 0.7, 0.8)]
        assert rates[0] > rates[1] > rates[2]


def test_ceo_more_agents_lower_the_distortion_floor():
    # the CEO with m agents sees noise variance 1/m after averaging
    assert not bn.ceo_sum_rate_bounds(bn.CEOQuery(dc.Gaussian(0, 1), 1.0, 1, 0.4)).lower_valid
    assert bn.ceo_sum_rate_bounds(bn.CEOQuery(dc.Gaussian(0, 1), 1.0, 4, 0.4)).lower_valid


def test_ceo_rejects_fractional_agents():
    with pytest.raises(PreconditionError):
        bn.CEOQuery(dc.Gaussian(0, 1), 1.0, 1.5, 0.5)
