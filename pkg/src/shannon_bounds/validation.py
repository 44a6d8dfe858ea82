"""Invariant suites run by ``shannon-bounds validate``.

Each check evaluates a property over a grid of inputs and reports the worst
deviation against its tolerance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import bounds_network as bn
from . import bounds_point as bp
from . import bounds_remote as br
from . import dist_core as dc
from . import oracle_ba as ob

SANDWICH_TOL = 5e-3
ORACLE_SIDE_TOL = 1e-2


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one invariant over its input grid."""

    suite: str
    name: str
    passed: bool
    worst: float
    tol: float
    count: int

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.suite}/{self.name}: worst {self.worst:.3g} (tol {self.tol:g}, {self.count} points)"


def _result(suite, name, deviations, tol, min_count=1):
    dev = np.abs(np.asarray(deviations, dtype=float))
    worst = float(dev.max()) if dev.size else math.inf
    ok = bool(dev.size >= min_count and np.all(np.isfinite(dev)) and worst <= tol)
    return CheckResult(suite, name, ok, worst, tol, int(dev.size))


def _excess(value, lo, hi):
    """How far ``value`` lies outside ``[lo, hi]`` (zero inside)."""
    return max(lo - value, value - hi, 0.0)


def corpus() -> Dict[str, dc.ScalarSource]:
    """Built-in scalar sources: Gaussian, uniform, Laplace, mixture and a tabulated density."""
    xs = np.linspace(-6.0, 7.0, 2601)
    skew = dc.GaussianMixture((0.3, 0.7), (-1.0, 1.5), (0.5, 1.0))
    return {
        "gaussian": dc.Gaussian(0.0, 1.0),
        "uniform": dc.Uniform(0.0, 1.0),
        "laplace": dc.Laplace(0.0, 1.0),
        "mixture": dc.GaussianMixture((0.5, 0.5), (-2.0, 2.0), (1.0, 1.0)),
        "grid": dc.Gridded(xs, skew.pdf(xs)),
    }


def k_sigma_for(source: dc.ScalarSource) -> float:
    """Grid half-width in standard deviations; exponential tails need more."""
    return 12.0 if isinstance(source, dc.Laplace) else 8.0


def symmetric_joint(n: int = dc.JOINT_GRID_POINTS) -> dc.GriddedJoint:
    """A symmetric, correlated, non-Gaussian joint density on a grid."""
    cov = ((0.5, 0.2), (0.2, 0.5))
    mix = dc.BivariateGaussianMixture((0.5, 0.5), ((1.0, 1.0), (-1.0, -1.0)), (cov, cov))
    return mix.to_grid(n)


# ---------------------------------------------------------------------------
# tightness
# ---------------------------------------------------------------------------


def _gaps(pairs):
    return [p.gap for p in pairs]


def tightness_checks() -> List[CheckResult]:
    """Lower equals upper on Gaussian inputs."""
    tol = 1e-9
    out = []
    classic = [bp.classic_rd_bounds(dc.Gaussian(0.0, v), f * v)
               for v in (1.0, 2.5) for f in np.geomspace(1e-3, 1.0, 12)]
    out.append(_result("tightness", "classic", _gaps(classic), tol, 20))

    vector = []
    for var, rho in (((1.0, 1.0), 0.0), ((1.0, 1.0), 0.5), ((1.0, 1.0), -0.7), ((1.0, 4.0), 0.3)):
        src = dc.BivariateGaussian(var, rho)
        for d1 in (0.05, 0.2, 0.6):
            for d2 in (0.05, 0.3):
                vector.append(bp.vector_rd_bounds(src, d1 * var[0], d2 * var[1]))
    out.append(_result("tightness", "vector", _gaps(vector), tol, 20))

    cond, wz = [], []
    for rho in (0.3, 0.5, 0.9):
        src = dc.BivariateGaussian((1.0, 1.0), rho)
        for f in np.geomspace(1e-3, 1.0, 8):
            delta = f * (1 - rho * rho)
            cond.append(bp.conditional_rd_bounds(src, delta))
            wz.append(bp.wyner_ziv_rd_bounds(src, delta))
    out.append(_result("tightness", "conditional", _gaps(cond), tol, 20))
    out.append(_result("tightness", "wyner_ziv", _gaps(wz), tol, 20))

    remote, awgn = [], []
    for nv in (0.5, 1.0, 2.0):
        model = dc.AdditiveNoiseModel(dc.Gaussian(0.0, 1.0), dc.Gaussian(0.0, nv))
        red = br.posterior_mean_reduction(model)
        for f in np.linspace(0.05, 0.95, 7):
            delta = red.delta0 + f * (1.0 - red.delta0)
            remote.append(br.remote_rd_bounds(red, delta))
            awgn.append(br.awgn_remote_bounds(dc.Gaussian(0.0, 1.0), nv, delta))
    out.append(_result("tightness", "remote", _gaps(remote), tol, 20))
    out.append(_result("tightness", "awgn_remote", _gaps(awgn), tol, 20))

    gw, regimes = [], set()
    for rho in (0.3, 0.5, -0.5, 0.8):
        src = dc.BivariateGaussian((1.0, 1.0), rho)
        for rp in (0.0, 0.2):
            for t in (0.05, 0.15, 0.4, 0.7, 0.95):
                q = bn.GrayWynerQuery(src, t * math.exp(-rp), rp)
                pair = bn.gray_wyner_bounds(q)
                regimes.add(pair.regime)
                gw.append(pair)
    res = _result("tightness", "gray_wyner", _gaps(gw), tol, 20)
    if not {"low", "high"} <= regimes:
        res = CheckResult(res.suite, res.name, False, res.worst, res.tol, res.count)
    out.append(res)

    ceo = []
    for m in (1, 2, 3, 5):
        for nv in (0.5, 1.0):
            t = nv / (m + nv)
            for f in (0.1, 0.4, 0.8):
                ceo.append(bn.ceo_sum_rate_bounds(
                    bn.CEOQuery(dc.Gaussian(0.0, 1.0), nv, m, t + f * (1.0 - t))))
    out.append(_result("tightness", "ceo", _gaps(ceo), tol, 20))
    return out


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------


def identity_checks() -> List[CheckResult]:
    """Gap identities, worked values, structural reductions and Gray-Wyner constructions."""
    out = []
    src = corpus()
    devs = []
    for name in ("uniform", "laplace", "mixture"):
        s = src[name]
        kl = dc.kl_to_gaussian(s)
        n = dc.entropy_power(s)
        for f in np.geomspace(1e-3, 1.0, 10):
            devs.append(bp.classic_rd_bounds(s, f * n).gap - kl)
    out.append(_result("identities", "classic_gap_is_kl", devs, 1e-6))

    joint = symmetric_joint()
    c = joint.covariance
    want = 0.5 * math.log(np.linalg.det(c) / dc.joint_entropy_power(joint) ** 2)
    devs = []
    s2 = 0.5 * (c[0, 0] + c[1, 1])
    for f in (0.2, 0.4, 0.6, 0.8):
        pair = bn.gray_wyner_bounds(bn.GrayWynerQuery(joint, f * s2))
        devs.append(pair.gap - want)
    out.append(_result("identities", "gray_wyner_gap", devs, 1e-4))

    g1 = dc.Gaussian(0.0, 1.0)
    rem = br.posterior_mean_reduction(dc.AdditiveNoiseModel(g1, g1))
    worked = [
        bp.classic_rd_bounds(g1, 0.25).lower - 0.5 * math.log(4.0),
        br.remote_rd_bounds(rem, 0.75).lower - 0.5 * math.log(2.0),
        br.awgn_remote_bounds(g1, 1.0, 0.75).lower - 0.5 * math.log(2.0),
        bn.gray_wyner_bounds(bn.GrayWynerQuery(dc.BivariateGaussian((1.0, 1.0), 0.5), 0.75)).lower
        - 0.5 * math.log(1.5),
        bn.ceo_sum_rate_bounds(bn.CEOQuery(g1, 1.0, 2, 0.5)).lower - 1.5 * math.log(2.0),
        bp.sum_distortion_rd_bounds(dc.BivariateGaussian((1.0, 4.0), 0.0), 1.0).lower - 2 * math.log(2.0),
    ]
    out.append(_result("identities", "worked_values", worked, 1e-9))

    devs = []
    for s in (dc.Gaussian(0.0, 1.0), dc.Uniform(-1.0, 1.0), dc.Laplace(0.0, 1.0)):
        for nv in (0.5, 2.0):
            for f in (1.1, 2.0, 4.0):
                t = dc.variance(s) * nv / (dc.variance(s) + nv)
                a = br.awgn_remote_bounds(s, nv, f * t)
                b = bn.ceo_sum_rate_bounds(bn.CEOQuery(s, nv, 1, f * t))
                devs += [a.lower - b.lower, a.upper - b.upper]
    out.append(_result("identities", "ceo_single_agent_is_awgn", devs, 1e-12))

    devs = []
    for s in (src["uniform"], src["mixture"]):
        joint = dc.product_joint(s, dc.Gaussian(0.0, 1.0))
        for f in (0.05, 0.3):
            delta = f * dc.entropy_power(s)
            ref = bp.classic_rd_bounds(joint.marginal(0), delta)
            for pair in (bp.conditional_rd_bounds(joint, delta), bp.wyner_ziv_rd_bounds(joint, delta)):
                devs += [pair.lower - ref.lower, pair.upper - ref.upper]
    out.append(_result("identities", "independent_side_information", devs, 1e-9))

    devs = []
    for var in ((1.0, 1.0), (1.0, 4.0)):
        s = dc.BivariateGaussian(var, 0.0)
        for d1, d2 in ((0.1, 0.2), (0.3, 0.05)):
            v = bp.vector_rd_bounds(s, d1, d2)
            ref = (bp.classic_rd_bounds(dc.Gaussian(0.0, var[0]), d1).lower
                   + bp.classic_rd_bounds(dc.Gaussian(0.0, var[1]), d2).lower)
            devs.append(v.lower - ref)
    out.append(_result("identities", "vector_independent_is_sum", devs, 1e-9))

    devs = []
    flip_src = symmetric_joint(257)
    flipped = dc.GriddedJoint(flip_src.x1, -flip_src.x2[::-1], flip_src.density[:, ::-1])
    for rho in (0.3, 0.7):
        for pair_src in ((dc.BivariateGaussian((1.0, 1.0), rho), dc.BivariateGaussian((1.0, 1.0), -rho)),):
            for t in (0.1, 0.5, 0.9):
                a = bn.gray_wyner_bounds(bn.GrayWynerQuery(pair_src[0], t))
                b = bn.gray_wyner_bounds(bn.GrayWynerQuery(pair_src[1], t))
                devs += [a.lower - b.lower, a.upper - b.upper]
    for t in (0.1, 0.5):
        a = bn.gray_wyner_bounds(bn.GrayWynerQuery(flip_src, t))
        b = bn.gray_wyner_bounds(bn.GrayWynerQuery(flipped, t))
        devs += [a.lower - b.lower, a.upper - b.upper]
    out.append(_result("identities", "gray_wyner_sign_flip", devs, 1e-12))

    devs = []
    for s in (g1, dc.Gaussian(0.0, 3.0)):
        for f in (0.01, 0.3, 0.9):
            delta = f * s.variance
            cert = bp.variational_lower_bound(s, delta)
            devs.append(cert.value - bp.classic_rd_bounds(s, delta).lower)
            devs.append(cert.constraint_slack)
    out.append(_result("identities", "variational_certificate", devs, 1e-8))

    devs = []
    for rho in (0.2, 0.5, -0.6):
        s = dc.BivariateGaussian((1.0, 1.0), rho)
        edge = 1.0 - abs(rho)
        below = bn.gray_wyner_bounds(bn.GrayWynerQuery(s, edge * (1 - 1e-13)))
        above = bn.gray_wyner_bounds(bn.GrayWynerQuery(s, edge * (1 + 1e-13)))
        devs += [below.lower - above.lower, below.upper - above.upper]
    out.append(_result("identities", "gray_wyner_continuity", devs, 1e-9))

    devs = []
    for rho, t in ((0.5, 0.75), (0.5, 0.6), (0.3, 0.9), (0.8, 0.5)):
        n2 = dc.joint_entropy_power(dc.BivariateGaussian((1.0, 1.0), rho)) ** 2
        nu = np.linspace(0.5 + 1e-4, 1.0, 2001)
        vals = np.array([bn.gw_lagrangian(v, rho, t, n2) for v in nu])
        devs.append(max(float(np.diff(vals, 2).max()), 0.0))
        star = bn.gw_lagrangian(bn.gw_nu_star(rho, t), rho, t, n2)
        devs.append(max(float(vals.max()) - star, 0.0))
    out.append(_result("identities", "lagrangian_concave_and_optimal", devs, 1e-8))

    devs = []
    for rho in (0.3, 0.5, 0.9):
        for lam in np.linspace(0.1, rho, 3):
            closed = bn.gw_lemma2_rhs(float(lam), rho)
            search = ob.lemma2_covariance_search(rho, float(lam))
            devs.append(max(closed - search, 0.0))
    out.append(_result("identities", "lemma2_below_search", devs, 1e-3))
    return out


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def construction_checks() -> List[CheckResult]:
    """Gaussian auxiliaries reach the target distortion at the upper-bound rate."""
    mm, rates = [], []
    for rho in (0.3, 0.5, -0.5, 0.8):
        src = dc.BivariateGaussian((1.0, 1.0), rho)
        for rp in (0.0, 0.3):
            for t in (0.05, 0.1, 0.3, 0.6, 0.9, 1.0):
                delta = t * math.exp(-rp)
                con = bn.gw_construction(rho, delta, rp)
                mm.append(con.achieved_mmse - delta * math.exp(rp))
                rates.append(con.achieved_common_rate
                             - bn.gray_wyner_bounds(bn.GrayWynerQuery(src, delta, rp)).upper)
    return [_result("constructions", "mmse_hits_target", mm, 1e-9),
            _result("constructions", "rate_equals_upper", rates, 1e-9)]


# ---------------------------------------------------------------------------
# sandwich
# ---------------------------------------------------------------------------

SANDWICH_FRACTIONS = (0.01, 0.1, 0.3, 0.9)


def _classic_point(source, frac):
    ds = ob.discretize(source, k_sigma=k_sigma_for(source))
    delta = frac * dc.variance(source)
    rate = ob.rd_at_distortion(ds, delta).rate
    pair = bp.classic_rd_bounds(source, delta)
    return _excess(rate, pair.lower, pair.upper)


def _gaussian_point(frac):
    ds = ob.discretize(dc.Gaussian(0.0, 1.0))
    return ob.rd_at_distortion(ds, frac).rate - 0.5 * math.log(1.0 / frac)


def sandwich_checks(jobs: int = 1) -> List[CheckResult]:
    """Blahut-Arimoto rates lie between the bounds."""
    src = corpus()
    tasks: List[Callable[[], float]] = []
    for s in src.values():
        for f in SANDWICH_FRACTIONS:
            tasks.append(lambda s=s, f=f: _classic_point(s, f))
    n_classic = len(tasks)
    for f in (0.05, 0.25, 0.5, 0.9):
        tasks.append(lambda f=f: _gaussian_point(f))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        vals = list(pool.map(lambda t: t(), tasks))
    out = [_result("sandwich", "classic_corpus", vals[:n_classic], SANDWICH_TOL),
           _result("sandwich", "gaussian_closed_form", vals[n_classic:], SANDWICH_TOL)]

    devs = []
    b = dc.BivariateGaussian((1.0, 1.0), 0.5)
    for delta in (0.1, 0.4):
        pair = bp.conditional_rd_bounds(b, delta)
        devs.append(_excess(ob.conditional_rd_oracle(b, delta), pair.lower, pair.upper))
    out.append(_result("sandwich", "conditional_oracle", devs, ORACLE_SIDE_TOL))

    devs = []
    for signal in (dc.Gaussian(0.0, 1.0), dc.Uniform(-math.sqrt(3.0), math.sqrt(3.0))):
        model = dc.AdditiveNoiseModel(signal, dc.Gaussian(0.0, 0.5))
        red = br.posterior_mean_reduction(model)
        for f in (0.2, 0.6):
            delta = red.delta0 + f * (dc.variance(signal) - red.delta0)
            pair = br.remote_rd_bounds(red, delta)
            devs.append(_excess(ob.remote_rd_oracle(model, delta), pair.lower, pair.upper))
    out.append(_result("sandwich", "remote_oracle", devs, ORACLE_SIDE_TOL))
    return out


SUITES = {
    "tightness": tightness_checks,
    "identities": identity_checks,
    "constructions": construction_checks,
    "sandwich": sandwich_checks,
}


def run_suite(name: str, jobs: int = 1) -> List[CheckResult]:
    """Run one suite, or every suite for ``"all"``."""
    if name == "all":
        return [r for key in SUITES for r in run_suite(key, jobs)]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    fn = SUITES[name]
    return fn(jobs) if name == "sandwich" else fn()
