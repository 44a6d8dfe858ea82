"""Closed-form Shannon bound pairs for point-to-point quadratic problems.

Every rate is in nats.  For bivariate sources the first component is the
source ``X`` and the second the side information ``W`` (or the second
coordinate for the vector problem).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import dist_core as dc
from .errors import InvalidCertificate, PreconditionError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
CERT_GRID_POINTS = 257
CERT_SLACK_TOL = 1e-8


def half_log_plus(ratio: float) -> float:
    """``max(0, log(ratio)) / 2``; non-positive ratios give NaN."""
    if not ratio > 0:
        return math.nan
    return 0.5 * max(0.0, math.log(ratio))


@dataclass(frozen=True)
class BoundPair:
    """A lower/upper bound sandwich with validity flags.

    ``lower_threshold``/``upper_threshold`` record the distortion above which
    each side is stated to apply, where such a condition exists.
    """

    lower: float
    upper: float
    lower_valid: bool = True
    upper_valid: bool = True
    regime: Optional[str] = None
    lower_threshold: Optional[float] = None
    upper_threshold: Optional[float] = None
    details: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def gap(self) -> float:
        if self.lower_valid and self.upper_valid:
            return self.upper - self.lower
        return math.nan

    def scaled(self, factor: float) -> "BoundPair":
        """Same pair with both values multiplied by ``factor`` (unit change)."""
        return BoundPair(self.lower * factor, self.upper * factor, self.lower_valid,
                         self.upper_valid, self.regime, self.lower_threshold,
                         self.upper_threshold, self.details)


def _check_delta(delta, name="delta"):
    if not (np.isfinite(delta) and delta > 0):
        raise PreconditionError(f"{name} must be positive and finite, got {delta!r}")


# ---------------------------------------------------------------------------
# scalar problems
# ---------------------------------------------------------------------------


def classic_rd_bounds(source: dc.ScalarSource, delta: float) -> BoundPair:
    """``1/2 log+(N(X)/delta) <= R(delta) <= 1/2 log+(Var(X)/delta)``."""
    _check_delta(delta)
    n = dc.entropy_power(source)
    v = dc.variance(source)
    return BoundPair(half_log_plus(n / delta), half_log_plus(v / delta))


def mmse_estimation_bounds(model: dc.AdditiveNoiseModel) -> BoundPair:
    """Bounds on the MMSE of ``X`` from ``Y = X + Z`` (squared units, not nats).

    ``N(X) N(Z) / N(Y) <= mmse <= Var(X) Var(Z) / Var(Y)``.
    """
    nx = dc.entropy_power(model.signal)
    nz = dc.entropy_power(model.noise)
    ny = dc.entropy_power(model.observation)
    vx, vz = dc.variance(model.signal), dc.variance(model.noise)
    return BoundPair(nx * nz / ny, vx * vz / (vx + vz), regime="mmse")


def raw_estimation_bounds(source: dc.BivariateSource, estimate: int = 0) -> BoundPair:
    """``N(X|Y) <= mmse(X|Y) <= Var(X)(1 - rho**2)`` (squared units).

    The lower side is flagged valid only when the MMSE does not exceed ``N(X)``.
    """
    given = 1 - estimate
    cond = dc.conditional_entropy_power(source, condition_on=given)
    upper = dc.linear_mmse(source, estimate)
    d0 = dc.mmse(source, estimate, given)
    nx = dc.entropy_power(source.marginal(estimate))
    return BoundPair(cond, upper, lower_valid=bool(d0 <= nx), regime="mmse",
                     details={"mmse": d0})


# ---------------------------------------------------------------------------
# vector problem
# ---------------------------------------------------------------------------


def golden_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12,
               max_iter: int = 200):
    """Maximize a unimodal ``f`` on ``[a, b]``; endpoints are also compared."""
    best = max(((f(a), a), (f(b), b)))
    if b - a <= tol:
        return best[1], best[0]
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    cand = max(((f1, x1), (f2, x2), best))
    return cand[1], cand[0]


def max_det_distortion(sigma, delta1: float, delta2: float, coarse: int = 33):
    """Maximize ``det D`` over ``0 <= D <= sigma`` with ``D_ii <= delta_i``.

    Works with ``E = sigma - D``.  For fixed diagonal of ``E`` the best
    off-diagonal entry is ``clip(sigma_12, +-sqrt(E11 E22))`` which gives
    ``det D = (s11 - E11)(s22 - E22) - (|s12| - sqrt(E11 E22))_+**2``.
    The remaining two coordinates are searched by nested golden sections;
    the inner objective is concave and the outer one log-concave.

    Returns ``(det D, D)``.
    """
    s = np.asarray(sigma, dtype=float)
    _check_delta(delta1, "delta1")
    _check_delta(delta2, "delta2")
    s11, s22, s12 = s[0, 0], s[1, 1], s[0, 1]
    if not (s11 > 0 and s22 > 0 and s11 * s22 - s12 * s12 > 0):
        raise PreconditionError("covariance must be positive definite")
    lo1, lo2 = max(s11 - delta1, 0.0), max(s22 - delta2, 0.0)
    a12 = abs(s12)

    def phi(e11, e22):
        e11 = min(max(e11, lo1), s11)
        e22 = min(max(e22, lo2), s22)
        off = max(a12 - math.sqrt(e11 * e22), 0.0)
        return (s11 - e11) * (s22 - e22) - off * off

    def inner(e11):
        tol = 1e-13 * max(s22, 1.0)
        e22, val = golden_max(lambda y: phi(e11, y), lo2, s22, tol)
        return val, e22

    def outer(e11):
        return inner(e11)[0]

    grid = np.linspace(lo1, s11, coarse)
    vals = [outer(x) for x in grid]
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, coarse - 1)]
    e11, best = golden_max(outer, a, b, 1e-13 * max(s11, 1.0))
    if vals[k] > best:
        e11, best = grid[k], vals[k]
    _, e22 = inner(e11)
    d11, d22 = s11 - e11, s22 - e22
    off = max(a12 - math.sqrt(e11 * e22), 0.0)
    c = math.copysign(off, s12)
    D = np.array([[d11, c], [c, d22]])
    return float(max(best, 0.0)), D


def vector_rd_bounds(source: dc.BivariateSource, delta1: float, delta2: float) -> BoundPair:
    """Bounds for a pair under separate per-coordinate MSE constraints.

    ``lower = 1/2 log+(N(X1,X2)**2 / det D*)`` and
    ``upper = 1/2 log+(det(sigma) / det D*)`` where ``D*`` maximizes
    ``det D`` (see :func:`max_det_distortion`).
    """
    sigma = source.covariance
    det_d, D = max_det_distortion(sigma, delta1, delta2)
    n2 = dc.joint_entropy_power(source) ** 2
    return BoundPair(half_log_plus(n2 / det_d), half_log_plus(np.linalg.det(sigma) / det_d),
                     details={"D": D, "det_D": det_d})


def sum_distortion_rd_bounds(source: dc.BivariateSource, delta_total: float) -> BoundPair:
    """Vector bounds under a total budget ``delta1 + delta2 <= delta_total``.

    Both sides are minimized by the same split, the one maximizing
    ``det D*``; it is found by golden section over ``delta1``.
    """
    _check_delta(delta_total, "delta_total")
    sigma = source.covariance

    def logdet(d1):
        d1 = min(max(d1, 1e-300), delta_total * (1 - 1e-16))
        det_d, _ = max_det_distortion(sigma, d1, delta_total - d1)
        return math.log(det_d) if det_d > 0 else -math.inf

    eps = delta_total * 1e-12
    d1, _ = golden_max(logdet, eps, delta_total - eps, 1e-11 * delta_total)
    det_d, D = max_det_distortion(sigma, d1, delta_total - d1)
    n2 = dc.joint_entropy_power(source) ** 2
    return BoundPair(half_log_plus(n2 / det_d), half_log_plus(np.linalg.det(sigma) / det_d),
                     details={"D": D, "det_D": det_d, "split": (d1, delta_total - d1)})


# ---------------------------------------------------------------------------
# side information
# ---------------------------------------------------------------------------


def conditional_rd_bounds(source: dc.BivariateSource, delta: float) -> BoundPair:
    """Side information at both ends: ``N(X|W)`` below, ``mmse(X|W)`` above."""
    _check_delta(delta)
    n = dc.conditional_entropy_power(source, condition_on=1)
    m = dc.mmse(source, 0, 1)
    return BoundPair(half_log_plus(n / delta), half_log_plus(m / delta))


def wyner_ziv_rd_bounds(source: dc.BivariateSource, delta: float) -> BoundPair:
    """Side information at the decoder only: ``N(X|W)`` below, LMMSE above."""
    _check_delta(delta)
    n = dc.conditional_entropy_power(source, condition_on=1)
    m = dc.linear_mmse(source, 0)
    return BoundPair(half_log_plus(n / delta), half_log_plus(m / delta))


def wz_auxiliary_rate_distortion(source: dc.BivariateSource, rho_tilde: float):
    """Achievable ``(rate, distortion)`` of the auxiliary ``U = rt X + sqrt(1 - rt**2) Z``.

    The decoder combines ``U`` and ``W`` with maximum-ratio weights, giving
    distortion ``var / (1 + g + gt)`` with ``g = rho**2/(1 - rho**2)`` and
    ``gt = rt**2/(1 - rt**2)``, at rate ``1/2 log(1 + (1 - rho**2) gt)``.
    """
    if not 0 < rho_tilde < 1:
        raise PreconditionError(f"rho_tilde must lie in (0, 1), got {rho_tilde}")
    rho = source.correlation
    var = float(source.covariance[0, 0])
    g = rho * rho / (1 - rho * rho)
    gt = rho_tilde * rho_tilde / (1 - rho_tilde * rho_tilde)
    return 0.5 * math.log1p((1 - rho * rho) * gt), var / (1 + g + gt)


def wz_auxiliary_rho_for_delta(source: dc.BivariateSource, delta: float) -> float:
    """The ``rho_tilde`` whose auxiliary achieves distortion ``delta``."""
    rho = source.correlation
    var = float(source.covariance[0, 0])
    gt = var / delta - 1 - rho * rho / (1 - rho * rho)
    if gt <= 0:
        raise PreconditionError("delta is reachable at zero rate; no auxiliary needed")
    return math.sqrt(gt / (1 + gt))


# ---------------------------------------------------------------------------
# variational certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VariationalCertificate:
    """A slope ``s <= 0`` and a function ``lambda(x) >= 0``.

    ``log_lambda`` maps an array of ``x`` to ``log lambda(x)``; ``None``
    stands for the default ``lambda(x) = K / p(x)`` with ``K = sqrt(-s/pi)``.
    ``constraint_slack`` and ``value`` are filled in by
    :func:`variational_lower_bound`.
    """

    s: float
    log_lambda: Optional[Callable] = field(default=None, compare=False)
    lambda_description: str = "K/p(x), K = sqrt(-s/pi)"
    constraint_slack: float = math.nan
    value: float = math.nan

    def __post_init__(self):
        if not self.s <= 0:
            raise InvalidCertificate(f"certificate slope must be <= 0, got {self.s}")


def _log_lambda_p(source, cert, x):
    """``log(lambda(x) p(x))`` on nodes inside the support."""
    lp = source.logpdf(x)
    if cert.log_lambda is None:
        return np.where(np.isfinite(lp), 0.5 * math.log(-cert.s / math.pi), -np.inf)
    return np.asarray(cert.log_lambda(x), dtype=float) + lp


def variational_lower_bound(source: dc.ScalarSource, delta: float,
                            certificate: Optional[VariationalCertificate] = None
                            ) -> VariationalCertificate:
    """Lower bound ``s delta + E[log lambda(X)]`` from a certificate in ``Lambda_s``.

    Membership ``int lambda(x) p(x) exp(s (x - y)**2) dx <= 1`` is checked on
    257 values of ``y`` spanning the support widened by ``4 sqrt(delta)``.
    Without a certificate the default ``s = -1/(2 delta)`` choice is used,
    whose value is ``1/2 log(N(X)/delta)``.
    """
    _check_delta(delta)
    cert = certificate if certificate is not None else VariationalCertificate(-0.5 / delta)
    s = cert.s
    lo, hi = source.quad_range
    widen = 4.0 * math.sqrt(delta)
    ys = np.linspace(lo - widen, hi + widen, CERT_GRID_POINTS)

    scale = source.std if s == 0 else min(source.std, math.sqrt(-0.5 / s))
    # the kernel must not be cut by the quadrature range
    if s < 0:
        slo, shi = source.support
        reach = 10.0 * math.sqrt(-0.5 / s)
        lo, hi = max(slo, lo - reach), min(shi, hi + reach)
    xs, wx = dc.panel_nodes(lo, hi, source.breakpoints + source.features, scale / 4, 16)
    log_lp = _log_lambda_p(source, cert, xs)
    live = np.isfinite(log_lp)
    xs, wx, log_lp = xs[live], wx[live], log_lp[live]
    slack = -math.inf
    for chunk in np.array_split(ys, 8):
        expo = log_lp[None, :] + s * (xs[None, :] - chunk[:, None]) ** 2
        peak = expo.max(axis=1, keepdims=True)
        integral = np.exp(peak[:, 0]) * (np.exp(expo - peak) @ wx)
        slack = max(slack, float(np.max(integral)) - 1.0)
    if slack > CERT_SLACK_TOL:
        raise InvalidCertificate(f"certificate violates the membership constraint by {slack:.3g}")

    if cert.log_lambda is None:
        mean_log_lambda = 0.5 * math.log(-s / math.pi) + dc.differential_entropy(source)
    else:
        p = np.exp(source.logpdf(xs))
        mean_log_lambda = float((p * np.asarray(cert.log_lambda(xs), dtype=float)) @ wx)
    value = s * delta + mean_log_lambda
    return VariationalCertificate(s, cert.log_lambda, cert.lambda_description, slack, value)
