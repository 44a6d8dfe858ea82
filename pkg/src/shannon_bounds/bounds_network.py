"""Network bounds: symmetric Gray-Wyner and symmetric AWGN CEO sum rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dist_core as dc
from .bounds_point import BoundPair, half_log_plus, _check_delta
from .bounds_remote import _awgn_from_powers
from .errors import InfeasibleDistortion, PreconditionError

LOG_2PIE = dc.LOG_2PIE
SYMMETRY_TOL = 1e-12


# ---------------------------------------------------------------------------
# Gray-Wyner
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GrayWynerQuery:
    """A symmetric pair, a per-branch distortion and a total private rate (nats)."""

    source: dc.BivariateSource
    delta: float
    r_p: float = 0.0

    def __post_init__(self):
        _check_delta(self.delta)
        if not (np.isfinite(self.r_p) and self.r_p >= 0):
            raise PreconditionError(f"private rate must be >= 0, got {self.r_p}")
        c = self.source.covariance
        if abs(c[0, 0] - c[1, 1]) > SYMMETRY_TOL * max(1.0, c[0, 0]):
            raise PreconditionError("Gray-Wyner bounds need equal component variances")

    @property
    def variance(self) -> float:
        c = self.source.covariance
        return float(0.5 * (c[0, 0] + c[1, 1]))

    @property
    def effective_distortion(self) -> float:
        """``delta * exp(r_p)``, the quantity both regimes depend on."""
        return self.delta * math.exp(self.r_p)


def gray_wyner_bounds(query: GrayWynerQuery) -> BoundPair:
    """Bounds on the common rate for per-branch distortion ``delta``.

    With ``t = delta exp(r_p)``, ``s2`` the common variance and
    ``a = 1 - |rho|``:

    * ``t <= s2 a`` (``"low"``): ``1/2 log+(N2 / t**2)`` and
      ``1/2 log+(s2**2 (1 - rho**2) / t**2)``;
    * ``s2 a < t <= s2`` (``"high"``): ``1/2 log+(N2 / (s2 a (2t - s2 a)))``
      and ``1/2 log+(s2 (1 - rho**2) / (a (2t - s2 a)))``;
    * ``t > s2`` (``"trivial"``): both zero.

    ``N2`` is the squared joint entropy power.
    """
    s2 = query.variance
    rho = abs(query.source.correlation)
    a = 1.0 - rho
    t = query.effective_distortion
    if t > s2:
        return BoundPair(0.0, 0.0, regime="trivial", details={"t": t})
    n2 = dc.joint_entropy_power(query.source) ** 2
    det = s2 * s2 * (1 - rho * rho)
    if t <= s2 * a:
        lower = half_log_plus(n2 / (t * t))
        upper = half_log_plus(det / (t * t))
        regime = "low"
    else:
        denom = a * (2 * t - s2 * a)
        lower = half_log_plus(n2 / (s2 * denom))
        upper = half_log_plus(det / (s2 * denom))
        regime = "high"
    return BoundPair(lower, upper, regime=regime, details={"t": t})


def gw_lagrangian(nu: float, rho: float, delta_tilde_erp: float,
                  joint_ep_sq_normalized: float) -> float:
    """The Lagrangian ``l(nu)`` on unit-variance inputs.

    ``l(nu) = 1/2 log((2 pi e)**2 N2) - nu log(2 pi e t) + nu/2 log(nu**2/(2 nu - 1))
    - (1 - nu)/2 log((2 pi e)**2 (1 - rho)**2 / (2 nu - 1))`` where
    ``t = delta_tilde exp(r_p)`` and ``N2`` the normalized squared joint
    entropy power.
    """
    if not 0.5 < nu <= 1:
        raise PreconditionError(f"nu must lie in (1/2, 1], got {nu}")
    if not 0 <= rho < 1:
        raise PreconditionError(f"rho must lie in [0, 1), got {rho}")
    t = delta_tilde_erp
    return (0.5 * (2 * LOG_2PIE + math.log(joint_ep_sq_normalized))
            - nu * (LOG_2PIE + math.log(t))
            + 0.5 * nu * math.log(nu * nu / (2 * nu - 1))
            - 0.5 * (1 - nu) * (2 * LOG_2PIE + 2 * math.log(1 - rho) - math.log(2 * nu - 1)))


def gw_nu_star(rho: float, delta_tilde_erp: float) -> float:
    """Stationary point ``t / (2t - 1 + rho)`` of :func:`gw_lagrangian`."""
    t = delta_tilde_erp
    return t / (2 * t - 1 + rho)


def gw_lemma2_rhs(lam: float, rho: float) -> float:
    """``1/2 log(1/(1 - lam**2)) - lam/2 log((2 pi e)**2 (1 - rho)**2 (1 + lam)/(1 - lam))``."""
    if not 0 < lam <= rho < 1:
        raise PreconditionError(f"need 0 < lambda <= rho < 1, got lambda={lam}, rho={rho}")
    return (-0.5 * math.log1p(-lam * lam)
            - 0.5 * lam * (2 * LOG_2PIE + 2 * math.log(1 - rho) + math.log((1 + lam) / (1 - lam))))


@dataclass(frozen=True)
class GWConstruction:
    """Gaussian auxiliary ``W = A X + N`` achieving the upper bound (unit variances).

    ``alpha``/``beta`` are the mixing weights (``beta`` is ``None`` for the
    scalar kind) and ``noise_variance`` the variance of each noise entry.
    ``achieved_mmse`` is the larger of the two linear-estimator errors of
    ``X_i`` from ``W``; ``target`` is ``delta exp(r_p)`` normalized.
    """

    kind: str
    alpha: float
    beta: Optional[float]
    noise_variance: float
    mixing: np.ndarray
    achieved_mmse: float
    achieved_common_rate: float
    target: float
    w_covariance: np.ndarray


def _linear_mmse(C, A, noise_var):
    cw = A @ C @ A.T + noise_var * np.eye(A.shape[0])
    cxw = C @ A.T
    err = np.diag(C) - np.einsum("ij,jk,ik->i", cxw, np.linalg.inv(cw), cxw)
    return cw, err


def gw_construction(rho: float, delta: float, r_p: float = 0.0, kind: Optional[str] = None,
                    variance: float = 1.0) -> GWConstruction:
    """Build the auxiliary for ``t = delta exp(r_p) / variance``.

    ``kind`` is ``"scalar"`` (needs ``1 - |rho| <= t <= 1``) or
    ``"two_dimensional"`` (needs ``t < 1 - |rho|``); by default the one
    that matches the regime is used.  A negative ``rho`` is handled by
    flipping the sign of the second component.
    """
    if not -1 < rho < 1:
        raise PreconditionError(f"|rho| must be < 1, got {rho}")
    _check_delta(delta)
    r = abs(rho)
    sign = -1.0 if rho < 0 else 1.0
    t = delta * math.exp(r_p) / variance
    if kind is None:
        kind = "scalar" if t >= 1 - r else "two_dimensional"
    C = np.array([[1.0, rho], [rho, 1.0]])
    flip = np.diag([1.0, sign])
    if kind == "scalar":
        if not 1 - r <= t <= 1:
            raise InfeasibleDistortion(f"scalar construction needs 1-|rho| <= t <= 1, got t={t}")
        alpha = math.sqrt(1 - t) / (1 + r)
        beta = None
        nvar = (2 * t + r - 1) / (1 + r)
        A = alpha * np.array([[1.0, 1.0]]) @ flip
    elif kind == "two_dimensional":
        if not t < 1 - r:
            raise InfeasibleDistortion(f"two-dimensional construction needs t < 1-|rho|, got t={t}")
        ssum = 1 - t / (1 - r * r)
        prod2 = r * t / (1 - r * r)
        plus, minus = ssum + prod2, ssum - prod2
        if plus < 0 or minus < 0:
            raise InfeasibleDistortion("mixing weights have no real solution")
        alpha = 0.5 * (math.sqrt(plus) + math.sqrt(minus))
        beta = 0.5 * (math.sqrt(plus) - math.sqrt(minus))
        nvar = t
        A = np.array([[alpha, beta], [beta, alpha]]) @ flip
    else:
        raise PreconditionError(f"unknown construction kind {kind!r}")
    cw, err = _linear_mmse(C, A, nvar)
    rate = 0.5 * math.log(np.linalg.det(cw) / nvar ** A.shape[0])
    return GWConstruction(kind, alpha, beta, nvar, A, float(err.max()), rate, t, cw)


# ---------------------------------------------------------------------------
# CEO
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CEOQuery:
    """``M`` agents each observing ``X`` through independent ``N(0, noise_variance)``."""

    signal: dc.ScalarSource
    noise_variance: float
    agents: int
    delta: float

    def __post_init__(self):
        _check_delta(self.noise_variance, "noise_variance")
        _check_delta(self.delta)
        if int(self.agents) != self.agents or self.agents < 1:
            raise PreconditionError(f"agents must be an integer >= 1, got {self.agents}")


def ceo_sum_rate_bounds(query: CEOQuery) -> BoundPair:
    """Sum-rate bounds; ``N(Y)`` is for ``Y = X + N(0, noise_variance / M)``."""
    m = int(query.agents)
    obs = dc.convolve(query.signal, dc.Gaussian(0.0, query.noise_variance / m))
    return _awgn_from_powers(dc.entropy_power(query.signal), dc.variance(query.signal),
                             dc.entropy_power(obs), query.noise_variance, query.delta, m)
