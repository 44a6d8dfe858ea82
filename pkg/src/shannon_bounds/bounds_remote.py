"""Remote (indirect) source coding bounds for ``Y = X + Z``.

The encoder sees ``Y``; the decoder reconstructs ``X``.  The problem reduces
to coding ``V = E[X|Y]`` at distortion ``delta - delta0`` with
``delta0 = E[(X - V)**2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dist_core as dc
from .bounds_point import BoundPair, half_log_plus, _check_delta
from .errors import InfeasibleDistortion, NumericalFailure, PreconditionError

POSTERIOR_POINTS = 4097
PUSHFORWARD_CELLS = 4096
PUSHFORWARD_SAMPLES = 1 << 17


@dataclass(frozen=True, eq=False)
class RemoteReduction:
    """Distribution of the posterior mean ``V`` and the MMSE ``delta0``.

    ``construction`` is one of ``"closed form"``, ``"monotone change of
    variables"`` or ``"gridded pushforward"``.  ``v_entropy_power`` is the
    value the bounds use; it may be more accurate than the entropy of the
    tabulated ``v_source``.
    """

    v_source: dc.ScalarSource
    delta0: float
    construction: str
    v_variance: float
    v_entropy_power: float
    signal_variance: float
    monotone: bool = True
    warning: Optional[str] = None


def posterior_moments(model: dc.AdditiveNoiseModel, y, refine: int = 1):
    """``(f_Y(y), E[X|y], Var(X|y))`` by Gauss-Legendre quadrature over ``x``.

    Everything is computed in the log domain with per-row max subtraction,
    so far tails do not underflow.
    """
    sx, sz = model.signal, model.noise
    lo, hi = sx.quad_range
    width = min(sx.std, sz.std) / (4 * refine)
    many = len(sx.breakpoints) > 64
    xs, wx = dc.panel_nodes(lo, hi, sx.breakpoints + sx.features,
                            None if many else width, 4 if many else 16)
    lfx = sx.logpdf(xs)
    live = np.isfinite(lfx)
    xs, wx, lfx = xs[live], wx[live], lfx[live]
    y = np.asarray(y, dtype=float)
    fy = np.empty_like(y)
    mean = np.empty_like(y)
    var = np.empty_like(y)
    chunk = max(1, 2_000_000 // len(xs))
    for s in range(0, len(y), chunk):
        yy = y[s:s + chunk, None]
        with np.errstate(divide="ignore"):
            expo = lfx[None, :] + sz.logpdf(yy - xs[None, :])
        peak = expo.max(axis=1, keepdims=True)
        peak = np.where(np.isfinite(peak), peak, 0.0)
        w = np.exp(expo - peak) * wx[None, :]
        z = w.sum(axis=1)
        ok = z > 0
        m = np.where(ok, (w @ xs) / np.where(ok, z, 1.0), np.nan)
        v = np.where(ok, (w * (xs[None, :] - m[:, None]) ** 2).sum(axis=1) / np.where(ok, z, 1.0), np.nan)
        fy[s:s + chunk] = z * np.exp(peak[:, 0])
        mean[s:s + chunk] = m
        var[s:s + chunk] = v
    return fy, mean, var


def _observation_grid(model, n):
    xlo, xhi = model.signal.quad_range
    zlo, zhi = model.noise.quad_range
    return np.linspace(xlo + zlo, xhi + zhi, n)


def posterior_mean_reduction(model: dc.AdditiveNoiseModel, n: int = POSTERIOR_POINTS) -> RemoteReduction:
    """Reduce the remote problem to a direct one for ``V = E[X|Y]``."""
    sx, sz = model.signal, model.noise
    vx = dc.variance(sx)
    if isinstance(sx, dc.Gaussian) and isinstance(sz, dc.Gaussian):
        vz = sz.variance
        vv = vx * vx / (vx + vz)
        return RemoteReduction(dc.Gaussian(sx.mean, vv), vx * vz / (vx + vz), "closed form",
                               vv, vv, vx)

    y = _observation_grid(model, n)
    gaussian_noise = isinstance(sz, dc.Gaussian)
    fy, v, cvar = posterior_moments(model, y, refine=1 if gaussian_noise else 4)
    keep = fy > 0
    y, fy, v, cvar = y[keep], fy[keep], v[keep], cvar[keep]
    mass = dc._trapz(fy, y)
    fy = fy / mass
    delta0 = float(dc._trapz(fy * cvar, y))
    if not delta0 > 0 or not np.any(cvar > 1e-14 * vx):
        raise PreconditionError("posterior variance vanishes; the reduction is degenerate")
    mv = float(dc._trapz(fy * v, y))
    vv = float(dc._trapz(fy * (v - mv) ** 2, y))
    monotone = bool(np.all(np.diff(v) > 0))

    if gaussian_noise:
        # v'(y) = Var(X|y) / var_z, so h(V) = h(Y) + E[log v'(Y)]
        dv = cvar / sz.variance
        hy = float(dc._trapz(dc._neg_xlogx(fy), y))
        with np.errstate(divide="ignore"):
            elog = float(dc._trapz(fy * np.log(dv), y))
        h = hy + elog
        if not math.isfinite(h):
            raise NumericalFailure("entropy of the posterior mean is not finite")
        v_src = dc.Gridded(v, fy / dv)
        return RemoteReduction(v_src, delta0, "monotone change of variables", vv,
                               math.exp(2 * h - dc.LOG_2PIE), vx, True)

    fine = np.linspace(y[0], y[-1], PUSHFORWARD_SAMPLES)
    vf = np.interp(fine, y, v)
    wf = np.interp(fine, y, fy) * (fine[1] - fine[0])
    edges = np.linspace(vf.min(), vf.max(), PUSHFORWARD_CELLS + 1)
    hist, _ = np.histogram(vf, bins=edges, weights=wf)
    width = edges[1] - edges[0]
    centers = 0.5 * (edges[1:] + edges[:-1])
    xs = np.concatenate([[edges[0] - width / 2], centers, [edges[-1] + width / 2]])
    dens = np.concatenate([[0.0], hist / hist.sum() / width, [0.0]])
    v_src = dc.Gridded(xs, dens / dc._trapz(dens, xs))
    warning = None if monotone else "posterior mean is not monotone in y; density of V from a histogram"
    return RemoteReduction(v_src, delta0, "gridded pushforward", vv,
                           dc.entropy_power(v_src), vx, monotone, warning)


def remote_rd_bounds(reduction: RemoteReduction, delta: float) -> BoundPair:
    """``1/2 log+(N(V)/(delta - delta0))`` below and ``1/2 log+(Var(V)/(delta - delta0))`` above."""
    _check_delta(delta)
    excess = delta - reduction.delta0
    if not excess > 0:
        raise InfeasibleDistortion(
            f"distortion {delta:g} does not exceed the MMSE {reduction.delta0:g}")
    return BoundPair(half_log_plus(reduction.v_entropy_power / excess),
                     half_log_plus(reduction.v_variance / excess),
                     lower_threshold=reduction.delta0, upper_threshold=reduction.delta0)


def additive_noise_remote_bounds(model: dc.AdditiveNoiseModel, delta: float,
                                 reduction: Optional[RemoteReduction] = None) -> BoundPair:
    """Bounds built from ``N(V)``, ``N(X)``, ``N(Y)``, ``N(Z)`` and the variances.

    ``lower = 1/2 log+(N(V) N(Y) / (delta N(Y) - N(X) N(Z)))`` valid for
    ``delta > N(X) N(Z) / N(Y)``;
    ``upper = 1/2 log+(Var(V) Var(Y) / (delta Var(Y) - Var(X) Var(Z)))`` valid
    for ``delta`` above the linear MMSE.  A single clamp is applied to each
    side; clamping the two logarithms separately can exceed the true rate.
    """
    _check_delta(delta)
    red = reduction if reduction is not None else posterior_mean_reduction(model)
    nx = dc.entropy_power(model.signal)
    nz = dc.entropy_power(model.noise)
    ny = dc.entropy_power(model.observation)
    vx, vz = dc.variance(model.signal), dc.variance(model.noise)
    vy = vx + vz
    t_low = nx * nz / ny
    t_up = vx * vz / vy
    lower_valid = delta > t_low
    upper_valid = delta > t_up
    lower = half_log_plus(red.v_entropy_power * ny / (delta * ny - nx * nz)) if lower_valid else math.nan
    upper = half_log_plus(red.v_variance * vy / (delta * vy - vx * vz)) if upper_valid else math.nan
    return BoundPair(lower, upper, lower_valid, upper_valid,
                     lower_threshold=t_low, upper_threshold=t_up)


def awgn_remote_bounds(signal: dc.ScalarSource, noise_variance: float, delta: float) -> BoundPair:
    """Remote bounds for Gaussian observation noise, in terms of ``N(X)`` and ``N(Y)`` only."""
    _check_delta(delta)
    _check_delta(noise_variance, "noise_variance")
    obs = dc.convolve(signal, dc.Gaussian(0.0, noise_variance))
    return _awgn_from_powers(dc.entropy_power(signal), dc.variance(signal),
                             dc.entropy_power(obs), noise_variance, delta, 1)


def _awgn_from_powers(nx, vx, ny, noise_variance, delta, m):
    """Shared formula for the AWGN remote (``m = 1``) and CEO sum-rate bounds.

    ``ny`` is the entropy power of ``X`` plus Gaussian noise of variance
    ``noise_variance / m``.
    """
    vy = vx + noise_variance / m
    t_low = nx * noise_variance / (m * ny)
    t_up = vx * noise_variance / (m * vy)
    lower_valid = delta > t_low
    upper_valid = delta > t_up
    lower = upper = math.nan
    if lower_valid:
        lower = half_log_plus(nx / delta) + m * half_log_plus(m * nx / (m * ny - nx / delta * noise_variance))
    if upper_valid:
        upper = half_log_plus(vx / delta) + m * half_log_plus(m * vx / (m * vy - vx / delta * noise_variance))
    return BoundPair(lower, upper, lower_valid, upper_valid,
                     lower_threshold=t_low, upper_threshold=t_up)
