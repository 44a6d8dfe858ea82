"""Independent numerical oracles.

* Blahut-Arimoto for discretized sources (classic, conditional with
  side-information cells, and remote through the modified distortion);
* brute-force grid searches for the determinant maximization behind the
  vector bounds and for the Gaussian covariance problem behind the
  Gray-Wyner converse.

Each BA run returns the Lagrangian rate of its final iterate together with
Blahut's certified lower bound ``rate_lower``; the true ``R(D)`` at the
achieved distortion lies in ``[rate_lower, rate]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from . import dist_core as dc
from .bounds_remote import posterior_moments, _observation_grid
from .errors import InfeasibleDistortion, NumericalFailure, PreconditionError, SourceError

RATE_TOL = 1e-10
GAP_TOL = 1e-3
MAX_ITER = 100_000
MAX_TRUNCATION = 1e-6
STALL_MIN_ITER = 1000
SEARCH_GAP_FACTOR = 10.0
SEARCH_MAX_ITER = 20_000


@dataclass(frozen=True, eq=False)
class DiscretizedSource:
    """Probability mass on a uniform grid of cell midpoints."""

    points: np.ndarray
    pmf: np.ndarray
    truncation_mass: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.points, dtype=float)
        p = np.asarray(self.pmf, dtype=float)
        if x.ndim != 1 or p.shape != x.shape or len(x) < 2:
            raise SourceError("points and pmf must be equal-length vectors")
        if not np.all(np.diff(x) > 0):
            raise SourceError("points must be strictly increasing")
        if np.any(p < 0) or not p.sum() > 0:
            raise SourceError("pmf must be nonnegative with positive mass")
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "pmf", p / p.sum())

    @property
    def mean(self) -> float:
        return float(self.pmf @ self.points)

    @property
    def variance(self) -> float:
        return float(self.pmf @ (self.points - self.mean) ** 2)


def discretize(source: dc.ScalarSource, n: int = 1024, k_sigma: float = 8.0,
               max_truncation: float = MAX_TRUNCATION) -> DiscretizedSource:
    """Cell-integrated pmf on ``n`` cells over ``mean +- k_sigma * std``.

    The range is clipped to the support when that is smaller.  Raises
    :class:`SourceError` if more than ``max_truncation`` probability falls
    outside.
    """
    if n < 16:
        raise PreconditionError("n must be at least 16")
    m, s = source.mean, source.std
    lo, hi = m - k_sigma * s, m + k_sigma * s
    slo, shi = source.support
    lo, hi = max(lo, slo), min(hi, shi)
    edges = np.linspace(lo, hi, n + 1)
    cdf = source.cdf(edges)
    p = np.diff(cdf)
    trunc = float(cdf[0] + source.sf(edges[-1]))
    if trunc > max_truncation:
        raise SourceError(f"discretization leaves {trunc:.3g} probability outside the grid")
    p = np.maximum(p, 0.0)
    return DiscretizedSource(0.5 * (edges[1:] + edges[:-1]), p, trunc)


@dataclass(frozen=True, eq=False)
class BASolution:
    """Result of a Blahut-Arimoto solve.

    ``rate`` is the mutual information of the returned test channel, so it
    is achievable at ``distortion_achieved``.  ``rate_lower`` is Blahut's
    lower certificate at ``slope``; the true rate-distortion value of the
    discretized source lies between the two.  ``converged`` is true when
    that certified gap fell below the requested tolerance.
    """

    rate: float
    distortion_achieved: float
    slope: float
    iterations: int
    converged: bool
    rate_lower: float = math.nan
    output_pmf: Optional[np.ndarray] = None

    @property
    def certified_gap(self) -> float:
        return self.rate - self.rate_lower


def _sq_dist(x, y):
    return (np.asarray(x)[:, None] - np.asarray(y)[None, :]) ** 2


def _ba_batch(P, wts, d, s, Q=None, gap_tol=GAP_TOL, max_iter=MAX_ITER, check_every=5):
    """Blahut-Arimoto for several source pmfs (rows of ``P``) at one slope.

    Returns ``(rate, rate_lower, distortion, iterations, converged, Q)``
    where the first three are ``wts``-weighted averages over rows.  Every
    ``check_every`` iterations the Lagrangian rate, Blahut's lower
    certificate and the per-iteration rate change are evaluated.
    """
    A = np.exp(s * d)
    Ad = A * d
    k, m = P.shape[0], d.shape[1]
    Q = np.full((k, m), 1.0 / m) if Q is None else np.array(Q, dtype=float).reshape(k, m)
    live = P > 0
    prev = math.inf
    it = 0
    while True:
        Z = Q @ A.T
        R = np.where(live, P / np.where(live, Z, 1.0), 0.0)
        C = R @ A
        if it % check_every == 0 or it >= max_iter:
            with np.errstate(divide="ignore"):
                lsum = -np.where(live, P * np.log(np.where(live, Z, 1.0)), 0.0).sum(axis=1)
            dist = np.einsum("kj,kj->k", R, Q @ Ad.T)
            rates = s * dist + lsum
            lows = rates - np.log(C.max(axis=1))
            rate, low, dbar = float(wts @ rates), float(wts @ lows), float(wts @ dist)
            if not math.isfinite(rate):
                raise NumericalFailure("Blahut-Arimoto produced a non-finite rate")
            step_change = abs(rate - prev) / (check_every if it else 1)
            if rate - low < gap_tol:
                return rate, low, dbar, it, True, Q
            if step_change < RATE_TOL and it >= STALL_MIN_ITER:
                return rate, low, dbar, it, False, Q
            if it >= max_iter:
                return rate, low, dbar, it, False, Q
            prev = rate
        Q = Q * C
        Q /= Q.sum(axis=1, keepdims=True)
        it += 1


def _lbfgs_outputs(P, wts, A, Q, maxiter=300):
    """Minimize ``sum_k w_k (-sum_i P_ki log (A q_k)_i + sum_j q_kj)`` over ``Q >= 0``.

    Its minimizers are the BA fixed points (rows then sum to one).  This is
    far faster than the multiplicative updates when the optimal outputs
    have small support, as happens at low rates.
    """
    k, m = Q.shape
    live = P > 0

    def fun(flat):
        Qm = flat.reshape(k, m)
        Z = Qm @ A.T
        with np.errstate(divide="ignore"):
            logz = np.where(live, np.log(np.where(live, Z, 1.0)), 0.0)
        val = float(wts @ (-(P * logz).sum(axis=1) + Qm.sum(axis=1)))
        R = np.where(live, P / np.where(live, Z, 1.0), 0.0)
        grad = wts[:, None] * (1.0 - R @ A)
        return val, grad.ravel()

    res = optimize.minimize(fun, Q.ravel(), jac=True, method="L-BFGS-B",
                            bounds=[(0.0, None)] * (k * m),
                            options=dict(maxiter=maxiter, ftol=1e-16, gtol=1e-14, maxcor=50))
    Qn = np.maximum(res.x.reshape(k, m), 0.0)
    sums = Qn.sum(axis=1, keepdims=True)
    if not np.all(np.isfinite(sums)) or np.any(sums <= 0):
        return Q, res.nit
    Qn = Qn / sums
    # keep every atom alive so later multiplicative updates can revive it
    return 0.999999 * Qn + 1e-6 / m, res.nit


def _solve_at_slope(P, wts, d, s, Q, gap_tol=GAP_TOL, ba_budget=200, max_iter=MAX_ITER):
    """BA at slope ``s`` with one L-BFGS-B jump, kept only if it narrows the gap.

    The jump pays off at low rates (sparse optimal outputs), where the
    multiplicative updates crawl; at high rates BA alone is faster.
    """
    rate, low, dist, it, stalled, Q = _ba_batch(P, wts, d, s, Q, gap_tol, ba_budget)
    if rate - low < gap_tol:
        return rate, low, dist, it, True, Q
    Qj, nit = _lbfgs_outputs(P, wts, np.exp(s * d), Q, maxiter=300)
    dj, ij, lj = _channel_at(P, wts, d, Qj, s)
    it += nit
    if ij - lj < rate - low:
        Q = Qj
    rate, low, dist, it2, stalled, Q = _ba_batch(P, wts, d, s, Q, gap_tol, max_iter)
    return rate, low, dist, it + it2, rate - low < gap_tol, Q


def blahut_arimoto_rd(source: DiscretizedSource, slope: float,
                      reconstruction_grid: Optional[np.ndarray] = None,
                      q_init: Optional[np.ndarray] = None, gap_tol: float = GAP_TOL,
                      max_iter: int = MAX_ITER) -> BASolution:
    """Blahut-Arimoto at Lagrange slope ``slope <= 0`` with squared error.

    Iterates ``q <- q * A^T (p / A q)`` with ``A = exp(slope * d)`` starting
    from ``q_init`` (uniform by default).  Slope zero returns the zero-rate
    point: all mass on the single best reconstruction.
    """
    if not slope <= 0:
        raise PreconditionError(f"slope must be <= 0, got {slope}")
    x, p = source.points, source.pmf
    y = x if reconstruction_grid is None else np.asarray(reconstruction_grid, dtype=float)
    d = _sq_dist(x, y)
    if slope == 0:
        cost = p @ d
        j = int(np.argmin(cost))
        q = np.zeros(len(y))
        q[j] = 1.0
        return BASolution(0.0, float(cost[j]), 0.0, 0, True, 0.0, q)
    return _ba_single(p, d, slope, q_init, gap_tol, max_iter)


def _ba_single(p, d, s, q_init, gap_tol=GAP_TOL, max_iter=MAX_ITER):
    rate, low, dist, it, ok, Q = _ba_batch(p[None, :], np.ones(1), d, s, q_init, gap_tol, max_iter)
    return BASolution(max(rate, 0.0), dist, s, it, ok, max(low, 0.0), Q[0])


def _channel_at(P, wts, d, Q, s):
    """Distortion, mutual information and Blahut's lower certificate of the
    test channel ``Q(j|i) ~ q_j exp(s d_ij)`` induced by fixed outputs ``Q``.
    """
    A = np.exp(s * d)
    Z = Q @ A.T
    live = P > 0
    R = np.where(live, P / np.where(live, Z, 1.0), 0.0)
    C = R @ A
    dist = np.einsum("kj,kj->k", R, Q @ (A * d).T)
    with np.errstate(divide="ignore"):
        lsum = -np.where(live, P * np.log(np.where(live, Z, 1.0)), 0.0).sum(axis=1)
        clog = np.where(C > 0, np.log(np.where(C > 0, C, 1.0)), 0.0)
    info = s * dist + lsum - np.einsum("kj,kj->k", Q * C, clog)
    low = s * dist + lsum - np.log(C.max(axis=1))
    return float(wts @ dist), float(wts @ info), float(wts @ low)


def _initial_outputs(P, x, y, delta, floor=1e-6):
    """Starting output marginals: a Gaussian of variance ``Var - delta`` per row.

    For squared error the optimal reconstruction is the conditional mean of
    the source given itself, so its variance is ``Var(X) - D``.
    """
    step = float(np.min(np.diff(y))) if len(y) > 1 else 1.0
    mean = P @ x
    var = np.maximum(P @ x**2 - mean**2, 0.0)
    width = np.maximum(var - delta, step * step)
    Q = np.exp(-(y[None, :] - mean[:, None]) ** 2 / (2 * width[:, None]))
    Q = Q / Q.sum(axis=1, keepdims=True)
    return (1 - floor) * Q + floor / Q.shape[1]


def _mixed_outputs(P, wts, d, delta, solved):
    """Channel at ``delta`` from a mixture of the two solutions bracketing it.

    Where the converged distortion jumps across a slope (a straight piece
    of the rate-distortion curve), both bracketing output marginals are
    optimal at nearly the same slope and a convex combination of them
    reaches any distortion in between.  Returns ``(u, Q, info, low, dist)``
    for the best certified mix, or ``None`` without a bracket.
    """
    above = [u for u, v in solved.items() if v[0] > delta]
    below = [u for u, v in solved.items() if v[0] < delta]
    if not above or not below:
        return None
    ua, ub = max(above), min(below)
    qa, qb = solved[ua][1], solved[ub][1]
    best = None
    for u in (ua, 0.5 * (ua + ub), ub):
        s = -math.exp(u)

        def f(lam):
            return _channel_at(P, wts, d, (1 - lam) * qa + lam * qb, s)[0] - delta

        fa, fb = f(0.0), f(1.0)
        if not fa >= 0 >= fb:
            continue
        lam = 0.0 if fa == 0 else 1.0 if fb == 0 else optimize.brentq(f, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
        Q = (1 - lam) * qa + lam * qb
        dist, info, low = _channel_at(P, wts, d, Q, s)
        if best is None or info - low < best[2] - best[3]:
            best = (u, Q, info, low, dist)
    return best


def _targeted(P, wts, x, y, delta, gap_tol=GAP_TOL, max_rounds=8):
    """Rate at average distortion ``delta`` for the batch ``(P, wts)``.

    A bracketed root search over ``u = log(-s)`` on the converged channel
    distortion ``D(s)`` (monotone in ``s``), each solve warm-started from
    the nearest slope already solved.  A first pass at a looser gap
    locates the root, a second pass at ``gap_tol`` refines it.  The outputs are then frozen and the
    slope is adjusted so the channel distortion equals ``delta`` exactly
    (for fixed outputs it is smooth and increasing in the slope).  The
    returned rate is that channel's mutual information, an achievable rate
    at ``delta``; ``rate_lower`` is Blahut's certificate at the same slope.
    """
    d = _sq_dist(x, y)
    search_tol = SEARCH_GAP_FACTOR * gap_tol
    solved = {}
    total_it = [0]
    q0 = _initial_outputs(P, x, y, delta)

    def solve(u, tol=gap_tol, max_iter=MAX_ITER):
        if u in solved and solved[u][3] <= tol:
            return solved[u]
        if u in solved:
            Q = solved[u][1]
        else:
            near = min(solved, key=lambda v: abs(v - u)) if solved else None
            Q = q0 if near is None else solved[near][1]
        rate, low, dist, it, ok, Q = _solve_at_slope(P, wts, d, -math.exp(u), Q, tol,
                                                     max_iter=max_iter)
        total_it[0] += it
        solved[u] = (dist, Q, ok, tol)
        return solved[u]

    def root(g, u0, step):
        a = b = u0
        st = step
        while g(a) < 0:
            a -= st
            st *= 2
            if a < -60:
                raise InfeasibleDistortion(f"no slope reaches distortion {delta:g}")
        st = step
        while g(b) > 0:
            b += st
            st *= 2
            if b > 80:
                raise InfeasibleDistortion(f"no slope reaches distortion {delta:g}")
        return u0 if g(u0) == 0 else optimize.brentq(g, a, b, xtol=1e-4, rtol=1e-8, maxiter=200)

    # a loose search locates the root cheaply; a full-accuracy search then
    # only visits slopes close to it
    u = root(lambda v: math.log(solve(v, search_tol, SEARCH_MAX_ITER)[0] / delta),
             math.log(0.5 / delta), 0.25)
    u = root(lambda v: math.log(solve(v)[0] / delta), u, 0.02)
    best = _mixed_outputs(P, wts, d, delta, {v: e for v, e in solved.items() if e[3] <= gap_tol})
    if best is not None and best[2] - best[3] < gap_tol:
        u, Q, info, low, dist = best
        return BASolution(max(info, 0.0), dist, -math.exp(u), total_it[0], True, max(low, 0.0),
                          Q if len(Q) > 1 else Q[0])
    Q = solve(u)[1]
    ok = False
    for _ in range(max_rounds):
        def h(v):
            return math.log(_channel_at(P, wts, d, Q, -math.exp(v))[0] / delta)

        lo, hi = u - 0.05, u + 0.05
        while h(lo) < 0:
            lo -= 0.5
        while h(hi) > 0:
            hi += 0.5
        u = optimize.brentq(h, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
        dist, info, low = _channel_at(P, wts, d, Q, -math.exp(u))
        if info - low < gap_tol:
            ok = True
            break
        Q = solve(u)[1]
    if best is not None and best[2] - best[3] < info - low:
        u, Q, info, low, dist = best
    if abs(dist / delta - 1) > 1e-6:
        raise NumericalFailure(f"slope search missed distortion {delta:g}: reached {dist:g}")
    return BASolution(max(info, 0.0), dist, -math.exp(u), total_it[0], bool(ok), max(low, 0.0),
                      Q if len(Q) > 1 else Q[0])


def rd_at_distortion(source: DiscretizedSource, delta: float,
                     reconstruction_grid: Optional[np.ndarray] = None,
                     gap_tol: float = GAP_TOL) -> BASolution:
    """BA solution whose achieved distortion is within ``1e-6 delta`` of ``delta``.

    ``delta`` must lie in ``(0, zero-rate distortion]``.
    """
    zero = blahut_arimoto_rd(source, 0.0, reconstruction_grid)
    if not 0 < delta <= zero.distortion_achieved * (1 + 1e-12):
        raise InfeasibleDistortion(
            f"delta must lie in (0, {zero.distortion_achieved:g}], got {delta:g}")
    if delta >= zero.distortion_achieved * (1 - 1e-9):
        return zero
    y = source.points if reconstruction_grid is None else np.asarray(reconstruction_grid, dtype=float)
    return _targeted(source.pmf[None, :], np.ones(1), source.points, y, delta, gap_tol)


def refined_grid(source: DiscretizedSource, factor: int = 2) -> np.ndarray:
    """Reconstruction grid ``factor`` times finer than the source grid."""
    x = source.points
    return np.linspace(x[0], x[-1], factor * (len(x) - 1) + 1)


# ---------------------------------------------------------------------------
# conditional
# ---------------------------------------------------------------------------


def _cell_pmfs(grid: dc.GriddedJoint, w_cells: int):
    """Conditional pmfs of X given W-cells of (roughly) equal probability."""
    f = grid.density
    wx = np.gradient(grid.x1)
    ww = np.gradient(grid.x2)
    mass = f * wx[:, None] * ww[None, :]
    mass = mass / mass.sum()
    marg_w = mass.sum(axis=0)
    cum = np.cumsum(marg_w) - 0.5 * marg_w
    labels = np.minimum((cum * w_cells).astype(int), w_cells - 1)
    P = np.zeros((w_cells, len(grid.x1)))
    for j, k in enumerate(labels):
        P[k] += mass[:, j]
    weights = P.sum(axis=1)
    keep = weights > 0
    P, weights = P[keep], weights[keep]
    return P / weights[:, None], weights


def conditional_rd_oracle(source: dc.BivariateSource, delta: float, w_cells: int = 64,
                          n: int = 257, gap_tol: float = GAP_TOL, full_output: bool = False):
    """Conditional ``R_{X|W}(delta)`` with ``W`` quantized into cells.

    All cells share one slope (the optimal allocation for convex per-cell
    curves), so a single batched BA per slope suffices; the slope is
    bisected until the average distortion hits ``delta``.  Quantizing ``W``
    can only lose information, so the value errs upward.
    """
    if w_cells < 8:
        raise PreconditionError("w_cells must be at least 8")
    grid = source.to_grid(n)
    P, wts = _cell_pmfs(grid, w_cells)
    x = grid.x1
    d = _sq_dist(x, x)
    zero_cost = P @ d
    zero = float(wts @ zero_cost.min(axis=1))
    if not 0 < delta <= zero:
        raise InfeasibleDistortion(f"delta must lie in (0, {zero:g}]")

    sol = _targeted(P, wts, x, x, delta, gap_tol)
    return sol if full_output else sol.rate


# ---------------------------------------------------------------------------
# remote
# ---------------------------------------------------------------------------


def remote_rd_oracle(model: dc.AdditiveNoiseModel, delta: float, n: int = 1024,
                     gap_tol: float = GAP_TOL, full_output: bool = False):
    """Remote ``R(delta)`` by BA on the observation with the modified distortion.

    ``d*(y, xh) = Var(X|y) + (E[X|y] - xh)**2``; the first term does not
    depend on ``xh`` so it factors out of every BA update and is added back
    as the constant ``delta0`` of the discretized model.
    """
    y = _observation_grid(model, n)
    fy, v, cvar = posterior_moments(model, y, refine=1 if isinstance(model.noise, dc.Gaussian) else 4)
    keep = fy > 0
    fy, v, cvar = fy[keep], v[keep], cvar[keep]
    p = fy / fy.sum()
    delta0 = float(p @ cvar)
    if not delta > delta0:
        raise InfeasibleDistortion(f"delta {delta:g} does not exceed the MMSE {delta0:g}")
    order = np.argsort(v, kind="stable")
    v, p = v[order], p[order]
    xhat = np.linspace(v.min(), v.max(), n)
    d = _sq_dist(v, xhat)
    target = delta - delta0
    cost = p @ d
    zero = float(cost.min())
    if target >= zero:
        sol = BASolution(0.0, delta0 + zero, 0.0, 0, True, 0.0)
        return sol if full_output else 0.0

    sol = _targeted(p[None, :], np.ones(1), v, xhat, target, gap_tol)
    sol = BASolution(sol.rate, sol.distortion_achieved + delta0, sol.slope, sol.iterations,
                     sol.converged, sol.rate_lower, sol.output_pmf)
    return sol if full_output else sol.rate


# ---------------------------------------------------------------------------
# brute-force covariance searches
# ---------------------------------------------------------------------------


def _axis(lo, hi, n):
    # the upper end is always included, so n = 1 evaluates the corner
    return np.linspace(hi, lo, n)[::-1]


def _zoom_search(objective, box1, box2, c_interval, grid_n, rounds, maximize):
    """Grid search over ``(a, b, c)`` with ``c`` in ``c_interval(a, b)``, then zoom.

    ``c`` is parameterized by its fraction ``t`` in the feasible interval.
    """
    sign = 1.0 if maximize else -1.0
    (l1, h1), (l2, h2), (lt, ht) = box1, box2, (0.0, 1.0)
    best_val, best = -math.inf, None
    for _ in range(rounds):
        a = _axis(l1, h1, grid_n)
        b = _axis(l2, h2, grid_n)
        t = _axis(lt, ht, grid_n)
        A, B, T = np.meshgrid(a, b, t, indexing="ij")
        clo, chi = c_interval(A, B)
        ok = chi >= clo
        C = clo + T * (chi - clo)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = sign * objective(A, B, C)
        val = np.where(ok & np.isfinite(val), val, -math.inf)
        k = np.unravel_index(int(np.argmax(val)), val.shape)
        if val[k] > best_val:
            best_val = float(val[k])
            best = (float(A[k]), float(B[k]), float(C[k]), float(T[k]))
        if grid_n == 1 or best is None:
            break
        a0, b0, _, t0 = best
        w1 = 2 * (h1 - l1) / max(grid_n - 1, 1)
        w2 = 2 * (h2 - l2) / max(grid_n - 1, 1)
        wt = 2 * (ht - lt) / max(grid_n - 1, 1)
        l1, h1 = max(box1[0], a0 - w1), min(box1[1], a0 + w1)
        l2, h2 = max(box2[0], b0 - w2), min(box2[1], b0 + w2)
        lt, ht = max(0.0, t0 - wt), min(1.0, t0 + wt)
    return sign * best_val, best


def d_matrix_search(sigma, delta1: float, delta2: float, grid_n: int = 64, rounds: int = 8):
    """Brute-force ``max det D`` over ``0 <= D <= sigma``, ``D_ii <= delta_i``.

    Returns ``(det D, D)``.
    """
    s = np.asarray(sigma, dtype=float)
    if np.linalg.eigvalsh(s).min() <= 0:
        raise PreconditionError("covariance must be positive definite")
    s11, s22, s12 = s[0, 0], s[1, 1], s[0, 1]

    def c_interval(d1, d2):
        r_in = np.sqrt(d1 * d2)
        r_out = np.sqrt(np.maximum((s11 - d1) * (s22 - d2), 0.0))
        return np.maximum(-r_in, s12 - r_out), np.minimum(r_in, s12 + r_out)

    def det(d1, d2, c):
        return d1 * d2 - c * c

    val, (d1, d2, c, _) = _zoom_search(det, (0.0, min(delta1, s11)), (0.0, min(delta2, s22)),
                                       c_interval, grid_n, rounds, maximize=True)
    D = np.array([[d1, c], [c, d2]])
    tol = 1e-12 * max(s11, s22)
    if np.linalg.eigvalsh(D).min() < -tol or np.linalg.eigvalsh(s - D).min() < -tol:
        raise NumericalFailure("search returned an infeasible distortion matrix")
    return val, D


def lemma2_objective(k11, k22, c, lam):
    """``h(X') + h(Y') - (1 + lam) h(X', Y')`` for ``(X', Y') ~ N(0, K')``."""
    det = k11 * k22 - c * c
    return (0.5 * (2 * dc.LOG_2PIE + np.log(k11) + np.log(k22))
            - (1 + lam) * (dc.LOG_2PIE + 0.5 * np.log(det)))


def lemma2_covariance_search(rho: float, lam: float, grid_n: int = 64, rounds: int = 8) -> float:
    """Grid minimum of :func:`lemma2_objective` over ``0 <= K' <= [[1, rho], [rho, 1]]``.

    ``grid_n = 1`` evaluates ``K' = K`` only.
    """
    if not 0 < lam <= rho < 1:
        raise PreconditionError(f"need 0 < lambda <= rho < 1, got lambda={lam}, rho={rho}")

    def c_interval(k11, k22):
        r_in = np.sqrt(k11 * k22)
        r_out = np.sqrt(np.maximum((1 - k11) * (1 - k22), 0.0))
        return np.maximum(-r_in, rho - r_out), np.minimum(r_in, rho + r_out)

    val, _ = _zoom_search(lambda a, b, c: lemma2_objective(a, b, c, lam), (0.0, 1.0), (0.0, 1.0),
                          c_interval, grid_n, rounds, maximize=False)
    return val
