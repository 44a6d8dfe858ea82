"""Source distributions and the entropy functionals the bound formulas consume.

Scalar families: :class:`Gaussian`, :class:`Uniform`, :class:`Laplace`,
:class:`GaussianMixture` and :class:`Gridded`.  Pairs: :class:`BivariateGaussian`,
:class:`BivariateGaussianMixture` and :class:`GriddedJoint`.

All entropies are in nats.  Gaussian families bypass quadrature and use
closed forms; other analytic families go through adaptive Gauss-Kronrod
quadrature (``scipy.integrate.quad``) on a truncated range, gridded
densities through the trapezoidal rule on their stored grid.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, optimize, special

from .errors import NumericalFailure, SourceError

LOG_2PIE = math.log(2.0 * math.pi * math.e)

# densities below this fraction of the peak are treated as zero for quadrature
TAIL_RATIO = 1e-14
_GAUSS_CUT = math.sqrt(2.0 * math.log(1.0 / TAIL_RATIO))

QUAD_TOL = 1e-10
GRID_RENORM_TOL = 1e-4
CONVOLUTION_POINTS = 4097
JOINT_GRID_POINTS = 513


def _trapz(y, x, axis=-1):
    return integrate.trapezoid(y, x, axis=axis)


def _neg_xlogx(f):
    """-f log f with the 0 log 0 = 0 convention."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    pos = f > 0
    out[pos] = -f[pos] * np.log(f[pos])
    return out


def panel_nodes(lo, hi, breaks=(), max_width=None, order=16):
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``.

    Panels are split at every breakpoint inside the interval and further
    subdivided so no panel is wider than ``max_width``.
    """
    edges = [lo, hi] + [b for b in breaks if lo < b < hi]
    edges = np.unique(np.asarray(edges, dtype=float))
    if max_width is not None and max_width > 0:
        refined = []
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(1, int(math.ceil((b - a) / max_width)))
            refined.append(np.linspace(a, b, k + 1)[:-1])
        refined.append([edges[-1]])
        edges = np.concatenate(refined)
    t, w = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    h = (edges[1:] - edges[:-1])[:, None]
    nodes = a + 0.5 * h * (t[None, :] + 1.0)
    weights = 0.5 * h * w[None, :]
    return nodes.ravel(), weights.ravel()


# ---------------------------------------------------------------------------
# scalar sources
# ---------------------------------------------------------------------------


class ScalarSource(abc.ABC):
    """A one-dimensional probability density."""

    family = "abstract"

    @abc.abstractmethod
    def logpdf(self, x):
        ...

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    @abc.abstractmethod
    def cdf(self, x):
        ...

    def sf(self, x):
        return 1.0 - self.cdf(x)

    @property
    @abc.abstractmethod
    def mean(self) -> float:
        ...

    @property
    @abc.abstractmethod
    def variance(self) -> float:
        ...

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where the density is not smooth."""
        return ()

    @property
    def features(self) -> tuple[float, ...]:
        """Extra split points that help quadrature (modes, kinks)."""
        return self.breakpoints

    @property
    @abc.abstractmethod
    def quad_range(self) -> tuple[float, float]:
        """Finite range outside which the density is below ``TAIL_RATIO`` x peak."""

    def tail_mass(self, lo=None, hi=None) -> float:
        lo, hi = self.quad_range if lo is None else (lo, hi)
        return float(self.cdf(lo) + self.sf(hi))

    @abc.abstractmethod
    def scaled(self, c: float) -> "ScalarSource":
        """Distribution of ``c * X`` for ``c > 0``."""

    @abc.abstractmethod
    def to_dict(self) -> dict:
        ...


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise SourceError(f"{name} must be finite and positive, got {value!r}")


@dataclass(frozen=True)
class Gaussian(ScalarSource):
    mean_: float = 0.0
    variance_: float = 1.0
    family = "gaussian"

    def __post_init__(self):
        _check_positive("variance", self.variance_)

    @property
    def mean(self):
        return float(self.mean_)

    @property
    def variance(self):
        return float(self.variance_)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * math.log(2 * math.pi * self.variance_) - (x - self.mean_) ** 2 / (2 * self.variance_)

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.mean_) / self.std)

    def sf(self, x):
        return special.ndtr((self.mean_ - np.asarray(x, dtype=float)) / self.std)

    @property
    def quad_range(self):
        r = _GAUSS_CUT * self.std
        return (self.mean_ - r, self.mean_ + r)

    @property
    def features(self):
        return (self.mean,)

    def scaled(self, c):
        return Gaussian(self.mean_ * c, self.variance_ * c * c)

    def to_dict(self):
        return {"family": "gaussian", "mean": self.mean, "variance": self.variance}


@dataclass(frozen=True)
class Uniform(ScalarSource):
    a: float = 0.0
    b: float = 1.0
    family = "uniform"

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.b > self.a):
            raise SourceError(f"uniform needs a < b, got ({self.a}, {self.b})")

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def variance(self):
        return (self.b - self.a) ** 2 / 12.0

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.a) & (x <= self.b)
        return np.where(inside, -math.log(self.b - self.a), -np.inf)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    @property
    def support(self):
        return (self.a, self.b)

    @property
    def breakpoints(self):
        return (self.a, self.b)

    @property
    def quad_range(self):
        return (self.a, self.b)

    def scaled(self, c):
        return Uniform(self.a * c, self.b * c)

    def to_dict(self):
        return {"family": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Laplace(ScalarSource):
    location: float = 0.0
    scale: float = 1.0
    family = "laplace"

    def __post_init__(self):
        _check_positive("scale", self.scale)

    @property
    def mean(self):
        return float(self.location)

    @property
    def variance(self):
        return 2.0 * self.scale**2

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -math.log(2 * self.scale) - np.abs(x - self.location) / self.scale

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        return np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0)), 1 - 0.5 * np.exp(-np.maximum(z, 0)))

    def sf(self, x):
        return self.cdf(2 * self.location - np.asarray(x, dtype=float))

    @property
    def breakpoints(self):
        return (self.location,)

    @property
    def quad_range(self):
        r = self.scale * math.log(1.0 / TAIL_RATIO)
        return (self.location - r, self.location + r)

    def scaled(self, c):
        return Laplace(self.location * c, self.scale * c)

    def to_dict(self):
        return {"family": "laplace", "location": self.location, "scale": self.scale}


@dataclass(frozen=True, eq=False)
class GaussianMixture(ScalarSource):
    weights: tuple
    means: tuple
    variances: tuple
    family = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.means, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if not (w.ndim == m.ndim == v.ndim == 1 and len(w) == len(m) == len(v) and len(w) > 0):
            raise SourceError("mixture weights, means and variances must be equal-length lists")
        if np.any(w < 0) or abs(w.sum() - 1) > GRID_RENORM_TOL:
            raise SourceError("mixture weights must be nonnegative and sum to 1")
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise SourceError("mixture variances must be positive")
        object.__setattr__(self, "weights", tuple(w / w.sum()))
        object.__setattr__(self, "means", tuple(m))
        object.__setattr__(self, "variances", tuple(v))

    def _arrays(self):
        return np.array(self.weights), np.array(self.means), np.array(self.variances)

    @property
    def mean(self):
        w, m, _ = self._arrays()
        return float(w @ m)

    @property
    def variance(self):
        w, m, v = self._arrays()
        return float(w @ (v + m**2) - (w @ m) ** 2)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        w, m, v = self._arrays()
        comp = (
            np.log(np.where(w > 0, w, 1.0))[:, None]
            - 0.5 * np.log(2 * np.pi * v)[:, None]
            - (x.reshape(1, -1) - m[:, None]) ** 2 / (2 * v[:, None])
        )
        comp[w == 0] = -np.inf
        return special.logsumexp(comp, axis=0).reshape(x.shape)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        w, m, v = self._arrays()
        z = (x.reshape(1, -1) - m[:, None]) / np.sqrt(v)[:, None]
        return (w @ special.ndtr(z)).reshape(x.shape)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        w, m, v = self._arrays()
        z = (m[:, None] - x.reshape(1, -1)) / np.sqrt(v)[:, None]
        return (w @ special.ndtr(z)).reshape(x.shape)

    @property
    def features(self):
        return tuple(sorted(set(self.means)))

    @cached_property
    def quad_range(self):
        w, m, v = self._arrays()
        s = np.sqrt(v)
        log_peak = float(np.max(self.logpdf(m)))
        target = log_peak + math.log(TAIL_RATIO)

        def g(x):
            return float(self.logpdf(np.array([x]))[0]) - target

        ends = []
        for start, direction in ((m.min(), -1.0), (m.max(), 1.0)):
            step = s.max()
            far = start + direction * step
            while g(far) > 0:
                step *= 2
                far = start + direction * step
            ends.append(optimize.brentq(g, start if g(start) > 0 else start - direction * 1e-12, far, xtol=1e-12))
        return (min(ends), max(ends))

    def scaled(self, c):
        w, m, v = self._arrays()
        return GaussianMixture(tuple(w), tuple(m * c), tuple(v * c * c))

    def to_dict(self):
        return {
            "family": "mixture",
            "weights": list(self.weights),
            "means": list(self.means),
            "variances": list(self.variances),
        }


@dataclass(frozen=True, eq=False)
class Gridded(ScalarSource):
    """Density tabulated on a strictly increasing grid, linear in between.

    The stored values are renormalized when their trapezoidal integral is
    within ``GRID_RENORM_TOL`` of one and rejected otherwise.
    """

    x: np.ndarray
    density: np.ndarray
    family = "grid"

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        f = np.array(self.density, dtype=float)
        if x.ndim != 1 or f.shape != x.shape or len(x) < 3:
            raise SourceError("grid needs equal-length 'x' and 'pdf' arrays with at least 3 points")
        if not np.all(np.isfinite(x)) or not np.all(np.diff(x) > 0):
            raise SourceError("grid 'x' must be finite and strictly increasing")
        if not np.all(np.isfinite(f)) or np.any(f < 0):
            raise SourceError("grid 'pdf' must be finite and nonnegative")
        total = _trapz(f, x)
        if abs(total - 1.0) > GRID_RENORM_TOL:
            raise SourceError(f"grid density integrates to {total:.6g}, not 1")
        f = f / total
        x.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "density", f)
        var = self.variance
        if not (np.isfinite(var) and var > 0):
            raise SourceError("grid density has no finite positive variance")

    def pdf(self, x):
        return np.interp(np.asarray(x, dtype=float), self.x, self.density, left=0.0, right=0.0)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    @cached_property
    def _cum(self):
        h = np.diff(self.x)
        return np.concatenate([[0.0], np.cumsum(0.5 * h * (self.density[1:] + self.density[:-1]))])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xs, f, cum = self.x, self.density, self._cum
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        h = xs[i + 1] - xs[i]
        t = np.clip(x - xs[i], 0.0, h)
        val = cum[i] + f[i] * t + (f[i + 1] - f[i]) * t * t / (2 * h)
        return np.where(x <= xs[0], 0.0, np.where(x >= xs[-1], 1.0, val))

    @cached_property
    def mean(self):
        return float(_trapz(self.x * self.density, self.x))

    @cached_property
    def variance(self):
        m = self.mean
        return float(_trapz((self.x - m) ** 2 * self.density, self.x))

    @property
    def support(self):
        return (float(self.x[0]), float(self.x[-1]))

    @property
    def breakpoints(self):
        return tuple(self.x)

    @property
    def features(self):
        return ()

    @property
    def quad_range(self):
        return self.support

    def scaled(self, c):
        return Gridded(self.x * c, self.density / c)

    def to_dict(self):
        return {"family": "grid", "x": self.x.tolist(), "pdf": self.density.tolist()}


# ---------------------------------------------------------------------------
# scalar functionals
# ---------------------------------------------------------------------------


def variance(source: ScalarSource) -> float:
    """Second central moment, closed form where available."""
    v = source.variance
    if not (np.isfinite(v) and v > 0):
        raise SourceError(f"{source.family} source has no finite positive variance")
    return float(v)


def _quad_pieces(source):
    lo, hi = source.quad_range
    pts = sorted({lo, hi, *[p for p in source.features if lo < p < hi]})
    return list(zip(pts[:-1], pts[1:]))


def differential_entropy(source: ScalarSource, full_output: bool = False):
    """Differential entropy ``h(X) = -int f log f`` in nats.

    With ``full_output`` the return value is ``(h, error_budget)`` where the
    budget adds the quadrature error estimate and the tail truncation.
    """
    if isinstance(source, Gaussian):
        h, err = 0.5 * (LOG_2PIE + math.log(source.variance)), 0.0
    elif isinstance(source, Gridded):
        h = float(_trapz(_neg_xlogx(source.density), source.x))
        err = 0.0
    else:

        def integrand(x):
            lp = float(source.logpdf(np.array([x]))[0])
            return 0.0 if lp == -math.inf else -math.exp(lp) * lp

        h, err = 0.0, 0.0
        for a, b in _quad_pieces(source):
            val, e = integrate.quad(integrand, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)
            h += val
            err += e
        lo, hi = source.quad_range
        tail = source.tail_mass(lo, hi)
        if tail > 0:
            log_edge = float(np.max(source.logpdf(np.array([lo, hi]))))
            err += tail * (1.0 + abs(log_edge))
    if not math.isfinite(h):
        raise NumericalFailure(f"differential entropy of {source.family} source is not finite")
    return (h, err) if full_output else h


def entropy_power(source: ScalarSource) -> float:
    """``N(X) = exp(2 h(X)) / (2 pi e)``; equals the variance for Gaussians."""
    if isinstance(source, Gaussian):
        return source.variance
    return math.exp(2.0 * differential_entropy(source) - LOG_2PIE)


def kl_to_gaussian(source: ScalarSource) -> float:
    """KL divergence from the source to the Gaussian with the same variance."""
    if isinstance(source, Gaussian):
        return 0.0
    return 0.5 * (LOG_2PIE + math.log(variance(source))) - differential_entropy(source)


# ---------------------------------------------------------------------------
# bivariate sources
# ---------------------------------------------------------------------------


def _cov_checks(cov):
    cov = np.asarray(cov, dtype=float)
    if not np.all(np.isfinite(cov)) or cov[0, 0] <= 0 or cov[1, 1] <= 0:
        raise SourceError("covariance must have positive finite diagonal")
    rho = cov[0, 1] / math.sqrt(cov[0, 0] * cov[1, 1])
    if not abs(rho) < 1:
        raise SourceError(f"covariance is singular (|rho| = {abs(rho):.6g})")
    return cov


class BivariateSource(abc.ABC):
    """Joint density of a pair ``(X1, X2)``."""

    family = "abstract"

    @property
    @abc.abstractmethod
    def mean(self) -> np.ndarray:
        ...

    @property
    @abc.abstractmethod
    def covariance(self) -> np.ndarray:
        ...

    @property
    def correlation(self) -> float:
        c = self.covariance
        return float(c[0, 1] / math.sqrt(c[0, 0] * c[1, 1]))

    @abc.abstractmethod
    def marginal(self, index: int) -> ScalarSource:
        ...

    @abc.abstractmethod
    def to_grid(self, n: int = JOINT_GRID_POINTS) -> "GriddedJoint":
        ...

    @abc.abstractmethod
    def to_dict(self) -> dict:
        ...

    def swapped(self) -> "BivariateSource":
        """The same source with the two components exchanged."""
        g = self.to_grid()
        return GriddedJoint(g.x2, g.x1, g.density.T)


@dataclass(frozen=True, eq=False)
class BivariateGaussian(BivariateSource):
    variances: tuple = (1.0, 1.0)
    rho: float = 0.0
    means: tuple = (0.0, 0.0)
    family = "bivariate_gaussian"

    def __post_init__(self):
        v = tuple(float(a) for a in self.variances)
        if len(v) != 2:
            raise SourceError("bivariate gaussian needs two variances")
        for a in v:
            _check_positive("variance", a)
        if not abs(self.rho) < 1:
            raise SourceError(f"correlation must satisfy |rho| < 1, got {self.rho}")
        object.__setattr__(self, "variances", v)
        object.__setattr__(self, "means", tuple(float(a) for a in self.means))

    @property
    def mean(self):
        return np.array(self.means)

    @property
    def covariance(self):
        v1, v2 = self.variances
        c = self.rho * math.sqrt(v1 * v2)
        return np.array([[v1, c], [c, v2]])

    @property
    def correlation(self):
        return float(self.rho)

    def marginal(self, index):
        return Gaussian(self.means[index], self.variances[index])

    def pdf(self, x1, x2):
        cov = self.covariance
        inv = np.linalg.inv(cov)
        d1 = np.asarray(x1, dtype=float) - self.means[0]
        d2 = np.asarray(x2, dtype=float) - self.means[1]
        q = inv[0, 0] * d1 * d1 + 2 * inv[0, 1] * d1 * d2 + inv[1, 1] * d2 * d2
        return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(np.linalg.det(cov)))

    def to_grid(self, n=JOINT_GRID_POINTS):
        axes = [np.linspace(m - _GAUSS_CUT * math.sqrt(v), m + _GAUSS_CUT * math.sqrt(v), n)
                for m, v in zip(self.means, self.variances)]
        X1, X2 = np.meshgrid(*axes, indexing="ij")
        return GriddedJoint(axes[0], axes[1], self.pdf(X1, X2))

    def swapped(self):
        return BivariateGaussian(self.variances[::-1], self.rho, self.means[::-1])

    def to_dict(self):
        return {"family": "bivariate_gaussian", "variances": list(self.variances),
                "rho": self.rho, "means": list(self.means)}


@dataclass(frozen=True, eq=False)
class BivariateGaussianMixture(BivariateSource):
    weights: tuple
    means: tuple
    covariances: tuple
    family = "bivariate_mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.means, dtype=float).reshape(-1, 2)
        c = np.asarray(self.covariances, dtype=float).reshape(-1, 2, 2)
        if not (len(w) == len(m) == len(c) > 0):
            raise SourceError("bivariate mixture parts must have equal length")
        if np.any(w < 0) or abs(w.sum() - 1) > GRID_RENORM_TOL:
            raise SourceError("mixture weights must be nonnegative and sum to 1")
        for ck in c:
            if not np.allclose(ck, ck.T) or np.any(np.linalg.eigvalsh(ck) <= 0):
                raise SourceError("mixture component covariances must be symmetric positive definite")
        object.__setattr__(self, "weights", tuple(w / w.sum()))
        object.__setattr__(self, "means", tuple(map(tuple, m)))
        object.__setattr__(self, "covariances", tuple(tuple(map(tuple, ck)) for ck in c))
        _cov_checks(self.covariance)

    def _arrays(self):
        return np.array(self.weights), np.array(self.means), np.array(self.covariances)

    @property
    def mean(self):
        w, m, _ = self._arrays()
        return w @ m

    @property
    def covariance(self):
        w, m, c = self._arrays()
        mu = w @ m
        second = np.einsum("k,kij->ij", w, c + m[:, :, None] * m[:, None, :])
        return second - np.outer(mu, mu)

    def marginal(self, index):
        w, m, c = self._arrays()
        return GaussianMixture(tuple(w), tuple(m[:, index]), tuple(c[:, index, index]))

    def pdf(self, x1, x2):
        w, m, c = self._arrays()
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape)
        for wk, mk, ck in zip(w, m, c):
            inv = np.linalg.inv(ck)
            d1, d2 = x1 - mk[0], x2 - mk[1]
            q = inv[0, 0] * d1 * d1 + 2 * inv[0, 1] * d1 * d2 + inv[1, 1] * d2 * d2
            out += wk * np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(np.linalg.det(ck)))
        return out

    def to_grid(self, n=JOINT_GRID_POINTS):
        axes = []
        for i in range(2):
            lo, hi = self.marginal(i).quad_range
            axes.append(np.linspace(lo, hi, n))
        X1, X2 = np.meshgrid(*axes, indexing="ij")
        return GriddedJoint(axes[0], axes[1], self.pdf(X1, X2))

    def to_dict(self):
        return {"family": "bivariate_mixture", "weights": list(self.weights),
                "means": [list(m) for m in self.means],
                "covariances": [[list(r) for r in ck] for ck in self.covariances]}


@dataclass(frozen=True, eq=False)
class GriddedJoint(BivariateSource):
    """Joint density sampled on a tensor grid, ``density[i, j] = f(x1[i], x2[j])``."""

    x1: np.ndarray
    x2: np.ndarray
    density: np.ndarray
    family = "grid2d"

    def __post_init__(self):
        x1 = np.array(self.x1, dtype=float)
        x2 = np.array(self.x2, dtype=float)
        f = np.array(self.density, dtype=float)
        if x1.ndim != 1 or x2.ndim != 1 or f.shape != (len(x1), len(x2)):
            raise SourceError("grid2d density must have shape (len(x1), len(x2))")
        for ax in (x1, x2):
            if len(ax) < 3 or not np.all(np.isfinite(ax)) or not np.all(np.diff(ax) > 0):
                raise SourceError("grid2d axes must be finite and strictly increasing")
        if not np.all(np.isfinite(f)) or np.any(f < 0):
            raise SourceError("grid2d density must be finite and nonnegative")
        total = _trapz(_trapz(f, x2, axis=1), x1)
        if abs(total - 1.0) > GRID_RENORM_TOL:
            raise SourceError(f"grid2d density integrates to {total:.6g}, not 1")
        f = f / total
        for a in (x1, x2, f):
            a.setflags(write=False)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "density", f)
        _cov_checks(self.covariance)

    def _axis(self, index):
        return self.x1 if index == 0 else self.x2

    @cached_property
    def mean(self):
        m1 = _trapz(self.x1 * _trapz(self.density, self.x2, axis=1), self.x1)
        m2 = _trapz(self.x2 * _trapz(self.density, self.x1, axis=0), self.x2)
        return np.array([m1, m2])

    @cached_property
    def covariance(self):
        m1, m2 = self.mean
        d1 = (self.x1 - m1)[:, None]
        d2 = (self.x2 - m2)[None, :]

        def e(g):
            return _trapz(_trapz(g * self.density, self.x2, axis=1), self.x1)

        c = np.array([[e(d1 * d1), e(d1 * d2)], [e(d1 * d2), e(d2 * d2)]])
        c.setflags(write=False)
        return c

    def marginal(self, index):
        other = 1 - index
        f = _trapz(self.density, self._axis(other), axis=other)
        return Gridded(self._axis(index), f)

    def to_grid(self, n=None):
        return self

    def swapped(self):
        return GriddedJoint(self.x2, self.x1, self.density.T)

    def to_dict(self):
        return {"family": "grid2d", "x1": self.x1.tolist(), "x2": self.x2.tolist(),
                "pdf": self.density.tolist()}


# ---------------------------------------------------------------------------
# bivariate functionals
# ---------------------------------------------------------------------------


def joint_entropy(source: BivariateSource) -> float:
    """``h(X1, X2)`` in nats."""
    if isinstance(source, BivariateGaussian):
        return LOG_2PIE + 0.5 * math.log(np.linalg.det(source.covariance))
    g = source.to_grid()
    h = float(_trapz(_trapz(_neg_xlogx(g.density), g.x2, axis=1), g.x1))
    if not math.isfinite(h):
        raise NumericalFailure("joint entropy is not finite")
    return h


def joint_entropy_power(source: BivariateSource) -> float:
    """``N(X1, X2) = exp(h(X1, X2)) / (2 pi e)``, so that ``N**2 = det(cov)`` for Gaussians.

    Note the single (not doubled) exponent on the joint entropy.
    """
    if isinstance(source, BivariateGaussian):
        return math.sqrt(np.linalg.det(source.covariance))
    return math.exp(joint_entropy(source) - LOG_2PIE)


def conditional_entropy_power(source: BivariateSource, condition_on: int = 1) -> float:
    """``N(X|W) = exp(2 h(X|W)) / (2 pi e)`` with ``W`` the component ``condition_on``."""
    if condition_on not in (0, 1):
        raise ValueError("condition_on must be 0 or 1")
    if isinstance(source, BivariateGaussian):
        other = 1 - condition_on
        return source.variances[other] * (1 - source.rho**2)
    g = source.to_grid()
    h_cond = joint_entropy(g) - differential_entropy(g.marginal(condition_on))
    return math.exp(2.0 * h_cond - LOG_2PIE)


def mmse(source: BivariateSource, estimate: int = 0, given: int = 1) -> float:
    """Minimum mean-squared error ``E[(X_estimate - E[X_estimate | X_given])**2]``."""
    if {estimate, given} != {0, 1}:
        raise ValueError("estimate and given must be 0 and 1 in some order")
    if isinstance(source, BivariateGaussian):
        return source.variances[estimate] * (1 - source.rho**2)
    g = source.to_grid()
    f = g.density if estimate == 0 else g.density.T
    xs, ws = g._axis(estimate), g._axis(given)
    marg = _trapz(f, xs, axis=0)
    keep = marg > 0
    cond_mean = np.zeros_like(marg)
    cond_mean[keep] = _trapz(xs[:, None] * f[:, keep], xs, axis=0) / marg[keep]
    resid = _trapz((xs[:, None] - cond_mean[None, :]) ** 2 * f, xs, axis=0)
    value = float(_trapz(resid, ws))
    if not math.isfinite(value):
        raise NumericalFailure("conditional variance integral diverged")
    return value


def linear_mmse(source: BivariateSource, estimate: int = 0) -> float:
    """Error of the best affine estimator, ``var * (1 - rho**2)``."""
    c = source.covariance
    return float(c[estimate, estimate] * (1 - source.correlation**2))


# ---------------------------------------------------------------------------
# additive noise
# ---------------------------------------------------------------------------


def convolve(a: ScalarSource, b: ScalarSource, n: int = CONVOLUTION_POINTS) -> ScalarSource:
    """Density of ``A + B`` for independent ``A`` and ``B``.

    Gaussian pairs stay closed form; anything else is tabulated on a
    uniform grid of ``n`` points by Gauss-Legendre quadrature of
    ``int f_a(x) f_b(y - x) dx``.
    """
    if isinstance(a, Gaussian) and isinstance(b, Gaussian):
        return Gaussian(a.mean + b.mean, a.variance + b.variance)
    if b.breakpoints and not a.breakpoints:
        a, b = b, a
    alo, ahi = a.quad_range
    blo, bhi = b.quad_range
    y = np.linspace(alo + blo, ahi + bhi, n)
    width = min(a.std, b.std) / 4
    many = len(a.breakpoints) > 64
    xs, wx = panel_nodes(alo, ahi, a.breakpoints + a.features, None if many else width, 4 if many else 16)
    log_fa = a.logpdf(xs)
    live = np.isfinite(log_fa)
    xs, wx, fa = xs[live], wx[live], np.exp(log_fa[live])
    out = np.empty_like(y)
    chunk = max(1, 4_000_000 // max(len(xs), 1))
    for s in range(0, len(y), chunk):
        yy = y[s:s + chunk, None]
        out[s:s + chunk] = (b.pdf(yy - xs[None, :]) * fa[None, :]) @ wx
    return Gridded(y, out)


@dataclass(frozen=True, eq=False)
class AdditiveNoiseModel:
    """Observation ``Y = X + Z`` with ``X`` and ``Z`` independent."""

    signal: ScalarSource
    noise: ScalarSource

    @cached_property
    def observation(self) -> ScalarSource:
        return convolve(self.signal, self.noise)

    @property
    def lmmse(self) -> float:
        vx, vz = self.signal.variance, self.noise.variance
        return vx * vz / (vx + vz)

    def joint(self, n: int = JOINT_GRID_POINTS) -> GriddedJoint:
        """Tabulated joint density of ``(X, Y)``."""
        xlo, xhi = self.signal.quad_range
        zlo, zhi = self.noise.quad_range
        x = np.linspace(xlo, xhi, n)
        y = np.linspace(xlo + zlo, xhi + zhi, n)
        f = self.signal.pdf(x)[:, None] * self.noise.pdf(y[None, :] - x[:, None])
        return GriddedJoint(x, y, f)


def product_joint(a: ScalarSource, b: ScalarSource, n: int = JOINT_GRID_POINTS) -> GriddedJoint:
    """Tabulated joint density of independent ``(A, B)``."""
    axes = [np.linspace(*s.quad_range, n) for s in (a, b)]
    return GriddedJoint(axes[0], axes[1], a.pdf(axes[0])[:, None] * b.pdf(axes[1])[None, :])
