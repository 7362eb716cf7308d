"""Pareto mixing law, the PME (Pareto mixture of exponentials) law and the
service-time models consumed by the queueing code.

Both laws are normalised so that their mean is one: the Pareto scale is tied
to the shape as ``x_m = (r - 1) / r``. The PME density is evaluated after the
substitution ``x = 1 / y`` which turns the mixing integral over ``[x_m, inf)``
into a finite integral over ``[0, 1 / x_m]``:

    g_r(t) = r x_m**r  int_0^{1/x_m} x**r     exp(-t x) dx
    H_r(t) = r x_m**r  int_0^{1/x_m} x**(r-1) exp(-t x) dx      (tail)

The scalar functions below use adaptive Gauss-Kronrod quadrature on that
finite interval. Service models evaluate the same integrals on arrays with a
fixed panel rule (see ``_rules``).
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from ._rules import chunked, power_weight_rule

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10


def _check_shape(r):
    if not (isinstance(r, (int, float)) and math.isfinite(r)) or r <= 1.0:
        raise ValueError(f"r must exceed 1, got {r!r}")
    return float(r)


def _check_time(t, name="t"):
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"{name} must be finite, got {t!r}")
    if t < 0.0:
        raise ValueError(f"{name} must be non-negative, got {t!r}")
    return t


@dataclass(frozen=True)
class ParetoParams:
    """Pareto law with shape ``r`` and unit mean (scale ``(r - 1) / r``)."""

    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _check_shape(self.r))

    @property
    def x_m(self):
        return (self.r - 1.0) / self.r


@dataclass(frozen=True)
class PmeParams:
    """PME law: exponential whose mean is ``ParetoParams(r)`` distributed."""

    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _check_shape(self.r))

    @property
    def x_m(self):
        return (self.r - 1.0) / self.r

    @property
    def upper(self):
        """Upper limit ``1 / x_m`` of the rate integral."""
        return self.r / (self.r - 1.0)

    @property
    def coefficient(self):
        return self.r * self.x_m**self.r

    @property
    def pareto(self):
        return ParetoParams(self.r)


def pareto_pdf(p, x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if x < p.x_m:
        return 0.0
    return p.r * p.x_m**p.r * x ** -(p.r + 1.0)


def _rate_integral(p, power, t, epsabs, epsrel):
    # int_0^{1/x_m} x**power exp(-t x) dx, split where exp(-t x) turns over
    b = p.upper
    points = [c / t for c in (1.0, 10.0, 40.0) if t > 0.0 and c / t < b]
    val, _ = integrate.quad(
        lambda x: x**power * math.exp(-t * x),
        0.0,
        b,
        points=points or None,
        epsabs=epsabs,
        epsrel=epsrel,
        limit=200,
    )
    return val


def pme_pdf(p, t, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL):
    """Density of the PME law at ``t >= 0``."""
    t = _check_time(t)
    return p.coefficient * _rate_integral(p, p.r, t, epsabs, epsrel)


def pme_tail(p, t, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL):
    """Survival function ``P(T > t)`` of the PME law."""
    t = _check_time(t)
    if t == 0.0:
        return 1.0
    return p.coefficient * _rate_integral(p, p.r - 1.0, t, epsabs, epsrel)


def pme_moment(p, n):
    """Raw moment ``E[T**n]``; ``math.inf`` when ``n >= r``.

    The closed form ``n! r/(r-n) x_m**n`` turns negative past ``n = r``, where
    the defining integral has already diverged, so the finite branch is
    restricted to ``n < r``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if n >= p.r:
        return math.inf
    return math.factorial(n) * p.r / (p.r - n) * p.x_m**n


def pme_sample(p, rng, size=None):
    """Draw from the PME law: Pareto mean by inverse CDF, then exponential."""
    u = 1.0 - rng.random(size)
    mean = p.x_m * u ** (-1.0 / p.r)
    return rng.exponential(mean)


def _pme_rate_sum(p, power, t, kernel):
    # vectorised counterpart of _rate_integral on the fixed panel rule
    x, w = power_weight_rule(power, p.upper)
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    out = np.empty(flat.shape)
    for sl in chunked(flat.size, 2048):
        out[sl] = kernel(flat[sl, None], x) @ w
    return p.coefficient * out.reshape(t.shape)


class ServiceModel:
    """Service-time law: tail, density, mean and sampler.

    Concrete variants are :class:`Exponential`, :class:`Deterministic`,
    :class:`Pareto`, :class:`Pme` and :class:`Tabulated`. Array methods accept
    scalars or arrays of non-negative times.
    """

    @property
    def mean(self):
        raise NotImplementedError

    @property
    def breakpoints(self):
        """Times where the tail is not smooth; quadrature splits there."""
        return ()

    def tail(self, t):
        raise NotImplementedError

    def integrated_tail(self, t):
        """``int_0^t tail(v) dv``."""
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(ServiceModel):
    rate: float

    def __post_init__(self):
        if not math.isfinite(self.rate) or self.rate <= 0.0:
            raise ValueError(f"rate must be positive, got {self.rate!r}")

    @property
    def mean(self):
        return 1.0 / self.rate

    def tail(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def integrated_tail(self, t):
        return -np.expm1(-self.rate * np.asarray(t, dtype=float)) / self.rate

    def pdf(self, t):
        return self.rate * self.tail(t)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class Deterministic(ServiceModel):
    d: float

    def __post_init__(self):
        if not math.isfinite(self.d) or self.d <= 0.0:
            raise ValueError(f"d must be positive, got {self.d!r}")

    @property
    def mean(self):
        return self.d

    @property
    def breakpoints(self):
        return (self.d,)

    def tail(self, t):
        return np.where(np.asarray(t, dtype=float) < self.d, 1.0, 0.0)

    def integrated_tail(self, t):
        return np.minimum(np.asarray(t, dtype=float), self.d)

    def pdf(self, t):
        raise ValueError("deterministic service has no density")

    def sample(self, rng, size=None):
        if size is None:
            return self.d
        return np.full(size, self.d)


@dataclass(frozen=True)
class Pareto(ServiceModel):
    params: ParetoParams

    @property
    def mean(self):
        return 1.0

    @property
    def breakpoints(self):
        return (self.params.x_m,)

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        r, xm = self.params.r, self.params.x_m
        with np.errstate(divide="ignore"):
            return np.where(t < xm, 1.0, (xm / np.maximum(t, xm)) ** r)

    def integrated_tail(self, t):
        t = np.asarray(t, dtype=float)
        r, xm = self.params.r, self.params.x_m
        late = xm + xm * (1.0 - (xm / np.maximum(t, xm)) ** (r - 1.0)) / (r - 1.0)
        return np.where(t < xm, t, late)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        r, xm = self.params.r, self.params.x_m
        return np.where(t < xm, 0.0, r * xm**r * np.maximum(t, xm) ** -(r + 1.0))

    def sample(self, rng, size=None):
        u = 1.0 - rng.random(size)
        return self.params.x_m * u ** (-1.0 / self.params.r)


@dataclass(frozen=True)
class Pme(ServiceModel):
    params: PmeParams

    @property
    def mean(self):
        return 1.0

    def tail(self, t):
        return _pme_rate_sum(self.params, self.params.r - 1.0, t, lambda tt, x: np.exp(-tt * x))

    def integrated_tail(self, t):
        # int_0^t H = c int x**(r-1) (1 - exp(-t x)) / x dx
        return _pme_rate_sum(
            self.params, self.params.r - 1.0, t, lambda tt, x: -np.expm1(-tt * x) / x
        )

    def pdf(self, t):
        return _pme_rate_sum(self.params, self.params.r, t, lambda tt, x: np.exp(-tt * x))

    def sample(self, rng, size=None):
        return pme_sample(self.params, rng, size)


@dataclass(frozen=True, eq=False)
class Tabulated(ServiceModel):
    """Service law given by a tabulated tail, linear between grid points.

    A point ``(0, 1)`` is prepended when the grid starts after zero. The tail
    is zero past the last grid point, is clipped to ``[0, 1]`` and made
    non-increasing so that small numerical ripples in recovered curves do not
    produce an invalid law.
    """

    grid: np.ndarray
    values: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 2")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
            raise ValueError("grid and values must be finite")
        if np.any(np.diff(g) <= 0.0) or g[0] < 0.0:
            raise ValueError("grid must be non-negative and strictly increasing")
        if g[0] > 0.0:
            g = np.concatenate([[0.0], g])
            v = np.concatenate([[1.0], v])
        v = np.minimum.accumulate(np.clip(v, 0.0, 1.0))
        v[0] = 1.0
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(g) * (v[1:] + v[:-1]))])
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_cum", cum)

    @property
    def mean(self):
        return float(self._cum[-1])

    @property
    def breakpoints(self):
        return tuple(self.grid[1:])

    def tail(self, t):
        return np.interp(np.asarray(t, dtype=float), self.grid, self.values, right=0.0)

    def integrated_tail(self, t):
        t = np.asarray(t, dtype=float)
        g, v = self.grid, self.values
        i = np.clip(np.searchsorted(g, t, side="right") - 1, 0, g.size - 2)
        slope = (v[i + 1] - v[i]) / (g[i + 1] - g[i])
        dt = np.minimum(t, g[-1]) - g[i]
        return self._cum[i] + dt * v[i] + 0.5 * slope * dt**2

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        g, v = self.grid, self.values
        i = np.clip(np.searchsorted(g, t, side="right") - 1, 0, g.size - 2)
        slope = (v[i + 1] - v[i]) / (g[i + 1] - g[i])
        return np.where(t < g[-1], -slope, 0.0)

    def sample(self, rng, size=None):
        u = rng.random(size)
        # tail is non-increasing, so invert on the reversed table
        out = np.interp(u, self.values[::-1], self.grid[::-1])
        return float(out) if size is None else out


def service_tail(m, t):
    _check_time(t)
    return float(m.tail(t))


def service_mean(m):
    return float(m.mean)


def service_sample(m, rng, size=None):
    return m.sample(rng, size)
