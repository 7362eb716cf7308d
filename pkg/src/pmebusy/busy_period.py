"""Busy-period transform calculus for the M|G|inf queue.

Notation: ``lam`` is the arrival rate, ``tail`` the service survival function
with mean ``alpha`` and ``rho = lam * alpha``. With ``M(t) = int_0^t tail``,

    Psi(t) = lam * tail(t) * exp(-lam M(t)) = -d/dt exp(-lam M(t))

integrates to ``1 - exp(-rho)``, and its transform ``psi`` is tied to the
transform ``u`` of the busy-period tail ``U(t) = P(B > t)`` by

    psi(s) = lam u(s) / (lam u(s) + 1),   i.e.   u(s) = psi(s) / (lam (1 - psi(s))).

Forward map: service -> Psi -> psi -> u -> (inversion) U.

Inverse map: given ``u``, invert ``phi = lam u / (lam u + 1)`` to get
``f = Psi``; then ``F = int_0^t f = 1 - exp(-lam M(t))`` and the service tail is
recovered as ``tail = f / (lam (1 - F))``. When the busy period is PME(r),
``u(0) = 1`` forces ``F(inf) = lam / (1 + lam)``, so ``rho = log(1 + lam)``.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy import integrate

from ._rules import chunked, time_panel_rule
from .dist_core import PmeParams, ServiceModel
from .exceptions import NumericalError
from .laplace import DEFAULT_CONFIG, ilt, lt_numeric, pme_tail_lt_batch

log = logging.getLogger(__name__)

DEFAULT_GRID = np.geomspace(1e-3, 50.0, 400)
# moment classification at T..8T needs the recovered tail far past t = 50
RECOVERY_GRID = np.geomspace(1e-3, 2e4, 500)
CLAMP_TOLERANCE = 5e-2


@dataclass(frozen=True)
class QueueParams:
    lam: float
    service: ServiceModel

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam <= 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam!r}")
        if not isinstance(self.service, ServiceModel):
            raise TypeError("service must be a ServiceModel")

    @property
    def rho(self):
        return self.lam * self.service.mean


@dataclass(frozen=True, eq=False)
class TailCurve:
    """Function sampled on a strictly increasing grid that starts at zero.

    ``excursion`` records how far the raw values strayed outside ``[0, 1]``
    before clamping (zero for curves that were never clamped).
    """

    grid: np.ndarray
    values: np.ndarray
    excursion: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must be 1-d and aligned")
        if g[0] != 0.0 or np.any(np.diff(g) <= 0.0):
            raise ValueError("grid must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)

    def integral(self, upto=None):
        g, v = self.grid, self.values
        if upto is not None:
            keep = g < upto
            g = np.append(g[keep], upto)
            v = np.append(v[keep], np.interp(upto, self.grid, self.values))
        return float(np.trapezoid(v, g))


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """A possibly divergent moment with the truncated values behind the call."""

    value: float
    status: str
    truncated: tuple


@dataclass(frozen=True, eq=False)
class RecoveredService:
    """Service law recovered from a busy-period transform.

    tail: recovered ``1 - G`` on the grid (``tail.grid[0] == 0``).
    density, cdf: ``f = Psi`` and ``F`` on the same grid.
    implied_alpha: mean implied by the transform identity at ``s = 0``.
    mean: trapezoid integral of the recovered tail over the grid.
    """

    tail: TailCurve
    density: np.ndarray
    cdf: np.ndarray
    lam: float
    implied_alpha: float
    mean: float

    @property
    def excursion(self):
        return self.tail.excursion


def _positive_grid(grid):
    g = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    g = g[g > 0.0] if g.size and g[0] == 0.0 else g
    if g.ndim != 1 or g.size == 0 or np.any(g <= 0.0) or np.any(np.diff(g) <= 0.0):
        raise ValueError("grid must be positive and strictly increasing")
    return g


def _split_points(service, upper):
    ladder = [10.0**k for k in range(-3, 9) if 10.0**k < upper]
    return sorted({p for p in (*service.breakpoints, *ladder) if 0.0 < p < upper})


def integrated_service_tail(q, t):
    """``M(t) = int_0^t tail(v) dv`` by adaptive quadrature."""
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be non-negative, got {t!r}")
    if t == 0.0:
        return 0.0
    pts = _split_points(q.service, t)
    val, _ = integrate.quad(
        lambda v: float(q.service.tail(v)),
        0.0,
        t,
        points=pts or None,
        limit=max(200, 4 * len(pts)),
        epsabs=1e-12,
        epsrel=1e-10,
    )
    return val


def busy_start_density(q, t):
    """``Psi(t) = lam tail(t) exp(-lam M(t))``; accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be non-negative")
    m = q.service
    out = q.lam * m.tail(t) * np.exp(-q.lam * m.integrated_tail(t))
    return float(out) if out.ndim == 0 else out


def busy_start_lt(q, s):
    """Transform ``psi(s)`` of ``Psi`` at real ``s >= 0``."""
    pts = _split_points(q.service, 1e8)
    return lt_numeric(lambda t: busy_start_density(q, t), s, points=pts)


def exponential_busy_start_lt(lam, mu, s):
    """Closed-form ``psi(s)`` for exponential service of rate ``mu``.

    Expanding ``exp(rho exp(-mu t))`` in ``Psi`` gives
    ``psi(s) = lam sum_k exp(-rho) rho**k / k! / (s + (k + 1) mu)``.
    Works for complex array ``s``.
    """
    rho = lam / mu
    kmax = int(rho + 12.0 * math.sqrt(rho) + 40)
    k = np.arange(kmax)
    logc = k * math.log(rho) - np.array([math.lgamma(j + 1.0) for j in k]) - rho
    coef = lam * np.exp(logc)
    s = np.asarray(s)
    return (coef / (s[..., None] + (k + 1) * mu)).sum(-1)


def busy_tail_lt(q, s):
    """Transform ``u(s)`` of the busy-period tail at real ``s >= 0``."""
    psi = busy_start_lt(q, s)
    if psi >= 1.0:
        raise NumericalError(f"psi({s}) = {psi} >= 1; upstream quadrature failed")
    return psi / (q.lam * (1.0 - psi))


def busy_equilibrium_lt(q, s):
    """Transform of the busy-period equilibrium law, ``u(s) / u(0)``."""
    return busy_tail_lt(q, s) / busy_tail_lt(q, 0.0)


def _clamped_curve(t, raw, at_zero=1.0):
    excursion = float(max(0.0, np.max(raw - 1.0), np.max(-raw)))
    values = np.clip(raw, 0.0, 1.0)
    return TailCurve(np.concatenate([[0.0], t]), np.concatenate([[at_zero], values]), excursion)


def busy_tail(q, grid=None, cfg=None):
    """Busy-period tail ``U`` on ``grid`` by inverting ``u``.

    ``psi`` is evaluated at the complex inversion abscissae with a fixed
    panel rule over time; ``Psi`` is tabulated once on its nodes.
    """
    cfg = DEFAULT_CONFIG if cfg is None else cfg
    t = _positive_grid(grid)
    min_re = cfg.abscissa / (2.0 * t[-1])
    nodes, weights = time_panel_rule(
        40.0 / min_re, t[0] * 1e-7, breakpoints=q.service.breakpoints
    )
    weighted = weights * busy_start_density(q, nodes)

    def u(s):
        out = np.empty(s.shape, dtype=complex)
        for row in range(s.shape[0]):
            psi = np.exp(-s[row, :, None] * nodes) @ weighted
            out[row] = psi / (q.lam * (1.0 - psi))
        return out

    raw = np.concatenate([ilt(u, t[sl], cfg, vectorized=True) for sl in chunked(t.size, 32)])
    curve = _clamped_curve(t, raw)
    log.debug("busy_tail excursion %.3g", curve.excursion)
    return curve


def divergence_diagnostic(values):
    """Classify truncated moments at ``T, 2T, 4T, 8T``.

    ``"divergent"`` when every successive ratio is at least 1.1, ``"finite"``
    when the last ratio is at most 1.01, ``"inconclusive"`` otherwise.
    """
    v = [float(x) for x in values]
    if len(v) != 4:
        raise ValueError("expected four truncated values at T, 2T, 4T, 8T")
    if any(not math.isfinite(x) or x < 0.0 for x in v):
        raise ValueError("truncated moments must be finite and non-negative")
    if v[0] == 0.0:
        return "inconclusive"
    ratios = [b / a for a, b in zip(v, v[1:])]
    if all(x >= 1.1 for x in ratios):
        return "divergent"
    if ratios[-1] <= 1.01:
        return "finite"
    return "inconclusive"


def busy_moment_from_transform(q, n, horizon=1e3):
    """``int_0^inf t**n Psi(t) dt``, equal to ``(-1)**n phi^(n)(0)``.

    The integral is truncated at ``horizon * 2**k`` for ``k = 0..3``; the
    truncated values are classified with :func:`divergence_diagnostic`.
    A divergent integral is reported as ``inf`` and an inconclusive one as
    ``nan``; only a finite one gets the remainder past ``8 * horizon`` added.
    """
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)

    def integrand(t):
        return t**n * busy_start_density(q, t)

    def piece(a, b):
        pts = _split_points(q.service, b)
        pts = [p for p in pts if p > a]
        val, _ = integrate.quad(
            integrand, a, b, points=pts or None, limit=500, epsabs=1e-13, epsrel=1e-11
        )
        return val

    edges = [0.0] + [horizon * 2**k for k in range(4)]
    acc, truncated = 0.0, []
    for a, b in zip(edges, edges[1:]):
        acc += piece(a, b)
        truncated.append(acc)
    status = divergence_diagnostic(truncated)
    if status == "divergent":
        log.info("moment %d of Psi diverges: %s", n, truncated)
        return MomentEstimate(math.inf, status, tuple(truncated))
    if status == "inconclusive":
        log.info("moment %d of Psi not classified: %s", n, truncated)
        return MomentEstimate(math.nan, status, tuple(truncated))
    rest, _ = integrate.quad(integrand, edges[-1], math.inf, limit=500, epsabs=1e-13, epsrel=1e-11)
    value = truncated[-1] + rest
    return MomentEstimate(value, status, tuple(truncated))


def recover_service(phi, lam, grid=None, cfg=None, implied_alpha=None):
    """Recover the service tail from the transform ``phi`` of ``Psi``.

    ``phi`` is called with complex arrays. ``f`` is inverted on the grid,
    ``F`` accumulated by the trapezoid rule from ``(0, lam)`` and the tail is
    ``f / (lam (1 - F))``.
    """
    if not math.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    cfg = DEFAULT_CONFIG if cfg is None else cfg
    t = _positive_grid(grid)
    f = np.concatenate([ilt(phi, t[sl], cfg, vectorized=True) for sl in chunked(t.size, 64)])
    tg = np.concatenate([[0.0], t])
    fg = np.concatenate([[lam], f])
    F = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(tg) * (fg[1:] + fg[:-1]))])
    # F tends to 1 - exp(-rho) < 1; overshooting halfway into the gap is noise
    if implied_alpha is not None:
        limit = 1.0 - math.exp(-lam * implied_alpha)
        if np.any(F > limit + 0.5 * (1.0 - limit)):
            raise NumericalError("recovered distribution function overshoots its limit")
    if np.any(F >= 1.0):
        raise NumericalError("recovered distribution function reached 1")
    raw = fg[1:] / (lam * (1.0 - F[1:]))
    curve = _clamped_curve(t, raw)
    if curve.excursion > CLAMP_TOLERANCE:
        raise NumericalError(f"recovered tail left [0, 1] by {curve.excursion:.3g}")
    if implied_alpha is None:
        implied_alpha = -math.log1p(-F[-1]) / lam
    return RecoveredService(curve, fg, F, lam, implied_alpha, curve.integral())


def recover_service_from_pme_busy(r, lam, grid=None, cfg=None):
    """Service law whose M|G|inf busy period is PME(r) at arrival rate ``lam``.

    Uses ``u = h^_r`` (the PME tail transform), so ``phi = lam h^ / (lam h^ + 1)``.
    The implied mean service time is ``log(1 + lam) / lam``. The default
    grid is ``RECOVERY_GRID``.
    """
    p = r if isinstance(r, PmeParams) else PmeParams(r)
    if not math.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam!r}")

    def phi(s):
        h = lam * pme_tail_lt_batch(p, s)
        return h / (h + 1.0)

    grid = RECOVERY_GRID if grid is None else grid
    return recover_service(phi, lam, grid, cfg, implied_alpha=math.log1p(lam) / lam)


def equilibrium_tail_moment(tail, n, T, alpha=None):
    """``int_0^T t**n tail(t) / alpha dt`` for a curve or a service model.

    Curves use the trapezoid rule (``alpha`` defaults to the curve's full
    integral); models use adaptive quadrature (``alpha`` defaults to the mean).
    """
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)
    T = float(T)
    if isinstance(tail, TailCurve):
        if not 0.0 < T <= tail.grid[-1]:
            raise ValueError("T must lie within the curve's grid")
        alpha = tail.integral() if alpha is None else alpha
        keep = tail.grid < T
        g = np.append(tail.grid[keep], T)
        v = np.append(tail.values[keep], tail(T))
        return float(np.trapezoid(g**n * v, g)) / alpha
    if isinstance(tail, ServiceModel):
        alpha = tail.mean if alpha is None else alpha
        pts = _split_points(tail, T)
        val, _ = integrate.quad(
            lambda t: t**n * float(tail.tail(t)),
            0.0,
            T,
            points=pts or None,
            limit=max(500, 4 * len(pts)),
            epsabs=1e-12,
            epsrel=1e-10,
        )
        return val / alpha
    raise TypeError("tail must be a TailCurve or a ServiceModel")


def classify_equilibrium_moment(tail, n, T, alpha=None):
    """Truncated equilibrium moments at ``T..8T`` and their classification."""
    values = [equilibrium_tail_moment(tail, n, T * 2**k, alpha) for k in range(4)]
    return divergence_diagnostic(values), values
