"""Discrete-event simulation of the M|G|inf queue.

Every arrival is served immediately, so the state is just the multiset of
pending departure times, kept in a min-heap, plus the next arrival time. A
busy period opens when an arrival finds the system empty and closes when the
heap empties.
"""

from dataclasses import dataclass
import heapq
import math

import numpy as np

from .busy_period import QueueParams, TailCurve

_BLOCK = 8192


@dataclass(frozen=True)
class SimConfig:
    """Run settings; stop after ``n_busy`` busy periods or at ``horizon``.

    When both are given the run stops at whichever comes first. Replication
    ``i`` draws from the stream seeded with ``seed + i``.
    """

    queue: QueueParams
    n_busy: int = None
    horizon: float = None
    seed: int = 0
    replicate: int = 0

    def __post_init__(self):
        if self.n_busy is None and self.horizon is None:
            raise ValueError("give n_busy or horizon")
        if self.n_busy is not None and self.n_busy < 1:
            raise ValueError("n_busy must be at least 1")
        if self.horizon is not None and not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class SimResult:
    busy_lengths: np.ndarray
    idle_lengths: np.ndarray
    busy_fraction: float
    rng_draws: int

    @property
    def empty_fraction(self):
        return 1.0 - self.busy_fraction

    @property
    def mean_busy(self):
        return float(np.mean(self.busy_lengths))

    @property
    def busy_standard_error(self):
        b = self.busy_lengths
        return float(np.std(b, ddof=1) / math.sqrt(b.size)) if b.size > 1 else math.inf

    def summary(self):
        return {
            "busy_periods": int(self.busy_lengths.size),
            "idle_periods": int(self.idle_lengths.size),
            "mean_busy": self.mean_busy,
            "busy_standard_error": self.busy_standard_error,
            "mean_idle": float(np.mean(self.idle_lengths)) if self.idle_lengths.size else math.nan,
            "busy_fraction": self.busy_fraction,
            "empty_fraction": self.empty_fraction,
            "rng_draws": self.rng_draws,
        }


class _Buffered:
    """Block-wise draws from a sampler, consumed one value at a time."""

    def __init__(self, draw):
        self._draw = draw
        self._buf = np.empty(0)
        self._i = 0
        self.used = 0

    def __call__(self):
        if self._i == self._buf.size:
            self._buf = np.asarray(self._draw(_BLOCK), dtype=float)
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        self.used += 1
        return float(x)


def simulate(cfg):
    q = cfg.queue
    rng = np.random.default_rng(cfg.seed + cfg.replicate)
    # separate child streams keep arrivals independent of block sizes in service
    arr_rng, svc_rng = rng.spawn(2)
    gap = _Buffered(lambda k: arr_rng.exponential(1.0 / q.lam, k))
    service = _Buffered(lambda k: q.service.sample(svc_rng, k))

    n_target = math.inf if cfg.n_busy is None else cfg.n_busy
    horizon = math.inf if cfg.horizon is None else cfg.horizon
    busy, idle = [], []
    arrival = gap()
    last_end = None
    while len(busy) < n_target and arrival < horizon:
        start = arrival
        if last_end is not None:
            idle.append(start - last_end)
        pending = [start + service()]
        arrival = start + gap()
        end = None
        while True:
            if arrival < pending[0]:
                if arrival >= horizon:
                    break
                heapq.heappush(pending, arrival + service())
                arrival += gap()
            else:
                d = heapq.heappop(pending)
                if d >= horizon:
                    break
                if not pending:
                    end = d
                    break
        if end is None:
            # truncated by the horizon; the open busy period is discarded
            break
        busy.append(end - start)
        last_end = end

    busy_arr = np.asarray(busy, dtype=float)
    idle_arr = np.asarray(idle, dtype=float)
    total = busy_arr.sum() + idle_arr.sum()
    fraction = float(busy_arr.sum() / total) if total > 0.0 else 0.0
    draws = gap.used + service.used
    return SimResult(busy_arr, idle_arr, fraction, draws)


def empirical_tail(samples, grid):
    """Fraction of samples strictly greater than each grid time."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("samples must be non-empty")
    g = np.asarray(grid, dtype=float)
    if g[0] > 0.0:
        g = np.concatenate([[0.0], g])
    frac = 1.0 - np.searchsorted(x, g, side="right") / x.size
    return TailCurve(g, frac)


def tail_index_estimate(samples, k):
    """Hill estimate of the tail exponent from the top ``k`` order statistics.

    Returns ``1 / gamma`` where ``gamma`` is the mean of
    ``log(X_(i) / X_(k+1))`` over the ``k`` largest samples.
    """
    x = np.asarray(samples, dtype=float)
    k = int(k)
    if k < 10 or k >= x.size:
        raise ValueError("k must satisfy 10 <= k < len(samples)")
    # top[0] is the (k+1)-th largest value, top[1:] the k largest
    top = np.partition(x, x.size - k - 1)[x.size - k - 1 :]
    threshold = top[0]
    if threshold <= 0.0:
        raise ValueError("Hill estimator needs positive order statistics")
    gamma = float(np.sum(np.log(top[1:] / threshold)) / k)
    if gamma <= 0.0:
        raise ValueError("degenerate samples: top order statistics are all equal")
    return 1.0 / gamma


@dataclass(frozen=True)
class TailIndexReport:
    k: int
    estimate: float
    estimate_2k: float
    power_tail: bool


def tail_index_check(samples, k, tolerance=0.25):
    """Hill estimates at ``k`` and ``2k``.

    When the larger exceeds the smaller by more than ``tolerance`` the sample
    is flagged as having no stable power tail. For light tails the estimate
    keeps falling as ``k`` grows, so the flag needs ``k`` to be a sizeable
    fraction of the sample (about a tenth for exponential data).
    """
    a = tail_index_estimate(samples, k)
    b = tail_index_estimate(samples, 2 * k)
    stable = max(a, b) / min(a, b) - 1.0 <= tolerance
    return TailIndexReport(int(k), a, b, stable)
