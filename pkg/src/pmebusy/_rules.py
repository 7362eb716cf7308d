"""Fixed panel quadrature rules shared by the vectorized evaluation paths.

The adaptive (QUADPACK) routines are used for scalar public operations; the
rules here trade adaptivity for the ability to evaluate many transform or
time points in one matrix product.
"""

from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

_ORDER = 20


@lru_cache(maxsize=64)
def power_weight_rule(exponent, upper, per_decade=4, decades=18):
    """Nodes and weights for ``int_0^upper x**exponent g(x) dx``.

    Geometric panels cover ``[upper * 10**-decades, upper]``; the innermost
    piece ``[0, upper * 10**-decades]`` uses Gauss-Jacobi so the algebraic
    endpoint behaviour is integrated exactly. ``g`` must be smooth on the
    scale of each panel, which holds for ``exp(-t x)`` and ``1/(s + x)``
    with ``Re(s) > 0`` because their features sit at ``x ~ 1/t`` or
    ``x ~ |s|`` and the panels are scale invariant.
    """
    if exponent <= -1.0:
        raise ValueError("exponent must exceed -1")
    k = np.arange(decades * per_decade + 1)
    edges = upper * 10.0 ** (-(k[::-1]) / per_decade)
    xg, wg = roots_legendre(_ORDER)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = (0.5 * (hi - lo) * xg + 0.5 * (hi + lo)).ravel()
    w = (0.5 * (hi - lo) * wg).ravel() * x**exponent
    eps = edges[0]
    xj, wj = roots_jacobi(_ORDER, 0.0, exponent)
    x0 = 0.5 * eps * (xj + 1.0)
    w0 = wj * (0.5 * eps) ** (exponent + 1.0)
    nodes = np.concatenate([x0, x])
    weights = np.concatenate([w0, w])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def time_panel_rule(horizon, t_min, breakpoints=(), per_decade=16):
    """Gauss-Legendre nodes on ``[0, horizon]`` with geometric panels.

    Sixteen panels per decade keep the phase of ``exp(-s t)`` below a couple
    of turns per panel for the abscissae used by the Euler inversion.
    """
    n_edges = int(math.ceil(per_decade * math.log10(horizon / t_min))) + 1
    inner = [b for b in breakpoints if 0.0 < b < horizon]
    edges = np.unique(np.concatenate([[0.0], np.geomspace(t_min, horizon, n_edges), inner]))
    xg, wg = roots_legendre(_ORDER)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = (0.5 * (hi - lo) * xg + 0.5 * (hi + lo)).ravel()
    w = (0.5 * (hi - lo) * wg).ravel()
    return x, w


def chunked(n, size):
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))
