"""Acceptance criteria, each at its stated tolerance and runtime budget."""

import math
import time

import numpy as np
from scipy import stats

from pmebusy.busy_period import (
    RECOVERY_GRID,
    QueueParams,
    busy_tail,
    busy_tail_lt,
    classify_equilibrium_moment,
    exponential_busy_start_lt,
    recover_service,
    recover_service_from_pme_busy,
)
from pmebusy.dist_core import (
    Deterministic,
    Exponential,
    Pareto,
    ParetoParams,
    Pme,
    PmeParams,
    pme_moment,
    pme_pdf,
    pme_sample,
)
from pmebusy.laplace import (
    ilt,
    pme_lt,
    pme_lt_complex,
    pme_tail_lt,
    pme_tail_lt_deriv_at_zero,
)
from pmebusy.simulator import (
    SimConfig,
    empirical_tail,
    simulate,
    tail_index_check,
    tail_index_estimate,
)

SEED = 2026
UNIT_MEAN = {
    "Exponential(1)": Exponential(1.0),
    "Deterministic(1)": Deterministic(1.0),
    "Pareto(3)": Pareto(ParetoParams(3.0)),
    "Pme(3)": Pme(PmeParams(3.0)),
}


def closed_form_r2(s):
    # r = 2: c = 1/2, upper limit 2, antiderivative x**2/2 - s x + s**2 log(s + x)
    return 0.5 * (2.0 - 2.0 * s + s * s * math.log((s + 2.0) / s))


def test_criterion_1_transform_exactness(acceptance):
    t0 = time.perf_counter()
    errs = [abs(float(pme_lt(2, s)) - closed_form_r2(s)) for s in (0.5, 1.0, 2.0, 5.0)]
    at_one = abs(float(pme_lt(2, 1.0)) - math.log(3) / 2)
    elapsed = time.perf_counter() - t0
    ok = max(errs) < 1e-9 and at_one < 1e-9 and elapsed < 1.0
    assert acceptance(
        1,
        "transform exactness",
        ok,
        f"max closed-form error {max(errs):.2e}, |g(1) - ln3/2| = {at_one:.2e}, {elapsed:.2f} s",
    )


def test_criterion_2_tail_identity(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for r in (1.5, 2.0, 2.5, 3.0, 5.0):
        for s in np.geomspace(1e-3, 1e3, 30):
            h = float(pme_tail_lt(r, s))
            g = float(pme_lt(r, s))
            worst = max(worst, abs(h - (1.0 - g) / s))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 1.0
    assert acceptance(2, "tail-transform identity", ok, f"max deviation {worst:.2e}, {elapsed:.2f} s")


def test_criterion_3_limit_branches(acceptance):
    d30 = float(pme_tail_lt_deriv_at_zero(3, 0))
    d31 = float(pme_tail_lt_deriv_at_zero(3, 1))
    exact = abs(d30 - 1.0) < 1e-12 and abs(d31 + 4.0 / 3.0) < 1e-12
    inf21 = pme_tail_lt_deriv_at_zero(2, 1)
    inf151 = pme_tail_lt_deriv_at_zero(1.5, 1)
    infinite = not inf21.is_finite and not inf151.is_finite
    bridge = 0.0
    for r in (3.0, 4.5, 5.0):
        for n in range(int(math.ceil(r - 1))):
            v = (-1) ** n * float(pme_tail_lt_deriv_at_zero(r, n))
            m = pme_moment(PmeParams(r), n + 1) / (n + 1)
            bridge = max(bridge, abs(v - m) / m)
    ok = exact and infinite and bridge < 1e-9
    assert acceptance(
        3,
        "derivative limits at zero",
        ok,
        f"(3,0)={d30!r}, (3,1)={d31!r}, (2,1)={inf21}, (1.5,1)={inf151}, bridge rel err {bridge:.1e}",
    )


def test_criterion_4_inversion_round_trip(acceptance):
    t0 = time.perf_counter()
    t = np.linspace(0.1, 10.0, 50)
    got = ilt(lambda s: pme_lt_complex(2, s), t)
    want = np.array([pme_pdf(PmeParams(2.0), x, epsabs=0.0, epsrel=1e-12) for x in t])
    sup = float(np.max(np.abs(got - want)))
    elapsed = time.perf_counter() - t0
    ok = sup < 1e-4 and elapsed < 5.0
    assert acceptance(4, "inversion round trip", ok, f"sup error {sup:.2e}, {elapsed:.2f} s")


def test_criterion_5_busy_mean(acceptance):
    t0 = time.perf_counter()
    identity, z_scores = 0.0, []
    for lam in (0.5, 1.0, 2.0):
        for service in UNIT_MEAN.values():
            q = QueueParams(lam, service)
            identity = max(identity, abs(lam * busy_tail_lt(q, 0.0) - math.expm1(lam)))
            res = simulate(SimConfig(q, n_busy=100_000, seed=SEED))
            z_scores.append(abs(res.mean_busy - math.expm1(lam) / lam) / res.busy_standard_error)
    elapsed = time.perf_counter() - t0
    ok = identity < 1e-6 and max(z_scores) < 3.0 and elapsed < 60.0
    assert acceptance(
        5,
        "busy-period mean identity",
        ok,
        f"max |lam u(0) - (e^lam - 1)| {identity:.1e}, worst simulation gap {max(z_scores):.2f} SE, "
        f"{elapsed:.1f} s",
    )


def test_criterion_6_exponential_recovery(acceptance):
    t0 = time.perf_counter()
    rec = recover_service(
        lambda s: exponential_busy_start_lt(1.0, 1.0, s), 1.0, np.geomspace(1e-3, 50.0, 400)
    )
    t = np.linspace(0.05, 5.0, 200)
    sup = float(np.max(np.abs(rec.tail(t) - np.exp(-t))))
    elapsed = time.perf_counter() - t0
    ok = sup < 1e-2 and elapsed < 30.0
    assert acceptance(6, "forward-inverse consistency", ok, f"sup error {sup:.2e}, {elapsed:.2f} s")


def test_criterion_7_headline(acceptance):
    t0 = time.perf_counter()
    T = RECOVERY_GRID[-1] / 8
    wrong, means = [], []
    for r in (1.5, 2.0, 2.5):
        rec = recover_service_from_pme_busy(r, 1.0)
        means.append(rec.mean)
        if abs(rec.implied_alpha / math.log(2) - 1) > 2e-2 or abs(rec.mean / math.log(2) - 1) > 2e-2:
            wrong.append(f"mean r={r}")
        for n in range(5):
            if n == r - 1:
                continue
            status, _ = classify_equilibrium_moment(rec.tail, n, T)
            want = "divergent" if n > r - 1 else "finite"
            if status != want:
                wrong.append(f"r={r} n={n} {status}")
    elapsed = time.perf_counter() - t0
    ok = not wrong and elapsed < 60.0
    means_text = ", ".join(f"{m:.4f}" for m in means)
    problems = "; ".join(wrong) or "no misclassification"
    assert acceptance(
        7,
        "long-tail service behind a PME busy period",
        ok,
        f"orders 0..4, recovered means {means_text}, {problems}, {elapsed:.1f} s",
    )


def test_criterion_8_simulation(acceptance):
    t0 = time.perf_counter()
    q = QueueParams(1.0, Exponential(1.0))
    res = simulate(SimConfig(q, n_busy=100_000, seed=SEED))
    curve = busy_tail(q)
    emp = empirical_tail(res.busy_lengths, curve.grid[1:])
    sup = float(np.max(np.abs(emp.values - curve.values)))
    p_idle = stats.kstest(res.idle_lengths, "expon").pvalue
    empty = res.empty_fraction / math.exp(-1) - 1
    elapsed = time.perf_counter() - t0
    ok = sup < 0.02 and p_idle > 0.01 and abs(empty) < 0.02 and elapsed < 30.0
    assert acceptance(
        8,
        "simulation cross-validation",
        ok,
        f"sup tail gap {sup:.4f}, idle KS p = {p_idle:.3f}, empty fraction off by {empty:+.2%}, {elapsed:.1f} s",
    )


def test_criterion_9_long_tail(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    pme = pme_sample(PmeParams(1.5), rng, 1_000_000)
    estimate = tail_index_estimate(pme, 1000)
    expo = rng.exponential(1.0, 1_000_000)
    # light tails show up once k reaches a tenth of the sample
    report = tail_index_check(expo, 100_000)
    elapsed = time.perf_counter() - t0
    ok = 1.2 <= estimate <= 1.8 and not report.power_tail and elapsed < 30.0
    assert acceptance(
        9,
        "long-tail witness",
        ok,
        f"PME(1.5) estimate {estimate:.3f}; exponential estimates {report.estimate:.2f} vs "
        f"{report.estimate_2k:.2f} flagged={not report.power_tail}, {elapsed:.1f} s",
    )
