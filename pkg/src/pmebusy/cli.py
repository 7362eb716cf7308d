"""Command-line front end emitting CSV or JSON tables.

Exit status: 0 on success, 2 for invalid arguments or parameters, 3 when a
quadrature or inversion fails to converge.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import busy_period as bp
from .dist_core import (
    Deterministic,
    Exponential,
    Pareto,
    ParetoParams,
    Pme,
    PmeParams,
    pme_moment,
    pme_pdf,
    pme_tail,
)
from .exceptions import NumericalError
from .laplace import (
    InversionConfig,
    pme_lt,
    pme_tail_lt,
    pme_tail_lt_deriv,
    pme_tail_lt_deriv_at_zero,
)
from .simulator import SimConfig, empirical_tail, simulate

DEFAULT_T_GRID = "0.001:50:400"
DEFAULT_S_GRID = "0.001:1000:31"


class UsageError(ValueError):
    pass


def parse_grid(text, log=False):
    """``start:stop:count`` to an array; geometric spacing when ``log``."""
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise UsageError(f"grid must look like start:stop:count, got {text!r}") from None
    if count < 1 or not (math.isfinite(start) and math.isfinite(stop)) or stop < start:
        raise UsageError(f"invalid grid {text!r}")
    if start < 0.0:
        raise UsageError("grid times must be non-negative")
    if log:
        if start <= 0.0:
            raise UsageError("a log grid needs a positive start")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def parse_service(text):
    """``exp:RATE``, ``det:D``, ``pareto:R`` or ``pme:R``."""
    kind, _, arg = text.partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise UsageError(f"service must look like kind:value, got {text!r}") from None
    builders = {
        "exp": Exponential,
        "det": Deterministic,
        "pareto": lambda r: Pareto(ParetoParams(r)),
        "pme": lambda r: Pme(PmeParams(r)),
    }
    if kind not in builders:
        raise UsageError(f"unknown service kind {kind!r}; use exp, det, pareto or pme")
    return builders[kind](value)


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _cell(x):
    if isinstance(x, str):
        return x
    v = _num(x)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v).lower() if isinstance(v, bool) else str(v)


class Report:
    """Named tables plus scalar fields, rendered to CSV blocks or one JSON object."""

    def __init__(self):
        self.fields = {}
        self.tables = []

    def field(self, key, value, unit="dimensionless"):
        self.fields[key] = (value, unit)

    def table(self, name, columns, json_layout="columns"):
        """``columns`` is a list of ``(key, unit, values)``."""
        self.tables.append((name, columns, json_layout))

    def to_json(self):
        out = {k: _jsonable(v) for k, (v, _) in self.fields.items()}
        for name, columns, layout in self.tables:
            if layout == "columns":
                for key, _, values in columns:
                    out[key] = [_num(v) for v in values]
            else:
                keys = [c[0] for c in columns]
                rows = zip(*(c[2] for c in columns))
                out[name] = [{k: _jsonable(v) for k, v in zip(keys, row)} for row in rows]
        return json.dumps(out, indent=1) + "\n"

    def to_csv(self):
        blocks = []
        if self.fields:
            lines = ["quantity,value,unit"]
            lines += [f"{k},{_cell(v)},{u}" for k, (v, u) in self.fields.items()]
            blocks.append("\n".join(lines))
        for _, columns, _ in self.tables:
            header = ",".join(f"{key} [{unit}]" for key, unit, _ in columns)
            rows = zip(*(c[2] for c in columns))
            lines = [header] + [",".join(_cell(v) for v in row) for row in rows]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def _jsonable(v):
    if isinstance(v, str):
        return v
    return _num(v)


def cmd_pme(args):
    p = PmeParams(_shape(args.r))
    grid = parse_grid(args.grid or DEFAULT_T_GRID, args.log or args.grid is None)
    rep = Report()
    rep.field("r", p.r)
    rep.table(
        "density",
        [
            ("grid", "time", grid),
            ("pdf", "1/time", [pme_pdf(p, t) for t in grid]),
            ("tail", "dimensionless", [pme_tail(p, t) for t in grid]),
        ],
    )
    orders = list(range(1, math.ceil(p.r) + 3))
    rep.table(
        "moments",
        [("n", "dimensionless", orders), ("value", "time^n", [pme_moment(p, n) for n in orders])],
        json_layout="records",
    )
    return rep


def cmd_lt(args):
    p = PmeParams(_shape(args.r))
    s_grid = parse_grid(args.grid or DEFAULT_S_GRID, args.log or args.grid is None)
    orders = range(1, args.max_order + 1)
    rep = Report()
    rep.field("r", p.r)
    derivs = {n: [] for n in orders}
    for s in s_grid:
        for n in orders:
            v = pme_tail_lt_deriv(p, s, n) if s > 0 else pme_tail_lt_deriv_at_zero(p, n)
            derivs[n].append(v.value)
    cols = [
        ("s", "1/time", s_grid),
        ("density_lt", "dimensionless", [pme_lt(p, s).value for s in s_grid]),
        ("tail_lt", "time", [pme_tail_lt(p, s).value for s in s_grid]),
    ]
    cols += [(f"tail_lt_d{n}", f"time^{n + 1}", derivs[n]) for n in orders]
    rep.table("transforms", cols)
    limit_orders = list(range(0, args.max_order + 1))
    rep.table(
        "limits_at_zero",
        [
            ("n", "dimensionless", limit_orders),
            ("value", "time^(n+1)", [pme_tail_lt_deriv_at_zero(p, n).value for n in limit_orders]),
        ],
        json_layout="records",
    )
    return rep


def _queue(args):
    if not args.lam > 0.0 or not math.isfinite(args.lam):
        raise UsageError("lambda must be positive")
    return bp.QueueParams(args.lam, parse_service(args.service))


def _cfg(args):
    return InversionConfig(digits=args.digits)


def cmd_busy(args):
    q = _queue(args)
    s_grid = parse_grid(args.s_grid, log=True)
    t_grid = parse_grid(args.grid or DEFAULT_T_GRID, args.log or args.grid is None)
    rep = Report()
    rep.field("lambda", q.lam, "1/time")
    rep.field("rho", q.rho)
    rep.field("u0", bp.busy_tail_lt(q, 0.0), "time")
    rep.field("u0_reference", math.expm1(q.rho) / q.lam, "time")
    psi = [bp.busy_start_lt(q, s) for s in s_grid]
    rep.table(
        "transforms",
        [
            ("s", "1/time", s_grid),
            ("psi", "dimensionless", psi),
            ("u", "time", [p / (q.lam * (1.0 - p)) for p in psi]),
        ],
    )
    curve = bp.busy_tail(q, t_grid, _cfg(args))
    rep.field("excursion", curve.excursion)
    rep.table("tail", [("grid", "time", curve.grid), ("tail", "dimensionless", curve.values)])
    return rep


def cmd_recover(args):
    r = _shape(args.r)
    if not args.lam > 0.0:
        raise UsageError("lambda must be positive")
    grid = parse_grid(args.grid, True) if args.grid else bp.RECOVERY_GRID
    rec = bp.recover_service_from_pme_busy(r, args.lam, grid, _cfg(args))
    T = args.T if args.T else rec.tail.grid[-1] / 8.0
    if 8.0 * T > rec.tail.grid[-1] * (1 + 1e-12):
        raise UsageError("8*T must not exceed the end of the grid")
    rep = Report()
    rep.field("r", r)
    rep.field("lambda", args.lam, "1/time")
    rep.field("implied_alpha", rec.implied_alpha, "time")
    rep.field("recovered_mean", rec.mean, "time")
    rep.field("excursion", rec.excursion)
    rep.field("T", T, "time")
    rep.table(
        "service",
        [
            ("grid", "time", rec.tail.grid),
            ("density", "1/time", rec.density),
            ("cdf", "dimensionless", rec.cdf),
            ("tail", "dimensionless", rec.tail.values),
        ],
    )
    orders = list(range(0, args.max_order + 1))
    rows = [bp.classify_equilibrium_moment(rec.tail, n, T) for n in orders]
    rep.table(
        "equilibrium_moments",
        [
            ("n", "dimensionless", orders),
            ("at_T", "time^n", [v[0] for _, v in rows]),
            ("at_2T", "time^n", [v[1] for _, v in rows]),
            ("at_4T", "time^n", [v[2] for _, v in rows]),
            ("at_8T", "time^n", [v[3] for _, v in rows]),
            ("class", "label", [c for c, _ in rows]),
        ],
        json_layout="records",
    )
    return rep


def cmd_sim(args):
    q = _queue(args)
    if args.n is None and args.horizon is None:
        args.n = 100_000
    res = simulate(SimConfig(q, n_busy=args.n, horizon=args.horizon, seed=args.seed))
    if res.busy_lengths.size == 0:
        raise NumericalError("no complete busy period before the horizon")
    t_grid = parse_grid(args.grid or DEFAULT_T_GRID, args.log or args.grid is None)
    emp = empirical_tail(res.busy_lengths, t_grid)
    rep = Report()
    rep.field("lambda", q.lam, "1/time")
    rep.field("rho", q.rho)
    rep.field("seed", args.seed, "label")
    for key, value in res.summary().items():
        unit = "time" if key.startswith(("mean", "busy_standard")) else "dimensionless"
        rep.field(key, value, unit)
    rep.field("mean_busy_reference", math.expm1(q.rho) / q.lam, "time")
    cols = [("grid", "time", emp.grid), ("empirical_tail", "dimensionless", emp.values)]
    if args.compare:
        curve = bp.busy_tail(q, t_grid, _cfg(args))
        cols.append(("inverted_tail", "dimensionless", curve.values))
        rep.field("sup_distance", float(np.max(np.abs(curve.values - emp.values))))
    rep.table("tail", cols)
    if args.periods:
        rep.table("busy_periods", [("busy_lengths", "time", res.busy_lengths)])
        rep.table("idle_periods", [("idle_lengths", "time", res.idle_lengths)])
    return rep


def _shape(r):
    if not r > 1.0 or not math.isfinite(r):
        raise UsageError("r must exceed 1")
    return r


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pmebusy", description="PME law and M|G|inf busy-period transforms"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_help="time grid start:stop:count"):
        p.add_argument("--grid", help=grid_help)
        p.add_argument("--log", action="store_true", help="geometric grid spacing")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", help="output path (default: standard output)")

    p = sub.add_parser("pme", help="PME density, tail and moments")
    p.add_argument("--r", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_pme)

    p = sub.add_parser("lt", help="PME transforms and derivative limits")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--max-order", type=int, default=2)
    common(p, "s grid start:stop:count")
    p.set_defaults(func=cmd_lt)

    p = sub.add_parser("busy", help="busy-period transform and inverted tail")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--service", required=True, help="exp:RATE, det:D, pareto:R or pme:R")
    p.add_argument("--s-grid", default="0.01:100:21")
    p.add_argument("--digits", type=int, default=10)
    common(p)
    p.set_defaults(func=cmd_busy)

    p = sub.add_parser("recover", help="service law behind a PME busy period")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--T", type=float, help="first truncation time (default: grid end / 8)")
    p.add_argument("--max-order", type=int, default=4)
    p.add_argument("--digits", type=int, default=10)
    common(p, "log time grid start:stop:count")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("sim", help="discrete-event simulation")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--service", required=True)
    p.add_argument("--n", type=int, help="busy periods to collect (default 100000)")
    p.add_argument("--horizon", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare", action="store_true", help="add the inverted analytic tail")
    p.add_argument("--periods", action="store_true", help="include raw busy/idle lengths")
    p.add_argument("--digits", type=int, default=10)
    common(p)
    p.set_defaults(func=cmd_sim)
    return parser


def _diagnostic(message):
    color = sys.stderr.isatty() and "NO_COLOR" not in os.environ
    prefix = "\033[31merror:\033[0m" if color else "error:"
    print(f"{prefix} {message}", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except NumericalError as exc:
        _diagnostic(str(exc))
        return 3
    except (ValueError, TypeError) as exc:
        _diagnostic(str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
        return 2
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
