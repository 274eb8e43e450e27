"""Command-line front end: ``mcadiff <command> [options]``.

Commands
    chain      exact master-equation marginals (or moments) for given t
    analytic   closed-form marginals, moments, D_c and calibration
    sample     single-particle trace through the automaton
    simulate   ensemble dispersion series and diffusion estimate
    compare    closed form vs oracle vs simulation vs normal density
    calibrate  rotation (or skip) probability for a target D_c

Exit codes: 0 success, 1 I/O failure, 2 invalid arguments,
3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import secrets
import sys
import warnings
from fractions import Fraction

import numpy as np

from . import analytic, chain, dumps
from ._numeric import check_open_probability, format_prob, to_number
from .errors import DomainError, RealizabilityWarning

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

SEED_MAX = 2**64 - 1


class UsageError(ValueError):
    pass


def _number(text: str) -> str:
    # validated later, once we know whether the command runs exactly
    try:
        Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    return text


def _count(text: str) -> int:
    # accepts 100000 as well as 1e5; plain integers are parsed exactly
    try:
        value = int(text)
    except ValueError:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a count: {text!r}")
        if not value.is_integer():
            raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
        value = int(value)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return value


def _seed(text: str) -> int:
    value = _count(text)
    if value > SEED_MAX:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcadiff", description="Diffusion in the Margolus-neighbourhood automaton.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, t_many=True):
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        if t_many:
            sp.add_argument("--t", type=_count, nargs="+", default=None, help="time step(s)")
        else:
            sp.add_argument("--t", type=_count, default=None, help="number of steps")

    p = sub.add_parser("chain", help="exact master-equation evolution")
    common(p)
    p.add_argument("--p", type=_number, required=True)
    p.add_argument("--eps", type=_number, default="1/2", help="probability of starting with d=+1")
    p.add_argument("--exact", action="store_true", help="rational arithmetic, num/den output")
    p.add_argument("--moments", action="store_true", help="write the moment table instead")

    p = sub.add_parser("analytic", help="closed-form distribution and moments")
    common(p)
    p.add_argument("--p", type=_number)
    p.add_argument("--ps", type=_number, help="skip probability (type-2 coefficient)")
    p.add_argument("--variant", choices=["type1", "type2"], default="type1")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--backend", choices=["sum", "jacobi"], default="sum")
    p.add_argument("--moments", action="store_true")
    p.add_argument("--dc", action="store_true", help="print the diffusion coefficient")
    p.add_argument("--calibrate", type=_number, metavar="D", help="print the parameter giving D_c = D")

    p = sub.add_parser("calibrate", help="parameter for a target diffusion coefficient")
    p.add_argument("--dc", type=_number, required=True, metavar="D")
    p.add_argument("--variant", choices=["type1", "type2"], default="type1")

    def sim_args(sp):
        sp.add_argument("--variant", choices=["type1", "type2"], default="type1")
        sp.add_argument("--p", type=_number)
        sp.add_argument("--ps", type=_number)
        sp.add_argument("--seed", type=_seed)
        sp.add_argument("--width", type=_count)
        sp.add_argument("--height", type=_count)
        sp.add_argument("--threads", type=_count, help="numba worker threads")

    p = sub.add_parser("sample", help="trace one particle through the automaton")
    p.add_argument("--out")
    p.add_argument("--t", type=_count, required=True)
    sim_args(p)

    p = sub.add_parser("simulate", help="ensemble dispersion and diffusion estimate")
    common(p, t_many=False)
    p.set_defaults(format="json")
    sim_args(p)
    p.add_argument("--trials", type=_count, default=100_000)
    p.add_argument("--dx", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--fit-from", type=_count, dest="fit_from")
    p.add_argument("--fit-to", type=_count, dest="fit_to")
    p.add_argument("--series", help="also write the dispersion series CSV here")

    p = sub.add_parser("compare", help="closed form vs oracle vs simulation vs normal")
    common(p)
    sim_args(p)
    p.add_argument("--trials", type=_count, default=0, help="automaton traces per t (0: no simulated column)")
    p.add_argument("--dispersion", action="store_true", help="type-1 vs type-2 dispersion table")
    p.add_argument("--dc", type=_number, metavar="D", help="calibrate both rules to D (with --dispersion)")
    return parser


# --------------------------------------------------------------------- helpers


def _probability(text, exact: bool, name: str = "p"):
    value = to_number(text, exact)
    check_open_probability(value, name)
    return value


def _times(args, default=None) -> list[int]:
    if args.t is None:
        if default is None:
            raise UsageError("--t is required")
        return list(default)
    return list(args.t)


def _resolve_seed(seed):
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def _rule(args):
    from .mca import RuleParams

    if args.variant == "type2":
        if args.ps is None:
            raise UsageError("type2 needs --ps")
        if args.p is not None and float(Fraction(args.p)) != 0.5:
            raise UsageError("type2 rotates with p = 1/2; drop --p")
        ps = float(Fraction(args.ps))
        if not 0 <= ps < 1:
            raise UsageError(f"--ps must lie in [0, 1), got {args.ps}")
        return RuleParams.type2(ps)
    if args.p is None:
        raise UsageError("type1 needs --p")
    p = float(Fraction(args.p))
    if not 0 < p <= 0.5:
        raise UsageError(f"the automaton realises 0 < p <= 1/2 only, got p={args.p}")
    return RuleParams.type1(p)


def _load_mca(threads):
    """Import the numba-backed module, fixing the pool size first if asked."""
    if threads is not None:
        if threads < 1:
            raise UsageError("--threads must be positive")
        if "numba" not in sys.modules:
            os.environ["NUMBA_NUM_THREADS"] = str(threads)
    from . import mca

    if threads is not None:
        try:
            mca.set_threads(threads)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return mca


def _grid_size(mca, rule, steps, width, height):
    """Apply the torus size rule; explicit sizes below it are rejected."""
    dc = analytic.type2_diffusion_coefficient(rule.ps) if rule.is_type2 else rule.p / (2 * (1 - rule.p))
    need = mca.auto_width(dc, steps)
    width = need if width is None else width
    height = width if height is None else height
    for name, size in (("width", width), ("height", height)):
        if size < need:
            raise UsageError(f"--{name} {size} is below the minimum {need} for t={steps} (6 sqrt(2 D_c t))")
        if size % 2:
            raise UsageError(f"--{name} must be even, got {size}")
    return width, height


def _moments_from_state(state) -> analytic.MomentReport:
    return analytic.MomentReport(
        state.time,
        chain.raw_moment(state, 1),
        chain.raw_moment(state, 2),
        chain.raw_moment(state, 1, 1),
        chain.raw_moment(state, 1, -1),
        chain.raw_moment(state, 2, 1),
        chain.raw_moment(state, 2, -1),
    )


def _json_value(v):
    if isinstance(v, Fraction):
        return format_prob(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _tables_json(dists, reports) -> str:
    obj = {
        "distributions": [
            {"t": d.time, "x": [int(x) for x in d.xs], "prob": [_json_value(q) for q in d.probs]} for d in dists
        ],
        "moments": [
            {
                "t": r.t,
                "mean": _json_value(r.mean),
                "variance": _json_value(r.variance),
                "mu1_plus": _json_value(r.mu1_plus),
                "mu2_plus": _json_value(r.mu2_plus),
            }
            for r in reports
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def _emit_tables(args, dists, reports) -> str:
    buf = io.StringIO()
    if args.format == "json":
        return _tables_json(dists, reports)
    if args.moments:
        dumps.write_moments(reports, buf)
    else:
        dumps.write_distributions(dists, buf)
    return buf.getvalue()


# -------------------------------------------------------------------- commands


def cmd_chain(args) -> str:
    exact = args.exact
    p = _probability(args.p, exact)
    eps = to_number(args.eps, exact)
    if not 0 <= eps <= 1:
        raise UsageError(f"--eps must lie in [0, 1], got {args.eps}")
    times = sorted(set(_times(args)))
    dists, reports = [], []
    wanted = set(times)
    for state in chain.evolve_series(eps, p, times[-1], exact=exact):
        if state.time in wanted:
            dists.append(chain.marginal(state))
            reports.append(_moments_from_state(state))
    return _emit_tables(args, dists, reports)


def cmd_analytic(args) -> str:
    if args.calibrate is not None:
        target = float(Fraction(args.calibrate))
        return _calibrate(target, args.variant)
    if args.dc:
        if args.variant == "type2":
            if args.ps is None:
                raise UsageError("type2 needs --ps")
            return f"D_c={format_prob(analytic.type2_diffusion_coefficient(float(Fraction(args.ps))))}\n"
        if args.p is None:
            raise UsageError("--dc needs --p")
        p = _probability(args.p, args.exact)
        return f"D_c={format_prob(analytic.diffusion_coefficient(p))}\n"
    if args.p is None:
        raise UsageError("--p is required")
    exact = args.exact
    p = _probability(args.p, exact)
    times = _times(args)
    dists = [analytic.closed_form_dist(t, p, exact=exact, backend=args.backend) for t in times]
    reports = [analytic.directional_moments(t, p) for t in times]
    return _emit_tables(args, dists, reports)


def _calibrate(target: float, variant: str) -> str:
    if variant == "type2":
        return f"ps={format_prob(analytic.type2_calibrate_ps(target))}\n"
    return f"p={format_prob(analytic.calibrate_p(target))}\n"


def cmd_calibrate(args) -> str:
    return _calibrate(float(Fraction(args.dc)), args.variant)


def cmd_sample(args) -> str:
    mca = _load_mca(args.threads)
    rule = _rule(args)
    seed = _resolve_seed(args.seed)
    width, height = _grid_size(mca, rule, args.t, args.width, args.height)
    grid = mca.new_grid(width, height, bitmaps=[_single(width, height)], seed=seed)
    return mca.track_particle(grid, rule, args.t).to_csv()


def _single(width, height):
    bitmap = np.zeros((height, width), dtype=bool)
    bitmap[height // 2, width // 2] = True
    return bitmap


def cmd_simulate(args) -> str:
    mca = _load_mca(args.threads)
    rule = _rule(args)
    if args.t is None:
        raise UsageError("--t is required")
    if args.t < 1:
        raise UsageError("--t must be at least 1")
    if args.trials < 100:
        raise UsageError("--trials must be at least 100")
    if not (args.dx > 0 and args.dt > 0 and math.isfinite(args.dx) and math.isfinite(args.dt)):
        raise UsageError("--dx and --dt must be positive")
    seed = _resolve_seed(args.seed)
    width, height = _grid_size(mca, rule, args.t, args.width, args.height)
    t0 = args.fit_from if args.fit_from is not None else max(args.t // 2, 1)
    t1 = args.fit_to if args.fit_to is not None else args.t
    if not 1 <= t0 <= t1 <= args.t:
        raise UsageError(f"fit window [{t0}, {t1}] must satisfy 1 <= from <= to <= t")
    series = mca.ensemble_dispersion(rule, args.t, args.trials, seed, width, height)
    estimate = mca.estimate_diffusion(series, (t0, t1), dx=args.dx, dt=args.dt)
    if args.series:
        _write(args.series, series.to_csv())
    if args.format == "csv":
        return series.to_csv()
    return json.dumps(estimate.as_dict()) + "\n"


COMPARE_HEADER = [
    "t",
    "x",
    "analytic",
    "oracle",
    "simulated",
    "normal",
    "tv_analytic_normal",
    "tv_analytic_oracle",
    "tv_simulated_analytic",
    "nonmonotonic",
]


def cmd_compare(args) -> str:
    if args.dispersion:
        return _dispersion_table(args)
    if args.p is None:
        raise UsageError("--p is required")
    p = _probability(args.p, False)
    times = sorted(set(_times(args)))
    if times[0] < 1:
        raise UsageError("compare needs t >= 1 (the normal density is undefined at t = 0)")

    oracle = {}
    for state in chain.evolve_series(Fraction(1, 2), p, times[-1], exact=False):
        if state.time in times:
            oracle[state.time] = chain.marginal(state)

    mca = rule = seed = None
    if args.trials:
        mca = _load_mca(args.threads)
        rule = _rule(args)
        seed = _resolve_seed(args.seed)

    rows = []
    for t in times:
        dist = analytic.closed_form_dist(t, p, exact=False)
        xs = dist.xs
        ref = oracle[t].on_range(-t, t)
        normal = analytic.normal_pdf(xs, t, p)
        sim = None
        if mca is not None:
            width, height = _grid_size(mca, rule, t, args.width, args.height)
            series = mca.ensemble_dispersion(rule, t, args.trials, seed + t, width, height)
            sim = np.bincount(series.endpoints + t, minlength=2 * t + 1)[: 2 * t + 1] / args.trials
        tv_norm = 0.5 * float(np.abs(dist.probs - normal).sum())
        tv_oracle = 0.5 * float(np.abs(dist.probs - ref).sum())
        tv_sim = "" if sim is None else format_prob(0.5 * float(np.abs(sim - dist.probs).sum()))
        flag = "true" if analytic.is_nonmonotonic(dist) else "false"
        for i, x in enumerate(xs):
            rows.append(
                [
                    t,
                    int(x),
                    format_prob(dist.probs[i]),
                    format_prob(ref[i]),
                    "" if sim is None else format_prob(sim[i]),
                    format_prob(normal[i]),
                    format_prob(tv_norm),
                    format_prob(tv_oracle),
                    tv_sim,
                    flag,
                ]
            )
    if args.format == "json":
        return json.dumps([dict(zip(COMPARE_HEADER, r)) for r in rows], indent=2) + "\n"
    return _csv([COMPARE_HEADER] + rows)


def _dispersion_table(args) -> str:
    """Type-1 dispersion against the calibrated type-2 relation, per t."""
    if args.dc is not None:
        target = float(Fraction(args.dc))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RealizabilityWarning)
            p = analytic.calibrate_p(target)
        ps = analytic.type2_calibrate_ps(target)
    else:
        if args.p is None or args.ps is None:
            raise UsageError("--dispersion needs --p and --ps, or --dc")
        p = _probability(args.p, False)
        ps = float(Fraction(args.ps))
    if not 0 <= ps < 1:
        raise UsageError(f"ps must lie in [0, 1), got {ps}")
    t_max = max(_times(args, default=[100]))
    header = ["t", "type1", "type2", "type2_exact"]
    rows = [
        [
            t,
            format_prob(analytic.variance(t, p)),
            format_prob(analytic.type2_dispersion(t, ps)),
            format_prob(analytic.type2_dispersion_exact(t, ps)),
        ]
        for t in range(t_max + 1)
    ]
    if args.format == "json":
        return json.dumps({"p": p, "ps": ps, "rows": [dict(zip(header, r)) for r in rows]}, indent=2) + "\n"
    return _csv([header] + rows)


def _csv(rows) -> str:
    return "".join(",".join(str(c) for c in r) + "\n" for r in rows)


def _write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


COMMANDS = {
    "chain": cmd_chain,
    "analytic": cmd_analytic,
    "calibrate": cmd_calibrate,
    "sample": cmd_sample,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RealizabilityWarning)
            text = COMMANDS[args.command](args)
        for w in caught:
            print(f"mcadiff: {w.category.__name__}: {w.message}", file=sys.stderr)
    except DomainError as exc:
        print(f"mcadiff: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (UsageError, ValueError) as exc:
        print(f"mcadiff {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"mcadiff: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if getattr(args, "out", None):
            _write(args.out, text)
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except OSError as exc:
        print(f"mcadiff: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
