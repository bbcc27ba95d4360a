"""Command-line front end.

Commands: density, exceed, ratio-table, moments, loglog, validate. Each
emits a single table, as CSV (header row, '.' decimals, scientific
notation once the exponent magnitude reaches 6) or as versioned JSON, to
stdout or --out. Output is byte-stable for a fixed configuration; the only
randomness is the --seed flag consumed by validate.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import closedform, mixstats, montecarlo
from .branching import (
    GaussianBase,
    Mode,
    ScheduleParseError,
    ScheduleSpec,
    build_mixture,
    parse_schedule_spec,
)
from .special import INFINITY

SCHEMA_VERSION = 1

EXIT_CONFIG = 2
EXIT_DOMAIN = 3


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    if f == 0.0:
        return "0"
    exponent = math.floor(math.log10(abs(f)))
    if abs(exponent) >= 6:
        return f"{f:.12e}"
    s = f"{f:.{max(0, 12 - exponent)}f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def _emit(args, command: str, columns: list[str], rows: list[list]) -> None:
    if args.format == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "columns": columns,
            "rows": [[None if c is None else c for c in row] for row in rows],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        lines = [",".join(columns)]
        lines.extend(",".join(_format_value(c) for c in row) for row in rows)
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_table_csv(text: str) -> tuple[list[str], list[list]]:
    """Read back a CSV table emitted by this tool."""
    lines = [ln for ln in text.split("\n") if ln != ""]
    columns = lines[0].split(",")
    rows = [[_parse_cell(c) for c in ln.split(",")] for ln in lines[1:]]
    return columns, rows


def _parse_cell(cell: str):
    if cell == "":
        return None
    if cell == "true":
        return True
    if cell == "false":
        return False
    try:
        return float(cell)
    except ValueError:
        return cell


def parse_table_json(text: str) -> tuple[list[str], list[list]]:
    """Read back a JSON table emitted by this tool."""
    payload = json.loads(text)
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {payload.get('schema_version')!r}")
    return payload["columns"], payload["rows"]


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ScheduleParseError(f"{flag} expects comma-separated numbers, got {text!r}")
    if not values:
        raise ScheduleParseError(f"{flag} must not be empty")
    return values


def _parse_ints(text: str, flag: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ScheduleParseError(f"{flag} expects comma-separated integers, got {text!r}")
    if not values:
        raise ScheduleParseError(f"{flag} must not be empty")
    return values


def _parse_grid(text: str) -> np.ndarray:
    # min:max:step, endpoints included (the count is rounded from the step).
    parts = text.split(":")
    if len(parts) != 3:
        raise ScheduleParseError(f"--x expects min:max:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ScheduleParseError(f"--x expects numbers, got {text!r}")
    if not (hi > lo and step > 0):
        raise ScheduleParseError(f"--x needs max > min and step > 0, got {text!r}")
    count = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, count)


def _parse_logrange(text: str) -> tuple[float, float, int]:
    # min:max:points with an integer point count on a geometric grid.
    parts = text.split(":")
    if len(parts) != 3:
        raise ScheduleParseError(f"--x expects min:max:points, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        points = int(parts[2])
    except ValueError:
        raise ScheduleParseError(f"--x expects min:max:points, got {text!r}")
    if points < 3:
        raise ScheduleParseError("loglog needs at least 3 points for slope columns")
    return lo, hi, points


def _base(args) -> GaussianBase:
    return GaussianBase(mu=args.mu, sigma=args.sigma)


def _schedule_spec(args) -> ScheduleSpec:
    if not args.schedule:
        raise ScheduleParseError("--schedule is required for this command")
    return parse_schedule_spec(args.schedule)


def _n_list(args, spec: ScheduleSpec) -> list[int]:
    if args.n_list:
        return _parse_ints(args.n_list, "--n-list")
    return [spec.n]


def _is_constant(spec: ScheduleSpec) -> bool:
    return spec.kind == "constant" and not spec.additive


def cmd_density(args) -> int:
    base = _base(args)
    spec = _schedule_spec(args)
    grid = _parse_grid(args.x)
    depths = _n_list(args, spec)
    columns = ["x"] + [f"f_N{n}" for n in depths]
    series = []
    for n in depths:
        if _is_constant(spec):
            series.append(mixstats.density_constant_a(base, spec.a, n, grid))
        else:
            mixture = build_mixture(base, spec.to_schedule(n))
            series.append(mixstats.density(mixture, grid))
    rows = [[grid[i]] + [s[i] for s in series] for i in range(grid.size)]
    _emit(args, "density", columns, rows)
    return 0


def cmd_exceed(args) -> int:
    base = _base(args)
    spec = _schedule_spec(args)
    thresholds = _parse_floats(args.k, "--k")
    depths = _n_list(args, spec)
    rows = []
    for n in depths:
        mixture = None
        if not _is_constant(spec):
            mixture = build_mixture(base, spec.to_schedule(n))
        for k in thresholds:
            if mixture is None:
                log_p = mixstats.log_exceedance_constant_a(base, spec.a, n, k)
            else:
                log_p = mixstats.log_exceedance(mixture, k)
            rows.append([n, k, math.exp(log_p), log_p])
    _emit(args, "exceed", ["N", "K", "p_exceed", "ln_p"], rows)
    return 0


def cmd_ratio_table(args) -> int:
    base = _base(args)
    rates = [args.a] if args.a is not None else [0.01, 0.1]
    depths = _parse_ints(args.n_list, "--n-list") if args.n_list else [5, 10, 15, 20, 25]
    thresholds = _parse_floats(args.k_list, "--k-list") if args.k_list else [3.0, 5.0, 10.0]
    columns = ["a", "N"] + [f"K{_format_value(k)}" for k in thresholds]
    rows = []
    for a in rates:
        for n in depths:
            rows.append(
                [a, n] + [mixstats.convexity_ratio(base, a, n, k) for k in thresholds]
            )
    _emit(args, "ratio-table", columns, rows)
    return 0


def _closed_moment(spec: ScheduleSpec, order: int, mu: float, sigma: float, n: int):
    if spec.kind == "constant" and not spec.additive:
        return closedform.moment_constant_a(order, mu, sigma, spec.a, n)
    if spec.kind == "geometric" or spec.additive:
        if order in (1, 2, 4):
            a = spec.a if spec.a is not None else (spec.rates[0] if spec.rates else 0.0)
            return closedform.moments_additive(order, mu, sigma, a, n)
        return None
    schedule = spec.to_schedule(n)
    return closedform.moment_multiplicative(order, mu, sigma, schedule.rates)


def _limit_moment(spec: ScheduleSpec, order: int, mu: float, sigma: float):
    if spec.kind == "bleed":
        if order == 2:
            return closedform.m2_bleed(
                closedform.BleedParams(a1=spec.a1, lam=spec.lam, n=INFINITY, sigma=sigma)
            )
        if order == 4:
            return closedform.m4_bleed(
                closedform.BleedParams(a1=spec.a1, lam=spec.lam, n=INFINITY, sigma=sigma)
            )
    if spec.kind == "geometric" and order in (1, 2, 4):
        return closedform.moments_additive(order, mu, sigma, spec.a, INFINITY)
    return None


def cmd_moments(args) -> int:
    base = _base(args)
    spec = _schedule_spec(args)
    orders = (
        _parse_ints(args.orders, "--orders") if args.orders else [1, 2, 3, 4, 5, 6, 7, 8]
    )
    n = spec.n
    mixture = None
    if n <= 24:
        mixture = build_mixture(base, spec.to_schedule())
    rows = []
    for order in orders:
        closed = _closed_moment(spec, order, base.mu, base.sigma, n)
        enum = mixstats.mixture_raw_moment(mixture, order) if mixture is not None else None
        rel = None
        if closed is not None and enum is not None:
            denom = max(abs(closed), abs(enum), 1e-300)
            rel = abs(closed - enum) / denom
        rows.append([order, closed, enum, rel, _limit_moment(spec, order, base.mu, base.sigma)])
    _emit(
        args,
        "moments",
        ["order", "closed_form", "enumeration", "rel_diff", "limit_inf"],
        rows,
    )
    return 0


def cmd_loglog(args) -> int:
    base = _base(args)
    spec = _schedule_spec(args)
    lo, hi, points = _parse_logrange(args.x)
    depths = _n_list(args, spec)
    rows = []
    for n in depths:
        if _is_constant(spec):
            series = mixstats.loglog_series_constant_a(base, spec.a, n, lo, hi, points)
        else:
            mixture = build_mixture(base, spec.to_schedule(n))
            series = mixstats.loglog_series(mixture, lo, hi, points)
        slopes = mixstats.local_slopes(series)
        for i in range(len(series)):
            rows.append([n, series.x[i], series.log_x[i], series.log_p[i], slopes[i]])
    _emit(args, "loglog", ["N", "x", "ln_x", "ln_p", "local_slope"], rows)
    return 0


def cmd_validate(args) -> int:
    base = _base(args)
    spec = _schedule_spec(args)
    orders = tuple(_parse_ints(args.orders, "--orders")) if args.orders else (1, 2, 3, 4)
    if args.k_list:
        thresholds = tuple(_parse_floats(args.k_list, "--k-list"))
    else:
        thresholds = tuple(base.mu + base.sigma * m for m in (1.0, 2.0, 3.0))
    schedule = spec.to_schedule()
    mixture = build_mixture(base, schedule)
    references: dict[tuple[str, float], float] = {}
    for order in orders:
        references[("moment", float(order))] = mixstats.mixture_raw_moment(mixture, order)
    for k in thresholds:
        references[("exceedance", k)] = mixstats.exceedance(mixture, k)
    if args.self_test:
        # Negative control: corrupt the references and expect failures.
        references = {
            key: ref + 1.0 + abs(ref) for key, ref in references.items()
        }
    sample_spec = montecarlo.SampleSpec(
        n_samples=args.n_samples,
        seed=args.seed,
        moment_orders=orders,
        thresholds=thresholds,
    )
    report = montecarlo.estimate(montecarlo.sample(mixture, sample_spec))
    checks = montecarlo.check_report(report, references)
    rows = [
        [c.kind, c.key, c.estimate, c.se, c.reference, c.z, c.reliable, c.passed]
        for c in checks
    ]
    _emit(
        args,
        "validate",
        ["kind", "key", "estimate", "se", "reference", "z", "reliable", "passed"],
        rows,
    )
    return 0 if all(c.passed is not False for c in checks) else 1


def _add_common(sp, with_seed=True) -> None:
    sp.add_argument("--mu", type=float, default=0.0, help="base location (default 0)")
    sp.add_argument("--sigma", type=float, default=1.0, help="base scale (default 1)")
    sp.add_argument(
        "--schedule",
        help=(
            "constant:a=<r>,N=<n> | bleed:a1=<r>,lambda=<r>,N=<n> | "
            "geometric:a=<r>,N=<n> | explicit:<r1,r2,...>[;mode=additive]"
        ),
    )
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", default=None, help="output path (default stdout)")
    if with_seed:
        sp.add_argument("--seed", type=int, default=0, help="RNG seed (validate only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchvol",
        description="Branching uncertainty on a Gaussian scale: densities, "
        "tails, moments, and Monte Carlo checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("density", help="density curves, optionally for several depths")
    _add_common(sp)
    sp.add_argument("--x", required=True, help="grid min:max:step (use --x=-4:4:0.05)")
    sp.add_argument("--n-list", help="comma-separated depths overriding the schedule N")
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("exceed", help="tail probabilities P(X > K)")
    _add_common(sp)
    sp.add_argument("--k", required=True, help="comma-separated thresholds")
    sp.add_argument("--n-list", help="comma-separated depths overriding the schedule N")
    sp.set_defaults(func=cmd_exceed)

    sp = sub.add_parser(
        "ratio-table", help="tail inflation ratios vs the depth-0 Gaussian"
    )
    _add_common(sp)
    sp.add_argument("--a", type=float, default=None, help="rate (default: both 0.01 and 0.1)")
    sp.add_argument("--n-list", help="depth rows (default 5,10,15,20,25)")
    sp.add_argument("--k-list", help="threshold columns (default 3,5,10)")
    sp.set_defaults(func=cmd_ratio_table)

    sp = sub.add_parser(
        "moments", help="closed-form vs enumerated raw moments, with limits"
    )
    _add_common(sp)
    sp.add_argument("--orders", help="comma-separated orders (default 1..8)")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("loglog", help="log-log survival series with local slopes")
    _add_common(sp)
    sp.add_argument("--x", required=True, help="geometric grid min:max:points")
    sp.add_argument("--n-list", help="comma-separated depths overriding the schedule N")
    sp.set_defaults(func=cmd_loglog)

    sp = sub.add_parser("validate", help="Monte Carlo check against exact values")
    _add_common(sp)
    sp.add_argument("--n-samples", type=int, default=1_000_000)
    sp.add_argument("--orders", help="moment targets (default 1,2,3,4)")
    sp.add_argument("--k-list", help="exceedance targets (default mu + {1,2,3} sigma)")
    sp.add_argument(
        "--self-test",
        action="store_true",
        help="corrupt the references to confirm the check can fail",
    )
    sp.set_defaults(func=cmd_validate)
    return parser


def _merge_negative_values(argv: list[str]) -> list[str]:
    # argparse rejects values like "-4:4:0.05" as option-looking; fold them
    # into --flag=value form so grids and thresholds may start with a minus.
    merged = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (
            tok in ("--x", "--k", "--k-list")
            and i + 1 < len(argv)
            and len(argv[i + 1]) > 1
            and argv[i + 1][0] == "-"
            and (argv[i + 1][1].isdigit() or argv[i + 1][1] == ".")
        ):
            merged.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        merged.append(tok)
        i += 1
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = parser.parse_args(_merge_negative_values(argv))
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ScheduleParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def run() -> None:
    raise SystemExit(main())
