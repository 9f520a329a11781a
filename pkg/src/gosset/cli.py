"""Command-line front end.

Subcommands mirror the model's outputs: ``price`` and ``greeks`` sweep one
parameter and emit curve data, ``table1`` prints the critical-value table,
``calibrate`` runs the historical pipeline on a return file, ``simulate``
runs the Monte Carlo window study, and ``serve`` starts the HTTP service.

Output goes to standard output as CSV (default) or JSON with a fixed column
set per subcommand; diagnostics go to standard error.  Exit codes: 0 on
success, 2 on validation failure, 3 on numerical failure.  Identical
arguments (and seed, where one applies) produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from gosset.calibration import (
    NegativeVarianceError,
    NoSolutionError,
    estimate_nu,
    normal_asymptote,
    normalized_vol_curve,
    simulate_window_study,
    window_volatilities,
)
from gosset.distributions import ReturnDistribution
from gosset.greeks import greeks_report
from gosset.ingest import SeriesFormat, load_series
from gosset.pricing import (
    MarketParams,
    TailMode,
    TailPolicy,
    black_scholes_call,
    black_scholes_put,
    price_call,
    price_put,
)
from gosset.quadrature import QuadratureError

SWEEP_PARAMS = ("S0", "K", "sigma", "nu", "p")
SIMULATE_TRIALS = 1000
CURVE_NU_GRID = [float(x) for x in np.geomspace(2.1, 128.0, 49)]


def _parse_nu(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"nu must be a number or 'inf', got {text!r}")
    return value


def _parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            f"sweep must be param:lo:hi:steps, got {text!r}"
        )
    param, lo_s, hi_s, steps_s = parts
    if param not in SWEEP_PARAMS:
        raise argparse.ArgumentTypeError(
            f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}"
        )
    try:
        lo, hi, steps = float(lo_s), float(hi_s), int(steps_s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep bounds in {text!r}")
    if steps < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad sweep range in {text!r}")
    return param, lo, hi, steps


def _parse_drops(text: str) -> List[int]:
    try:
        drops = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"drops must be integers, got {text!r}")
    if not drops:
        raise argparse.ArgumentTypeError("drops must name at least one level")
    return drops


def _sweep_values(lo: float, hi: float, steps: int) -> List[float]:
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _emit(columns: Sequence[str], rows: List[List], fmt: str) -> None:
    if fmt == "json":
        payload = []
        for row in rows:
            obj = {}
            for key, value in zip(columns, row):
                if isinstance(value, (np.floating,)):
                    value = float(value)
                if isinstance(value, (np.integer,)):
                    value = int(value)
                if isinstance(value, float) and not math.isfinite(value):
                    value = None
                obj[key] = value
            payload.append(obj)
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        sys.stdout.write(",".join(columns) + "\n")
        for row in rows:
            sys.stdout.write(",".join(_cell(v) for v in row) + "\n")


def _policies(dist: ReturnDistribution, p_c: float, p_p: float):
    # A cap at p_c = 1 is no cap at all; leave those cells empty.
    capped = None
    if p_c < 1.0:
        capped = TailPolicy.from_probabilities(dist, TailMode.CAPPED, p_c=p_c, p_p=p_p)
    truncated = TailPolicy.from_probabilities(
        dist, TailMode.TRUNCATED, p_c=p_c, p_p=p_p
    )
    return capped, truncated


def cmd_price(args: argparse.Namespace) -> int:
    sweep = args.sweep or ("K", 0.0, 100.0, 101)
    param, lo, hi, steps = sweep
    columns = [
        param,
        "call_capped",
        "call_truncated",
        "put_capped",
        "put_truncated",
        "black_scholes",
    ]
    rows = []
    for value in _sweep_values(lo, hi, steps):
        nu = value if param == "nu" else args.nu
        p_c = value if param == "p" else args.pc
        dist = ReturnDistribution(nu)
        capped, truncated = _policies(dist, p_c, args.pp)
        mkt = MarketParams(
            s0=value if param == "S0" else args.s0,
            strike=value if param == "K" else args.strike,
            rt=args.rt,
            sigma_t=value if param == "sigma" else args.sigma,
        )
        rows.append(
            [
                value,
                price_call(dist, capped, mkt).value_at_zero if capped else None,
                price_call(dist, truncated, mkt).value_at_zero,
                price_put(dist, capped, mkt).value_at_zero if capped else None,
                price_put(dist, truncated, mkt).value_at_zero,
                black_scholes_call(mkt),
            ]
        )
    _emit(columns, rows, args.format)
    return 0


def cmd_greeks(args: argparse.Namespace) -> int:
    sweep = args.sweep or ("S0", 25.0, 75.0, 101)
    param, lo, hi, steps = sweep
    columns = [param, "mode", "delta", "gamma", "vega", "theta", "dC_dnu", "dC_dp"]
    modes = [TailMode.CAPPED, TailMode.TRUNCATED]
    if args.mode is not None:
        modes = [TailMode(args.mode)]
    rows = []
    for value in _sweep_values(lo, hi, steps):
        nu = value if param == "nu" else args.nu
        p_c = value if param == "p" else args.pc
        dist = ReturnDistribution(nu)
        mkt = MarketParams(
            s0=value if param == "S0" else args.s0,
            strike=value if param == "K" else args.strike,
            rt=args.rt,
            sigma_t=value if param == "sigma" else args.sigma,
        )
        for mode in modes:
            if mode is TailMode.CAPPED and p_c >= 1.0:
                rows.append([value, mode.value] + [None] * 6)
                continue
            policy = TailPolicy.from_probabilities(dist, mode, p_c=p_c, p_p=args.pp)
            report = greeks_report(dist, policy, mkt)
            rows.append(
                [
                    value,
                    mode.value,
                    report.delta,
                    report.gamma,
                    report.vega,
                    report.theta,
                    report.dc_dnu,
                    report.dc_dp,
                ]
            )
    _emit(columns, rows, args.format)
    return 0


def cmd_table1(args: argparse.Namespace) -> int:
    columns = ["nu", "x_c", "max_increase"]
    rows = []
    for nu, label in ((3.0, "3"), (8.0, "8"), (21.0, "21"), (math.inf, "inf")):
        x_c = ReturnDistribution(nu).quantile(args.pc)
        rows.append([label, x_c, math.exp(args.sigma * x_c)])
    _emit(columns, rows, args.format)
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    if args.input is None:
        raise ValueError("calibrate requires --input")
    series = load_series(args.input, format=SeriesFormat(args.input_format))
    study = window_volatilities(series, args.window, args.drops)
    result = estimate_nu(study)

    columns = ["kind", "p_N", "nu", "value", "ratio", "uncertainty", "nu_lo", "nu_hi"]
    rows: List[List] = []
    fractions = [d / args.window for d in args.drops]
    curves = normalized_vol_curve(CURVE_NU_GRID, fractions)
    for f in fractions:
        p_n = 1.0 - f
        for nu, val in zip(CURVE_NU_GRID, curves[f]):
            rows.append(["curve", p_n, nu, val, None, None, None, None])
        rows.append(["asymptote", p_n, None, normal_asymptote(p_n), None, None, None, None])
    for d in args.drops:
        ratio, unc = study.ratios[d]
        p_n = (args.window - d) / args.window
        rows.append(["data", p_n, None, None, ratio, unc, None, None])
    lo, hi = result.nu_ci
    rows.append(
        [
            "estimate",
            None,
            result.nu_hat,
            None,
            None,
            None,
            lo,
            hi if math.isfinite(hi) else None,
        ]
    )
    _emit(columns, rows, args.format)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise ValueError("simulate requires --seed")
    dist = ReturnDistribution(args.nu)
    study = simulate_window_study(
        dist,
        window_len=args.window,
        drop_counts=args.drops,
        n_trials=SIMULATE_TRIALS,
        seed=args.seed,
        scale=args.sigma,
    )
    columns = ["kept", "drop", "mean", "median", "std", "ratio", "uncertainty"]
    rows = []
    for d in study.drop_counts:
        ratio, unc = study.ratios.get(d, (None, None))
        rows.append(
            [
                args.window - d,
                d,
                study.mean[d],
                study.median[d],
                study.std[d],
                ratio,
                unc,
            ]
        )
    _emit(columns, rows, args.format)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("gosset.api:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gosset",
        description="Option pricing and calibration under fat-tailed returns.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_model_flags(p: argparse.ArgumentParser, sigma_default: float) -> None:
        p.add_argument("--nu", type=_parse_nu, default=3.0, help="shape parameter or 'inf'")
        p.add_argument("--mode", choices=["capped", "truncated"], default=None)
        p.add_argument("--pp", type=float, default=0.0, help="floor probability")
        p.add_argument("--pc", type=float, default=0.999, help="cap probability")
        p.add_argument("--s0", type=float, default=50.0, help="spot price")
        p.add_argument("--strike", type=float, default=49.0, help="strike price")
        p.add_argument("--rt", type=float, default=0.03, help="rate times expiry")
        p.add_argument("--sigma", type=float, default=sigma_default,
                       help="volatility to expiry")
        p.add_argument("--sweep", type=_parse_sweep, default=None,
                       help="param:lo:hi:steps with param in " + ",".join(SWEEP_PARAMS))
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--input", default=None, help="delimited series file")
        p.add_argument("--input-format", choices=["closes", "returns"],
                       default="closes")
        p.add_argument("--window", type=int, default=22, help="window length")
        p.add_argument("--drops", type=_parse_drops, default=[2, 4],
                       help="comma-separated drop counts")

    p_price = sub.add_parser("price", help="price curves over a swept parameter")
    add_model_flags(p_price, sigma_default=0.3)
    p_price.set_defaults(handler=cmd_price)

    p_greeks = sub.add_parser("greeks", help="sensitivity curves over a swept parameter")
    add_model_flags(p_greeks, sigma_default=0.3)
    p_greeks.set_defaults(handler=cmd_greeks)

    p_table = sub.add_parser("table1", help="critical values and asset-increase caps")
    add_model_flags(p_table, sigma_default=0.3)
    p_table.set_defaults(handler=cmd_table1)

    p_cal = sub.add_parser("calibrate", help="estimate nu from a historical series")
    add_model_flags(p_cal, sigma_default=0.3)
    p_cal.set_defaults(handler=cmd_calibrate)

    p_sim = sub.add_parser("simulate", help="Monte Carlo window study")
    add_model_flags(p_sim, sigma_default=1.0)
    p_sim.set_defaults(handler=cmd_simulate)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError, NegativeVarianceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, NoSolutionError, OverflowError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
