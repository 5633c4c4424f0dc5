"""Command-line interface.

Exit codes: 0 on success, 1 for a bad configuration or arguments, 2 when a
numerical routine fails (quadrature, ODE blow-up, root search).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys

import numpy as np

from .charfn import CharFnBlowUp
from .config import ConfigError, load_config
from .correlation import corr_term_structure
from .model import initial_price
from .montecarlo import mc_price_cso, mc_price_vanilla
from .quadrature import QuadratureFailure
from .seasonality import QuadratureError
from .spread import CsoSpec, cso_call, cso_put, model_implied_correlation
from .vanilla import NoSolution, VanillaSpec, implied_vol, price_vanilla

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
NUMERICAL_ERRORS = (CharFnBlowUp, QuadratureFailure, QuadratureError, NoSolution, ArithmeticError)

TABLE_FIRST, TABLE_STEP, TABLE_ROWS, TABLE_GAP = 0.33, 0.25, 11, 0.5
TABLE_STRIKES = (-10.0, 0.0, 10.0)


def fmt(x) -> str:
    """CSV number format: 10 significant digits, 'NA' for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return format(float(x), ".10g")


def parse_grid(text: str):
    """Either ``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(n)]
    else:
        values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError("grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"grid {text!r} must be strictly increasing")
    return values


def grid_arg(text):
    try:
        return parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _write_csv(args, header, rows):
    with _output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def _pick_case(run, name):
    if name is None:
        return run.model
    if name not in run.cases:
        raise ConfigError(f"case {name!r} not found (available: {', '.join(run.cases) or 'none'})")
    return run.cases[name]


def cmd_price_vanilla(args, run):
    model = _pick_case(run, args.case)
    tm = args.futures_maturity if args.futures_maturity is not None else args.expiry
    spec = VanillaSpec(args.strike, args.expiry, tm, call=not args.put)
    res = price_vanilla(model, spec)
    vol = implied_vol(res.price, initial_price(model, tm), args.strike, args.expiry, model.rate, spec.call)
    with _output(args.out) as fh:
        print(f"price {res.price:.6f}", file=fh)
        print(f"implied_vol {vol:.6f}", file=fh)
    return EXIT_OK


def cmd_price_cso(args, run):
    model = _pick_case(run, args.case)
    spec = CsoSpec(args.expiry, args.t1, args.t2, args.strike)
    res = (cso_put if args.put else cso_call)(model, spec)
    with _output(args.out) as fh:
        print(f"price {res.price:.6f}", file=fh)
    return EXIT_OK


def cmd_smile(args, run):
    model = _pick_case(run, args.case)
    tm = args.futures_maturity if args.futures_maturity is not None else args.expiry
    F = initial_price(model, tm)
    rows = []
    for K in args.strikes:
        res = price_vanilla(model, VanillaSpec(K, args.expiry, tm))
        rows.append((K, implied_vol(res.price, F, K, args.expiry, model.rate)))
    _write_csv(args, ["strike", "implied_vol"], rows)
    return EXIT_OK


def cmd_term_structure(args, run):
    model = _pick_case(run, args.case)
    maturities = args.maturities or [m / 12.0 for m in range(1, 37)]
    rows = []
    for T in maturities:
        F = initial_price(model, T)
        K = args.strike if args.strike is not None else F
        res = price_vanilla(model, VanillaSpec(K, T, T))
        rows.append((T, implied_vol(res.price, F, K, T, model.rate)))
    _write_csv(args, ["maturity", "implied_vol"], rows)
    return EXIT_OK


def _table_rows():
    return [TABLE_FIRST + i * TABLE_STEP for i in range(TABLE_ROWS)]


def _cases(run):
    return dict(run.cases) if run.cases else {"model": run.model}


def cmd_cso_table(args, run):
    cases = _cases(run)
    header = ["T", "T1", "T2"] + [f"{name}_K{fmt(K)}" for name in cases for K in TABLE_STRIKES]
    rows = []
    for T in _table_rows():
        T2 = T + TABLE_GAP
        row = [T, T, T2]
        for model in cases.values():
            row += [cso_call(model, CsoSpec(T, T, T2, K)).price for K in TABLE_STRIKES]
        rows.append(row)
    _write_csv(args, header, rows)
    return EXIT_OK


def cmd_inst_corr(args, run):
    model = _pick_case(run, args.case)
    grid = np.linspace(0.0, args.t1, args.nodes)
    curve = corr_term_structure(model, args.t1, args.t2, grid)
    rows = zip(curve.grid, curve.values, curve.benchmark, curve.difference)
    _write_csv(args, ["t", "correlation", "benchmark", "difference"], rows)
    return EXIT_OK


def cmd_implied_corr(args, run):
    cases = _cases(run)
    rows = []
    for T in _table_rows():
        row = [T, T, T + TABLE_GAP]
        for model in cases.values():
            try:
                row.append(model_implied_correlation(model, CsoSpec(T, T, T + TABLE_GAP, args.strike)))
            except NoSolution:
                row.append(float("nan"))
        rows.append(row)
    _write_csv(args, ["T", "T1", "T2", *cases], rows)
    return EXIT_OK


def cmd_mc_validate(args, run):
    model = _pick_case(run, args.case)
    if args.t2 is not None:
        t1 = args.t1 if args.t1 is not None else args.expiry
        spec = CsoSpec(args.expiry, t1, args.t2, args.strike)
        cf = cso_call(model, spec).price
        mc = mc_price_cso(model, spec, run.mc)
    else:
        tm = args.t1 if args.t1 is not None else args.expiry
        spec = VanillaSpec(args.strike, args.expiry, tm)
        cf = price_vanilla(model, spec).price
        mc = mc_price_vanilla(model, spec, run.mc)
    z = (cf - mc.value) / mc.stderr if mc.stderr > 0 else 0.0
    _write_csv(args, ["cf_price", "mc_price", "mc_stderr", "z", "paths", "within_3_stderr"],
               [(cf, mc.value, mc.stderr, z, mc.paths_used, "yes" if abs(z) <= 3 else "no")])
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="model configuration file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    common.add_argument("--threads", type=int, help="worker threads for Monte Carlo")
    common.add_argument("--case", help="use a named case from the config instead of the base model")

    parser = argparse.ArgumentParser(prog="seasonalvol", description="Seasonal stochastic volatility pricer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price-vanilla", parents=[common], help="European option on a futures contract")
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--expiry", type=float, required=True)
    p.add_argument("--futures-maturity", type=float)
    p.add_argument("--put", action="store_true")
    p.set_defaults(func=cmd_price_vanilla)

    p = sub.add_parser("price-cso", parents=[common], help="calendar spread option")
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--expiry", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--put", action="store_true")
    p.set_defaults(func=cmd_price_cso)

    p = sub.add_parser("smile", parents=[common], help="implied vol across strikes")
    p.add_argument("--expiry", type=float, required=True)
    p.add_argument("--futures-maturity", type=float)
    p.add_argument("--strikes", type=grid_arg, default=parse_grid("80:120:5"))
    p.set_defaults(func=cmd_smile)

    p = sub.add_parser("term-structure", parents=[common], help="implied vol across maturities (T = T_m)")
    p.add_argument("--maturities", type=grid_arg)
    p.add_argument("--strike", type=float, help="fixed strike (default: at the money)")
    p.set_defaults(func=cmd_term_structure)

    p = sub.add_parser("cso-table", parents=[common], help="calendar spread prices for every case")
    p.set_defaults(func=cmd_cso_table)

    p = sub.add_parser("inst-corr", parents=[common], help="instantaneous correlation, deterministic variance")
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--t2", type=float, default=2.0)
    p.add_argument("--nodes", type=int, default=601)
    p.set_defaults(func=cmd_inst_corr)

    p = sub.add_parser("implied-corr", parents=[common], help="implied correlation term structure per case")
    p.add_argument("--strike", type=float, default=0.0)
    p.set_defaults(func=cmd_implied_corr)

    p = sub.add_parser("mc-validate", parents=[common], help="compare a CF price with Monte Carlo")
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--expiry", type=float, required=True)
    p.add_argument("--t1", type=float, help="futures maturity (first leg for spreads)")
    p.add_argument("--t2", type=float, help="second leg; prices a calendar spread when given")
    p.set_defaults(func=cmd_mc_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        run = load_config(args.config, seed=args.seed, threads=args.threads)
        return args.func(args, run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
