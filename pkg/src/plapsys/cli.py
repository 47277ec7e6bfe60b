"""Command-line front end: ``plapsys {exponents,solve,sweep,eigen,check}``.

Exit status: 0 success, 1 runtime or I/O failure (or a failed check),
2 usage or configuration error, 3 solve finished without converging.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exponents as ex
from .checks import run_battery
from .config import ConfigError, RunConfig, load_config, parse_value
from .fixedpoint import comparison_constant, lemma_quantities, energy_identity_residual, solve_system
from .grid import Grid, lq_norm, save_field
from .subsolvers import first_eigenpair

log = logging.getLogger("plapsys")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3
AXES = ("h", "m", "alpha", "A")
SWEEP_COLUMNS = (
    "axis", "value", "n", "h", "A", "alpha", "m", "converged", "outer_iters",
    "norm_u_r1", "norm_u_w1p", "norm_phi_w1p", "int_phi_ur", "int_ur1_phitheta",
    "energy_id_res", "comparison_constant", "s", "norm_u_s", "norm_u_2s", "error",
)


def _config(args) -> RunConfig:
    if args.config is None:
        cfg = RunConfig()
    else:
        text = Path(args.config).read_text()
        if not any(line.split("#", 1)[0].strip() for line in text.splitlines()):
            raise ConfigError(f"{args.config}: config file is empty")
        cfg = load_config(args.config)
    changes = {}
    if getattr(args, "out", None) is not None:
        changes["out"] = args.out
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


# -- exponents ---------------------------------------------------------------

def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, Fraction):
        return f"{v} (~{float(v):.6g})" if v.denominator != 1 else str(v)
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6g}"
    return str(v)


def _number(text):
    """Exact rational for decimal or ``a/b`` input, so the table is exact."""
    return Fraction(text)


def cmd_exponents(args) -> int:
    try:
        inp = ex.RegimeInput(args.N, _number(args.p), _number(args.r), _number(args.theta), _number(args.m))
    except (ValueError, ZeroDivisionError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rep = ex.classify(inp)
    rows = rep.rows()
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {_fmt(v)}")
    for note in rep.notes:
        print(f"note: {note}")
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "p", "r", "theta", "m"] + [k for k, _ in rows])
        w.writerow([inp.N] + [float(x) for x in (inp.p, inp.r, inp.theta, inp.m)]
                   + [float(v) if isinstance(v, Fraction) else ("" if v is None else v) for _, v in rows])
        print(buf.getvalue(), end="")
    return EXIT_OK


# -- solve -------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = _config(args)
    grid = cfg.grid()
    f = cfg.rhs(grid)
    sol = solve_system(f, cfg.params(), cfg.solver_options(), cfg.fp_options())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_field(sol.u, out / "u.field")
    save_field(sol.phi, out / "phi.field")
    (out / "trace.csv").write_text(sol.trace.to_csv())
    last = sol.trace[-1]
    print(f"converged={sol.converged} outer={len(sol.trace)} dphi_rel={last.dphi_rel:.3e} "
          f"J={last.J:.10g} energy_id_res={last.energy_id_res:.3e}")
    print(f"wrote {out / 'u.field'}, {out / 'phi.field'}, {out / 'trace.csv'}")
    return EXIT_OK if sol.converged else EXIT_NOCONV


# -- sweep -------------------------------------------------------------------

def _apply_axis(cfg: RunConfig, axis: str, value: str) -> RunConfig:
    if axis == "h":
        h = float(Fraction(value))
        if not h > 0:
            raise ConfigError(f"h must be positive, got {value}")
        ext = cfg.extent * cfg.N if len(cfg.extent) == 1 else cfg.extent
        return cfg.replace(n=tuple(max(2, round(e / h)) for e in ext))
    if axis == "m":
        m = float(Fraction(value))
        # f in L^q exactly for q < m + m_gap
        return cfg.replace(m=m, alpha=cfg.N / (m + cfg.m_gap), data="singular")
    return cfg.replace(**{axis: parse_value(axis, value)})


def run_one(cfg: RunConfig, axis: str, value: str) -> dict:
    """One sweep row; failures land in the ``error`` column."""
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(axis=axis, value=value)
    try:
        cfg = _apply_axis(cfg, axis, value)
        grid = cfg.grid()
        row.update(n=grid.cell_shape[0], h=repr(grid.h), A=repr(cfg.A), alpha=repr(cfg.alpha),
                   m="" if cfg.m is None else repr(cfg.m))
        params = cfg.params()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = solve_system(cfg.rhs(grid), params, cfg.solver_options(), cfg.fp_options())
        lq = lemma_quantities(sol.u, sol.phi, params)
        peak = float(np.max(sol.phi.values))
        cc = comparison_constant(sol.u, sol.phi, cfg.floor * peak) if peak > 0 else math.inf
        row.update(converged=int(sol.converged), outer_iters=len(sol.trace),
                   energy_id_res=repr(energy_identity_residual(sol.u, sol.phi, params)),
                   comparison_constant=repr(cc),
                   **{k: repr(v) for k, v in vars(lq).items()})
        if cfg.m is not None and 1 < grid.ndim and cfg.p < grid.ndim:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ex.OutOfHypothesisWarning)
                s = float(ex.s_exponent(cfg.m, cfg.p, cfg.r))
            row.update(s=repr(s), norm_u_s=repr(lq_norm(sol.u, s)), norm_u_2s=repr(lq_norm(sol.u, 2 * s)))
    except Exception as exc:  # recorded in-row, the sweep goes on
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep_rows(cfg: RunConfig, axis: str, values, jobs: int = 1) -> list[dict]:
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {AXES}")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, [cfg] * len(values), [axis] * len(values), values))
    return [run_one(cfg, axis, v) for v in values]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values needs at least one entry")
    rows = sweep_rows(cfg, args.axis, values, args.jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"sweep_{args.axis}.csv"
    path.write_text(rows_to_csv(rows))
    for row in rows:
        status = row["error"] or f"converged={row['converged']} norm_u_w1p={row['norm_u_w1p']}"
        print(f"{args.axis}={row['value']}: {status}")
    print(f"wrote {path}")
    return EXIT_OK


# -- eigen -------------------------------------------------------------------

def cmd_eigen(args) -> int:
    cfg = _config(args)
    if args.n is not None:
        cfg = cfg.replace(n=(args.n,))
    if args.p is not None:
        cfg = cfg.replace(p=args.p, theta=0.0)
    grid = cfg.grid()
    pair = first_eigenpair(grid, cfg.p, cfg.params().eps, cfg.solver_options())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_field(pair.phi1, out / "phi1.field")
    print(f"lambda1 = {pair.lambda1:.10g}")
    print(f"wrote {out / 'phi1.field'}")
    return EXIT_OK


# -- check -------------------------------------------------------------------

def cmd_check(args) -> int:
    params = _config(args).params() if args.config else None
    results = run_battery(params, seed=args.seed or 0)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plapsys", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log outer iterations")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="exponent table and regime for (N, p, r, theta, m)")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--r", required=True)
    p.add_argument("--theta", default="0")
    p.add_argument("--m", default="1")
    p.add_argument("--csv", action="store_true", help="also print a CSV header and row")
    p.set_defaults(func=cmd_exponents)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="key = value config file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides the config)")

    p = sub.add_parser("solve", help="solve the coupled system, write fields and trace")
    common(p, config_required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="repeat solves along one parameter axis")
    common(p, config_required=True)
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--values", required=True, help="comma-separated, fractions allowed (1/16)")
    p.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eigen", help="first eigenpair of the discrete p-Laplacian")
    common(p)
    p.add_argument("--n", type=int, help="cells per axis (overrides the config)")
    p.add_argument("--p", type=float, help="exponent (overrides the config)")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("check", help="built-in verification battery")
    common(p)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        name = getattr(exc, "filename", None)
        print(f"I/O error{f' on {name}' if name else ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
