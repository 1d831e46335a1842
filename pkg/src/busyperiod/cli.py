"""Command-line front end for the busy-period engines.

Exit codes: 0 success, 2 usage or domain error, 3 numerical failure,
4 insufficient simulation data. Output goes to ``--out`` or, when omitted,
to the directory named by BUSYPERIOD_OUTPUT_DIR (default: current directory).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import algebraic, asymptotics, complexpole, sim, spectral, stats
from .model import SCHEMA_VERSION, ModelParams

OUTPUT_ENV = "BUSYPERIOD_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_NODATA = 0, 2, 3, 4


def logcompress(x):
    """Bijective compression sgn(x) log10(1 + |x|)."""
    x = np.asarray(x, dtype=float)
    val = np.sign(x) * np.log10(1.0 + np.abs(x))
    return float(val) if val.ndim == 0 else val


def logexpand(y):
    """Inverse of ``logcompress``: sgn(y) (10^|y| - 1)."""
    y = np.asarray(y, dtype=float)
    val = np.sign(y) * np.expm1(np.abs(y) * math.log(10.0))
    return float(val) if val.ndim == 0 else val


def _fmt(x):
    return format(float(x), ".17g")


def _out_dir(args):
    d = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")


def _write_json(path, obj):
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _params(args):
    return ModelParams(args.n, args.r, getattr(args, "t_scale", 1.0))


def _hazard(pdf, sf):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(sf > 0, pdf / np.where(sf > 0, sf, 1.0), np.nan)


# --- dist ----------------------------------------------------------------

def _dist_spectral(p, t):
    d = spectral.bp_distribution(p)
    pdf, sf = d.pdf(t), d.sf(t)
    meta = {"mixture": d.mixture.to_dict(), "diagnostics": spectral.diagnostics(p, d),
            "method_detail": d.method, "tail_rate": d.tail_rate}
    return pdf, sf, meta


def _dist_complexpole(p, t):
    c = complexpole.ComplexPoleDensity(p)
    meta = {"poles": c.poles, "pole_density_coefficients": c.residues}
    if c.bs is not None:
        meta["beta_system"] = c.bs.to_dict()
    return c.pdf(t), c.sf(t), meta


def _dist_asymptotic(p, t):
    if p.r == 1:
        m = asymptotics.m_scale(p)
        tau = t / m
        sf = asymptotics.const_r_unity_sf(p, tau)
        with np.errstate(divide="ignore"):
            pdf = np.where(tau > 0, asymptotics.const_r_unity_pdf(np.where(tau > 0, tau, 1.0)) / m, np.inf)
        return pdf, sf, {"law": "erfcx", "m_scale": m}
    a = asymptotics.const_r_two_exp(p)
    mix = a.to_mixture()
    return mix.pdf(t), mix.sf(t), {"law": "two-exponential", "nu": a.nu, "m_bp": a.m_bp,
                                   "m_prime": a.m_prime, "m_dprime": a.m_dprime}


_DIST = {"spectral": _dist_spectral, "complexpole": _dist_complexpole, "asymptotic": _dist_asymptotic}


def _t_grid(p, args):
    if args.t is not None:
        t = np.array([float(x) for x in args.t.split(",")])
    else:
        if p.r < 1:
            scale = stats.exact_mean(p)
        else:
            scale = asymptotics.m_scale(p)
        t_max = args.t_max if args.t_max is not None else 10.0 * scale
        t = np.linspace(0.0, t_max, args.points)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    return t


def cmd_dist(args):
    p = _params(args)
    t = _t_grid(p, args)
    if p.r == 1 and args.method == "spectral":
        sf = spectral.r1_sf(p, t)
        pdf = spectral.r1_pdf(p, t)
        meta = {"tail_amplitude": spectral.r1_tail_amplitude(p)}
    else:
        pdf, sf, meta = _DIST[args.method](p, t)
    pdf, sf = np.atleast_1d(pdf), np.atleast_1d(sf)
    out = _out_dir(args)
    stem = f"dist_{args.method}_N{p.n_servers}_r{p.r:g}"
    ts = t * p.t_scale
    _write_csv(out / f"{stem}.csv", ["t", "pdf", "sf", "hazard"],
               zip(ts, pdf / p.t_scale, sf, _hazard(pdf, sf) / p.t_scale))
    _write_json(out / f"{stem}.json", {"params": _pdict(p), "method": args.method, **meta})
    print(out / f"{stem}.csv")
    return EXIT_OK


def _pdict(p):
    return {"n_servers": p.n_servers, "r": p.r, "t_scale": p.t_scale}


# --- tables --------------------------------------------------------------

def cmd_tables(args):
    out = _out_dir(args)
    rows = [(N, algebraic.critical_r(N)) for N in range(1, args.max_n + 1)]
    _write_csv(out / "critical_r.csv", ["N", "r_c"], rows)
    polys = {}
    for N in (2, 3, 4):
        dp = algebraic.d_polynomials(ModelParams(N, args.r))
        polys[str(N)] = {"D0": dp.D0, "D1": dp.D1}
    _write_json(out / "d_polynomials.json",
                {"r": args.r, "variable": "sigma_1 = s + r + mu_1", "order": "lowest degree first",
                 "polynomials": polys})
    for N, rc in rows:
        print(f"N={N} r_c={rc:.4f}")
    return EXIT_OK


# --- sweep ---------------------------------------------------------------

def _parse_range(text, cast):
    vals = []
    for part in text.split(","):
        if ":" in part:
            a, b, *step = part.split(":")
            if cast is int:
                vals.extend(range(int(a), int(b) + 1, int(step[0]) if step else 1))
            else:
                st = float(step[0]) if step else 0.05
                n = int(round((float(b) - float(a)) / st))
                vals.extend(round(float(a) + i * st, 12) for i in range(n + 1))
        else:
            vals.append(cast(part))
    return vals


def _sweep_cell(cell):
    N, r, statistic = cell
    p = ModelParams(N, r)
    if statistic == "mean":
        return N, r, statistic, stats.exact_mean(p), "exact"
    d = spectral.bp_distribution(p)
    if statistic == "logmean":
        return N, r, statistic, stats.mixture_logmean(d.mixture), "spectral"
    return N, r, statistic, stats.mixture_entropy(d.mixture), "spectral"


def cmd_sweep(args):
    ns = _parse_range(args.n_range, int)
    rs = _parse_range(args.r_range, float)
    cells = [(N, r, args.statistic) for N in ns for r in rs]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    out = _out_dir(args)
    path = out / f"sweep_{args.statistic}.csv"
    _write_csv(path, ["N", "r", "statistic", "value", "method"],
               [(str(N), r, s, v, m) for N, r, s, v, m in rows])
    print(path)
    return EXIT_OK


# --- simulate ------------------------------------------------------------

def cmd_simulate(args):
    p = _params(args)
    cfg = sim.SimConfig(p, args.t_stop, args.seed)
    sample = sim.simulate_bp(cfg)
    d = spectral.bp_distribution(p)
    exact = {"mean": stats.exact_mean(p), "logmean": stats.mixture_logmean(d.mixture),
             "entropy": stats.mixture_entropy(d.mixture)}
    cis = sim.bootstrap_cis(sample.durations, B=args.B, alpha=args.alpha,
                            rng=np.random.default_rng(args.seed + 1), entropy_mode=args.entropy_mode)
    out = _out_dir(args)
    stem = f"sim_N{p.n_servers}_r{p.r:g}_seed{args.seed}"
    sample.to_csv(out / f"{stem}.csv")
    summary = {
        "params": _pdict(p), "seed": args.seed, "t_stop": args.t_stop, "n_busy_periods": int(sample.durations.size),
        "n_cycles": sample.n_cycles, "alpha": args.alpha, "B": args.B,
        "statistics": {k: {"lo": c.lo, "estimate": c.estimate, "hi": c.hi, "exact": exact[k],
                           "inside": c.contains(exact[k])} for k, c in cis.items()},
    }
    _write_json(out / f"{stem}.json", summary)
    for k, c in cis.items():
        print(f"{k}: [{c.lo:.6g}, {c.hi:.6g}] exact {exact[k]:.6g} {'inside' if c.contains(exact[k]) else 'OUTSIDE'}")
    return EXIT_OK


# --- validate ------------------------------------------------------------

def _validate_one(p):
    checks = {}
    d = spectral.bp_distribution(p)
    checks.update(spectral.diagnostics(p, d))
    if p.r < 1:
        m_exact = stats.exact_mean(p)
        rel = d.mean() / m_exact - 1
        checks["mean_identity"] = {"ok": abs(rel) < 1e-6, "residual": rel}
        sd = spectral.spectral_data(p)
        phi0 = float(spectral.mgf(sd, p, 0.0)) - 1
        checks["mgf_at_zero"] = {"ok": abs(phi0) < 1e-10, "residual": phi0}
        if p.r > 0:
            cf = max(abs(float(spectral.mgf(sd, p, s)) / algebraic.eta_chain_mgf(p, s) - 1) for s in (0.1, 1.0, 10.0))
            checks["continued_fraction_mgf"] = {"ok": cf < 1e-10, "residual": cf}
    return checks


def cmd_validate(args):
    if args.grid:
        cells = [(N, round(0.05 * i, 2)) for N in range(1, 61) for i in range(1, 20)]
    else:
        if args.n is None or args.r is None:
            raise ValueError("validate needs --n and --r, or --grid")
        cells = [(args.n, args.r)]
    report, failed = [], []
    for N, r in cells:
        checks = _validate_one(ModelParams(N, r))
        report.append({"N": N, "r": r, "checks": checks})
        failed.extend(f"N={N} r={r}: {name}" for name, c in checks.items() if not c["ok"])
        if len(cells) == 1:
            for name, c in checks.items():
                extra = f" count={c['count']}" if "count" in c else ""
                print(f"{'ok  ' if c['ok'] else 'FAIL'} {name} residual={c['residual']:.3g}{extra}")
    out = _out_dir(args)
    _write_json(out / "validate.json", {"cells": report, "failed": failed})
    if failed:
        for f in failed:
            print(f"failed check: {f}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"all checks passed on {len(cells)} cell(s)")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="busyperiod", description="Busy-period distribution of the M/M/c queue.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, need_params=True):
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
        if need_params:
            sp.add_argument("--n", type=int, required=True, help="number of servers N")
            sp.add_argument("--r", type=float, required=True, help="total traffic intensity r")

    d = sub.add_parser("dist", help="density and survival function (with their ratio) on a time grid")
    common(d)
    d.add_argument("--method", choices=sorted(_DIST), default="spectral")
    d.add_argument("--t", help="comma-separated times (model units)")
    d.add_argument("--t-max", type=float, help="grid end (default 10 x mean)")
    d.add_argument("--points", type=int, default=101)
    d.add_argument("--t-scale", type=float, default=1.0, help="multiply output times by this factor")
    d.set_defaults(func=cmd_dist)

    t = sub.add_parser("tables", help="critical intensities and D polynomials")
    common(t, need_params=False)
    t.add_argument("--max-n", type=int, default=6)
    t.add_argument("--r", type=float, default=0.5, help="intensity for numeric D-polynomial coefficients")
    t.set_defaults(func=cmd_tables)

    s = sub.add_parser("sweep", help="one summary statistic over an (N, r) grid")
    common(s, need_params=False)
    s.add_argument("--statistic", choices=stats_names(), default="mean")
    s.add_argument("--n-range", default="1:30", help="e.g. 1:30 or 1:60:5 or 2,5,10")
    s.add_argument("--r-range", default="0.05:0.95:0.05", help="e.g. 0.05:0.95:0.05 or 0.3,0.5")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("simulate", help="simulate busy periods and bootstrap confidence intervals")
    common(m)
    m.add_argument("--t-stop", type=float, default=1e6, help="horizon in mean service times")
    m.add_argument("--seed", type=int, default=20240101)
    m.add_argument("--B", type=int, default=1000)
    m.add_argument("--alpha", type=float, default=0.01)
    m.add_argument("--entropy-mode", choices=["nn-ensemble", "dedupe"], default="nn-ensemble")
    m.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="diagnostic battery; exit 0 iff every check passes")
    v.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
    v.add_argument("--n", type=int)
    v.add_argument("--r", type=float)
    v.add_argument("--grid", action="store_true", help="N = 1..60, r = 0.05..0.95")
    v.set_defaults(func=cmd_validate)
    return ap


def stats_names():
    return list(sim.STATISTICS)


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except sim.InsufficientDataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NODATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
