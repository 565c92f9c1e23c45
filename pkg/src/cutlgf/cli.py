"""Benchmark command line.

Subcommands:
  convergence   manufactured-solution refinement study, CSV report
  sweep         cut-translation / screening condition-number sweep, CSV
  symbols       flat-interface symbol tables, CSV
  lgf-selftest  kernel sanity checks (five-point identity, known values)

A plain-text config file (key = value per line) can replace flags; explicit
command-line flags win.  CUTLGF_THREADS controls the case-level worker pool.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench, lgf, symbols
from .problems import ProblemSpec


def _int_list(text: str):
    return [int(tok) for tok in text.split(",") if tok]


def _float_list(text: str):
    """Comma list or start:step:stop range (inclusive)."""
    if ":" in text:
        start, step, stop = (float(t) for t in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [float(v) for v in np.linspace(start, stop, count)]
    return [float(tok) for tok in text.split(",") if tok]


def _config_flags(path) -> list[str]:
    """Turn a key = value config file into command-line flags."""
    flags = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            flags.append(f"--{key.strip().replace('_', '-')}={value.strip()}")
    return flags


def _cmd_convergence(args) -> int:
    specs = [
        ProblemSpec(geometry=args.geometry, N=n, mode=args.mode,
                    sigma_surface=args.sigma_surface, sigma_bulk=args.sigma_bulk,
                    tol=args.tol)
        for n in _int_list(args.N)
    ]
    report = bench.run_convergence(specs, lgf_cache=args.lgf_cache)
    report.write_csv(args.out)
    failures = [r for r in report.rows if r.error or not r.converged]
    for row in report.rows:
        status = row.error or ("ok" if row.converged else "not converged")
        print(f"N={row.N:5d} iter={row.iterations:4d} cond={row.kappa:.4g} "
              f"e_surf_L2={row.e_surf_l2:.4e} [{status}]")
    print(f"wrote {args.out}")
    return 1 if failures else 0


def _cmd_sweep(args) -> int:
    report = bench.run_sweep(
        betas=_float_list(args.beta),
        sigma_bulks=_float_list(args.sigma_bulk),
        sigma_surfaces=_float_list(args.sigma_surface),
        Ns=_int_list(args.N),
        mode=args.mode,
        lgf_cache=args.lgf_cache,
    )
    report.write_csv(args.out)
    failures = [r for r in report.rows if r.error]
    kappas = [r.kappa for r in report.rows if not r.error]
    if kappas:
        print(f"{len(report.rows)} cases, kappa in [{min(kappas):.4g}, "
              f"{max(kappas):.4g}]")
    print(f"wrote {args.out}")
    return 1 if failures else 0


def _cmd_symbols(args) -> int:
    lines = ["h,theta,k_hat,s_hat,d_hat,composite"]
    for h in _float_list(args.h):
        theta = symbols.resolved_grid(h, args.points)
        k_hat = symbols.stiffness_symbol(theta, h, args.sigma_surface)
        s_hat, d_hat = symbols.layer_symbols(theta, h, args.sigma_bulk)
        comp = symbols.composite_symbol(args.mode, theta, h, args.sigma_surface,
                                        args.sigma_bulk)
        for vals in zip(theta, k_hat, s_hat, d_hat, comp):
            lines.append(f"{h:.10g}," + ",".join(f"{v:.10e}" for v in vals))
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_lgf_selftest(args) -> int:
    ok = True
    window = 18
    for sigma in (0.0, 0.5, 4.0):
        table = lgf.build_table(window, sigma)
        full = table.values
        R = table.window
        interior = slice(1, 2 * R)
        lap = (full[2:, 1:-1] + full[:-2, 1:-1] + full[1:-1, 2:]
               + full[1:-1, :-2] - 4.0 * full[1:-1, 1:-1])
        delta = np.zeros_like(lap)
        delta[R - 1, R - 1] = 1.0
        resid = np.abs(-lap + sigma * full[1:-1, 1:-1] - delta).max()
        line = f"sigma={sigma:<4g} five-point residual {resid:.3e}"
        if resid > 1e-12:
            ok = False
            line += "  FAIL"
        print(line)
    anchors = (
        ("g(0,0;0)", lgf.lgf_eval(0, 0, 0.0), 0.0),
        ("g(1,0;0)", lgf.lgf_eval(1, 0, 0.0), -0.25),
        ("g(1,1;0)", lgf.lgf_eval(1, 1, 0.0), -1.0 / np.pi),
    )
    for name, got, want in anchors:
        err = abs(got - want)
        line = f"{name} = {got:+.15f} (expected {want:+.15f}, err {err:.2e})"
        if err > 1e-12:
            ok = False
            line += "  FAIL"
        print(line)
    print("lgf-selftest:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cutlgf",
                                     description="surface CutFEM benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", help="refinement study")
    conv.add_argument("--geometry", default="circle",
                      choices=("circle", "deformed-circle", "shifted-circle"))
    conv.add_argument("--mode", default="F-single",
                      choices=("E", "F-single", "F-double"))
    conv.add_argument("--N", default="128,256,512")
    conv.add_argument("--tol", type=float, default=1e-10)
    conv.add_argument("--sigma-bulk", type=float, default=0.0)
    conv.add_argument("--sigma-surface", type=float, default=0.0)
    conv.add_argument("--out", default="report.csv")
    conv.add_argument("--lgf-cache", default=None)
    conv.add_argument("--config", default=None)
    conv.set_defaults(func=_cmd_convergence)

    sweep = sub.add_parser("sweep", help="translation / screening sweep")
    sweep.add_argument("--beta", default="-1:0.1:1")
    sweep.add_argument("--sigma-bulk", default="0")
    sweep.add_argument("--sigma-surface", default="0")
    sweep.add_argument("--N", default="128")
    sweep.add_argument("--mode", default="F-single",
                       choices=("E", "F-single", "F-double"))
    sweep.add_argument("--out", default="sweep.csv")
    sweep.add_argument("--lgf-cache", default=None)
    sweep.add_argument("--config", default=None)
    sweep.set_defaults(func=_cmd_sweep)

    sym = sub.add_parser("symbols", help="flat-interface symbol tables")
    sym.add_argument("--h", default="0.0078125,0.00390625")
    sym.add_argument("--mode", default="F-single",
                     choices=("E", "F-single", "F-double"))
    sym.add_argument("--sigma-bulk", type=float, default=0.0)
    sym.add_argument("--sigma-surface", type=float, default=0.0)
    sym.add_argument("--points", type=int, default=256)
    sym.add_argument("--out", default="symbols.csv")
    sym.add_argument("--config", default=None)
    sym.set_defaults(func=_cmd_symbols)

    self_test = sub.add_parser("lgf-selftest", help="kernel sanity checks")
    self_test.set_defaults(func=_cmd_lgf_selftest)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # config entries become flags right after the subcommand; explicit
        # flags come later on the line, so argparse lets them win
        argv = [argv[0]] + _config_flags(args.config) + argv[1:]
        args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
