"""Command-line interface: reproducible scans, checks, and dumps."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .circular import cbe_points, sample_verblunsky, sine_beta_window
from .gaussian import sample_tridiagonal, semicircle_residual, verify_counts
from .rng import RngStream
from .stats import (
    ScanSpec,
    cue_variance_oracle,
    default_grid,
    resolve_workers,
    tail_check,
    variance_scan,
)

SCAN_HEADER = "ensemble,beta,n,interval,xi,m,mean,variance,var_ci_lo,var_ci_hi,ref_mean"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse_grid(text: str) -> tuple:
    """Grid syntax: 'lo:hi:count' (linear) or 'geom:lo:hi:count' (geometric)."""
    parts = text.split(":")
    try:
        if parts[0] == "geom":
            lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
            if len(parts) != 4:
                raise ValueError
            return tuple(float(v) for v in np.geomspace(lo, hi, count))
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) != 3:
            raise ValueError
        return tuple(float(v) for v in np.linspace(lo, hi, count))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad grid {text!r}; use lo:hi:count or geom:lo:hi:count") from exc


def _parse_float_list(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _emit_table(header: str, lines: list[str], args, extra_manifest=None) -> None:
    body = header + "\n" + "".join(line + "\n" for line in lines)
    if getattr(args, "fmt", "csv") == "json":
        keys = header.split(",")
        rows = [dict(zip(keys, line.split(","))) for line in lines]
        body = json.dumps(rows, indent=2) + "\n"
    if args.out:
        suffix = ".json" if getattr(args, "fmt", "csv") == "json" else ".csv"
        path = args.out + suffix
        with open(path, "w") as fh:
            fh.write(body)
        manifest = {
            "command": args.command,
            "argv": args.raw_argv,
            "params": {
                k: v
                for k, v in vars(args).items()
                if k not in ("raw_argv", "func") and not callable(v)
            },
            "master_seed": getattr(args, "seed", None),
            "version": __version__,
            "duration_s": time.time() - args.start_time,
            "output": path,
        }
        if extra_manifest:
            manifest.update(extra_manifest)
        with open(args.out + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        print(f"wrote {path}")
    else:
        sys.stdout.write(body)


def _scan_rows_to_lines(rows) -> list[str]:
    return [
        ",".join(
            [
                row.ensemble,
                _fmt(row.beta),
                str(row.n),
                row.interval,
                _fmt(row.xi),
                str(row.m),
                _fmt(row.mean),
                _fmt(row.variance),
                _fmt(row.var_ci_lo),
                _fmt(row.var_ci_hi),
                _fmt(row.ref_mean),
            ]
        )
        for row in rows
    ]


def _cmd_scan(args) -> int:
    ensemble = args.command.split("-")[1]
    if args.grid is not None:
        xis = _parse_grid(args.grid)
    elif ensemble == "sine":
        xis = default_grid(args.n, cap=args.n / 16.0)
    else:
        xis = default_grid(args.n)
    spec = ScanSpec(ensemble=ensemble, beta=args.beta, n=args.n, xis=xis, center=args.center)
    rows = variance_scan(spec, m=args.samples, seed=args.seed, workers=args.workers)
    _emit_table(SCAN_HEADER, _scan_rows_to_lines(rows), args, {"grid": list(xis)})
    return 0


def _cmd_verify_count(args) -> int:
    report = verify_counts(
        beta=args.beta, n=args.n, draws=args.samples, lams_per_draw=args.lams, seed=args.seed
    )
    print(f"{report.mismatches} mismatches")
    print(
        f"checked {report.evaluations} points over {report.draws} draws "
        f"(beta={args.beta}, n={args.n}); {report.flagged} flagged near-degenerate"
    )
    if report.mismatches > 0 or report.flagged_fraction >= 1e-3:
        return 1
    return 0


def _cmd_tail_check(args) -> int:
    result = tail_check(
        beta=args.beta,
        n=args.n,
        theta=args.theta,
        a=args.a,
        b_grid=_parse_float_list(args.b_grid),
        m=args.samples,
        seed=args.seed,
        workers=args.workers,
    )
    lines = [
        ",".join(
            [_fmt(r.b), str(r.hits), str(r.m), _fmt(r.empirical), _fmt(r.wilson_hi), _fmt(r.bound)]
        )
        for r in result.rows
    ]
    _emit_table(
        "b,hits,m,empirical,wilson_hi,bound",
        lines,
        args,
        {"second_moment": result.second_moment},
    )
    if not args.out:
        print(f"second moment of (psi - a): {result.second_moment:.6g} (bound 3500)")
    return 0


def _cmd_semicircle_residual(args) -> int:
    lines = []
    for n in (int(v) for v in _parse_float_list(args.n_grid)):
        root = math.sqrt(n)
        for factor in _parse_float_list(args.mu_factors):
            mu = factor * root
            lines.append(",".join([str(n), _fmt(mu), _fmt(semicircle_residual(mu, n))]))
    _emit_table("n,mu,residual", lines, args)
    return 0


def _cmd_oracle_cue(args) -> int:
    grid = _parse_grid(args.grid) if args.grid else tuple(np.linspace(0.0, 2.0 * math.pi, 13))
    # forgive rounded grid endpoints like 6.2832
    clamped = [min(max(L, 0.0), 2.0 * math.pi) for L in grid]
    lines = [",".join([_fmt(L), _fmt(cue_variance_oracle(args.n, L))]) for L in clamped]
    _emit_table("arc_length,variance", lines, args)
    return 0


def _cmd_sample(args) -> int:
    lines = []
    if args.ensemble == "cbe":
        for d in range(args.samples):
            draw = sample_verblunsky(args.beta, args.n, RngStream(args.seed, d))
            for p in cbe_points(draw).points:
                lines.append(f"{d},{_fmt(float(p))}")
        header = "draw,point"
    elif args.ensemble == "sine":
        for d in range(args.samples):
            config = sine_beta_window(args.beta, args.xmax, args.n, RngStream(args.seed, d))
            for p in config.points:
                lines.append(f"{d},{_fmt(float(p))}")
        header = "draw,point"
    else:
        from scipy.linalg import eigvalsh_tridiagonal

        for d in range(args.samples):
            model = sample_tridiagonal(args.beta, args.n, RngStream(args.seed, d))
            eigs = (
                eigvalsh_tridiagonal(model.diag, model.offdiag)
                if args.n > 1
                else np.asarray(model.diag)
            )
            for e in eigs:
                lines.append(f"{d},{_fmt(float(e))}")
        header = "draw,eigenvalue"
    _emit_table(header, lines, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betafluct",
        description="Point-counting statistics for circular and Gaussian beta ensembles.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--beta", type=float, default=2.0, help="ensemble parameter beta > 0")
    common.add_argument("--n", type=int, default=64, help="number of points")
    common.add_argument("--samples", type=int, default=1000, help="Monte Carlo replicas")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument(
        "--workers", type=int, default=1, help="worker processes; 0 = auto-detect"
    )
    common.add_argument("--grid", type=str, default=None, help="lo:hi:count or geom:lo:hi:count")
    common.add_argument("--out", type=str, default=None, help="output stem (.csv + .manifest.json)")
    common.add_argument(
        "--format", dest="fmt", choices=("csv", "json"), default="csv", help="table format"
    )

    for name, help_text in (
        ("scan-cbe", "variance scan of circular-ensemble arc counts"),
        ("scan-gbe", "variance scan of Gaussian-ensemble interval counts"),
        ("scan-sine", "variance scan of sine-process window counts"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument(
            "--center", type=float, default=0.0, help="interval center (scan-gbe only)"
        )
        p.set_defaults(func=_cmd_scan)

    p = sub.add_parser(
        "verify-count", parents=[common], help="phase-sweep vs Sturm count cross-check"
    )
    p.add_argument("--lams", type=int, default=50, help="spectral points per draw")
    p.set_defaults(func=_cmd_verify_count)

    p = sub.add_parser("tail-check", parents=[common], help="phase tail bound check")
    p.add_argument("--theta", type=float, default=None, help="angle step (default 1/n)")
    p.add_argument("--a", type=float, default=0.0, help="phase offset")
    p.add_argument("--b-grid", type=str, default="6,12,24,36", help="comma-separated thresholds")
    p.set_defaults(func=_cmd_tail_check)

    p = sub.add_parser(
        "semicircle-residual", parents=[common], help="carousel angle sum vs semicircle mass"
    )
    p.add_argument("--n-grid", type=str, default="100,1000,10000,100000")
    p.add_argument(
        "--mu-factors",
        type=str,
        default="0,0.5,1,1.5,1.9,2",
        help="mu values in units of sqrt(n)",
    )
    p.set_defaults(func=_cmd_semicircle_residual)

    p = sub.add_parser("oracle-cue", parents=[common], help="exact beta=2 arc-count variance")
    p.set_defaults(func=_cmd_oracle_cue)

    p = sub.add_parser("sample", parents=[common], help="dump raw points or eigenvalues")
    p.add_argument("--ensemble", choices=("cbe", "gbe", "sine"), default="cbe")
    p.add_argument("--xmax", type=float, default=20.0, help="window length (sine only)")
    p.set_defaults(func=_cmd_sample)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    args.raw_argv = argv
    args.start_time = time.time()
    try:
        args.workers = resolve_workers(getattr(args, "workers", 1))
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
