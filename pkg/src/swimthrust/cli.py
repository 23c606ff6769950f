"""Command-line interface: ``swimthrust {verify,thrust,sweep,analyze,plot}``.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 quadrature non-convergence under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import fields as F
from . import quadrature as Q
from . import sweep as S
from . import thrust as TH
from . import verification as V

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2, 3

# command-line flag -> SweepConfig field
_FLAG_FIELDS = {
    "h_min": "h_min",
    "h_max": "h_max",
    "n_points": "n_points",
    "grid": "grid",
    "tol": "abs_tol",
    "mass_ratio": "mass_ratio",
    "path": "path",
    "p0_sign": "p0_sign",
    "out": "out",
    "plot": "plot",
    "workers": "workers",
    "seed": "seed",
    "threshold": "plateau_threshold",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with settings (command-line flags take precedence)")
    p.add_argument("--tol", type=float, help="absolute quadrature tolerance (default 1e-6)")
    p.add_argument("--mass-ratio", type=float, help="body-to-fluid mass ratio (default 4*pi/3)")
    p.add_argument("--seed", type=int, help=f"random seed for sampled checks (default {V.DEFAULT_SEED})")
    p.add_argument("--strict", action="store_true", help="exit 3 when any quadrature fails to converge")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--inject-g1-fault", type=float, default=0.0, help=argparse.SUPPRESS)


def _path_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--path", choices=S.PATHS, help="thrust formulation (default reduced)")
    p.add_argument("--p0-sign", choices=tuple(F.P0_SIGNS),
                   help="dynamic pressure sign for the raw path (default flipped)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swimthrust",
                                     description="Mean thrust of a sphere with stretching and torsional oscillations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the field, quadrature and identity checks")
    _common(p)
    p.add_argument("--json", metavar="FILE", help="also write the report as JSON")
    p.add_argument("--equivalence-h", type=float, nargs="+", default=[1.0],
                   help="Stokes numbers for the raw vs reduced comparison")

    p = sub.add_parser("thrust", help="thrust at a single Stokes number")
    _common(p)
    _path_flags(p)
    p.add_argument("--h", type=float, required=True, help="Stokes number")

    p = sub.add_parser("sweep", help="thrust over a grid of Stokes numbers")
    _common(p)
    _path_flags(p)
    p.add_argument("--h-min", type=float)
    p.add_argument("--h-max", type=float)
    p.add_argument("--n-points", type=int)
    p.add_argument("--grid", type=float, nargs="+", help="explicit h values (overrides --h-min/--h-max/--n-points)")
    p.add_argument("--out", help="CSV output path (a .summary.txt file is written alongside)")
    p.add_argument("--plot", help="vector plot of G2(h) (SVG or PDF)")
    p.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    p.add_argument("--threshold", type=float, help="plateau threshold (default 0.02)")

    p = sub.add_parser("analyze", help="zero crossing and plateau of a sweep CSV")
    p.add_argument("csv")
    p.add_argument("--threshold", type=float, default=0.02)
    p.add_argument("--refine", action="store_true", help="bisect the bracket with live thrust evaluations")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--nu", type=float, help="kinematic viscosity for omega_opt")
    p.add_argument("--a", type=float, help="sphere radius for omega_opt")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("plot", help="plot G2(h) from a sweep CSV")
    p.add_argument("csv")
    p.add_argument("--plot", required=True, help="output file (SVG or PDF)")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise S.ConfigError("config", f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise S.ConfigError("config", "top level must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def sweep_config(args: argparse.Namespace) -> S.SweepConfig:
    """Merge defaults, the JSON config file and explicit flags (flags win)."""
    settings = {}
    for key, value in _load_config(getattr(args, "config", None)).items():
        settings[_FLAG_FIELDS.get(key, key)] = value
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[name] = value
    if "grid" in settings and settings["grid"] is not None:
        settings["grid"] = tuple(settings["grid"])
    for name in ("h", "strict", "verbose", "equivalence_h", "inject_g1_fault"):
        settings.pop(name, None)
    return S.SweepConfig.from_mapping(settings)


def _cmd_verify(args) -> int:
    cfg = sweep_config(args)
    report = V.run_all(seed=cfg.seed, abs_tol=cfg.abs_tol, mass_ratio=cfg.mass_ratio,
                       g1_fault=args.inject_g1_fault, equivalence_h=tuple(args.equivalence_h),
                       progress=(lambda m: print(f"... {m}", file=sys.stderr)) if args.verbose else None)
    print(report.to_table())
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json())
    return EXIT_OK if report.passed else EXIT_VERIFY


def _format_result(res: TH.ThrustResult) -> str:
    vec = lambda v: "(" + ", ".join(f"{c: .10g}" for c in v) + ")"
    lines = [f"path      {res.path}", f"h         {res.h:g}", f"G         {vec(res.G)}",
             f"R         {vec(res.R)}", f"gamma1    {vec(res.gamma1)}",
             f"error     {res.error_estimate:.3e}", f"evals     {res.n_evals}",
             f"converged {res.converged}"]
    for key, value in res.breakdown.items():
        lines.append(f"  {key:<8}{vec(np.atleast_1d(value))}")
    return "\n".join(lines)


def _cmd_thrust(args) -> int:
    cfg = sweep_config(args)
    if not (np.isfinite(args.h) and args.h >= 0):
        raise S.ConfigError("h", f"must be >= 0, got {args.h}")
    paths = ("reduced", "raw") if cfg.path == "both" else (cfg.path,)
    if "raw" in paths and args.h <= 0:
        raise S.ConfigError("h", "the raw path needs h > 0")
    params = F.ModelParams(args.h, cfg.mass_ratio, args.inject_g1_fault)
    rule = cfg.volume_rule()
    converged = True
    for path in paths:
        if path == "raw":
            res = TH.thrust_raw(params, rule, p0_sign=cfg.p0_sign)
        else:
            res = TH.thrust_reduced(params, rule)
        print(_format_result(res))
        converged &= res.converged
    return EXIT_NONCONVERGED if args.strict and not converged else EXIT_OK


def _raw_out(path: str | None) -> str | None:
    if not path:
        return None
    stem, ext = os.path.splitext(path)
    return f"{stem}.raw{ext or '.csv'}"


def _cmd_sweep(args) -> int:
    cfg = sweep_config(args)
    if args.inject_g1_fault:
        raise S.ConfigError("inject_g1_fault", "fault injection is only supported by verify")
    progress = None
    if args.verbose:
        progress = lambda row: print(f"... h = {row.h:g}  G2 = {row.G[1]:.8g}", file=sys.stderr)
    table = S.run_sweep(cfg, "raw" if cfg.path == "raw" else "reduced", progress)
    analysis = S.analyze(table, cfg.plateau_threshold)
    written = S.emit_outputs(table, analysis, cfg)
    if not cfg.out:
        sys.stdout.write(table.to_csv())
    print(written["summary_text"])
    converged = all(r.converged for r in table.rows)
    if cfg.path == "both":
        raw = S.run_sweep(cfg, "raw", progress)
        raw_analysis = S.analyze(raw, cfg.plateau_threshold)
        if cfg.out:
            S.write_csv(raw, _raw_out(cfg.out))
        else:
            sys.stdout.write(raw.to_csv())
        print("raw path: " + raw_analysis.summary().replace("\n", "\nraw path: "))
        converged &= all(r.converged for r in raw.rows)
    return EXIT_NONCONVERGED if args.strict and not converged else EXIT_OK


def _read_table(path: str) -> S.SweepTable:
    try:
        return S.read_csv(path)
    except (OSError, ValueError, IndexError) as exc:
        raise S.ConfigError("csv", f"cannot read sweep table {path}: {exc}") from exc


def _cmd_analyze(args) -> int:
    if not 0 < args.threshold < 1:
        raise S.ConfigError("threshold", f"must lie in (0, 1), got {args.threshold}")
    table = _read_table(args.csv)
    evaluate = S.live_G2(args.tol) if args.refine else None
    analysis = S.analyze(table, args.threshold, evaluate)
    print(analysis.summary(args.nu, args.a))
    return EXIT_OK


def _cmd_plot(args) -> int:
    table = _read_table(args.csv)
    S.plot_table(table, args.plot, S.analyze(table))
    print(f"wrote {args.plot}")
    return EXIT_OK


COMMANDS = {"verify": _cmd_verify, "thrust": _cmd_thrust, "sweep": _cmd_sweep,
            "analyze": _cmd_analyze, "plot": _cmd_plot}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (S.ConfigError, F.DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Q.QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED if getattr(args, "strict", False) else EXIT_VERIFY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
