"""Command-line interface.

Every subcommand reads an optional JSON configuration (``--config``) whose
fields may be overridden by flags.  Exit status is 0 on success, 2 for
configuration or input errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import curves
from .designs import read_design, format_design
from .error import LinearAlgorithm, avg_error, format_error_reports
from .exceptions import (
    CapExceededError,
    ConfigError,
    DimensionMismatchError,
    DomainError,
    FoldedWienerError,
)
from .fieldsim import mc_avg_error
from .kernel import cov
from .spectrum import format_spectrum, spectrum_1d, tail_exponent_fit, tensor_spectrum

log = logging.getLogger("foldedwiener")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
DEFAULT_MC_RESOLUTION = {1: 1024, 2: 256, 3: 32}


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common(p):
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--d", type=int)
    p.add_argument("--r", type=_int_list, help="smoothness per axis, e.g. 0,0")
    p.add_argument("--c", type=float, help="cost of one function evaluation")
    p.add_argument("--design", choices=curves.DESIGN_FAMILIES)
    p.add_argument("--levels", type=_int_list)
    p.add_argument("--n-list", dest="n_list", type=_int_list)
    p.add_argument("--quad-nodes", dest="quad_nodes", type=int)
    p.add_argument("--sup-grid", dest="sup_grid", type=int)
    p.add_argument("--eig-m", dest="eig_m", type=int)
    p.add_argument("--mc-samples", dest="mc_samples", type=int)
    p.add_argument("--mc-resolution", dest="mc_resolution", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (default: stdout)")


_CONFIG_KEYS = (
    "d", "r", "c", "design", "levels", "n_list", "quad_nodes", "sup_grid",
    "eig_m", "mc_samples", "mc_resolution", "seed", "out",
)


def _config(args, require_sweep=False) -> curves.CurveConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {args.config}: {exc}") from exc
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if overrides["levels"] is not None:
        data.pop("n_list", None)
    if overrides["n_list"] is not None:
        data.pop("levels", None)
    if overrides["r"] is not None and overrides["d"] is None and "d" not in data:
        overrides["d"] = len(overrides["r"])
    cfg = curves.CurveConfig.from_dict(data, **overrides)
    if require_sweep:
        cfg.sweep()
    return cfg


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _designs(args, cfg):
    if getattr(args, "design_file", None):
        return [(None, read_design(args.design_file))]
    out = []
    for index, (kind, value) in enumerate(cfg.sweep()):
        level = value if kind == "level" else index
        out.append((level, curves.make_design(cfg.design, cfg.spec, kind, value, cfg.seed)))
    return out


def cmd_kernel_eval(args):
    cfg = _config(args)
    t = np.array(args.t, dtype=float)
    x = np.array(args.x, dtype=float)
    value = cov(t, x, cfg.spec)
    _emit(f"{value!r}\n", cfg.out)


def cmd_design_gen(args):
    cfg = _config(args, require_sweep=True)
    texts = [format_design(design) for _, design in _designs(args, cfg)]
    _emit("".join(texts), cfg.out)


def cmd_error_exact(args):
    cfg = _config(args, require_sweep=not args.design_file)
    reports = []
    for _, design in _designs(args, cfg):
        alg = LinearAlgorithm.spline(design, cfg.spec)
        reports.append(avg_error(alg, sup_grid=cfg.sup_grid))
    _emit(format_error_reports(reports), cfg.out)


def cmd_error_mc(args):
    cfg = _config(args, require_sweep=not args.design_file)
    res = cfg.mc_resolution or DEFAULT_MC_RESOLUTION.get(cfg.d, 16)
    lines = ["n,estimate,stderr,n_samples,resolution"]
    for _, design in _designs(args, cfg):
        alg = LinearAlgorithm.spline(design, cfg.spec)
        est, se = mc_avg_error(alg, cfg.spec, cfg.mc_samples, res, cfg.seed)
        lines.append(f"{design.n},{est!r},{se!r},{cfg.mc_samples},{res}")
    _emit("\n".join(lines) + "\n", cfg.out)


def _spectrum(cfg, count):
    if cfg.d == 1:
        return spectrum_1d(cfg.spec.r[0], cfg.eig_m)
    axes = {rj: spectrum_1d(rj, cfg.eig_m) for rj in set(cfg.spec.r)}
    return tensor_spectrum([axes[rj] for rj in cfg.spec.r], count)


def cmd_spectrum_compute(args):
    cfg = _config(args)
    _emit(format_spectrum(_spectrum(cfg, args.count)), cfg.out)


def cmd_tract_check(args):
    cfg = _config(args)
    spec = _spectrum(cfg, args.count)
    verdict = tail_exponent_fit(spec, args.n_range)
    _emit(json.dumps(verdict.as_dict(), indent=2, sort_keys=True) + "\n", cfg.out)


def cmd_curve_run(args):
    cfg = _config(args, require_sweep=True)
    curve = curves.run_curve(cfg)
    for line in curve.log:
        log.error("row aborted: %s", line)
    for line in curve.violations():
        log.warning("invariant violated: %s", line)
    _emit(curve.to_csv(), cfg.out)
    if not curve.rows and curve.log:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_rate_fit(args):
    try:
        text = Path(args.curve).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read curve {args.curve}: {exc}") from exc
    curve = curves.parse_curve_csv(text)
    fit = curves.fit_rate(curve, with_log_term=not args.no_log_term, column=args.column)
    _emit(json.dumps(fit.as_dict(), indent=2, sort_keys=True) + "\n", args.out)


def cmd_compare(args):
    cfg = _config(args)
    if args.designs:
        cfg.designs = args.designs.split(",")
    report = curves.compare_designs(cfg)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", cfg.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foldedwiener",
        description="Average-case approximation under the folded Wiener sheet measure.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    groups = parser.add_subparsers(dest="group", required=True)

    kernel = groups.add_parser("kernel").add_subparsers(dest="action", required=True)
    p = kernel.add_parser("eval", help="evaluate the covariance kernel R(t, x)")
    _common(p)
    p.add_argument("--t", type=_float_list, required=True)
    p.add_argument("--x", type=_float_list, required=True)
    p.set_defaults(func=cmd_kernel_eval)

    design = groups.add_parser("design").add_subparsers(dest="action", required=True)
    p = design.add_parser("gen", help="write designs in the text format")
    _common(p)
    p.set_defaults(func=cmd_design_gen, design_file=None)

    error = groups.add_parser("error").add_subparsers(dest="action", required=True)
    p = error.add_parser("exact", help="average error of the spline algorithm")
    _common(p)
    p.add_argument("--design-file", help="design in the text format")
    p.set_defaults(func=cmd_error_exact)
    p = error.add_parser("mc", help="Monte Carlo average error from simulated paths")
    _common(p)
    p.add_argument("--design-file", help="design in the text format")
    p.set_defaults(func=cmd_error_mc)

    spectrum = groups.add_parser("spectrum").add_subparsers(dest="action", required=True)
    p = spectrum.add_parser("compute", help="covariance eigenvalues and tails")
    _common(p)
    p.add_argument("--count", type=int, default=1024, help="eigenvalues for d >= 2")
    p.set_defaults(func=cmd_spectrum_compute)

    tract = groups.add_parser("tract").add_subparsers(dest="action", required=True)
    p = tract.add_parser("check", help="fit the eigenvalue tail exponent")
    _common(p)
    p.add_argument("--count", type=int, default=1024, help="eigenvalues for d >= 2")
    p.add_argument("--n-range", dest="n_range", type=_int_list, help="fit window lo,hi")
    p.set_defaults(func=cmd_tract_check)

    curve = groups.add_parser("curve").add_subparsers(dest="action", required=True)
    p = curve.add_parser("run", help="error curve over a design sweep")
    _common(p)
    p.set_defaults(func=cmd_curve_run)

    rate = groups.add_parser("rate").add_subparsers(dest="action", required=True)
    p = rate.add_parser("fit", help="fit the rate model to a curve CSV")
    p.add_argument("--curve", required=True, help="CSV written by 'curve run'")
    p.add_argument("--no-log-term", action="store_true")
    p.add_argument("--column", default="e_avg", choices=("e_avg", "e_all", "e_wor_bound"))
    p.add_argument("--config", type=Path, help="ignored; accepted for uniformity")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rate_fit)

    p = groups.add_parser("compare", help="compare design families")
    _common(p)
    p.add_argument("--designs", help="comma-separated design families")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        status = args.func(args)
    except (ConfigError, DomainError, DimensionMismatchError, CapExceededError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (FoldedWienerError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
