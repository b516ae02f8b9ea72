"""Error curves over design sequences, rate fits and cost estimates.

An error curve tabulates, for a family of designs of growing size ``n``, the
spline average error, the optimal error with arbitrary linear information,
and the grid estimate of the worst-case error.  Rate fits use the model

    log e = intercept - slope * log n + log_power * log log n,

whose asymptotic values for hyperbolic-cross designs are
``slope = r_min + 1/2`` and ``log_power = (k* - 1)(r_min + 1)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .designs import Design, grid, hyperbolic_cross, map_design, random_design
from .error import LinearAlgorithm, QuadratureRule, all_info_error, avg_error
from .exceptions import (
    ConfigError,
    DomainError,
    EpsilonUnreachableError,
    FoldedWienerError,
    InsufficientSpanError,
)
from .kernel import ProblemSpec
from .spectrum import Spectrum, spectrum_1d, tensor_spectrum

__all__ = [
    "CurveConfig",
    "CurveRow",
    "ErrorCurve",
    "RateFit",
    "CURVE_CSV_HEADER",
    "DESIGN_FAMILIES",
    "load_config",
    "make_design",
    "all_info_spectrum",
    "run_curve",
    "fit_rate",
    "complexity_estimate",
    "compare_designs",
    "parse_curve_csv",
]

log = logging.getLogger(__name__)

DESIGN_FAMILIES = ("grid", "hyperbolic_cross", "mapped_hyperbolic_cross", "random")
CURVE_CSV_HEADER = ("n", "e_avg", "e_all", "e_wor_bound", "provenance", "level")
ROW_TOL = 1e-8


@dataclass
class CurveConfig:
    """Experiment configuration, usually read from a JSON file.

    ``levels`` index the design family (grid: ``2^L`` points per axis,
    hyperbolic crosses: level ``L``, random: ``2^L`` points); ``n_list``
    gives target sizes instead (grid: ``round(n^(1/d))`` points per axis).
    ``quad_nodes`` overrides the Gauss-Legendre nodes per panel of the
    design-aligned quadrature rule.
    """

    d: int
    r: list
    c: float = 100.0
    design: str = "mapped_hyperbolic_cross"
    levels: list | None = None
    n_list: list | None = None
    quad_nodes: int | None = None
    sup_grid: int | None = None
    eig_m: int = 2048
    mc_samples: int = 4000
    mc_resolution: int | None = None
    seed: int = 0
    out: str | None = None
    designs: list | None = None
    ratio_factor: float = 2.0

    def __post_init__(self):
        try:
            self.spec = ProblemSpec(self.d, tuple(self.r), float(self.c))
        except (FoldedWienerError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid problem spec: {exc}") from exc
        if self.design not in DESIGN_FAMILIES:
            raise ConfigError(f"design must be one of {DESIGN_FAMILIES}, got {self.design!r}")
        if self.levels is not None and self.n_list is not None:
            raise ConfigError("give either levels or n_list, not both")
        for name in ("levels", "n_list"):
            vals = getattr(self, name)
            if vals is not None and (
                not isinstance(vals, list) or not all(isinstance(v, int) and v >= 0 for v in vals)
            ):
                raise ConfigError(f"{name} must be a list of nonnegative integers")
        for name in ("quad_nodes", "sup_grid", "eig_m", "mc_samples", "mc_resolution"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 1):
                raise ConfigError(f"{name} must be a positive integer")

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "CurveConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        missing = {"d", "r"} - set(data)
        if missing:
            raise ConfigError(f"missing configuration keys: {sorted(missing)}")
        if isinstance(data["r"], int):
            data["r"] = [data["r"]] * int(data["d"])
        return cls(**data)

    def family(self, entry) -> "CurveConfig":
        """Copy of this config for one entry of ``designs``."""
        base = {f.name: getattr(self, f.name) for f in fields(self)}
        base["designs"] = None
        if isinstance(entry, str):
            entry = {"design": entry}
        if not isinstance(entry, dict):
            raise ConfigError("designs entries must be names or objects")
        return CurveConfig.from_dict({**base, **entry})

    def sweep(self) -> list[tuple[str, int]]:
        if self.levels is not None:
            return [("level", v) for v in self.levels]
        if self.n_list is not None:
            return [("n", v) for v in self.n_list]
        raise ConfigError("configuration needs levels or n_list")


def load_config(path, **overrides) -> CurveConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return CurveConfig.from_dict(data, **overrides)


def make_design(family: str, spec: ProblemSpec, kind: str, value: int, seed: int = 0) -> Design:
    """Design of ``family`` for a sweep entry ``(kind, value)``."""
    if family == "grid":
        m = 2**value if kind == "level" else max(1, round(value ** (1.0 / spec.d)))
        return grid([m] * spec.d)
    if family in ("hyperbolic_cross", "mapped_hyperbolic_cross"):
        if kind != "level":
            raise ConfigError(f"{family} designs are indexed by levels")
        hc = hyperbolic_cross(value, spec)
        return map_design(hc) if family == "mapped_hyperbolic_cross" else hc
    if family == "random":
        n = 2**value if kind == "level" else value
        return random_design(n, spec, seed)
    raise ConfigError(f"unknown design family {family!r}")


def all_info_spectrum(spec: ProblemSpec, count: int, eig_m: int = 2048) -> Spectrum:
    """Covariance spectrum able to report tails up to ``count`` terms."""
    axes = {}
    for rj in sorted(set(spec.r)):
        axes[rj] = spectrum_1d(rj, eig_m)
    if spec.d == 1:
        return axes[spec.r[0]]
    return tensor_spectrum([axes[rj] for rj in spec.r], max(int(count), 1) + 1)


@dataclass(frozen=True)
class CurveRow:
    n: int
    e_avg: float
    e_all: float
    e_wor_bound: float
    provenance: str
    level: int

    def csv_fields(self) -> list[str]:
        return [
            str(self.n),
            repr(float(self.e_avg)),
            repr(float(self.e_all)),
            repr(float(self.e_wor_bound)),
            self.provenance,
            str(self.level),
        ]


@dataclass
class ErrorCurve:
    """Rows sorted by ``n``; failed rows are recorded in ``log`` instead."""

    rows: list[CurveRow]
    log: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda row: (row.n, row.level))

    @property
    def n(self) -> np.ndarray:
        return np.array([row.n for row in self.rows], dtype=float)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CURVE_CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    def violations(self, tol: float = ROW_TOL) -> list[str]:
        """Rows breaking ``e_all <= e_avg <= e_wor_bound`` beyond ``tol``."""
        bad = []
        for row in self.rows:
            if row.e_all > row.e_avg + tol:
                bad.append(f"n={row.n}: e_all {row.e_all:.6g} > e_avg {row.e_avg:.6g}")
            if row.e_avg > row.e_wor_bound + tol:
                bad.append(f"n={row.n}: e_avg {row.e_avg:.6g} > e_wor_bound {row.e_wor_bound:.6g}")
        return bad


def parse_curve_csv(text: str) -> ErrorCurve:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CURVE_CSV_HEADER:
        raise ConfigError(f"curve CSV header must be {','.join(CURVE_CSV_HEADER)}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        try:
            rows.append(
                CurveRow(int(rec[0]), float(rec[1]), float(rec[2]), float(rec[3]), rec[4], int(rec[5]))
            )
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"malformed curve row {rec!r}") from exc
    return ErrorCurve(rows)


def _aligned_rule(design, spec, nodes):
    return QuadratureRule.aligned(design.points, [nodes] * spec.d)


def run_curve(config: CurveConfig, spectrum: Spectrum | None = None) -> ErrorCurve:
    """Evaluate the spline algorithm on every design of the configured sweep."""
    spec = config.spec
    designs = []
    log_lines = []
    for index, (kind, value) in enumerate(config.sweep()):
        level = value if kind == "level" else index
        try:
            designs.append((level, make_design(config.design, spec, kind, value, config.seed)))
        except FoldedWienerError as exc:
            log_lines.append(f"level={level} design={config.design}: {type(exc).__name__}: {exc}")
    if spectrum is None and designs:
        spectrum = all_info_spectrum(spec, max(d.n for _, d in designs), config.eig_m)
    rows = []
    for level, design in designs:
        try:
            alg = LinearAlgorithm.spline(design, spec)
            quad = _aligned_rule(design, spec, config.quad_nodes) if config.quad_nodes else None
            report = avg_error(alg, quad, sup_grid=config.sup_grid)
            e_all = all_info_error(spectrum, design.n)
        except FoldedWienerError as exc:
            log_lines.append(f"level={level} n={design.n}: {type(exc).__name__}: {exc}")
            continue
        log.info("level=%s n=%d e_avg=%.6g (%s)", level, design.n, report.e_avg, report.method)
        rows.append(
            CurveRow(design.n, report.e_avg, e_all, report.e_wor_bound, design.provenance.value, level)
        )
    return ErrorCurve(rows, log_lines)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of ``log e = intercept - slope log n + log_power log log n``."""

    slope: float
    log_power: float
    intercept: float
    residual: float
    with_log_term: bool = True

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        out = self.intercept - self.slope * np.log(n)
        if self.with_log_term:
            out = out + self.log_power * np.log(np.log(n))
        return np.exp(out)

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "log_power": self.log_power,
            "intercept": self.intercept,
            "residual": self.residual,
        }


def _curve_arrays(curve, column):
    if isinstance(curve, ErrorCurve):
        return curve.n, curve.column(column)
    n, e = curve
    return np.asarray(n, dtype=float), np.asarray(e, dtype=float)


def fit_rate(curve, with_log_term: bool = True, column: str = "e_avg") -> RateFit:
    """Fit the rate model to a curve (or to a pair of arrays ``(n, e)``).

    Rows are deduplicated by ``n`` (first occurrence wins) before fitting.

    Raises
    ------
    InsufficientSpanError
        Fewer than 6 distinct ``n`` or less than 1.5 decades between them.
    """
    n, e = _curve_arrays(curve, column)
    order = np.argsort(n, kind="stable")
    n, e = n[order], e[order]
    n, first = np.unique(n, return_index=True)
    e = e[first]
    if n.size < 6 or math.log10(n[-1] / n[0]) < 1.5 - 1e-12:
        raise InsufficientSpanError(
            f"need at least 6 distinct n spanning 1.5 decades, got {n.size} rows over "
            f"[{n[0] if n.size else 0:g}, {n[-1] if n.size else 0:g}]"
        )
    if np.any(e <= 0) or (with_log_term and np.any(n < 2)):
        raise DomainError("rate fits need positive errors and, with the log term, n >= 2")
    cols = [np.ones_like(n), -np.log(n)]
    if with_log_term:
        cols.append(np.log(np.log(n)))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, np.log(e), rcond=None)
    resid = np.log(e) - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    q = float(coef[2]) if with_log_term else 0.0
    return RateFit(float(coef[1]), q, float(coef[0]), rms, with_log_term)


def _loglog_interp(x_new, x, y):
    return np.exp(np.interp(np.log(x_new), np.log(x), np.log(y)))


def complexity_estimate(curve: ErrorCurve, epsilon: float, spec: ProblemSpec) -> tuple[int, float]:
    """Sample size reaching average error ``epsilon`` and its cost ``(c + 2) n``.

    ``n`` is found by log-log interpolation between the first tabulated row
    with ``e_avg <= epsilon`` and its predecessor, rounded up.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    n, e = curve.n, curve.column("e_avg")
    hits = np.nonzero(e <= epsilon)[0]
    if hits.size == 0:
        raise EpsilonUnreachableError(
            f"epsilon {epsilon:g} is below the smallest tabulated error {e.min():g}"
        )
    i = int(hits[0])
    if i == 0 or e[i] == epsilon:
        n_eps = int(n[i])
    else:
        t = (math.log(epsilon) - math.log(e[i - 1])) / (math.log(e[i]) - math.log(e[i - 1]))
        log_n = math.log(n[i - 1]) + t * (math.log(n[i]) - math.log(n[i - 1]))
        n_eps = min(int(n[i]), math.ceil(math.exp(log_n) - 1e-9))
    return n_eps, (spec.c + 2.0) * n_eps


def ratio_table(reference: ErrorCurve, other: ErrorCurve) -> list[tuple[int, float]]:
    """``e_reference(n) / e_other(n)`` at the ``n`` of ``other`` inside the reference range."""
    rn, re_ = reference.n, reference.column("e_avg")
    out = []
    for row in other.rows:
        if rn[0] <= row.n <= rn[-1]:
            out.append((row.n, float(_loglog_interp(row.n, rn, re_) / row.e_avg)))
    return out


def compare_designs(config: CurveConfig, curves: dict | None = None) -> dict:
    """Rate fits per design family and the error ratio of the first family to the others.

    ``config.designs`` lists two or more families (names, or objects with
    per-family overrides such as ``levels``).  ``ratio_grows`` flags ratios
    that increase monotonically and end above ``config.ratio_factor``.
    """
    entries = config.designs or []
    if len(entries) < 2:
        raise ConfigError("compare needs at least two design families")
    families = [config.family(entry) for entry in entries]
    names = []
    for fam in families:
        name = fam.design
        while name in names:
            name += "'"
        names.append(name)
    if curves is None:
        curves = {name: run_curve(fam) for name, fam in zip(names, families)}
    report = {"families": {}, "ratios": {}, "log": []}
    for name in names:
        curve = curves[name]
        entry = {"rows": len(curve.rows)}
        for key, with_log in (("fit", False), ("fit_log", True)):
            try:
                entry[key] = fit_rate(curve, with_log_term=with_log).as_dict()
            except FoldedWienerError as exc:
                entry[key] = None
                report["log"].append(f"{name}: {type(exc).__name__}: {exc}")
        report["families"][name] = entry
        report["log"].extend(f"{name}: {line}" for line in curve.log)
    ref = names[0]
    for name in names[1:]:
        table = ratio_table(curves[ref], curves[name])
        ratios = [r for _, r in table]
        grows = (
            len(ratios) >= 2
            and all(b > a for a, b in zip(ratios, ratios[1:]))
            and ratios[-1] > config.ratio_factor
        )
        report["ratios"][f"{ref}/{name}"] = {
            "table": [{"n": n, "ratio": r} for n, r in table],
            "ratio_grows": bool(grows),
        }
    return report
