"""Average-case and worst-case errors of linear sampling algorithms.

A linear algorithm ``U(f)(x) = sum_j f(x_j) g_j(x)`` has squared average L2
error ``int_D ||h(., x)||_H^2 dx`` with residual section
``h(., x) = R(., x) - sum_j g_j(x) R(., x_j)``.  By the reproducing property

    ||h(., x)||_H^2 = R(x, x) - 2 g(x)^T r(x) + g(x)^T K g(x),

where ``r_j(x) = R(x_j, x)`` and ``K`` is the Gram matrix.  The spline
coefficients ``g(x) = K^{-1} r(x)`` minimize this for every ``x`` and give
the posterior (kriging) variance ``R(x, x) - r(x)^T K^{-1} r(x)``.

For ``r >= 1`` the posterior variance is tiny compared to ``R(x, x)`` and the
subtraction above loses all accuracy once ``K`` is badly conditioned.  The
spline variance is therefore also available as a least-squares residual:
``R(x, y) = int phi_x phi_y`` with white-noise representers
``phi_x(t) = prod_j (x_j - t_j)_+^{r_j} / r_j!``, so the variance equals the
squared L2 distance from ``phi_x`` to ``span{phi_{x_j}}``, which a QR
factorization computes without squaring the condition number.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la

from .designs import Design
from .exceptions import (
    CapExceededError,
    DimensionMismatchError,
    DomainError,
    InsufficientSpectrumError,
    NonConvergenceError,
)
from .kernel import (
    GramFactorization,
    ProblemSpec,
    _as_points,
    _check_unit,
    _factor1d_unchecked,
    _gauss01,
    cross_cov,
    cross_moment,
    gram,
    kernel_trace,
    representer1d,
)

__all__ = [
    "QuadratureRule",
    "LinearAlgorithm",
    "ErrorReport",
    "ERROR_CSV_HEADER",
    "DEFAULT_GL_NODES",
    "DEFAULT_SUP_GRID",
    "default_quadrature",
    "pointwise_variance",
    "avg_error",
    "closed_form_avg_error",
    "worst_error_bound",
    "all_info_error",
    "predict",
    "format_error_reports",
]

DEFAULT_GL_NODES = {1: 64, 2: 32, 3: 16}
# odd resolutions keep cell centers off dyadic design points
DEFAULT_SUP_GRID = {1: 511, 2: 127, 3: 31}
CONVERGENCE_TOL = 1e-4
# composite rules larger than this fall back to the closed-form trace identity
COMPOSITE_NODE_CAP = 200_000
QUAD_WORK_CAP = 5e10
EVALUATION_CAP = 2**24
# floating point work allowed for the least-squares variance route
SQRT_ROUTE_BUDGET = 4e10
_CHUNK_ENTRIES = 4_000_000


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Tensor product of per-axis composite Gauss-Legendre rules on ``[0, 1]``.

    Each axis is split into panels at ``breakpoints[j]`` and carries
    ``nodes_per_panel[j]`` Gauss-Legendre nodes on every panel.  With a single
    panel per axis this is the plain tensor Gauss-Legendre rule.
    """

    breakpoints: tuple[np.ndarray, ...]
    nodes_per_panel: tuple[int, ...]
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        axes = [_composite_axis(b, p) for b, p in zip(self.breakpoints, self.nodes_per_panel)]
        size = math.prod(len(a[0]) for a in axes)
        if size > EVALUATION_CAP:
            raise CapExceededError(f"quadrature rule would have {size} nodes")
        mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        wmesh = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        object.__setattr__(self, "nodes", np.stack([m.ravel() for m in mesh], axis=1))
        object.__setattr__(self, "weights", np.prod([w.ravel() for w in wmesh], axis=0))

    @classmethod
    def gauss_legendre(cls, d: int, nodes_per_axis: int) -> "QuadratureRule":
        return cls(tuple(np.array([0.0, 1.0]) for _ in range(d)), (int(nodes_per_axis),) * d)

    @classmethod
    def aligned(cls, points, nodes_per_panel) -> "QuadratureRule":
        """Panels split at every distinct coordinate of ``points`` on each axis."""
        pts = np.asarray(points, dtype=float)
        breaks = tuple(
            np.unique(np.concatenate([[0.0, 1.0], pts[:, j]])) for j in range(pts.shape[1])
        )
        return cls(breaks, tuple(int(p) for p in nodes_per_panel))

    @property
    def d(self) -> int:
        return len(self.breakpoints)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def refined(self) -> "QuadratureRule":
        """Same panels with twice the nodes per panel."""
        return QuadratureRule(self.breakpoints, tuple(2 * p for p in self.nodes_per_panel))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _composite_axis(breaks, p):
    b = np.unique(np.asarray(breaks, dtype=float))
    q, w = _gauss01(p)
    width = np.diff(b)
    keep = width > 0
    nodes = (b[:-1][keep, None] + width[keep, None] * q[None, :]).ravel()
    weights = (width[keep, None] * w[None, :]).ravel()
    return nodes, weights


def _aligned_size(design: Design, spec: ProblemSpec, factor=1):
    sizes = [
        (len(np.unique(design.points[:, j])) + 1) * (2 * rj + 2) * factor
        for j, rj in enumerate(spec.r)
    ]
    return math.prod(sizes)


def default_quadrature(spec: ProblemSpec, design: Design | None = None) -> QuadratureRule | None:
    """Quadrature rule used when none is given.

    For a nonempty design, panels are aligned with the design coordinates and
    carry ``2 r_j + 2`` nodes; the spline variance is then a polynomial on
    every cell and the rule is exact.  Returns ``None`` if that rule (and its
    refinement) would exceed ``COMPOSITE_NODE_CAP`` nodes, or, for ``r = 0``
    where the closed form is accurate, when it would cost more than
    ``QUAD_WORK_CAP`` flops.  Without a design
    the plain tensor Gauss-Legendre rule with ``DEFAULT_GL_NODES`` is used.
    """
    if design is None or design.n == 0:
        return QuadratureRule.gauss_legendre(spec.d, DEFAULT_GL_NODES.get(spec.d, 8))
    size = _aligned_size(design, spec, factor=2)
    if size > COMPOSITE_NODE_CAP:
        return None
    if max(spec.r) == 0 and size * design.n**2 > QUAD_WORK_CAP:
        return None
    return QuadratureRule.aligned(design.points, [2 * rj + 2 for rj in spec.r])


@dataclass(frozen=True, eq=False)
class LinearAlgorithm:
    """Nonadaptive linear algorithm ``U(f)(x) = sum_j f(x_j) g_j(x)``.

    Use :meth:`spline` for the optimal coefficients ``K^{-1} r(x)`` or
    :meth:`explicit` with a coefficient provider mapping an ``(m, d)`` array
    of points to an ``(m, n)`` array of coefficients.
    """

    design: Design
    spec: ProblemSpec
    gram: GramFactorization | None
    mode: str = "spline_optimal"
    coefficient_fn: Callable | None = None

    @classmethod
    def spline(cls, design: Design, spec: ProblemSpec) -> "LinearAlgorithm":
        _check_design(design, spec)
        g = gram(design, spec) if design.n else None
        return cls(design, spec, g, "spline_optimal")

    @classmethod
    def explicit(cls, design: Design, spec: ProblemSpec, coefficient_fn) -> "LinearAlgorithm":
        _check_design(design, spec)
        g = gram(design, spec) if design.n else None
        return cls(design, spec, g, "explicit", coefficient_fn)

    @property
    def n(self) -> int:
        return self.design.n

    def cross(self, X) -> np.ndarray:
        """``r(x)`` for each row of ``X``: matrix of shape ``(m, n)``."""
        return cross_cov(X, self.design.points, self.spec)

    def coefficients(self, X) -> np.ndarray:
        X = _as_points(X, self.spec.d)
        if self.n == 0:
            return np.zeros((X.shape[0], 0))
        if self.mode == "spline_optimal":
            return self.gram.solve(self.cross(X).T).T
        g = np.asarray(self.coefficient_fn(X), dtype=float)
        if g.shape != (X.shape[0], self.n):
            raise DimensionMismatchError(
                f"coefficient provider returned shape {g.shape}, expected {(X.shape[0], self.n)}"
            )
        return g


def _check_design(design, spec):
    if design.n and design.d != spec.d:
        raise DimensionMismatchError(f"design has d={design.d}, spec has d={spec.d}")


def _diag_cov(X, spec):
    out = np.ones(X.shape[0])
    for j, rj in enumerate(spec.r):
        out *= _factor1d_unchecked(X[:, j], X[:, j], rj)
    return out


def _chunks(m, n):
    step = max(1, _CHUNK_ENTRIES // max(n, 1))
    return [slice(i, min(i + step, m)) for i in range(0, m, step)]


def _lsq_rows(design_pts, X, spec, chunk):
    rows = 1
    for j, rj in enumerate(spec.r):
        u = len(np.unique(design_pts[:, j]))
        rows *= (u + min(chunk, X.shape[0]) + 1) * (rj + 1)
    return rows


def _lsq_plan(alg, X):
    """Chunk size for the least-squares route, or ``None`` if it is too costly."""
    n, m = alg.n, X.shape[0]
    for chunk in (512, 256, 128, 64, 32, 16, 8, 4, 2, 1):
        rows = _lsq_rows(alg.design.points, X, alg.spec, chunk)
        if rows < n:
            return None
        work = math.ceil(m / chunk) * rows * (n * n + n * min(chunk, m))
        if rows * (n + chunk) <= 4e7 and work <= SQRT_ROUTE_BUDGET:
            return chunk
    return None


def _representer_matrix(points, tnodes, tweights, spec):
    """Rows indexed by the tensor t-grid, columns by ``points``."""
    mat = None
    for j, rj in enumerate(spec.r):
        a = np.sqrt(tweights[j])[:, None] * representer1d(points[None, :, j], tnodes[j][:, None], rj)
        mat = a if mat is None else (mat[:, None, :] * a[None, :, :]).reshape(-1, points.shape[0])
    return mat


def _lsq_variance(alg, X, chunk):
    pts = alg.design.points
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], chunk):
        block = X[start : start + chunk]
        tnodes, tweights = [], []
        for j, rj in enumerate(alg.spec.r):
            breaks = np.concatenate([[0.0, 1.0], pts[:, j], block[:, j]])
            t, w = _composite_axis(breaks, rj + 1)
            tnodes.append(t)
            tweights.append(w)
        Phi = _representer_matrix(pts, tnodes, tweights, alg.spec)
        Psi = _representer_matrix(block, tnodes, tweights, alg.spec)
        Q, _ = la.qr(Phi, mode="economic", check_finite=False)
        res = Psi - Q @ (Q.T @ Psi)
        out[start : start + chunk] = np.einsum("ij,ij->j", res, res)
    return out


def pointwise_variance(x, alg: LinearAlgorithm, method: str = "auto"):
    """Squared RKHS norm of the residual section at each point.

    Parameters
    ----------
    x : array_like
        One point of shape ``(d,)`` or points of shape ``(m, d)``.
    method : {"auto", "normal", "lsq"}
        ``"normal"`` evaluates the reproducing-property expansion directly.
        ``"lsq"`` (spline mode only) uses the least-squares residual of the
        white-noise representers.  ``"auto"`` picks ``"lsq"`` for spline
        algorithms with some ``r_j >= 1`` when it is affordable.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 0 or (X.ndim == 1 and alg.spec.d > 1)
    X = _check_unit(X.reshape(-1, alg.spec.d), "x")
    if alg.n == 0:
        out = _diag_cov(X, alg.spec)
        return float(out[0]) if single else out
    if method not in ("auto", "normal", "lsq"):
        raise ValueError(f"unknown method {method!r}")
    spline = alg.mode == "spline_optimal"
    if method == "lsq" and not spline:
        raise ValueError("the least-squares route needs spline coefficients")
    plan = None
    if spline and method != "normal" and (method == "lsq" or max(alg.spec.r) >= 1):
        plan = _lsq_plan(alg, X)
        if plan is None and method == "lsq":
            raise CapExceededError("least-squares variance route is too large for this design")
    if plan is not None:
        out = _lsq_variance(alg, X, plan)
    else:
        out = np.empty(X.shape[0])
        for sl in _chunks(X.shape[0], alg.n):
            Xc = X[sl]
            rx = alg.cross(Xc)
            if spline:
                v = alg.gram.half_solve(rx.T)
                out[sl] = _diag_cov(Xc, alg.spec) - np.einsum("ij,ij->j", v, v)
            else:
                g = alg.coefficients(Xc)
                Kg = g @ alg.gram.matrix
                out[sl] = (
                    _diag_cov(Xc, alg.spec)
                    - 2.0 * np.einsum("ij,ij->i", g, rx)
                    + np.einsum("ij,ij->i", g, Kg)
                )
    return float(out[0]) if single else out


@dataclass(frozen=True)
class ErrorReport:
    """Average error, worst-case lower estimate and quadrature residual."""

    n: int
    e_avg: float
    e_wor_bound: float
    quad_residual: float
    method: str = "quadrature"

    def row(self) -> list:
        return [self.n, self.e_avg, self.e_wor_bound, self.quad_residual]


ERROR_CSV_HEADER = ("n", "e_avg", "e_wor_bound", "quad_residual")


def format_error_reports(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ERROR_CSV_HEADER)
    for rep in reports:
        writer.writerow([rep.n, repr(rep.e_avg), repr(rep.e_wor_bound), repr(rep.quad_residual)])
    return buf.getvalue()


def _quad_error(alg, quad):
    if quad.d != alg.spec.d:
        raise DimensionMismatchError(f"quadrature has d={quad.d}, spec has d={alg.spec.d}")
    var = pointwise_variance(quad.nodes, alg)
    return math.sqrt(max(quad.integrate(var), 0.0))


def closed_form_avg_error(alg: LinearAlgorithm) -> float:
    """Spline average error from ``trace(R) - trace(K^{-1} M)``.

    ``M_ij`` is the L2 inner product of the sections ``R(., x_i)`` and
    ``R(., x_j)``, a product of exact one-dimensional integrals.  Cost is
    ``O(n^3)`` regardless of dimension, but accuracy is limited by the
    conditioning of ``K``; adequate for ``r = 0``.
    """
    if alg.mode != "spline_optimal":
        raise ValueError("the closed form needs spline coefficients")
    total = kernel_trace(alg.spec)
    if alg.n == 0:
        return math.sqrt(total)
    pts = alg.design.points
    M = cross_moment(pts, pts, alg.spec)
    Y = alg.gram.half_solve(M)
    Z = alg.gram.half_solve(Y.T)
    return math.sqrt(max(total - float(np.trace(Z)), 0.0))


def avg_error(
    alg: LinearAlgorithm,
    quad: QuadratureRule | None = None,
    sup_grid: int | None = None,
    check: bool = True,
) -> ErrorReport:
    """Average L2 error of ``alg`` under the folded Wiener sheet measure.

    The error is ``sqrt(sum_q w_q v(x_q))`` for the pointwise variance ``v``.
    The rule is evaluated again with twice the nodes per panel and the
    relative difference is reported as ``quad_residual``.  When no rule is
    given and the design-aligned rule is too large, the closed-form trace
    identity is used instead (spline mode only) and the residual is 0.

    Raises
    ------
    NonConvergenceError
        If ``check`` and the two resolutions differ by more than 1e-4.
    """
    method = "quadrature"
    if quad is None:
        quad = default_quadrature(alg.spec, alg.design)
    if quad is None:
        if alg.mode != "spline_optimal":
            raise CapExceededError("design too large for quadrature of an explicit algorithm")
        e_avg, residual, method = closed_form_avg_error(alg), 0.0, "closed_form"
    else:
        e_avg = _quad_error(alg, quad)
        e_fine = _quad_error(alg, quad.refined())
        residual = abs(e_avg - e_fine) / max(e_fine, np.finfo(float).tiny)
        if check and residual > CONVERGENCE_TOL:
            raise NonConvergenceError(
                f"quadrature resolutions disagree: {e_avg:.6g} vs {e_fine:.6g}"
            )
    e_wor = worst_error_bound(alg, sup_grid)
    return ErrorReport(alg.n, e_avg, e_wor, residual, method)


def sup_grid_points(d: int, resolution: int) -> np.ndarray:
    centers = (np.arange(resolution) + 0.5) / resolution
    mesh = np.meshgrid(*([centers] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def worst_error_bound(
    alg: LinearAlgorithm,
    grid_resolution: int | None = None,
    cap: int = EVALUATION_CAP,
    return_rms: bool = False,
):
    """Largest ``sqrt(v(x))`` over the cell centers of a uniform grid.

    This is a lower estimate of the essential supremum of the residual norm,
    the worst-case ``L_inf`` error on the unit ball of the RKHS.  With
    ``return_rms`` the grid mean ``sqrt(mean v)`` is returned as well; it never
    exceeds the max.
    """
    res = grid_resolution or DEFAULT_SUP_GRID.get(alg.spec.d, 8)
    if int(res) != res or res < 2:
        raise DomainError(f"grid resolution must be an integer >= 2, got {res!r}")
    if res**alg.spec.d > cap:
        raise CapExceededError(f"{res}^{alg.spec.d} grid cells exceed the cap {cap}")
    var = np.maximum(pointwise_variance(sup_grid_points(alg.spec.d, int(res)), alg), 0.0)
    worst = float(np.sqrt(var.max()))
    if return_rms:
        return worst, float(np.sqrt(var.mean()))
    return worst


def all_info_error(spectrum, n: int) -> float:
    """Smallest average error achievable with ``n`` arbitrary linear functionals.

    Equals ``sqrt(sum_{i > n} lambda_i)`` for the covariance eigenvalues.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    if spectrum.completion is None and n >= spectrum.computed_count:
        raise InsufficientSpectrumError(
            f"spectrum has {spectrum.computed_count} eigenvalues and no tail completion"
        )
    return math.sqrt(max(spectrum.tail(int(n)), 0.0))


def predict(alg: LinearAlgorithm, samples, eval_points) -> np.ndarray:
    """Apply ``alg`` to function values at its design points."""
    y = np.asarray(samples, dtype=float)
    if y.shape != (alg.n,):
        raise DimensionMismatchError(f"expected {alg.n} samples, got shape {y.shape}")
    X = _check_unit(_as_points(eval_points, alg.spec.d), "eval_points")
    out = np.empty(X.shape[0])
    for sl in _chunks(X.shape[0], alg.n):
        out[sl] = alg.coefficients(X[sl]) @ y
    return out
