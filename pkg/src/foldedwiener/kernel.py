"""Folded Wiener sheet covariance kernel, Gram matrices and RKHS norms.

The covariance of the folded Wiener sheet measure on ``[0, 1]^d`` with
coordinate smoothness ``r = (r_1, ..., r_d)`` is the tensor product

    R(t, x) = prod_j  int_0^1 (t_j - s)_+^{r_j} (x_j - s)_+^{r_j} / (r_j!)^2 ds.

Each one-dimensional factor is the covariance of ``r_j``-fold integrated
Brownian motion, so ``r = 0`` gives ``min(t, x)``.  Kernel sections
``R(., x)`` span the reproducing kernel Hilbert space ``H``, and
``<R(., x), R(., t)>_H = R(x, t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as la

from .exceptions import DimensionMismatchError, DomainError, FactorizationError

__all__ = [
    "ProblemSpec",
    "GramFactorization",
    "JITTER_LADDER",
    "factor1d",
    "factor1d_trace",
    "factor1d_moment",
    "representer1d",
    "cov",
    "cross_cov",
    "cross_moment",
    "kernel_trace",
    "gram",
    "rkhs_norm_sq",
]

# multiples of trace(K)/n tried in order by ``gram``
JITTER_LADDER = (0.0, 1e-14, 1e-12, 1e-10)


@dataclass(frozen=True)
class ProblemSpec:
    """Dimension, coordinate smoothness and evaluation cost.

    Parameters
    ----------
    d : int
        Number of variables.
    r : tuple of int
        Smoothness ``r_j >= 0`` of each coordinate.
    c : float
        Cost of one function evaluation, in arithmetic-operation units.
    """

    d: int
    r: tuple[int, ...]
    c: float = 100.0

    def __post_init__(self):
        r = tuple(int(v) for v in np.atleast_1d(self.r))
        object.__setattr__(self, "r", r)
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if len(r) != self.d:
            raise DimensionMismatchError(f"r has {len(r)} entries but d={self.d}")
        if any(v < 0 for v in r):
            raise DomainError(f"smoothness must be nonnegative, got {r}")
        if not self.c > 0:
            raise DomainError(f"evaluation cost must be positive, got {self.c!r}")

    @classmethod
    def from_r(cls, r, c: float = 100.0) -> "ProblemSpec":
        r = tuple(int(v) for v in np.atleast_1d(r))
        return cls(len(r), r, c)

    @property
    def r_min(self) -> int:
        return min(self.r)

    @property
    def k_star(self) -> int:
        """Number of coordinates whose smoothness equals ``r_min``."""
        return sum(1 for v in self.r if v == self.r_min)

    @property
    def rate_exponent(self) -> float:
        """Polynomial exponent ``r_min + 1/2`` of the optimal error rate."""
        return self.r_min + 0.5

    @property
    def log_exponent(self) -> float:
        """Power ``(k* - 1)(r_min + 1)`` of ``log n`` in the optimal error rate."""
        return float((self.k_star - 1) * (self.r_min + 1))


def _check_unit(a, name):
    a = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a < 0.0) or np.any(a > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return a


def _check_order(r):
    if int(r) != r or r < 0:
        raise DomainError(f"smoothness must be a nonnegative integer, got {r!r}")
    return int(r)


def _factor1d_unchecked(t, x, r):
    lo = np.minimum(t, x)
    gap = np.maximum(t, x) - lo
    if r == 0:
        return lo
    # substitute u = lo - s: int_0^lo u^r (u + gap)^r du, expanded binomially;
    # every term is nonnegative, so the sum is accurate to (r + 1) ulps
    lo_pow = lo ** (r + 1)
    gap_pows = [np.ones_like(gap)]
    for _ in range(r):
        gap_pows.append(gap_pows[-1] * gap)
    total = 0.0
    for k in range(r + 1):
        total = total + (math.comb(r, k) / (r + k + 1)) * gap_pows[r - k] * lo_pow
        lo_pow = lo_pow * lo
    return total / math.factorial(r) ** 2


def factor1d(t, x, r: int):
    """One coordinate factor of the folded Wiener sheet kernel.

    Returns ``int_0^min(t,x) (t - s)^r (x - s)^r ds / (r!)^2`` evaluated in
    closed form.  Broadcasts over array arguments.
    """
    r = _check_order(r)
    t = _check_unit(t, "t")
    x = _check_unit(x, "x")
    out = _factor1d_unchecked(t, x, r)
    return float(out) if out.ndim == 0 else out


def factor1d_trace(r: int) -> float:
    """Closed form of ``int_0^1 factor1d(t, t, r) dt``."""
    r = _check_order(r)
    return 1.0 / ((2 * r + 1) * (2 * r + 2) * math.factorial(r) ** 2)


@lru_cache(maxsize=None)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def factor1d_moment(a, b, r: int):
    """L2 inner product ``int_0^1 factor1d(a, t, r) factor1d(b, t, r) dt``.

    The integrand is a polynomial of degree ``4r + 2`` on each of the panels
    ``[0, min]``, ``[min, max]`` and ``[max, 1]``, so Gauss-Legendre with
    ``2r + 2`` nodes per panel is exact.
    """
    r = _check_order(r)
    a = _check_unit(a, "a")
    b = _check_unit(b, "b")
    a, b = np.broadcast_arrays(a, b)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    nodes, weights = _gauss01(2 * r + 2)
    total = np.zeros(a.shape)
    for left, right in ((np.zeros_like(lo), lo), (lo, hi), (hi, np.ones_like(hi))):
        width = right - left
        for q, w in zip(nodes, weights):
            t = left + width * q
            total += w * width * _factor1d_unchecked(a, t, r) * _factor1d_unchecked(b, t, r)
    return float(total) if total.ndim == 0 else total


def representer1d(x, t, r: int):
    """White-noise representer ``(x - t)_+^r / r!``.

    ``factor1d(x, y, r) = int_0^1 representer1d(x, s, r) representer1d(y, s, r) ds``.
    For ``r = 0`` this is the indicator of ``t < x``.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if r == 0:
        return (t < x).astype(float)
    return np.maximum(x - t, 0.0) ** r / math.factorial(r)


def _as_points(points, d=None):
    pts = getattr(points, "points", points)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if d == 1 or d is None else pts[None, :]
    if d is not None and pts.shape[-1] != d:
        raise DimensionMismatchError(f"points have dimension {pts.shape[-1]}, spec has d={d}")
    return pts


def cov(t, x, spec: ProblemSpec):
    """Covariance ``R(t, x)``; broadcasts over leading axes of ``t`` and ``x``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.shape[-1:] != (spec.d,) or x.shape[-1:] != (spec.d,):
        raise DimensionMismatchError(f"points must have trailing dimension d={spec.d}")
    _check_unit(t, "t")
    _check_unit(x, "x")
    out = np.ones(np.broadcast_shapes(t.shape[:-1], x.shape[:-1]))
    for j, rj in enumerate(spec.r):
        out = out * _factor1d_unchecked(t[..., j], x[..., j], rj)
    return float(out) if out.ndim == 0 else out


def _axis_table(func, a, b, r):
    """Evaluate ``func`` on unique coordinate pairs, then scatter back."""
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    table = func(ua[:, None], ub[None, :], r)
    return table[np.ix_(ia.ravel(), ib.ravel())]


def cross_cov(X, Y, spec: ProblemSpec) -> np.ndarray:
    """Matrix ``[R(X_i, Y_j)]`` for point sets of shapes ``(m, d)`` and ``(n, d)``.

    Works per axis on the unique coordinates, which is much cheaper than
    pairwise evaluation for sparse-grid designs.
    """
    X = _check_unit(_as_points(X, spec.d), "X")
    Y = _check_unit(_as_points(Y, spec.d), "Y")
    out = np.ones((X.shape[0], Y.shape[0]))
    for j, rj in enumerate(spec.r):
        out *= _axis_table(_factor1d_unchecked, X[:, j], Y[:, j], rj)
    return out


def cross_moment(X, Y, spec: ProblemSpec) -> np.ndarray:
    """Matrix ``[int_D R(X_i, s) R(s, Y_j) ds]`` of L2 inner products of sections."""
    X = _as_points(X, spec.d)
    Y = _as_points(Y, spec.d)
    out = np.ones((X.shape[0], Y.shape[0]))
    for j, rj in enumerate(spec.r):
        out *= _axis_table(factor1d_moment, X[:, j], Y[:, j], rj)
    return out


def kernel_trace(spec: ProblemSpec) -> float:
    """``int_D R(x, x) dx``, the trace of the covariance operator."""
    return math.prod(factor1d_trace(rj) for rj in spec.r)


@dataclass(frozen=True, eq=False)
class GramFactorization:
    """Cholesky factorization of a kernel Gram matrix.

    ``factor @ factor.T == matrix + jitter * I`` up to rounding.
    """

    points: np.ndarray
    matrix: np.ndarray
    factor: np.ndarray
    jitter: float
    spec: ProblemSpec = field(repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def solve(self, b):
        """Solve ``(K + jitter I) c = b``."""
        return la.cho_solve((self.factor, True), b, check_finite=False)

    def half_solve(self, b):
        """Return ``L^{-1} b`` where ``L`` is the lower Cholesky factor."""
        return la.solve_triangular(self.factor, b, lower=True, check_finite=False)


def gram(design, spec: ProblemSpec) -> GramFactorization:
    """Assemble and factor ``K_ij = R(x_i, x_j)`` with the smallest workable jitter.

    Raises
    ------
    DomainError
        If the design is empty or a point has a zero coordinate (its kernel
        column vanishes identically).
    FactorizationError
        If Cholesky fails even at the largest rung of ``JITTER_LADDER``.
    """
    pts = _check_unit(_as_points(design, spec.d), "design")
    if pts.shape[0] == 0:
        raise DomainError("cannot factor the Gram matrix of an empty design")
    if np.any(pts == 0.0):
        raise DomainError("design points with a zero coordinate carry no information")
    K = cross_cov(pts, pts, spec)
    K = 0.5 * (K + K.T)
    scale = np.trace(K) / K.shape[0]
    for rung in JITTER_LADDER:
        jitter = rung * scale
        try:
            L = la.cholesky(K + jitter * np.eye(K.shape[0]), lower=True, check_finite=False)
        except la.LinAlgError:
            continue
        return GramFactorization(pts, K, L, float(jitter), spec)
    raise FactorizationError(
        f"Gram matrix of {K.shape[0]} points is not positive definite even with "
        f"jitter {JITTER_LADDER[-1]:g} * trace/n; duplicated or degenerate design?"
    )


def rkhs_norm_sq(coeffs, factorization: GramFactorization) -> float:
    """Squared RKHS norm ``c^T K c`` of ``sum_j c_j R(., x_j)``."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (factorization.n,):
        raise DimensionMismatchError(
            f"expected {factorization.n} coefficients, got shape {c.shape}"
        )
    return float(c @ factorization.matrix @ c)
