"""Eigenvalues of the covariance operator and the tractability exponent.

The covariance operator ``(C f)(t) = int R(t, x) f(x) dx`` on ``L2[0, 1]^d``
has a tensor-product kernel, so its eigenvalues are products of the
one-dimensional eigenvalues of each factor.  The tail sums
``sum_{i > n} lambda_i`` decay like ``n^{-2 alpha}``; the exponent ``alpha``
determines the tractability exponent ``p* = 1 / alpha``.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.special import zeta

from .exceptions import (
    CapExceededError,
    DiscretizationError,
    DomainError,
    InsufficientSpanError,
    InsufficientSpectrumError,
    NegativeTailError,
)
from .kernel import _check_order, _factor1d_unchecked, _gauss01, factor1d_trace

__all__ = [
    "TailModel",
    "Spectrum",
    "TractabilityVerdict",
    "eig1d",
    "spectrum_1d",
    "spectrum_from_eigenvalues",
    "tensor_spectrum",
    "tail_exponent_fit",
    "format_spectrum",
]

TENSOR_CAP = 10**6


def eig1d(r: int, m: int) -> np.ndarray:
    """Eigenvalues of the one-dimensional factor operator, largest first.

    Piecewise-constant Galerkin on ``m`` uniform cells.  Entries are exact:
    off-diagonal cell pairs see a polynomial kernel and use Gauss-Legendre
    with ``r + 2`` nodes per cell, diagonal cells are split along ``s = t``.
    Values below the eigensolver's rounding floor are dropped, so fewer than
    ``m`` values may be returned for large ``r``.
    """
    r = _check_order(r)
    if int(m) != m or m < 8:
        raise DomainError(f"need at least 8 cells, got {m!r}")
    m = int(m)
    h = 1.0 / m
    q, w = _gauss01(r + 2)
    left = np.arange(m) * h
    G = np.zeros((m, m))
    for qa, wa in zip(q, w):
        s = (left + h * qa)[:, None]
        for qb, wb in zip(q, w):
            G += (wa * wb * h) * _factor1d_unchecked(s, (left + h * qb)[None, :], r)
    # diagonal cell: 2 * int_a^{a+h} int_a^t k(s, t) ds dt
    diag = np.zeros(m)
    for qa, wa in zip(q, w):
        t = left + h * qa
        for qb, wb in zip(q, w):
            s = left + (t - left) * qb
            diag += wa * wb * h * (t - left) * _factor1d_unchecked(s, t, r)
    G[np.diag_indices(m)] = 2.0 * diag / h
    try:
        vals = la.eigvalsh(G, check_finite=False)
    except la.LinAlgError as exc:
        raise DiscretizationError(f"symmetric eigensolve failed for m={m}") from exc
    vals = vals[::-1]
    floor = m * np.finfo(float).eps * vals[0]
    return vals[vals > floor]


@dataclass(frozen=True)
class TailModel:
    """Power law ``lambda_i ~ scale * i^(-power)`` used past the computed list."""

    scale: float
    power: float

    @classmethod
    def fit(cls, values, start_index: int) -> "TailModel":
        """Least-squares fit in log-log space; ``values[0]`` has index ``start_index``."""
        values = np.asarray(values, dtype=float)
        idx = np.arange(start_index, start_index + len(values), dtype=float)
        A = np.column_stack([np.ones_like(idx), -np.log(idx)])
        (logc, power), *_ = np.linalg.lstsq(A, np.log(values), rcond=None)
        if power <= 1.0:
            raise InsufficientSpectrumError(f"fitted tail power {power:.3g} is not summable")
        return cls(float(np.exp(logc)), float(power))

    def value(self, i):
        return self.scale * np.asarray(i, dtype=float) ** (-self.power)

    def sum_beyond(self, n: int) -> float:
        """``sum_{i > n} scale * i^(-power)`` via the Hurwitz zeta function."""
        return float(self.scale * zeta(self.power, n + 1))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Descending eigenvalues with the trace and the mass beyond the list.

    ``remainder`` is ``trace - sum(eigenvalues)``, the total of all eigenvalues
    past ``computed_count``.  ``completion`` extrapolates individual tail
    terms; without it, tails past the computed list are unavailable.
    """

    eigenvalues: np.ndarray
    trace: float
    remainder: float
    completion: TailModel | None = None
    per_axis: tuple = ()

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise DomainError("a spectrum needs a nonempty list of eigenvalues")
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise DomainError("eigenvalues must be positive and descending")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        suffix = np.concatenate([np.cumsum(lam[::-1])[::-1], [0.0]])
        suffix.setflags(write=False)
        object.__setattr__(self, "_suffix", suffix)

    @property
    def computed_count(self) -> int:
        return self.eigenvalues.size

    def tail(self, n: int) -> float:
        """``sum_{i > n} lambda_i``."""
        if n < 0:
            raise DomainError("n must be nonnegative")
        if n <= self.computed_count:
            return float(self._suffix[n] + self.remainder)
        if self.completion is None:
            raise InsufficientSpectrumError(
                f"tail at n={n} needs a completion past {self.computed_count} eigenvalues"
            )
        ratio = self.completion.sum_beyond(n) / self.completion.sum_beyond(self.computed_count)
        return float(self.remainder * ratio)

    def values(self, count: int) -> np.ndarray:
        """First ``count`` eigenvalues, extended by the completion if needed."""
        if count <= self.computed_count:
            return self.eigenvalues[:count]
        if self.completion is None:
            raise InsufficientSpectrumError(f"need {count} eigenvalues, have {self.computed_count}")
        extra = self.completion.value(np.arange(self.computed_count + 1, count + 1))
        # keep the extension below the last computed value so the list stays descending
        extra = np.minimum(extra, self.eigenvalues[-1])
        return np.concatenate([self.eigenvalues, extra])

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.eigenvalues)


def _tail_window(count):
    return max(1, count // 2)


def spectrum_from_eigenvalues(values, trace: float | None = None, complete: bool = True) -> Spectrum:
    """Wrap a descending list; optionally fit a power-law completion to its second half.

    Without ``trace`` the completion's sum past the list is added to the sum of
    the list (or nothing, when ``complete`` is false).
    """
    lam = np.asarray(values, dtype=float)
    model = None
    if complete:
        start = _tail_window(lam.size)
        model = TailModel.fit(lam[start:], start + 1)
    if trace is None:
        remainder = model.sum_beyond(lam.size) if model else 0.0
        trace = float(lam.sum() + remainder)
    else:
        remainder = float(trace - lam.sum())
        if remainder < 0:
            raise NegativeTailError(f"eigenvalues sum past the trace by {-remainder:.3g}")
    return Spectrum(lam, float(trace), remainder, model, (lam,))


def spectrum_1d(r: int, m: int = 2048) -> Spectrum:
    """Spectrum of one kernel factor from Richardson-extrapolated Galerkin eigenvalues.

    The Galerkin eigenvalues converge like ``h^2``; combining ``m`` and ``m/2``
    cells removes that term.  The first ``m/8`` extrapolated values are kept,
    the trace is the exact ``int_0^1 factor1d(t, t, r) dt``, and a power law
    fitted to the kept values completes the tail.
    """
    fine = eig1d(r, m)
    coarse = eig1d(r, m // 2)
    count = min(m // 8, coarse.size, fine.size)
    lam = (4.0 * fine[:count] - coarse[:count]) / 3.0
    lam = np.minimum.accumulate(lam)
    return spectrum_from_eigenvalues(lam, trace=factor1d_trace(r))


def tensor_spectrum(per_axis, count: int, cap: int = TENSOR_CAP) -> Spectrum:
    """The ``count`` largest products of per-axis eigenvalues, by best-first search.

    Each entry of ``per_axis`` is a descending array or a :class:`Spectrum`;
    spectra contribute their exact trace and are extended by their
    completion when ``count`` exceeds their computed list.
    """
    count = int(count)
    if count < 1:
        raise DomainError("count must be positive")
    if count > cap:
        raise CapExceededError(f"count {count} exceeds the cap {cap}")
    lists, traces = [], []
    for axis in per_axis:
        if isinstance(axis, Spectrum):
            n_axis = count if axis.completion is not None else min(count, axis.computed_count)
            lists.append(np.asarray(axis.values(n_axis)))
            traces.append(axis.trace)
        else:
            lam = np.asarray(axis, dtype=float)
            if np.any(np.diff(lam) > 0):
                raise DomainError("per-axis eigenvalues must be descending")
            lists.append(lam)
            traces.append(float(lam.sum()))
    d = len(lists)
    start = (0,) * d
    heap = [(-math.prod(l[0] for l in lists), start)]
    seen = {start}
    out = []
    while heap and len(out) < count:
        neg, idx = heapq.heappop(heap)
        out.append(-neg)
        for j in range(d):
            nxt = idx[:j] + (idx[j] + 1,) + idx[j + 1 :]
            if nxt[j] < len(lists[j]) and nxt not in seen:
                seen.add(nxt)
                heapq.heappush(heap, (-math.prod(lists[k][nxt[k]] for k in range(d)), nxt))
    lam = np.array(out)
    trace = math.prod(traces)
    remainder = max(trace - float(lam.sum()), 0.0)
    model = None
    if lam.size >= 16:
        start_i = _tail_window(lam.size)
        try:
            model = TailModel.fit(lam[start_i:], start_i + 1)
        except InsufficientSpectrumError:
            model = None
    return Spectrum(lam, trace, remainder, model, tuple(lists))


@dataclass(frozen=True)
class TractabilityVerdict:
    """Fitted exponent of ``tail(n) = O(n^(-2 alpha))`` and ``p* = 1/alpha``."""

    alpha: float
    p_star: float
    residual: float
    tractable: bool
    n_range: tuple[int, int] = (0, 0)

    @property
    def two_alpha(self) -> float:
        return 2.0 * self.alpha

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "two_alpha": self.two_alpha,
            "p_star": self.p_star,
            "residual": self.residual,
            "tractable": self.tractable,
            "n_range": list(self.n_range),
        }


def tail_exponent_fit(spectrum: Spectrum, n_range=None, n_points: int = 24) -> TractabilityVerdict:
    """Fit ``log tail(n) = a - 2 alpha log n`` on log-spaced ``n`` in ``n_range``.

    The default window is ``[16, computed_count / 4]``.  The problem is
    declared tractable when ``alpha > 0`` and the RMS log residual is at most
    0.1.
    """
    if n_range is None:
        n_range = (16, spectrum.computed_count // 4)
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 1 or hi <= lo or math.log10(hi / lo) < 1.0 - 1e-12:
        raise InsufficientSpanError(f"fit window {n_range} must span at least one decade")
    if hi >= spectrum.computed_count:
        raise InsufficientSpectrumError(
            f"fit window ends at {hi} but only {spectrum.computed_count} eigenvalues are computed"
        )
    ns = np.unique(np.round(np.geomspace(lo, hi, n_points)).astype(int))
    tails = np.array([spectrum.tail(int(n)) for n in ns])
    if np.any(tails <= 0):
        raise NegativeTailError("tail sum reached zero; compute more eigenvalues")
    A = np.column_stack([np.ones(ns.size), -np.log(ns)])
    coef, *_ = np.linalg.lstsq(A, np.log(tails), rcond=None)
    resid = np.log(tails) - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    alpha = 0.5 * float(coef[1])
    p_star = 1.0 / alpha if alpha != 0 else math.inf
    return TractabilityVerdict(alpha, p_star, rms, bool(alpha > 0 and rms <= 0.1), (lo, hi))


def format_spectrum(spectrum: Spectrum) -> str:
    """CSV with columns index, eigenvalue, cumulative, tail (1-based index)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "eigenvalue", "cumulative", "tail"])
    cum = spectrum.cumulative()
    for i, (lam, c) in enumerate(zip(spectrum.eigenvalues, cum), start=1):
        writer.writerow([i, repr(float(lam)), repr(float(c)), repr(spectrum.tail(i))])
    return buf.getvalue()
