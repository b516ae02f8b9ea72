"""Sample paths of the folded Wiener sheet and Monte Carlo error estimates.

A path is the white-noise integral

    f(x) = sum_cells prod_j (x_j - t_j)_+^{r_j} / r_j! * w_cell,

with ``t`` the cell center and ``w_cell ~ N(0, cell volume)`` on a uniform
grid of ``resolution^d`` cells.  Its covariance converges to the folded
Wiener sheet kernel as the grid is refined.  Noise comes from a Philox
counter-based generator keyed by ``(seed, stream)``, so realizations are
reproducible and independent of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .error import LinearAlgorithm, QuadratureRule, default_quadrature
from .exceptions import CapExceededError, DomainError
from .kernel import ProblemSpec, _as_points, _check_unit, representer1d

__all__ = ["FieldRealization", "sample_field", "mc_avg_error", "FIELD_CAP"]

FIELD_CAP = 2**22


def _noise(spec, resolution, seed, stream, size=()):
    rng = np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, int(stream) % 2**64]))
    shape = tuple(size) + (resolution,) * spec.d
    return rng.standard_normal(shape) * math.sqrt(resolution ** (-spec.d))


def _axis_matrices(X, spec, resolution):
    centers = (np.arange(resolution) + 0.5) / resolution
    return [representer1d(X[:, j][:, None], centers[None, :], rj) for j, rj in enumerate(spec.r)]


def _contract(noise, mats):
    """``sum_c prod_j mats[j][p, c_j] noise[..., c]`` for each point ``p``."""
    # noise has shape (batch, m, ..., m); contract the first cell axis, then
    # carry the point axis along while contracting the rest
    out = np.tensordot(noise, mats[0], axes=([1], [1]))  # (batch, m, ..., m, p)
    out = np.moveaxis(out, -1, 1)  # (batch, p, m, ..., m)
    for A in mats[1:]:
        out = np.einsum("bpc...,pc->bp...", out, A)
    return out


@dataclass(frozen=True, eq=False)
class FieldRealization:
    """One discretized sample path, callable on points of ``[0, 1]^d``."""

    spec: ProblemSpec
    resolution: int
    noise: np.ndarray
    seed: int
    stream: int = 0

    def __call__(self, x):
        X = np.asarray(x, dtype=float)
        single = X.ndim == 0 or (X.ndim == 1 and self.spec.d > 1)
        X = _check_unit(_as_points(X.reshape(-1, self.spec.d), self.spec.d), "x")
        vals = _contract(self.noise[None], _axis_matrices(X, self.spec, self.resolution))[0]
        return float(vals[0]) if single else vals


def sample_field(
    spec: ProblemSpec, resolution: int, seed: int, stream: int = 0, cap: int = FIELD_CAP
) -> FieldRealization:
    """Draw one path on a grid of ``resolution^d`` cells."""
    if int(resolution) != resolution or resolution < 1:
        raise DomainError(f"resolution must be a positive integer, got {resolution!r}")
    resolution = int(resolution)
    if resolution**spec.d > cap:
        raise CapExceededError(f"{resolution}^{spec.d} cells exceed the memory cap {cap}")
    noise = _noise(spec, resolution, seed, stream)
    noise.setflags(write=False)
    return FieldRealization(spec, resolution, noise, int(seed), int(stream))


def mc_avg_error(
    alg: LinearAlgorithm,
    spec: ProblemSpec,
    n_samples: int,
    resolution: int,
    seed: int,
    quad: QuadratureRule | None = None,
    batch: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of the average L2 error of ``alg``.

    Sample ``k`` uses the path keyed by ``(seed, k)``.  The squared L2 error
    of each path is integrated with ``quad`` (default: the rule used by
    :func:`foldedwiener.error.avg_error`), and the estimate is the square
    root of the mean with a delta-method standard error.

    Returns
    -------
    estimate, stderr : float
    """
    if int(n_samples) != n_samples or n_samples < 2:
        raise DomainError("need at least two samples")
    if resolution**spec.d > FIELD_CAP:
        raise CapExceededError(f"{resolution}^{spec.d} cells exceed the memory cap {FIELD_CAP}")
    if quad is None:
        quad = default_quadrature(spec, alg.design) or QuadratureRule.gauss_legendre(spec.d, 16)
    nodes = quad.nodes
    G = alg.coefficients(nodes)
    node_mats = _axis_matrices(nodes, spec, resolution)
    design_mats = _axis_matrices(alg.design.points, spec, resolution) if alg.n else None
    if batch is None:
        per_sample = resolution**spec.d * (1 + nodes.shape[0] / resolution)
        batch = int(max(1, min(256, 2e7 // per_sample)))
    sq = np.empty(int(n_samples))
    for start in range(0, int(n_samples), batch):
        stop = min(start + batch, int(n_samples))
        noise = np.stack([_noise(spec, resolution, seed, k) for k in range(start, stop)])
        f_nodes = _contract(noise, node_mats)
        if alg.n:
            f_design = _contract(noise, design_mats)
            f_nodes = f_nodes - f_design @ G.T
        sq[start:stop] = (f_nodes**2) @ quad.weights
    mean = float(np.mean(sq))
    estimate = math.sqrt(mean)
    stderr = float(np.std(sq, ddof=1) / math.sqrt(sq.size)) / (2.0 * estimate)
    return estimate, stderr
