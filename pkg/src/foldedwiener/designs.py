"""Sample-point designs on the unit cube.

Four families are provided: full tensor grids, anisotropic dyadic hyperbolic
crosses, images of hyperbolic crosses under the folding map
``h(u) = 4u(1 - u)``, and uniform random points.  Every design excludes
points with a zero coordinate, where the folded Wiener sheet vanishes.
"""

from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import CapExceededError, DimensionMismatchError, DomainError
from .kernel import ProblemSpec

__all__ = [
    "Provenance",
    "Design",
    "IndexBlock",
    "DEFAULT_SIZE_CAP",
    "grid",
    "index_blocks",
    "hyperbolic_cross",
    "h_map",
    "h_inv",
    "map_design",
    "random_design",
    "format_design",
    "parse_design",
    "write_design",
    "read_design",
]

DEFAULT_SIZE_CAP = 10**6


class Provenance(str, enum.Enum):
    GRID = "grid"
    HYPERBOLIC_CROSS = "hyperbolic_cross"
    MAPPED_HYPERBOLIC_CROSS = "mapped_hyperbolic_cross"
    RANDOM = "random"


@dataclass(frozen=True, eq=False)
class Design:
    """Ordered, duplicate-free point set in ``(0, 1]^d``."""

    points: np.ndarray
    provenance: Provenance
    level: int | None = None
    seed: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, ndmin=2)
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 1)
        if pts.ndim != 2:
            raise DimensionMismatchError("points must form an (n, d) array")
        if np.any(~(pts > 0.0)) or np.any(pts > 1.0):
            raise DomainError("design coordinates must lie in (0, 1]")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise DomainError("design points must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def same_points(self, other: "Design") -> bool:
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))

    def point_set(self) -> set[tuple[float, ...]]:
        return set(map(tuple, self.points.tolist()))


def _check_cap(size, cap):
    if size > cap:
        raise CapExceededError(f"design would have {size} points, cap is {cap}")


def grid(m_per_axis, cap: int = DEFAULT_SIZE_CAP) -> Design:
    """Tensor grid with points ``i / m_j`` for ``i = 1..m_j`` on axis ``j``."""
    m = [int(v) for v in np.atleast_1d(m_per_axis)]
    if any(v < 1 for v in m):
        raise DomainError(f"points per axis must be positive, got {m}")
    _check_cap(math.prod(m), cap)
    axes = [np.arange(1, mj + 1) / mj for mj in m]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.ravel() for a in mesh], axis=1)
    return Design(pts, Provenance.GRID)


@dataclass(frozen=True)
class IndexBlock:
    """Per-axis dyadic levels of one tensor block of a hyperbolic cross."""

    k: tuple[int, ...]

    def weighted_size(self, beta) -> float:
        return float(np.dot(self.k, beta))

    @property
    def cardinality(self) -> int:
        return 2 ** sum(self.k)


def smoothness_weights(spec: ProblemSpec) -> np.ndarray:
    """Axis weights ``(r_j + 1/2) / (r_min + 1/2)``; smoother axes refine less."""
    r = np.asarray(spec.r, dtype=float)
    return (r + 0.5) / (spec.r_min + 0.5)


def index_blocks(L: int, spec: ProblemSpec) -> list[IndexBlock]:
    """All blocks ``k`` with ``sum_j k_j beta_j <= L``, in lexicographic order."""
    if int(L) != L or L < 0:
        raise DomainError(f"level must be a nonnegative integer, got {L!r}")
    beta = smoothness_weights(spec)
    tol = 1e-9
    ranges = [range(int(math.floor(L / b + tol)) + 1) for b in beta]
    return [
        IndexBlock(k)
        for k in itertools.product(*ranges)
        if float(np.dot(k, beta)) <= L + tol
    ]


def hyperbolic_cross(L: int, spec: ProblemSpec, cap: int = DEFAULT_SIZE_CAP) -> Design:
    """Anisotropic dyadic hyperbolic cross of level ``L``.

    The union over admissible blocks ``k`` of tensor products of the odd
    dyadics ``(2i - 1) / 2^(k_j + 1)``.  Blocks are pairwise disjoint, so the
    cardinality is the sum of ``2^|k|`` over blocks.
    """
    blocks = index_blocks(L, spec)
    _check_cap(sum(b.cardinality for b in blocks), cap)
    top = max(max(b.k) for b in blocks) + 1
    chunks = []
    for b in blocks:
        # integer numerators over the common denominator 2^top
        axes = [(2 * np.arange(1, 2**kj + 1) - 1) * 2 ** (top - kj - 1) for kj in b.k]
        mesh = np.meshgrid(*axes, indexing="ij")
        chunks.append(np.stack([a.ravel() for a in mesh], axis=1))
    numerators = np.unique(np.concatenate(chunks), axis=0)
    return Design(numerators / 2.0**top, Provenance.HYPERBOLIC_CROSS, level=int(L))


def h_map(u):
    """Folding map ``h(u) = 4u(1 - u)`` from ``[0, 1]`` onto ``[0, 1]``."""
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError("h is defined on [0, 1]")
    out = 4.0 * u * (1.0 - u)
    return float(out) if out.ndim == 0 else out


def h_inv(t):
    """Left branch ``(1 - sqrt(1 - t)) / 2`` of the inverse of ``h``."""
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError("h_inv is defined on [0, 1]")
    out = 0.5 * (1.0 - np.sqrt(1.0 - t))
    return float(out) if out.ndim == 0 else out


def map_design(design: Design) -> Design:
    """Apply ``h`` coordinatewise, drop duplicates and zero-coordinate images."""
    img = np.asarray(h_map(design.points), dtype=float).reshape(design.points.shape)
    img = img[np.all(img > 0.0, axis=1)]
    img = np.unique(img, axis=0)
    return Design(img, Provenance.MAPPED_HYPERBOLIC_CROSS, level=design.level)


def random_design(n: int, spec: ProblemSpec, seed: int) -> Design:
    """``n`` uniform points in ``(0, 1)^d`` from a Philox stream keyed by ``seed``."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    rng = np.random.Generator(np.random.Philox(key=int(seed) % 2**64))
    pts = rng.random((int(n), spec.d))
    while np.any(pts == 0.0):
        bad = pts == 0.0
        pts[bad] = rng.random(int(bad.sum()))
    return Design(pts, Provenance.RANDOM, seed=int(seed))


_HEADER = re.compile(
    r"#\s*d=(?P<d>\d+)\s+n=(?P<n>\d+)\s+provenance=(?P<prov>\w+)"
    r"\s+level=(?P<level>-|\d+)\s+seed=(?P<seed>-|-?\d+)\s*$"
)


def format_design(design: Design) -> str:
    """Text form: a header line, then one point per line, space separated."""
    level = "-" if design.level is None else str(design.level)
    seed = "-" if design.seed is None else str(design.seed)
    lines = [
        f"# d={design.d} n={design.n} provenance={design.provenance.value} "
        f"level={level} seed={seed}"
    ]
    lines += [" ".join(repr(float(v)) for v in p) for p in design.points]
    return "\n".join(lines) + "\n"


def parse_design(text: str) -> Design:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DomainError("empty design text")
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise DomainError(f"malformed design header: {lines[0]!r}")
    d, n = int(m["d"]), int(m["n"])
    rows = [[float(v) for v in ln.split(" ")] for ln in lines[1:]]
    if len(rows) != n or any(len(row) != d for row in rows):
        raise DimensionMismatchError(f"header promises {n} points of dimension {d}")
    pts = np.array(rows, dtype=float).reshape(n, d)
    return Design(
        pts,
        Provenance(m["prov"]),
        level=None if m["level"] == "-" else int(m["level"]),
        seed=None if m["seed"] == "-" else int(m["seed"]),
    )


def write_design(design: Design, path) -> None:
    Path(path).write_text(format_design(design))


def read_design(path) -> Design:
    return parse_design(Path(path).read_text())
