"""Gridded densities, sample sets, quadrature, distances and sampling.

Grids are cell-centered: a :class:`Grid1D` with ``n`` cells on ``[lo, hi]``
has nodes ``lo + (i + 1/2) h``. All gridded integrals use the midpoint rule.
Containers are immutable; arrays are copied on construction and marked
read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _backend
from .errors import (
    DegenerateEnvelope,
    EmptyRegion,
    GridMismatch,
    MaxDepthExceeded,
    OutOfSupport,
    ZeroMass,
)

#: lower cutoff applied to densities that are singular at q -> 0
Q_MIN = 1e-6


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by an explicit 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on ``[lo, hi]`` with ``n`` cells."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "n", int(self.n))
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise ValueError(f"need finite lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 2:
            raise ValueError("a grid needs at least 2 cells")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.lo + (np.arange(self.n) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        e = self.lo + np.arange(self.n + 1) * self.h
        e[-1] = self.hi
        return e

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi, "n": self.n}


@dataclass(frozen=True)
class Grid2D:
    """Tensor product of two :class:`Grid1D`; axis 0 is ``gx``, axis 1 is ``gy``."""

    gx: Grid1D
    gy: Grid1D

    @property
    def cell_area(self) -> float:
        return self.gx.h * self.gy.h

    @property
    def shape(self):
        return (self.gx.n, self.gy.n)

    def mesh(self):
        """Node coordinates as two ``(nx, ny)`` arrays (``indexing='ij'``)."""
        return np.meshgrid(self.gx.nodes, self.gy.nodes, indexing="ij")

    @classmethod
    def unit_square(cls, n: int, m: Optional[int] = None) -> "Grid2D":
        return cls(Grid1D(0.0, 1.0, n), Grid1D(0.0, 1.0, n if m is None else m))

    def to_dict(self):
        return {"gx": self.gx.to_dict(), "gy": self.gy.to_dict()}


def _check_values(values, shape, weights):
    v = np.asarray(values, dtype=float)
    if v.shape != shape:
        raise ValueError(f"values shape {v.shape} does not match grid {shape}")
    if np.isnan(v).any():
        raise ValueError("NaN in density values")
    if (v < 0).any():
        raise ValueError("density values must be nonnegative")
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != shape or (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite, nonnegative and match the grid")


@dataclass(frozen=True, eq=False)
class GriddedPdf1D:
    """Density tabulated at cell centers of a :class:`Grid1D`.

    ``weights`` is ``None`` for the Lebesgue measure, otherwise per-node
    weights of a non-Lebesgue reference measure.
    """

    grid: Grid1D
    values: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        _check_values(self.values, (self.grid.n,), self.weights)
        object.__setattr__(self, "values", _frozen(self.values))
        if self.weights is not None:
            object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def measure_tag(self) -> str:
        return "Lebesgue" if self.weights is None else "Weighted"

    @property
    def nodes(self):
        return self.grid.nodes

    def mass(self) -> float:
        w = 1.0 if self.weights is None else self.weights
        return float(np.sum(self.values * w) * self.grid.h)

    def __call__(self, x):
        """Linear interpolation between nodes, constant beyond the end nodes, 0 off-support."""
        x = np.asarray(x, dtype=float)
        y = np.interp(x, self.grid.nodes, self.values)
        return np.where((x < self.grid.lo) | (x > self.grid.hi), 0.0, y)


@dataclass(frozen=True, eq=False)
class GriddedPdf2D:
    """Density tabulated at cell centers of a :class:`Grid2D` (``values[i, j]`` at ``(x_i, y_j)``)."""

    grid: Grid2D
    values: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        _check_values(self.values, self.grid.shape, self.weights)
        object.__setattr__(self, "values", _frozen(self.values))
        if self.weights is not None:
            object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def measure_tag(self) -> str:
        return "Lebesgue" if self.weights is None else "Weighted"

    def mass(self) -> float:
        w = 1.0 if self.weights is None else self.weights
        return float(np.sum(self.values * w) * self.grid.cell_area)

    def __call__(self, x, y):
        return bilinear(self, x, y)


GriddedPdf = Union[GriddedPdf1D, GriddedPdf2D]


@dataclass(frozen=True, eq=False)
class SampleSet:
    """``n`` points of dimension ``dim`` plus the seed that generated them."""

    points: np.ndarray
    seed: int
    support: Optional[tuple] = field(default=None)

    def __post_init__(self):
        p = np.array(self.points, dtype=float, copy=True)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2:
            raise ValueError("points must be an (n, dim) array")
        if self.support is not None:
            lo = np.asarray([s[0] for s in self.support], dtype=float)
            hi = np.asarray([s[1] for s in self.support], dtype=float)
            if p.shape[0] and ((p < lo) | (p > hi)).any():
                raise OutOfSupport(int(((p < lo) | (p > hi)).any(axis=1).sum()))
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def column(self, k: int = 0) -> np.ndarray:
        return self.points[:, k]

    def __len__(self):
        return self.n


# ---------------------------------------------------------------- basic ops

def _replace_values(p, values):
    return type(p)(p.grid, values, p.weights)


def normalize(p: GriddedPdf) -> GriddedPdf:
    """Rescale ``p`` so that its midpoint integral is 1."""
    m = p.mass()
    if not np.isfinite(m) or m <= 0:
        raise ZeroMass(f"cannot normalize a density with mass {m}")
    return _replace_values(p, p.values / m)


def _overlap(grid: Grid1D, a: float, b: float) -> np.ndarray:
    e = grid.edges
    lo = np.maximum(e[:-1], a)
    hi = np.minimum(e[1:], b)
    return np.clip(hi - lo, 0.0, None)


def integrate(p: GriddedPdf, region=None) -> float:
    """Midpoint-rule integral of ``p`` over an axis-aligned box.

    ``region`` is ``(a, b)`` in 1-D or ``((a1, b1), (a2, b2))`` in 2-D;
    ``None`` means the full support. Cells cut by the box contribute in
    proportion to their overlap.
    """
    w = 1.0 if p.weights is None else p.weights
    if isinstance(p, GriddedPdf1D):
        if region is None:
            return p.mass()
        a, b = map(float, region)
        ov = _overlap(p.grid, a, b)
        if not ov.any():
            raise EmptyRegion(f"[{a}, {b}] misses the support [{p.grid.lo}, {p.grid.hi}]")
        return float(np.sum(p.values * w * ov))
    if region is None:
        return p.mass()
    (a1, b1), (a2, b2) = region
    ox = _overlap(p.grid.gx, float(a1), float(b1))
    oy = _overlap(p.grid.gy, float(a2), float(b2))
    if not ox.any() or not oy.any():
        raise EmptyRegion("region does not intersect the grid support")
    return float(ox @ (p.values * w) @ oy)


def _same_grid(p, q):
    if type(p) is not type(q) or p.grid != q.grid:
        raise GridMismatch("densities live on different grids")


def l1_distance(p: GriddedPdf1D, q: GriddedPdf1D) -> float:
    """Midpoint-rule ``int |p - q|``."""
    _same_grid(p, q)
    w = 1.0 if p.weights is None else p.weights
    h = p.grid.h if isinstance(p, GriddedPdf1D) else p.grid.cell_area
    return float(np.sum(np.abs(p.values - q.values) * w) * h)


def sup_distance(p: GriddedPdf1D, q: GriddedPdf1D) -> float:
    """Largest nodal ``|p - q|``."""
    _same_grid(p, q)
    return float(np.max(np.abs(p.values - q.values)))


def tabulate(f: Callable, grid: Grid1D, normalized: bool = False) -> GriddedPdf1D:
    """Evaluate a vectorized density ``f`` at the nodes of ``grid``."""
    p = GriddedPdf1D(grid, np.asarray(f(grid.nodes), dtype=float))
    return normalize(p) if normalized else p


def tabulate_2d(f: Callable, grid: Grid2D, normalized: bool = False) -> GriddedPdf2D:
    X, Y = grid.mesh()
    p = GriddedPdf2D(grid, np.asarray(f(X, Y), dtype=float) * np.ones(grid.shape))
    return normalize(p) if normalized else p


# ---------------------------------------------------------------- sampling

def bilinear(p: GriddedPdf2D, x, y) -> np.ndarray:
    """Bilinear interpolation of cell-center values, clamped at the outer half cells."""
    gx, gy = p.grid.gx, p.grid.gy
    v = p.values
    fx = np.clip((np.asarray(x, dtype=float) - gx.lo) / gx.h - 0.5, 0.0, gx.n - 1.0)
    fy = np.clip((np.asarray(y, dtype=float) - gy.lo) / gy.h - 0.5, 0.0, gy.n - 1.0)
    i = np.minimum(fx.astype(np.intp), gx.n - 2)
    j = np.minimum(fy.astype(np.intp), gy.n - 2)
    tx = fx - i
    ty = fy - j
    return ((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
            + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])


def rejection_sample_2d(p: GriddedPdf2D, n: int, seed: int) -> SampleSet:
    """Draw ``n`` points from the bilinear interpolant of ``p``.

    Proposals are uniform on the grid support with envelope ``max(values)``.
    Batches are sized from ``n`` and the acceptance rate only, so the result
    depends on ``seed`` alone.
    """
    vmax = float(np.max(p.values))
    if not np.isfinite(vmax) or vmax <= 0:
        raise DegenerateEnvelope(f"envelope height {vmax}")
    gx, gy = p.grid.gx, p.grid.gy
    area = (gx.hi - gx.lo) * (gy.hi - gy.lo)
    rate = min(1.0, max(p.mass() / (vmax * area), 1e-6))
    rng = make_rng(seed)
    out = np.empty((int(n), 2))
    k = 0
    while k < n:
        m = int(min(max(1.3 * (n - k) / rate, 1024), 4_000_000))
        u = rng.random((m, 3))
        x = gx.lo + (gx.hi - gx.lo) * u[:, 0]
        y = gy.lo + (gy.hi - gy.lo) * u[:, 1]
        acc = u[:, 2] * vmax < bilinear(p, x, y)
        take = min(int(acc.sum()), n - k)
        out[k:k + take, 0] = x[acc][:take]
        out[k:k + take, 1] = y[acc][:take]
        k += take
    return SampleSet(out, seed, support=((gx.lo, gx.hi), (gy.lo, gy.hi)))


def histogram_to_pdf(s: SampleSet, grid: Grid1D) -> GriddedPdf1D:
    """Normalized bin-count density of 1-D samples on ``grid``."""
    x = s.column(0) if isinstance(s, SampleSet) else np.asarray(s, dtype=float)
    bad = int(((x < grid.lo) | (x > grid.hi) | ~np.isfinite(x)).sum())
    if bad:
        raise OutOfSupport(bad)
    if x.size == 0:
        raise ZeroMass("no samples")
    counts, _ = np.histogram(x, bins=grid.edges)
    return GriddedPdf1D(grid, counts / (x.size * grid.h))


# ---------------------------------------------------------------- quadrature

def quad_1d(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
            max_depth: int = 50, strict: bool = True):
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``.

    Parameters
    ----------
    f : callable
        Scalar integrand, finite on ``[a, b]``.
    tol : float
        Absolute error target.
    strict : bool
        If True a depth overrun raises :class:`MaxDepthExceeded` carrying the
        partial value; otherwise ``(value, converged)`` is returned.
    """
    if b < a:
        raise ValueError("quad_1d needs a <= b")
    value, ok = _backend.kernels.simpson(f, float(a), float(b), float(tol), int(max_depth))
    if strict:
        if not ok:
            raise MaxDepthExceeded(value)
        return value
    return value, ok


__all__ = [
    "Q_MIN", "Grid1D", "Grid2D", "GriddedPdf1D", "GriddedPdf2D", "SampleSet",
    "make_rng", "normalize", "integrate", "l1_distance", "sup_distance",
    "tabulate", "tabulate_2d", "bilinear", "rejection_sample_2d",
    "histogram_to_pdf", "quad_1d",
]
