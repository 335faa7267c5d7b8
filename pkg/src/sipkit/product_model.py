"""Forward maps on the unit square and their pushforward densities.

The benchmark map is ``Q = Z1 * Z2``; ``Z1 + Z2``, ``Z1**2 + Z2**2`` and
``exp(-(Z1**2 + Z2**2))`` serve as validation maps. Independent marginals
on [0, 1] are described by :class:`Marginal`, which the compiled kernels
integrate directly. Plain callables are accepted too and go through
:func:`~sipkit.density.quad_1d`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import special

from . import _backend
from .density import (
    Q_MIN,
    Grid1D,
    GriddedPdf1D,
    SampleSet,
    histogram_to_pdf,
    make_rng,
    normalize,
    quad_1d,
)
from .errors import DimensionMismatch, MaxDepthExceeded, SupportError

PUSHFORWARD_TOL = 1e-8


# ---------------------------------------------------------------- marginals

@dataclass(frozen=True)
class Marginal:
    """A law on [0, 1]: ``uniform``, truncated exponential ``texp`` (rate ``a``) or ``beta(a, b)``.

    ``scale`` stretches the support to ``[0, scale]``; scaled marginals are
    only handled by the generic (callable) quadrature path.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    scale: float = 1.0

    _CODES = {"uniform": 0, "texp": 1, "beta": 2}

    def __post_init__(self):
        if self.kind not in self._CODES:
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        if self.kind == "beta" and not (self.a > 0 and self.b > 0):
            raise ValueError("beta parameters must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def texp(cls, lam: float):
        return cls("texp", float(lam))

    @classmethod
    def beta(cls, a: float, b: float):
        return cls("beta", float(a), float(b))

    @property
    def code(self):
        return (self._CODES[self.kind], float(self.a), float(self.b))

    @property
    def kernel_ready(self) -> bool:
        return self.scale == 1.0

    def _unit_pdf(self, z):
        z = np.asarray(z, dtype=float)
        inside = (z >= 0) & (z <= 1)
        if self.kind == "uniform":
            v = np.ones_like(z)
        elif self.kind == "texp":
            lam = self.a
            if abs(lam) < 1e-12:
                v = np.ones_like(z)
            elif lam > 0:
                v = lam * np.exp(-lam * (1 - z)) / -np.expm1(-lam)
            else:
                v = lam * np.exp(lam * z) / np.expm1(lam)
        else:
            with np.errstate(divide="ignore"):
                v = special.xlogy(self.a - 1, z) + special.xlog1py(self.b - 1, -z)
                v = np.exp(v - special.betaln(self.a, self.b))
        return np.where(inside, v, 0.0)

    def pdf(self, z):
        s = self.scale
        return self._unit_pdf(np.asarray(z, dtype=float) / s) / s

    def cdf(self, z):
        z = np.clip(np.asarray(z, dtype=float) / self.scale, 0.0, 1.0)
        if self.kind == "uniform":
            return z
        if self.kind == "texp":
            lam = self.a
            if abs(lam) < 1e-12:
                return z
            return np.expm1(lam * z) / np.expm1(lam)
        return special.betainc(self.a, self.b, z)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            z = u
        elif self.kind == "texp":
            lam = self.a
            z = u if abs(lam) < 1e-12 else np.log1p(u * np.expm1(lam)) / lam
        else:
            z = special.betaincinv(self.a, self.b, u)
        return np.clip(z, 0.0, 1.0) * self.scale

    def mean(self) -> float:
        if self.kind == "uniform":
            m = 0.5
        elif self.kind == "texp":
            from .maxent import mu_from_lambda

            m = mu_from_lambda(self.a)
        else:
            m = self.a / (self.a + self.b)
        return m * self.scale

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.ppf(rng.random(n))


MarginalLike = Union[Marginal, Callable]


# ---------------------------------------------------------------- forward maps

class MapKind(str, enum.Enum):
    Product = "Product"
    Sum = "Sum"
    SumOfSquares = "SumOfSquares"
    ExpNegSumOfSquares = "ExpNegSumOfSquares"


_RANGES = {
    MapKind.Product: (0.0, 1.0),
    MapKind.Sum: (0.0, 2.0),
    MapKind.SumOfSquares: (0.0, 2.0),
    MapKind.ExpNegSumOfSquares: (math.exp(-2.0), 1.0),
}


@dataclass(frozen=True)
class ForwardMap:
    """One of the four scalar maps of ``(z1, z2)``."""

    kind: MapKind

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind(self.kind))

    def __call__(self, z1, z2):
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        if self.kind is MapKind.Product:
            return z1 * z2
        if self.kind is MapKind.Sum:
            return z1 + z2
        r = z1 * z1 + z2 * z2
        if self.kind is MapKind.SumOfSquares:
            return r
        return np.exp(-r)

    @property
    def range(self):
        return _RANGES[self.kind]


PRODUCT = ForwardMap(MapKind.Product)
SUM = ForwardMap(MapKind.Sum)
SUM_OF_SQUARES = ForwardMap(MapKind.SumOfSquares)
EXP_NEG_SUM_OF_SQUARES = ForwardMap(MapKind.ExpNegSumOfSquares)


def forward_sample(fmap: ForwardMap, z: SampleSet) -> SampleSet:
    """Push 2-D samples through ``fmap``; order and seed are kept."""
    if z.dim != 2:
        raise DimensionMismatch(f"expected 2-D samples, got dim={z.dim}")
    return SampleSet(fmap(z.points[:, 0], z.points[:, 1]), z.seed)


# ---------------------------------------------------------------- closed forms

def _check_support(grid: Grid1D, lo: float, hi: float):
    if grid.lo < lo - 1e-15 or grid.hi > hi + 1e-15:
        raise SupportError(f"grid [{grid.lo}, {grid.hi}] outside [{lo}, {hi}]")


def product_uniform_density(q):
    """``-log q`` on (0, 1], zero elsewhere."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where((q > 0) & (q <= 1), -np.log(np.where(q > 0, q, 1.0)), 0.0)


def pdf_product_uniform(grid: Grid1D) -> GriddedPdf1D:
    """Tabulated ``-log q`` on a grid inside ``[Q_MIN, 1]``, renormalized."""
    _check_support(grid, Q_MIN, 1.0)
    return normalize(GriddedPdf1D(grid, product_uniform_density(grid.nodes)))


def sum_uniform_density(q):
    """Triangular density of ``Z1 + Z2`` for independent uniforms."""
    q = np.asarray(q, dtype=float)
    return np.clip(np.where(q <= 1.0, q, 2.0 - q), 0.0, None) * ((q >= 0) & (q <= 2))


def sumsquares_uniform_density(q):
    """Density of ``Z1**2 + Z2**2`` for independent uniforms."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    a = (q >= 0) & (q <= 1)
    out[a] = math.pi / 4
    b = (q > 1) & (q <= 2)
    out[b] = np.arcsin(1.0 / np.sqrt(q[b])) - math.pi / 4
    return np.clip(out, 0.0, None)


def pdf_sumsquares_uniform(grid: Grid1D) -> GriddedPdf1D:
    """Tabulated density of ``Z1**2 + Z2**2``; not renormalized (the closed form has unit mass)."""
    _check_support(grid, 0.0, 2.0)
    return GriddedPdf1D(grid, sumsquares_uniform_density(grid.nodes))


# ---------------------------------------------------------------- pushforwards

def _as_pdf(f: MarginalLike) -> Callable:
    return f.pdf if isinstance(f, Marginal) else f


def _both_kernel(f1, f2):
    return (isinstance(f1, Marginal) and isinstance(f2, Marginal)
            and f1.kernel_ready and f2.kernel_ready)


def product_density_values(f1: MarginalLike, f2: MarginalLike, q, tol=PUSHFORWARD_TOL,
                           strict=True):
    """Unnormalized density of ``Z1 * Z2`` at arbitrary points ``q`` in (0, 1)."""
    q = np.ascontiguousarray(q, dtype=float)
    if _both_kernel(f1, f2):
        vals, ok = _backend.kernels.product_pdf(q, *f1.code, *f2.code, tol=tol,
                                                threads=_backend.get_threads())
    else:
        p1, p2 = _as_pdf(f1), _as_pdf(f2)
        hi1 = f1.scale if isinstance(f1, Marginal) else 1.0
        hi2 = f2.scale if isinstance(f2, Marginal) else 1.0
        vals = np.zeros(q.size)
        ok = np.ones(q.size, dtype=bool)
        for i, qi in enumerate(q):
            lo = max(qi / hi2, Q_MIN * hi1, 1e-300)
            if not (0 < qi < hi1 * hi2) or lo >= hi1:
                continue

            def g(t, qi=qi):
                # clamp: exp(log(lo)) may round q / z1 just past the support end
                z1 = min(max(math.exp(t), lo), hi1)
                return float(p1(z1)) * float(p2(min(qi / z1, hi2)))

            vals[i], ok[i] = quad_1d(g, math.log(lo), math.log(hi1), tol=tol, strict=False)
    if strict and not np.all(ok):
        raise MaxDepthExceeded(vals, f"{int((~ok).sum())} pushforward nodes did not converge")
    return vals, ok


def propagate_product_pdf(f1: MarginalLike, f2: MarginalLike, grid: Grid1D,
                          tol: float = PUSHFORWARD_TOL, normalized: bool = True) -> GriddedPdf1D:
    """Pushforward density of ``Z1 * Z2`` for independent ``Z1 ~ f1``, ``Z2 ~ f2``.

    Evaluates ``int_q^1 f2(q / z1) f1(z1) dz1 / z1`` at every node. Nodes
    below ``2 * Q_MIN`` are linearly extrapolated from the first two nodes
    above it.
    """
    x = grid.nodes
    low = x < 2 * Q_MIN
    vals, _ = product_density_values(f1, f2, x[~low], tol=tol)
    out = np.zeros(grid.n)
    out[~low] = vals
    if low.any():
        xs, vs = x[~low][:2], vals[:2]
        slope = (vs[1] - vs[0]) / (xs[1] - xs[0])
        out[low] = np.clip(vs[0] + slope * (x[low] - xs[0]), 0.0, None)
    p = GriddedPdf1D(grid, out)
    return normalize(p) if normalized else p


def sum_density_values(f1: MarginalLike, f2: MarginalLike, q, tol=PUSHFORWARD_TOL, strict=True):
    """Unnormalized density of ``Z1 + Z2`` at points ``q`` in (0, 2)."""
    q = np.ascontiguousarray(q, dtype=float)
    if _both_kernel(f1, f2):
        vals, ok = _backend.kernels.sum_pdf(q, *f1.code, *f2.code, tol=tol,
                                            threads=_backend.get_threads())
    else:
        p1, p2 = _as_pdf(f1), _as_pdf(f2)
        vals = np.zeros(q.size)
        ok = np.ones(q.size, dtype=bool)
        for i, qi in enumerate(q):
            a, b = max(0.0, qi - 1.0), min(1.0, qi)
            if b <= a:
                continue
            vals[i], ok[i] = quad_1d(lambda z, qi=qi: float(p2(qi - z)) * float(p1(z)),
                                     a, b, tol=tol, strict=False)
    if strict and not np.all(ok):
        raise MaxDepthExceeded(vals, f"{int((~ok).sum())} pushforward nodes did not converge")
    return vals, ok


def propagate_sum_pdf(f1: MarginalLike, f2: MarginalLike, grid: Grid1D,
                      tol: float = PUSHFORWARD_TOL, normalized: bool = True) -> GriddedPdf1D:
    """Pushforward density of ``Z1 + Z2`` via ``int f2(q - z1) f1(z1) dz1`` over
    ``z1 in [max(0, q - 1), min(1, q)]``."""
    _check_support(grid, 0.0, 2.0)
    vals, _ = sum_density_values(f1, f2, grid.nodes, tol=tol)
    p = GriddedPdf1D(grid, vals)
    return normalize(p) if normalized else p


def sample_independent(f1: Marginal, f2: Marginal, n: int, seed: int) -> SampleSet:
    """Inverse-CDF draws of ``(Z1, Z2)`` with independent marginals."""
    rng = make_rng(seed)
    u = rng.random((int(n), 2))
    return SampleSet(np.column_stack([f1.ppf(u[:, 0]), f2.ppf(u[:, 1])]), seed)


def monte_carlo_pushforward(f1: Marginal, f2: Marginal, fmap: ForwardMap, grid: Grid1D,
                            n: int, seed: int) -> GriddedPdf1D:
    """Histogram density of ``fmap(Z1, Z2)`` from ``n`` independent draws."""
    q = forward_sample(fmap, sample_independent(f1, f2, n, seed))
    return histogram_to_pdf(q, grid)


def exp_qoi_reference(grid: Grid1D, n: int = 10**6, seed: int = 20240601) -> GriddedPdf1D:
    """Monte Carlo reference law of ``exp(-(Z1**2 + Z2**2))`` under the uniform law."""
    u = Marginal.uniform()
    return monte_carlo_pushforward(u, u, EXP_NEG_SUM_OF_SQUARES, grid, n, seed)


__all__ = [
    "Marginal", "MapKind", "ForwardMap", "PRODUCT", "SUM", "SUM_OF_SQUARES",
    "EXP_NEG_SUM_OF_SQUARES", "forward_sample", "product_uniform_density",
    "pdf_product_uniform", "sum_uniform_density", "sumsquares_uniform_density",
    "pdf_sumsquares_uniform", "product_density_values", "propagate_product_pdf",
    "sum_density_values", "propagate_sum_pdf", "sample_independent",
    "monte_carlo_pushforward", "exp_qoi_reference",
]
