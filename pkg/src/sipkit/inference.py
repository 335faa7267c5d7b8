"""Parameter-layer inference for the product model.

A *family* maps a parameter pair ``theta`` to two independent marginals on
[0, 1]. Given information about ``Q = Z1 * Z2`` the parameters are fitted by
L1 pushforward matching or by a grid posterior whose likelihood is the
pushforward density of ``Q``. The module also carries the change of
variables on parameter grids, the data-consistent update of a gridded law
of ``Z`` and posterior predictive densities of a second quantity.

Parameter grids use ``linspace`` nodes (both bounds are nodes), so a
parameter box such as ``[0.25, 0.75]**2`` is covered exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from .density import (
    Grid1D,
    Grid2D,
    GriddedPdf1D,
    GriddedPdf2D,
    SampleSet,
    integrate,
    l1_distance,
    normalize,
)
from .errors import (
    AllCellsFailed,
    NonMonotoneMap,
    NonpositiveDensity,
    SipkitError,
    SupportViolation,
    ZeroMass,
)
from .maxent import lambda_from_mu
from .product_model import (
    PRODUCT,
    PUSHFORWARD_TOL,
    ForwardMap,
    MapKind,
    Marginal,
    forward_sample,
    monte_carlo_pushforward,
    product_density_values,
    propagate_product_pdf,
    propagate_sum_pdf,
    sample_independent,
)

LIK_FLOOR = 1e-12
LIK_NODES = 500
_LOGIT_SPAN = 16.0


# ---------------------------------------------------------------- families

@dataclass(frozen=True)
class Family:
    """Parameterized pair of independent marginals.

    ``symmetric`` marks families whose two coordinates use the same
    builder, so the law of the product at ``(a, b)`` equals the one at
    ``(b, a)`` and pushforward tables can be shared.
    """

    name: str
    build: Callable[[Sequence[float]], Tuple[Marginal, Marginal]]
    param_names: Tuple[str, str]
    symmetric: bool = True

    def __call__(self, theta):
        return self.build(theta)


def _maxent(theta):
    return Marginal.texp(lambda_from_mu(theta[0])), Marginal.texp(lambda_from_mu(theta[1]))


def _symbeta(theta):
    return Marginal.beta(theta[0], theta[0]), Marginal.beta(theta[1], theta[1])


def _betaone(theta):
    return Marginal.beta(1.0, theta[0]), Marginal.beta(1.0, theta[1])


def _scaled_betaone(theta):
    # (nu, lam): Z1 = lam * B1, Z2 = B2 / lam with B_i ~ Beta(1, nu)
    nu, lam = float(theta[0]), float(theta[1])
    return (Marginal("beta", 1.0, nu, scale=lam), Marginal("beta", 1.0, nu, scale=1.0 / lam))


MAXENT_FAMILY = Family("maxent", _maxent, ("mu1", "mu2"))
SYMMETRIC_BETA_FAMILY = Family("symmetric_beta", _symbeta, ("nu1", "nu2"))
BETA_ONE_FAMILY = Family("beta_one", _betaone, ("nu1", "nu2"))
#: flat in ``lam``: the product law does not depend on it
SCALED_BETA_FAMILY = Family("scaled_beta", _scaled_betaone, ("nu", "lam"), symmetric=False)

FAMILIES = {f.name: f for f in (MAXENT_FAMILY, SYMMETRIC_BETA_FAMILY, BETA_ONE_FAMILY,
                                SCALED_BETA_FAMILY)}


# ---------------------------------------------------------------- parameter grids

@dataclass(frozen=True)
class ParamGrid:
    """Tensor grid of ``n[k]`` equally spaced nodes from ``lo[k]`` to ``hi[k]``."""

    names: Tuple[str, str]
    lo: Tuple[float, float]
    hi: Tuple[float, float]
    n: Tuple[int, int] = (51, 51)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        for a, b, m in zip(self.lo, self.hi, self.n):
            if not a < b or m < 2:
                raise ValueError("each axis needs lo < hi and at least 2 nodes")

    def axis(self, k: int) -> np.ndarray:
        return np.linspace(self.lo[k], self.hi[k], self.n[k])

    @property
    def axes(self):
        return self.axis(0), self.axis(1)

    @property
    def spacing(self):
        return tuple((b - a) / (m - 1) for a, b, m in zip(self.lo, self.hi, self.n))

    @property
    def cell_area(self) -> float:
        h1, h2 = self.spacing
        return h1 * h2

    @property
    def shape(self):
        return self.n

    def mesh(self):
        return np.meshgrid(*self.axes, indexing="ij")

    def node(self, i: int, j: int):
        return float(self.axis(0)[i]), float(self.axis(1)[j])

    def cell_of(self, theta) -> Tuple[int, int]:
        """Index of the node whose cell (half a spacing each side) contains ``theta``."""
        idx = []
        for k in range(2):
            r = (float(theta[k]) - self.lo[k]) / self.spacing[k]
            idx.append(int(np.clip(np.floor(r + 0.5), 0, self.n[k] - 1)))
        return tuple(idx)

    def to_dict(self):
        return {"names": list(self.names), "lo": list(self.lo), "hi": list(self.hi),
                "n": list(self.n)}


def uniform_prior(grid: ParamGrid) -> np.ndarray:
    """Constant density on the grid, normalized (sum times cell area = 1)."""
    p = np.ones(grid.shape)
    return p / (p.sum() * grid.cell_area)


def beta_one_prior(grid: ParamGrid) -> np.ndarray:
    """Prior of ``(nu1, nu2)`` induced by uniform means: ``prod 1 / (nu_k + 1)**2``.

    The published constant is ignored and the density is renormalized over
    the grid.
    """
    A, B = grid.mesh()
    p = 1.0 / ((A + 1.0) ** 2 * (B + 1.0) ** 2)
    return p / (p.sum() * grid.cell_area)


# ---------------------------------------------------------------- pushforward tables

def _logit(q):
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(q) - np.log1p(-q)


class PushforwardTable:
    """Cache of product-pushforward log densities on a logit-spaced node set.

    For each parameter pair the density of ``Z1 * Z2`` is evaluated at
    ``n_nodes`` points equally spaced in ``logit(q)`` on ``[-16, 16]`` and a
    cubic spline of ``log f`` in ``logit(q)`` interpolates between them
    (linear extrapolation beyond the ends). Power-law behavior at both ends
    of (0, 1) becomes linear in these coordinates.
    """

    def __init__(self, family: Family, n_nodes: int = LIK_NODES, tol: float = PUSHFORWARD_TOL):
        self.family = family
        self.n_nodes = int(n_nodes)
        self.tol = tol
        self.x = np.linspace(-_LOGIT_SPAN, _LOGIT_SPAN, self.n_nodes)
        self.q = 1.0 / (1.0 + np.exp(-self.x))
        self._cache: Dict[Tuple[float, float], Tuple[CubicSpline, bool]] = {}

    def _key(self, theta):
        a, b = float(theta[0]), float(theta[1])
        return (min(a, b), max(a, b)) if self.family.symmetric else (a, b)

    def spline(self, theta):
        """``(spline, converged)`` for ``theta``; raises for invalid parameters."""
        key = self._key(theta)
        hit = self._cache.get(key)
        if hit is None:
            m1, m2 = self.family(key)
            vals, ok = product_density_values(m1, m2, self.q, tol=self.tol, strict=False)
            logv = np.log(np.maximum(vals, LIK_FLOOR))
            hit = (CubicSpline(self.x, logv, bc_type="natural", extrapolate=True), bool(ok.all()))
            self._cache[key] = hit
        return hit

    def density(self, theta, q) -> np.ndarray:
        sp, _ = self.spline(theta)
        x = np.clip(_logit(q), -60.0, 60.0)
        lo, hi = self.x[0], self.x[-1]
        y = sp(np.clip(x, lo, hi))
        # linear continuation of the end slopes
        y = np.where(x < lo, y + sp(lo, 1) * (x - lo), y)
        y = np.where(x > hi, y + sp(hi, 1) * (x - hi), y)
        return np.exp(y)

    def __len__(self):
        return len(self._cache)


def _sample_values(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.column(0)
    return np.asarray(samples, dtype=float).ravel()


def log_likelihood(family: Family, theta, samples, table: Optional[PushforwardTable] = None) -> float:
    """``sum_i log f_Q(q_i | theta)`` with densities floored at ``1e-12``.

    Samples outside (0, 1] have zero pushforward density and raise
    :class:`NonpositiveDensity` naming the first offending index.
    """
    q = _sample_values(samples)
    if q.size == 0:
        return 0.0
    bad = np.flatnonzero(~((q > 0) & (q <= 1)))
    if bad.size:
        raise NonpositiveDensity(bad[0])
    table = PushforwardTable(family) if table is None else table
    f = table.density(theta, q)
    if not np.all(np.isfinite(f)):
        raise NonpositiveDensity(int(np.flatnonzero(~np.isfinite(f))[0]))
    return float(np.sum(np.log(np.maximum(f, LIK_FLOOR))))


# ---------------------------------------------------------------- posterior

@dataclass(frozen=True, eq=False)
class ParamPosterior:
    """Grid posterior: densities with respect to the parameter cell area."""

    grid: ParamGrid
    prior: np.ndarray
    loglik: np.ndarray
    posterior: np.ndarray
    map_index: Tuple[int, int]
    n_samples: int = 0
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def map_estimate(self):
        return self.grid.node(*self.map_index)

    @property
    def weights(self) -> np.ndarray:
        """Probability mass per node."""
        return self.posterior * self.grid.cell_area

    def mean(self) -> np.ndarray:
        A, B = self.grid.mesh()
        w = self.weights
        return np.array([np.sum(w * A), np.sum(w * B)])

    def covariance(self) -> np.ndarray:
        A, B = self.grid.mesh()
        w = self.weights
        m = self.mean()
        da, db = A - m[0], B - m[1]
        return np.array([[np.sum(w * da * da), np.sum(w * da * db)],
                         [np.sum(w * da * db), np.sum(w * db * db)]])

    def marginal(self, k: int) -> np.ndarray:
        """Marginal density of coordinate ``k`` on its axis."""
        h = self.grid.spacing[1 - k]
        return self.posterior.sum(axis=1 - k) * h


def _finish(grid, prior, ll, n_samples, seed, meta=None) -> ParamPosterior:
    prior = np.asarray(prior, dtype=float)
    finite = np.isfinite(ll)
    if not finite.any():
        raise AllCellsFailed("likelihood failed at every grid node")
    lp = np.where(finite & (prior > 0), ll, -np.inf)
    if not np.isfinite(lp).any():
        raise ZeroMass("prior vanishes wherever the likelihood is defined")
    w = np.exp(lp - lp.max()) * prior
    post = w / (w.sum() * grid.cell_area)
    idx = np.unravel_index(int(np.argmax(post)), post.shape)
    return ParamPosterior(grid, prior, np.asarray(ll, dtype=float), post,
                          (int(idx[0]), int(idx[1])), int(n_samples), seed, meta or {})


def posterior(family: Family, prior, samples, grid: ParamGrid,
              table: Optional[PushforwardTable] = None) -> ParamPosterior:
    """Grid posterior ``exp(loglik - max) * prior``, normalized over the grid.

    ``prior`` is a density array on ``grid`` (or a callable of the two
    meshes). Nodes whose likelihood cannot be evaluated are excluded and
    listed in ``meta['failed']``. The MAP is the first maximizer in
    row-major order.
    """
    if callable(prior):
        prior = prior(*grid.mesh())
    prior = np.asarray(prior, dtype=float)
    if prior.shape != grid.shape:
        raise ValueError("prior does not match the parameter grid")
    q = _sample_values(samples)
    seed = samples.seed if isinstance(samples, SampleSet) else None
    table = PushforwardTable(family) if table is None else table
    A, B = grid.mesh()
    ll = np.full(grid.shape, -np.inf)
    failed = []
    for i in range(grid.n[0]):
        for j in range(grid.n[1]):
            try:
                ll[i, j] = log_likelihood(family, (A[i, j], B[i, j]), q, table)
            except (SipkitError, ValueError):
                failed.append((i, j))
    return _finish(grid, prior, ll, q.size, seed, {"failed": failed, "family": family.name})


# ---------------------------------------------------------------- L1 fit

@dataclass(frozen=True, eq=False)
class L1Fit:
    grid: ParamGrid
    errors: np.ndarray
    best_index: Tuple[int, int]
    failed: list

    @property
    def theta(self):
        return self.grid.node(*self.best_index)

    @property
    def min_error(self) -> float:
        return float(self.errors[self.best_index])


def l1_fit(family: Family, f_Q_target: GriddedPdf1D, grid: ParamGrid,
           tol: float = PUSHFORWARD_TOL) -> L1Fit:
    """L1 distance between ``f_Q_target`` and the family's pushforward at every node.

    Both densities are normalized on the target grid. Nodes where the family
    or the pushforward fails carry ``nan`` and are skipped by the argmin.
    """
    target = normalize(f_Q_target)
    A, B = grid.mesh()
    err = np.full(grid.shape, np.nan)
    failed = []
    seen: Dict[Tuple[float, float], float] = {}
    for i in range(grid.n[0]):
        for j in range(grid.n[1]):
            a, b = float(A[i, j]), float(B[i, j])
            key = (min(a, b), max(a, b)) if family.symmetric else (a, b)
            if key in seen:
                err[i, j] = seen[key]
                continue
            try:
                m1, m2 = family(key)
                p = propagate_product_pdf(m1, m2, target.grid, tol=tol)
                err[i, j] = l1_distance(p, target)
            except (SipkitError, ValueError):
                failed.append((i, j))
            seen[key] = err[i, j]
    if np.all(np.isnan(err)):
        raise AllCellsFailed("pushforward failed at every grid node")
    best = np.unravel_index(int(np.nanargmin(err)), err.shape)
    return L1Fit(grid, err, (int(best[0]), int(best[1])), failed)


# ---------------------------------------------------------------- reparameterization

@dataclass(frozen=True)
class CoordinateMap:
    """Monotone scalar bijection ``phi = forward(theta)`` with ``inverse`` and ``d theta / d phi``."""

    forward: Callable
    inverse: Callable
    dinverse: Callable


IDENTITY = CoordinateMap(lambda t: np.asarray(t, float), lambda p: np.asarray(p, float),
                         lambda p: np.ones_like(np.asarray(p, float)))

#: ``nu = 1 / mu - 1`` (mean of Beta(1, nu) is ``1 / (1 + nu)``)
MU_TO_NU = CoordinateMap(lambda m: 1.0 / np.asarray(m, float) - 1.0,
                         lambda v: 1.0 / (1.0 + np.asarray(v, float)),
                         lambda v: -1.0 / (1.0 + np.asarray(v, float)) ** 2)


def reparameterize(post: ParamPosterior, maps: Sequence[CoordinateMap],
                   n: Optional[Tuple[int, int]] = None, names=None) -> ParamPosterior:
    """Transform a grid posterior to ``phi_k = maps[k].forward(theta_k)``.

    The new grid spans the image of the old one with ``n`` nodes per axis
    (default: same as before). Densities are interpolated linearly at
    ``theta(phi)`` and multiplied by ``|d theta_1/d phi_1 * d theta_2/d phi_2|``.
    The pre-normalization mass is kept in ``meta['mass']``.
    """
    g = post.grid
    n = g.n if n is None else tuple(n)
    lo, hi = [], []
    for k, m in enumerate(maps):
        ax = g.axis(k)
        img = np.asarray(m.forward(ax), dtype=float)
        d = np.diff(img)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise NonMonotoneMap(f"map {k} is not strictly monotone on the grid range")
        back = np.asarray(m.inverse(img), dtype=float)
        if not np.allclose(back, ax, rtol=1e-9, atol=1e-12):
            raise NonMonotoneMap(f"inverse of map {k} does not invert forward")
        lo.append(float(img.min()))
        hi.append(float(img.max()))
    names = names or tuple(f"phi{k + 1}" for k in range(2))
    pg = ParamGrid(names, lo, hi, n)
    P1, P2 = pg.mesh()
    T1 = np.clip(maps[0].inverse(P1), g.lo[0], g.hi[0])
    T2 = np.clip(maps[1].inverse(P2), g.lo[1], g.hi[1])
    jac = np.abs(maps[0].dinverse(P1) * maps[1].dinverse(P2))
    pts = np.stack([T1.ravel(), T2.ravel()], axis=1)

    def pull(arr):
        f = RegularGridInterpolator(g.axes, arr, method="linear")
        return f(pts).reshape(pg.shape)

    dens = pull(post.posterior) * jac
    prior = pull(post.prior) * jac
    ll = pull(np.where(np.isfinite(post.loglik), post.loglik, -1e300))
    mass = float(dens.sum() * pg.cell_area)
    out = dens / mass
    pm = prior.sum() * pg.cell_area
    prior = prior / pm if pm > 0 else prior
    idx = np.unravel_index(int(np.argmax(out)), out.shape)
    meta = dict(post.meta)
    meta["mass"] = mass
    return ParamPosterior(pg, prior, ll, out, (int(idx[0]), int(idx[1])), post.n_samples,
                          post.seed, meta)


def box_mass(post: ParamPosterior, box) -> float:
    """Posterior mass of ``[a1, b1] x [a2, b2]`` (nodes weighted by cell overlap)."""
    g = post.grid
    ws = []
    for k, (a, b) in enumerate(box):
        h = g.spacing[k]
        c = g.axis(k)
        lo = np.maximum(c - 0.5 * h, a)
        hi = np.minimum(c + 0.5 * h, b)
        ws.append(np.clip(hi - lo, 0.0, None))
    return float(ws[0] @ post.posterior @ ws[1])


# ---------------------------------------------------------------- data-consistent update

@dataclass(frozen=True, eq=False)
class DataConsistentResult:
    posterior: GriddedPdf2D
    ratio: np.ndarray
    pushforward: GriddedPdf1D


def _bin_masses(f: GriddedPdf1D, grid: Grid1D) -> np.ndarray:
    e = grid.edges
    out = np.zeros(grid.n)
    for k in range(grid.n):
        a, b = max(e[k], f.grid.lo), min(e[k + 1], f.grid.hi)
        if b > a:
            out[k] = integrate(f, (a, b))
    return out


def data_consistent_update(prior_z: GriddedPdf2D, f_Q_obs: GriddedPdf1D, fmap: ForwardMap = PRODUCT,
                           n_sub: int = 10, n_bins: int = 500, support_tol: float = 1e-3,
                           return_details: bool = False):
    """Reweight ``prior_z`` by ``f_Q_obs(Q(z)) / f_Q^prior(Q(z))``.

    The prior pushforward is a mass-weighted histogram (``n_bins`` bins on
    the map's range) built from ``n_sub x n_sub`` stratified points in every
    prior cell, each carrying an equal share of the cell's mass. The ratio
    is taken bin by bin (observed bin mass over prior bin mass), applied to
    every point, and the cell masses are collected again, so the update's
    own pushforward reproduces the observed bin masses.

    Observed mass that falls in bins the prior never reaches is dropped; if
    it exceeds ``support_tol`` a :class:`SupportViolation` is raised.
    """
    g = prior_z.grid
    k = int(n_sub)
    off = (np.arange(k) + 0.5) / k
    x = (g.gx.edges[:-1, None] + g.gx.h * off[None, :]).ravel()
    y = (g.gy.edges[:-1, None] + g.gy.h * off[None, :]).ravel()
    X, Y = np.meshgrid(x, y, indexing="ij")
    q = fmap(X, Y)
    pw = prior_z.values if prior_z.weights is None else prior_z.values * prior_z.weights
    m = np.repeat(np.repeat(pw * g.cell_area, k, axis=0), k, axis=1) / (k * k)
    if m.sum() <= 0:
        raise ZeroMass("prior has no mass")
    m = m / m.sum()

    qlo, qhi = fmap.range
    qgrid = Grid1D(qlo, qhi, n_bins)
    b = np.clip(((q - qlo) / qgrid.h).astype(np.intp), 0, n_bins - 1)
    pf = np.bincount(b.ravel(), weights=m.ravel(), minlength=n_bins)
    obs = _bin_masses(f_Q_obs, qgrid)
    tot = obs.sum()
    if tot <= 0:
        raise ZeroMass("observed density has no mass on the map's range")
    obs = obs / tot
    empty = pf <= 0
    lost = float(obs[empty].sum())
    if lost > support_tol:
        raise SupportViolation(f"observed mass {lost:.3g} where the prior pushforward vanishes")
    ratio = np.where(empty, 0.0, obs / np.where(empty, 1.0, pf))
    w = m * ratio[b]
    cells = w.reshape(g.gx.n, k, g.gy.n, k).sum(axis=(1, 3))
    post = normalize(GriddedPdf2D(g, cells / g.cell_area))
    if not return_details:
        return post
    return DataConsistentResult(post, ratio, GriddedPdf1D(qgrid, pf / qgrid.h))


# ---------------------------------------------------------------- samples and predictives

def true_law_samples(n: int, seed: int, fmap: ForwardMap = PRODUCT) -> SampleSet:
    """``n`` draws of ``fmap(Z1, Z2)`` with ``Z1, Z2`` independent uniform."""
    u = Marginal.uniform()
    return forward_sample(fmap, sample_independent(u, u, n, seed))


def _component(m1, m2, fmap: ForwardMap, grid: Grid1D, n_mc: int, seed: int) -> GriddedPdf1D:
    if fmap.kind is MapKind.Sum:
        return propagate_sum_pdf(m1, m2, grid)
    if fmap.kind is MapKind.Product:
        return propagate_product_pdf(m1, m2, grid)
    return monte_carlo_pushforward(m1, m2, fmap, grid, n_mc, seed)


def posterior_predictive(post: ParamPosterior, family: Family, target_map: ForwardMap,
                         grid: Grid1D, min_weight: float = 1e-12, n_mc: int = 200_000,
                         seed: int = 0, cache: Optional[dict] = None) -> GriddedPdf1D:
    """Mixture ``sum_nodes w(theta) f(q | theta)`` of conditional pushforwards.

    ``Sum`` and ``Product`` components are computed by quadrature, other
    maps by fixed-seed Monte Carlo. Nodes with mass below ``min_weight`` are
    skipped; the mixture is renormalized on ``grid``. Passing the same
    ``cache`` dict to several calls reuses components across posteriors.
    """
    w = post.weights
    A, B = post.grid.mesh()
    acc = np.zeros(grid.n)
    cache = {} if cache is None else cache
    tag = (family.name, target_map.kind, grid.lo, grid.hi, grid.n, n_mc, seed)
    for i, j in zip(*np.nonzero(w > min_weight)):
        a, b = float(A[i, j]), float(B[i, j])
        key = tag + ((min(a, b), max(a, b)) if family.symmetric else (a, b))
        if key not in cache:
            m1, m2 = family(key[-2:])
            cache[key] = _component(m1, m2, target_map, grid, n_mc, seed).values
        acc += w[i, j] * cache[key]
    return normalize(GriddedPdf1D(grid, acc))


def predictive_grid(fmap: ForwardMap, n: int = 200) -> Grid1D:
    lo, hi = fmap.range
    return Grid1D(lo, hi, n)


def cell_pushforward_sum(P: np.ndarray) -> GriddedPdf1D:
    """Law of ``Z1 + Z2`` for cell probabilities ``P`` on an ``n x n`` unit-square grid.

    Each cell's mass is assigned to its center sum ``(i + j + 1) / n``; the
    result lives on the ``2n - 1`` cells of width ``1/n`` centered there.
    """
    n = P.shape[0]
    if P.shape != (n, n):
        raise ValueError("need a square cell table")
    S = np.zeros(2 * n - 1)
    i, j = np.indices(P.shape)
    np.add.at(S, (i + j).ravel(), P.ravel())
    grid = Grid1D(0.5 / n, 2.0 - 0.5 / n, 2 * n - 1)
    return normalize(GriddedPdf1D(grid, S / grid.h))


def cell_probability_below(P: np.ndarray, fmap: ForwardMap, level: float) -> float:
    """Mass of cells whose center satisfies ``fmap(center) <= level``."""
    n, m = P.shape
    g = Grid2D.unit_square(n, m)
    X, Y = g.mesh()
    return float(P[fmap(X, Y) <= level].sum() / P.sum())


__all__ = [
    "Family", "MAXENT_FAMILY", "SYMMETRIC_BETA_FAMILY", "BETA_ONE_FAMILY", "SCALED_BETA_FAMILY",
    "FAMILIES", "ParamGrid", "uniform_prior", "beta_one_prior", "PushforwardTable",
    "log_likelihood", "ParamPosterior", "posterior", "L1Fit", "l1_fit", "CoordinateMap",
    "IDENTITY", "MU_TO_NU", "reparameterize", "box_mass", "DataConsistentResult",
    "data_consistent_update", "true_law_samples", "posterior_predictive", "predictive_grid",
    "cell_pushforward_sum", "cell_probability_below", "LIK_FLOOR", "LIK_NODES",
]
