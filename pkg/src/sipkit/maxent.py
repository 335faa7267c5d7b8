"""Maximum-entropy densities under moment constraints.

With constraints ``E[g_k(Z)] = mu_k`` the entropy maximizer is the
exponential family ``exp(sum_k lam_k g_k(z)) / Z(lam)``. For first moments
of independent coordinates on [0, 1] each marginal is a truncated
exponential with ``mu(lam) = 1 / (1 - exp(-lam)) - 1 / lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .density import Grid1D, Grid2D, GriddedPdf1D, GriddedPdf2D
from .errors import Infeasible, MaxIterations, OutOfRange
from .product_model import Marginal

_SERIES_CUT = 1e-4


def mu_from_lambda(lam: float) -> float:
    """Mean of the density proportional to ``exp(lam z)`` on [0, 1]."""
    lam = float(lam)
    if abs(lam) < _SERIES_CUT:
        l2 = lam * lam
        return 0.5 + lam / 12.0 - lam * l2 / 720.0 + lam * l2 * l2 / 30240.0
    if lam > 0:
        return 1.0 / -math.expm1(-lam) - 1.0 / lam
    # 1/(1 - e^{-lam}) = e^{lam}/expm1(lam), stable for lam < 0
    return math.exp(lam) / math.expm1(lam) - 1.0 / lam


def lambda_from_mu(mu: float, tol: float = 1e-12) -> float:
    """Inverse of :func:`mu_from_lambda` by bracketed root finding."""
    mu = float(mu)
    if not 0.0 < mu < 1.0:
        raise OutOfRange(f"mu={mu} must lie in (0, 1)")
    if abs(mu - 0.5) <= tol:
        return 0.0
    # mu(lam) ~ 1 - 1/lam for large lam
    if mu > 0.5:
        lo, hi = 0.0, max(2.0 / (1.0 - mu), 1.0)
    else:
        lo, hi = -max(2.0 / mu, 1.0), 0.0
    return brentq(lambda x: mu_from_lambda(x) - mu, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                  maxiter=500)


def maxent_marginal(mu: float) -> Marginal:
    """Truncated-exponential marginal on [0, 1] with mean ``mu``."""
    return Marginal.texp(lambda_from_mu(mu))


@dataclass(frozen=True, eq=False)
class IndependentMaxEnt:
    """Closed-form independent first-moment maxent law."""

    mu: Tuple[float, float]
    lambdas: Tuple[float, float]
    marginals: Tuple[Marginal, Marginal]
    pdf: GriddedPdf2D

    def density(self, z1, z2):
        return self.marginals[0].pdf(z1) * self.marginals[1].pdf(z2)


def maxent_pdf_independent(mu1: float, mu2: float, grid: Optional[Grid2D] = None) -> IndependentMaxEnt:
    """Product exponential density on [0, 1]**2 with first moments ``(mu1, mu2)``.

    The returned object carries the closed-form marginals (for pushforward
    quadrature) and a tabulation on ``grid`` (400 x 400 by default). The
    tabulation holds the exact density values and is not renormalized on the
    grid.
    """
    grid = Grid2D.unit_square(400) if grid is None else grid
    m1, m2 = maxent_marginal(mu1), maxent_marginal(mu2)
    X, Y = grid.mesh()
    vals = m1.pdf(X) * m2.pdf(Y)
    return IndependentMaxEnt((float(mu1), float(mu2)), (m1.a, m2.a), (m1, m2),
                             GriddedPdf2D(grid, vals))


# ---------------------------------------------------------------- general solver

@dataclass(frozen=True)
class Constraint:
    name: str
    g: Callable
    target: float


def first_moment_constraints(mu1: float, mu2: float):
    return [Constraint("z1", lambda z1, z2: z1, mu1), Constraint("z2", lambda z1, z2: z2, mu2)]


Domain = Union[Grid1D, Grid2D]


def _quadrature(domain: Domain, rule: str):
    """Quadrature points and weights on the domain cells.

    ``gauss2`` uses two Gauss-Legendre points per cell and axis (fourth order);
    ``midpoint`` uses the cell centers.
    """
    def axis(g: Grid1D):
        if rule == "midpoint":
            return g.nodes, np.full(g.n, g.h)
        c = g.nodes
        d = 0.5 * g.h / math.sqrt(3.0)
        x = np.column_stack([c - d, c + d]).ravel()
        return x, np.full(2 * g.n, 0.5 * g.h)

    if isinstance(domain, Grid1D):
        x, w = axis(domain)
        return (x,), w
    x, wx = axis(domain.gx)
    y, wy = axis(domain.gy)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return (X.ravel(), Y.ravel()), np.outer(wx, wy).ravel()


@dataclass(frozen=True, eq=False)
class MaxEntModel:
    """Constraint set, targets and (once solved) Lagrange multipliers."""

    domain: Domain
    constraints: Tuple[Constraint, ...]
    lambdas: np.ndarray = None
    tol: float = 1e-10
    rule: str = "gauss2"
    iterations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        lam = np.zeros(len(self.constraints)) if self.lambdas is None else np.asarray(self.lambdas, float)
        if lam.shape != (len(self.constraints),):
            raise ValueError("one multiplier per constraint")
        lam = lam.copy()
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def targets(self) -> np.ndarray:
        return np.array([c.target for c in self.constraints])

    @property
    def names(self):
        return [c.name for c in self.constraints]

    def _features(self, pts):
        return np.stack([np.broadcast_to(np.asarray(c.g(*pts), float), pts[0].shape)
                         for c in self.constraints])

    def log_partition(self, lam=None):
        lam = self.lambdas if lam is None else lam
        pts, w = _quadrature(self.domain, self.rule)
        G = self._features(pts)
        e = lam @ G
        m = e.max()
        return m + math.log(np.sum(w * np.exp(e - m)))

    def density(self, *z):
        """Normalized density at arbitrary points of the domain."""
        z = [np.asarray(v, dtype=float) for v in z]
        G = np.stack([np.broadcast_to(np.asarray(c.g(*z), float), np.broadcast(*z).shape)
                      for c in self.constraints])
        return np.exp(np.tensordot(self.lambdas, G, axes=1) - self.log_partition())

    def pdf(self) -> Union[GriddedPdf1D, GriddedPdf2D]:
        """Tabulation of the density at the domain's cell centers."""
        if isinstance(self.domain, Grid1D):
            return GriddedPdf1D(self.domain, self.density(self.domain.nodes))
        X, Y = self.domain.mesh()
        return GriddedPdf2D(self.domain, self.density(X, Y))

    def residuals(self, lam=None) -> np.ndarray:
        lam = self.lambdas if lam is None else lam
        pts, w = _quadrature(self.domain, self.rule)
        G = self._features(pts)
        e = lam @ G
        p = w * np.exp(e - e.max())
        p /= p.sum()
        return G @ p - self.targets

    def to_dict(self):
        return {
            "constraint_names": self.names,
            "targets": self.targets.tolist(),
            "lambdas": self.lambdas.tolist(),
            "tol": self.tol,
            "domain": self.domain.to_dict(),
        }


def solve_multipliers(model: MaxEntModel, tol: float = 1e-10, max_iter: int = 100) -> MaxEntModel:
    """Damped Newton iteration on the convex dual ``log Z(lam) - lam . mu``.

    The gradient is the moment residual and the Hessian the covariance of
    the constraint functions under the current density. Each step is halved
    up to 40 times until the dual decreases.
    """
    pts, w = _quadrature(model.domain, model.rule)
    G = model._features(pts)
    mu = model.targets
    gmin, gmax = G.min(axis=1), G.max(axis=1)
    bad = (mu <= gmin) | (mu >= gmax)
    if bad.any():
        names = [model.constraints[k].name for k in np.flatnonzero(bad)]
        raise Infeasible(f"targets outside the range of {names}")

    def dual(lam):
        e = lam @ G
        m = e.max()
        return m + math.log(np.sum(w * np.exp(e - m))) - lam @ mu

    lam = np.zeros(len(mu))
    for it in range(1, max_iter + 1):
        e = lam @ G
        p = w * np.exp(e - e.max())
        p /= p.sum()
        mean = G @ p
        r = mean - mu
        if np.max(np.abs(r)) <= tol:
            return replace(model, lambdas=lam, tol=tol, iterations=it - 1)
        C = (G * p) @ G.T - np.outer(mean, mean)
        try:
            step = np.linalg.solve(C, r)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            raise Infeasible("singular constraint covariance")
        f0 = dual(lam)
        # near the optimum the dual decrease drops below roundoff in f0
        slack = 8 * np.finfo(float).eps * max(1.0, abs(f0))
        t = 1.0
        for _ in range(40):
            trial = lam - t * step
            if dual(trial) <= f0 + 1e-4 * t * (-(r @ step)) + slack:
                break
            t *= 0.5
        else:
            if np.linalg.cond(C) > 1e14:
                raise Infeasible("residual stagnated with a singular Hessian")
        lam = lam - t * step
    raise MaxIterations(f"no convergence in {max_iter} Newton steps; residual {np.max(np.abs(r)):.3g}")


def entropy(p: Union[GriddedPdf1D, GriddedPdf2D]) -> float:
    """``-int p log p`` by the midpoint rule (``0 log 0 = 0``)."""
    v = p.values
    h = p.grid.h if isinstance(p, GriddedPdf1D) else p.grid.cell_area
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)
    if p.weights is not None:
        t = t * p.weights
    return float(-np.sum(t) * h)


__all__ = [
    "mu_from_lambda", "lambda_from_mu", "maxent_marginal", "IndependentMaxEnt",
    "maxent_pdf_independent", "Constraint", "first_moment_constraints", "MaxEntModel",
    "solve_multipliers", "entropy",
]
