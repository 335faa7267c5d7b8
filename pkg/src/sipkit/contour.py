"""Contour geometry and disintegration for ``Q = z1 * z2`` on the unit square.

Contours are indexed by the arc-length coordinate ``x_L`` along the diagonal
``z2 = z1``: the contour through ``(x_L / sqrt 2, x_L / sqrt 2)`` has level
``q = x_L**2 / 2`` and is parameterized as ``z2 = q / z1`` for
``z1 in [q, 1]``. Arc length along a contour is measured from its upper end
``(q, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from . import _backend
from .density import Grid2D, GriddedPdf2D, bilinear, make_rng, normalize, quad_1d
from .errors import BandTooThin, DegenerateContour, DomainError, EmptyRegion, MaxDepthExceeded
from .product_model import Marginal

SQRT2 = math.sqrt(2.0)
XL_EPS = 1e-6
ARC_TOL = 1e-12

Box = Tuple[Tuple[float, float], Tuple[float, float]]

#: quadrants of the unit square, ordered NW, NE, SW, SE
QUADRANTS: Tuple[Box, ...] = (
    ((0.0, 0.5), (0.5, 1.0)),
    ((0.5, 1.0), (0.5, 1.0)),
    ((0.0, 0.5), (0.0, 0.5)),
    ((0.5, 1.0), (0.0, 0.5)),
)


# ---------------------------------------------------------------- geometry

def contour_level(x_L):
    return 0.5 * np.asarray(x_L, dtype=float) ** 2


@dataclass(frozen=True)
class ContourCurve:
    """The level set ``z1 * z2 = x_L**2 / 2`` inside the unit square."""

    x_L: float

    def __post_init__(self):
        if not 0.0 <= self.x_L <= SQRT2:
            raise DomainError(f"x_L={self.x_L} outside [0, sqrt 2]")

    @property
    def q(self) -> float:
        # x_L = sqrt 2 rounds to a level just above 1
        return min(0.5 * self.x_L * self.x_L, 1.0)

    @property
    def z1_range(self):
        return (self.q, 1.0)

    def z2(self, z1):
        return self.q / np.asarray(z1, dtype=float)

    def points(self, n: int = 100) -> np.ndarray:
        """``n`` points on the contour, log-spaced in ``z1``."""
        q = self.q
        if q <= 0:
            raise DegenerateContour("x_L = 0 has no interior contour")
        z1 = np.exp(np.linspace(math.log(q), 0.0, n))
        return np.column_stack([z1, q / z1])


def transverse_pdf(x_L):
    """Density of ``X_L``: ``-x_L log(x_L**2 / 2)`` on (0, sqrt 2]."""
    x = np.asarray(x_L, dtype=float)
    if np.any((x <= 0) | (x > SQRT2 * (1 + 1e-15))):
        raise DomainError("transverse_pdf is defined on (0, sqrt 2]")
    x = np.minimum(x, SQRT2)
    out = np.clip(-x * np.log(0.5 * x * x), 0.0, None)
    return float(out) if out.ndim == 0 else out


def arc_length(c: ContourCurve, z1_a: Optional[float] = None, z1_b: Optional[float] = None,
               tol: float = ARC_TOL) -> float:
    """Arc length of the contour between ``z1_a`` and ``z1_b`` (full contour by default)."""
    q = c.q
    a = q if z1_a is None else float(z1_a)
    b = 1.0 if z1_b is None else float(z1_b)
    slack = 1e-14
    if not (q - slack <= a <= b <= 1.0 + slack):
        raise DomainError(f"need {q} <= z1_a <= z1_b <= 1, got ({a}, {b})")
    if b <= a or q <= 0:
        return 0.0
    return _backend.kernels.arc_length(q, max(a, q), min(b, 1.0), tol)


def arc_position(c: ContourCurve, z1) -> float:
    """Arc-length coordinate of the contour point with abscissa ``z1``."""
    return arc_length(c, c.q, z1)


def z1_at_arc(c: ContourCurve, s: float, total: Optional[float] = None) -> float:
    """Inverse of :func:`arc_position`."""
    L = arc_length(c) if total is None else total
    if s <= 0:
        return c.q
    if s >= L:
        return 1.0
    return brentq(lambda z: arc_position(c, z) - s, c.q, 1.0, xtol=1e-14, rtol=1e-14)


def ansatz_conditional(c: ContourCurve) -> float:
    """Uniform conditional density per unit arc length, ``1 / length``."""
    L = arc_length(c)
    if L <= 0:
        raise DegenerateContour(f"contour x_L={c.x_L} has zero length")
    return 1.0 / L


# ---------------------------------------------------------------- conditional rules

def _clip_range(q: float, box: Box):
    (a1, b1), (a2, b2) = box
    lo = max(a1, q / b2 if b2 > 0 else math.inf, q)
    hi = min(b1, q / a2 if a2 > 0 else math.inf, 1.0)
    return lo, hi


class AnsatzRule:
    """Uniform density per unit arc length on every contour."""

    name = "ansatz"

    def fraction(self, x_L: float, box: Box) -> float:
        c = ContourCurve(x_L)
        lo, hi = _clip_range(c.q, box)
        if hi <= lo:
            return 0.0
        return arc_length(c, lo, hi) / arc_length(c)


class TrueConditionalRule:
    """Exact conditional of an independent law ``f1(z1) f2(z2)`` along each contour.

    Per unit arc the conditional is proportional to ``f_Z / |grad Q|``; in
    the ``z1`` variable this is ``f1(z1) f2(q / z1) dz1 / z1``.
    """

    name = "true"

    def __init__(self, f1: Marginal = Marginal.uniform(), f2: Marginal = Marginal.uniform(),
                 tol: float = 1e-12):
        self.f1, self.f2, self.tol = f1, f2, tol

    def fraction(self, x_L: float, box: Box) -> float:
        q = 0.5 * x_L * x_L
        lo, hi = _clip_range(q, box)
        if hi <= lo:
            return 0.0
        k = _backend.kernels
        part, _ = k.product_partial(q, lo, hi, *self.f1.code, *self.f2.code, tol=self.tol)
        full, _ = k.product_partial(q, q, 1.0, *self.f1.code, *self.f2.code, tol=self.tol)
        return part / full if full > 0 else 0.0


class EmpiricalRule:
    """Band-binned conditional from :func:`empirical_contour_pdf` (no adaptive halving)."""

    name = "empirical"

    def __init__(self, f_Z=None, eps: float = 1e-3, n_segments: int = 100):
        self.f_Z, self.eps, self.n_segments = f_Z, eps, n_segments

    def fraction(self, x_L: float, box: Box) -> float:
        c = ContourCurve(x_L)
        lo, hi = _clip_range(c.q, box)
        if hi <= lo:
            return 0.0
        eps = min(self.eps, SQRT2 - x_L)
        if eps <= 0:
            return 0.0
        cp = empirical_contour_pdf(x_L, eps, self.n_segments, self.f_Z, adapt=False)
        return cp.mass_between(arc_position(c, lo), arc_position(c, hi))


ANSATZ = AnsatzRule()


# ---------------------------------------------------------------- cell probabilities

def _breakpoints(box: Box):
    (a1, b1), (a2, b2) = box
    xa = max(math.sqrt(2 * a1 * a2), XL_EPS)
    xb = min(math.sqrt(2 * b1 * b2), SQRT2 - XL_EPS)
    pts = [xa, xb]
    for t in (math.sqrt(2 * a1 * b2), math.sqrt(2 * b1 * a2)):
        if xa < t < xb:
            pts.append(t)
    return sorted(pts)


def _check_box(box: Box):
    (a1, b1), (a2, b2) = box
    if not (0 <= a1 <= b1 <= 1 and 0 <= a2 <= b2 <= 1):
        raise EmptyRegion(f"box {box} is not a subset of the unit square")
    if b1 <= a1 or b2 <= a2:
        raise EmptyRegion(f"box {box} has empty interior")


def cell_probability(box: Box, f_xl: Callable = transverse_pdf, conditional=ANSATZ,
                     tol: float = 1e-6) -> float:
    """Probability of an axis-aligned box by integrating over contours.

    ``P(A) = int f_xl(x_L) * P(contour point in A | x_L) dx_L``, split into
    panels at the ``x_L`` values where contours enter or leave the box
    through a corner. ``conditional`` supplies the within-contour fraction.
    """
    _check_box(box)
    (a1, b1), (a2, b2) = box
    if conditional is ANSATZ and f_xl is transverse_pdf:
        v, ok = _backend.kernels.ansatz_cell_probability(a1, b1, a2, b2, tol)
        if not ok:
            raise MaxDepthExceeded(v)
        return v
    pts = _breakpoints(box)
    total = 0.0
    for x0, x1 in zip(pts[:-1], pts[1:]):
        if x1 <= x0:
            continue
        total += quad_1d(lambda x: float(f_xl(x)) * conditional.fraction(x, box), x0, x1,
                         tol=tol / (len(pts) - 1), max_depth=30, strict=False)[0]
    return total


def ansatz_cell_probabilities(n: int, tol: float = 1e-6) -> np.ndarray:
    """Ansatz probabilities of the ``n x n`` equal cells of the unit square (``[i, j]`` = z1 cell i, z2 cell j)."""
    e = np.linspace(0.0, 1.0, n + 1)
    P, _ = _backend.kernels.ansatz_cell_grid(e, e, tol=tol, threads=_backend.get_threads())
    return P


def build_ansatz_pdf_grid(n_sq: int, tol: float = 1e-6, return_raw: bool = False):
    """Gridded ansatz density on ``n_sq`` equal squares (cell probability / cell area), normalized."""
    n = int(round(math.sqrt(n_sq)))
    if n * n != n_sq:
        raise ValueError(f"n_sq={n_sq} is not a perfect square")
    if n < 2:
        raise ValueError("need at least 4 squares")
    P = ansatz_cell_probabilities(n, tol)
    grid = Grid2D.unit_square(n)
    pdf = normalize(GriddedPdf2D(grid, P / grid.cell_area))
    return (pdf, P) if return_raw else pdf


# ---------------------------------------------------------------- empirical contour pdf

@dataclass(frozen=True, eq=False)
class ContourPdf:
    """Piecewise-constant conditional density along one contour.

    ``edges`` are the equal arc-length segment boundaries and ``seg_values``
    the density on each segment. ``arc_nodes``/``values`` present the same
    function as a node table (segment midpoints plus both ends) whose
    trapezoid integral equals the exact integral.
    """

    x_L: float
    edges: np.ndarray
    seg_values: np.ndarray
    eps: float
    n_segments: int
    arc_length: float

    @property
    def arc_nodes(self) -> np.ndarray:
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        return np.concatenate([[self.edges[0]], mid, [self.edges[-1]]])

    @property
    def values(self) -> np.ndarray:
        v = self.seg_values
        return np.concatenate([[v[0]], v, [v[-1]]])

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.arc_nodes))

    def mass_between(self, s0: float, s1: float) -> float:
        """Exact integral of the piecewise-constant density over ``[s0, s1]``."""
        lo = np.clip(self.edges[:-1], s0, s1)
        hi = np.clip(self.edges[1:], s0, s1)
        return float(np.sum(self.seg_values * (hi - lo)))

    def metadata(self):
        return {"x_L": self.x_L, "eps": self.eps, "n_segments": self.n_segments,
                "arc_length": self.arc_length}


def _arc_partition(c: ContourCurve, n: int):
    L = arc_length(c)
    if L <= 0:
        raise DegenerateContour(f"contour x_L={c.x_L} has zero length")
    s = np.linspace(0.0, L, n + 1)
    z = np.empty(n + 1)
    z[0], z[-1] = c.q, 1.0
    for i in range(1, n):
        z[i] = z1_at_arc(c, s[i], L)
    return L, s, z


_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


def _band_masses_generic(f, q_lo, q_hi, z_edges):
    """Band masses by z1-sliced Gauss-Legendre quadrature of a 2-D density ``f(z1, z2)``."""
    xg, wg = _GL16
    yg, wy = _GL8
    pieces = []
    for a, b in zip(z_edges[:-1], z_edges[1:]):
        cuts = [a, b] if not (a < q_hi < b) else [a, q_hi, b]
        m = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            z1 = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
            y0 = q_lo / z1
            y1 = np.minimum(q_hi / z1, 1.0)
            z2 = 0.5 * (y1 - y0)[:, None] * yg[None, :] + 0.5 * (y1 + y0)[:, None]
            inner = (np.asarray(f(np.repeat(z1[:, None], len(yg), 1), z2)) * wy).sum(1)
            m += 0.5 * (hi - lo) * np.sum(wg * inner * 0.5 * (y1 - y0))
        pieces.append(m)
    return np.asarray(pieces)


def _band_masses(f_Z, q_lo, q_hi, z_edges):
    if f_Z is None:
        f_Z = (Marginal.uniform(), Marginal.uniform())
    if isinstance(f_Z, tuple) and all(isinstance(m, Marginal) and m.kernel_ready for m in f_Z):
        m, _ = _backend.kernels.band_masses(q_lo, q_hi, np.ascontiguousarray(z_edges),
                                            *f_Z[0].code, *f_Z[1].code)
        return m
    if isinstance(f_Z, tuple):
        g1, g2 = f_Z
        f = lambda x, y: g1.pdf(x) * g2.pdf(y)
    elif isinstance(f_Z, GriddedPdf2D):
        f = lambda x, y: bilinear(f_Z, x, y)
    else:
        f = f_Z
    return _band_masses_generic(f, q_lo, q_hi, z_edges)


def empirical_contour_pdf(x_L: float, eps: float = 1e-3, n_segments: int = 100, f_Z=None,
                          adapt: bool = True, max_halvings: int = 8) -> ContourPdf:
    """Conditional density along a contour estimated from a thin band of probability.

    The contour is split into ``n_segments`` equal arc-length pieces; the
    mass of ``f_Z`` between this contour and the one at ``x_L + eps`` over
    each piece's ``z1`` span gives the segment probability.

    Parameters
    ----------
    f_Z : None, (Marginal, Marginal), GriddedPdf2D or callable
        The joint law. ``None`` is the uniform law; a pair of marginals
        means independence and uses the compiled band kernel.
    adapt : bool
        Halve ``eps`` until normalized segment masses move by less than 1%.
    """
    if not (0 < x_L and x_L + eps <= SQRT2 + 1e-15):
        raise DomainError(f"need 0 < x_L < x_L + eps <= sqrt 2 (x_L={x_L}, eps={eps})")
    if n_segments < 10:
        raise ValueError("n_segments must be at least 10")
    c = ContourCurve(x_L)
    L, s, z = _arc_partition(c, n_segments)
    q = c.q

    def masses(e):
        m = _band_masses(f_Z, q, 0.5 * (x_L + e) ** 2, z)
        tot = m.sum()
        if not tot > 1e-12:
            raise BandTooThin(f"band mass {tot:.3g} at x_L={x_L}, eps={e}")
        return m / tot

    m = masses(eps)
    if adapt:
        for _ in range(max_halvings):
            m2 = masses(0.5 * eps)
            eps *= 0.5
            done = np.max(np.abs(m2 - m) / np.maximum(m2, 1e-300)) < 0.01
            m = m2
            if done:
                break
    ds = L / n_segments
    return ContourPdf(float(x_L), s, m / ds, float(eps), int(n_segments), float(L))


def monte_carlo_contour_pdf(x_L: float, eps: float = 0.02, n_segments: int = 100,
                            n: int = 10**7, seed: int = 0, f_Z=None,
                            chunk: int = 10**6) -> ContourPdf:
    """Band-binning Monte Carlo estimate of the contour pdf.

    Draws ``n`` points from ``f_Z`` (a pair of marginals, uniform by
    default), keeps those between the contours at ``x_L`` and ``x_L + eps``
    and bins them by ``z1`` into the equal arc-length segments used by
    :func:`empirical_contour_pdf`. Used as an independent cross-check.
    """
    f1, f2 = f_Z if f_Z is not None else (Marginal.uniform(), Marginal.uniform())
    c = ContourCurve(x_L)
    L, s, z = _arc_partition(c, n_segments)
    q_lo, q_hi = c.q, 0.5 * (x_L + eps) ** 2
    rng = make_rng(seed)
    counts = np.zeros(n_segments)
    left = int(n)
    while left > 0:
        m = min(chunk, left)
        u = rng.random((m, 2))
        z1, z2 = f1.ppf(u[:, 0]), f2.ppf(u[:, 1])
        q = z1 * z2
        sel = (q >= q_lo) & (q < q_hi)
        counts += np.histogram(z1[sel], bins=z)[0]
        left -= m
    tot = counts.sum()
    if tot == 0:
        raise BandTooThin(f"no samples in the band at x_L={x_L}, eps={eps}")
    return ContourPdf(float(x_L), s, counts / tot / (L / n_segments), float(eps),
                      int(n_segments), float(L))


def nonlebesgue_recovery_test(beta_params: Sequence[float], x_L: float, eps: float = 1e-3,
                              n_segments: int = 100, scale: Tuple[float, float] = (1.0, 1.0)) -> float:
    """Coefficient of variation of ``f_beta / f_uniform`` along one contour.

    ``beta_params = (nu1, nu2, tau1, tau2)`` gives ``Z1 ~ Beta(nu1, nu2)`` and
    ``Z2 ~ Beta(tau1, tau2)``. A value near zero means the ratio is constant,
    so a uniform-ansatz conditional with respect to the matching reference
    measure would recover the law. ``scale`` multiplies the two joint
    densities by constants (the result must not change).
    """
    n1, n2, t1, t2 = map(float, beta_params)
    fb = (Marginal.beta(n1, n2), Marginal.beta(t1, t2))
    if scale != (1.0, 1.0):
        b0, b1 = fb
        sb, su = scale
        fb = lambda x, y: sb * b0.pdf(x) * b1.pdf(y)
        fu = lambda x, y: su * np.ones(np.broadcast(x, y).shape)
    else:
        fu = None
    pb = empirical_contour_pdf(x_L, eps, n_segments, fb)
    pu = empirical_contour_pdf(x_L, eps, n_segments, fu)
    r = pb.seg_values / pu.seg_values
    return float(np.std(r) / np.mean(r))


__all__ = [
    "QUADRANTS", "ContourCurve", "contour_level", "transverse_pdf", "arc_length",
    "arc_position", "z1_at_arc", "ansatz_conditional", "AnsatzRule",
    "TrueConditionalRule", "EmpiricalRule", "ANSATZ", "cell_probability",
    "ansatz_cell_probabilities", "build_ansatz_pdf_grid", "ContourPdf",
    "empirical_contour_pdf", "monte_carlo_contour_pdf", "nonlebesgue_recovery_test",
]
