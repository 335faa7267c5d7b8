"""Random fields on a 1-D mesh and their discrete Karhunen-Loeve expansions.

Covers stationary Gaussian sampling (Matern 5/2 and a single-degree-of-
freedom oscillator spectrum), translation processes with scaled Beta
marginals, the two integral-type ODE responses, the quadrature-weighted
KL decomposition, least-squares reconstruction of a field from KL scores,
and second-order comparisons.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate, linalg, special

from .density import make_rng
from .errors import IllConditioned, NonpositiveField, NotPSD, RankDeficient

JITTER = 1e-10
EIG_CUTOFF = 1e-12
TAIL_TOL = 1e-8


# ---------------------------------------------------------------- mesh

@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh on [0, 1] with spacing ``h`` (endpoints included)."""

    h: float = 0.005

    def __post_init__(self):
        h = float(self.h)
        n = 1.0 / h
        if not h > 0 or abs(n - round(n)) > 1e-9:
            raise ValueError(f"h={h} must divide 1")
        object.__setattr__(self, "h", h)

    @property
    def size(self) -> int:
        return int(round(1.0 / self.h)) + 1

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.size)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights: ``h`` inside, ``h/2`` at both ends."""
        w = np.full(self.size, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def refine(self, factor: int) -> "Mesh1D":
        return Mesh1D(self.h / int(factor))

    def to_dict(self):
        return {"h": self.h, "size": self.size}


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class Matern:
    """Matern correlation; ``nu = 5/2`` uses its closed form."""

    nu: float = 2.5
    ell: float = 0.03

    def __call__(self, tau):
        r = np.abs(np.asarray(tau, dtype=float)) / self.ell
        if self.nu == 2.5:
            s = math.sqrt(5.0) * r
            return (1.0 + s + s * s / 3.0) * np.exp(-s)
        if self.nu == 0.5:
            return np.exp(-r)
        s = math.sqrt(2.0 * self.nu) * r
        with np.errstate(invalid="ignore"):
            v = 2.0 ** (1.0 - self.nu) / special.gamma(self.nu) * s ** self.nu * special.kv(self.nu, s)
        return np.where(s == 0, 1.0, v)

    def to_dict(self):
        return {"kind": "Matern", "nu": self.nu, "ell": self.ell}


class SpectralSDOF:
    """Correlation of a damped oscillator spectrum ``F / ((v^2 - v0^2)^2 + (2 zeta v v0)^2)``.

    ``r(tau) = 2 int_0^c cos(v tau) s(v) dv`` with the cutoff ``c`` the
    larger of ``50 v0`` and the frequency beyond which the ``v^-4`` tail
    bound falls below ``1e-8``. ``F`` is calibrated so that ``r(0) = 1``.
    """

    def __init__(self, nu0: float = 20.0, zeta: float = 0.1, cutoff_factor: float = 50.0):
        self.nu0 = float(nu0)
        self.zeta = float(zeta)
        # tail of 2 int_c^inf F v^-4 dv = 2F / (3 c^3); F from the untruncated mass,
        # with a factor 2 margin for the calibration and the v0 correction
        F0 = 2.0 * self.zeta * self.nu0 ** 3 / math.pi
        c_tail = (4.0 * F0 / (3.0 * TAIL_TOL)) ** (1.0 / 3.0)
        self.cutoff = max(cutoff_factor * self.nu0, c_tail)
        self.F = 1.0
        mass = 2.0 * self._quad(0.0)
        self.F = 1.0 / mass
        self.tail_bound = 2.0 * self.F / (3.0 * self.cutoff ** 3)

    def density(self, v):
        v = np.asarray(v, dtype=float)
        return self.F / ((v * v - self.nu0 ** 2) ** 2 + (2.0 * self.zeta * v * self.nu0) ** 2)

    def _quad(self, tau: float) -> float:
        c, v0 = self.cutoff, self.nu0
        pts = [0.0, 0.5 * v0, v0, 1.5 * v0, 3 * v0, 10 * v0, c]
        f = lambda v: float(self.density(v))
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a:
                continue
            if tau == 0.0:
                val, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)
            else:
                val, _ = integrate.quad(f, a, b, weight="cos", wvar=tau, epsabs=1e-13,
                                        epsrel=1e-12, limit=400)
            total += val
        return total

    def __call__(self, tau):
        t = np.abs(np.atleast_1d(np.asarray(tau, dtype=float)))
        out = np.empty_like(t)
        cache = {}
        for i, ti in enumerate(t.ravel()):
            if ti not in cache:
                cache[ti] = 2.0 * self._quad(float(ti))
            out.flat[i] = cache[ti]
        return out.reshape(np.shape(tau)) if np.ndim(tau) else float(out[0])

    def to_dict(self):
        return {"kind": "SpectralSDOF", "nu0": self.nu0, "zeta": self.zeta, "F": self.F,
                "cutoff": self.cutoff}


CovKernel = Union[Matern, SpectralSDOF]


def spectral_correlation(kernel: SpectralSDOF, tau):
    """``int e^{i v tau} s_G(v) dv`` as a real cosine transform."""
    return kernel(tau)


def stationary_matrix(kernel, mesh: Mesh1D) -> np.ndarray:
    """``R[i, j] = r(x_i - x_j)``; each lag is evaluated once."""
    lags = np.arange(mesh.size) * mesh.h
    r = np.asarray(kernel(lags), dtype=float)
    idx = np.abs(np.subtract.outer(np.arange(mesh.size), np.arange(mesh.size)))
    return r[idx]


def integration_matrix(mesh: Mesh1D) -> np.ndarray:
    """Cumulative trapezoid operator: ``(T f)_i = int_0^{x_i} f``."""
    n, h = mesh.size, mesh.h
    T = np.zeros((n, n))
    for i in range(1, n):
        T[i, :i + 1] = h
        T[i, 0] = T[i, i] = 0.5 * h
    return T


def integrated_covariance(R: np.ndarray, mesh: Mesh1D) -> np.ndarray:
    """Covariance of ``U(x) = int_0^x A`` from that of ``A``: ``T R T^T``."""
    T = integration_matrix(mesh)
    C = T @ R @ T.T
    return 0.5 * (C + C.T)


# ---------------------------------------------------------------- ensembles

@dataclass(frozen=True, eq=False)
class FieldEnsemble:
    """``n_samples x (M + 1)`` sample paths on ``mesh``."""

    mesh: Mesh1D
    samples: np.ndarray
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != self.mesh.size:
            raise ValueError(f"samples must be (n, {self.mesh.size})")
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite sample values")
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    def variance(self) -> np.ndarray:
        return self.samples.var(axis=0)

    def covariance(self) -> np.ndarray:
        c = self.samples - self.mean()
        return c.T @ c / self.n


def _factor(C: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(C + JITTER * np.eye(C.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise NotPSD("covariance is not positive definite after jitter") from exc


def sample_gp(kernel, mesh: Mesh1D, n: int, seed: int) -> FieldEnsemble:
    """Zero-mean stationary Gaussian paths by Cholesky factorization of the mesh covariance."""
    C = stationary_matrix(kernel, mesh)
    L = _factor(C)
    z = make_rng(seed).standard_normal((int(n), mesh.size))
    return FieldEnsemble(mesh, z @ L.T, seed, {"kernel": kernel.to_dict()})


def beta_quantile(a: float, b: float, p):
    """Inverse regularized incomplete beta function."""
    return special.betaincinv(a, b, p)


def translation_process(g: FieldEnsemble, alpha: float = 4.0, beta: float = 20.0,
                        beta_params: Sequence[float] = (1.0, 3.0)) -> FieldEnsemble:
    """``alpha + (beta - alpha) * F_beta^{-1}(Phi(G))`` pointwise."""
    a, b = beta_params
    u = special.ndtr(g.samples)
    v = alpha + (beta - alpha) * beta_quantile(a, b, u)
    meta = dict(g.meta, translation={"alpha": alpha, "beta": beta, "beta_params": [a, b]})
    return FieldEnsemble(g.mesh, np.clip(v, alpha, beta), g.seed, meta)


def _cumtrapz(v: np.ndarray, h: float) -> np.ndarray:
    return integrate.cumulative_trapezoid(v, dx=h, axis=-1, initial=0.0)


def solve_ode_reciprocal(a: FieldEnsemble) -> FieldEnsemble:
    """``U(x) = int_0^x 1 / A(y) dy`` per path (cumulative trapezoid)."""
    if np.any(a.samples <= 0):
        raise NonpositiveField("coefficient field must be positive")
    return FieldEnsemble(a.mesh, _cumtrapz(1.0 / a.samples, a.mesh.h), a.seed, dict(a.meta))


def solve_ode_integral(a: FieldEnsemble) -> FieldEnsemble:
    """``U(x) = int_0^x A(y) dy`` per path (cumulative trapezoid)."""
    return FieldEnsemble(a.mesh, _cumtrapz(a.samples, a.mesh.h), a.seed, dict(a.meta))


# ---------------------------------------------------------------- KL decomposition

@dataclass(frozen=True, eq=False)
class KLBasis:
    """Eigenpairs of the weighted covariance operator and (optionally) score samples.

    ``eigvecs[:, k]`` is orthonormal under the trapezoid weights of the mesh.
    """

    mesh: Mesh1D
    mean: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    scores: Optional[np.ndarray] = None
    skipped: tuple = ()

    @property
    def n_modes(self) -> int:
        return self.eigvals.size

    def covariance(self, n_modes: Optional[int] = None) -> np.ndarray:
        k = self.n_modes if n_modes is None else int(n_modes)
        V, lam = self.eigvecs[:, :k], self.eigvals[:k]
        return (V * lam) @ V.T

    def reconstruct(self, n_modes: Optional[int] = None) -> np.ndarray:
        if self.scores is None:
            raise ValueError("basis has no score samples")
        k = self.n_modes if n_modes is None else int(n_modes)
        return self.mean + (self.scores[:, :k] * np.sqrt(self.eigvals[:k])) @ self.eigvecs[:, :k].T


def kl_decompose(e: Union[FieldEnsemble, np.ndarray], n_modes: Optional[int] = None,
                 mesh: Optional[Mesh1D] = None) -> KLBasis:
    """Discrete KL expansion with trapezoid quadrature weights.

    ``e`` is either an ensemble (sample covariance, scores computed) or a
    covariance matrix on ``mesh``. The symmetric problem
    ``W^{1/2} K W^{1/2} v = lam v`` is solved and ``phi = W^{-1/2} v``.
    Scores of modes with ``lam < 1e-12 lam_1`` are set to zero and the
    modes reported through a :class:`RankDeficient` warning.
    """
    if isinstance(e, FieldEnsemble):
        mesh = e.mesh
        K = e.covariance()
        mean = e.mean()
    else:
        if mesh is None:
            raise ValueError("a covariance matrix needs its mesh")
        K = np.asarray(e, dtype=float)
        mean = np.zeros(mesh.size)
    m = mesh.size
    if K.shape != (m, m):
        raise ValueError("covariance does not match the mesh")
    n_modes = m if n_modes is None else int(n_modes)
    if not 1 <= n_modes <= m:
        raise ValueError(f"n_modes must lie in [1, {m}]")
    w = mesh.weights
    sw = np.sqrt(w)
    S = sw[:, None] * K * sw[None, :]
    lam, V = linalg.eigh(0.5 * (S + S.T))
    order = np.argsort(lam)[::-1]
    lam, V = lam[order][:n_modes], V[:, order][:, :n_modes]
    lam = np.where(lam < 0, 0.0, lam)
    # fix the sign so that the largest-magnitude entry is positive
    flip = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(n_modes)])
    V = V * np.where(flip == 0, 1.0, flip)
    phi = V / sw[:, None]
    small = lam < EIG_CUTOFF * lam[0] if lam[0] > 0 else np.ones(n_modes, bool)
    skipped = tuple(int(k) for k in np.flatnonzero(small))
    if skipped:
        warnings.warn(f"{len(skipped)} modes below the eigenvalue cutoff get zero scores "
                      f"(first {skipped[0]})", RankDeficient, stacklevel=2)
    scores = None
    if isinstance(e, FieldEnsemble):
        proj = ((e.samples - mean) * w) @ phi
        scale = np.where(small, 1.0, np.sqrt(np.where(small, 1.0, lam)))
        scores = np.where(small, 0.0, proj / scale)
    return KLBasis(mesh, mean, lam, phi, scores, skipped)


def truncation_level(eigvals, alpha: float) -> int:
    """Smallest ``M`` with ``sum_{k<=M} lam_k / sum_k lam_k >= alpha``."""
    lam = np.asarray(eigvals, dtype=float)
    total = lam.sum()
    if not total > 0:
        raise ValueError("eigenvalues must have a positive sum")
    if alpha <= 0:
        return 1
    if alpha >= 1:
        return int(np.count_nonzero(lam > 0))
    frac = np.cumsum(lam) / total
    return int(np.searchsorted(frac, alpha - 1e-15) + 1)


# ---------------------------------------------------------------- least squares

@dataclass(frozen=True, eq=False)
class FieldFit:
    coefficients: np.ndarray  # (1 + n_modes, n_nodes); row 0 is the mean term
    fitted: FieldEnsemble
    condition: float


def field_least_squares(target: FieldEnsemble, scores: np.ndarray,
                        cond_warn: float = 1e10) -> FieldFit:
    """Per-node least squares of ``target`` on ``[1, Y_1, ..., Y_M]``.

    All nodes share the design matrix, so one SVD-based solve handles the
    whole mesh. Columns that are identically zero (skipped modes) are
    dropped and get zero coefficients.
    """
    Y = np.asarray(scores, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != target.n:
        raise ValueError("scores must be (n_samples, n_modes) on the target's sample axis")
    if Y.shape[1] + 1 > target.n:
        raise ValueError("more regressors than samples")
    keep = np.any(Y != 0, axis=0)
    X = np.column_stack([np.ones(target.n), Y[:, keep]])
    sv = np.linalg.svd(X, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if cond > cond_warn:
        warnings.warn(f"design matrix condition number {cond:.3g}", IllConditioned, stacklevel=2)
    coef, *_ = linalg.lstsq(X, target.samples, lapack_driver="gelsd")
    full = np.zeros((1 + Y.shape[1], target.mesh.size))
    full[0] = coef[0]
    full[1:][keep] = coef[1:]
    fitted = FieldEnsemble(target.mesh, X @ coef, target.seed, {"fit": "least_squares"})
    return FieldFit(full, fitted, cond)


def reciprocal_field(f: FieldEnsemble) -> FieldEnsemble:
    if np.any(f.samples <= 0):
        raise NonpositiveField("cannot invert a field with nonpositive values")
    return FieldEnsemble(f.mesh, 1.0 / f.samples, f.seed, dict(f.meta))


# ---------------------------------------------------------------- reports

@dataclass(frozen=True, eq=False)
class SecondOrderReport:
    mean_true: np.ndarray
    mean_fit: np.ndarray
    var_true: np.ndarray
    var_fit: np.ndarray
    cov_diff: np.ndarray
    cov_true_sup: float

    @property
    def mean_rel_sup(self) -> float:
        return float(np.max(np.abs(self.mean_fit - self.mean_true) / np.abs(self.mean_true)))

    @property
    def var_rel_sup(self) -> float:
        return float(np.max(np.abs(self.var_fit - self.var_true) / self.var_true))

    @property
    def cov_sup(self) -> float:
        return float(self.cov_diff.max())

    def integrated_variance(self, mesh: Mesh1D):
        w = mesh.weights
        return float(w @ self.var_true), float(w @ self.var_fit)

    def summary(self):
        return {"mean_rel_sup": self.mean_rel_sup, "var_rel_sup": self.var_rel_sup,
                "cov_sup": self.cov_sup, "cov_true_sup": self.cov_true_sup}


def second_order_report(true_field: FieldEnsemble, fitted: FieldEnsemble) -> SecondOrderReport:
    if true_field.mesh != fitted.mesh:
        raise ValueError("fields live on different meshes")
    ct, cf = true_field.covariance(), fitted.covariance()
    return SecondOrderReport(true_field.mean(), fitted.mean(), true_field.variance(),
                             fitted.variance(), np.abs(ct - cf), float(np.abs(ct).max()))


def truncated_moments(basis: KLBasis, M: int) -> np.ndarray:
    """Moments ``p = 1..4`` of ``sum_{k<=M} sqrt(lam_k) phi_k(x) Y_k`` with Gaussian ``Y``.

    Returns a ``(4, n_nodes)`` array: odd moments vanish, the fourth is
    three times the squared variance.
    """
    M = int(min(M, basis.n_modes))
    var = (basis.eigvecs[:, :M] ** 2) @ basis.eigvals[:M]
    z = np.zeros_like(var)
    return np.stack([z, var, z, 3.0 * var * var])


__all__ = [
    "Mesh1D", "Matern", "SpectralSDOF", "CovKernel", "spectral_correlation", "stationary_matrix",
    "integration_matrix", "integrated_covariance", "FieldEnsemble", "sample_gp", "beta_quantile",
    "translation_process", "solve_ode_reciprocal", "solve_ode_integral", "KLBasis",
    "kl_decompose", "truncation_level", "FieldFit", "field_least_squares", "reciprocal_field",
    "SecondOrderReport", "second_order_report", "truncated_moments",
]
