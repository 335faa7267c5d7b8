"""End-to-end experiments with golden-number checks.

Each experiment takes a parameter dict (defaults below, overridable from a
JSON config), a seed and an output directory, writes plot-ready CSV/JSON
artifacts and returns a list of :class:`Check` records.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import integrate as sp_integrate

from . import io
from .contour import (
    QUADRANTS,
    build_ansatz_pdf_grid,
    cell_probability,
    empirical_contour_pdf,
    monte_carlo_contour_pdf,
    nonlebesgue_recovery_test,
)
from .density import (
    Grid1D,
    Grid2D,
    GriddedPdf1D,
    GriddedPdf2D,
    histogram_to_pdf,
    l1_distance,
    rejection_sample_2d,
    sup_distance,
    tabulate,
)
from .errors import RankDeficient
from .inference import (
    BETA_ONE_FAMILY,
    MAXENT_FAMILY,
    SCALED_BETA_FAMILY,
    SYMMETRIC_BETA_FAMILY,
    ParamGrid,
    beta_one_prior,
    cell_probability_below,
    cell_pushforward_sum,
    data_consistent_update,
    l1_fit,
    posterior,
    posterior_predictive,
    predictive_grid,
    true_law_samples,
    uniform_prior,
)
from .product_model import (
    EXP_NEG_SUM_OF_SQUARES,
    PRODUCT,
    SUM,
    SUM_OF_SQUARES,
    exp_qoi_reference,
    forward_sample,
    product_uniform_density,
    sum_uniform_density,
    sumsquares_uniform_density,
)
from .random_fields import (
    Matern,
    Mesh1D,
    SpectralSDOF,
    field_least_squares,
    integrated_covariance,
    kl_decompose,
    reciprocal_field,
    sample_gp,
    second_order_report,
    solve_ode_integral,
    solve_ode_reciprocal,
    stationary_matrix,
    translation_process,
    truncated_moments,
    truncation_level,
)

#: seeds used for the seed-dependent acceptance checks
DOCUMENTED_SEEDS = tuple(range(10))


@dataclass
class Check:
    """One golden number. ``tol is None`` marks a one-sided bound (``target`` is the bound)."""

    name: str
    value: float
    target: Optional[float]
    tol: Optional[float]
    passed: bool

    def to_dict(self):
        return {"name": self.name, "value": self.value, "target": self.target, "tol": self.tol,
                "pass": bool(self.passed)}


def close(name, value, target, tol) -> Check:
    value = float(value)
    return Check(name, value, float(target), float(tol), bool(abs(value - target) <= tol))


def at_most(name, value, bound) -> Check:
    return Check(name, float(value), float(bound), None, bool(value <= bound))


def at_least(name, value, bound) -> Check:
    return Check(name, float(value), float(bound), None, bool(value >= bound))


def above(name, value, bound) -> Check:
    return Check(name, float(value), float(bound), None, bool(value > bound))


def below(name, value, bound) -> Check:
    return Check(name, float(value), float(bound), None, bool(value < bound))


def flag(name, ok: bool) -> Check:
    return Check(name, float(bool(ok)), 1.0, 0.0, bool(ok))


def within_fraction(name, value, target, frac) -> Check:
    return close(name, value, target, frac * target)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: dict
    run: Callable[[dict, int, Path], List[Check]]


REGISTRY: Dict[str, Experiment] = {}


def experiment(name, description, **defaults):
    def deco(fn):
        REGISTRY[name] = Experiment(name, description, defaults, fn)
        return fn
    return deco


# ---------------------------------------------------------------- contours

@experiment("ContourQuadrants", "ansatz probabilities of the four quadrants of the unit square",
            tol=1e-6, targets=[0.2886, 0.2459, 0.1770, 0.2886], abs_tol=0.002, max_runtime_s=10.0)
def _quadrants(p, seed, out):
    t0 = time.perf_counter()
    vals = [cell_probability(b, tol=p["tol"]) for b in QUADRANTS]
    dt = time.perf_counter() - t0
    names = ["NW", "NE", "SW", "SE"]
    io.write_csv(out / "quadrants.csv", ["quadrant", "z1_lo", "z1_hi", "z2_lo", "z2_hi", "prob"],
                 [np.arange(4), *[np.array([b[k][e] for b in QUADRANTS])
                                  for k in (0, 1) for e in (0, 1)], vals])
    checks = [close(f"quadrant_{n}", v, t, p["abs_tol"]) for n, v, t in zip(names, vals, p["targets"])]
    checks.append(close("quadrant_total", sum(vals), 1.0, 1e-5))
    checks.append(below("quadrant_runtime_s", dt, p["max_runtime_s"]))
    return checks


@experiment("ContourPdfs", "empirical conditional densities along contours against a Monte Carlo oracle",
            x_L=[0.2, 0.4, 0.8, 1.2, 1.35], eps=1e-3, n_segments=100, mc_n=10_000_000, mc_eps=0.02,
            mc_x_L=0.4)
def _contour_pdfs(p, seed, out):
    checks = []
    pdfs = {}
    for x in p["x_L"]:
        c = empirical_contour_pdf(x, p["eps"], p["n_segments"])
        pdfs[x] = c
        io.save_contour_pdf(c, out / f"contour_pdf_xl{x:g}.csv")
    if 0.4 in pdfs:
        v = pdfs[0.4].seg_values
        checks.append(at_least("sup_over_inf_xl0.4", v.max() / v.min(), 1.5))
    if 1.35 in pdfs:
        c = pdfs[1.35]
        dev = np.max(np.abs(c.seg_values * c.arc_length - 1.0))
        checks.append(at_most("rel_dev_from_ansatz_xl1.35", dev, 0.05))
    xm = p["mc_x_L"]
    mc = monte_carlo_contour_pdf(xm, p["mc_eps"], p["n_segments"], p["mc_n"], seed)
    em = empirical_contour_pdf(xm, p["mc_eps"], p["n_segments"], adapt=False)
    io.write_csv(out / f"contour_mc_xl{xm:g}.csv", ["x_C", "quadrature", "monte_carlo"],
                 [0.5 * (em.edges[:-1] + em.edges[1:]), em.seg_values, mc.seg_values])
    l1 = float(np.sum(np.abs(mc.seg_values - em.seg_values)) * em.arc_length / em.n_segments)
    checks.append(at_most(f"l1_vs_monte_carlo_xl{xm:g}", l1, 0.05))
    return checks


@experiment("NonLebesgueRatio", "constancy of the beta/uniform conditional ratio along a contour",
            x_L=0.8, eps=1e-3, n_segments=100)
def _nonlebesgue(p, seed, out):
    r1 = nonlebesgue_recovery_test((1, 1, 1, 1), p["x_L"], p["eps"], p["n_segments"])
    r2 = nonlebesgue_recovery_test((2, 2, 2, 2), p["x_L"], p["eps"], p["n_segments"])
    io.write_json(out / "nonlebesgue.json", {"x_L": p["x_L"], "cv_beta1111": r1, "cv_beta2222": r2})
    return [below("cv_beta1111", r1, 0.02), above("cv_beta2222", r2, 0.1)]


# ---------------------------------------------------------------- ansatz grid and prediction

@experiment("AnsatzGridAndValidation",
            "gridded ansatz law, its pushforward, and predictions for Z1+Z2 and Z1^2+Z2^2",
            n_sq=10000, tol=1e-6, n_samples=50000, hist_bins=50, max_runtime_s=60.0,
            n_data=100, grid_n=51, mu_lo=0.25, mu_hi=0.75, nu_lo=0.75, nu_hi=1.25,
            targets=[0.2141, 0.0786, 0.0415], ansatz_tol=0.02, bayes_frac=0.5)
def _ansatz_grid(p, seed, out):
    checks = []
    t0 = time.perf_counter()
    pdf, P = build_ansatz_pdf_grid(p["n_sq"], p["tol"], return_raw=True)
    zs = rejection_sample_2d(pdf, p["n_samples"], seed)
    qs = forward_sample(PRODUCT, zs)
    g = Grid1D(0.0, 1.0, p["hist_bins"])
    hist = histogram_to_pdf(qs, g)
    e = g.edges
    exact = GriddedPdf1D(g, np.diff(e - e * np.log(np.where(e > 0, e, 1.0))) / g.h)
    l1 = l1_distance(hist, exact)
    dt = time.perf_counter() - t0
    io.save_pdf(pdf, out / "ansatz_pdf.csv")
    io.write_csv(out / "ansatz_pushforward_hist.csv", ["q", "histogram", "exact"],
                 [g.nodes, hist.values, exact.values])
    checks += [at_most("pushforward_l1", l1, 0.05), below("grid_and_sampling_runtime_s", dt,
                                                         p["max_runtime_s"])]

    tri_a = cell_pushforward_sum(P)
    tri = tabulate(sum_uniform_density, tri_a.grid)
    io.write_csv(out / "predict_sum_ansatz.csv", ["q", "ansatz", "true"],
                 [tri_a.grid.nodes, tri_a.values, tri.values])
    checks.append(close("sup_sum_ansatz", sup_distance(tri_a, tri), p["targets"][0], p["ansatz_tol"]))

    mass, _ = sp_integrate.quad(sumsquares_uniform_density, 0.0, 2.0, points=[1.0], epsabs=1e-13,
                                limit=200)
    checks.append(close("sumsquares_pdf_mass", mass, 1.0, 1e-6))
    x = np.linspace(0.0, 1.0, 101)
    checks.append(close("sumsquares_pdf_flat_part", np.max(np.abs(sumsquares_uniform_density(x)
                                                                  - math.pi / 4)), 0.0, 1e-12))
    p_half = cell_probability_below(P, SUM_OF_SQUARES, 0.5)
    checks.append(above("abs_P_sumsq_le_half_minus_pi_over_8", abs(p_half - math.pi / 8), 0.02))
    io.write_json(out / "sumsquares.json", {"ansatz_P_le_half": p_half, "true": math.pi / 8,
                                            "direction": "under" if p_half < math.pi / 8 else "over"})
    # exp(-(Z1^2+Z2^2)) under the ansatz law versus the Monte Carlo reference
    ge = Grid1D(math.exp(-2.0), 1.0, 100)
    ref = exp_qoi_reference(ge)
    n = P.shape[0]
    X, Y = Grid2D.unit_square(n).mesh()
    qe = EXP_NEG_SUM_OF_SQUARES(X, Y).ravel()
    h, _ = np.histogram(qe, bins=ge.edges, weights=P.ravel() / P.sum())
    io.write_csv(out / "predict_expqoi.csv", ["q", "ansatz", "reference"], [ge.nodes, h / ge.h, ref.values])

    # Bayesian predictions from N_s samples of Q
    s = true_law_samples(p["n_data"], seed)
    gm = ParamGrid(("mu1", "mu2"), (p["mu_lo"],) * 2, (p["mu_hi"],) * 2, (p["grid_n"],) * 2)
    gb = ParamGrid(("nu1", "nu2"), (p["nu_lo"],) * 2, (p["nu_hi"],) * 2, (p["grid_n"],) * 2)
    qg = predictive_grid(SUM, 200)
    tri = tabulate(sum_uniform_density, qg)
    pm = posterior(MAXENT_FAMILY, uniform_prior(gm), s, gm)
    pb = posterior(BETA_ONE_FAMILY, uniform_prior(gb), s, gb)
    fm = posterior_predictive(pm, MAXENT_FAMILY, SUM, qg)
    fb = posterior_predictive(pb, BETA_ONE_FAMILY, SUM, qg)
    io.write_csv(out / "predict_sum_bayes.csv", ["q", "maxent", "beta", "true"],
                 [qg.nodes, fm.values, fb.values, tri.values])
    checks.append(within_fraction("sup_sum_maxent_bayes", sup_distance(fm, tri), p["targets"][1],
                                  p["bayes_frac"]))
    checks.append(within_fraction("sup_sum_beta_bayes", sup_distance(fb, tri), p["targets"][2],
                                  p["bayes_frac"]))
    return checks


# ---------------------------------------------------------------- maxent and beta fits

def _target_pdf(n):
    return tabulate(product_uniform_density, Grid1D(0.0, 1.0, n))


def _save_surface(path, grid, Z, name):
    A, B = grid.mesh()
    io.write_csv(path, [grid.names[0], grid.names[1], name], [A, B, Z])


@experiment("MaxEntFit", "L1 pushforward fit of the first-moment maxent family",
            lo=[0.0, 0.4], hi=[0.75, 1.0], n=[25, 25], q_bins=200, theta_true=[0.5, 0.5])
def _maxent_fit(p, seed, out):
    grid = ParamGrid(("mu1", "mu2"), p["lo"], p["hi"], p["n"])
    fit = l1_fit(MAXENT_FAMILY, _target_pdf(p["q_bins"]), grid)
    _save_surface(out / "maxent_l1_surface.csv", grid, fit.errors, "l1")
    ok = fit.best_index == grid.cell_of(p["theta_true"])
    return [flag("argmin_cell_contains_true", ok), below("min_l1", fit.min_error, 0.01)]


@experiment("BetaFamilyFit", "L1 pushforward fit of Beta(nu1,nu1) x Beta(nu2,nu2); flat scale direction",
            lo=[0.2, 0.2], hi=[10.0, 10.0], n=[50, 50], q_bins=200, theta_true=[1.0, 1.0],
            scale_nus=[1.0, 2.0], scale_lams=[0.8, 1.0, 1.25], q_bins_scaled=100)
def _beta_fit(p, seed, out):
    grid = ParamGrid(("nu1", "nu2"), p["lo"], p["hi"], p["n"])
    fit = l1_fit(SYMMETRIC_BETA_FAMILY, _target_pdf(p["q_bins"]), grid)
    _save_surface(out / "beta_l1_surface.csv", grid, fit.errors, "l1")
    checks = [flag("argmin_cell_contains_true", fit.best_index == grid.cell_of(p["theta_true"]))]
    # (nu, lam): the product law ignores lam
    target = _target_pdf(p["q_bins_scaled"])
    spread = 0.0
    rows = []
    for nu in p["scale_nus"]:
        errs = []
        for lam in p["scale_lams"]:
            sg = ParamGrid(("nu", "lam"), (nu, lam), (nu + 1.0, lam + 1.0), (2, 2))
            f = l1_fit(SCALED_BETA_FAMILY, target, sg)
            errs.append(f.errors[0, 0])
            rows.append((nu, lam, f.errors[0, 0]))
        spread = max(spread, float(np.ptp(errs)))
    r = np.array(rows)
    io.write_csv(out / "scaled_family_l1.csv", ["nu", "lam", "l1"], [r[:, 0], r[:, 1], r[:, 2]])
    checks.append(at_most("scale_direction_l1_spread", spread, 1e-6))
    return checks


def _bayes(family, prior_fn, p, seed, out, target, tol, stem):
    grid = ParamGrid(family.param_names, (p["lo"],) * 2, (p["hi"],) * 2, (p["grid_n"],) * 2)
    s = true_law_samples(p["n_samples"], seed)
    post = posterior(family, prior_fn(grid), s, grid)
    io.save_posterior(post, out / f"{stem}_posterior.csv")
    io.save_samples(s, out / "q_samples.csv")
    d = math.hypot(post.map_estimate[0] - target[0], post.map_estimate[1] - target[1])
    return [at_most("map_distance", d, tol)]


@experiment("MaxEntBayes", "grid posterior of (mu1, mu2) with the maxent pushforward likelihood",
            n_samples=100, grid_n=51, lo=0.25, hi=0.75)
def _maxent_bayes(p, seed, out):
    return _bayes(MAXENT_FAMILY, uniform_prior, p, seed, out, (0.5, 0.5), 0.05, "maxent")


@experiment("BetaFamilyBayes", "grid posterior of (nu1, nu2) for Beta(1,nu1) x Beta(1,nu2)",
            n_samples=100, grid_n=51, lo=1.0 / 3.0, hi=3.0)
def _beta_bayes(p, seed, out):
    return _bayes(BETA_ONE_FAMILY, beta_one_prior, p, seed, out, (1.0, 1.0), 0.15, "beta")


# ---------------------------------------------------------------- data-consistent update

@experiment("DataConsistent", "prior-times-ratio update of a gridded law of Z",
            grid_n=200, q_bins=500, n_check=100_000, check_bins=100)
def _data_consistent(p, seed, out):
    g = Grid2D.unit_square(p["grid_n"])
    obs = tabulate(product_uniform_density, Grid1D(0.0, 1.0, p["q_bins"]))
    X, Y = g.mesh()
    uni = GriddedPdf2D(g, np.ones(g.shape))
    b22 = GriddedPdf2D(g, 36.0 * X * (1 - X) * Y * (1 - Y))
    cg = Grid1D(0.0, 1.0, p["check_bins"])
    e = cg.edges
    exact = GriddedPdf1D(cg, np.diff(e - e * np.log(np.where(e > 0, e, 1.0))) / cg.h)
    checks = []
    for name, prior in (("uniform", uni), ("beta22", b22)):
        post = data_consistent_update(prior, obs, PRODUCT, n_bins=p["q_bins"])
        io.save_pdf(post, out / f"posterior_{name}.csv")
        zs = rejection_sample_2d(post, p["n_check"], seed)
        hist = histogram_to_pdf(forward_sample(PRODUCT, zs), cg)
        checks.append(below(f"pushforward_l1_{name}", l1_distance(hist, exact), 0.05))
        again = data_consistent_update(post, obs, PRODUCT, n_bins=p["q_bins"])
        checks.append(below(f"idempotence_l1_{name}",
                            np.abs(again.values - post.values).sum() * g.cell_area, 0.02))
        if name == "uniform":
            checks.append(at_most("posterior_vs_prior_l1_uniform",
                                  np.abs(post.values - prior.values).sum() * g.cell_area, 0.03))
        else:
            checks.append(above("sup_from_uniform_beta22", np.max(np.abs(post.values - 1.0)), 0.1))
    return checks


# ---------------------------------------------------------------- random fields

def _example3(p, seed):
    mesh = Mesh1D(p["h"])
    g = sample_gp(Matern(p["matern_nu"], p["ell"]), mesh, p["n_samples"], seed)
    a = translation_process(g, p["alpha"], p["beta"], p["beta_params"])
    u = solve_ode_reciprocal(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficient)
        basis = kl_decompose(u)
    return mesh, a, basis


_EX3 = dict(h=0.005, n_samples=10_000, matern_nu=2.5, ell=0.03, alpha=4.0, beta=20.0,
            beta_params=[1.0, 3.0], max_runtime_s=300.0)


def _first_attempt(a, basis):
    fit = field_least_squares(reciprocal_field(a), basis.scores)
    return second_order_report(a, reciprocal_field(fit.fitted))


def _save_report(out, stem, mesh, rep):
    io.write_csv(out / f"{stem}_stats.csv", ["x", "mean_true", "mean_fit", "var_true", "var_fit"],
                 [mesh.points, rep.mean_true, rep.mean_fit, rep.var_true, rep.var_fit])
    io.write_matrix_csv(out / f"{stem}_covdiff.csv", rep.cov_diff,
                        [f"x{k}" for k in range(mesh.size)])


@experiment("FieldFirstAttempt", "reconstruct 1/A on the KL scores of U and invert", **_EX3)
def _field_first(p, seed, out):
    t0 = time.perf_counter()
    mesh, a, basis = _example3(p, seed)
    rep = _first_attempt(a, basis)
    dt = time.perf_counter() - t0
    _save_report(out, "first_attempt", mesh, rep)
    return [below("mean_rel_sup", rep.mean_rel_sup, 0.01), below("var_rel_sup", rep.var_rel_sup, 0.05),
            below("cov_sup_rel", rep.cov_sup / rep.cov_true_sup, 0.05),
            below("runtime_s", dt, p["max_runtime_s"])]


@experiment("FieldSecondAttempt", "reconstruct A directly on the KL scores of U", **_EX3)
def _field_second(p, seed, out):
    t0 = time.perf_counter()
    mesh, a, basis = _example3(p, seed)
    first = _first_attempt(a, basis)
    fit = field_least_squares(a, basis.scores)
    rep = second_order_report(a, fit.fitted)
    dt = time.perf_counter() - t0
    _save_report(out, "second_attempt", mesh, rep)
    vt, vf = rep.integrated_variance(mesh)
    return [at_least("integrated_variance_deficit", 1.0 - vf / vt, 0.10),
            at_least("cov_sup_ratio_second_over_first", rep.cov_sup / first.cov_sup, 2.0),
            below("mean_rel_sup", rep.mean_rel_sup, 0.01),
            below("runtime_s", dt, p["max_runtime_s"])]


@experiment("TruncationStudy", "KL truncation levels of r_U and r_G and truncated Gaussian moments",
            h=0.005, alpha=0.95, nu0=20.0, zeta=0.1, moment_M=[6, 9, 101], extra_h=[0.01, 0.0025],
            sampled_rU=False, n_samples=10_000, targets=[6, 9])
def _truncation(p, seed, out):
    kern = SpectralSDOF(p["nu0"], p["zeta"])
    checks = [close("r_G_at_zero", kern(0.0), 1.0, 1e-6)]
    results = {}
    for h in [p["h"]] + list(p["extra_h"]):
        mesh = Mesh1D(h)
        R = stationary_matrix(kern, mesh)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficient)
            bG = kl_decompose(R, mesh=mesh)
            bU = kl_decompose(integrated_covariance(R, mesh), mesh=mesh)
        results[h] = (truncation_level(bU.eigvals, p["alpha"]), truncation_level(bG.eigvals, p["alpha"]),
                      bU, bG)
    mU, mG, bU, bG = results[p["h"]]
    checks += [close("M_U", mU, p["targets"][0], 0), close("M_A", mG, p["targets"][1], 0)]
    checks.append(flag("M_U_below_M_A_all_meshes", all(r[0] < r[1] for r in results.values())))
    checks.append(flag("eigval5_ratio_U_below_G",
                       bU.eigvals[4] / bU.eigvals[0] < bG.eigvals[4] / bG.eigvals[0]))
    k = 30
    io.write_csv(out / "eigvals.csv", ["k", "lambda_U", "lambda_G", "frac_U", "frac_G"],
                 [np.arange(1, k + 1), bU.eigvals[:k], bG.eigvals[:k],
                  np.cumsum(bU.eigvals)[:k] / bU.eigvals.sum(), np.cumsum(bG.eigvals)[:k] / bG.eigvals.sum()])
    io.write_csv(out / "truncation_by_mesh.csv", ["h", "M_U", "M_A"],
                 [list(results), [r[0] for r in results.values()], [r[1] for r in results.values()]])
    cols, names = [bG.mesh.points], ["x"]
    var_prev = None
    mono = True
    for M in p["moment_M"]:
        mom = truncated_moments(bG, M)
        for j in range(4):
            cols.append(mom[j])
            names.append(f"m{j + 1}_M{M}")
        if var_prev is not None:
            mono &= bool(np.all(mom[1] >= var_prev - 1e-12))
        var_prev = mom[1]
    io.write_csv(out / "truncated_moments.csv", names, cols)
    checks.append(flag("variance_monotone_in_M", mono))
    if p["sampled_rU"]:
        mesh = Mesh1D(p["h"])
        u = solve_ode_integral(sample_gp(kern, mesh, p["n_samples"], seed))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficient)
            bs = kl_decompose(u)
        io.write_json(out / "sampled_rU.json", {"M_U_sampled": truncation_level(bs.eigvals, p["alpha"])})
    return checks


__all__ = ["Check", "Experiment", "REGISTRY", "DOCUMENTED_SEEDS"]
