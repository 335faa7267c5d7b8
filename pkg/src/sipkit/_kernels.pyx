# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled quadrature kernels.

Every public function here has a twin with the same signature in
``sipkit._purepy``; ``sipkit._backend`` picks one at import time.

Marginal laws on [0, 1] are passed as ``(kind, a, b)`` triples:

* ``0`` uniform (``a``, ``b`` ignored)
* ``1`` truncated exponential ``lam * exp(lam * z) / expm1(lam)``, ``a = lam``
* ``2`` Beta(a, b)

Densities are evaluated from the pair ``(z, 1 - z)`` so that endpoint
singularities of Beta laws stay resolvable in floating point.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, log, exp, expm1, fabs, lgamma, INFINITY, isfinite
from scipy.special.cython_special cimport betainc

cnp.import_array()

ctypedef double (*func_t)(double, void*) noexcept nogil

cdef double XL_EPS = 1e-6
cdef double SQRT2 = 1.4142135623730951


cdef struct Marg:
    int kind
    double a
    double b
    double c      # cached normalizer (log beta or 1/expm1 term)


cdef struct ArcPar:
    double q


cdef struct CellPar:
    double a1
    double b1
    double a2
    double b2
    double inner_tol
    double x0
    double w
    int flag


cdef struct ProdPar:
    double lq
    double llo
    double dlt
    Marg m1
    Marg m2


cdef struct SumPar:
    double qt
    double lo
    double hi
    Marg m1
    Marg m2


cdef struct BandPar:
    double lo
    double hi
    double q_lo
    double q_hi
    Marg m1
    Marg m2


cdef struct PyPar:
    void* fobj
    int err


# ---------------------------------------------------------------- sigmoid map
# s(u) = I_u(5, 5); s'(u) = 630 u^4 (1-u)^4. Complement uses s(1 - u).

cdef inline double _sig(double u) noexcept nogil:
    cdef double v = 1.0 - u
    cdef double u5 = u * u * u * u * u
    return u5 * (126.0 * v * v * v * v + 84.0 * u * v * v * v + 36.0 * u * u * v * v
                 + 9.0 * u * u * u * v + u * u * u * u)


cdef inline double _dsig(double u) noexcept nogil:
    cdef double w = u * (1.0 - u)
    return 630.0 * w * w * w * w


# ---------------------------------------------------------------- marginals

cdef Marg _make_marg(int kind, double a, double b) noexcept nogil:
    cdef Marg m
    m.kind = kind
    m.a = a
    m.b = b
    m.c = 0.0
    if kind == 2:
        m.c = lgamma(a) + lgamma(b) - lgamma(a + b)
    return m


cdef inline double _mpdf(double z, double zc, Marg* m) noexcept nogil:
    cdef double lam, r
    if z < 0.0 or zc < 0.0:
        return 0.0
    if m.kind == 0:
        return 1.0
    if m.kind == 1:
        lam = m.a
        if fabs(lam) < 1e-12:
            return 1.0
        if lam > 0.0:
            return lam * exp(-lam * zc) / (-expm1(-lam))
        return lam * exp(lam * z) / expm1(lam)
    r = -m.c
    if m.a != 1.0:
        r += (m.a - 1.0) * log(z)
    if m.b != 1.0:
        r += (m.b - 1.0) * log(zc)
    return exp(r)


cdef inline double _mcdf(double z, double zc, Marg* m) noexcept nogil:
    cdef double lam
    if z <= 0.0:
        return 0.0
    if zc <= 0.0:
        return 1.0
    if m.kind == 0:
        return z
    if m.kind == 1:
        lam = m.a
        if fabs(lam) < 1e-12:
            return z
        if lam > 0.0:
            return exp(-lam * zc) * (-expm1(-lam * z)) / (-expm1(-lam))
        return expm1(lam * z) / expm1(lam)
    if z <= 0.5:
        return betainc(m.a, m.b, z)
    return 1.0 - betainc(m.b, m.a, zc)


# ---------------------------------------------------------------- adaptive Simpson

cdef double _asr(func_t f, void* p, double a, double b, double fa, double fm,
                 double fb, double whole, double tol, int depth,
                 int* flag) noexcept nogil:
    cdef double m = 0.5 * (a + b)
    cdef double lm = 0.5 * (a + m)
    cdef double rm = 0.5 * (m + b)
    cdef double flm = f(lm, p)
    cdef double frm = f(rm, p)
    cdef double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    cdef double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    cdef double delta = left + right - whole
    if not isfinite(delta):
        flag[0] = 1
        return left + right
    if fabs(delta) <= 15.0 * tol or (lm <= a) or (b <= rm):
        return left + right + delta / 15.0
    if depth <= 0:
        flag[0] = 1
        return left + right + delta / 15.0
    return (_asr(f, p, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, flag)
            + _asr(f, p, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, flag))


cdef double _simpson(func_t f, void* p, double a, double b, double tol,
                     int max_depth, int n_init, int* flag) noexcept nogil:
    """Adaptive Simpson on ``n_init`` equal starting panels."""
    cdef double total = 0.0, h, x0, x1, f0, f1, fm, whole
    cdef int i
    if b <= a:
        return 0.0
    h = (b - a) / n_init
    x0 = a
    f0 = f(x0, p)
    for i in range(n_init):
        x1 = b if i == n_init - 1 else a + (i + 1) * h
        f1 = f(x1, p)
        fm = f(0.5 * (x0 + x1), p)
        whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1)
        total += _asr(f, p, x0, x1, f0, fm, f1, whole, tol / n_init, max_depth, flag)
        x0 = x1
        f0 = f1
    return total


# ---------------------------------------------------------------- python callables

cdef double _py_call(double x, void* p) noexcept nogil:
    cdef PyPar* pp = <PyPar*> p
    cdef double v
    with gil:
        try:
            v = float((<object> pp.fobj)(x))
        except Exception:
            pp.err = 1
            v = 0.0
    return v


def simpson(f, double a, double b, double tol=1e-10, int max_depth=50):
    """Adaptive Simpson for a Python callable; returns ``(value, converged)``."""
    cdef PyPar pp
    cdef int flag = 0
    cdef double v
    pp.fobj = <void*> f
    pp.err = 0
    v = _simpson(_py_call, &pp, a, b, tol, max_depth, 1, &flag)
    if pp.err:
        # re-raise the callable's exception in Python
        for x in (a, 0.5 * (a + b), b):
            float(f(x))
        raise FloatingPointError("integrand raised during quadrature")
    return v, flag == 0


# ---------------------------------------------------------------- arc length

cdef double _arc_f(double t, void* p) noexcept nogil:
    cdef double q = (<ArcPar*> p).q
    cdef double e = exp(t)
    cdef double r = q / e
    return sqrt(e * e + r * r)


cdef double _arc(double q, double lo, double hi, double tol, int* flag) noexcept nogil:
    cdef ArcPar ap
    if hi <= lo:
        return 0.0
    ap.q = q
    return _simpson(_arc_f, &ap, log(lo), log(hi), tol, 40, 2, flag)


def arc_length(double q, double z_lo, double z_hi, double tol=1e-12):
    """Arc length of ``z2 = q / z1`` over ``z1 in [z_lo, z_hi]``."""
    cdef int flag = 0
    return _arc(q, z_lo, z_hi, tol, &flag)


# ---------------------------------------------------------------- ansatz cell probability

cdef double _cell_f(double xl, void* p) noexcept nogil:
    cdef CellPar* cp = <CellPar*> p
    cdef double q, lo, hi, full, part, fx
    if xl <= XL_EPS or xl >= SQRT2 - XL_EPS:
        return 0.0
    q = 0.5 * xl * xl
    lo = cp.a1
    if cp.b2 > 0.0 and q / cp.b2 > lo:
        lo = q / cp.b2
    if q > lo:
        lo = q
    hi = cp.b1
    if cp.a2 > 0.0 and q / cp.a2 < hi:
        hi = q / cp.a2
    if hi > 1.0:
        hi = 1.0
    if hi <= lo:
        return 0.0
    fx = -xl * log(q)
    full = _arc(q, q, 1.0, cp.inner_tol, &cp.flag)
    if full <= 0.0:
        return 0.0
    if lo <= q and hi >= 1.0:
        return fx
    part = _arc(q, lo, hi, cp.inner_tol, &cp.flag)
    return fx * part / full


cdef double _cell_u(double u, void* p) noexcept nogil:
    # sigmoidal panel map for the panel starting at the origin
    cdef CellPar* cp = <CellPar*> p
    cdef double ds = _dsig(u)
    if ds == 0.0:
        return 0.0
    return _cell_f(cp.x0 + cp.w * _sig(u), p) * cp.w * ds


cdef double _cell_prob(double a1, double b1, double a2, double b2, double tol,
                       double inner_tol, int max_depth, int* flag) noexcept nogil:
    cdef CellPar cp
    cdef double bp[6]
    cdef double tmp, total = 0.0, xa, xb
    cdef int n = 0, i, j
    cp.a1 = a1
    cp.b1 = b1
    cp.a2 = a2
    cp.b2 = b2
    cp.inner_tol = inner_tol
    cp.flag = 0
    xa = sqrt(2.0 * a1 * a2)
    xb = sqrt(2.0 * b1 * b2)
    if xa < XL_EPS:
        xa = XL_EPS
    if xb > SQRT2 - XL_EPS:
        xb = SQRT2 - XL_EPS
    if xb <= xa:
        return 0.0
    bp[n] = xa
    n += 1
    tmp = sqrt(2.0 * a1 * b2)
    if tmp > xa and tmp < xb:
        bp[n] = tmp
        n += 1
    tmp = sqrt(2.0 * b1 * a2)
    if tmp > xa and tmp < xb:
        bp[n] = tmp
        n += 1
    bp[n] = xb
    n += 1
    # sort the (at most 4) breakpoints
    for i in range(1, n):
        j = i
        while j > 0 and bp[j - 1] > bp[j]:
            tmp = bp[j]
            bp[j] = bp[j - 1]
            bp[j - 1] = tmp
            j -= 1
    for i in range(n - 1):
        if bp[i + 1] <= bp[i]:
            continue
        if bp[i] <= XL_EPS:
            # x log x onset at the origin: integrate through the sigmoidal map
            cp.x0 = bp[i]
            cp.w = bp[i + 1] - bp[i]
            total += _simpson(_cell_u, &cp, 0.0, 1.0, tol / (n - 1), max_depth, 4, flag)
        else:
            total += _simpson(_cell_f, &cp, bp[i], bp[i + 1], tol / (n - 1),
                              max_depth, 4, flag)
    if cp.flag:
        flag[0] = 1
    return total


def ansatz_cell_probability(double a1, double b1, double a2, double b2,
                            double tol=1e-7, double inner_tol=1e-11, int max_depth=30):
    """Ansatz probability of the box ``[a1, b1] x [a2, b2]``; ``(value, converged)``."""
    cdef int flag = 0
    cdef double v = _cell_prob(a1, b1, a2, b2, tol, inner_tol, max_depth, &flag)
    return v, flag == 0


def ansatz_cell_grid(double[::1] e1, double[::1] e2, double tol=1e-6,
                     double inner_tol=1e-11, int max_depth=30, int threads=1):
    """Cell probabilities for the tensor grid with edges ``e1`` x ``e2``.

    ``tol`` is per unit area; each cell uses ``tol * area``.
    Returns ``(P, ok)`` with ``P[i, j]`` for cell ``[e1[i], e1[i+1]] x [e2[j], e2[j+1]]``.
    """
    cdef Py_ssize_t n1 = e1.shape[0] - 1, n2 = e2.shape[0] - 1
    cdef cnp.ndarray[double, ndim=2] P = np.zeros((n1, n2))
    cdef cnp.ndarray[cnp.int32_t, ndim=2] F = np.zeros((n1, n2), dtype=np.int32)
    cdef double[:, ::1] Pv = P
    cdef int[:, ::1] Fv = F
    cdef Py_ssize_t k, i, j
    cdef int flag
    cdef double area
    for k in prange(n1 * n2, nogil=True, schedule="dynamic", num_threads=max(threads, 1)):
        i = k // n2
        j = k % n2
        flag = 0
        area = (e1[i + 1] - e1[i]) * (e2[j + 1] - e2[j])
        Pv[i, j] = _cell_prob(e1[i], e1[i + 1], e2[j], e2[j + 1], tol * area,
                              inner_tol, max_depth, &flag)
        Fv[i, j] = flag
    return P, F == 0


# ---------------------------------------------------------------- product pushforward

cdef double _prod_f(double u, void* p) noexcept nogil:
    # z1 = exp(t), t = llo + dlt * s(u); z2 = q / z1
    cdef ProdPar* pp = <ProdPar*> p
    cdef double ds = _dsig(u)
    cdef double s, sc, t1, t2, z1, z1c, z2, z2c, v
    if ds == 0.0:
        return 0.0
    s = _sig(u)
    sc = _sig(1.0 - u)
    t1 = (pp.llo + pp.dlt) - pp.dlt * sc
    t2 = (pp.lq - pp.llo) - pp.dlt * s
    if t1 > 0.0:
        t1 = 0.0
    if t2 > 0.0:
        t2 = 0.0
    z1 = exp(t1)
    z1c = -expm1(t1)
    z2 = exp(t2)
    z2c = -expm1(t2)
    v = _mpdf(z1, z1c, &pp.m1)
    if v == 0.0:
        return 0.0
    v *= _mpdf(z2, z2c, &pp.m2)
    return v * pp.dlt * ds


cdef double _prod_partial(double q, double lo, double hi, Marg m1, Marg m2,
                          double tol, int max_depth, int* flag) noexcept nogil:
    cdef ProdPar pp
    if q <= 0.0 or hi <= lo:
        return 0.0
    pp.lq = log(q)
    pp.llo = log(lo)
    pp.dlt = log(hi) - pp.llo
    if pp.dlt <= 0.0:
        return 0.0
    pp.m1 = m1
    pp.m2 = m2
    return _simpson(_prod_f, &pp, 0.0, 1.0, tol, max_depth, 4, flag)


def product_partial(double q, double lo, double hi, int k1, double a1, double b1,
                    int k2, double a2, double b2, double tol=1e-10, int max_depth=30):
    """``int_lo^hi f1(z1) f2(q / z1) dz1 / z1`` with ``q <= lo <= hi <= 1``."""
    cdef int flag = 0
    cdef double v = _prod_partial(q, lo, hi, _make_marg(k1, a1, b1),
                                  _make_marg(k2, a2, b2), tol, max_depth, &flag)
    return v, flag == 0


def product_pdf(double[::1] q, int k1, double a1, double b1, int k2, double a2,
                double b2, double tol=1e-8, int max_depth=30, int threads=1):
    """Pushforward density of ``Z1 * Z2`` at the nodes ``q``; ``(values, ok)``."""
    cdef Py_ssize_t n = q.shape[0], i
    cdef cnp.ndarray[double] out = np.zeros(n)
    cdef cnp.ndarray[cnp.int32_t] F = np.zeros(n, dtype=np.int32)
    cdef double[::1] ov = out
    cdef int[::1] fv = F
    cdef Marg m1 = _make_marg(k1, a1, b1)
    cdef Marg m2 = _make_marg(k2, a2, b2)
    cdef int flag
    for i in prange(n, nogil=True, schedule="dynamic", num_threads=max(threads, 1)):
        flag = 0
        if q[i] > 0.0 and q[i] < 1.0:
            ov[i] = _prod_partial(q[i], q[i], 1.0, m1, m2, tol, max_depth, &flag)
        fv[i] = flag
    return out, F == 0


# ---------------------------------------------------------------- sum pushforward

cdef double _sum_f(double u, void* p) noexcept nogil:
    cdef SumPar* sp = <SumPar*> p
    cdef double ds = _dsig(u)
    cdef double s, sc, w, z1, z1c, z2, z2c, v
    if ds == 0.0:
        return 0.0
    s = _sig(u)
    sc = _sig(1.0 - u)
    w = sp.hi - sp.lo
    z1 = sp.lo + w * s
    z1c = (1.0 - sp.hi) + w * sc
    z2 = (sp.qt - sp.hi) + w * sc
    z2c = (1.0 - sp.qt + sp.lo) + w * s
    v = _mpdf(z1, z1c, &sp.m1)
    if v == 0.0:
        return 0.0
    v *= _mpdf(z2, z2c, &sp.m2)
    return v * w * ds


cdef double _sum_node(double qt, Marg m1, Marg m2, double tol, int max_depth,
                      int* flag) noexcept nogil:
    cdef SumPar sp
    if qt <= 0.0 or qt >= 2.0:
        return 0.0
    sp.qt = qt
    sp.lo = qt - 1.0 if qt > 1.0 else 0.0
    sp.hi = qt if qt < 1.0 else 1.0
    sp.m1 = m1
    sp.m2 = m2
    return _simpson(_sum_f, &sp, 0.0, 1.0, tol, max_depth, 4, flag)


def sum_pdf(double[::1] q, int k1, double a1, double b1, int k2, double a2,
            double b2, double tol=1e-8, int max_depth=30, int threads=1):
    """Pushforward density of ``Z1 + Z2`` at the nodes ``q``; ``(values, ok)``."""
    cdef Py_ssize_t n = q.shape[0], i
    cdef cnp.ndarray[double] out = np.zeros(n)
    cdef cnp.ndarray[cnp.int32_t] F = np.zeros(n, dtype=np.int32)
    cdef double[::1] ov = out
    cdef int[::1] fv = F
    cdef Marg m1 = _make_marg(k1, a1, b1)
    cdef Marg m2 = _make_marg(k2, a2, b2)
    cdef int flag
    for i in prange(n, nogil=True, schedule="dynamic", num_threads=max(threads, 1)):
        flag = 0
        ov[i] = _sum_node(q[i], m1, m2, tol, max_depth, &flag)
        fv[i] = flag
    return out, F == 0


# ---------------------------------------------------------------- band masses

cdef double _band_f(double u, void* p) noexcept nogil:
    cdef BandPar* bp = <BandPar*> p
    cdef double ds = _dsig(u)
    cdef double w, z1, z1c, top, f1, lo2, hi2
    if ds == 0.0:
        return 0.0
    w = bp.hi - bp.lo
    z1 = bp.lo + w * _sig(u)
    z1c = (1.0 - bp.hi) + w * _sig(1.0 - u)
    if z1 <= 0.0:
        return 0.0
    f1 = _mpdf(z1, z1c, &bp.m1)
    if f1 == 0.0:
        return 0.0
    lo2 = bp.q_lo / z1
    hi2 = bp.q_hi / z1
    if hi2 >= 1.0:
        top = 1.0
    else:
        top = _mcdf(hi2, 1.0 - hi2, &bp.m2)
    return f1 * (top - _mcdf(lo2, 1.0 - lo2, &bp.m2)) * w * ds


def band_masses(double q_lo, double q_hi, double[::1] edges, int k1, double a1,
                double b1, int k2, double a2, double b2, double tol=1e-12,
                int max_depth=30):
    """Mass of ``{q_lo <= z1 z2 <= q_hi}`` over each z1 slab ``[edges[i], edges[i+1]]``."""
    cdef Py_ssize_t n = edges.shape[0] - 1, i
    cdef cnp.ndarray[double] out = np.zeros(n)
    cdef BandPar bp
    cdef int flag = 0
    cdef double a, b, cut
    bp.q_lo = q_lo
    bp.q_hi = q_hi
    bp.m1 = _make_marg(k1, a1, b1)
    bp.m2 = _make_marg(k2, a2, b2)
    for i in range(n):
        a = edges[i]
        b = edges[i + 1]
        if b <= a:
            continue
        # kink where the outer contour leaves through z2 = 1
        cut = q_hi
        if cut > a and cut < b:
            bp.lo = a
            bp.hi = cut
            out[i] = _simpson(_band_f, &bp, 0.0, 1.0, tol, max_depth, 2, &flag)
            bp.lo = cut
            bp.hi = b
            out[i] += _simpson(_band_f, &bp, 0.0, 1.0, tol, max_depth, 2, &flag)
        else:
            bp.lo = a
            bp.hi = b
            out[i] = _simpson(_band_f, &bp, 0.0, 1.0, tol, max_depth, 2, &flag)
    return out, flag == 0
