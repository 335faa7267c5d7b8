"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same algorithms, same return conventions. Used when the
extension is unavailable or when ``SIPKIT_PURE_PYTHON=1`` is set. The
``threads`` arguments are accepted and ignored.
"""

import math

import numpy as np
from scipy.special import betainc as _betainc

XL_EPS = 1e-6
SQRT2 = math.sqrt(2.0)


class _Flag:
    __slots__ = ("bad",)

    def __init__(self):
        self.bad = False


def _sig(u):
    v = 1.0 - u
    u5 = u * u * u * u * u
    return u5 * (126.0 * v * v * v * v + 84.0 * u * v * v * v + 36.0 * u * u * v * v
                 + 9.0 * u * u * u * v + u * u * u * u)


def _dsig(u):
    w = u * (1.0 - u)
    return 630.0 * w * w * w * w


def _make_marg(kind, a, b):
    c = 0.0
    if kind == 2:
        c = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return (int(kind), float(a), float(b), c)


def _mpdf(z, zc, m):
    kind, a, b, c = m
    if z < 0.0 or zc < 0.0:
        return 0.0
    if kind == 0:
        return 1.0
    if kind == 1:
        lam = a
        if abs(lam) < 1e-12:
            return 1.0
        if lam > 0.0:
            return lam * math.exp(-lam * zc) / (-math.expm1(-lam))
        return lam * math.exp(lam * z) / math.expm1(lam)
    r = -c
    try:
        if a != 1.0:
            r += (a - 1.0) * math.log(z)
        if b != 1.0:
            r += (b - 1.0) * math.log(zc)
    except ValueError:
        return math.inf
    return math.exp(r) if r < 700.0 else math.inf


def _mcdf(z, zc, m):
    kind, a, b, _ = m
    if z <= 0.0:
        return 0.0
    if zc <= 0.0:
        return 1.0
    if kind == 0:
        return z
    if kind == 1:
        lam = a
        if abs(lam) < 1e-12:
            return z
        if lam > 0.0:
            return math.exp(-lam * zc) * (-math.expm1(-lam * z)) / (-math.expm1(-lam))
        return math.expm1(lam * z) / math.expm1(lam)
    if z <= 0.5:
        return float(_betainc(a, b, z))
    return 1.0 - float(_betainc(b, a, zc))


def _asr(f, a, b, fa, fm, fb, whole, tol, depth, flag):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if not math.isfinite(delta):
        flag.bad = True
        return left + right
    if abs(delta) <= 15.0 * tol or lm <= a or b <= rm:
        return left + right + delta / 15.0
    if depth <= 0:
        flag.bad = True
        return left + right + delta / 15.0
    return (_asr(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, flag)
            + _asr(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, flag))


def _simpson(f, a, b, tol, max_depth, n_init, flag):
    if b <= a:
        return 0.0
    h = (b - a) / n_init
    total = 0.0
    x0 = a
    f0 = f(x0)
    for i in range(n_init):
        x1 = b if i == n_init - 1 else a + (i + 1) * h
        f1 = f(x1)
        fm = f(0.5 * (x0 + x1))
        whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1)
        total += _asr(f, x0, x1, f0, fm, f1, whole, tol / n_init, max_depth, flag)
        x0, f0 = x1, f1
    return total


def simpson(f, a, b, tol=1e-10, max_depth=50):
    """Adaptive Simpson for a Python callable; returns ``(value, converged)``."""
    flag = _Flag()
    v = _simpson(lambda x: float(f(x)), float(a), float(b), tol, max_depth, 1, flag)
    return v, not flag.bad


def _arc(q, lo, hi, tol, flag):
    if hi <= lo:
        return 0.0

    def g(t):
        e = math.exp(t)
        r = q / e
        return math.sqrt(e * e + r * r)

    return _simpson(g, math.log(lo), math.log(hi), tol, 40, 2, flag)


def arc_length(q, z_lo, z_hi, tol=1e-12):
    """Arc length of ``z2 = q / z1`` over ``z1 in [z_lo, z_hi]``."""
    return _arc(float(q), float(z_lo), float(z_hi), tol, _Flag())


def _cell_prob(a1, b1, a2, b2, tol, inner_tol, max_depth, flag):
    def g(xl):
        if xl <= XL_EPS or xl >= SQRT2 - XL_EPS:
            return 0.0
        q = 0.5 * xl * xl
        lo = a1
        if b2 > 0.0 and q / b2 > lo:
            lo = q / b2
        lo = max(lo, q)
        hi = b1
        if a2 > 0.0 and q / a2 < hi:
            hi = q / a2
        hi = min(hi, 1.0)
        if hi <= lo:
            return 0.0
        fx = -xl * math.log(q)
        full = _arc(q, q, 1.0, inner_tol, flag)
        if full <= 0.0:
            return 0.0
        if lo <= q and hi >= 1.0:
            return fx
        return fx * _arc(q, lo, hi, inner_tol, flag) / full

    xa = max(math.sqrt(2.0 * a1 * a2), XL_EPS)
    xb = min(math.sqrt(2.0 * b1 * b2), SQRT2 - XL_EPS)
    if xb <= xa:
        return 0.0
    bp = [xa, xb]
    for t in (math.sqrt(2.0 * a1 * b2), math.sqrt(2.0 * b1 * a2)):
        if xa < t < xb:
            bp.append(t)
    bp.sort()
    n = len(bp)
    total = 0.0
    for i in range(n - 1):
        x0, w = bp[i], bp[i + 1] - bp[i]
        if w <= 0.0:
            continue
        if x0 <= XL_EPS:

            def gu(u, x0=x0, w=w):
                ds = _dsig(u)
                return 0.0 if ds == 0.0 else g(x0 + w * _sig(u)) * w * ds

            total += _simpson(gu, 0.0, 1.0, tol / (n - 1), max_depth, 4, flag)
        else:
            total += _simpson(g, x0, x0 + w, tol / (n - 1), max_depth, 4, flag)
    return total


def ansatz_cell_probability(a1, b1, a2, b2, tol=1e-7, inner_tol=1e-11, max_depth=30):
    """Ansatz probability of the box ``[a1, b1] x [a2, b2]``; ``(value, converged)``."""
    flag = _Flag()
    v = _cell_prob(float(a1), float(b1), float(a2), float(b2), tol, inner_tol,
                   max_depth, flag)
    return v, not flag.bad


def ansatz_cell_grid(e1, e2, tol=1e-6, inner_tol=1e-11, max_depth=30, threads=1):
    """Cell probabilities for the tensor grid with edges ``e1`` x ``e2``."""
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    n1, n2 = len(e1) - 1, len(e2) - 1
    P = np.zeros((n1, n2))
    ok = np.ones((n1, n2), dtype=bool)
    for i in range(n1):
        for j in range(n2):
            flag = _Flag()
            area = (e1[i + 1] - e1[i]) * (e2[j + 1] - e2[j])
            P[i, j] = _cell_prob(e1[i], e1[i + 1], e2[j], e2[j + 1], tol * area,
                                 inner_tol, max_depth, flag)
            ok[i, j] = not flag.bad
    return P, ok


def _prod_partial(q, lo, hi, m1, m2, tol, max_depth, flag):
    if q <= 0.0 or hi <= lo:
        return 0.0
    lq = math.log(q)
    llo = math.log(lo)
    dlt = math.log(hi) - llo
    if dlt <= 0.0:
        return 0.0

    def g(u):
        ds = _dsig(u)
        if ds == 0.0:
            return 0.0
        s = _sig(u)
        sc = _sig(1.0 - u)
        t1 = min((llo + dlt) - dlt * sc, 0.0)
        t2 = min((lq - llo) - dlt * s, 0.0)
        v = _mpdf(math.exp(t1), -math.expm1(t1), m1)
        if v == 0.0:
            return 0.0
        return v * _mpdf(math.exp(t2), -math.expm1(t2), m2) * dlt * ds

    return _simpson(g, 0.0, 1.0, tol, max_depth, 4, flag)


def product_partial(q, lo, hi, k1, a1, b1, k2, a2, b2, tol=1e-10, max_depth=30):
    """``int_lo^hi f1(z1) f2(q / z1) dz1 / z1`` with ``q <= lo <= hi <= 1``."""
    flag = _Flag()
    v = _prod_partial(float(q), float(lo), float(hi), _make_marg(k1, a1, b1),
                      _make_marg(k2, a2, b2), tol, max_depth, flag)
    return v, not flag.bad


def product_pdf(q, k1, a1, b1, k2, a2, b2, tol=1e-8, max_depth=30, threads=1):
    """Pushforward density of ``Z1 * Z2`` at the nodes ``q``; ``(values, ok)``."""
    q = np.asarray(q, dtype=float)
    m1 = _make_marg(k1, a1, b1)
    m2 = _make_marg(k2, a2, b2)
    out = np.zeros(len(q))
    ok = np.ones(len(q), dtype=bool)
    for i, qi in enumerate(q):
        flag = _Flag()
        if 0.0 < qi < 1.0:
            out[i] = _prod_partial(qi, qi, 1.0, m1, m2, tol, max_depth, flag)
        ok[i] = not flag.bad
    return out, ok


def _sum_node(qt, m1, m2, tol, max_depth, flag):
    if qt <= 0.0 or qt >= 2.0:
        return 0.0
    lo = qt - 1.0 if qt > 1.0 else 0.0
    hi = qt if qt < 1.0 else 1.0
    w = hi - lo

    def g(u):
        ds = _dsig(u)
        if ds == 0.0:
            return 0.0
        s = _sig(u)
        sc = _sig(1.0 - u)
        v = _mpdf(lo + w * s, (1.0 - hi) + w * sc, m1)
        if v == 0.0:
            return 0.0
        return v * _mpdf((qt - hi) + w * sc, (1.0 - qt + lo) + w * s, m2) * w * ds

    return _simpson(g, 0.0, 1.0, tol, max_depth, 4, flag)


def sum_pdf(q, k1, a1, b1, k2, a2, b2, tol=1e-8, max_depth=30, threads=1):
    """Pushforward density of ``Z1 + Z2`` at the nodes ``q``; ``(values, ok)``."""
    q = np.asarray(q, dtype=float)
    m1 = _make_marg(k1, a1, b1)
    m2 = _make_marg(k2, a2, b2)
    out = np.zeros(len(q))
    ok = np.ones(len(q), dtype=bool)
    for i, qi in enumerate(q):
        flag = _Flag()
        out[i] = _sum_node(float(qi), m1, m2, tol, max_depth, flag)
        ok[i] = not flag.bad
    return out, ok


def band_masses(q_lo, q_hi, edges, k1, a1, b1, k2, a2, b2, tol=1e-12, max_depth=30):
    """Mass of ``{q_lo <= z1 z2 <= q_hi}`` over each z1 slab ``[edges[i], edges[i+1]]``."""
    edges = np.asarray(edges, dtype=float)
    m1 = _make_marg(k1, a1, b1)
    m2 = _make_marg(k2, a2, b2)
    flag = _Flag()

    def piece(lo, hi):
        w = hi - lo

        def g(u):
            ds = _dsig(u)
            if ds == 0.0:
                return 0.0
            z1 = lo + w * _sig(u)
            if z1 <= 0.0:
                return 0.0
            f1 = _mpdf(z1, (1.0 - hi) + w * _sig(1.0 - u), m1)
            if f1 == 0.0:
                return 0.0
            lo2 = q_lo / z1
            hi2 = q_hi / z1
            top = 1.0 if hi2 >= 1.0 else _mcdf(hi2, 1.0 - hi2, m2)
            return f1 * (top - _mcdf(lo2, 1.0 - lo2, m2)) * w * ds

        return _simpson(g, 0.0, 1.0, tol, max_depth, 2, flag)

    out = np.zeros(len(edges) - 1)
    for i in range(len(edges) - 1):
        a, b = edges[i], edges[i + 1]
        if b <= a:
            continue
        if a < q_hi < b:
            out[i] = piece(a, q_hi) + piece(q_hi, b)
        else:
            out[i] = piece(a, b)
    return out, not flag.bad
