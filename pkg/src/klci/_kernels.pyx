# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled KL_inf dual kernels.

Same algorithms and return conventions as ``_kernels_py``; see that module
for the derivation of the ray parameterization.
"""

from libc.math cimport fabs, log, log1p, exp, pow, sqrt, NAN, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double S_MAX = 1.0 - 1e-12
cdef int INNER_MAXITER = 200
cdef int OUTER_MAXITER = 500
cdef double OUTER_XTOL = 1e-10
cdef double GOLDEN = 0.3819660112501051
cdef double SQRT_EPS = 1.4832396974191326e-08


cdef struct InnerResult:
    double value
    double s
    int iterations
    bint converged


cdef InnerResult _logsum_max(const double* c, const double* w, Py_ssize_t n,
                             double s_max) noexcept nogil:
    cdef InnerResult res
    cdef Py_ssize_t i
    cdef double d0 = 0.0, d1, d2, den, ri, mind, s, s_new, lo, hi, acc
    cdef int it = 0
    res.converged = False
    for i in range(n):
        d0 += w[i] * c[i]
    if d0 <= 0.0:
        res.value = 0.0
        res.s = 0.0
        res.iterations = 0
        res.converged = True
        return res
    d1 = 0.0
    mind = INFINITY
    for i in range(n):
        den = 1.0 + s_max * c[i]
        if den < mind:
            mind = den
        d1 += w[i] * c[i] / den
    if mind > 0.0 and d1 >= 0.0:
        acc = 0.0
        for i in range(n):
            acc += w[i] * log1p(s_max * c[i])
        res.value = acc
        res.s = s_max
        res.iterations = 0
        res.converged = True
        return res
    lo = 0.0
    hi = s_max
    d2 = 0.0
    for i in range(n):
        d2 += w[i] * c[i] * c[i]
    s = d0 / d2
    if s > 0.5 * s_max:
        s = 0.5 * s_max
    while it < INNER_MAXITER:
        it += 1
        d1 = 0.0
        d2 = 0.0
        mind = INFINITY
        for i in range(n):
            den = 1.0 + s * c[i]
            if den < mind:
                mind = den
            ri = c[i] / den
            d1 += w[i] * ri
            d2 += w[i] * ri * ri
        if mind <= 0.0:
            hi = s
            s = 0.5 * (lo + hi)
            continue
        if d1 > 0.0:
            lo = s
        else:
            hi = s
        if fabs(d1) < 1e-12 or hi - lo < 1e-15:
            res.converged = True
            break
        s_new = s + d1 / d2
        if not (lo < s_new and s_new < hi):
            s_new = 0.5 * (lo + hi)
        s = s_new
    acc = 0.0
    for i in range(n):
        acc += w[i] * log1p(s * c[i])
    res.value = acc
    res.s = s
    res.iterations = it
    return res


def logsum_max(const double[::1] c, const double[::1] w, double s_max=S_MAX):
    """Maximize sum(w * log1p(s * c)) over s in [0, s_max]."""
    cdef InnerResult r
    with nogil:
        r = _logsum_max(&c[0], &w[0], c.shape[0], s_max)
    return r.value, r.s, r.iterations, bool(r.converged)


cdef struct HeavyRay:
    const double* w
    const double* a
    const double* b
    double* c
    Py_ssize_t n
    double p
    double eps
    double x
    double gap
    double r0
    int evals


cdef inline void _ray(HeavyRay* h, double v, double* r, double* dr) noexcept nogil:
    cdef double rr = h.r0 + exp(v)
    cdef double y = pow(rr / h.p, 1.0 / h.eps)
    cdef double bpart = pow(fabs(h.x), h.p) + h.eps * pow(y, h.p) - rr * h.x
    if bpart < 0.0:
        bpart = 0.0
    r[0] = rr
    dr[0] = h.gap + bpart


cdef InnerResult _ray_solve(HeavyRay* h, double v) noexcept nogil:
    cdef double r, dr
    cdef Py_ssize_t i
    h.evals += 1
    _ray(h, v, &r, &dr)
    for i in range(h.n):
        h.c[i] = (h.a[i] * r + h.b[i]) / dr
    return _logsum_max(h.c, h.w, h.n, S_MAX)


cdef inline double _ray_value(HeavyRay* h, double v) noexcept nogil:
    return _ray_solve(h, v).value


cdef void _bracket_max(HeavyRay* h, double v0, double step, double* out) noexcept nogil:
    # out = (va, vb, vc, fb)
    cdef double vlo = -740.0, vhi = 700.0
    cdef double va, vb, vc, fa, fb, fc
    fb = _ray_value(h, v0)
    vb = v0
    vc = min(v0 + step, vhi)
    fc = _ray_value(h, vc)
    if fc > fb:
        va = vb
        fa = fb
        vb = vc
        fb = fc
        while vb < vhi:
            step *= 1.6
            vc = min(vb + step, vhi)
            fc = _ray_value(h, vc)
            if fc <= fb:
                out[0] = va; out[1] = vb; out[2] = vc; out[3] = fb
                return
            va = vb
            fa = fb
            vb = vc
            fb = fc
        out[0] = va; out[1] = vb; out[2] = vb; out[3] = fb
        return
    va = max(v0 - step, vlo)
    fa = _ray_value(h, va)
    if fa <= fb:
        out[0] = va; out[1] = vb; out[2] = vc; out[3] = fb
        return
    vc = vb
    fc = fb
    vb = va
    fb = fa
    while vb > vlo:
        step *= 1.6
        va = max(vb - step, vlo)
        fa = _ray_value(h, va)
        if fa <= fb:
            out[0] = va; out[1] = vb; out[2] = vc; out[3] = fb
            return
        vc = vb
        fc = fb
        vb = va
        fb = fa
    out[0] = vb; out[1] = vb; out[2] = vc; out[3] = fb


cdef bint _brent_max(HeavyRay* h, double a, double b, double x0, double f0,
                     double* xbest) noexcept nogil:
    cdef double x = x0, w = x0, v = x0
    cdef double fx = -f0, fw = -f0, fv = -f0
    cdef double d = 0.0, e = 0.0, xm, tol1, tol2, r, q, p, u, fu
    cdef int it = 0
    cdef bint golden
    while it < OUTER_MAXITER:
        xm = 0.5 * (a + b)
        tol1 = SQRT_EPS * fabs(x) + OUTER_XTOL / 3.0
        tol2 = 2.0 * tol1
        if fabs(x - xm) <= tol2 - 0.5 * (b - a):
            xbest[0] = x
            return True
        golden = True
        if fabs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = fabs(q)
            r = e
            e = d
            if fabs(p) < fabs(0.5 * q * r) and q * (a - x) < p and p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if xm >= x else -tol1
                golden = False
        if golden:
            e = (a - x) if x >= xm else (b - x)
            d = GOLDEN * e
        if fabs(d) >= tol1:
            u = x + d
        elif d > 0.0:
            u = x + tol1
        else:
            u = x - tol1
        fu = -_ray_value(h, u)
        it += 1
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v = w
            fv = fw
            w = x
            fw = fx
            x = u
            fx = fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v = w
                fv = fw
                w = u
                fw = fu
            elif fu <= fv or v == x or v == w:
                v = u
                fv = fu
    xbest[0] = x
    return False


def heavy_upper(const double[::1] values, const double[::1] weights, double x, double eps,
                double gamma, double r_hint=NAN):
    """Upper-side heavy-tailed dual: (value, lam1, lam2, evaluations, converged, r)."""
    cdef Py_ssize_t n = values.shape[0], i
    cdef double p = 1.0 + eps
    cdef double m = 0.0, mp = 0.0, ap
    cdef double[::1] a = np.empty(n)
    cdef double[::1] b = np.empty(n)
    cdef double[::1] c = np.empty(n)
    cdef HeavyRay h
    cdef double v0, step, vbest, r, dr
    cdef double br[4]
    cdef bint converged
    cdef InnerResult res
    for i in range(n):
        m += weights[i] * values[i]
    if x <= m:
        return 0.0, 0.0, 0.0, 0, True, NAN
    with nogil:
        for i in range(n):
            ap = pow(fabs(values[i]), p)
            mp += weights[i] * ap
            a[i] = x - values[i]
            b[i] = ap - gamma
        h.w = &weights[0]
        h.a = &a[0]
        h.b = &b[0]
        h.c = &c[0]
        h.n = n
        h.p = p
        h.eps = eps
        h.x = x
        h.gap = gamma - pow(fabs(x), p)
        h.r0 = max((gamma - mp) / (x - m), 0.0)
        h.evals = 0
        if r_hint > h.r0:
            v0 = log(r_hint - h.r0)
            step = 0.25
        else:
            v0 = log(p * pow(max(fabs(x), 1.0), eps))
            step = 1.0
        _bracket_max(&h, v0, step, br)
        if br[0] < br[2]:
            converged = _brent_max(&h, br[0], br[2], br[1], br[3], &vbest)
        else:
            vbest = br[1]
            converged = True
        res = _ray_solve(&h, vbest)
        _ray(&h, vbest, &r, &dr)
    return (res.value, res.s * r / dr, res.s / dr, h.evals,
            bool(converged and res.converged), r)
