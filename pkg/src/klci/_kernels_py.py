"""Pure numpy implementation of the KL_inf dual kernels.

This is the reference backend.  ``_kernels.pyx`` implements exactly the
same algorithms in compiled form; ``_backend`` picks one at import time.

Both dual problems reduce to the univariate concave maximization

    F(s) = sum_i w_i log(1 + s c_i),    s in [0, s_max],

with c_i >= -1.  For the bounded family c_i = (x - X_i) / (1 - x) on the
upper side and (X_i - x) / x on the lower side.  For the
heavy-tailed family the bivariate dual is written along rays
lambda = s (r, 1) / D(r), on which the feasibility constraint reads s <= 1,
and the ray parameter r is optimized by Brent's method in the outer loop.
"""

from __future__ import annotations

import math

import numpy as np

S_MAX = 1.0 - 1e-12
INNER_MAXITER = 200
OUTER_MAXITER = 500
OUTER_XTOL = 1e-10

_GOLDEN = 0.5 * (3.0 - math.sqrt(5.0))
_SQRT_EPS = math.sqrt(2.2e-16)


def logsum_max(c, w, s_max=S_MAX):
    """Maximize sum(w * log1p(s * c)) over s in [0, s_max].

    Safeguarded Newton on the derivative, which is strictly decreasing, with
    a bisection fallback.  Returns ``(value, s, iterations, converged)``.
    """
    d0 = float(w @ c)
    if d0 <= 0.0:
        return 0.0, 0.0, 0, True
    den = 1.0 + s_max * c
    if den.min() > 0.0 and float(w @ (c / den)) >= 0.0:
        return float(w @ np.log1p(s_max * c)), s_max, 0, True
    lo, hi = 0.0, s_max
    s = min(d0 / float(w @ (c * c)), 0.5 * s_max)
    it = 0
    converged = False
    while it < INNER_MAXITER:
        it += 1
        den = 1.0 + s * c
        if den.min() <= 0.0:
            hi = s
            s = 0.5 * (lo + hi)
            continue
        r = c / den
        d1 = float(w @ r)
        if d1 > 0.0:
            lo = s
        else:
            hi = s
        if abs(d1) < 1e-12 or hi - lo < 1e-15:
            converged = True
            break
        d2 = float(w @ (r * r))
        s_new = s + d1 / d2
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        s = s_new
    return float(w @ np.log1p(s * c)), s, it, converged


class _HeavyRay:
    """Objective of the heavy-tailed dual along the ray family, in v = log(r - r0)."""

    def __init__(self, values, weights, x, eps, gamma):
        p = 1.0 + eps
        self.p = p
        self.eps = eps
        self.x = x
        self.w = weights
        absp = np.abs(values) ** p
        self.a = x - values
        self.b = absp - gamma
        self.gap = gamma - abs(x) ** p
        m = float(weights @ values)
        self.r0 = max((gamma - float(weights @ absp)) / (x - m), 0.0)
        self.evals = 0

    def ray(self, v):
        r = self.r0 + math.exp(v)
        y = (r / self.p) ** (1.0 / self.eps)
        # gap plus a Bregman-type term that is >= 0
        bpart = abs(self.x) ** self.p + self.eps * y**self.p - r * self.x
        return r, self.gap + max(bpart, 0.0)

    def solve(self, v):
        self.evals += 1
        r, dr = self.ray(v)
        c = (self.a * r + self.b) / dr
        return logsum_max(c, self.w)

    def __call__(self, v):
        return self.solve(v)[0]


def _bracket_max(f, v0, step):
    """Expand from v0 until (va, vb, vc) with f(vb) >= max(f(va), f(vc))."""
    vlo, vhi = -740.0, 700.0
    fb = f(v0)
    vb = v0
    vc = min(v0 + step, vhi)
    fc = f(vc)
    if fc > fb:
        va, fa = vb, fb
        vb, fb = vc, fc
        while vb < vhi:
            step *= 1.6
            vc = min(vb + step, vhi)
            fc = f(vc)
            if fc <= fb:
                return va, vb, vc, fb
            va, fa = vb, fb
            vb, fb = vc, fc
        return va, vb, vb, fb
    va = max(v0 - step, vlo)
    fa = f(va)
    if fa <= fb:
        return va, vb, vc, fb
    vc, fc = vb, fb
    vb, fb = va, fa
    while vb > vlo:
        step *= 1.6
        va = max(vb - step, vlo)
        fa = f(va)
        if fa <= fb:
            return va, vb, vc, fb
        vc, fc = vb, fb
        vb, fb = va, fa
    return vb, vb, vc, fb


def brent_max(f, a, b, x0, f0, xtol=OUTER_XTOL, maxiter=OUTER_MAXITER):
    """Brent's method for the maximum of a unimodal f on [a, b].

    ``x0`` is an interior point with known value ``f0``; it is used as the
    initial best point.  Returns ``(xbest, fbest, iterations, converged)``.
    """
    x = w = v = x0
    fx = fw = fv = -f0
    d = e = 0.0
    it = 0
    while it < maxiter:
        xm = 0.5 * (a + b)
        tol1 = _SQRT_EPS * abs(x) + xtol / 3.0
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            return x, -fx, it, True
        golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            r = e
            e = d
            if abs(p) < abs(0.5 * q * r) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if xm >= x else -tol1
                golden = False
        if golden:
            e = (a - x) if x >= xm else (b - x)
            d = _GOLDEN * e
        u = x + (d if abs(d) >= tol1 else (tol1 if d > 0 else -tol1))
        fu = -f(u)
        it += 1
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, fv = w, fw
            w, fw = x, fx
            x, fx = u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv = w, fw
                w, fw = u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, -fx, it, False


def heavy_upper(values, weights, x, eps, gamma, r_hint=math.nan):
    """Upper-side heavy-tailed dual.

    Returns ``(value, lam1, lam2, iterations, converged, r)`` where ``r`` is
    the optimal ray parameter lam1 / lam2, usable as ``r_hint`` for a nearby
    target.
    """
    m = float(weights @ values)
    if x <= m:
        return 0.0, 0.0, 0.0, 0, True, math.nan
    obj = _HeavyRay(values, weights, x, eps, gamma)
    if r_hint > obj.r0:
        v0 = math.log(r_hint - obj.r0)
        step = 0.25
    else:
        v0 = math.log((1.0 + eps) * max(abs(x), 1.0) ** eps)
        step = 1.0
    va, vb, vc, fb = _bracket_max(obj, v0, step)
    if va < vc:
        vbest, fbest, _, converged = brent_max(obj, va, vc, vb, fb)
    else:
        vbest, fbest, converged = vb, fb, True
    value, s, _, ok = obj.solve(vbest)
    r, dr = obj.ray(vbest)
    return value, s * r / dr, s / dr, obj.evals, converged and ok, r
