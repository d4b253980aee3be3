"""Independent reference computations used by the tests.

None of these call into the code they check: the constrained maximizer is
an iterative ascent on the constraint surface, the fixed-point oracle is a
hand-written bisection, and the special functions use mpmath.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

mpmath.mp.dps = 40


def ellipsoid_maximizer(r_hat, weights, budget, iters=4000):
    """Maximize r^T d subject to sum(weights * d^2) = budget.

    Riemannian gradient ascent: project the gradient onto the tangent plane
    of the ellipsoid, take a step, then rescale radially back onto the
    surface. Each row keeps its own step size, grown after an improving
    step and halved otherwise. The fixed point has r parallel to the
    surface normal. Vectorized over a leading batch axis.
    """
    r = np.atleast_2d(np.asarray(r_hat, dtype=np.float64))
    w = np.broadcast_to(np.atleast_2d(np.asarray(weights, dtype=np.float64)), r.shape)
    budget = np.broadcast_to(np.asarray(budget, dtype=np.float64), r.shape[:1])
    # Start from a random feasible point rather than anything informed by r.
    d = np.random.default_rng(0).standard_normal(r.shape)

    def retract(v):
        return v * np.sqrt(budget / np.sum(w * v * v, axis=1))[:, None]

    d = retract(d)
    obj = np.sum(r * d, axis=1)
    step = 0.5 * np.sqrt(budget)[:, None] / np.linalg.norm(r, axis=1, keepdims=True)
    for _ in range(iters):
        normal = w * d
        nn = np.sum(normal * normal, axis=1, keepdims=True)
        g = r - np.sum(r * normal, axis=1, keepdims=True) / nn * normal
        cand = retract(d + step * g)
        cobj = np.sum(r * cand, axis=1)
        better = cobj >= obj
        d = np.where(better[:, None], cand, d)
        obj = np.where(better, cobj, obj)
        step = np.where(better[:, None], step * 1.2, step * 0.5)
        step = np.maximum(step, 1e-300)
    return d


def tilt_fixed_point(pi0, r, w, offset=1.0, tol=1e-15):
    """Solve log(p/pi0) = (r - lam)/w - offset with sum(p) = 1 by bisection on lam."""
    pi0, r, w = (np.asarray(v, dtype=np.float64) for v in (pi0, r, w))

    def total(lam):
        with np.errstate(over="ignore"):
            return np.sum(pi0 * np.exp((r - lam) / w - offset))

    lo = np.min(r - w * (offset + 50.0 - np.log(np.maximum(pi0, 1e-300)).min()))
    hi = np.max(r + w * 50.0)
    while total(lo) < 1.0:
        lo -= abs(lo) + 1.0
    while total(hi) > 1.0:
        hi += abs(hi) + 1.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if total(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    lam = 0.5 * (lo + hi)
    p = pi0 * np.exp((r - lam) / w - offset)
    return p / p.sum()


def kl(p, q):
    p, q = np.asarray(p), np.asarray(q)
    m = p > 0
    return float(np.sum(p[m] * (np.log(p[m]) - np.log(q[m]))))


def central_difference(f, x, h=1e-5):
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def mp_normal_cdf(z):
    return float(mpmath.ncdf(mpmath.mpf(z)))


def _mp_f_cdf(x, d1, d2):
    x = mpmath.mpf(x)
    return mpmath.betainc(mpmath.mpf(d1) / 2, mpmath.mpf(d2) / 2, 0, d1 * x / (d1 * x + d2),
                          regularized=True)


def mp_f_cdf(x, d1, d2):
    return float(_mp_f_cdf(x, d1, d2))


def mp_t_cdf(x, df):
    x = mpmath.mpf(x)
    tail = 0.5 * mpmath.betainc(df / 2.0, 0.5, 0, df / (df + x * x), regularized=True)
    return float(1 - tail if x >= 0 else tail)


def mp_chi2_tail(x, df):
    return float(mpmath.gammainc(df / 2.0, x / 2.0, mpmath.inf, regularized=True))


def mp_f_ppf(q, d1, d2):
    return float(mpmath.findroot(lambda x: _mp_f_cdf(x, d1, d2) - q, 1.5))


def erf_normal_cdf(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
