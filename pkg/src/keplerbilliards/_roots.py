"""Vectorized bracketed root finding."""

import numpy as np


def bracketed_newton(fdf, lo, hi, xtol=1e-14, maxiter=100):
    """Solve f(x) = 0 elementwise on brackets [lo, hi] with a sign change.

    ``fdf(x)`` returns ``(f, df)`` for an array ``x``.  Newton steps that
    leave the current bracket are replaced by bisection, so convergence is
    guaranteed for any continuous f with f(lo) f(hi) <= 0.  Elements stop
    once the step falls below ``xtol * (1 + |x|)``.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    f_lo, _ = fdf(lo)
    s_lo = np.sign(f_lo)
    x = 0.5 * (lo + hi)
    done = np.zeros(x.shape, bool)
    for _ in range(maxiter):
        f, df = fdf(x)
        same = np.sign(f) == s_lo
        lo = np.where(same, x, lo)
        hi = np.where(same, hi, x)
        hit = f == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = f / df
        tol = xtol * (1.0 + np.abs(x))
        small = np.isfinite(newton) & (np.abs(newton) <= tol)
        xn = x - newton
        bad = ~np.isfinite(xn) | (xn < lo) | (xn > hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        xn = np.where(hit | done | small, x, xn)
        done |= hit | small | (hi - lo <= tol)
        x = xn
        if done.all():
            break
    return x
