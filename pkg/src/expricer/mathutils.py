"""Shared numerical primitives.

One normal CDF is used library-wide (erf-based, accurate to ~1e-16) so
that parity identities hold to the last digit across modules.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from .errors import DivergenceError, InversionError, ToleranceError

__all__ = [
    "norm_cdf",
    "norm_pdf",
    "b_factor",
    "expm1_ratio",
    "decay_diff_ratio",
    "rk4_solve",
    "rk4_path",
    "hybrid_root",
    "adaptive_gauss_legendre",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def norm_cdf(x):
    """Standard normal CDF. erf-based; shared by every pricing formula."""
    return ndtr(x)


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def expm1_ratio(x):
    """(e^x - 1) / x with the removable singularity at x = 0 filled in."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-12
    out = np.where(nz, np.expm1(np.where(nz, x, 1.0)) / np.where(nz, x, 1.0), out)
    if out.ndim == 0:
        return float(out)
    return out


def b_factor(alpha, tau):
    """(1 - e^{-alpha*tau}) / alpha, continuous through alpha = 0."""
    tau = np.asarray(tau, dtype=float)
    res = tau * np.asarray(expm1_ratio(-alpha * tau))
    if res.ndim == 0:
        return float(res)
    return res


def decay_diff_ratio(a, b, tau):
    """(e^{-a*tau} - e^{-b*tau}) / (b - a), continuous through a = b."""
    return math.exp(-a * tau) * tau * expm1_ratio(-(b - a) * tau)


def rk4_solve(f, y0, tau, steps, *, blowup=1e12, record=False, phase_guard=False,
              max_halvings=12):
    """Integrate dy/dtau = f(tau, y) from 0 to tau with classical RK4.

    ``y0`` may be real or complex, scalar-array shaped. With ``record`` the
    full trajectory is returned as (grid, values); otherwise only y(tau).

    With ``phase_guard`` (used for complex characteristic exponents) a step
    whose leading component changes phase by more than pi/2 is re-done at
    half the step size, recursively, which keeps the integration on the
    continuous branch.
    """
    y = np.array(y0, dtype=complex if phase_guard or np.iscomplexobj(y0) else float)
    if steps < 1:
        if record:
            return np.array([0.0]), y[None, ...].copy()
        return y
    h = tau / steps
    if record:
        grid = np.linspace(0.0, tau, steps + 1)
        out = np.empty((steps + 1,) + y.shape, dtype=y.dtype)
        out[0] = y
    s = 0.0
    for i in range(steps):
        y = _rk4_step_guarded(f, s, y, h, blowup, phase_guard, max_halvings)
        s += h
        if record:
            out[i + 1] = y
    if record:
        return grid, out
    return y


def _rk4_step(f, s, y, h):
    k1 = f(s, y)
    k2 = f(s + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(s + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(s + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_step_guarded(f, s, y, h, blowup, phase_guard, depth):
    y1 = _rk4_step(f, s, y, h)
    if not np.all(np.isfinite(np.abs(y1))) or np.max(np.abs(y1)) > blowup:
        raise DivergenceError(f"ODE solution diverged near tau = {s + h:.6g}")
    if phase_guard and depth > 0:
        jump = _max_phase_jump(y, y1)
        if jump > 0.5 * math.pi:
            half = 0.5 * h
            ya = _rk4_step_guarded(f, s, y, half, blowup, phase_guard, depth - 1)
            return _rk4_step_guarded(f, s + half, ya, half, blowup, phase_guard, depth - 1)
    return y1


def _max_phase_jump(y0, y1):
    d = np.atleast_1d(np.imag(y1) - np.imag(y0))
    return float(np.max(np.abs(d)))


def rk4_path(f, y0, tau, steps, **kw):
    """Convenience wrapper: rk4_solve with record=True."""
    return rk4_solve(f, y0, tau, steps, record=True, **kw)


def hybrid_root(f, lo, hi, *, tol=1e-10, max_iter=100, df=None):
    """Bracketed Newton/bisection hybrid root finder.

    The iterate takes a Newton step when a derivative is available and the
    step stays inside the bracket, otherwise it bisects. Raises
    InversionError when the values at ``lo`` and ``hi`` do not bracket a
    root, and ToleranceError if the iteration cap is hit.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise InversionError(
            f"no sign change on [{lo:.6g}, {hi:.6g}]: f(lo)={flo:.6g}, f(hi)={fhi:.6g}"
        )
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0.0 or (hi - lo) < tol or abs(fx) < 1e-300:
            return x
        if flo * fx < 0.0:
            hi = x
        else:
            lo, flo = x, fx
        x_new = None
        if df is not None:
            d = df(x)
            if d != 0.0 and np.isfinite(d):
                cand = x - fx / d
                if lo < cand < hi:
                    x_new = cand
        if x_new is None:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < tol:
            return x_new
        x = x_new
    raise ToleranceError(f"root not bracketed to {tol:g} in {max_iter} iterations",
                         estimate=x, achieved_tol=hi - lo)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _panel(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid + half * _GL_NODES
    return half * float(np.dot(_GL_WEIGHTS, f(x)))


def adaptive_gauss_legendre(f, a, b, *, abs_tol=1e-8, max_depth=14):
    """Adaptive Gauss-Legendre quadrature of a vectorized real integrand.

    Each panel is accepted when splitting it changes the estimate by less
    than its share of the tolerance. Panels are summed left to right so the
    result is deterministic. Raises ToleranceError (carrying the achieved
    estimate) if the recursion depth cap is hit anywhere.
    """
    nodes_used = 0

    def recurse(a, b, whole, tol, depth):
        nonlocal nodes_used
        mid = 0.5 * (a + b)
        left = _panel(f, a, mid)
        right = _panel(f, mid, b)
        nodes_used += 2 * _GL_NODES.size
        if abs(left + right - whole) <= tol:
            return left + right
        if depth >= max_depth:
            raise ToleranceError(
                f"quadrature panel [{a:.6g}, {b:.6g}] did not converge",
                estimate=left + right, achieved_tol=abs(left + right - whole))
        return (recurse(a, mid, left, 0.5 * tol, depth + 1)
                + recurse(mid, b, right, 0.5 * tol, depth + 1))

    whole = _panel(f, a, b)
    nodes_used += _GL_NODES.size
    value = recurse(a, b, whole, abs_tol, 0)
    return value, nodes_used
