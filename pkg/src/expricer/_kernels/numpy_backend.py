"""Pure-numpy implementations of the hot kernels.

These are the fallback when the compiled extension is unavailable and the
reference the extension is tested against. Per-path arithmetic follows the
same operation order as the compiled code, so the two backends agree to
floating-point rounding (bitwise for the pure-arithmetic kernels).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def crr_backward(values, prob, disc, n_levels):
    """Roll option values back ``n_levels`` binomial levels.

    values : terminal node values, length m (modified copy returned)
    prob   : up-move probability for every rolled level
    disc   : one-period discount factor applied at every rolled level
    """
    v = np.asarray(values, dtype=float).copy()
    for _ in range(n_levels):
        v = disc * (prob * v[1:] + (1.0 - prob) * v[:-1])
    return v


def cir_step_chunk(r, integral, z, step0, h_step, dt,
                   alpha, m, alpha_star, m_star, sigma):
    """Advance square-root-diffusion paths over a chunk of Euler steps.

    Full-truncation scheme: the drift and diffusion both use max(r, 0).
    The drift switches from (alpha, m) to (alpha_star, m_star) at global
    step index ``h_step``; the running trapezoid of max(r,0) accumulates
    into ``integral`` only on steps at or after ``h_step``. Both arrays are
    updated in place.
    """
    n_steps = z.shape[0]
    sq_dt = np.sqrt(dt)
    for k in range(n_steps):
        step = step0 + k
        rp = np.maximum(r, 0.0)
        if step >= h_step:
            drift = alpha_star * (m_star - rp)
        else:
            drift = alpha * (m - rp)
        r_next = r + drift * dt + sigma * np.sqrt(rp) * (sq_dt * z[k])
        if step >= h_step:
            integral += 0.5 * (rp + np.maximum(r_next, 0.0)) * dt
        r[...] = r_next
    return r, integral


def cdg_step_chunk(l, r, log_survival, z1, z2, c_l, c_r, step0, dt,
                   lam, one_lam_phi, alpha_r, sigma_r, sigma, rho, barrier):
    """Advance log-leverage/short-rate paths and fold in bridge crossings.

    c_l, c_r : per-step deterministic drift constants (time-dependent part)
    log_survival accumulates log(1 - p_bridge); paths at or above the
    barrier get -inf. Arrays are updated in place.
    """
    n_steps = z1.shape[0]
    sq_dt = np.sqrt(dt)
    rho_c = np.sqrt(1.0 - rho * rho)
    inv_var = 2.0 / (sigma * sigma * dt)
    for k in range(n_steps):
        step = step0 + k
        l_next = (l + (c_l[step] - one_lam_phi * r - lam * l) * dt
                  + sigma * (rho * (sq_dt * z1[k]) + rho_c * (sq_dt * z2[k])))
        r_next = r + (c_r[step] - alpha_r * r) * dt + sigma_r * (sq_dt * z1[k])
        d0 = barrier - l
        d1 = barrier - l_next
        hit = (d0 <= 0.0) | (d1 <= 0.0)
        # Brownian-bridge probability of touching the barrier inside the step
        p_bridge = np.exp(-inv_var * np.maximum(d0, 0.0) * np.maximum(d1, 0.0))
        with np.errstate(divide="ignore"):
            incr = np.where(hit, -np.inf, np.log1p(-np.where(hit, 0.0, p_bridge)))
        log_survival += incr
        l[...] = l_next
        r[...] = r_next
    return l, r, log_survival
