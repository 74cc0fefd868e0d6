"""Closed-form expected future prices under lognormal dynamics with a
constant short rate: the expected European call/put and the forward-start
option in both horizon regimes.
"""

from __future__ import annotations

import math

from .errors import ParameterError
from .mathutils import norm_cdf
from .measures import GBMSpec, HorizonSpec

__all__ = [
    "bs_call_price",
    "bs_put_price",
    "bs_expected_call",
    "bs_expected_put",
    "fso_expected_price",
]


def bs_call_price(S: float, K: float, sigma: float, r: float,
                  t: float, T: float) -> float:
    """Standard European call price at time t (maturity T)."""
    tau = T - t
    if tau < 0.0:
        raise ParameterError("maturity before valuation time")
    if K <= 0.0:
        return S - K * math.exp(-r * tau)
    if tau == 0.0:
        return max(S - K, 0.0)
    sd = sigma * math.sqrt(tau)
    if sd == 0.0:
        return max(S - K * math.exp(-r * tau), 0.0)
    d1 = (math.log(S / K) + (r + 0.5 * sigma * sigma) * tau) / sd
    d2 = d1 - sd
    return S * norm_cdf(d1) - K * math.exp(-r * tau) * norm_cdf(d2)


def bs_put_price(S: float, K: float, sigma: float, r: float,
                 t: float, T: float) -> float:
    """Standard European put price via parity."""
    return bs_call_price(S, K, sigma, r, t, T) - S + K * math.exp(-r * (T - t))


def bs_expected_call(spec: GBMSpec, K: float, hz: HorizonSpec) -> float:
    """Time-t expectation of the call's price at the horizon H.

    The asset grows at the physical drift until H and the strike leg is
    discounted only over [H, T]:

        S e^{mu (H-t)} N(d1) - K e^{-r (T-H)} N(d2)

    with d1,2 = [ln(S/K) + mu (H-t) + r (T-H) +- sigma^2 (T-t)/2]
    / (sigma sqrt(T-t)). Degenerate cases (T = t, zero total variance,
    K = 0) are handled by explicit limit branches. At H = t this is the
    Black-Scholes price; at H = T it is the undiscounted physical
    expectation of the payoff.
    """
    if K < 0.0:
        raise ParameterError(f"strike must be non-negative, got {K}")
    tau_h = hz.to_horizon
    tau_d = hz.horizon_to_maturity
    tau = hz.to_maturity
    fwd_growth = math.exp(spec.mu * tau_h)
    if K == 0.0:
        return spec.S0 * fwd_growth
    if tau == 0.0:
        return max(spec.S0 - K, 0.0)
    sd = spec.sigma * math.sqrt(tau)
    log_m = math.log(spec.S0 / K) + spec.mu * tau_h + spec.r * tau_d
    disc = math.exp(-spec.r * tau_d)
    if sd == 0.0:
        # deterministic terminal price: a step function of the moneyness
        return max(spec.S0 * fwd_growth - K * disc, 0.0) if log_m == 0.0 \
            else (spec.S0 * fwd_growth - K * disc if log_m > 0.0 else 0.0)
    d1 = (log_m + 0.5 * sd * sd) / sd
    d2 = d1 - sd
    return spec.S0 * fwd_growth * norm_cdf(d1) - K * disc * norm_cdf(d2)


def bs_expected_put(spec: GBMSpec, K: float, hz: HorizonSpec) -> float:
    """Expected put price, defined by expected-price put-call parity:

        E[P_H] = E[C_H] - S e^{mu (H-t)} + K e^{-r (T-H)}.
    """
    if K < 0.0:
        raise ParameterError(f"strike must be non-negative, got {K}")
    return (bs_expected_call(spec, K, hz)
            - spec.S0 * math.exp(spec.mu * hz.to_horizon)
            + K * math.exp(-spec.r * hz.horizon_to_maturity))


def fso_expected_price(spec: GBMSpec, k: float, T0: float,
                       hz: HorizonSpec) -> float:
    """Expected time-H price of a forward-start call.

    The strike is set at T0 as k times the then-prevailing asset price and
    the payoff (S_T - k S_T0)^+ pays at T. Homogeneity reduces both
    horizon orderings to a unit-spot option value times an expected asset
    price:

      H <= T0:  S e^{mu (H-t)} * C(1, k; sigma, r; T0 -> T)
      H >= T0:  S e^{mu (T0-t)} * EC(1, k; sigma, r, mu; T0, H, T)

    where C is the Black-Scholes price and EC the expected call above.
    The two branches coincide at H = T0.
    """
    if k < 0.0:
        raise ParameterError(f"strike fraction must be non-negative, got {k}")
    if not (hz.t <= T0 <= hz.T):
        raise ParameterError(f"strike-set date T0={T0} outside [t, T]")
    if hz.H <= T0:
        unit = bs_call_price(1.0, k, spec.sigma, spec.r, T0, hz.T)
        return spec.S0 * math.exp(spec.mu * hz.to_horizon) * unit
    unit_spec = GBMSpec(S0=1.0, mu=spec.mu, sigma=spec.sigma, r=spec.r)
    unit = bs_expected_call(unit_spec, k, HorizonSpec(T0, hz.H, hz.T))
    return spec.S0 * math.exp(spec.mu * (T0 - hz.t)) * unit
