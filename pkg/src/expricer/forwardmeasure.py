"""Bond-numeraire and asset-numeraire applications: the stochastic-rate
expected call (generic and with a Gaussian one-factor rate), the exchange
option, and the expected corporate bond price in a stationary-leverage
first-passage model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InstabilityError, ParameterError
from .mathutils import b_factor, norm_cdf
from .measures import HorizonSpec
from .shortrate import VasicekParams, vasicek_bond_price, vasicek_expected_bond

__all__ = [
    "MertonInputs", "merton_expected_call",
    "MertonVasicekSpec", "expected_asset_price_vasicek",
    "merton_vasicek_expected_call", "merton_vasicek_vp",
    "MargrabeSpec", "margrabe_expected_exchange", "margrabe_price",
    "CDGSpec", "cdg_default_probability", "cdg_expected_bond",
    "cdg_mean_variance",
]


# ---------------------------------------------------------------------------
# stochastic-rate expected call, generic form


@dataclass(frozen=True)
class MertonInputs:
    """The four quantities the stochastic-rate expected call depends on:
    expected asset price at H, expected bond price at H, integrated hedge
    volatility over [t, T], and the strike."""

    E_SH: float
    E_PHT: float
    vp: float
    K: float

    def __post_init__(self):
        if self.E_SH <= 0.0 or self.E_PHT <= 0.0 or self.K <= 0.0:
            raise ParameterError("E_SH, E_PHT, and K must be positive")
        if self.vp < 0.0:
            raise ParameterError("vp must be non-negative")


def merton_expected_call(inputs: MertonInputs) -> float:
    """E[S_H] N(d1) - K E[P(H,T)] N(d2) with
    d1,2 = ln(E[S_H] / (E[P(H,T)] K)) / vp +- vp / 2.

    At vp = 0 the forward-intrinsic limit applies. Homogeneous of degree
    one in (E[S_H], E[P(H,T)]).
    """
    if inputs.vp == 0.0:
        return max(inputs.E_SH - inputs.K * inputs.E_PHT, 0.0)
    log_m = math.log(inputs.E_SH / (inputs.E_PHT * inputs.K))
    d1 = log_m / inputs.vp + 0.5 * inputs.vp
    d2 = d1 - inputs.vp
    return inputs.E_SH * norm_cdf(d1) - inputs.K * inputs.E_PHT * norm_cdf(d2)


# ---------------------------------------------------------------------------
# one-factor Gaussian-rate instantiation


@dataclass(frozen=True)
class MertonVasicekSpec:
    """Lognormal asset with constant risk premium per unit volatility,
    correlated with a mean-reverting Gaussian short rate.

    dS/S = (r + gamma sigma) ds + sigma dW1,
    dr   = alpha_r (m_r - r) ds + sigma_r dW2,  corr(W1, W2) = rho.
    """

    S_t: float
    sigma: float
    gamma: float
    rho: float
    rates: VasicekParams
    r_t: float

    def __post_init__(self):
        if self.S_t <= 0.0 or self.sigma <= 0.0:
            raise ParameterError("S_t and sigma must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"correlation must lie in [-1, 1], got {self.rho}")


def expected_asset_price_vasicek(spec: MertonVasicekSpec, hz: HorizonSpec) -> float:
    """E_t[S_H] under the correlated Gaussian-rate dynamics."""
    p = spec.rates
    tau = hz.to_horizon
    ba = b_factor(p.alpha_r, tau)
    b2a = b_factor(2.0 * p.alpha_r, tau)
    sr2 = p.sigma_r ** 2 / (2.0 * p.alpha_r ** 2)
    cross = spec.rho * spec.sigma * p.sigma_r / p.alpha_r
    expo = ((p.m_r + spec.gamma * spec.sigma + sr2 + cross) * tau
            + (spec.r_t - p.m_r) * ba
            + sr2 * (b2a - 2.0 * ba) - cross * ba)
    return spec.S_t * math.exp(expo)


def merton_vasicek_vp(spec: MertonVasicekSpec, tau: float) -> float:
    """Integrated hedge volatility over a window of length tau: the asset
    leg, the bond-return leg sigma_r B(T-s), and their correlation."""
    p = spec.rates
    ba = b_factor(p.alpha_r, tau)
    b2a = b_factor(2.0 * p.alpha_r, tau)
    ratio = p.sigma_r ** 2 / p.alpha_r ** 2
    cross = 2.0 * spec.rho * spec.sigma * p.sigma_r / p.alpha_r
    var = ((spec.sigma ** 2 + ratio + cross) * tau
           + ratio * (b2a - 2.0 * ba) - cross * ba)
    return math.sqrt(max(var, 0.0))


def merton_vasicek_expected_call(spec: MertonVasicekSpec, K: float,
                                 hz: HorizonSpec) -> float:
    """Expected time-H call price with the Gaussian-rate legs wired in."""
    e_s = expected_asset_price_vasicek(spec, hz)
    e_p = vasicek_expected_bond(spec.rates, spec.r_t, hz)
    vp = merton_vasicek_vp(spec, hz.to_maturity)
    return merton_expected_call(MertonInputs(E_SH=e_s, E_PHT=e_p, vp=vp, K=K))


# ---------------------------------------------------------------------------
# exchange option with a Gaussian rate


@dataclass(frozen=True)
class MargrabeSpec:
    """Two correlated lognormal assets with a shared Gaussian short rate.

    Asset j: dS_j/S_j = (r + gamma_j sigma_j) ds + sigma_j dW_j;
    rho_12 links the assets, rho_1r and rho_2r link each to the rate.
    The option pays (S_2T - S_1T)^+ at T.
    """

    S1_t: float
    S2_t: float
    sigma1: float
    sigma2: float
    gamma1: float
    gamma2: float
    rho_12: float
    rho_1r: float
    rho_2r: float
    rates: VasicekParams
    r_t: float

    def __post_init__(self):
        if min(self.S1_t, self.S2_t) <= 0.0:
            raise ParameterError("asset prices must be positive")
        if min(self.sigma1, self.sigma2) <= 0.0:
            raise ParameterError("volatilities must be positive")
        for name in ("rho_12", "rho_1r", "rho_2r"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ParameterError(f"{name} must lie in [-1, 1]")
        corr = np.array([
            [1.0, self.rho_12, self.rho_1r],
            [self.rho_12, 1.0, self.rho_2r],
            [self.rho_1r, self.rho_2r, 1.0],
        ])
        if np.any(np.linalg.eigvalsh(corr) < -1e-10):
            raise ParameterError("correlation matrix is not positive semidefinite")

    def leg(self, which: int) -> MertonVasicekSpec:
        s, sig, gam, rho = ((self.S1_t, self.sigma1, self.gamma1, self.rho_1r)
                            if which == 1 else
                            (self.S2_t, self.sigma2, self.gamma2, self.rho_2r))
        return MertonVasicekSpec(S_t=s, sigma=sig, gamma=gam, rho=rho,
                                 rates=self.rates, r_t=self.r_t)


def margrabe_expected_exchange(spec: MargrabeSpec, hz: HorizonSpec) -> float:
    """Expected time-H price of the option to exchange asset 1 for asset 2:

        E[S_2H] N(d1) - E[S_1H] N(d2),
        d1,2 = ln(E[S_2H] / E[S_1H]) / vp +- vp / 2,
        vp = sqrt((sigma1^2 + sigma2^2 - 2 rho_12 sigma1 sigma2)(T - t)).

    The rate parameters matter only through the expected asset prices; the
    hedge variance is rate-free.
    """
    e1 = expected_asset_price_vasicek(spec.leg(1), hz)
    e2 = expected_asset_price_vasicek(spec.leg(2), hz)
    var = (spec.sigma1 ** 2 + spec.sigma2 ** 2
           - 2.0 * spec.rho_12 * spec.sigma1 * spec.sigma2) * hz.to_maturity
    vp = math.sqrt(max(var, 0.0))
    if vp == 0.0:
        return max(e2 - e1, 0.0)
    d1 = math.log(e2 / e1) / vp + 0.5 * vp
    d2 = d1 - vp
    return e2 * norm_cdf(d1) - e1 * norm_cdf(d2)


def margrabe_price(S1: float, S2: float, sigma1: float, sigma2: float,
                   rho_12: float, tau: float) -> float:
    """Classical exchange-option price with spot inputs (no rate inputs)."""
    var = (sigma1 ** 2 + sigma2 ** 2 - 2.0 * rho_12 * sigma1 * sigma2) * tau
    vp = math.sqrt(max(var, 0.0))
    if vp == 0.0:
        return max(S2 - S1, 0.0)
    d1 = math.log(S2 / S1) / vp + 0.5 * vp
    d2 = d1 - vp
    return S2 * norm_cdf(d1) - S1 * norm_cdf(d2)


# ---------------------------------------------------------------------------
# stationary-leverage first-passage corporate bond


@dataclass(frozen=True)
class CDGSpec:
    """Firm with a mean-reverting log-leverage ratio and Gaussian rates.

    The log-leverage l = ln(debt/assets) reverts at speed lam toward a
    target driven by the short rate; default is the first passage of l to
    the barrier ln K from below, and bondholders then recover a fraction
    1 - omega of an otherwise-identical default-free bond.
    """

    lam: float            # leverage mean-reversion speed
    nu: float             # target offset
    phi: float            # target rate sensitivity
    sigma: float          # asset volatility
    gamma_S: float        # asset risk premium per unit volatility
    rho: float            # asset-rate correlation
    rates: VasicekParams
    lnK: float            # default barrier for l
    omega: float          # loss fraction in [0, 1]
    n_grid: int = 200

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ParameterError(f"lam must be positive, got {self.lam}")
        if not 0.0 <= self.omega <= 1.0:
            raise ParameterError(f"omega must lie in [0, 1], got {self.omega}")
        if self.n_grid < 2:
            raise ParameterError(f"n_grid must be at least 2, got {self.n_grid}")
        if self.sigma <= 0.0:
            raise ParameterError("sigma must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError("rho must lie in [-1, 1]")
        if abs(self.lam - self.rates.alpha_r) < 1e-6:
            raise ParameterError(
                "lam too close to alpha_r: the conditional moments are "
                "numerically unstable at that removable singularity")

    @property
    def l_bar(self) -> float:
        return self.sigma ** 2 / (2.0 * self.lam) - self.nu


def cdg_mean_variance(spec: CDGSpec, l_t: float, r_t: float, u: float,
                      hz: HorizonSpec):
    """Conditional mean and variance of l_{t+u} given time-t information,
    under the bond-numeraire hybrid measure."""
    return _cdg_mean(spec, l_t, r_t, u, hz), _cdg_var(spec, u)


def _cdg_mean(spec: CDGSpec, l_t: float, r_t: float, u: float,
              hz: HorizonSpec) -> float:
    p = spec.rates
    lam, ar = spec.lam, p.alpha_r
    olp = 1.0 + lam * spec.phi
    sr, sig, rho = p.sigma_r, spec.sigma, spec.rho
    h_off = hz.H - hz.t
    t_off = hz.T - hz.t
    m = (l_t * math.exp(-lam * u)
         - olp * (r_t - p.m_r) * math.exp(-ar * u) * b_factor(lam - ar, u)
         - (rho * sig * sr / ar + olp * sr ** 2 / (2.0 * ar ** 2))
         * (math.exp(-ar * (t_off - u)) - math.exp(-ar * (h_off - u)))
         * b_factor(lam + ar, u)
         + olp * sr ** 2 / (2.0 * ar ** 2)
         * (math.exp(-ar * (t_off - u)) - math.exp(-ar * (h_off - u)))
         * math.exp(-2.0 * ar * u) * b_factor(lam - ar, u)
         + (lam * spec.l_bar - sig * spec.gamma_S - olp * p.m_r)
         * b_factor(lam, u))
    if u >= h_off:
        m += (-olp * (sr ** 2 / (2.0 * ar ** 2) + sr * p.gamma_r / ar)
              * math.exp(-ar * (u - h_off)) * b_factor(lam - ar, u - h_off)
              - (rho * sig * sr / ar + olp * sr ** 2 / (2.0 * ar ** 2))
              * math.exp(-ar * (h_off - u)) * b_factor(lam + ar, u - h_off)
              + (rho * sig * sr / ar + sig * spec.gamma_S
                 + olp * (sr ** 2 / ar ** 2 + sr * p.gamma_r / ar))
              * b_factor(lam, u - h_off))
    return m


def _cdg_var(spec: CDGSpec, u: float) -> float:
    p = spec.rates
    lam, ar = spec.lam, p.alpha_r
    c1 = (1.0 + lam * spec.phi) * p.sigma_r / (lam - ar)
    cross = 2.0 * spec.rho * spec.sigma * p.sigma_r * (1.0 + lam * spec.phi) / (lam - ar)
    return (c1 ** 2 * b_factor(2.0 * ar, u)
            + (spec.sigma ** 2 + c1 ** 2 - cross) * b_factor(2.0 * lam, u)
            + (cross - 2.0 * c1 ** 2) * b_factor(lam + ar, u))


def _cdg_cov(spec: CDGSpec, u: float, s: float) -> float:
    """Covariance of l_u and l_s given time-t information (u >= s),
    with times measured as offsets from t."""
    p = spec.rates
    lam, ar = spec.lam, p.alpha_r
    c1 = (1.0 + lam * spec.phi) * p.sigma_r / (lam - ar)
    cross = spec.rho * spec.sigma * p.sigma_r * (1.0 + lam * spec.phi) / (lam - ar)
    term1 = c1 ** 2 * (math.exp(-ar * (u - s)) - math.exp(-ar * (u + s))) / (2.0 * ar)
    term2 = ((spec.sigma ** 2 + c1 ** 2 - 2.0 * cross)
             * (math.exp(-lam * (u - s)) - math.exp(-lam * (u + s))) / (2.0 * lam))
    term3 = ((cross - c1 ** 2)
             * (math.exp(-ar * (u - s)) - math.exp(-ar * u - lam * s)
                - math.exp(-ar * s - lam * u) + math.exp(-lam * (u - s)))
             / (lam + ar))
    return term1 + term2 + term3


def cdg_default_probability(spec: CDGSpec, l_t: float, r_t: float,
                            hz: HorizonSpec):
    """First-passage probability of the log-leverage ratio to the barrier
    over [t, T] under the bond-numeraire hybrid measure.

    Discretizes [t, T] into n_grid uniform dates and solves the standard
    barrier-conditioning triangular recursion: the probability of being at
    or above the barrier at date i decomposes over the first-crossing
    date j <= i. Returns (total probability, per-date marginals q).
    """
    if l_t >= spec.lnK:
        raise ParameterError(
            f"already in default: l_t = {l_t} is at or above the barrier {spec.lnK}")
    n = spec.n_grid
    delta = hz.to_maturity / n
    if delta <= 0.0:
        return 0.0, np.zeros(n)
    offsets = delta * np.arange(1, n + 1)

    means = np.array([_cdg_mean(spec, l_t, r_t, u, hz) for u in offsets])
    variances = np.array([_cdg_var(spec, u) for u in offsets])
    usable = variances >= 1e-14
    sds = np.sqrt(np.where(usable, variances, 1.0))
    n_a = norm_cdf(np.where(usable, (means - spec.lnK) / sds, -np.inf))

    q = np.zeros(n)
    for i in range(n):
        if not usable[i]:
            continue
        acc = n_a[i]
        for j in range(i):
            if q[j] == 0.0 or not usable[j]:
                continue
            cov = _cdg_cov(spec, offsets[i], offsets[j])
            m_cond = means[i] + cov / variances[j] * (spec.lnK - means[j])
            v_cond = variances[i] * (1.0 - cov ** 2 / (variances[i] * variances[j]))
            if v_cond < 1e-14:
                b_ij = math.inf if m_cond >= spec.lnK else -math.inf
            else:
                b_ij = (m_cond - spec.lnK) / math.sqrt(v_cond)
            acc -= norm_cdf(b_ij) * q[j]
        # The same-date conditional probability N(b_ii) is a 0/0 limit that
        # resolves to 1/2 (the conditional mean approaches the barrier one
        # order faster than the conditional standard deviation).
        q[i] = 2.0 * acc
        if q[i] < -1e-6:
            raise InstabilityError(
                f"first-passage recursion went negative (q[{i}] = {q[i]:.3g})")
    total = float(np.sum(q))
    return total, q


def cdg_expected_bond(spec: CDGSpec, state, hz: HorizonSpec) -> float:
    """Expected time-H price of the firm's maturity-T discount bond:

        E[P(H,T)] * (1 - omega * Pr(first passage before T)).

    With omega = 0 this returns the default-free expected bond price
    exactly.
    """
    l_t, r_t = state
    e_p = vasicek_expected_bond(spec.rates, r_t, hz)
    if spec.omega == 0.0:
        return e_p
    prob, _ = cdg_default_probability(spec, l_t, r_t, hz)
    return e_p * (1.0 - spec.omega * prob)
