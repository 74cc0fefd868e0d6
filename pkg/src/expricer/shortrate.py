"""One- and three-factor short-rate models with closed-form expected
future bond prices: mean-reverting Gaussian (Vasicek), square-root (CIR),
and the three-factor family with one square-root volatility factor.

Every expected price composes two exponent legs: a pricing leg over
[H, T] under drift-adjusted parameters and a physical leg over [t, H]
seeded with the pricing leg's terminal loadings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .mathutils import b_factor, decay_diff_ratio
from .measures import HorizonSpec
from .riccati import riccati_solve

__all__ = [
    "VasicekParams", "vasicek_ab", "vasicek_bond_price", "vasicek_expected_bond",
    "CIRParams", "cir_ab", "cir_bond_price", "cir_expected_bond",
    "A1R3Params", "a1r3_expected_bond", "a1r3_bond_price", "a1r3_to_affine_spec",
]


# ---------------------------------------------------------------------------
# mean-reverting Gaussian short rate


@dataclass(frozen=True)
class VasicekParams:
    """dr = alpha_r (m_r - r) ds + sigma_r dW with constant risk price gamma_r."""

    alpha_r: float
    m_r: float
    sigma_r: float
    gamma_r: float = 0.0

    def __post_init__(self):
        if self.alpha_r <= 0.0:
            raise ParameterError(f"alpha_r must be positive, got {self.alpha_r}")

    @property
    def m_star(self) -> float:
        return self.m_r - self.sigma_r * self.gamma_r / self.alpha_r


def vasicek_ab(b: float, c: float, alpha: float, m: float, sigma_r: float,
               tau: float):
    """Exponent coefficients for E[exp(-b r_{s+tau} - c int r)] under an
    Ornstein-Uhlenbeck rate: returns (A, B) with the expectation equal to
    exp(-A - B r_s)."""
    ba = b_factor(alpha, tau)
    e2 = (1.0 - math.exp(-2.0 * alpha * tau)) / (2.0 * alpha)
    a_val = (alpha * m * (b * ba + c * (tau - ba) / alpha)
             - 0.5 * sigma_r ** 2 * (b * b * e2 + b * c * ba * ba
                                     + c * c * (2.0 * tau - 2.0 * ba - alpha * ba * ba)
                                     / (2.0 * alpha ** 2)))
    b_val = b * math.exp(-alpha * tau) + c * ba
    return a_val, b_val


def vasicek_bond_price(params: VasicekParams, r_t: float, t: float, T: float) -> float:
    """Current discount bond price (classical single-leg formula)."""
    a1, b1 = vasicek_ab(0.0, 1.0, params.alpha_r, params.m_star,
                        params.sigma_r, T - t)
    return math.exp(-a1 - b1 * r_t)


def vasicek_expected_bond(params: VasicekParams, r_t: float,
                          hz: HorizonSpec) -> float:
    """Expected time-H price of the maturity-T bond.

    Pricing leg over T - H with the risk-adjusted long-run mean, physical
    leg over H - t seeded with the pricing leg's rate loading.
    """
    a_star, b_star = vasicek_ab(0.0, 1.0, params.alpha_r, params.m_star,
                                params.sigma_r, hz.horizon_to_maturity)
    a_p, b_p = vasicek_ab(b_star, 0.0, params.alpha_r, params.m_r,
                          params.sigma_r, hz.to_horizon)
    return math.exp(-a_star - a_p - b_p * r_t)


# ---------------------------------------------------------------------------
# square-root short rate


@dataclass(frozen=True)
class CIRParams:
    """dr = alpha_r (m_r - r) ds + sigma_r sqrt(r) dW, risk price
    gamma_r sqrt(r). Warns (does not raise) when 2 alpha_r m_r < sigma_r^2."""

    alpha_r: float
    m_r: float
    sigma_r: float
    gamma_r: float = 0.0

    def __post_init__(self):
        if self.alpha_r <= 0.0:
            raise ParameterError(f"alpha_r must be positive, got {self.alpha_r}")
        if self.sigma_r <= 0.0:
            raise ParameterError(f"sigma_r must be positive, got {self.sigma_r}")
        if self.alpha_r + self.gamma_r * self.sigma_r <= 0.0:
            raise ParameterError("risk-adjusted mean reversion must stay positive")
        if 2.0 * self.alpha_r * self.m_r < self.sigma_r ** 2:
            import warnings
            warnings.warn("square-root process can reach zero: "
                          "2 alpha_r m_r < sigma_r^2", stacklevel=2)

    @property
    def alpha_star(self) -> float:
        return self.alpha_r + self.gamma_r * self.sigma_r

    @property
    def m_star(self) -> float:
        return self.alpha_r * self.m_r / self.alpha_star


def cir_ab(b: float, c: float, alpha: float, m: float, sigma_r: float,
           tau: float):
    """Exponent coefficients for the square-root rate; the expectation is
    exp(-A - B r_s) with discriminant beta = sqrt(alpha^2 + 2 sigma^2 c)."""
    beta = math.sqrt(alpha * alpha + 2.0 * sigma_r * sigma_r * c)
    ebt = math.expm1(beta * tau)          # e^{beta tau} - 1
    denom = b * sigma_r * sigma_r * ebt + (beta - alpha) + (ebt + 1.0) * (beta + alpha)
    a_val = (-2.0 * alpha * m / sigma_r ** 2
             * math.log(2.0 * beta * math.exp(0.5 * (beta + alpha) * tau) / denom))
    b_val = (b * ((beta + alpha) + (ebt + 1.0) * (beta - alpha)) + 2.0 * c * ebt) / denom
    return a_val, b_val


def cir_bond_price(params: CIRParams, r_t: float, t: float, T: float) -> float:
    """Current discount bond price (classical single-leg formula)."""
    a1, b1 = cir_ab(0.0, 1.0, params.alpha_star, params.m_star,
                    params.sigma_r, T - t)
    return math.exp(-a1 - b1 * r_t)


def cir_expected_bond(params: CIRParams, r_t: float, hz: HorizonSpec) -> float:
    """Expected time-H price of the maturity-T bond under the square-root
    rate, composed exactly like the Gaussian case."""
    if r_t < 0.0:
        raise ParameterError(f"short rate must be non-negative, got {r_t}")
    a_star, b_star = cir_ab(0.0, 1.0, params.alpha_star, params.m_star,
                            params.sigma_r, hz.horizon_to_maturity)
    a_p, b_p = cir_ab(b_star, 0.0, params.alpha_r, params.m_r,
                      params.sigma_r, hz.to_horizon)
    return math.exp(-a_star - a_p - b_p * r_t)


# ---------------------------------------------------------------------------
# three-factor model: square-root volatility factor v, stochastic central
# tendency theta, short rate r


@dataclass(frozen=True)
class A1R3Params:
    """Maximal three-factor model with one square-root factor.

    State (v, theta, r):
      dv     = alpha_v (m_v - v) ds + eta sqrt(v) dW1
      dtheta = alpha_th (m_th - theta) ds + sigma_tv eta sqrt(v) dW1
               + sqrt(zeta^2 + beta_th v) dW2 + sigma_tr sqrt(delta_r + v) dW3
      dr     = [alpha_rv (m_v - v) + alpha_r (theta - r)] ds
               + sigma_rv eta sqrt(v) dW1 + sigma_rt sqrt(zeta^2 + beta_th v) dW2
               + sqrt(delta_r + v) dW3
    with risk prices gamma_1 sqrt(v), gamma_2 sqrt(zeta^2 + beta_th v),
    gamma_3 sqrt(delta_r + v).
    """

    alpha_v: float
    m_v: float
    alpha_th: float
    m_th: float
    alpha_r: float
    alpha_rv: float
    sigma_tv: float
    sigma_tr: float
    sigma_rv: float
    sigma_rt: float
    eta: float
    zeta: float
    beta_th: float
    delta_r: float
    gamma_1: float = 0.0
    gamma_2: float = 0.0
    gamma_3: float = 0.0

    def __post_init__(self):
        if self.eta <= 0.0 or self.zeta <= 0.0:
            raise ParameterError("eta and zeta must be positive")
        if self.delta_r < 0.0 or self.beta_th < 0.0:
            raise ParameterError("delta_r and beta_th must be non-negative")
        for name in ("alpha_v", "alpha_th", "alpha_r"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be positive")
        if self.alpha_v + self.gamma_1 * self.eta <= 0.0:
            raise ParameterError("risk-adjusted volatility mean reversion "
                                 "must stay positive")

    def pricing_coeffs(self):
        """Drift coefficients after the measure change.

        Returns the tuple (alpha_v*, m_v*, alpha_th*, m_th*, alpha_r*,
        alpha_rv*, alpha_tv*, m_r*); the last two are zero under the
        physical coefficients.
        """
        g1, g2, g3 = self.gamma_1, self.gamma_2, self.gamma_3
        alpha_v_s = self.alpha_v + g1 * self.eta
        m_v_s = self.alpha_v * self.m_v / alpha_v_s
        m_th_s = (self.alpha_th * self.m_th - g2 * self.zeta ** 2
                  - g3 * self.sigma_tr * self.delta_r) / self.alpha_th
        alpha_rv_s = (self.alpha_rv + g1 * self.sigma_rv * self.eta
                      + g2 * self.sigma_rt * self.beta_th + g3)
        alpha_tv_s = (-g1 * self.sigma_tv * self.eta - g2 * self.beta_th
                      - g3 * self.sigma_tr)
        m_r_s = (self.alpha_rv * self.m_v - alpha_rv_s * m_v_s
                 - g2 * self.sigma_rt * self.zeta ** 2 - g3 * self.delta_r)
        return (alpha_v_s, m_v_s, self.alpha_th, m_th_s, self.alpha_r,
                alpha_rv_s, alpha_tv_s, m_r_s)

    def physical_coeffs(self):
        return (self.alpha_v, self.m_v, self.alpha_th, self.m_th, self.alpha_r,
                self.alpha_rv, 0.0, 0.0)


def _a1r3_cd(lam2, lam3, mu2, mu3, alpha_th, alpha_r, tau):
    """Closed-form loadings on theta and r (linear subsystem).

    The theta loading has a removable singularity at alpha_th = alpha_r,
    handled by the continuous difference ratio.
    """
    c_val = (lam2 * math.exp(-alpha_th * tau)
             + (mu2 + mu3) / alpha_th * (1.0 - math.exp(-alpha_th * tau))
             + (lam3 * alpha_r - mu3) * decay_diff_ratio(alpha_r, alpha_th, tau))
    d_val = lam3 * math.exp(-alpha_r * tau) + mu3 * b_factor(alpha_r, tau)
    return c_val, d_val


def _a1r3_leg(p: A1R3Params, coeffs, lam, mu, tau, steps):
    """Integrate the (A, B) pair with C, D substituted in closed form.

    Returns (A(tau), B(tau), C(tau), D(tau)).
    """
    (alpha_v, m_v, alpha_th, m_th, alpha_r, alpha_rv, alpha_tv, m_r) = coeffs
    lam1, lam2, lam3 = lam
    mu1, mu2, mu3 = mu
    if tau == 0.0:
        return 0.0, lam1, lam2, lam3

    eta2 = p.eta ** 2
    z2 = p.zeta ** 2

    def rhs(s, y):
        b = y[1]
        c_val, d_val = _a1r3_cd(lam2, lam3, mu2, mu3, alpha_th, alpha_r, s)
        da = (b * alpha_v * m_v + c_val * alpha_th * m_th
              + d_val * (alpha_rv * m_v + m_r)
              - 0.5 * c_val * c_val * (p.sigma_tr ** 2 * p.delta_r + z2)
              - 0.5 * d_val * d_val * (p.sigma_rt ** 2 * z2 + p.delta_r)
              - c_val * d_val * (p.sigma_rt * z2 + p.sigma_tr * p.delta_r))
        db = (-b * alpha_v + c_val * alpha_tv - d_val * alpha_rv
              - 0.5 * b * b * eta2
              - 0.5 * c_val * c_val * (p.beta_th + p.sigma_tv ** 2 * eta2
                                       + p.sigma_tr ** 2)
              - 0.5 * d_val * d_val * (p.sigma_rv ** 2 * eta2
                                       + p.sigma_rt ** 2 * p.beta_th + 1.0)
              - b * c_val * p.sigma_tv * eta2 - b * d_val * p.sigma_rv * eta2
              - c_val * d_val * (p.sigma_tv * p.sigma_rv * eta2
                                 + p.sigma_rt * p.beta_th + p.sigma_tr)
              + mu1)
        return np.array([da, db])

    from .mathutils import rk4_solve
    from .riccati import _steps_for
    n_steps = _steps_for(tau, steps)
    y = rk4_solve(rhs, np.array([0.0, lam1]), tau, n_steps)
    c_val, d_val = _a1r3_cd(lam2, lam3, mu2, mu3, alpha_th, alpha_r, tau)
    return float(y[0]), float(y[1]), c_val, d_val


def a1r3_expected_bond(p: A1R3Params, state, hz: HorizonSpec,
                       steps: int | None = None) -> float:
    """Expected time-H price of the maturity-T bond under the three-factor
    model. ``state`` is (v_t, theta_t, r_t)."""
    v_t, th_t, r_t = state
    if v_t < 0.0:
        raise ParameterError(f"volatility factor must be non-negative, got {v_t}")
    a_s, b_s, c_s, d_s = _a1r3_leg(
        p, p.pricing_coeffs(), (0.0, 0.0, 0.0), (0.0, 0.0, 1.0),
        hz.horizon_to_maturity, steps)
    a_p, b_p, c_p, d_p = _a1r3_leg(
        p, p.physical_coeffs(), (b_s, c_s, d_s), (0.0, 0.0, 0.0),
        hz.to_horizon, steps)
    return math.exp(-a_s - a_p - b_p * v_t - c_p * th_t - d_p * r_t)


def a1r3_bond_price(p: A1R3Params, state, t: float, T: float,
                    steps: int | None = None) -> float:
    """Current bond price (single pricing leg)."""
    return a1r3_expected_bond(p, state, HorizonSpec(t, t, T), steps)


def a1r3_to_affine_spec(p: A1R3Params):
    """Map the three-factor model onto the generic affine engine.

    Returns an AffineModelSpec over the state ordering (v, theta, r).
    Used to cross-check the specialized solution against the generic one.
    """
    from .affine import AffineModelSpec

    K = np.array([
        [p.alpha_v, 0.0, 0.0],
        [0.0, p.alpha_th, 0.0],
        [p.alpha_rv, -p.alpha_r, p.alpha_r],
    ])
    Theta = np.array([p.m_v, p.m_th, p.m_th])
    Sigma = np.array([
        [p.eta, 0.0, 0.0],
        [p.sigma_tv * p.eta, 1.0, p.sigma_tr],
        [p.sigma_rv * p.eta, p.sigma_rt, 1.0],
    ])
    alpha = np.array([0.0, p.zeta ** 2, p.delta_r])
    beta = np.array([
        [1.0, 0.0, 0.0],
        [p.beta_th, 0.0, 0.0],
        [1.0, 0.0, 0.0],
    ])
    return AffineModelSpec(K_mat=K, Theta=Theta, Sigma=Sigma, alpha=alpha,
                           beta=beta, delta0=0.0,
                           delta_y=np.array([0.0, 0.0, 1.0]),
                           gamma=np.array([p.gamma_1, p.gamma_2, p.gamma_3]))
