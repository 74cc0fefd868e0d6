"""Multifactor affine short-rate models: expected future bond prices and
expected yields via the generic exponent-ODE engine.

The short rate is r = delta0 + delta_y . Y with factor dynamics
dY = K (Theta - Y) ds + Sigma sqrt(V) dW, [V]_ii = alpha_i + beta_i . Y,
and market prices of risk sqrt(V) gamma. Under the pricing measure the
drift becomes K* (Theta* - Y) with K* = K + Sigma Phi (Phi rows
gamma_i beta_i') and K* Theta* = K Theta - Sigma psi (psi_i =
gamma_i alpha_i).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ParameterError
from .measures import HorizonSpec
from .riccati import RiccatiSolution, riccati_solve

__all__ = ["AffineModelSpec", "expected_bond_price_atsm", "atsm_bond_price",
           "expected_yield", "expected_log_bond_price"]


@dataclass(frozen=True)
class AffineModelSpec:
    """Parameter bundle for an N-factor affine short-rate model."""

    K_mat: np.ndarray      # (N, N) physical mean reversion
    Theta: np.ndarray      # (N,)   physical long-run mean
    Sigma: np.ndarray      # (N, N) diffusion loading
    alpha: np.ndarray      # (N,)   variance constants
    beta: np.ndarray       # (N, N) variance loadings, row i = beta_i'
    delta0: float
    delta_y: np.ndarray    # (N,)
    gamma: np.ndarray      # (N,)   market prices of risk

    def __post_init__(self):
        arrays = {
            "K_mat": np.atleast_2d(np.asarray(self.K_mat, dtype=float)),
            "Theta": np.atleast_1d(np.asarray(self.Theta, dtype=float)),
            "Sigma": np.atleast_2d(np.asarray(self.Sigma, dtype=float)),
            "alpha": np.atleast_1d(np.asarray(self.alpha, dtype=float)),
            "beta": np.atleast_2d(np.asarray(self.beta, dtype=float)),
            "delta_y": np.atleast_1d(np.asarray(self.delta_y, dtype=float)),
            "gamma": np.atleast_1d(np.asarray(self.gamma, dtype=float)),
        }
        n = arrays["Theta"].shape[0]
        shapes = {"K_mat": (n, n), "Sigma": (n, n), "beta": (n, n),
                  "alpha": (n,), "delta_y": (n,), "gamma": (n,)}
        for name, arr in arrays.items():
            if name != "Theta" and arr.shape != shapes[name]:
                raise ParameterError(
                    f"{name} has shape {arr.shape}, expected {shapes[name]}")
            object.__setattr__(self, name, arr)
        if np.any(arrays["alpha"] + arrays["beta"] @ arrays["Theta"] < -1e-12):
            raise ParameterError(
                "variance alpha_i + beta_i . Theta negative at the long-run mean")

    @property
    def n_factors(self) -> int:
        return self.Theta.shape[0]

    @property
    def K_star(self) -> np.ndarray:
        phi = self.gamma[:, None] * self.beta
        return self.K_mat + self.Sigma @ phi

    @property
    def K_theta(self) -> np.ndarray:
        return self.K_mat @ self.Theta

    @property
    def K_theta_star(self) -> np.ndarray:
        """The pricing-measure drift product K* Theta* (no inversion needed)."""
        psi = self.gamma * self.alpha
        return self.K_mat @ self.Theta - self.Sigma @ psi

    @property
    def Theta_star(self) -> np.ndarray:
        k_star = self.K_star
        if abs(np.linalg.det(k_star)) < 1e-14:
            raise ParameterError("K* is singular; Theta* is not identified")
        return np.linalg.solve(k_star, self.K_theta_star)

    def pricing_leg(self, b, c, tau, steps=None) -> RiccatiSolution:
        return riccati_solve(b, c, self.K_star, self.K_theta_star, self.Sigma,
                             self.alpha, self.beta, tau, steps)

    def physical_leg(self, b, c, tau, steps=None) -> RiccatiSolution:
        return riccati_solve(b, c, self.K_mat, self.K_theta, self.Sigma,
                             self.alpha, self.beta, tau, steps)


def expected_bond_price_atsm(spec: AffineModelSpec, Y_t, hz: HorizonSpec,
                             steps: int | None = None) -> float:
    """Expected time-H price of the maturity-T discount bond.

    Two exponent legs: a pricing leg over tau = T - H started from zero
    boundary with the rate loading as the integrated state, then a
    physical leg over tau = H - t started from that leg's terminal B with
    no integrated state:

        exp(-delta0 (T-H) - A*(T-H) - A(H-t) - B(H-t) . Y_t)
    """
    Y_t = np.atleast_1d(np.asarray(Y_t, dtype=float))
    n = spec.n_factors
    star = spec.pricing_leg(np.zeros(n), spec.delta_y, hz.horizon_to_maturity, steps)
    phys = spec.physical_leg(star.B_final, np.zeros(n), hz.to_horizon, steps)
    expo = (-spec.delta0 * hz.horizon_to_maturity - star.A_final
            - phys.A_final - phys.B_final @ Y_t)
    return float(np.exp(expo))


def atsm_bond_price(spec: AffineModelSpec, Y_t, t: float, T: float,
                    steps: int | None = None) -> float:
    """Current bond price (single pricing leg)."""
    return expected_bond_price_atsm(spec, Y_t, HorizonSpec(t, t, T), steps)


def expected_log_bond_price(spec: AffineModelSpec, Y_t, hz: HorizonSpec,
                            steps: int | None = None) -> float:
    """E_t[ln P(H, T)].

    The pricing-leg exponent is affine in Y_H, so only the physical mean
    of Y_H is needed:

        -delta0 (T-H) - A*(T-H) - B*(T-H) . E[Y_H],
        E[Y_H] = Theta + e^{-K (H-t)} (Y_t - Theta).
    """
    Y_t = np.atleast_1d(np.asarray(Y_t, dtype=float))
    n = spec.n_factors
    star = spec.pricing_leg(np.zeros(n), spec.delta_y, hz.horizon_to_maturity, steps)
    mean_y = spec.Theta + expm(-spec.K_mat * hz.to_horizon) @ (Y_t - spec.Theta)
    return float(-spec.delta0 * hz.horizon_to_maturity - star.A_final
                 - star.B_final @ mean_y)


def expected_yield(spec: AffineModelSpec, Y_t, hz: HorizonSpec,
                   steps: int | None = None) -> float:
    """Expected continuously-compounded yield over [H, T]:
    -E_t[ln P(H,T)] / (T - H)."""
    if hz.horizon_to_maturity <= 0.0:
        raise ParameterError("expected yield needs H < T")
    return -expected_log_bond_price(spec, Y_t, hz, steps) / hz.horizon_to_maturity
