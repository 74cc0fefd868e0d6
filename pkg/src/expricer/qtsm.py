"""Quadratic short-rate models: r = alpha + beta . Y + Y' Psi Y with
Gaussian factors dY = (mu + xi Y) ds + Sigma dW.

The exponent of a bond expectation is quadratic in the state,
exp(-A - B . Y - Y' C Y), with matrix ODEs

    dA/dtau = mu' B - 1/2 B' Sigma Sigma' B + tr(Sigma Sigma' C)
    dB/dtau = xi' B + 2 C mu - 2 C Sigma Sigma' B + d
    dC/dtau = -2 C Sigma Sigma' C + C xi + xi' C + q

from A(0) = 0, B(0) = b, C(0) = c. The three-factor diagonal special
case admits fully closed-form per-factor coefficients, used both as a
fast path and as the oracle for the matrix engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .mathutils import rk4_solve
from .measures import HorizonSpec
from .riccati import _steps_for

__all__ = ["QTSMSpec", "qtsm_ode_leg", "qtsm_expected_bond", "qtsm_bond_price",
           "qtsm3_ab", "qtsm3_expected_bond"]


@dataclass(frozen=True)
class QTSMSpec:
    """Parameter bundle for an N-factor quadratic short-rate model."""

    alpha: float
    beta: np.ndarray     # (N,)
    Psi: np.ndarray      # (N, N) PSD
    mu: np.ndarray       # (N,)
    xi: np.ndarray       # (N, N), eigenvalues with negative real part
    Sigma: np.ndarray    # (N, N)
    gamma0: np.ndarray   # (N,)
    gamma1: np.ndarray   # (N, N)

    def __post_init__(self):
        for name in ("beta", "mu", "gamma0"):
            object.__setattr__(self, name,
                               np.atleast_1d(np.asarray(getattr(self, name), float)))
        for name in ("Psi", "xi", "Sigma", "gamma1"):
            object.__setattr__(self, name,
                               np.atleast_2d(np.asarray(getattr(self, name), float)))
        n = self.mu.shape[0]
        for name in ("Psi", "xi", "Sigma", "gamma1"):
            if getattr(self, name).shape != (n, n):
                raise ParameterError(f"{name} must be {n}x{n}")
        eig_psi = np.linalg.eigvalsh(0.5 * (self.Psi + self.Psi.T))
        if np.any(eig_psi < -1e-10):
            raise ParameterError("Psi must be positive semidefinite")
        if np.any(np.real(np.linalg.eigvals(self.xi)) >= 1e-12):
            raise ParameterError("xi must have eigenvalues with negative real part")
        if np.any(np.abs(self.Psi) > 0) and np.linalg.matrix_rank(self.Psi) == n:
            floor = self.alpha - 0.25 * self.beta @ np.linalg.solve(self.Psi, self.beta)
            if floor < -1e-10:
                raise ParameterError(
                    "rate lower bound alpha - beta' Psi^{-1} beta / 4 is negative")
        if np.any(self.gamma1 != 0.0):
            try:
                sinv = np.linalg.inv(self.Sigma)
            except np.linalg.LinAlgError:
                raise ParameterError("gamma1 requires an invertible Sigma") from None
            sym = sinv.T @ sinv @ self.gamma1
            if not np.allclose(sym, sym.T, atol=1e-8):
                raise ParameterError("Sigma^{-T} Sigma^{-1} gamma1 must be symmetric")

    @property
    def n_factors(self) -> int:
        return self.mu.shape[0]

    @property
    def mu_star(self) -> np.ndarray:
        return self.mu - self.gamma0

    @property
    def xi_star(self) -> np.ndarray:
        return self.xi - self.gamma1


def qtsm_ode_leg(mu, xi, Sigma, b, c_mat, d, q, tau, steps=None):
    """Integrate the quadratic-exponent ODEs; returns (A, B, C) at tau."""
    n = mu.shape[0]
    ss = Sigma @ Sigma.T
    xit = xi.T
    if tau == 0.0:
        return 0.0, np.array(b, float).copy(), np.array(c_mat, float).copy()

    def pack(a, bv, cm):
        return np.concatenate(([a], bv, cm.reshape(-1)))

    def unpack(y):
        return y[0], y[1:n + 1], y[n + 1:].reshape(n, n)

    def rhs(_s, y):
        _a, bv, cm = unpack(y)
        ssb = ss @ bv
        da = mu @ bv - 0.5 * (bv @ ssb) + np.trace(ss @ cm)
        db = xit @ bv + 2.0 * (cm @ mu) - 2.0 * (cm @ ssb) + d
        dc = -2.0 * (cm @ ss @ cm) + cm @ xi + xit @ cm + q
        return pack(da, db, dc)

    n_steps = _steps_for(tau, steps)
    y = rk4_solve(rhs, pack(0.0, np.asarray(b, float), np.asarray(c_mat, float)),
                  tau, n_steps)
    a_val, b_val, c_val = unpack(y)
    return float(a_val), b_val, c_val


def qtsm_expected_bond(spec: QTSMSpec, Y_t, hz: HorizonSpec,
                       steps: int | None = None) -> float:
    """Expected time-H price of the maturity-T bond under the quadratic
    model: pricing leg seeded by the rate loadings (beta, Psi), physical
    leg seeded by the pricing leg's terminal (B, C)."""
    Y_t = np.atleast_1d(np.asarray(Y_t, dtype=float))
    n = spec.n_factors
    zeros_v, zeros_m = np.zeros(n), np.zeros((n, n))
    a_s, b_s, c_s = qtsm_ode_leg(spec.mu_star, spec.xi_star, spec.Sigma,
                                 zeros_v, zeros_m, spec.beta, spec.Psi,
                                 hz.horizon_to_maturity, steps)
    a_p, b_p, c_p = qtsm_ode_leg(spec.mu, spec.xi, spec.Sigma,
                                 b_s, c_s, zeros_v, zeros_m,
                                 hz.to_horizon, steps)
    expo = (-spec.alpha * hz.horizon_to_maturity - a_s - a_p
            - b_p @ Y_t - Y_t @ c_p @ Y_t)
    return float(np.exp(expo))


def qtsm_bond_price(spec: QTSMSpec, Y_t, t: float, T: float,
                    steps: int | None = None) -> float:
    """Current bond price (single pricing leg)."""
    return qtsm_expected_bond(spec, Y_t, HorizonSpec(t, t, T), steps)


def qtsm3_ab(b: float, c: float, q: float, mu: float, xi: float,
             sigma: float, tau: float):
    """Closed-form per-factor exponent coefficients for the diagonal
    three-factor special case (zero linear rate loading).

    Returns (A, B, C) for one factor with scalar dynamics
    dY = (mu + xi Y) ds + sigma dW and rate contribution q Y^2,
    discriminant beta = sqrt(xi^2 + 2 sigma^2 q).
    """
    beta = math.sqrt(xi * xi + 2.0 * sigma * sigma * q)
    e1 = math.expm1(beta * tau)            # e^{beta tau} - 1
    e2 = math.expm1(2.0 * beta * tau)      # e^{2 beta tau} - 1
    ebt = e1 + 1.0                         # e^{beta tau}
    denom = (2.0 * c * sigma * sigma + beta - xi) * e2 + 2.0 * beta
    a_val = ((mu / beta) ** 2 * q * tau
             - (b * b * beta * sigma * sigma * e2
                - 2.0 * b * mu * e1 * ((beta - xi) * e1 + 2.0 * beta))
             / (2.0 * beta * denom)
             - (mu * mu * e1 * (((beta - 2.0 * xi) * q - 2.0 * c * xi * xi) * e1
                                + 2.0 * beta * q))
             / (beta ** 3 * denom)
             - 0.5 * math.log(2.0 * beta * math.exp((beta - xi) * tau) / denom))
    b_val = (2.0 * b * beta * beta * ebt
             + 2.0 * mu * ((q + c * (xi + beta)) * e1 * e1
                           + 2.0 * c * beta * e1)) / (beta * denom)
    c_val = (c * (2.0 * beta + e2 * (beta + xi)) + q * e2) / denom
    return a_val, b_val, c_val


def qtsm3_expected_bond(spec: QTSMSpec, Y_t, hz: HorizonSpec) -> float:
    """Fully closed-form expected bond price for the diagonal three-factor
    case: beta = 0, Psi = I, and diagonal Sigma, xi, gamma1."""
    n = spec.n_factors
    if np.any(spec.beta != 0.0):
        raise ParameterError("closed form requires zero linear rate loading")
    if not np.allclose(spec.Psi, np.eye(n)):
        raise ParameterError("closed form requires identity quadratic loading")
    for name in ("Sigma", "xi", "gamma1"):
        m = getattr(spec, name)
        if not np.allclose(m, np.diag(np.diag(m))):
            raise ParameterError(f"closed form requires diagonal {name}")
    Y_t = np.atleast_1d(np.asarray(Y_t, dtype=float))
    tau_s = hz.horizon_to_maturity
    tau_p = hz.to_horizon
    expo = -spec.alpha * tau_s
    for i in range(n):
        mu_i, xi_i = spec.mu[i], spec.xi[i, i]
        mu_si = spec.mu_star[i]
        xi_si = spec.xi_star[i, i]
        s_i = spec.Sigma[i, i]
        a_s, b_s, c_s = qtsm3_ab(0.0, 0.0, 1.0, mu_si, xi_si, s_i, tau_s)
        a_p, b_p, c_p = qtsm3_ab(b_s, c_s, 0.0, mu_i, xi_i, s_i, tau_p)
        expo -= a_s + a_p + b_p * Y_t[i] + c_p * Y_t[i] ** 2
    return float(math.exp(expo))
