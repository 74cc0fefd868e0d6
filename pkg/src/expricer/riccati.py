"""Fixed-step Runge-Kutta engine for the affine bond-exponent ODEs.

The exponent of an affine zero-coupon expectation solves

    dA/dtau = (K Theta)' B - 1/2 sum_i [Sigma' B]_i^2 alpha_i
    dB/dtau = -K' B      - 1/2 sum_i [Sigma' B]_i^2 beta_i + c

with A(0) = 0 and B(0) = b. The engine tabulates A and B on a uniform
tau-grid; parameters enter through the drift product K*Theta so that
singular mean-reversion matrices need no inversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .mathutils import rk4_solve

__all__ = ["RiccatiSolution", "riccati_solve", "DEFAULT_STEPS_PER_YEAR"]

DEFAULT_STEPS_PER_YEAR = 200


@dataclass(frozen=True)
class RiccatiSolution:
    """Tabulated exponent coefficients A(tau), B(tau) on a uniform grid.

    Queries between nodes interpolate linearly; the solver's own
    evaluations always land on nodes. Immutable and shareable.
    """

    tau_grid: np.ndarray      # (steps+1,)
    A_tab: np.ndarray         # (steps+1,)
    B_tab: np.ndarray         # (steps+1, N)
    h: float                  # grid spacing

    @property
    def tau_max(self) -> float:
        return float(self.tau_grid[-1])

    def A(self, tau: float) -> float:
        return float(np.interp(tau, self.tau_grid, self.A_tab))

    def B(self, tau: float) -> np.ndarray:
        out = np.empty(self.B_tab.shape[1])
        for j in range(self.B_tab.shape[1]):
            out[j] = np.interp(tau, self.tau_grid, self.B_tab[:, j])
        return out

    @property
    def A_final(self) -> float:
        return float(self.A_tab[-1])

    @property
    def B_final(self) -> np.ndarray:
        return self.B_tab[-1].copy()


def _steps_for(tau_max: float, steps: int | None) -> int:
    if steps is not None:
        if steps < 4:
            raise ParameterError("need at least 4 integration steps")
        return int(steps)
    return max(4, int(np.ceil(tau_max * DEFAULT_STEPS_PER_YEAR)))


def riccati_solve(b, c, K_mat, K_theta, Sigma, alpha, beta, tau_max,
                  steps: int | None = None) -> RiccatiSolution:
    """Integrate the affine exponent ODEs out to ``tau_max``.

    b, c      : boundary vector B(0) and integrated-state loading
    K_mat     : mean-reversion matrix K (drift K (Theta - Y))
    K_theta   : the product K @ Theta
    Sigma     : diffusion loading matrix
    alpha,beta: variance constants, [V]_ii = alpha_i + beta_i . Y
                (beta rows indexed by factor i)
    """
    b = np.atleast_1d(np.asarray(b, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    K_mat = np.atleast_2d(np.asarray(K_mat, dtype=float))
    K_theta = np.atleast_1d(np.asarray(K_theta, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    n = b.shape[0]
    if tau_max < 0.0:
        raise ParameterError("tau_max must be non-negative")

    kt = K_mat.T
    st = Sigma.T

    def rhs(_tau, y):
        B = y[1:]
        sb2 = np.square(st @ B)
        dA = K_theta @ B - 0.5 * (sb2 @ alpha)
        dB = -(kt @ B) - 0.5 * (beta.T @ sb2) + c
        return np.concatenate(([dA], dB))

    n_steps = _steps_for(tau_max, steps)
    if tau_max == 0.0:
        grid = np.array([0.0])
        traj = np.concatenate(([0.0], b))[None, :]
        h = 0.0
    else:
        y0 = np.concatenate(([0.0], b))
        grid, traj = rk4_solve(rhs, y0, tau_max, n_steps, record=True)
        h = tau_max / n_steps
    return RiccatiSolution(tau_grid=grid, A_tab=traj[:, 0].copy(),
                           B_tab=traj[:, 1:].copy(), h=h)
