"""Horizon-measure semantics: the (t, H, T) time triple, measure tags,
drift regime switching, and the two-regime binomial tree.

The tree makes the measure construction concrete: physical up/down
probabilities drive every period before the horizon H, risk-neutral
probabilities (with one-period discounting) drive every period on or
after H, and the root value is the time-t expectation of the claim's
time-H price.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels import crr_backward
from .errors import AlignmentError, DomainError, ParameterError

__all__ = [
    "HorizonSpec",
    "MeasureTag",
    "GBMSpec",
    "RegimeDrift",
    "ExpectedPriceResult",
    "r_drift",
    "crr_probabilities",
    "binomial_expected_price",
    "iterated_expectation_oracle",
    "crr_price",
]


@dataclass(frozen=True)
class HorizonSpec:
    """Valuation time t, horizon H, and claim maturity T, in years."""

    t: float
    H: float
    T: float

    def __post_init__(self):
        for name, v in (("t", self.t), ("H", self.H), ("T", self.T)):
            if not math.isfinite(v) or v < 0.0:
                raise ParameterError(f"{name} must be finite and non-negative, got {v}")
        if not (self.t <= self.H <= self.T):
            raise ParameterError(
                f"times must satisfy t <= H <= T, got t={self.t}, H={self.H}, T={self.T}")

    @property
    def to_horizon(self) -> float:
        return self.H - self.t

    @property
    def horizon_to_maturity(self) -> float:
        return self.T - self.H

    @property
    def to_maturity(self) -> float:
        return self.T - self.t


class MeasureTag(enum.Enum):
    """Labels for the probability measures a computation can run under.

    P and Q (and the T-forward measure QT) are the usual single-regime
    measures. R, R1T, and R1S are horizon-indexed hybrids: physical
    dynamics strictly before H, pricing dynamics on and after H. The
    hybrid tags are only meaningful together with a HorizonSpec, and the
    numeraire-based ones additionally need the numeraire identity (the
    maturity-T bond for R1T, a traded asset for R1S).
    """

    P = "P"
    Q = "Q"
    R = "R"
    QT = "QT"
    R1T = "R1T"
    R1S = "R1S"

    @property
    def is_hybrid(self) -> bool:
        return self in (MeasureTag.R, MeasureTag.R1T, MeasureTag.R1S)

    @property
    def needs_numeraire(self) -> bool:
        return self in (MeasureTag.QT, MeasureTag.R1T, MeasureTag.R1S)


@dataclass(frozen=True)
class GBMSpec:
    """Lognormal asset under a constant short rate.

    S0 spot, mu physical drift, sigma volatility, r short rate. The asset
    risk premium per unit volatility is (mu - r) / sigma.
    """

    S0: float
    mu: float
    sigma: float
    r: float

    def __post_init__(self):
        if self.S0 <= 0.0:
            raise ParameterError(f"S0 must be positive, got {self.S0}")
        if self.sigma <= 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    @property
    def risk_premium(self) -> float:
        return (self.mu - self.r) / self.sigma


@dataclass(frozen=True)
class RegimeDrift:
    """Piecewise drift that switches branch exactly at the horizon.

    The on/after branch applies at s == switch_time, matching the
    convention that pricing dynamics start at the horizon itself.
    """

    drift_before: Callable[[float], float]
    drift_on_after: Callable[[float], float]
    switch_time: float

    def value(self, s: float) -> float:
        if s >= self.switch_time:
            return self.drift_on_after(s)
        return self.drift_before(s)


@dataclass
class ExpectedPriceResult:
    """A computed expected future price plus solver diagnostics."""

    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def r_drift(spec: GBMSpec, s: float, hz: HorizonSpec) -> float:
    """Instantaneous drift of the lognormal asset under the hybrid measure.

    Physical drift mu strictly before the horizon, short rate r on and
    after it. ``s`` must lie in [t, T].
    """
    if not (hz.t <= s <= hz.T):
        raise DomainError(f"s={s} outside [t, T] = [{hz.t}, {hz.T}]")
    return RegimeDrift(lambda _: spec.mu, lambda _: spec.r, hz.H).value(s)


def crr_probabilities(spec: GBMSpec, dt: float):
    """One-period CRR factors and both regime probabilities.

    Returns (u, d, p_up, q_up) where p_up uses the physical drift and
    q_up the short rate. Raises ParameterError when either probability
    falls outside (0, 1); probabilities are never clamped.
    """
    u = math.exp(spec.sigma * math.sqrt(dt))
    d = math.exp(-spec.sigma * math.sqrt(dt))
    if u == d:
        raise ParameterError("degenerate tree: up and down factors coincide")
    p_up = (math.exp(spec.mu * dt) - d) / (u - d)
    q_up = (math.exp(spec.r * dt) - d) / (u - d)
    if not (0.0 < p_up < 1.0):
        raise ParameterError(
            f"physical up-probability {p_up:.6g} outside (0, 1); "
            f"need d < exp(mu*dt) < u")
    if not (0.0 < q_up < 1.0):
        raise ParameterError(
            f"risk-neutral up-probability {q_up:.6g} outside (0, 1); "
            f"need d < exp(r*dt) < u")
    return u, d, p_up, q_up


def _tree_layout(hz: HorizonSpec, steps_per_year: float, auto_align: bool):
    """Number of steps before/after H, with H forced onto a tree level."""
    if steps_per_year <= 0:
        raise ParameterError("steps_per_year must be positive")
    if auto_align:
        # smallest integer multiple of the requested density that puts both
        # H and T on tree levels (within floating tolerance)
        for mult in range(1, 10001):
            spy = steps_per_year * mult
            n_h = (hz.H - hz.t) * spy
            n_t = (hz.T - hz.t) * spy
            if (abs(n_h - round(n_h)) < 1e-9 and abs(n_t - round(n_t)) < 1e-9):
                steps_per_year = spy
                break
        else:
            raise AlignmentError("could not align H and T on a tree grid")
    n_h = (hz.H - hz.t) * steps_per_year
    n_t = (hz.T - hz.t) * steps_per_year
    if abs(n_h - round(n_h)) > 1e-9 or abs(n_t - round(n_t)) > 1e-9:
        raise AlignmentError(
            f"H and T must fall on tree levels: (H-t)*spy = {n_h:.6g}, "
            f"(T-t)*spy = {n_t:.6g} (pass auto_align=True to adjust)")
    return int(round(n_h)), int(round(n_t)), 1.0 / steps_per_year


def _terminal_payoff(spec: GBMSpec, K: float, u: float, d: float, n: int,
                     payoff: str) -> np.ndarray:
    j = np.arange(n + 1)
    s_t = spec.S0 * u ** j * d ** (n - j)
    if payoff == "call":
        return np.maximum(s_t - K, 0.0)
    if payoff == "put":
        return np.maximum(K - s_t, 0.0)
    raise ParameterError(f"payoff must be 'call' or 'put', got {payoff!r}")


def binomial_expected_price(spec: GBMSpec, K: float, hz: HorizonSpec,
                            steps_per_year: float = 1.0, payoff: str = "call",
                            auto_align: bool = False) -> ExpectedPriceResult:
    """Expected time-H price of a European option on a two-regime CRR tree.

    Backward induction runs risk-neutral with one-period discounting from
    maturity down to the horizon level, then undiscounted with physical
    probabilities from the horizon down to the root.
    """
    if K < 0.0:
        raise ParameterError(f"strike must be non-negative, got {K}")
    n_h, n_t, dt = _tree_layout(hz, steps_per_year, auto_align)
    u, d, p_up, q_up = crr_probabilities(spec, dt)
    v = _terminal_payoff(spec, K, u, d, n_t, payoff)
    v = crr_backward(v, q_up, math.exp(-spec.r * dt), n_t - n_h)
    v = crr_backward(v, p_up, 1.0, n_h)
    return ExpectedPriceResult(
        value=float(v[0]),
        method="binomial",
        diagnostics={"steps": n_t, "steps_to_horizon": n_h, "dt": dt,
                     "u": u, "d": d, "p_up": p_up, "q_up": q_up},
    )


def iterated_expectation_oracle(spec: GBMSpec, K: float, hz: HorizonSpec,
                                steps_per_year: float = 1.0,
                                payoff: str = "call",
                                auto_align: bool = False) -> float:
    """Two-pass tree: price at every horizon node, then average physically.

    Pass one rolls the terminal payoff back to the horizon level under the
    risk-neutral probabilities with discounting; pass two takes the plain
    physical expectation of those node prices back to the root. Identical
    summation order to binomial_expected_price, so the two agree exactly.
    """
    if K < 0.0:
        raise ParameterError(f"strike must be non-negative, got {K}")
    n_h, n_t, dt = _tree_layout(hz, steps_per_year, auto_align)
    u, d, p_up, q_up = crr_probabilities(spec, dt)
    prices_at_h = crr_backward(_terminal_payoff(spec, K, u, d, n_t, payoff),
                               q_up, math.exp(-spec.r * dt), n_t - n_h)
    expectation = crr_backward(prices_at_h, p_up, 1.0, n_h)
    return float(expectation[0])


def crr_price(spec: GBMSpec, K: float, t: float, T: float,
              steps_per_year: float = 1.0, payoff: str = "call") -> float:
    """Plain single-regime CRR price at time t (no horizon split)."""
    hz = HorizonSpec(t, t, T)
    return binomial_expected_price(spec, K, hz, steps_per_year, payoff).value
