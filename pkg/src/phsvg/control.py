"""Controllers for the SVG subsystem and the ISS certificate they target.

Two controllers are provided: the energy-shaping state feedback that renders
the subsystem input-to-state stable, and a conventional PI baseline with
fixed gains.  Both act on the current components (x1, x2) only.

The ISS feedback is the minimum-norm input satisfying the stability
inequality with equality,

    u_i = -x_i * ( r/(4 a e) + a L / 2 + (a C / 2) r ),
    r   = (x3^2 + x4^2) / (x1^2 + x2^2),

with the ratio r saturated at ratio_cap to keep the coefficient bounded
near x1 = x2 = 0 (sampled-data implementations would otherwise amplify
input errors without bound).

iss_control is pure.  pi_control threads an explicit PiState value and
returns the advanced copy, so independent closed loops can run concurrently
without sharing anything.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import SystemParams, check_pair, check_state, subsystem_energy

__all__ = [
    "IssParams",
    "PiState",
    "RobustnessBound",
    "iss_control",
    "iss_inequality_residual",
    "pi_control",
    "default_pi_gains",
    "robustness_bound",
]


@dataclass(frozen=True)
class IssParams:
    """Tuning of the ISS feedback: decay rate, ultimate-bound ratio, saturation."""

    alpha: float = 2.0
    epsilon: float = 0.125
    ratio_cap: float = 5.0

    def __post_init__(self):
        for name in ("alpha", "epsilon", "ratio_cap"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite")


def _collinear_pair(coef: float, xp: float, xj: float) -> tuple[float, float]:
    """Outputs (up, uj) ~ (-coef*xp, -coef*xj) with xp*uj == xj*up exactly.

    The anchor component gets the plain product; the other is derived from
    the shared rounded cross product so the pair stays collinear with the
    state bit-for-bit.  When the cross product is not attainable from uj
    (the product grid can be coarser than one ulp of the target) the anchor
    is moved one ulp and the derivation retried; the loop costs a few ulps
    on the anchor at worst.
    """
    up = -(coef * xp)
    uj = -(coef * xj)
    for _ in range(64):
        target = up * xj
        uj = target / xp
        for cand in (uj, math.nextafter(uj, math.inf), math.nextafter(uj, -math.inf)):
            if xp * cand == target:
                return up, cand
        up = math.nextafter(up, 0.0)
    return up, uj


def iss_control(x, p: SystemParams, c: IssParams) -> np.ndarray:
    """Energy-shaping feedback rendering the subsystem input-to-state stable.

    Returns the zero vector when x1 = x2 = 0; otherwise the output is
    exactly collinear with (x1, x2).
    """
    x = check_state(x)
    x1, x2, x3, x4 = (float(v) for v in x[:4])
    s = x1 * x1 + x2 * x2
    if s == 0.0:
        return np.zeros(2)
    r = (x3 * x3 + x4 * x4) / s
    if r > c.ratio_cap:
        r = c.ratio_cap
    coef = (r / (4.0 * c.alpha * c.epsilon)
            + c.alpha * p.inductance / 2.0
            + (c.alpha * p.capacitance / 2.0) * r)
    if abs(x1) >= abs(x2):
        u1, u2 = _collinear_pair(coef, x1, x2)
    else:
        u2, u1 = _collinear_pair(coef, x2, x1)
    return np.array([u1, u2])


def iss_inequality_residual(x, u, p: SystemParams, c: IssParams) -> float:
    """Left side of the pointwise ISS condition; certified stable iff <= 0.

    Evaluates (x1 u1 + x2 u2) + (x3^2 + x4^2)/(4 a e) + a H0(x).  The ISS
    feedback meets this with equality up to roundoff wherever the ratio is
    below the saturation cap.
    """
    x = check_state(x)
    u = check_pair(u)
    x1, x2, x3, x4 = (float(v) for v in x[:4])
    q = x3 * x3 + x4 * x4
    h0 = subsystem_energy(x, p)
    return float((x1 * u[0] + x2 * u[1])
                 + q / (4.0 * c.alpha * c.epsilon)
                 + c.alpha * h0)


def default_pi_gains() -> tuple[np.ndarray, np.ndarray]:
    """Fixed baseline PI gains (LQR-tuned offline for the unit-parameter plant)."""
    kp = np.array([[2.1956, -0.8878],
                   [0.8878, 2.1956]])
    ki = np.array([[0.8364, 0.5481],
                   [-0.5481, 0.8364]])
    return kp, ki


def _zeros2() -> np.ndarray:
    return np.zeros(2)


@dataclass(frozen=True, eq=False)
class PiState:
    """PI controller memory: gains, trapezoidal accumulator, last sample."""

    kp: np.ndarray = field(default_factory=lambda: default_pi_gains()[0])
    ki: np.ndarray = field(default_factory=lambda: default_pi_gains()[1])
    integral: np.ndarray = field(default_factory=_zeros2)
    last_sample: np.ndarray = field(default_factory=_zeros2)
    initialized: bool = False


def pi_control(x, s: PiState, h: float) -> tuple[np.ndarray, PiState]:
    """One PI evaluation; returns the input and the advanced controller state.

    The integral of (x1, x2) is accumulated by the trapezoidal rule; the
    first call contributes nothing to the integral and only records its
    sample.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    x = check_state(x)
    cur = np.array([float(x[0]), float(x[1])])
    if s.initialized:
        integral = s.integral + (0.5 * h) * (s.last_sample + cur)
    else:
        integral = s.integral
    u = -(s.kp @ cur) - (s.ki @ integral)
    return u, replace(s, integral=integral, last_sample=cur, initialized=True)


@dataclass(frozen=True)
class RobustnessBound:
    """Constants of the closed-loop energy bound under input errors.

    H0(T) <= H0(0) e^{-rho T} + disturbance_gain * sup||d||^2
                              + error_gain * sup||v||^2

    The gains are None when rho <= 0, in which case the bound says nothing.
    """

    rho: float
    disturbance_gain: float | None
    error_gain: float | None

    @property
    def void(self) -> bool:
        return self.rho <= 0


def robustness_bound(p: SystemParams, c: IssParams) -> RobustnessBound:
    """Decay rate and gains of the input-error robustness bound."""
    rho = c.alpha - 1.0 / p.inductance
    if rho <= 0:
        return RobustnessBound(rho=rho, disturbance_gain=None, error_gain=None)
    beta = c.alpha * c.epsilon
    return RobustnessBound(rho=rho,
                           disturbance_gain=beta / rho,
                           error_gain=1.0 / (2.0 * rho))
