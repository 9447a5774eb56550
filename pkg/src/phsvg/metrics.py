"""Trajectory measurements: settling, offsets, effort, drift, orders.

All functions are pure reads of an immutable Trajectory.  Settling uses the
last-entry convention (a trajectory that re-enters the band settles from
its final entry), and steady-state offset is the peak state norm over the
trailing window, which is the right notion for oscillatory residuals.
"""

from dataclasses import dataclass

import numpy as np

from .control import IssParams, iss_inequality_residual
from .model import SystemParams
from .trajectory import Trajectory

__all__ = [
    "DegenerateFit",
    "MetricsReport",
    "settling_band",
    "settling_time",
    "control_effort",
    "energy_drift",
    "steady_offset",
    "observed_order",
    "iss_margin",
    "build_report",
]


class DegenerateFit(ValueError):
    """Order estimation received non-positive errors."""


@dataclass
class MetricsReport:
    """Summary numbers for one closed-loop run."""

    settling_time: float | None
    offset_amplitude: float
    control_effort: float
    energy_drift_max: float
    iss_margin_min: float | None = None
    observed_order: float | None = None

    def __post_init__(self):
        if self.control_effort < 0:
            raise ValueError("control effort cannot be negative")
        if self.energy_drift_max < 0:
            raise ValueError("energy drift cannot be negative")


def settling_band(traj: Trajectory, fraction: float = 0.02) -> float:
    """Default settling band: a fraction of the largest initial component."""
    return fraction * float(np.max(np.abs(traj.states[0])))


def settling_time(traj: Trajectory, band: float) -> float | None:
    """Earliest time after which every state component stays within the band.

    Counted from the last excursion; None if the trajectory never settles.
    """
    if band <= 0:
        raise ValueError("band must be positive")
    peak = np.max(np.abs(traj.states), axis=1)
    outside = np.nonzero(peak > band)[0]
    if outside.size == 0:
        return float(traj.t[0])
    last = outside[-1]
    if last == len(traj) - 1:
        return None
    return float(traj.t[last + 1])


def control_effort(traj: Trajectory) -> float:
    """Left-Riemann sum of ||u||^2 over the step intervals."""
    if len(traj) < 2:
        return 0.0
    held = traj.u[:-1]
    return float(traj.h * np.sum(held[:, 0] ** 2 + held[:, 1] ** 2))


def energy_drift(traj: Trajectory) -> float:
    """Largest deviation of the recorded energy from its initial value."""
    return float(np.max(np.abs(traj.H - traj.H[0])))


def steady_offset(traj: Trajectory, tail_fraction: float = 0.25) -> float:
    """Peak state norm over the trailing tail_fraction of the records."""
    if not (0 < tail_fraction <= 1):
        raise ValueError("tail_fraction must lie in (0, 1]")
    n = len(traj)
    start = n - max(1, int(np.ceil(tail_fraction * n)))
    tail = traj.states[start:]
    return float(np.max(np.sqrt(np.sum(tail ** 2, axis=1))))


def observed_order(errors) -> float:
    """Least-squares slope of log(error) against log(h).

    errors is a sequence of (h, global_error) pairs with h strictly
    decreasing.
    """
    pts = [(float(h), float(e)) for h, e in errors]
    if len(pts) < 2:
        raise ValueError("need at least two (h, error) pairs")
    hs = np.array([h for h, _ in pts])
    es = np.array([e for _, e in pts])
    if np.any(np.diff(hs) >= 0):
        raise ValueError("step sizes must be strictly decreasing")
    if np.any(es <= 0):
        raise DegenerateFit("errors must be positive to fit an order")
    slope = np.polyfit(np.log(hs), np.log(es), 1)[0]
    return float(slope)


def iss_margin(traj: Trajectory, p: SystemParams, c: IssParams) -> float:
    """Worst-case slack of the pointwise ISS inequality along a 4-state run.

    Positive means the inequality held strictly at every sample.
    """
    if traj.dim != 4:
        raise ValueError("ISS margin is defined for 4-state trajectories")
    residuals = [iss_inequality_residual(traj.states[k], traj.u[k], p, c)
                 for k in range(len(traj))]
    return float(-np.max(residuals))


def build_report(traj: Trajectory, band: float | None = None,
                 tail_fraction: float = 0.25,
                 iss_params: IssParams | None = None,
                 order: float | None = None) -> MetricsReport:
    """Standard report for one trajectory; the band defaults to 2% of max |x(0)|."""
    if band is None:
        band = settling_band(traj)
    margin = None
    if traj.dim == 4 and iss_params is not None:
        margin = iss_margin(traj, traj.params, iss_params)
    return MetricsReport(
        settling_time=settling_time(traj, band) if band > 0 else None,
        offset_amplitude=steady_offset(traj, tail_fraction),
        control_effort=control_effort(traj),
        energy_drift_max=energy_drift(traj),
        iss_margin_min=margin,
        observed_order=order,
    )
