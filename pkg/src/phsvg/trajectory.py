"""Simulation output containers and their CSV serialization.

A Trajectory stores the sampled closed-loop run column-wise (numpy arrays)
and exposes per-step StepRecord views.  The CSV layout is fixed:

    t,x1,x2,x3,x4,x5,u1,u2,d1,d2,H,H0

with the x5 field left empty for 4-state runs and every number printed with
17 significant digits so values round-trip exactly.
"""

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .model import SystemParams

__all__ = ["StepRecord", "Trajectory", "CSV_HEADER", "format_float", "write_csv"]

CSV_HEADER = "t,x1,x2,x3,x4,x5,u1,u2,d1,d2,H,H0"


class StepRecord(NamedTuple):
    t: float
    state: np.ndarray
    u: np.ndarray
    d: np.ndarray
    H: float
    H0: float


@dataclass
class Trajectory:
    """Time-ordered closed-loop samples plus an echo of how they were made."""

    t: np.ndarray
    states: np.ndarray
    u: np.ndarray
    d: np.ndarray
    H: np.ndarray
    H0: np.ndarray
    params: SystemParams
    controller: str
    stepper: str
    h: float
    T: float

    def __post_init__(self):
        n = len(self.t)
        if n < 1:
            raise ValueError("trajectory needs at least one record")
        if self.states.shape[0] != n or self.states.shape[1] not in (4, 5):
            raise ValueError("states must be (n, 4) or (n, 5)")
        if n > 1:
            gaps = np.diff(self.t)
            if np.any(gaps <= 0) or not np.allclose(gaps, self.h, rtol=1e-9, atol=0):
                raise ValueError("timestamps must increase uniformly by h")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.t)

    def record(self, k: int) -> StepRecord:
        return StepRecord(float(self.t[k]), self.states[k], self.u[k],
                          self.d[k], float(self.H[k]), float(self.H0[k]))

    @property
    def records(self) -> Iterator[StepRecord]:
        return (self.record(k) for k in range(len(self)))


def format_float(v: float) -> str:
    return "%.17g" % v


def write_csv(traj: Trajectory, path) -> None:
    """Write the trajectory in the fixed CSV layout."""
    five = traj.dim == 5
    with open(path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        for k in range(len(traj)):
            x = traj.states[k]
            fields = [format_float(traj.t[k])]
            fields += [format_float(v) for v in x[:4]]
            fields.append(format_float(x[4]) if five else "")
            fields += [format_float(v) for v in traj.u[k]]
            fields += [format_float(v) for v in traj.d[k]]
            fields.append(format_float(traj.H[k]))
            fields.append(format_float(traj.H0[k]))
            f.write(",".join(fields) + "\n")
