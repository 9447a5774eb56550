"""Grid-forming static var generator (SVG) model in port-Hamiltonian form.

State layout: x1, x2 are the filtered inductor current components, x3, x4
the output voltage components, and (in the 5-state model) x5 the energy
stored in the DC-link capacitor.  The grid currents (ig_d, ig_q) act as an
external disturbance and (u1, u2) are the control voltages.

Total energy  H  = L/2 (x1^2 + x2^2) + C/2 (x3^2 + x4^2) + x5
Subsystem energy H0 drops the x5 term.

Sign convention: the disturbance enters the voltage rows as -(1/C) ig, so
that along any trajectory dH/dt = -x3 ig_d - x4 ig_q regardless of the
control input.  The disturbance matrix returned by disturbance_matrix()
carries this sign, and the discrete energy balance below is defined against
it.  Dissipation is identically zero in this model (lossless circuit).

All functions are pure in their value arguments; model matrices are rebuilt
from SystemParams on every call so parameter sweeps need no global state.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "check_state",
    "check_pair",
    "hamiltonian",
    "subsystem_energy",
    "grad_hamiltonian",
    "flow_matrix",
    "structure_matrix",
    "dissipation_matrix",
    "disturbance_matrix",
    "input_matrix",
    "control_matrix",
    "drift4",
    "drift5",
    "energy_rate",
    "discrete_balance_residual",
]


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the SVG circuit."""

    inductance: float = 1.0
    capacitance: float = 1.0
    angular_velocity: float = 1.0

    def __post_init__(self):
        for name in ("inductance", "capacitance", "angular_velocity"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.inductance <= 0:
            raise ValueError("inductance must be positive")
        if self.capacitance <= 0:
            raise ValueError("capacitance must be positive")


def check_state(x, dim: int | None = None) -> np.ndarray:
    """Validate a state vector (length 4 or 5, finite entries)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] not in (4, 5):
        raise ValueError(f"state must be a 4- or 5-vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"expected a {dim}-state vector, got length {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("state entries must be finite")
    return x


def check_pair(v) -> np.ndarray:
    """Validate a 2-vector (control input or disturbance)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("entries must be finite")
    return v


def hamiltonian(x, p: SystemParams) -> float:
    """Total energy of the 5-state model."""
    x = check_state(x, 5)
    h0 = subsystem_energy(x[:4], p)
    return h0 + x[4]


def subsystem_energy(x, p: SystemParams) -> float:
    """Energy stored in the filter inductor and output capacitor (H0)."""
    x = np.asarray(x, dtype=float)
    body = x[:4]
    return float(0.5 * p.inductance * (body[0] ** 2 + body[1] ** 2)
                 + 0.5 * p.capacitance * (body[2] ** 2 + body[3] ** 2))


def grad_hamiltonian(x, p: SystemParams) -> np.ndarray:
    """Gradient of H: (L x1, L x2, C x3, C x4, 1)."""
    x = check_state(x, 5)
    L, C = p.inductance, p.capacitance
    return np.array([L * x[0], L * x[1], C * x[2], C * x[3], 1.0])


def flow_matrix(p: SystemParams, dim: int = 5) -> np.ndarray:
    """State matrix of the raw circuit equations (acts on x, not grad H)."""
    L, C, w = p.inductance, p.capacitance, p.angular_velocity
    m = np.array([
        [0.0, w, -1.0 / L, 0.0],
        [-w, 0.0, 0.0, -1.0 / L],
        [1.0 / C, 0.0, 0.0, w],
        [0.0, 1.0 / C, -w, 0.0],
    ])
    if dim == 4:
        return m
    if dim == 5:
        out = np.zeros((5, 5))
        out[:4, :4] = m
        return out
    raise ValueError("dim must be 4 or 5")


def structure_matrix(p: SystemParams, dim: int = 5) -> np.ndarray:
    """Skew interconnection matrix J of the port-Hamiltonian form.

    J @ grad_hamiltonian(x) reproduces flow_matrix(p) @ x; entries are built
    from shared scalars so J + J^T is exactly zero.
    """
    L, C, w = p.inductance, p.capacitance, p.angular_velocity
    a = w / L
    b = 1.0 / (C * L)
    c = w / C
    j = np.array([
        [0.0, a, -b, 0.0],
        [-a, 0.0, 0.0, -b],
        [b, 0.0, 0.0, c],
        [0.0, b, -c, 0.0],
    ])
    if dim == 4:
        return j
    if dim == 5:
        out = np.zeros((5, 5))
        out[:4, :4] = j
        return out
    raise ValueError("dim must be 4 or 5")


def dissipation_matrix(p: SystemParams, dim: int = 5) -> np.ndarray:
    """Resistive port matrix R.  Identically zero: the circuit is lossless."""
    if dim not in (4, 5):
        raise ValueError("dim must be 4 or 5")
    return np.zeros((dim, dim))


def disturbance_matrix(p: SystemParams, dim: int = 5) -> np.ndarray:
    """Signed disturbance port matrix B: grid currents load the voltage rows."""
    if dim not in (4, 5):
        raise ValueError("dim must be 4 or 5")
    b = np.zeros((dim, 2))
    b[2, 0] = -1.0 / p.capacitance
    b[3, 1] = -1.0 / p.capacitance
    return b


def input_matrix(p: SystemParams, dim: int = 5) -> np.ndarray:
    """State-independent part of the input port matrix (the 1/L columns)."""
    if dim not in (4, 5):
        raise ValueError("dim must be 4 or 5")
    c = np.zeros((dim, 2))
    c[0, 0] = 1.0 / p.inductance
    c[1, 1] = 1.0 / p.inductance
    return c


def control_matrix(x, p: SystemParams) -> np.ndarray:
    """Full input port matrix C(x) of the 5-state model.

    The last row (-x1, -x2) routes input power out of the DC link, which is
    what makes grad H orthogonal to C(x) u for every u.
    """
    x = check_state(x, 5)
    c = input_matrix(p, 5)
    c[4, 0] = -x[0]
    c[4, 1] = -x[1]
    return c


def drift4(x, u, d, p: SystemParams) -> np.ndarray:
    """Right-hand side of the controlled 4-state subsystem."""
    x = check_state(x, 4)
    u = check_pair(u)
    d = check_pair(d)
    L, C, w = p.inductance, p.capacitance, p.angular_velocity
    return np.array([
        w * x[1] - x[2] / L + u[0] / L,
        -w * x[0] - x[3] / L + u[1] / L,
        x[0] / C + w * x[3] - d[0] / C,
        x[1] / C - w * x[2] - d[1] / C,
    ])


def drift5(x, u, d, p: SystemParams) -> np.ndarray:
    """Right-hand side of the full 5-state model.

    Components 1-4 agree bitwise with drift4 on the same inputs; the fifth
    component is the power -x1 u1 - x2 u2 drawn from the DC link.
    """
    x = check_state(x, 5)
    u = check_pair(u)
    body = drift4(x[:4], u, d, p)
    return np.append(body, -(x[0] * u[0] + x[1] * u[1]))


def energy_rate(x, d) -> float:
    """Exact dH/dt along the model flow: -x3 ig_d - x4 ig_q.

    Independent of the control input and of L, C, omega.
    """
    x = check_state(x)
    d = check_pair(d)
    return float(-x[2] * d[0] - x[3] * d[1])


def discrete_balance_residual(xk, xk1, dk, h: float, p: SystemParams) -> float:
    """Discrete energy-balance defect of one step of a 5-state scheme.

    Returns [H(x_{k+1}) - H(x_k)] - h * grad H(xbar)^T B d_k with xbar the
    arithmetic midpoint.  A structure-preserving step drives this to
    roundoff for every (u, d); with d = 0 it reduces to the energy change
    itself.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    xk = check_state(xk, 5)
    xk1 = check_state(xk1, 5)
    dk = check_pair(dk)
    mid = 0.5 * (xk + xk1)
    port_power = grad_hamiltonian(mid, p) @ (disturbance_matrix(p, 5) @ dk)
    return float((hamiltonian(xk1, p) - hamiltonian(xk, p)) - h * port_power)
