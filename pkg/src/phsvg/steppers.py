"""Time steppers for the SVG model and the closed-loop simulation driver.

Three one-step methods are implemented, all under zero-order hold (the
input u_k is computed from the state at the step start and held constant,
and the disturbance is sampled at the step start where a sampled value is
needed):

* midpoint_step - the implicit midpoint rule.  For this model the rule has
  a closed-form solution because the right-hand side is affine in the state
  once u is held: the only state dependence of the input coupling is the
  bilinear DC-link row, which is linear in x for fixed u.  One partial-pivot
  solve per step.  The scheme satisfies the discrete energy balance exactly
  (up to roundoff) for every held (u, d), hence conserves H when d = 0.

* rk2_step - a two-stage second-order implicit Runge-Kutta method

      k1 = f(x + h/4 k1),  k2 = f(x + h (k2 - k1/4)),
      x+ = x + h/2 (k1 + k2).

  Stages are solved directly (one linear solve each, again exploiting
  affineness); a fixed-point fallback iterating the drift function itself
  is kept for auditing the direct path.  This method does NOT satisfy the
  discrete energy balance and exhibits slow energy drift.

* exact_step - evolves the held-input dynamics exactly over one step via an
  augmented matrix exponential.  Supported disturbances are zero, constant,
  and a harmonic pair, each of which embeds in an autonomous linear
  augmentation; anything else raises UnsupportedDisturbance.

Steppers are pure functions.  simulate() is sequential per trajectory, but
independent trajectories share nothing and may run concurrently.
"""

from dataclasses import dataclass

import numpy as np

from . import signals as sig
from .control import IssParams, PiState, iss_control, pi_control
from .linalg import SingularMatrix, inf_norm, mat_exp, solve_linear
from .model import (SystemParams, check_pair, check_state, disturbance_matrix,
                    drift4, drift5, flow_matrix, hamiltonian, input_matrix,
                    subsystem_energy)
from .trajectory import Trajectory

__all__ = [
    "StepConfig",
    "STEPPERS",
    "CONTROLLERS",
    "SingularStepMatrix",
    "StageDivergence",
    "UnsupportedDisturbance",
    "midpoint_step",
    "rk2_step",
    "exact_step",
    "affine_midpoint_step",
    "affine_rk2_stages",
    "simulate",
]

STEPPERS = ("midpoint_dirac", "rk2_twostage", "exact_reference")
CONTROLLERS = ("iss", "pi", "none")


class SingularStepMatrix(ArithmeticError):
    """The implicit step matrix is singular (step size too large)."""


class StageDivergence(RuntimeError):
    """Fixed-point stage iteration failed to reach the stage tolerance."""


class UnsupportedDisturbance(ValueError):
    """The exact stepper cannot represent this disturbance in closed form."""


@dataclass(frozen=True)
class StepConfig:
    """Step size and implicit-stage solver settings."""

    h: float = 0.01
    stage_tol: float = 1e-13
    max_stage_iters: int = 100
    stage_solver: str = "direct"  # or "fixed_point"

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError("h must be positive and finite")
        if self.stage_tol <= 0:
            raise ValueError("stage_tol must be positive")
        if self.stage_solver not in ("direct", "fixed_point"):
            raise ValueError("stage_solver must be 'direct' or 'fixed_point'")


def _affine_parts(dim: int, u, d, p: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Matrix A and constant b with drift(x) = A x + b for held (u, d)."""
    a = flow_matrix(p, dim)
    if dim == 5:
        a[4, 0] = -u[0]
        a[4, 1] = -u[1]
    b = input_matrix(p, dim) @ u + disturbance_matrix(p, dim) @ d
    return a, b


def affine_midpoint_step(a, b, x, h: float) -> np.ndarray:
    """Midpoint rule for x' = A x + b: one linear solve."""
    n = len(x)
    eye = np.eye(n)
    lhs = eye - (0.5 * h) * a
    rhs = (eye + (0.5 * h) * a) @ x + h * b
    try:
        return solve_linear(lhs, rhs)
    except SingularMatrix as e:
        raise SingularStepMatrix(f"midpoint step matrix is singular: {e}") from e


def midpoint_step(xk, uk, dk, cfg: StepConfig, p: SystemParams) -> np.ndarray:
    """One implicit-midpoint step of the SVG model under held (u, d)."""
    xk = check_state(xk)
    uk = check_pair(uk)
    dk = check_pair(dk)
    a, b = _affine_parts(len(xk), uk, dk, p)
    return affine_midpoint_step(a, b, xk, cfg.h)


def _fixed_point_stages(f, x, h: float, cfg: StepConfig) -> tuple[np.ndarray, np.ndarray]:
    """Solve the two stage equations by direct iteration on f itself."""

    def evaluate(y):
        try:
            return f(y)
        except ValueError as e:
            # the iterate left the finite range: diverging, not malformed input
            raise StageDivergence(f"stage iteration produced non-finite values: {e}") from e

    k1 = evaluate(x)
    for _ in range(cfg.max_stage_iters):
        nxt = evaluate(x + (h / 4.0) * k1)
        done = inf_norm(nxt - k1) <= cfg.stage_tol
        k1 = nxt
        if done:
            break
    else:
        raise StageDivergence(f"stage 1 not converged in {cfg.max_stage_iters} iterations")
    k2 = evaluate(x)
    for _ in range(cfg.max_stage_iters):
        nxt = evaluate(x + h * (k2 - k1 / 4.0))
        done = inf_norm(nxt - k2) <= cfg.stage_tol
        k2 = nxt
        if done:
            break
    else:
        raise StageDivergence(f"stage 2 not converged in {cfg.max_stage_iters} iterations")
    return k1, k2


def affine_rk2_stages(a, b, x, h: float, cfg: StepConfig) -> tuple[np.ndarray, np.ndarray]:
    """Solve the two implicit stage equations for x' = A x + b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)

    if cfg.stage_solver == "fixed_point":
        return _fixed_point_stages(lambda y: a @ y + b, x, h, cfg)

    eye = np.eye(len(x))
    try:
        k1 = solve_linear(eye - (h / 4.0) * a, a @ x + b)
        k2 = solve_linear(eye - h * a, a @ (x - (h / 4.0) * k1) + b)
    except SingularMatrix as e:
        raise SingularStepMatrix(f"rk2 stage matrix is singular: {e}") from e
    return k1, k2


def rk2_step(xk, uk, dk, cfg: StepConfig, p: SystemParams) -> np.ndarray:
    """One step of the two-stage second-order implicit Runge-Kutta method.

    The direct path assembles the affine form of the drift and solves each
    stage in one shot; the fixed-point path iterates the drift function
    itself, which double-checks the affine reduction.
    """
    xk = check_state(xk)
    uk = check_pair(uk)
    dk = check_pair(dk)
    if cfg.stage_solver == "fixed_point":
        if len(xk) == 5:
            f = lambda y: drift5(y, uk, dk, p)
        else:
            f = lambda y: drift4(y, uk, dk, p)
        k1, k2 = _fixed_point_stages(f, xk, cfg.h, cfg)
    else:
        a, b = _affine_parts(len(xk), uk, dk, p)
        k1, k2 = affine_rk2_stages(a, b, xk, cfg.h, cfg)
    return xk + (cfg.h / 2.0) * (k1 + k2)


def _harmonic_generator(w: float) -> np.ndarray:
    # (cos, sin)' = Omega (cos, sin)
    return np.array([[0.0, -w], [w, 0.0]])


def exact_step(xk, uk, disturbance: sig.SignalSpec, t_k: float, h: float,
               p: SystemParams) -> np.ndarray:
    """Exact flow of the held-input model from t_k to t_k + h.

    The state is augmented with a constant slot (carrying the held input and
    any constant disturbance) and, for a harmonic disturbance, with a
    rotating cosine/sine pair; the autonomous augmented system is then
    advanced with one matrix exponential.
    """
    xk = check_state(xk)
    uk = check_pair(uk)
    if not np.isfinite(t_k) or not np.isfinite(h):
        raise ValueError("time arguments must be finite")
    n = len(xk)
    a, _ = _affine_parts(n, uk, np.zeros(2), p)
    b_const = input_matrix(p, n) @ uk

    if disturbance.kind == "bounded_noise":
        raise UnsupportedDisturbance("noise has no closed-form flow; use a sampled stepper")
    if disturbance.kind == "constant":
        b_const = b_const + disturbance_matrix(p, n) @ np.array(disturbance.value)

    if disturbance.kind == "sinusoid":
        w = disturbance.frequency
        gen = np.zeros((n + 3, n + 3))
        gen[:n, :n] = a
        gen[:n, n:n + 2] = disturbance.amplitude * disturbance_matrix(p, n)
        gen[n:n + 2, n:n + 2] = _harmonic_generator(w)
        gen[:n, n + 2] = b_const
        arg = w * t_k + disturbance.phase
        z = np.concatenate([xk, [np.cos(arg), np.sin(arg), 1.0]])
    else:
        gen = np.zeros((n + 1, n + 1))
        gen[:n, :n] = a
        gen[:n, n] = b_const
        z = np.concatenate([xk, [1.0]])

    return (mat_exp(gen, h) @ z)[:n]


class _ZohPropagator:
    """Precomputed exact one-step maps for the 4-state subsystem.

    The subsystem matrix does not depend on the input, so the homogeneous
    propagator, the held-input response, and the harmonic response can all
    be built once per (params, h, disturbance) and each step reduces to a
    few small mat-vecs.  Used by simulate() for long reference runs; agrees
    with exact_step to roundoff.
    """

    def __init__(self, p: SystemParams, h: float, disturbance: sig.SignalSpec):
        if disturbance.kind == "bounded_noise":
            raise UnsupportedDisturbance("noise has no closed-form flow; use a sampled stepper")
        self.spec = disturbance
        a = flow_matrix(p, 4)
        self.phi = mat_exp(a, h)
        c0 = input_matrix(p, 4)
        gen_u = np.zeros((6, 6))
        gen_u[:4, :4] = a
        gen_u[:4, 4:] = c0
        self.psi_u = mat_exp(gen_u, h)[:4, 4:]
        bmat = disturbance_matrix(p, 4)
        if disturbance.kind == "sinusoid":
            gen_d = np.zeros((6, 6))
            gen_d[:4, :4] = a
            gen_d[:4, 4:] = disturbance.amplitude * bmat
            gen_d[4:, 4:] = _harmonic_generator(disturbance.frequency)
            self.g_harm = mat_exp(gen_d, h)[:4, 4:]
            self.b_resp = None
        elif disturbance.kind == "constant":
            gen_d = np.zeros((6, 6))
            gen_d[:4, :4] = a
            gen_d[:4, 4:] = bmat
            self.g_harm = None
            self.b_resp = mat_exp(gen_d, h)[:4, 4:] @ np.array(disturbance.value)
        else:
            self.g_harm = None
            self.b_resp = None

    def step(self, x: np.ndarray, u: np.ndarray, t_k: float) -> np.ndarray:
        out = self.phi @ x + self.psi_u @ u
        if self.g_harm is not None:
            arg = self.spec.frequency * t_k + self.spec.phase
            out = out + self.g_harm @ np.array([np.cos(arg), np.sin(arg)])
        elif self.b_resp is not None:
            out = out + self.b_resp
        return out


def simulate(initial, controller: str, stepper: str, disturbance: sig.SignalSpec,
             T: float, cfg: StepConfig, params: SystemParams,
             iss_params: IssParams | None = None,
             pi_gains: tuple[np.ndarray, np.ndarray] | None = None,
             input_error: sig.SignalSpec | None = None) -> Trajectory:
    """Run the zero-order-hold closed loop and record every sample.

    At each step the disturbance is sampled at the step start, the input is
    computed from the current state (plus the injected input-error signal,
    if any) and held, and the chosen stepper advances one interval of length
    cfg.h.  The horizon is rounded to a whole number of steps.  Stepper
    failures are re-raised with the failing step index attached.
    """
    x = check_state(initial)
    n = len(x)
    if controller not in CONTROLLERS:
        raise ValueError(f"unknown controller {controller!r}")
    if stepper not in STEPPERS:
        raise ValueError(f"unknown stepper {stepper!r}")
    if not (np.isfinite(T) and T > 0):
        raise ValueError("horizon T must be positive")
    n_steps = int(round(T / cfg.h))
    if n_steps < 1:
        raise ValueError("horizon must cover at least one step")
    if n_steps > 10 ** 8:
        raise ValueError("T/h exceeds the step budget of 1e8")

    if iss_params is None:
        iss_params = IssParams()
    if controller == "pi":
        kp, ki = pi_gains if pi_gains is not None else (None, None)
        pi_state = PiState() if kp is None else PiState(kp=kp, ki=ki)

    zoh = None
    if stepper == "exact_reference" and n == 4:
        zoh = _ZohPropagator(params, cfg.h, disturbance)

    t_grid = np.arange(n_steps + 1) * cfg.h
    states = np.zeros((n_steps + 1, n))
    u_arr = np.zeros((n_steps + 1, 2))
    d_arr = np.zeros((n_steps + 1, 2))
    h_arr = np.zeros(n_steps + 1)
    h0_arr = np.zeros(n_steps + 1)

    for k in range(n_steps + 1):
        t = float(t_grid[k])
        d = sig.sample(disturbance, t)
        if controller == "iss":
            u = iss_control(x[:4], params, iss_params)
        elif controller == "pi":
            u, pi_state = pi_control(x[:4], pi_state, cfg.h)
        else:
            u = np.zeros(2)
        if input_error is not None:
            u = u + sig.sample(input_error, t)

        states[k] = x
        u_arr[k] = u
        d_arr[k] = d
        h0 = subsystem_energy(x, params)
        h0_arr[k] = h0
        h_arr[k] = hamiltonian(x, params) if n == 5 else h0

        if k == n_steps:
            break
        try:
            if stepper == "midpoint_dirac":
                x = midpoint_step(x, u, d, cfg, params)
            elif stepper == "rk2_twostage":
                x = rk2_step(x, u, d, cfg, params)
            elif zoh is not None:
                x = zoh.step(x, u, t)
            else:
                x = exact_step(x, u, disturbance, t, cfg.h, params)
        except (SingularStepMatrix, StageDivergence, UnsupportedDisturbance) as e:
            raise type(e)(f"step {k} (t={t:g}): {e}") from e

    return Trajectory(t=t_grid, states=states, u=u_arr, d=d_arr, H=h_arr,
                      H0=h0_arr, params=params, controller=controller,
                      stepper=stepper, h=cfg.h, T=float(n_steps * cfg.h))
