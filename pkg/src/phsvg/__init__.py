"""Port-Hamiltonian modeling, ISS control, and structure-preserving
simulation of a grid-forming static var generator."""

from .control import (IssParams, PiState, RobustnessBound, default_pi_gains,
                      iss_control, iss_inequality_residual, pi_control,
                      robustness_bound)
from .linalg import (DimensionMismatch, SingularMatrix, identity, inf_norm,
                     mat_add, mat_exp, mat_scale, matvec, solve_linear)
from .metrics import (DegenerateFit, MetricsReport, build_report,
                      control_effort, energy_drift, iss_margin,
                      observed_order, settling_time, steady_offset)
from .model import (SystemParams, discrete_balance_residual, drift4, drift5,
                    energy_rate, grad_hamiltonian, hamiltonian,
                    subsystem_energy)
from .signals import (SignalSpec, bounded_noise, constant, sample, sinusoid,
                      sup_norm, zero_signal)
from .steppers import (CONTROLLERS, STEPPERS, SingularStepMatrix,
                       StageDivergence, StepConfig, UnsupportedDisturbance,
                       exact_step, midpoint_step, rk2_step, simulate)
from .trajectory import StepRecord, Trajectory, write_csv

__version__ = "0.1.0"
