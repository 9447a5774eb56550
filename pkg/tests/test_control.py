import numpy as np
import pytest

from phsvg.control import (IssParams, PiState, default_pi_gains, iss_control,
                           iss_inequality_residual, pi_control,
                           robustness_bound)
from phsvg.model import SystemParams, subsystem_energy
from phsvg.signals import bounded_noise, sinusoid
from phsvg.steppers import StepConfig, simulate

UNIT = SystemParams()
ISS = IssParams()  # alpha=2, epsilon=0.125, ratio_cap=5


class TestIssControl:
    def test_zero_current_gives_zero_output(self):
        assert np.array_equal(iss_control([0.0, 0.0, 5.0, 5.0], UNIT, ISS),
                              [0.0, 0.0])

    def test_unit_ratio_closed_form(self):
        # r = 1 gives coefficient 2r + 1 = 3 at these parameters
        u = iss_control([1.0, 0.0, 1.0, 0.0], UNIT, ISS)
        assert u[0] == -3.0
        assert u[1] == 0.0

    def test_capped_ratio(self):
        # raw ratio 10^4 saturates to 5, coefficient 2*5 + 1 = 11
        u = iss_control([0.1, 0.0, 10.0, 0.0], UNIT, ISS)
        assert u[0] == pytest.approx(-1.1, rel=0, abs=1e-15)
        assert u[1] == 0.0

    def test_remark_constant_via_unit_cap(self):
        # ratio_cap = 1 reproduces the constant-coefficient saturation rule
        c = IssParams(alpha=2.0, epsilon=0.125, ratio_cap=1.0)
        u = iss_control([0.1, 0.0, 10.0, 0.0], UNIT, c)
        assert u[0] == pytest.approx(-0.3, rel=0, abs=1e-15)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            IssParams(alpha=0.0)
        with pytest.raises(ValueError):
            IssParams(epsilon=-1.0)


class TestIssInequality:
    def test_origin(self):
        assert iss_inequality_residual(np.zeros(4), np.zeros(2), UNIT, ISS) == 0.0

    def test_controller_meets_with_equality(self):
        x = [1.0, 0.0, 1.0, 0.0]
        u = iss_control(x, UNIT, ISS)
        assert iss_inequality_residual(x, u, UNIT, ISS) == pytest.approx(0.0, abs=1e-14)

    def test_uncontrolled_violates(self):
        assert iss_inequality_residual([1.0, 0.0, 1.0, 0.0], np.zeros(2),
                                       UNIT, ISS) == pytest.approx(3.0, abs=1e-14)

    def test_pointwise_certificate_random(self):
        rng = np.random.default_rng(123)
        trials = 0
        while trials < 10000:
            x = rng.uniform(-3, 3, 4)
            s = x[0] ** 2 + x[1] ** 2
            if s == 0.0 or (x[2] ** 2 + x[3] ** 2) / s > ISS.ratio_cap:
                continue
            trials += 1
            u = iss_control(x, UNIT, ISS)
            res = iss_inequality_residual(x, u, UNIT, ISS)
            assert res <= 1e-12 * (1 + ISS.alpha * subsystem_energy(x, UNIT))

    def test_collinearity_exact(self):
        rng = np.random.default_rng(321)
        for _ in range(10000):
            x = rng.uniform(-10, 10, 4)
            u = iss_control(x, UNIT, ISS)
            assert x[0] * u[1] == x[1] * u[0]

    def test_minimal_norm_among_feasible(self):
        rng = np.random.default_rng(17)
        trials = 0
        while trials < 1000:
            x = rng.uniform(-2, 2, 4)
            if x[0] ** 2 + x[1] ** 2 < 1e-12:
                continue
            trials += 1
            u = iss_control(x, UNIT, ISS)
            norm_u = np.hypot(u[0], u[1])
            null_dir = np.array([-x[1], x[0]])  # preserves x1 u1 + x2 u2
            for _ in range(100):
                feasible = u + rng.uniform(-3, 3) * null_dir
                assert np.hypot(*feasible) >= norm_u * (1 - 1e-12)


class TestPiControl:
    def test_first_call_proportional_only(self):
        u, s = pi_control([1.0, 0.0, 9.0, 9.0], PiState(), 0.01)
        assert np.array_equal(u, [-2.1956, -0.8878])
        assert np.array_equal(s.integral, [0.0, 0.0])
        assert s.initialized

    def test_zero_state_zero_output(self):
        u, _ = pi_control(np.zeros(4), PiState(), 0.01)
        assert np.array_equal(u, [0.0, 0.0])

    def test_trapezoid_of_constant_sample(self):
        h = 0.01
        kp, ki = default_pi_gains()
        x = np.array([1.0, 0.0, 0.0, 0.0])
        _, s1 = pi_control(x, PiState(), h)
        u2, s2 = pi_control(x, s1, h)
        assert np.array_equal(s2.integral, [h, 0.0])
        expected = -(kp @ [1.0, 0.0]) - (ki @ [h, 0.0])
        assert np.array_equal(u2, expected)

    def test_linear_in_state_and_integral(self):
        rng = np.random.default_rng(2)
        kp, ki = default_pi_gains()
        for _ in range(200):
            x12 = rng.uniform(-2, 2, 2)
            integral = rng.uniform(-2, 2, 2)
            base = PiState(kp=kp, ki=ki, integral=integral,
                           last_sample=x12, initialized=True)
            doubled = PiState(kp=kp, ki=ki, integral=2.0 * integral,
                              last_sample=2.0 * x12, initialized=True)
            # zero step contribution: compare the output map itself
            u1 = -(kp @ x12) - (ki @ integral)
            u2 = -(kp @ (2.0 * x12)) - (ki @ (2.0 * integral))
            assert np.array_equal(u2, 2.0 * u1)
            del base, doubled

    def test_caller_threads_state(self):
        # advancing one copy leaves the other untouched
        s0 = PiState()
        _, s1 = pi_control([1.0, 1.0, 0.0, 0.0], s0, 0.1)
        assert not s0.initialized and s1.initialized


class TestDefaultGains:
    def test_values_bit_for_bit(self):
        kp, ki = default_pi_gains()
        assert kp[0][0] == 2.1956
        assert kp[0][1] == -0.8878
        assert ki[1][0] == -0.5481
        assert np.array_equal(kp, [[2.1956, -0.8878], [0.8878, 2.1956]])
        assert np.array_equal(ki, [[0.8364, 0.5481], [-0.5481, 0.8364]])

    def test_rotational_structure(self):
        kp, _ = default_pi_gains()
        assert kp[0, 0] == kp[1, 1]
        assert kp[0, 1] == -kp[1, 0]


class TestRobustnessBound:
    def test_decay_rate(self):
        b = robustness_bound(UNIT, IssParams(alpha=2.0, epsilon=0.125))
        assert b.rho == 1.0
        assert not b.void

    def test_void_at_boundary(self):
        b = robustness_bound(UNIT, IssParams(alpha=1.0, epsilon=0.125))
        assert b.rho == 0.0
        assert b.void
        assert b.disturbance_gain is None and b.error_gain is None

    def test_gains(self):
        b = robustness_bound(UNIT, IssParams(alpha=2.0, epsilon=0.125))
        assert b.disturbance_gain == 0.25
        assert b.error_gain == 0.5


class TestClosedLoopRobustness:
    """Empirical check of the closed-loop energy bound.

    H0(t) <= H0(0) e^{-rho t} + (beta/rho) D^2 + V^2/(2 rho) + 1e-6, with the
    reference stepper at h = 1e-4.  From a start inside the disturbed steady
    regime the bound holds outright.  From a high-energy start the saturated
    controller decays slower than e^{-rho t} and the bound fails transiently;
    those violations must coincide with saturation-active samples (recorded
    as a known follow-up, not a silent failure).
    """

    def _run(self, x0, T):
        return simulate(x0, "iss", "exact_reference", sinusoid(2.0), T,
                        StepConfig(h=1e-4), UNIT, iss_params=ISS,
                        input_error=bounded_noise(0.2, seed=42))

    def _bound(self, traj):
        b = robustness_bound(UNIT, ISS)
        return (traj.H0[0] * np.exp(-b.rho * traj.t)
                + b.disturbance_gain * 1.0 ** 2
                + b.error_gain * 0.2 ** 2 + 1e-6)

    def test_bound_holds_from_moderate_energy(self):
        traj = self._run(np.array([0.5, 0.5, 0.0, 0.0]), 5.0)
        assert np.all(traj.H0 <= self._bound(traj))

    def test_violations_only_while_saturated(self):
        traj = self._run(np.ones(4), 5.0)
        violated = traj.H0 > self._bound(traj)
        s = traj.states[:, 0] ** 2 + traj.states[:, 1] ** 2
        q = traj.states[:, 2] ** 2 + traj.states[:, 3] ** 2
        saturated = q > ISS.ratio_cap * s
        assert not np.any(violated & ~saturated), \
            "bound violated at an unsaturated sample"
        if np.any(violated):
            frac = violated.mean()
            print(f"\nrobustness bound exceeded on {frac:.1%} of samples, "
                  f"all saturation-active (known saturation follow-up)")
