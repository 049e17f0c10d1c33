"""
Tests for the integrating-factor Runge-Kutta stepper.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.ptt_model import ModelParams, SimState
from src.spectral_core import SpectralTensorField, SpectralVectorField, random_vector_field
from src.time_integrator import (
    BlowUpDetected,
    BlowUpReport,
    StepperConfig,
    apply_factors,
    check_finite,
    damping_factors,
    iterate_steps,
    max_abs_trace_tau,
    step,
    suggest_dt,
)
from src.verification import integrator_order_errors, isotropic_error


def isotropic_state(grid, c, t=0.0):
    return SimState(SpectralVectorField.zeros(grid, solenoidal=True),
                    SpectralTensorField.isotropic(grid, c), t)


def cosine_shear_state(grid, eps):
    """sigma_12 = eps cos(x3), u = 0."""
    x = grid.physical_coordinates()
    values = np.zeros((3, 3) + grid.physical_shape)
    values[0, 1] = values[1, 0] = eps * np.cos(x[2])
    return SimState(SpectralVectorField.zeros(grid, solenoidal=True),
                    SpectralTensorField.from_full_physical(grid, values), 0.0)


class TestStepperConfig:
    """Validation of step settings."""

    @pytest.mark.parametrize("kwargs", [{"dt": 0.0}, {"scheme": "euler"}, {"cfl_safety": 1.5},
                                        {"dt_max": -1.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            StepperConfig(**kwargs)

    def test_threshold_from_config(self):
        assert StepperConfig().trace_threshold == pytest.approx(1e6)

    def test_report_dict(self):
        report = BlowUpReport(0.5, "non-finite values", float("inf"))
        assert report.to_dict()["reason"] == "non-finite values"
        assert "t=0.5" in str(BlowUpDetected(report))


class TestDampingFactors:
    """Exact factors of the sigma damping."""

    def test_values(self):
        d, d2 = damping_factors(0.0, 1.0, 1.0)
        assert d == pytest.approx(0.5)
        assert d2 == pytest.approx(0.25)

    @given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.1, 10.0))
    @settings(max_examples=50, deadline=None)
    def test_semigroup(self, t0, a, b, c0):
        d01, _ = damping_factors(t0, t0 + a, c0)
        d12, _ = damping_factors(t0 + a, t0 + a + b, c0)
        d02, _ = damping_factors(t0, t0 + a + b, c0)
        assert d01 * d12 == pytest.approx(d02, rel=1e-12)

    def test_reversed_interval(self):
        with pytest.raises(ValueError):
            damping_factors(1.0, 0.5, 1.0)

    def test_apply_factors_viscous(self, grid16):
        x = grid16.physical_coordinates()
        values = np.zeros((3,) + grid16.physical_shape)
        values[0] = np.sin(2 * x[1])
        state = SimState(SpectralVectorField.from_physical(grid16, values, solenoidal=True),
                         SpectralTensorField.zeros(grid16), 0.0)
        out = apply_factors(state, 0.0, 0.25, ModelParams())
        assert out.t == 0.25
        np.testing.assert_allclose(out.u.to_physical()[0], np.exp(-1.0) * values[0], atol=1e-14)


class TestStep:
    """Single steps against closed-form evolutions."""

    def test_rest_state_stays_at_rest(self, grid8):
        state = SimState.zeros(grid8)
        for scheme in ("if_rk2", "if_rk4"):
            out = step(state, StepperConfig(dt=0.1, scheme=scheme), ModelParams())
            assert out.u.max_abs() == 0.0 and out.sigma.max_abs() == 0.0
            assert out.t == pytest.approx(0.1)

    @pytest.mark.parametrize("scheme", ["if_rk2", "if_rk4"])
    def test_linear_deviatoric_decay_is_exact(self, grid16, scheme):
        # with u = 0 and a tiny deviatoric sigma the only dynamics is the damping
        eps, t_end, dt = 1e-8, 0.5, 0.05
        params = ModelParams()
        state = cosine_shear_state(grid16, eps)
        stepper = StepperConfig(dt=dt, scheme=scheme, adaptive=False)
        for _ in range(int(round(t_end / dt))):
            state = step(state, stepper, params)
        d, _ = damping_factors(0.0, t_end, params.c0)
        expected = cosine_shear_state(grid16, eps * d).sigma
        assert (state.sigma - expected).max_abs() <= 1e-12 * eps

    def test_isotropic_ode(self):
        assert isotropic_error(n=8) <= 1e-8

    def test_velocity_stays_solenoidal(self, grid16, rng):
        u = random_vector_field(grid16, rng, amplitude=0.1)
        state = SimState(u, SpectralTensorField.zeros(grid16), 0.0)
        out = step(state, StepperConfig(dt=0.01), ModelParams())
        assert out.u.solenoidal
        assert out.divergence_error() <= 1e-12


class TestConvergenceOrder:
    """Per-mode comparison with the linearised ODE."""

    def test_rk2_second_order(self):
        errors = integrator_order_errors("if_rk2")
        ratios = [a / b for a, b in zip(errors[:-1], errors[1:])]
        assert min(ratios) >= 3.5

    def test_rk4_fourth_order(self):
        errors = integrator_order_errors("if_rk4", dts=(0.2, 0.1, 0.05), t_end=1.0)
        ratios = [a / b for a, b in zip(errors[:-1], errors[1:])]
        assert min(ratios) >= 10.0


class TestStepControl:
    """Adaptive step sizes, the run generator and blow-up triggers."""

    def test_suggest_dt_caps(self, grid16):
        stepper = StepperConfig(cfl_safety=0.5, dt_max=0.01)
        assert suggest_dt(SimState.zeros(grid16), stepper) == pytest.approx(0.01)
        assert suggest_dt(isotropic_state(grid16, 100.0), stepper) == pytest.approx(0.5 / 300.0)

    def test_iterate_lands_on_t_end(self, grid8):
        steps = list(iterate_steps(SimState.zeros(grid8), StepperConfig(dt=0.03, adaptive=False),
                                   ModelParams(), 0.1))
        assert len(steps) == 4
        assert steps[-1][0].t == pytest.approx(0.1)
        assert steps[-1][1] == pytest.approx(0.01)

    def test_nonfinite_detected(self, grid8):
        state = SimState.zeros(grid8)
        state.sigma.coeffs[0, 1, 0, 0] = np.nan
        with pytest.raises(BlowUpDetected) as info:
            check_finite(state, ModelParams(), StepperConfig())
        assert info.value.report.reason == "non-finite values"

    def test_threshold_detected(self, grid8):
        state = isotropic_state(grid8, 10.0)
        with pytest.raises(BlowUpDetected):
            check_finite(state, ModelParams(), StepperConfig(trace_threshold=20.0))
        assert max_abs_trace_tau(state, ModelParams()) == pytest.approx(31.0)

    def test_isotropic_negative_trace_blows_up(self, grid8):
        # tr tau(0) = -1 everywhere: y' = -y^2 reaches the threshold just before t = 1
        params = ModelParams(c0=1.0)
        state = isotropic_state(grid8, -2.0 / 3.0)
        stepper = StepperConfig(scheme="if_rk4", cfl_safety=0.1, dt_max=0.01,
                                trace_threshold=1e4)
        with pytest.raises(BlowUpDetected) as info:
            for _ in iterate_steps(state, stepper, params, 2.0):
                pass
        assert 0.99 <= info.value.report.t <= 1.0
