"""
Tests for the PTT tensor algebra and right-hand sides.
"""

import numpy as np
import pytest

from src.ptt_model import (
    ModelParams,
    ModelRegimeError,
    SimState,
    coupling_pairing,
    damping_term,
    isotropic_rate,
    linear_mode_matrix,
    perturbation_consistency,
    pressure,
    q_bilinear,
    rhs_original,
    rhs_perturbation,
    scaled_trace,
    skew_grad,
    special_solution,
    special_solution_rate,
    sym_grad,
    trace_rhs_residual,
)
from src.spectral_core import (
    SpectralTensorField,
    SpectralVectorField,
    full_gradient,
    l2_norm,
    random_tensor_field,
    random_vector_field,
)
from src.verification import random_state


def shear(grid):
    """u = (sin x2, 0, 0)."""
    x = grid.physical_coordinates()
    values = np.zeros((3,) + grid.physical_shape)
    values[0] = np.sin(x[1])
    return SpectralVectorField.from_physical(grid, values, solenoidal=True)


class TestModelParams:
    """Parameter validation and regime flags."""

    def test_defaults_are_reference_regime(self):
        params = ModelParams()
        assert params.reference_regime
        assert params.has_special_solution

    @pytest.mark.parametrize("kwargs", [{"mu": 0.0}, {"mu1": -1.0}, {"b": -0.5},
                                        {"lam": 1.5}, {"c0": 0.0}, {"c0": np.inf}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ModelParams(**kwargs)

    def test_damping_rate(self):
        assert ModelParams(c0=3.0).damping_rate(0.0) == pytest.approx(3.0)
        assert ModelParams(c0=1.0).damping_rate(1.0) == pytest.approx(0.5)

    def test_perturbation_form_requires_a0_b1(self):
        with pytest.raises(ModelRegimeError):
            ModelParams(a=0.5).require_perturbation_form()

    def test_dict_round_trip(self):
        params = ModelParams(mu=2.0, lam=0.3, c0=4.0)
        assert ModelParams.from_dict(params.to_dict()) == params

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ValueError, match="viscosity"):
            ModelParams.from_dict({"mu": 1.0, "viscosity": 2.0})


class TestTensorAlgebra:
    """D(u), Omega(u) and Q."""

    def test_shear_gradients(self, grid16):
        x = grid16.physical_coordinates()
        D = sym_grad(shear(grid16)).full_physical()
        W = skew_grad(shear(grid16)).to_physical()
        np.testing.assert_allclose(D[0, 1], 0.5 * np.cos(x[1]), atol=1e-12)
        np.testing.assert_allclose(D[0, 0], 0.0, atol=1e-12)
        np.testing.assert_allclose(W[0, 1], 0.5 * np.cos(x[1]), atol=1e-12)
        np.testing.assert_allclose(W[1, 0], -0.5 * np.cos(x[1]), atol=1e-12)

    def test_decomposition(self, grid16, rng):
        u = random_vector_field(grid16, rng)
        D = sym_grad(u).full_physical()
        W = skew_grad(u).to_physical()
        np.testing.assert_allclose(D + W, full_gradient(u).to_physical(), atol=1e-12)

    def test_trace_of_sym_grad_vanishes(self, grid16, rng):
        u = random_vector_field(grid16, rng)
        assert sym_grad(u).trace().max_abs() <= 1e-12

    def test_q_of_identity(self, grid16, rng):
        u = random_vector_field(grid16, rng)
        iso = SpectralTensorField.isotropic(grid16, 1.0)
        assert q_bilinear(iso, u, lam=0.0).max_abs() <= 1e-12
        twice_d = q_bilinear(iso, u, lam=1.0) - 2.0 * sym_grad(u)
        assert twice_d.max_abs() <= 1e-12

    def test_q_is_trace_free(self, grid16, rng):
        q = q_bilinear(random_tensor_field(grid16, rng), random_vector_field(grid16, rng))
        assert q.trace().max_abs() <= 1e-12 * max(1.0, q.max_abs())


class TestSpecialSolution:
    """tau_bar(t) = g(t)/3 I."""

    def test_value_at_zero(self, grid8):
        tau = special_solution(grid8, 0.0, 3.0)
        np.testing.assert_allclose(tau.mean(), [1.0, 1.0, 1.0, 0.0, 0.0, 0.0])

    def test_decays(self, grid8):
        values = [float(special_solution(grid8, t, 1.0).mean()[0]) for t in (0.0, 1.0, 10.0)]
        assert values[0] > values[1] > values[2] > 0.0

    def test_exact_solution_of_original_system(self, grid8):
        params = ModelParams(c0=2.0)
        t = 0.7
        u = SpectralVectorField.zeros(grid8, solenoidal=True)
        du, dtau = rhs_original(u, special_solution(grid8, t, params.c0), params)
        assert du.max_abs() == 0.0
        assert (dtau - special_solution_rate(grid8, t, params.c0)).max_abs() <= 1e-14

    def test_negative_time_rejected(self, grid8):
        with pytest.raises(ValueError):
            special_solution(grid8, -0.1, 1.0)


class TestRightHandSides:
    """Perturbation RHS against hand-evaluated cases and the original form."""

    def test_zero_state_is_equilibrium(self, grid8):
        du, dsigma = rhs_perturbation(SimState.zeros(grid8, t=0.3), ModelParams())
        assert du.max_abs() == 0.0 and dsigma.max_abs() == 0.0

    def test_isotropic_reduction(self, grid8):
        c, t = 0.2, 0.4
        params = ModelParams()
        state = SimState(SpectralVectorField.zeros(grid8, solenoidal=True),
                         SpectralTensorField.isotropic(grid8, c), t)
        _, dsigma = rhs_perturbation(state, params)
        expected = isotropic_rate(c, t, params.c0)
        np.testing.assert_allclose(dsigma.mean(), [expected] * 3 + [0.0] * 3, atol=1e-14)

    def test_single_mode_velocity(self, grid16):
        u = shear(grid16)
        state = SimState(u, SpectralTensorField.zeros(grid16), 0.0)
        du, dsigma = rhs_perturbation(state, ModelParams())
        # u.grad u = 0 for a shear, so du = Lap u = -u
        assert l2_norm(du + u) <= 1e-12
        assert l2_norm(dsigma - sym_grad(u)) <= 1e-12

    def test_consistency_with_original(self, grid16, rng):
        for _ in range(5):
            state = random_state(grid16, rng)
            assert perturbation_consistency(state, ModelParams()) <= 1e-10

    def test_consistency_with_slip(self, grid16, rng):
        params = ModelParams(lam=0.4, mu=0.5, mu1=2.0, mu2=0.7, c0=3.0)
        state = random_state(grid16, rng)
        assert perturbation_consistency(state, params) <= 1e-10

    def test_regime_error(self, grid8):
        with pytest.raises(ModelRegimeError):
            rhs_perturbation(SimState.zeros(grid8), ModelParams(a=1.0))

    def test_coupling_cancels(self, grid16, rng):
        u = random_vector_field(grid16, rng)
        sigma = random_tensor_field(grid16, rng)
        assert abs(coupling_pairing(u, sigma)) <= 1e-10

    def test_trace_equation(self, grid16, rng):
        state = random_state(grid16, rng, amplitude=0.5)
        assert trace_rhs_residual(state, ModelParams()) <= 1e-10

    def test_trace_equation_needs_lam_zero(self, grid8):
        with pytest.raises(ModelRegimeError):
            trace_rhs_residual(SimState.zeros(grid8), ModelParams(lam=0.5))

    def test_damping_term_rates(self, grid8):
        iso = SpectralTensorField.isotropic(grid8, 1.0)
        assert float(damping_term(iso, 0.5).mean()[0]) == pytest.approx(1.0)


class TestDerivedQuantities:
    """Pressure, scaled trace and the linear mode matrix."""

    def test_pressure_of_rest_state(self, grid8):
        assert pressure(SimState.zeros(grid8), ModelParams()).max_abs() == 0.0

    def test_pressure_mean_free(self, grid16, rng):
        p = pressure(random_state(grid16, rng), ModelParams())
        assert float(p.mean()) == 0.0

    def test_scaled_trace(self, grid8):
        state = SimState(SpectralVectorField.zeros(grid8, solenoidal=True),
                         SpectralTensorField.isotropic(grid8, 0.1), 1.0)
        assert float(scaled_trace(state, 1.0).mean()) == pytest.approx(4.0 * 0.3)

    def test_mode_matrix_damped(self):
        params = ModelParams()
        M = linear_mode_matrix((1.0, 0.0, 0.0), 0.0, params)
        assert M.shape == (9, 9)
        assert np.max(np.linalg.eigvals(M).real) < 0.0

    def test_mode_matrix_trace_block(self):
        params = ModelParams()
        M = linear_mode_matrix((0.0, 0.0, 0.0), 0.0, params)
        # at k = 0 the isotropic direction decays at 2g
        iso = np.array([0, 0, 0, 1, 1, 1, 0, 0, 0], dtype=complex)
        np.testing.assert_allclose(M @ iso, -2.0 * iso)
