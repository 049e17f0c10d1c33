#!/usr/bin/env python3
"""
PTT Model - tensor algebra and right-hand sides of the incompressible
Phan-Thien-Tanner system

Original form:
    u_t + u.grad u - mu Lap u + grad p = mu1 div tau,   div u = 0
    tau_t + u.grad tau + (a + b tr tau) tau + Q(tau, grad u) = mu2 D(u)
    Q(tau, grad u) = tau Omega - Omega tau + lam (D tau + tau D)

For a = 0, b = 1 the uniform isotropic tensor tau_bar = (g/3) I with
g(t) = 1/(1/c0 + t) is an exact solution; the perturbation sigma = tau - tau_bar
obeys
    sigma_t + u.grad sigma + g (sigma + tr(sigma)/3 I) + tr(sigma) sigma
            + Q(sigma, grad u) = (mu2 - 2 lam g / 3) D(u)

The pressure is eliminated by Leray projection. Products are evaluated in
physical space and dealiased with the 2/3 rule.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from .spectral_core import (
    TENSOR_PAIRS,
    SpectralMatrixField,
    SpectralScalarField,
    SpectralTensorField,
    SpectralVectorField,
    advect,
    divergence,
    full_gradient,
    inner_product,
    lambda_inv_p_div,
    laplacian,
    leray_project,
    pointwise_product,
    tensor_divergence,
)
from .utils.logger_setup import get_logger

logger = get_logger("ptt_model")


class ModelRegimeError(ValueError):
    """Requested form of the equations does not exist for these parameters."""


@dataclass
class ModelParams:
    """Coefficients of the PTT system. Defaults are the regime b = mu = mu1 = mu2 = 1, a = lam = 0."""

    mu: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    a: float = 0.0
    b: float = 1.0
    lam: float = 0.0
    c0: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (self.mu > 0 and self.mu1 > 0 and self.mu2 > 0):
            raise ValueError("mu, mu1 and mu2 must be positive")
        if self.b < 0:
            raise ValueError(f"b must be nonnegative, got {self.b}")
        if not -1.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [-1, 1], got {self.lam}")
        if not (0.0 < self.c0 < np.inf):
            raise ValueError(f"c0 must lie in (0, inf), got {self.c0}")

    @property
    def reference_regime(self) -> bool:
        return (self.mu == self.mu1 == self.mu2 == self.b == 1.0
                and self.a == 0.0 and self.lam == 0.0)

    @property
    def has_special_solution(self) -> bool:
        return self.a == 0.0 and self.b == 1.0

    def damping_rate(self, t: float) -> float:
        """g(t) = 1/(1/c0 + t)."""
        return 1.0 / (1.0 / self.c0 + t)

    def require_perturbation_form(self):
        if not self.has_special_solution:
            raise ModelRegimeError(f"Perturbation form needs a=0, b=1 (got a={self.a}, b={self.b})")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        unknown = sorted(set(data) - {"mu", "mu1", "mu2", "a", "b", "lam", "c0"})
        if unknown:
            raise ValueError(f"Unknown model parameters: {', '.join(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return {"mu": self.mu, "mu1": self.mu1, "mu2": self.mu2, "a": self.a,
                "b": self.b, "lam": self.lam, "c0": self.c0}


@dataclass(eq=False)
class SimState:
    """Velocity u, stress perturbation sigma and time t; derived fields cached on first use."""

    u: SpectralVectorField
    sigma: SpectralTensorField
    t: float = 0.0

    @classmethod
    def zeros(cls, grid, t: float = 0.0) -> "SimState":
        return cls(SpectralVectorField.zeros(grid, solenoidal=True),
                   SpectralTensorField.zeros(grid), t)

    @property
    def grid(self):
        return self.u.grid

    @cached_property
    def trace(self) -> SpectralScalarField:
        return self.sigma.trace()

    @cached_property
    def psi(self) -> SpectralVectorField:
        return lambda_inv_p_div(self.sigma)

    def copy(self) -> "SimState":
        return SimState(self.u.copy(), self.sigma.copy(), self.t)

    def tau(self, params: ModelParams) -> SpectralTensorField:
        """Full stress tau = sigma + tau_bar(t)."""
        return self.sigma + special_solution(self.grid, self.t, params.c0)

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.sigma.is_finite()

    def divergence_error(self) -> float:
        """max |div u| relative to max |grad u| (0 for u = 0)."""
        div = np.abs(np.sum(1j * self.grid.kd * self.u.coeffs, axis=0))
        scale = np.max(np.abs(self.grid.kd * self.u.coeffs))
        return float(div.max() / scale) if scale > 0 else 0.0


# ---------------------------------------------------------------------------
# Tensor algebra
# ---------------------------------------------------------------------------

def sym_grad(u: SpectralVectorField) -> SpectralTensorField:
    """D(u) = (grad u + grad u^T) / 2."""
    return full_gradient(u).symmetric_part()


def skew_grad(u: SpectralVectorField) -> SpectralMatrixField:
    """Omega(u) = (grad u - grad u^T) / 2."""
    return full_gradient(u).antisymmetric_part()


def q_bilinear(tau: SpectralTensorField, u: SpectralVectorField, lam: float = 0.0,
               dealias: bool = True) -> SpectralTensorField:
    """
    Q(tau, grad u) = tau Omega - Omega tau + lam (D tau + tau D), pointwise in physical space.

    Args:
        tau: symmetric tensor field
        u: velocity
        lam: slip parameter in [-1, 1]
        dealias: apply the 2/3 rule to the product

    Returns:
        Symmetric tensor field
    """
    grid = tau.grid
    T = tau.full_physical()
    G = full_gradient(u).to_physical()
    Gt = np.swapaxes(G, 0, 1)
    D = 0.5 * (G + Gt)
    W = 0.5 * (G - Gt)
    Q = np.einsum("ik...,kj...->ij...", T, W) - np.einsum("ik...,kj...->ij...", W, T)
    if lam != 0.0:
        Q += lam * (np.einsum("ik...,kj...->ij...", D, T) + np.einsum("ik...,kj...->ij...", T, D))
    values = np.stack([Q[i, j] for i, j in TENSOR_PAIRS])
    coeffs = grid.forward(values)
    if dealias:
        coeffs = grid.dealias(coeffs)
    return SpectralTensorField(grid, coeffs)


def trace_field(sigma: SpectralTensorField) -> SpectralScalarField:
    return sigma.trace()


def special_solution(grid, t: float, c0: float) -> SpectralTensorField:
    """tau_bar(t) = (1/3) (1/(1/c0 + t)) I."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if not c0 > 0:
        raise ValueError(f"c0 must be positive, got {c0}")
    return SpectralTensorField.isotropic(grid, (1.0 / (1.0 / c0 + t)) / 3.0)


def special_solution_rate(grid, t: float, c0: float) -> SpectralTensorField:
    """d tau_bar / dt = -(g^2/3) I."""
    g = 1.0 / (1.0 / c0 + t)
    return SpectralTensorField.isotropic(grid, -g * g / 3.0)


def damping_term(sigma: SpectralTensorField, g: float) -> SpectralTensorField:
    """g (sigma + tr(sigma)/3 I): rate g on the deviatoric part, 2g on the trace part."""
    return sigma.with_trace_part(g, 2.0 * g)


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def nonlinear_terms(state: SimState, params: ModelParams,
                    dealias: bool = True) -> Tuple[SpectralVectorField, SpectralTensorField]:
    """
    Every term of the perturbation system except mu Lap u and the sigma damping.

    These are the explicit parts of the integrating-factor schemes.
    """
    params.require_perturbation_form()
    u, sigma = state.u, state.sigma
    g = params.damping_rate(state.t)
    u_phys = u.to_physical()

    momentum = params.mu1 * tensor_divergence(sigma) - advect(u, u, dealias, u_physical=u_phys)
    du = leray_project(momentum)

    dsigma = -advect(u, sigma, dealias, u_physical=u_phys)
    dsigma = dsigma - pointwise_product(state.trace, sigma, dealias)
    dsigma = dsigma - q_bilinear(sigma, u, params.lam, dealias)
    dsigma = dsigma + (params.mu2 - 2.0 * params.lam * g / 3.0) * sym_grad(u)
    return du, dsigma


def rhs_perturbation(state: SimState, params: ModelParams,
                     dealias: bool = True) -> Tuple[SpectralVectorField, SpectralTensorField]:
    """
    Time derivatives (du, dsigma) of the perturbation system.

    du = P(-u.grad u + mu1 div sigma) + mu Lap u
    dsigma = -u.grad sigma - g (sigma + tr(sigma)/3 I) - tr(sigma) sigma - Q(sigma, grad u)
             + (mu2 - 2 lam g/3) D(u)
    """
    du_n, dsigma_n = nonlinear_terms(state, params, dealias)
    g = params.damping_rate(state.t)
    du = du_n + params.mu * laplacian(state.u)
    du.solenoidal = True
    dsigma = dsigma_n - damping_term(state.sigma, g)
    return du, dsigma


def rhs_original(u: SpectralVectorField, tau: SpectralTensorField, params: ModelParams,
                 dealias: bool = True) -> Tuple[SpectralVectorField, SpectralTensorField]:
    """Time derivatives (du, dtau) of the original system for general (a, b, lam, mu_i)."""
    u_phys = u.to_physical()
    momentum = params.mu1 * tensor_divergence(tau) - advect(u, u, dealias, u_physical=u_phys)
    du = leray_project(momentum) + params.mu * laplacian(u)
    du.solenoidal = True

    dtau = -advect(u, tau, dealias, u_physical=u_phys)
    dtau = dtau - params.a * tau
    if params.b != 0.0:
        dtau = dtau - params.b * pointwise_product(tau.trace(), tau, dealias)
    dtau = dtau - q_bilinear(tau, u, params.lam, dealias)
    dtau = dtau + params.mu2 * sym_grad(u)
    return du, dtau


def perturbation_consistency(state: SimState, params: ModelParams) -> float:
    """
    L2 distance between rhs_perturbation and the original form shifted by tau_bar.

    rhs_original(u, sigma + tau_bar) - d tau_bar/dt must reproduce dsigma.
    """
    params.require_perturbation_form()
    du_p, dsigma_p = rhs_perturbation(state, params)
    du_o, dtau_o = rhs_original(state.u, state.tau(params), params)
    dsigma_o = dtau_o - special_solution_rate(state.grid, state.t, params.c0)
    du_diff = du_p - du_o
    ds_diff = dsigma_p - dsigma_o
    return float(np.sqrt(inner_product(du_diff, du_diff) + inner_product(ds_diff, ds_diff)))


def trace_rhs_residual(state: SimState, params: ModelParams) -> float:
    """
    L2 norm of tr(dsigma) - [-u.grad tr sigma - (tr sigma)^2 - 2 g tr sigma].

    Vanishes when lam = 0 and div u = 0.
    """
    if params.lam != 0.0:
        raise ModelRegimeError("The closed trace equation needs lam = 0")
    _, dsigma = rhs_perturbation(state, params)
    trace = state.trace
    g = params.damping_rate(state.t)
    expected = (-advect(state.u, trace) - pointwise_product(trace, trace)
                - 2.0 * g * trace)
    residual = dsigma.trace() - expected
    return float(np.sqrt(max(inner_product(residual, residual), 0.0)))


def scaled_trace(state: SimState, c0: float) -> SpectralScalarField:
    """(1/c0 + t)^2 tr sigma, which is transported with only the quadratic source."""
    return (1.0 / c0 + state.t) ** 2 * state.trace


def coupling_pairing(u: SpectralVectorField, sigma: SpectralTensorField) -> float:
    """<P div sigma, u> + <D(u), sigma>; zero for solenoidal u and symmetric sigma."""
    return (inner_product(leray_project(tensor_divergence(sigma)), u)
            + inner_product(sym_grad(u), sigma))


def pressure(state: SimState, params: ModelParams) -> SpectralScalarField:
    """Mean-free pressure from -Lap p = div(u.grad u - mu1 div sigma)."""
    u = state.u
    source = divergence(advect(u, u) - params.mu1 * tensor_divergence(state.sigma))
    grid = u.grid
    k2 = np.where(grid.k2 == 0.0, 1.0, grid.k2)
    coeffs = source.coeffs / k2
    coeffs[0, 0, 0] = 0.0
    return SpectralScalarField(grid, coeffs)


def isotropic_rate(c: float, t: float, c0: float) -> float:
    """Rate of c for sigma = c I, u = 0: c' = -2 g c - 3 c^2."""
    g = 1.0 / (1.0 / c0 + t)
    return -2.0 * g * c - 3.0 * c * c


def linear_mode_matrix(k, t: float, params: ModelParams) -> np.ndarray:
    """
    9x9 matrix of the linearised perturbation system at one wavevector.

    Unknowns are (u_1, u_2, u_3, sigma_11, sigma_22, sigma_33, sigma_12, sigma_13, sigma_23).
    Includes viscosity, the time-dependent damping and the u <-> sigma coupling
    (Leray-projected div sigma, and D(u)).
    """
    params.require_perturbation_form()
    k = np.asarray(k, dtype=float)
    k2 = float(k @ k)
    g = params.damping_rate(t)
    M = np.zeros((9, 9), dtype=complex)

    M[0:3, 0:3] = -params.mu * k2 * np.eye(3)

    div = np.zeros((3, 6), dtype=complex)
    for m, (a, b) in enumerate(TENSOR_PAIRS):
        div[a, m] += 1j * k[b]
        if a != b:
            div[b, m] += 1j * k[a]
    proj = np.eye(3) - (np.outer(k, k) / k2 if k2 > 0 else 0.0)
    M[0:3, 3:9] = params.mu1 * proj @ div

    for m in range(3):
        M[3 + m, 3 + m] -= g
        for n in range(3):
            M[3 + m, 3 + n] -= g / 3.0

    coupling = params.mu2 - 2.0 * params.lam * g / 3.0
    for m, (a, b) in enumerate(TENSOR_PAIRS):
        M[3 + m, a] += coupling * 0.5j * k[b]
        M[3 + m, b] += coupling * 0.5j * k[a]
    return M
