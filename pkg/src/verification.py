#!/usr/bin/env python3
"""
Verification - invariant suites behind `ptt-sim verify`

Each suite returns a SuiteResult holding one OperationResult per check:

    operators   transforms, Leray projection, fractional powers
    lp          partition of unity, reconstruction, almost orthogonality
    model       trace of Q, coupling cancellation, perturbation consistency
    integrator  exact damping factors, isotropic ODE, convergence order
    probes      Bony identity, commutator and product ratios vs baselines

`all` runs every suite in that order.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .estimate_probes import (
    PROBE_PS,
    bony_probe,
    commutator_probe,
    compare_to_baseline,
    load_baselines,
    product_probe,
    save_baselines,
)
from .littlewood_paley import ANNULUS, build_bank
from .ptt_model import (
    ModelParams,
    SimState,
    coupling_pairing,
    isotropic_rate,
    linear_mode_matrix,
    perturbation_consistency,
    q_bilinear,
    rhs_perturbation,
    trace_rhs_residual,
)
from .spectral_core import (
    Grid,
    SpectralTensorField,
    SpectralVectorField,
    divergence,
    fractional_lambda,
    l2_norm,
    lambda_inv_p_div,
    leray_project,
    random_scalar_field,
    random_tensor_field,
    random_vector_field,
    tensor_divergence,
)
from .time_integrator import StepperConfig, damping_factors, step
from .utils.config_manager import ConfigManager
from .utils.logger_setup import get_logger
from .utils.operation_result import OperationResult

logger = get_logger("verification")

SUITE_NAMES = ("operators", "lp", "model", "integrator", "probes")
ORDER_DTS = (4e-3, 2e-3, 1e-3)
# scheme -> (step sizes, t_end, minimum error ratio per halving)
ORDER_CHECKS = {
    "if_rk2": (ORDER_DTS, 0.1, 3.5),
    "if_rk4": ((0.2, 0.1, 0.05), 1.0, 10.0),
}


@dataclass
class SuiteResult:
    """Outcome of one suite."""

    name: str
    checks: List[OperationResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks)

    def add(self, success: bool, message: str, **data) -> OperationResult:
        result = OperationResult(success, message, data)
        self.checks.append(result)
        level = logger.info if result else logger.warning
        level(f"[{self.name}] {'PASS' if result else 'FAIL'}: {message}")
        return result

    def to_dict(self) -> Dict:
        return {"suite": self.name, "passed": self.passed,
                "checks": [check.to_dict() for check in self.checks]}


def _relative(error: float, scale: float) -> float:
    return error / scale if scale > 0.0 else error


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def operators_suite(seed: int = 0, n: int = 16) -> SuiteResult:
    suite = SuiteResult("operators")
    grid = Grid(n)
    rng = np.random.default_rng(seed)

    values = rng.standard_normal((3,) + grid.physical_shape)
    round_trip = np.max(np.abs(grid.inverse(grid.forward(values)) - values)) / np.max(np.abs(values))
    suite.add(round_trip <= 1e-12, f"Transform round trip error {round_trip:.2e}",
              error=float(round_trip))

    v = random_vector_field(grid, rng, solenoidal=False)
    pv = leray_project(v)
    idempotence = _relative(l2_norm(leray_project(pv) - pv), l2_norm(pv))
    div_error = _relative(divergence(pv).max_abs(), v.max_abs())
    suite.add(idempotence <= 1e-12 and div_error <= 1e-12,
              f"Leray projection idempotent ({idempotence:.2e}), divergence-free ({div_error:.2e})",
              idempotence=idempotence, divergence=div_error)

    pythagoras = abs(l2_norm(v) ** 2 - l2_norm(pv) ** 2 - l2_norm(v - pv) ** 2) / l2_norm(v) ** 2
    suite.add(pythagoras <= 1e-10, f"Leray projection orthogonal ({pythagoras:.2e})",
              error=pythagoras)

    f = random_scalar_field(grid, rng)
    inverse_pair = _relative(l2_norm(fractional_lambda(fractional_lambda(f, 1.5), -1.5) - f),
                             l2_norm(f))
    suite.add(inverse_pair <= 1e-12, f"Lambda^s Lambda^-s = identity on mean-free fields "
                                     f"({inverse_pair:.2e})", error=inverse_pair)

    sigma = random_tensor_field(grid, rng)
    psi = lambda_inv_p_div(sigma)
    psi_div = _relative(divergence(psi).max_abs(), tensor_divergence(sigma).max_abs())
    suite.add(psi_div <= 1e-12, f"Lambda^-1 P div sigma is solenoidal ({psi_div:.2e})",
              error=psi_div)
    return suite


# ---------------------------------------------------------------------------
# lp
# ---------------------------------------------------------------------------

def lp_suite(seed: int = 0, n: int = 32, cutoff_N: int = 2, samples: int = 20) -> SuiteResult:
    suite = SuiteResult("lp")
    bank = build_bank(Grid(n), cutoff_N)
    grid = bank.grid
    rng = np.random.default_rng(seed)

    deviation = bank.partition_deviation()
    suite.add(deviation <= 1e-10, f"Partition of unity deviation {deviation:.2e} "
                                  f"over shells {bank.j_min}..{bank.j_max}", deviation=deviation)

    worst = 0.0
    for _ in range(samples):
        f = random_scalar_field(grid, rng)
        residual = f.without_mean() - bank.sum_of_blocks(f)
        worst = max(worst, _relative(l2_norm(residual), l2_norm(f)))
    suite.add(worst <= 1e-10, f"Reconstruction residual {worst:.2e} on {samples} fields",
              residual=worst)

    overlap = 0.0
    for a, ja in enumerate(bank.shells):
        for b, jb in enumerate(bank.shells):
            if abs(ja - jb) >= 2:
                overlap = max(overlap, float(np.max(bank.multipliers[a] * bank.multipliers[b])))
    suite.add(overlap == 0.0, f"Blocks two or more shells apart are disjoint (max product {overlap})",
              overlap=overlap)

    outside = 0.0
    for idx, j in enumerate(bank.shells):
        scaled = grid.k_mag / 2.0 ** j
        mask = (scaled < ANNULUS[0]) | (scaled > ANNULUS[1])
        outside = max(outside, float(np.max(np.abs(bank.multipliers[idx][mask]), initial=0.0)))
    suite.add(outside == 0.0, f"Every block supported in its annulus (max outside {outside})",
              outside=outside)
    return suite


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

def random_state(grid: Grid, rng: np.random.Generator, amplitude: float = 1.0,
                 t: Optional[float] = None) -> SimState:
    u = random_vector_field(grid, rng, amplitude=amplitude, solenoidal=True)
    sigma = random_tensor_field(grid, rng, amplitude=amplitude)
    return SimState(u, sigma, float(rng.uniform(0.0, 2.0)) if t is None else t)


def model_suite(seed: int = 0, n: int = 16, samples: int = 50) -> SuiteResult:
    suite = SuiteResult("model")
    grid = Grid(n)
    rng = np.random.default_rng(seed)
    params = ModelParams()

    trace_q = pairing = consistency = trace_law = 0.0
    for _ in range(samples):
        state = random_state(grid, rng)
        q = q_bilinear(state.sigma, state.u)
        trace_q = max(trace_q, _relative(q.trace().max_abs(), q.max_abs()))

        div_term = l2_norm(leray_project(tensor_divergence(state.sigma))) * l2_norm(state.u)
        pairing = max(pairing, _relative(abs(coupling_pairing(state.u, state.sigma)), div_term))

        du, dsigma = rhs_perturbation(state, params)
        scale = np.sqrt(l2_norm(du) ** 2 + l2_norm(dsigma) ** 2)
        consistency = max(consistency, _relative(perturbation_consistency(state, params), scale))
        trace_law = max(trace_law, _relative(trace_rhs_residual(state, params),
                                             l2_norm(dsigma.trace())))

    suite.add(trace_q <= 1e-12, f"tr Q(sigma, grad u) = 0 ({trace_q:.2e})", error=trace_q)
    suite.add(pairing <= 1e-10, f"<P div sigma, u> + <D(u), sigma> = 0 ({pairing:.2e})",
              error=pairing)
    suite.add(consistency <= 1e-10, f"Perturbation and original forms agree ({consistency:.2e})",
              error=consistency)
    suite.add(trace_law <= 1e-10, f"Closed trace equation ({trace_law:.2e})", error=trace_law)
    return suite


# ---------------------------------------------------------------------------
# integrator
# ---------------------------------------------------------------------------

def single_mode_state(grid: Grid, epsilon: float = 1e-10) -> SimState:
    """u = (0, eps cos x1, 0), sigma_11 = eps cos x1, sigma_12 = eps sin x1."""
    x1 = grid.physical_coordinates()[0]
    u_values = np.zeros((3,) + grid.physical_shape)
    u_values[1] = epsilon * np.cos(x1)
    sigma_values = np.zeros((3, 3) + grid.physical_shape)
    sigma_values[0, 0] = epsilon * np.cos(x1)
    sigma_values[0, 1] = sigma_values[1, 0] = epsilon * np.sin(x1)
    u = SpectralVectorField.from_physical(grid, u_values, solenoidal=True)
    return SimState(u, SpectralTensorField.from_full_physical(grid, sigma_values), 0.0)


def mode_vector(state: SimState, index: Tuple[int, int, int] = (1, 0, 0)) -> np.ndarray:
    i, j, k = index
    return np.concatenate([state.u.coeffs[:, i, j, k], state.sigma.coeffs[:, i, j, k]])


def mode_reference(y0: np.ndarray, k: Sequence[float], t_end: float,
                   params: ModelParams) -> np.ndarray:
    """Linearised single-mode solution by DOP853 at tight tolerance."""
    solution = solve_ivp(lambda t, y: linear_mode_matrix(k, t, params) @ y, (0.0, t_end),
                         y0.astype(complex), method="DOP853", rtol=1e-12,
                         atol=1e-12 * float(np.max(np.abs(y0))))
    return solution.y[:, -1]


def integrator_order_errors(scheme: str = "if_rk2", dts: Sequence[float] = ORDER_DTS,
                            t_end: float = 0.1, n: int = 8,
                            params: Optional[ModelParams] = None) -> List[float]:
    """Relative error of the k = (1, 0, 0) mode at t_end for each fixed step size."""
    params = params or ModelParams()
    grid = Grid(n)
    start = single_mode_state(grid)
    exact = mode_reference(mode_vector(start), (1.0, 0.0, 0.0), t_end, params)
    errors = []
    for dt in dts:
        stepper = StepperConfig(dt=dt, scheme=scheme, adaptive=False, dt_max=dt)
        state = start
        for _ in range(int(round(t_end / dt))):
            state = step(state, stepper, params)
        errors.append(float(np.linalg.norm(mode_vector(state) - exact) / np.linalg.norm(exact)))
    return errors


def isotropic_error(c_start: float = 0.1, t_end: float = 0.5, dt: float = 1e-2,
                    scheme: str = "if_rk4", n: int = 8,
                    params: Optional[ModelParams] = None) -> float:
    """sigma = c I with u = 0 against c' = -2 g c - 3 c^2 integrated by DOP853."""
    params = params or ModelParams()
    grid = Grid(n)
    state = SimState(SpectralVectorField.zeros(grid, solenoidal=True),
                     SpectralTensorField.isotropic(grid, c_start), 0.0)
    stepper = StepperConfig(dt=dt, scheme=scheme, adaptive=False, dt_max=dt)
    for _ in range(int(round(t_end / dt))):
        state = step(state, stepper, params)
    reference = solve_ivp(lambda t, c: [isotropic_rate(c[0], t, params.c0)], (0.0, t_end),
                          [c_start], method="DOP853", rtol=1e-12, atol=1e-14).y[0, -1]
    return abs(float(state.sigma.mean()[0]) - reference) / abs(reference)


def integrator_suite(n: int = 8) -> SuiteResult:
    suite = SuiteResult("integrator")

    c0 = 1.0
    d01, _ = damping_factors(0.0, 0.3, c0)
    d12, _ = damping_factors(0.3, 0.7, c0)
    d02, d02_trace = damping_factors(0.0, 0.7, c0)
    composition = abs(d01 * d12 - d02)
    suite.add(composition <= 1e-15 and abs(d02_trace - d02 ** 2) <= 1e-15,
              f"Damping factors compose exactly ({composition:.1e})", error=composition)

    iso = isotropic_error(n=n)
    suite.add(iso <= 1e-8, f"Isotropic stress follows c' = -2gc - 3c^2 ({iso:.2e})", error=iso)

    for scheme, (dts, t_end, min_ratio) in ORDER_CHECKS.items():
        errors = integrator_order_errors(scheme, dts, t_end, n=n)
        ratios = [a / b for a, b in zip(errors[:-1], errors[1:])]
        suite.add(min(ratios) >= min_ratio,
                  f"{scheme} error ratios per dt halving {[round(r, 3) for r in ratios]}",
                  errors=errors, ratios=ratios)
    return suite


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------

def probes_suite(seed: int = 0, samples: Optional[int] = None, ps: Sequence[float] = PROBE_PS,
                 baseline_path: Optional[Path] = None, grid_n: Optional[int] = None,
                 bony_samples: int = 50) -> SuiteResult:
    """Bony residuals plus commutator/product ratios; absent baselines are recorded."""
    suite = SuiteResult("probes")
    if samples is None:
        samples = int(ConfigManager().get("probes.samples", 100))

    bony = bony_probe(seed, bony_samples, grid_n=grid_n)
    suite.add(bony.passed, f"Bony residual max {bony.ratio_max:.2e} over {bony_samples} samples",
              **bony.stats())

    baselines = load_baselines(baseline_path)
    recorded = False
    for probe in (commutator_probe, product_probe):
        for p in ps:
            report = probe(seed, samples, p, grid_n=grid_n)
            suite.add(report.passed, f"{report.estimate_id} p={p:g}: max ratio "
                                     f"{report.ratio_max:.4g} (ceiling {report.ceiling:g})",
                      **report.stats())
            comparison = compare_to_baseline(report, baselines)
            recorded = recorded or comparison.data.get("recorded", False)
            suite.checks.append(comparison)
            logger.info(f"[probes] {comparison.message}")
    if recorded:
        save_baselines(baselines, baseline_path)
    return suite


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "operators": operators_suite,
    "lp": lp_suite,
    "model": model_suite,
    "integrator": integrator_suite,
    "probes": probes_suite,
}


def run_suites(suite: str = "all", **options) -> List[SuiteResult]:
    """Run one suite or all of them; options go to the probes suite."""
    names = SUITE_NAMES if suite == "all" else (suite,)
    for name in names:
        if name not in SUITES:
            raise ValueError(f"Unknown suite {name!r}, expected one of {SUITE_NAMES + ('all',)}")
    results = []
    for name in names:
        logger.info(f"Running suite: {name}")
        kwargs = options if name == "probes" else {}
        results.append(SUITES[name](**kwargs))
    return results


def verify(suite: str = "all", **options) -> Tuple[int, Dict]:
    """
    Run suites and build the machine-readable summary.

    Returns:
        (exit_code, summary) with exit_code 0 when every check passed, else 1
    """
    results = run_suites(suite, **options)
    passed = all(r.passed for r in results)
    summary = {"suite": suite, "passed": passed, "results": [r.to_dict() for r in results]}
    return (0 if passed else 1), summary
