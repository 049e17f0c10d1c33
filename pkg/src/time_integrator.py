#!/usr/bin/env python3
"""
Time Integrator - integrating-factor Runge-Kutta schemes for the perturbation system

The stiff linear parts are integrated exactly:
- viscosity on u: exp(-mu |k|^2 (t1 - t0)) per mode
- time-dependent damping on sigma: the deviatoric part decays with rate g(t),
  the trace part with 2 g(t), giving factors d and d^2 with
  d = (1/c0 + t0) / (1/c0 + t1)

Advection, the quadratic stress terms, Q and the u <-> sigma coupling are
explicit inside the stages. u is Leray-projected after every step.
"""

from dataclasses import asdict, dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .ptt_model import ModelParams, SimState, nonlinear_terms
from .spectral_core import SpectralTensorField, SpectralVectorField, leray_project
from .utils.config_manager import ConfigManager
from .utils.logger_setup import get_logger

logger = get_logger("time_integrator")

SCHEMES = ("if_rk2", "if_rk4")

Pair = Tuple[SpectralVectorField, SpectralTensorField]


@dataclass
class StepperConfig:
    """Step size control and scheme selection."""

    dt: float = 1e-2
    scheme: str = "if_rk2"
    dealias: bool = True
    cfl_safety: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-10
    adaptive: bool = True
    trace_threshold: Optional[float] = None

    def __post_init__(self):
        if self.trace_threshold is None:
            try:
                self.trace_threshold = ConfigManager().get_blowup_threshold()
            except Exception:
                self.trace_threshold = 1.0e6
        self.validate()

    def validate(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")


@dataclass
class BlowUpReport:
    """Where and why a run stopped being representable."""

    t: float
    reason: str
    max_abs_trace: float

    def to_dict(self) -> dict:
        return asdict(self)


class BlowUpDetected(RuntimeError):
    """Raised by the stepper when the state leaves the representable range."""

    def __init__(self, report: BlowUpReport):
        super().__init__(f"Blow-up at t={report.t:.6g}: {report.reason} "
                         f"(max |tr tau| = {report.max_abs_trace:.3e})")
        self.report = report


def damping_factors(t0: float, t1: float, c0: float) -> Tuple[float, float]:
    """
    Exact factors of the sigma damping over [t0, t1].

    Returns:
        (deviatoric_factor, trace_factor) with trace_factor = deviatoric_factor^2
    """
    if t1 < t0:
        raise ValueError(f"Damping interval reversed: t1={t1} < t0={t0}")
    if t0 < 0:
        raise ValueError(f"t0 must be nonnegative, got {t0}")
    d = (1.0 / c0 + t0) / (1.0 / c0 + t1)
    return d, d * d


def _propagate(u: SpectralVectorField, sigma: SpectralTensorField, t0: float, t1: float,
               params: ModelParams) -> Pair:
    if t1 == t0:
        return u, sigma
    d, d2 = damping_factors(t0, t1, params.c0)
    viscous = np.exp(-params.mu * u.grid.k2 * (t1 - t0))
    return u.with_coeffs(viscous * u.coeffs), sigma.with_trace_part(d, d2)


def apply_factors(state: SimState, t0: float, t1: float, params: ModelParams) -> SimState:
    """Exact solution of the linear stiff part from t0 to t1; the result is stamped t1."""
    u, sigma = _propagate(state.u, state.sigma, t0, t1, params)
    return SimState(u, sigma, t1)


def _explicit(u, sigma, t, params, stepper) -> Pair:
    return nonlinear_terms(SimState(u, sigma, t), params, stepper.dealias)


def _if_rk2(state: SimState, h: float, stepper: StepperConfig, params: ModelParams) -> Pair:
    t = state.t
    u, s = state.u, state.sigma
    k1u, k1s = _explicit(u, s, t, params, stepper)

    pu, ps = _propagate(u + h * k1u, s + h * k1s, t, t + h, params)
    k2u, k2s = _explicit(pu, ps, t + h, params, stepper)

    bu, bs = _propagate(u + (0.5 * h) * k1u, s + (0.5 * h) * k1s, t, t + h, params)
    return bu + (0.5 * h) * k2u, bs + (0.5 * h) * k2s


def _if_rk4(state: SimState, h: float, stepper: StepperConfig, params: ModelParams) -> Pair:
    t = state.t
    tm, te = t + 0.5 * h, t + h
    u, s = state.u, state.sigma

    k1u, k1s = _explicit(u, s, t, params, stepper)
    au, as_ = _propagate(u + (0.5 * h) * k1u, s + (0.5 * h) * k1s, t, tm, params)
    k2u, k2s = _explicit(au, as_, tm, params, stepper)

    hu, hs = _propagate(u, s, t, tm, params)
    bu, bs = hu + (0.5 * h) * k2u, hs + (0.5 * h) * k2s
    k3u, k3s = _explicit(bu, bs, tm, params, stepper)

    fu, fs = _propagate(u, s, t, te, params)
    cu3, cs3 = _propagate(k3u, k3s, tm, te, params)
    cu, cs = fu + h * cu3, fs + h * cs3
    k4u, k4s = _explicit(cu, cs, te, params, stepper)

    e1u, e1s = _propagate(k1u, k1s, t, te, params)
    e23u, e23s = _propagate(k2u + k3u, k2s + k3s, tm, te, params)
    new_u = fu + (h / 6.0) * (e1u + 2.0 * e23u + k4u)
    new_s = fs + (h / 6.0) * (e1s + 2.0 * e23s + k4s)
    return new_u, new_s


def max_abs_trace_tau(state: SimState, params: ModelParams) -> float:
    """max |tr tau| over the grid, tr tau = tr sigma + g(t)."""
    trace = state.sigma.trace().to_physical() + params.damping_rate(state.t)
    return float(np.max(np.abs(trace)))


def check_finite(state: SimState, params: ModelParams, stepper: StepperConfig,
                 dt: Optional[float] = None):
    """
    Raise BlowUpDetected when the state is no longer representable.

    Triggers: non-finite coefficients, |tr tau| above the threshold, or
    |tr sigma| * dt > 1 for the step just taken.
    """
    if not state.is_finite():
        raise BlowUpDetected(BlowUpReport(state.t, "non-finite values", float("inf")))
    max_trace = max_abs_trace_tau(state, params)
    if max_trace > stepper.trace_threshold:
        raise BlowUpDetected(BlowUpReport(state.t, "trace threshold exceeded", max_trace))
    if dt is not None:
        max_sigma_trace = float(np.max(np.abs(state.sigma.trace().to_physical())))
        if max_sigma_trace * dt > 1.0:
            raise BlowUpDetected(BlowUpReport(state.t, "trace stiffness |tr sigma| dt > 1",
                                              max_trace))


def step(state: SimState, stepper: StepperConfig, params: ModelParams,
         dt: Optional[float] = None) -> SimState:
    """Advance one step of size dt (default stepper.dt) and re-project u."""
    h = stepper.dt if dt is None else dt
    if stepper.scheme == "if_rk4":
        u, sigma = _if_rk4(state, h, stepper, params)
    else:
        u, sigma = _if_rk2(state, h, stepper, params)

    new_state = SimState(leray_project(u), sigma, state.t + h)
    check_finite(new_state, params, stepper, h)
    return new_state


def suggest_dt(state: SimState, stepper: StepperConfig) -> float:
    """dt = min(cfl * dx / max|u|, cfl / max|tr sigma|, dt_max)."""
    candidates = [stepper.dt_max]
    max_u = state.u.max_abs()
    if max_u > 0.0:
        candidates.append(stepper.cfl_safety * state.grid.dx / max_u)
    max_trace = float(np.max(np.abs(state.trace.to_physical())))
    if max_trace > 0.0:
        candidates.append(stepper.cfl_safety / max_trace)
    return float(min(candidates))


def iterate_steps(state: SimState, stepper: StepperConfig, params: ModelParams,
                  t_end: float) -> Iterator[Tuple[SimState, float]]:
    """
    Yield (state, dt) after every step until t_end.

    The step size is stepper.dt, or suggest_dt when adaptive; the last step is
    shortened to land on t_end. BlowUpDetected propagates to the caller.
    """
    current = state
    while current.t < t_end - 1e-14 * max(1.0, abs(t_end)):
        h = suggest_dt(current, stepper) if stepper.adaptive else stepper.dt
        if h < stepper.dt_min:
            raise BlowUpDetected(BlowUpReport(current.t, f"step size {h:.3e} below floor",
                                              max_abs_trace_tau(current, params)))
        h = min(h, t_end - current.t)
        current = step(current, stepper, params, h)
        yield current, h
