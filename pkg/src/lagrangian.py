#!/usr/bin/env python3
"""
Lagrangian - tracer particles along dq/dt = u(t, q) and the trace law along them

Along a characteristic the full stress trace obeys y' = -y^2 whatever u is
(when lam = 0), so y(t) = y0 / (1 + y0 t), which blows up at t = -1/y0 for
y0 < 0. Particles are advanced with RK4; the velocity is interpolated
trilinearly on the grid, the trace is evaluated spectrally (exact point values).
"""

from dataclasses import astuple, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .ptt_model import ModelParams, SimState
from .spectral_core import Grid, SpectralField, SpectralVectorField
from .time_integrator import BlowUpDetected, BlowUpReport
from .utils.logger_setup import get_logger

logger = get_logger("lagrangian")

PARTICLE_COLUMNS = ("t", "particle_id", "x", "y", "z", "tr_tau_sampled", "tr_tau_exact")
SAMPLING_METHODS = ("trilinear", "spectral")


@dataclass
class ParticleRow:
    """One particle sample."""

    t: float
    particle_id: int
    x: float
    y: float
    z: float
    tr_tau_sampled: float
    tr_tau_exact: float

    def to_row(self) -> list:
        return list(astuple(self))


@dataclass
class ParticleSet:
    """Positions wrapped into [0, L)^3 with labels and the initial trace values."""

    positions: np.ndarray
    box_length: float = 2.0 * np.pi
    labels: List[str] = field(default_factory=list)
    initial_trace_values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.positions = np.mod(np.atleast_2d(np.asarray(self.positions, dtype=float)),
                                self.box_length)
        if self.positions.shape[1] != 3:
            raise ValueError(f"positions must have shape (m, 3), got {self.positions.shape}")
        if not self.labels:
            self.labels = [f"p{i}" for i in range(len(self.positions))]

    def __len__(self):
        return len(self.positions)

    @classmethod
    def seed_points(cls, points: Sequence[Sequence[float]], grid: Grid,
                    labels: Optional[List[str]] = None) -> "ParticleSet":
        return cls(np.array(points, dtype=float), grid.length, list(labels or []))

    @classmethod
    def seed_grid_points(cls, grid: Grid, indices: Iterable[Sequence[int]],
                         labels: Optional[List[str]] = None) -> "ParticleSet":
        points = [[i * grid.dx for i in idx] for idx in indices]
        return cls.seed_points(points, grid, labels)

    def with_positions(self, positions: np.ndarray) -> "ParticleSet":
        return ParticleSet(positions, self.box_length, list(self.labels),
                           self.initial_trace_values)


# ---------------------------------------------------------------------------
# Point evaluation
# ---------------------------------------------------------------------------

def trilinear_sample(values: np.ndarray, points: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Periodic trilinear interpolation of grid values.

    Args:
        values: physical values of shape (..., n, n, n)
        points: (m, 3) positions
        grid: grid the values live on

    Returns:
        Array of shape (..., m)
    """
    n = grid.n
    scaled = np.mod(np.asarray(points, dtype=float), grid.length) / grid.dx
    base = np.floor(scaled).astype(int)
    frac = scaled - base
    out = 0.0
    for corner in range(8):
        offs = [(corner >> axis) & 1 for axis in range(3)]
        idx = [np.mod(base[:, axis] + offs[axis], n) for axis in range(3)]
        weight = np.prod([frac[:, a] if offs[a] else 1.0 - frac[:, a] for a in range(3)], axis=0)
        out = out + weight * values[..., idx[0], idx[1], idx[2]]
    return out


def spectral_sample(f: SpectralField, points: np.ndarray) -> np.ndarray:
    """Exact evaluation of the Fourier series at arbitrary points, shape (..., m)."""
    grid = f.grid
    points = np.atleast_2d(np.asarray(points, dtype=float))
    scale = 2.0 * np.pi / grid.length
    kx = grid.int_modes[0][:, 0, 0] * scale
    ky = grid.int_modes[1][0, :, 0] * scale
    kz = grid.int_modes[2][0, 0, :] * scale
    px = np.exp(1j * np.outer(points[:, 0], kx))
    py = np.exp(1j * np.outer(points[:, 1], ky))
    pz = np.exp(1j * np.outer(points[:, 2], kz)) * grid.parseval_weights[0, 0, :]
    return np.einsum("...abc,pa,pb,pc->...p", f.coeffs, px, py, pz).real


def sample_velocity(u: SpectralVectorField, points: np.ndarray, method: str = "trilinear",
                    u_physical: Optional[np.ndarray] = None) -> np.ndarray:
    """Velocity at points, shape (m, 3)."""
    if method == "spectral":
        return spectral_sample(u, points).T
    if u_physical is None:
        u_physical = u.to_physical()
    return trilinear_sample(u_physical, points, u.grid).T


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

def advect(particles: ParticleSet, u: SpectralVectorField, dt: float,
           u_next: Optional[SpectralVectorField] = None, method: str = "trilinear") -> ParticleSet:
    """
    RK4 step of dq/dt = u(q); positions re-wrapped into the box.

    When u_next is given the velocity is linear in time between u (start of
    the step) and u_next (end of the step).
    """
    if method not in SAMPLING_METHODS:
        raise ValueError(f"method must be one of {SAMPLING_METHODS}, got {method!r}")
    u_now = None if method == "spectral" else u.to_physical()
    u_end = u_now
    if u_next is not None and method != "spectral":
        u_end = u_next.to_physical()

    def velocity(x, theta):
        v0 = sample_velocity(u, x, method, u_now)
        if u_next is None or theta == 0.0:
            return v0
        v1 = sample_velocity(u_next, x, method, u_end)
        return (1.0 - theta) * v0 + theta * v1

    x = particles.positions
    k1 = velocity(x, 0.0)
    k2 = velocity(x + 0.5 * dt * k1, 0.5)
    k3 = velocity(x + 0.5 * dt * k2, 0.5)
    k4 = velocity(x + dt * k3, 1.0)
    return particles.with_positions(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def riccati_exact(y0, t):
    """y0 / (1 + y0 t); raises BlowUpDetected at or beyond the blow-up time."""
    y0_arr = np.asarray(y0, dtype=float)
    denominator = 1.0 + y0_arr * t
    if np.any(denominator <= 0.0):
        raise BlowUpDetected(BlowUpReport(float(t), "past Riccati blow-up time", float("inf")))
    result = y0_arr / denominator
    return float(result) if result.ndim == 0 else result


def blowup_time(y0: float) -> float:
    """-1/y0 for y0 < 0, infinity otherwise."""
    return -1.0 / y0 if y0 < 0 else float("inf")


def trace_tau_at(state: SimState, params: ModelParams, points: np.ndarray) -> np.ndarray:
    """tr tau = tr sigma + g(t) at arbitrary points."""
    return spectral_sample(state.trace, points) + params.damping_rate(state.t)


class ParticleTracker:
    """Owns a particle set during a run: records trace samples and advances positions."""

    def __init__(self, particles: ParticleSet, params: ModelParams, method: str = "trilinear"):
        self.particles = particles
        self.params = params
        self.method = method
        self.rows: List[ParticleRow] = []

    def record(self, state: SimState) -> List[ParticleRow]:
        sampled = trace_tau_at(state, self.params, self.particles.positions)
        if self.particles.initial_trace_values is None:
            self.particles.initial_trace_values = sampled.copy()
        rows = []
        for pid, (pos, value, y0) in enumerate(zip(self.particles.positions, sampled,
                                                   self.particles.initial_trace_values)):
            try:
                exact = riccati_exact(float(y0), state.t)
            except BlowUpDetected:
                exact = float("nan")
            rows.append(ParticleRow(float(state.t), pid, float(pos[0]), float(pos[1]),
                                    float(pos[2]), float(value), exact))
        self.rows.extend(rows)
        return rows

    def advance(self, u: SpectralVectorField, dt: float,
                u_next: Optional[SpectralVectorField] = None):
        self.particles = advect(self.particles, u, dt, u_next, self.method)


@dataclass
class TrajectoryComparison:
    """Sampled trace along one particle against the closed form."""

    particle_id: int
    times: np.ndarray
    sampled: np.ndarray
    exact: np.ndarray
    max_relative_deviation: float
    truncated: bool
    blowup_time: float

    def to_dict(self) -> Dict:
        return {"particle_id": self.particle_id,
                "max_relative_deviation": self.max_relative_deviation,
                "truncated": self.truncated, "blowup_time": self.blowup_time,
                "samples": int(len(self.times))}


def trace_along_trajectory(rows: Iterable[ParticleRow], particle_id: int,
                           t_limit: Optional[float] = None) -> TrajectoryComparison:
    """
    Compare a particle's sampled tr tau with y0/(1 + y0 t).

    Samples after the last finite value are dropped (truncated=True). The
    deviation is |sampled - exact| / |exact| over samples with t <= t_limit,
    falling back to the absolute difference where the exact value is zero.
    """
    mine = sorted((r for r in rows if r.particle_id == particle_id), key=lambda r: r.t)
    if not mine:
        raise ValueError(f"No samples for particle {particle_id}")
    times = np.array([r.t for r in mine])
    sampled = np.array([r.tr_tau_sampled for r in mine])
    exact = np.array([r.tr_tau_exact for r in mine])

    finite = np.isfinite(sampled) & np.isfinite(exact)
    truncated = not bool(np.all(finite))
    if truncated:
        last = int(np.argmin(finite))
        times, sampled, exact = times[:last], sampled[:last], exact[:last]

    window = np.ones(len(times), dtype=bool) if t_limit is None else times <= t_limit
    if np.any(window):
        error = np.abs(sampled[window] - exact[window])
        scale = np.abs(exact[window])
        deviation = np.divide(error, scale, out=error.copy(), where=scale > 0.0)
        max_dev = float(np.max(deviation))
    else:
        max_dev = 0.0
    y0 = float(sampled[0]) if len(sampled) else float("nan")
    return TrajectoryComparison(particle_id, times, sampled, exact, max_dev, truncated,
                                blowup_time(y0) if np.isfinite(y0) else float("nan"))
