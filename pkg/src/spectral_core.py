#!/usr/bin/env python3
"""
Spectral Core - periodic-grid Fourier representation and linear nonlocal operators

Fields live on the torus [0, L)^3 and are stored as real-to-complex Fourier
coefficients (scipy.fft rfftn layout, "forward" normalisation so that the k=0
coefficient is the spatial mean). Everything here is a pure function of its
inputs:

1. Grid: wavevectors, 2/3 dealiasing mask, band masks, transforms
2. Field containers: scalar, vector, symmetric tensor (6 stored components),
   full 3x3 matrix
3. Operators: gradient, divergence, Laplacian, Lambda^s, Leray projection,
   Lambda^-1 P div, advection u.grad f
4. Random band-limited generators used by probes and initial data
"""

from dataclasses import dataclass, replace
from typing import ClassVar, Optional, Tuple, TypeVar

import numpy as np
from scipy import fft as sfft

from .utils.config_manager import ConfigManager
from .utils.logger_setup import get_logger

logger = get_logger("spectral_core")

# Upper-triangular storage order of a symmetric 3x3 tensor
TENSOR_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
SYM_INDEX = ((0, 3, 4), (3, 1, 5), (4, 5, 2))

F = TypeVar("F", bound="SpectralField")


class GridError(ValueError):
    """Invalid grid or grid mismatch between fields."""


class Grid:
    """Triply periodic cubic grid with n modes per axis."""

    dims = 3

    def __init__(self, n_per_axis: int, box_length: float = 2.0 * np.pi,
                 workers: Optional[int] = None):
        if int(n_per_axis) != n_per_axis or n_per_axis < 8 or n_per_axis % 2:
            raise GridError(f"n_per_axis must be an even integer >= 8, got {n_per_axis}")
        if not box_length > 0:
            raise GridError(f"box_length must be positive, got {box_length}")

        self.n = int(n_per_axis)
        self.length = float(box_length)
        self.dx = self.length / self.n
        if workers is None:
            try:
                workers = ConfigManager().get_fft_workers()
            except Exception:
                workers = 1
        self.workers = workers

        n = self.n
        self.physical_shape = (n, n, n)
        self.spectral_shape = (n, n, n // 2 + 1)

        scale = 2.0 * np.pi / self.length
        ix = np.fft.fftfreq(n, 1.0 / n).astype(int)
        iz = np.fft.rfftfreq(n, 1.0 / n).astype(int)
        # fftfreq puts the Nyquist index at -n/2; make it +n/2 so |k_i| <= n/2 reads naturally
        ix[n // 2] = n // 2
        self.int_modes = np.meshgrid(ix, ix, iz, indexing="ij")
        self.k = np.array([m * scale for m in self.int_modes], dtype=float)

        # Derivative wavenumbers: Nyquist entries zeroed so i*k maps real fields to real fields
        kd = self.k.copy()
        for axis in range(3):
            kd[axis][np.abs(self.int_modes[axis]) == n // 2] = 0.0
        self.kd = kd

        self.k2 = np.sum(self.k ** 2, axis=0)
        self.k_mag = np.sqrt(self.k2)
        kd2 = np.sum(self.kd ** 2, axis=0)
        self.kd2_safe = np.where(kd2 == 0.0, 1.0, kd2)

        cutoff = n / 3.0
        self.dealias_mask = np.logical_and.reduce([np.abs(m) < cutoff for m in self.int_modes])
        self.max_int_mode = np.max(np.abs(np.array(self.int_modes)), axis=0)

        # rfft storage holds one of each +-kz pair except the kz = 0 and Nyquist planes
        weights = np.full(self.spectral_shape, 2.0)
        weights[..., 0] = 1.0
        weights[..., -1] = 1.0
        self.parseval_weights = weights

        logger.debug(f"Grid initialized: n={n}, L={self.length:.6g}, workers={self.workers}")

    def __repr__(self):
        return f"Grid(n={self.n}, L={self.length:.6g})"

    @property
    def cell_volume(self) -> float:
        return self.dx ** 3

    @property
    def volume(self) -> float:
        return self.length ** 3

    @property
    def k_min(self) -> float:
        """Smallest nonzero wavenumber magnitude."""
        return 2.0 * np.pi / self.length

    @property
    def k_max(self) -> float:
        """Largest wavenumber magnitude present on the grid (cube corner)."""
        return float(self.k_mag.max())

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Real physical values (..., n, n, n) to Fourier coefficients."""
        return sfft.rfftn(values, axes=(-3, -2, -1), norm="forward", workers=self.workers)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Fourier coefficients (..., n, n, n//2+1) to real physical values."""
        return sfft.irfftn(coeffs, s=self.physical_shape, axes=(-3, -2, -1),
                           norm="forward", workers=self.workers)

    def dealias(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs * self.dealias_mask

    def band_mask(self, k_band: Optional[int] = None) -> np.ndarray:
        """Modes with every |k_i| < k_band (integer units). Default n/4 keeps products alias free."""
        if k_band is None:
            k_band = self.n // 4
        return self.max_int_mode < k_band

    def physical_coordinates(self) -> np.ndarray:
        """Grid point coordinates, shape (3, n, n, n)."""
        x = np.arange(self.n) * self.dx
        return np.array(np.meshgrid(x, x, x, indexing="ij"))

    def same_as(self, other: "Grid") -> bool:
        return self is other or (self.n == other.n and self.length == other.length)


@dataclass(eq=False)
class SpectralField:
    """Base container: Fourier coefficients with leading component axes."""

    grid: Grid
    coeffs: np.ndarray

    component_shape: ClassVar[Tuple[int, ...]] = ()
    component_weights: ClassVar[Optional[np.ndarray]] = None

    def __post_init__(self):
        expected = self.component_shape + self.grid.spectral_shape
        if self.coeffs.shape != expected:
            raise GridError(f"{type(self).__name__} expects coefficients of shape {expected}, "
                            f"got {self.coeffs.shape}")

    @classmethod
    def zeros(cls: type, grid: Grid, **kwargs) -> F:
        shape = cls.component_shape + grid.spectral_shape
        return cls(grid, np.zeros(shape, dtype=complex), **kwargs)

    @classmethod
    def from_physical(cls: type, grid: Grid, values: np.ndarray, **kwargs) -> F:
        return cls(grid, grid.forward(np.asarray(values, dtype=float)), **kwargs)

    def with_coeffs(self: F, coeffs: np.ndarray) -> F:
        return replace(self, coeffs=coeffs)

    def _derive(self: F, coeffs: np.ndarray, other: Optional["SpectralField"] = None) -> F:
        return self.with_coeffs(coeffs)

    def _check(self, other: "SpectralField"):
        if type(other) is not type(self):
            raise TypeError(f"Cannot combine {type(self).__name__} with {type(other).__name__}")
        if not self.grid.same_as(other.grid):
            raise GridError("Fields live on different grids")

    def __add__(self: F, other: F) -> F:
        self._check(other)
        return self._derive(self.coeffs + other.coeffs, other)

    def __sub__(self: F, other: F) -> F:
        self._check(other)
        return self._derive(self.coeffs - other.coeffs, other)

    def __neg__(self: F) -> F:
        return self._derive(-self.coeffs)

    def __mul__(self: F, scalar: float) -> F:
        return self._derive(self.coeffs * scalar)

    __rmul__ = __mul__

    def copy(self: F) -> F:
        return self._derive(self.coeffs.copy())

    def to_physical(self) -> np.ndarray:
        return self.grid.inverse(self.coeffs)

    def mean(self) -> np.ndarray:
        """Zero-mode value of every component."""
        return self.coeffs[(Ellipsis, 0, 0, 0)].real.copy()

    def without_mean(self: F) -> F:
        coeffs = self.coeffs.copy()
        coeffs[(Ellipsis, 0, 0, 0)] = 0.0
        return self._derive(coeffs)

    def magnitude(self, values: Optional[np.ndarray] = None) -> np.ndarray:
        """Pointwise Euclidean (Frobenius for tensors) magnitude in physical space."""
        if values is None:
            values = self.to_physical()
        if not self.component_shape:
            return np.abs(values)
        flat = values.reshape((-1,) + self.grid.physical_shape)
        weights = self.component_weights
        if weights is None:
            weights = np.ones(flat.shape[0])
        return np.sqrt(np.tensordot(weights, flat ** 2, axes=(0, 0)))

    def max_abs(self) -> float:
        return float(self.magnitude().max())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))


@dataclass(eq=False)
class SpectralScalarField(SpectralField):
    """Real scalar field."""


@dataclass(eq=False)
class SpectralVectorField(SpectralField):
    """Three-component real vector field; `solenoidal` records a Leray-projected origin."""

    solenoidal: bool = False

    component_shape: ClassVar[Tuple[int, ...]] = (3,)

    def _derive(self, coeffs, other=None):
        flag = self.solenoidal and (other is None or getattr(other, "solenoidal", False))
        return replace(self, coeffs=coeffs, solenoidal=flag)

    def component(self, i: int) -> SpectralScalarField:
        return SpectralScalarField(self.grid, self.coeffs[i])

    @classmethod
    def from_components(cls, components, solenoidal: bool = False) -> "SpectralVectorField":
        grid = components[0].grid
        return cls(grid, np.stack([c.coeffs for c in components]), solenoidal=solenoidal)


@dataclass(eq=False)
class SpectralTensorField(SpectralField):
    """Symmetric 3x3 tensor field stored as (11, 22, 33, 12, 13, 23)."""

    component_shape: ClassVar[Tuple[int, ...]] = (6,)
    component_weights: ClassVar[np.ndarray] = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])

    def component(self, i: int, j: int) -> SpectralScalarField:
        return SpectralScalarField(self.grid, self.coeffs[SYM_INDEX[i][j]])

    def trace(self) -> SpectralScalarField:
        return SpectralScalarField(self.grid, self.coeffs[0] + self.coeffs[1] + self.coeffs[2])

    def full_physical(self) -> np.ndarray:
        """Physical values as a (3, 3, n, n, n) array."""
        values = self.to_physical()
        return values[np.array(SYM_INDEX)]

    @classmethod
    def from_full_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralTensorField":
        """Symmetric part of a (3, 3, ...) physical tensor."""
        sym = np.stack([0.5 * (values[i, j] + values[j, i]) for i, j in TENSOR_PAIRS])
        return cls.from_physical(grid, sym)

    @classmethod
    def isotropic(cls, grid: Grid, value: float) -> "SpectralTensorField":
        """Spatially constant value * I."""
        field_ = cls.zeros(grid)
        field_.coeffs[0:3, 0, 0, 0] = value
        return field_

    def with_trace_part(self, scale_dev: float, scale_trace: float) -> "SpectralTensorField":
        """Scale the deviatoric part by scale_dev and the (tr/3) I part by scale_trace."""
        third_trace = (self.coeffs[0] + self.coeffs[1] + self.coeffs[2]) / 3.0
        coeffs = self.coeffs * scale_dev
        coeffs[0:3] += (scale_trace - scale_dev) * third_trace
        return self.with_coeffs(coeffs)


@dataclass(eq=False)
class SpectralMatrixField(SpectralField):
    """Full 3x3 tensor field; entry (i, j) of a velocity gradient is d_j u_i."""

    component_shape: ClassVar[Tuple[int, ...]] = (3, 3)

    def transpose(self) -> "SpectralMatrixField":
        return self.with_coeffs(np.swapaxes(self.coeffs, 0, 1).copy())

    def symmetric_part(self) -> SpectralTensorField:
        coeffs = np.stack([0.5 * (self.coeffs[i, j] + self.coeffs[j, i]) for i, j in TENSOR_PAIRS])
        return SpectralTensorField(self.grid, coeffs)

    def antisymmetric_part(self) -> "SpectralMatrixField":
        return self.with_coeffs(0.5 * (self.coeffs - np.swapaxes(self.coeffs, 0, 1)))


# ---------------------------------------------------------------------------
# Linear operators
# ---------------------------------------------------------------------------

def gradient(f: SpectralScalarField) -> SpectralVectorField:
    """i k f(k) componentwise."""
    return SpectralVectorField(f.grid, 1j * f.grid.kd * f.coeffs[None])


def full_gradient(u: SpectralVectorField) -> SpectralMatrixField:
    """Velocity gradient G_ij = d_j u_i."""
    kd = u.grid.kd
    return SpectralMatrixField(u.grid, 1j * kd[None, :] * u.coeffs[:, None])


def divergence(v: SpectralVectorField) -> SpectralScalarField:
    return SpectralScalarField(v.grid, np.sum(1j * v.grid.kd * v.coeffs, axis=0))


def tensor_divergence(sigma: SpectralTensorField) -> SpectralVectorField:
    """(div sigma)_i = sum_j d_j sigma_ij."""
    kd = sigma.grid.kd
    out = np.zeros((3,) + sigma.grid.spectral_shape, dtype=complex)
    for i in range(3):
        for j in range(3):
            out[i] += 1j * kd[j] * sigma.coeffs[SYM_INDEX[i][j]]
    return SpectralVectorField(sigma.grid, out)


def laplacian(f: F) -> F:
    return f._derive(-f.grid.k2 * f.coeffs)


def fractional_lambda(f: F, s: float) -> F:
    """
    Apply Lambda^s = (-Delta)^(s/2), multiplier |k|^s.

    The k=0 coefficient is mapped to 0 for every s != 0; s = 0 is the identity.
    """
    if s == 0:
        return f.copy()
    k_mag = f.grid.k_mag
    with np.errstate(divide="ignore"):
        multiplier = np.where(k_mag > 0.0, k_mag ** float(s), 0.0)
    return f._derive(multiplier * f.coeffs)


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    """
    Leray projection P = I - Delta^-1 grad div, applied modewise.

    The zero mode passes through unchanged. The result is flagged solenoidal.
    """
    kd = v.grid.kd
    k_dot_v = np.sum(kd * v.coeffs, axis=0)
    coeffs = v.coeffs - kd * (k_dot_v / v.grid.kd2_safe)[None]
    return SpectralVectorField(v.grid, coeffs, solenoidal=True)


def lambda_inv_p_div(sigma: SpectralTensorField) -> SpectralVectorField:
    """psi = Lambda^-1 P div sigma; zero mode mapped to 0."""
    psi = fractional_lambda(leray_project(tensor_divergence(sigma)), -1.0)
    psi.solenoidal = True
    return psi


# ---------------------------------------------------------------------------
# Nonlinear helpers (pseudo-spectral)
# ---------------------------------------------------------------------------

def advect(u: SpectralVectorField, f: F, dealias: bool = True,
           u_physical: Optional[np.ndarray] = None) -> F:
    """
    u . grad f for a field of any kind, evaluated in physical space.

    Args:
        u: advecting velocity
        f: advected field (scalar, vector, tensor or matrix)
        dealias: apply the 2/3 rule to the result
        u_physical: reuse an already transformed velocity

    Returns:
        Field of the same kind as f
    """
    grid = f.grid
    if u_physical is None:
        u_physical = u.to_physical()
    grad_coeffs = 1j * grid.kd * f.coeffs[(Ellipsis, None, slice(None), slice(None), slice(None))]
    grad_phys = grid.inverse(grad_coeffs)
    product = np.einsum("...dxyz,dxyz->...xyz", grad_phys, u_physical)
    coeffs = grid.forward(product)
    if dealias:
        coeffs = grid.dealias(coeffs)
    return f._derive(coeffs)


def pointwise_product(a: SpectralScalarField, f: F, dealias: bool = True) -> F:
    """Pointwise a * f for a scalar a and a field f of any kind."""
    product = a.to_physical() * f.to_physical()
    coeffs = f.grid.forward(product)
    if dealias:
        coeffs = f.grid.dealias(coeffs)
    return f._derive(coeffs)


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Grid quadrature of the pointwise (Frobenius) pairing of two fields of the same kind."""
    f._check(g)
    a = f.to_physical().reshape((-1,) + f.grid.physical_shape)
    b = g.to_physical().reshape((-1,) + g.grid.physical_shape)
    weights = f.component_weights
    if weights is None:
        weights = np.ones(a.shape[0])
    pointwise = np.tensordot(weights, a * b, axes=(0, 0))
    return float(np.sum(pointwise) * f.grid.cell_volume)


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def spectral_l2_norm(grid: Grid, coeffs: np.ndarray,
                     component_weights: Optional[np.ndarray] = None) -> float:
    """L2 norm from Fourier coefficients (discrete Parseval, equal to the grid quadrature)."""
    power = grid.parseval_weights * np.abs(coeffs) ** 2
    power = power.reshape((-1,) + grid.spectral_shape)
    if component_weights is None:
        component_weights = np.ones(power.shape[0])
    total = np.tensordot(component_weights, power, axes=(0, 0)).sum()
    return float(np.sqrt(grid.volume * total))


# ---------------------------------------------------------------------------
# Random band-limited fields
# ---------------------------------------------------------------------------

def _random_coeffs(grid: Grid, rng: np.random.Generator, components: Tuple[int, ...],
                   k_band: Optional[int], exponent: float) -> np.ndarray:
    shape = components + grid.spectral_shape
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    # real round trip enforces Hermitian symmetry on the kz=0 and Nyquist planes
    coeffs = grid.forward(grid.inverse(raw))
    with np.errstate(divide="ignore"):
        envelope = np.where(grid.k2 > 0.0, grid.k_mag ** exponent, 0.0)
    return coeffs * envelope * grid.band_mask(k_band)


def _normalise(f: F, amplitude: float) -> F:
    rms = np.sqrt(np.mean(f.magnitude() ** 2))
    if rms == 0.0:
        return f
    return f * (amplitude / rms)


def random_scalar_field(grid: Grid, rng: np.random.Generator, amplitude: float = 1.0,
                        k_band: Optional[int] = None,
                        exponent: float = -2.0) -> SpectralScalarField:
    """
    Mean-free random scalar field with complex Gaussian coefficients.

    The coefficient envelope is |k|^exponent, modes with any |k_i| >= k_band are
    zeroed (default n/4) and the physical RMS is rescaled to `amplitude`.
    """
    coeffs = _random_coeffs(grid, rng, (), k_band, exponent)
    return _normalise(SpectralScalarField(grid, coeffs), amplitude)


def random_vector_field(grid: Grid, rng: np.random.Generator, amplitude: float = 1.0,
                        k_band: Optional[int] = None, exponent: float = -2.0,
                        solenoidal: bool = True) -> SpectralVectorField:
    coeffs = _random_coeffs(grid, rng, (3,), k_band, exponent)
    v = SpectralVectorField(grid, coeffs)
    if solenoidal:
        v = leray_project(v)
    return _normalise(v, amplitude)


def random_tensor_field(grid: Grid, rng: np.random.Generator, amplitude: float = 1.0,
                        k_band: Optional[int] = None,
                        exponent: float = -2.0) -> SpectralTensorField:
    coeffs = _random_coeffs(grid, rng, (6,), k_band, exponent)
    return _normalise(SpectralTensorField(grid, coeffs), amplitude)
