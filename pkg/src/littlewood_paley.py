#!/usr/bin/env python3
"""
Littlewood-Paley decomposition and homogeneous Besov norms on the periodic grid.

The radial bank is built from a smooth step chi (1 below 3/4, 0 above 4/3) and
phi(xi) = chi(xi/2) - chi(xi), supported in the annulus 3/4 <= |xi| <= 8/3.
Shell j filters |k| ~ 2^j. The shell range is chosen so that the telescoping sum
of phi(2^-j .) equals 1 on every nonzero grid wavevector, including the cube
corner.

Low/high split at the cutoff N: z_low = sum_{j<=N} block_j z, z_high = sum_{j>N}.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Union

import numpy as np

from .spectral_core import F, Grid, GridError, SpectralField, spectral_l2_norm
from .utils.logger_setup import get_logger

logger = get_logger("littlewood_paley")

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0
ANNULUS = (3.0 / 4.0, 8.0 / 3.0)
PARTS = ("low", "high", "all")
MIN_SHELLS = 4


class TrackerTimeError(ValueError):
    """A tilde tracker was fed a time earlier than its last sample."""


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    a = np.exp(-1.0 / xi)
    b = np.exp(-1.0 / (1.0 - xi))
    out[inside] = a / (a + b)
    return out


def chi(r: np.ndarray) -> np.ndarray:
    """Radial low-pass profile: 1 for r <= 3/4, 0 for r >= 4/3."""
    r = np.asarray(r, dtype=float)
    return smooth_step((CHI_OUTER - r) / (CHI_OUTER - CHI_INNER))


def phi(r: np.ndarray) -> np.ndarray:
    """Annulus profile phi(r) = chi(r/2) - chi(r)."""
    r = np.asarray(r, dtype=float)
    return chi(0.5 * r) - chi(r)


def parse_index(value: Union[str, float, int]) -> float:
    """Lebesgue or summation index; 'inf' and infinity accepted."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "oo"):
            return float(np.inf)
        value = float(value)
    return float(value)


@dataclass(frozen=True)
class BesovSpec:
    """Regularity s, Lebesgue index p, summation index r of a homogeneous Besov norm."""

    s: float
    p: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        p = parse_index(self.p)
        r = parse_index(self.r)
        if not (p >= 1.0):
            raise ValueError(f"Lebesgue index p must be in [1, inf], got {self.p}")
        if r not in (1.0, 2.0, float(np.inf)):
            raise ValueError(f"Summation index r must be 1, 2 or inf, got {self.r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", r)


def shell_range(grid: Grid):
    """
    Smallest and largest shell index needed to cover every nonzero grid mode.

    j_min puts the smallest wavenumber where chi(2^-j_min k) = 0, j_max puts the
    cube corner where chi(2^-(j_max+1) k) = 1.
    """
    j_min = int(np.floor(np.log2(CHI_INNER * grid.k_min)))
    j_max = int(np.ceil(np.log2(grid.k_max / CHI_INNER))) - 1
    return j_min, j_max


class DyadicBank:
    """
    Precomputed dyadic multipliers phi(2^-j |k|) for every shell of a grid.

    Immutable after construction; all block and norm operations are pure.
    """

    def __init__(self, grid: Grid, cutoff_N: int = 2):
        self.grid = grid
        self.j_min, self.j_max = shell_range(grid)
        self.shells: List[int] = list(range(self.j_min, self.j_max + 1))

        if len(self.shells) < MIN_SHELLS:
            raise GridError(f"Grid n={grid.n} resolves only {len(self.shells)} dyadic shells, "
                            f"at least {MIN_SHELLS} needed")
        if not (self.j_min <= cutoff_N < self.j_max):
            raise GridError(f"cutoff_N={cutoff_N} must lie in [{self.j_min}, {self.j_max - 1}] "
                            f"so both frequency parts are nonempty")
        self.cutoff_N = int(cutoff_N)

        k_mag = grid.k_mag
        self.chi = chi(k_mag)
        self.multipliers = np.array([phi(k_mag / 2.0 ** j) for j in self.shells])
        # k = 0 carries the mean, which no homogeneous block sees
        self.multipliers[:, 0, 0, 0] = 0.0

        self.low_multiplier = self.multipliers[self.shell_mask("low")].sum(axis=0)
        self.high_multiplier = self.multipliers[self.shell_mask("high")].sum(axis=0)

        logger.debug(f"DyadicBank built: n={grid.n}, shells {self.j_min}..{self.j_max}, "
                     f"N={self.cutoff_N}")

    def __repr__(self):
        return f"DyadicBank(n={self.grid.n}, j={self.j_min}..{self.j_max}, N={self.cutoff_N})"

    @property
    def shell_array(self) -> np.ndarray:
        return np.array(self.shells, dtype=float)

    def shell_mask(self, part: str = "all") -> np.ndarray:
        if part not in PARTS:
            raise ValueError(f"part must be one of {PARTS}, got {part!r}")
        js = np.array(self.shells)
        if part == "low":
            return js <= self.cutoff_N
        if part == "high":
            return js > self.cutoff_N
        return np.ones(len(js), dtype=bool)

    def multiplier(self, j: int) -> Optional[np.ndarray]:
        if j < self.j_min or j > self.j_max:
            return None
        return self.multipliers[j - self.j_min]

    def block(self, f: F, j: int) -> F:
        """Delta_j f; shells outside the resolved range give the zero field."""
        mult = self.multiplier(j)
        if mult is None:
            return f._derive(np.zeros_like(f.coeffs))
        return f._derive(mult * f.coeffs)

    def low_part(self, f: F) -> F:
        return f._derive(self.low_multiplier * f.coeffs)

    def high_part(self, f: F) -> F:
        return f._derive(self.high_multiplier * f.coeffs)

    def low_pass(self, f: F, j: int) -> F:
        """S_j f = chi(2^-j D) f: every block below j plus the mean."""
        return f._derive(chi(self.grid.k_mag / 2.0 ** j) * f.coeffs)

    def sum_of_blocks(self, f: F) -> F:
        return f._derive(self.multipliers.sum(axis=0) * f.coeffs)

    def partition_deviation(self) -> float:
        """max over nonzero grid modes of |sum_j phi(2^-j k) - 1|."""
        total = self.multipliers.sum(axis=0)
        nonzero = self.grid.k2 > 0.0
        return float(np.max(np.abs(total[nonzero] - 1.0)))

    def shell_norms(self, f: SpectralField, p: Union[float, str] = 2.0,
                    shells: Optional[Iterable[int]] = None) -> np.ndarray:
        """Vector of ||Delta_j f||_{L^p} over the bank's shells (zeros for skipped shells)."""
        p = parse_index(p)
        wanted = set(self.shells if shells is None else shells)
        norms = np.zeros(len(self.shells))
        for idx, j in enumerate(self.shells):
            if j not in wanted:
                continue
            coeffs = self.multipliers[idx] * f.coeffs
            if p == 2.0:
                norms[idx] = spectral_l2_norm(self.grid, coeffs, f.component_weights)
            else:
                norms[idx] = lp_norm(f._derive(coeffs), p)
        return norms

    def aggregate(self, norms: np.ndarray, s: float, r: Union[float, str] = 1.0,
                  part: str = "all") -> float:
        """
        l^r aggregation of 2^{js} * norms over the selected shell range.

        Args:
            norms: per-shell L^p norms aligned with self.shells
            s: regularity weight
            r: 1, 2 or inf
            part: 'low' (j <= N), 'high' (j > N) or 'all'
        """
        r = parse_index(r)
        mask = self.shell_mask(part)
        weighted = 2.0 ** (s * self.shell_array[mask]) * np.asarray(norms)[mask]
        if weighted.size == 0:
            return 0.0
        if r == 1.0:
            return float(np.sum(weighted))
        if r == 2.0:
            return float(np.sqrt(np.sum(weighted ** 2)))
        if r == float(np.inf):
            return float(np.max(weighted))
        raise ValueError(f"Unsupported summation index r={r}")

    def besov_norm(self, f: SpectralField, spec: BesovSpec, part: str = "all") -> float:
        mask = self.shell_mask(part)
        selected = [j for j, keep in zip(self.shells, mask) if keep]
        norms = self.shell_norms(f, spec.p, shells=selected)
        return self.aggregate(norms, spec.s, spec.r, part)


class TildeNormTracker:
    """
    Per-shell running suprema sup_t ||Delta_j z(t)||_{L^p} at a fixed p.

    The Chemin-Lerner norm is the weighted shell sum of these suprema. Time
    must be fed in nondecreasing order.
    """

    def __init__(self, bank: DyadicBank, p: Union[float, str] = 2.0):
        self.bank = bank
        self.p = parse_index(p)
        self.sups = np.zeros(len(bank.shells))
        self.last_t: Optional[float] = None
        self.samples = 0

    def update_norms(self, norms: np.ndarray, t: float) -> "TildeNormTracker":
        if self.last_t is not None and t < self.last_t:
            raise TrackerTimeError(f"Tracker time went backwards: {t} < {self.last_t}")
        self.sups = np.maximum(self.sups, norms)
        self.last_t = float(t)
        self.samples += 1
        return self

    def update(self, f: SpectralField, t: float) -> "TildeNormTracker":
        if self.last_t is not None and t < self.last_t:
            raise TrackerTimeError(f"Tracker time went backwards: {t} < {self.last_t}")
        return self.update_norms(self.bank.shell_norms(f, self.p), t)

    def norm(self, s: float, part: str = "all", r: Union[float, str] = 1.0) -> float:
        return self.bank.aggregate(self.sups, s, r, part)


# ---------------------------------------------------------------------------
# Functional interface
# ---------------------------------------------------------------------------

def build_bank(grid: Grid, cutoff_N: int = 2) -> DyadicBank:
    bank = DyadicBank(grid, cutoff_N)
    deviation = bank.partition_deviation()
    if deviation > 1e-10:
        raise GridError(f"Partition of unity violated by {deviation:.3e}")
    return bank


def dyadic_block(bank: DyadicBank, f: F, j: int) -> F:
    return bank.block(f, j)


def low_part(bank: DyadicBank, f: F) -> F:
    return bank.low_part(f)


def high_part(bank: DyadicBank, f: F) -> F:
    return bank.high_part(f)


def lp_norm_values(magnitude: np.ndarray, p: Union[float, str], cell_volume: float) -> float:
    """Grid quadrature ((L/n)^3 sum |f|^p)^(1/p); max for p = inf."""
    p = parse_index(p)
    if p == float(np.inf):
        return float(np.max(magnitude))
    return float((cell_volume * np.sum(magnitude ** p)) ** (1.0 / p))


def lp_norm(f: SpectralField, p: Union[float, str] = 2.0) -> float:
    """L^p norm of the pointwise (Frobenius) magnitude of a field."""
    return lp_norm_values(f.magnitude(), p, f.grid.cell_volume)


def besov_norm(bank: DyadicBank, f: SpectralField, spec: BesovSpec, part: str = "all") -> float:
    return bank.besov_norm(f, spec, part)


def tilde_update(tracker: TildeNormTracker, f: SpectralField, t: float) -> TildeNormTracker:
    return tracker.update(f, t)


def tilde_norm(tracker: TildeNormTracker, spec: BesovSpec, part: str = "all") -> float:
    if spec.p != tracker.p:
        raise ValueError(f"Tracker records p={tracker.p}, asked for p={spec.p}")
    return tracker.norm(spec.s, part, spec.r)
