#!/usr/bin/env python3
"""
Estimate Probes - numerical checks of the paraproduct calculus on random fields

- Bony decomposition: uv = T_u v + R(u, v) + T_v u (+ mean(u) mean(v) on the torus)
- Commutator estimates for [u.grad, Delta_j] in four low/high variants
- Product estimates for (vu) in four low/high variants

The implicit constants of the inequalities are unknown, so a probe reports
LHS/RHS ratio statistics over seeded samples; stability is checked against a
pinned baseline (+-20%) and a configured ceiling.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .littlewood_paley import BesovSpec, DyadicBank, lp_norm_values, parse_index
from .spectral_core import (
    Grid,
    SpectralField,
    SpectralScalarField,
    SpectralVectorField,
    advect,
    full_gradient,
    random_scalar_field,
    random_vector_field,
    spectral_l2_norm,
)
from .utils.config_manager import ConfigManager
from .utils.logger_setup import get_logger
from .utils.operation_result import OperationResult

logger = get_logger("estimate_probes")

ESTIMATES = ("bony", "commutator", "product")
PROBE_PS = (2.0, 3.0, 4.0)
BONY_TOLERANCE = 1e-8
BASELINE_TOLERANCE = 0.2


@dataclass
class ProbeReport:
    """Ratio statistics of one probe run, keyed by inequality variant."""

    estimate_id: str
    seed: int
    sample_count: int
    p: float
    grid_n: int
    ratios: Dict[str, List[float]] = field(default_factory=dict)
    skipped: Dict[str, int] = field(default_factory=dict)
    ceiling: float = 1000.0
    passed: bool = False

    def stats(self) -> Dict[str, Dict[str, float]]:
        out = {}
        for variant, values in self.ratios.items():
            arr = np.asarray(values, dtype=float)
            if arr.size == 0:
                out[variant] = {"min": 0.0, "median": 0.0, "max": 0.0}
                continue
            out[variant] = {"min": float(arr.min()), "median": float(np.median(arr)),
                            "max": float(arr.max())}
        return out

    @property
    def ratio_max(self) -> float:
        values = [s["max"] for s in self.stats().values()]
        return max(values) if values else 0.0

    def evaluate(self, ceiling: Optional[float] = None) -> bool:
        if ceiling is not None:
            self.ceiling = ceiling
        all_values = [v for values in self.ratios.values() for v in values]
        self.passed = bool(all(np.isfinite(v) and 0.0 <= v < self.ceiling for v in all_values))
        return self.passed

    @property
    def baseline_key(self) -> str:
        return f"{self.estimate_id}:p={self.p:g}:n={self.grid_n}:count={self.sample_count}:seed={self.seed}"

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["stats"] = self.stats()
        data["baseline_key"] = self.baseline_key
        return data


# ---------------------------------------------------------------------------
# Bony decomposition
# ---------------------------------------------------------------------------

def bony_terms(bank: DyadicBank, u: SpectralScalarField,
               v: SpectralScalarField) -> Dict[str, np.ndarray]:
    """
    Physical-space pieces of the product uv.

    T_u v = sum_j S_{j-1}u Delta_j v, R(u, v) = sum_{|k-j|<=1} Delta_k u Delta_j v.
    S_{j-1} keeps the mean, so the mean product closes the identity:
    uv = T_u v + R(u, v) + T_v u + mean(u) mean(v).
    """
    grid = bank.grid
    u_blocks = {j: bank.block(u, j).to_physical() for j in bank.shells}
    v_blocks = {j: bank.block(v, j).to_physical() for j in bank.shells}

    para_uv = np.zeros(grid.physical_shape)
    para_vu = np.zeros(grid.physical_shape)
    remainder = np.zeros(grid.physical_shape)
    for j in bank.shells:
        para_uv += bank.low_pass(u, j - 1).to_physical() * v_blocks[j]
        para_vu += bank.low_pass(v, j - 1).to_physical() * u_blocks[j]
        for k in (j - 1, j, j + 1):
            if k in u_blocks:
                remainder += u_blocks[k] * v_blocks[j]
    mean_product = float(u.mean()) * float(v.mean()) * np.ones(grid.physical_shape)
    return {"paraproduct_uv": para_uv, "remainder": remainder,
            "paraproduct_vu": para_vu, "mean_product": mean_product}


def bony_reconstruct(bank: DyadicBank, u: SpectralScalarField, v: SpectralScalarField) -> float:
    """Relative L2 residual of the Bony decomposition (absolute when uv = 0)."""
    terms = bony_terms(bank, u, v)
    product = u.to_physical() * v.to_physical()
    residual = product - sum(terms.values())
    dv = bank.grid.cell_volume
    res_norm = np.sqrt(dv * np.sum(residual ** 2))
    prod_norm = np.sqrt(dv * np.sum(product ** 2))
    return float(res_norm / prod_norm) if prod_norm > 0 else float(res_norm)


# ---------------------------------------------------------------------------
# Commutators and products
# ---------------------------------------------------------------------------

def commutator(bank: DyadicBank, u: SpectralVectorField, v: SpectralField, j: int,
               u_physical: Optional[np.ndarray] = None,
               transport: Optional[SpectralField] = None) -> SpectralField:
    """[u.grad, Delta_j] v = u.grad Delta_j v - Delta_j (u.grad v), without dealiasing."""
    if u_physical is None:
        u_physical = u.to_physical()
    if transport is None:
        transport = advect(u, v, dealias=False, u_physical=u_physical)
    return (advect(u, bank.block(v, j), dealias=False, u_physical=u_physical)
            - bank.block(transport, j))


def _norm(f: SpectralField, p: float) -> float:
    if p == 2.0:
        return spectral_l2_norm(f.grid, f.coeffs, f.component_weights)
    return lp_norm_values(f.magnitude(), p, f.grid.cell_volume)


def _weighted_sum(bank: DyadicBank, norms: Dict[int, float], s: float) -> float:
    return float(sum(2.0 ** (s * j) * value for j, value in norms.items()))


def _commutator_sums(bank: DyadicBank, u: SpectralVectorField, v: SpectralField, p: float,
                     s_low: float, s_high: float, u_physical: np.ndarray) -> Tuple[float, float]:
    transport = advect(u, v, dealias=False, u_physical=u_physical)
    low, high = {}, {}
    for j in bank.shells:
        c = commutator(bank, u, v, j, u_physical, transport)
        if j <= bank.cutoff_N:
            low[j] = _norm(c, 2.0)
        else:
            high[j] = _norm(c, p)
    return _weighted_sum(bank, low, s_low), _weighted_sum(bank, high, s_high)


def commutator_ratios(bank: DyadicBank, u: SpectralVectorField, v: SpectralScalarField,
                      w: SpectralScalarField, p: float) -> Dict[str, Optional[float]]:
    """
    LHS/RHS of the four commutator inequalities for one sample (None when RHS = 0).

    v is measured at the velocity scale (B^{1/2}_{2,1} low, B^{3/p-1}_{p,1} high),
    w at the stress scale (B^{3/2}_{2,1} low, B^{3/p}_{p,1} high).
    """
    grad_u = full_gradient(u)
    u_physical = u.to_physical()
    bes = bank.besov_norm
    grad_all = bes(grad_u, BesovSpec(3.0 / p, p, 1))
    grad_low = bes(grad_u, BesovSpec(1.5, 2, 1), "low")
    grad_high = bes(grad_u, BesovSpec(3.0 / p, p, 1), "high")

    v_low_lhs, v_high_lhs = _commutator_sums(bank, u, v, p, 0.5, 3.0 / p - 1.0, u_physical)
    w_low_lhs, w_high_lhs = _commutator_sums(bank, u, w, p, 1.5, 3.0 / p, u_physical)

    v_all = bes(v, BesovSpec(3.0 / p - 1.0, p, 1))
    w_all = bes(w, BesovSpec(3.0 / p, p, 1))
    rhs = {
        "velocity_low": (bes(v, BesovSpec(0.5, 2, 1), "low") * grad_all + v_all * grad_low),
        "velocity_high": (bes(v, BesovSpec(3.0 / p - 1.0, p, 1), "high") * grad_all
                          + v_all * grad_high),
        "stress_low": (bes(w, BesovSpec(1.5, 2, 1), "low") * grad_all + w_all * grad_low),
        "stress_high": (bes(w, BesovSpec(3.0 / p, p, 1), "high") * grad_all + w_all * grad_high),
    }
    lhs = {"velocity_low": v_low_lhs, "velocity_high": v_high_lhs,
           "stress_low": w_low_lhs, "stress_high": w_high_lhs}
    return {key: (lhs[key] / rhs[key] if rhs[key] > 0 else None) for key in lhs}


def _pointwise(a: SpectralScalarField, b: SpectralScalarField) -> SpectralScalarField:
    return SpectralScalarField.from_physical(a.grid, a.to_physical() * b.to_physical())


def product_ratios(bank: DyadicBank, u: SpectralScalarField, v: SpectralScalarField,
                   w: SpectralScalarField, p: float) -> Dict[str, Optional[float]]:
    """LHS/RHS of the four product inequalities for one sample (None when RHS = 0)."""
    bes = bank.besov_norm
    vu = _pointwise(v, u)
    wu = _pointwise(w, u)

    u_all = bes(u, BesovSpec(3.0 / p, p, 1))
    v_mixed = bes(v, BesovSpec(0.5, 2, 1), "low") + bes(v, BesovSpec(3.0 / p - 1.0, p, 1), "high")
    w_mixed = bes(w, BesovSpec(1.5, 2, 1), "low") + bes(w, BesovSpec(3.0 / p, p, 1), "high")
    u_mixed = bes(u, BesovSpec(1.5, 2, 1), "low") + bes(u, BesovSpec(3.0 / p, p, 1), "high")

    lhs = {
        "velocity_low": bes(vu, BesovSpec(0.5, 2, 1), "low"),
        "velocity_high": bes(vu, BesovSpec(3.0 / p - 1.0, p, 1), "high"),
        "stress_low": bes(wu, BesovSpec(1.5, 2, 1), "low"),
        "stress_high": bes(wu, BesovSpec(3.0 / p, p, 1), "high"),
    }
    rhs = {
        "velocity_low": v_mixed * u_all,
        "velocity_high": v_mixed * u_all,
        "stress_low": w_mixed * u_mixed,
        "stress_high": bes(w, BesovSpec(3.0 / p, p, 1)) * u_all,
    }
    return {key: (lhs[key] / rhs[key] if rhs[key] > 0 else None) for key in lhs}


# ---------------------------------------------------------------------------
# Probe drivers
# ---------------------------------------------------------------------------

def _probe_bank(grid_n: Optional[int], cutoff_N: int) -> DyadicBank:
    if grid_n is None:
        grid_n = int(ConfigManager().get("probes.grid", 32))
    return DyadicBank(Grid(grid_n), cutoff_N)


def _sample_exponent(rng: np.random.Generator) -> float:
    return float(rng.uniform(-3.0, -1.0))


def _run_probe(estimate_id: str, sampler: Callable, seed: int, count: int, p: float,
               bank: DyadicBank, ceiling: Optional[float]) -> ProbeReport:
    if ceiling is None:
        ceiling = ConfigManager().get_probe_ceiling()
    rng = np.random.default_rng(seed)
    report = ProbeReport(estimate_id, seed, count, p, bank.grid.n, ceiling=ceiling)
    for _ in range(count):
        for variant, ratio in sampler(rng).items():
            report.ratios.setdefault(variant, [])
            report.skipped.setdefault(variant, 0)
            if ratio is None:
                report.skipped[variant] += 1
            else:
                report.ratios[variant].append(float(ratio))
    report.evaluate()
    logger.info(f"{estimate_id} probe p={p:g}: {count} samples, max ratio {report.ratio_max:.4g}, "
                f"pass={report.passed}")
    return report


def commutator_probe(seed: int = 0, count: int = 100, p: float = 2.0,
                     bank: Optional[DyadicBank] = None, grid_n: Optional[int] = None,
                     cutoff_N: int = 2, ceiling: Optional[float] = None) -> ProbeReport:
    """Commutator inequality ratios over `count` seeded random samples."""
    p = parse_index(p)
    bank = bank or _probe_bank(grid_n, cutoff_N)
    grid = bank.grid

    def sampler(rng):
        u = random_vector_field(grid, rng, exponent=_sample_exponent(rng))
        v = random_scalar_field(grid, rng, exponent=_sample_exponent(rng))
        w = random_scalar_field(grid, rng, exponent=_sample_exponent(rng))
        return commutator_ratios(bank, u, v, w, p)

    return _run_probe("commutator", sampler, seed, count, p, bank, ceiling)


def product_probe(seed: int = 0, count: int = 100, p: float = 2.0,
                  bank: Optional[DyadicBank] = None, grid_n: Optional[int] = None,
                  cutoff_N: int = 2, ceiling: Optional[float] = None) -> ProbeReport:
    """Product inequality ratios over `count` seeded random samples."""
    p = parse_index(p)
    bank = bank or _probe_bank(grid_n, cutoff_N)
    grid = bank.grid

    def sampler(rng):
        u = random_scalar_field(grid, rng, exponent=_sample_exponent(rng))
        v = random_scalar_field(grid, rng, exponent=_sample_exponent(rng))
        w = random_scalar_field(grid, rng, exponent=_sample_exponent(rng))
        return product_ratios(bank, u, v, w, p)

    return _run_probe("product", sampler, seed, count, p, bank, ceiling)


def bony_probe(seed: int = 0, count: int = 50, bank: Optional[DyadicBank] = None,
               grid_n: Optional[int] = None, cutoff_N: int = 2) -> ProbeReport:
    """Bony residuals over random band-limited pairs; passes when all are below 1e-8."""
    bank = bank or _probe_bank(grid_n, cutoff_N)
    grid = bank.grid

    def sampler(rng):
        u = random_scalar_field(grid, rng, exponent=_sample_exponent(rng))
        v = random_scalar_field(grid, rng, exponent=_sample_exponent(rng))
        return {"residual": bony_reconstruct(bank, u, v)}

    report = _run_probe("bony", sampler, seed, count, 2.0, bank, BONY_TOLERANCE)
    return report


def run_probe(estimate_id: str, seed: int = 0, count: int = 100, p: float = 2.0,
              **kwargs) -> ProbeReport:
    if estimate_id == "commutator":
        return commutator_probe(seed, count, p, **kwargs)
    if estimate_id == "product":
        return product_probe(seed, count, p, **kwargs)
    if estimate_id == "bony":
        return bony_probe(seed, count, **kwargs)
    raise ValueError(f"Unknown estimate {estimate_id!r}, expected one of {ESTIMATES}")


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def load_baselines(path: Optional[Path] = None) -> Dict[str, Dict[str, float]]:
    path = Path(path) if path else ConfigManager().get_probe_baseline_file()
    if not path.exists():
        return {}
    with open(path, "r") as f:
        return json.load(f)


def save_baselines(baselines: Dict[str, Dict[str, float]], path: Optional[Path] = None) -> Path:
    path = Path(path) if path else ConfigManager().get_probe_baseline_file()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(baselines, f, indent=2, sort_keys=True)
    logger.info(f"Probe baselines written to {path}")
    return path


def compare_to_baseline(report: ProbeReport, baselines: Dict[str, Dict[str, float]],
                        tolerance: float = BASELINE_TOLERANCE) -> OperationResult:
    """
    Check every variant's max ratio against the pinned value (relative tolerance).

    An unknown key is recorded into `baselines` and counts as success.
    """
    key = report.baseline_key
    current = {variant: s["max"] for variant, s in report.stats().items()}
    if key not in baselines:
        baselines[key] = current
        return OperationResult(True, f"Baseline recorded for {key}",
                               {"recorded": True, "baseline": current})

    pinned = baselines[key]
    drift = {}
    for variant, value in current.items():
        reference = pinned.get(variant)
        if reference is None:
            continue
        scale = max(abs(reference), 1e-300)
        drift[variant] = abs(value - reference) / scale
    failures = {v: d for v, d in drift.items() if d > tolerance}
    if failures:
        return OperationResult(False, f"{key} drifted beyond {tolerance:.0%}: {failures}",
                               {"recorded": False, "drift": drift})
    return OperationResult(True, f"{key} within {tolerance:.0%} of baseline",
                           {"recorded": False, "drift": drift})
