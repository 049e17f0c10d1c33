#!/usr/bin/env python3
"""
Diagnostics - energy functionals, auxiliary fields and the L-infinity embedding ratio

Energies tracked along a trajectory (low = shells j <= N, high = j > N):

    E(0) = |u0_low|_{B^{1/2}_{2,1}} + |sigma0_low|_{B^{1/2}_{2,1}}
           + |u0_high|_{B^{3/p-1}_{p,1}} + |sigma0_high|_{B^{3/p}_{p,1}}
    E1   = tilde sup of u_low and sigma_low in B^{1/2}_{2,1}
    E2   = time integral of |u_low|_{B^{5/2}_{2,1}} + |psi_low|_{B^{5/2}_{2,1}}
    E3   = tilde sup of u_high in B^{3/p-1}_{p,1} and sigma_high in B^{3/p}_{p,1}
           + time integrals of |u_high|_{B^{3/p+1}_{p,1}} and |psi_high|_{B^{3/p}_{p,1}}
    E4   = time integrals of |tr sigma_low|_{B^{3/2}_{2,1}} + |tr sigma_high|_{B^{3/p}_{p,1}}

with psi = Lambda^-1 P div sigma. Sups are sampled at the step cadence and
integrals use the trapezoid rule.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .littlewood_paley import BesovSpec, DyadicBank, TildeNormTracker, lp_norm
from .ptt_model import ModelParams, SimState
from .spectral_core import SpectralTensorField, SpectralVectorField, fractional_lambda
from .utils.logger_setup import get_logger

logger = get_logger("diagnostics")

HISTORY_COLUMNS: Tuple[str, ...] = (
    "t",
    "e1_u_low",
    "e1_sigma_low",
    "e2_u_low",
    "e2_psi_low",
    "e3_u_high_sup",
    "e3_sigma_high_sup",
    "e3_u_high_int",
    "e3_psi_high_int",
    "e4_trace_low",
    "e4_trace_high",
    "E1",
    "E2",
    "E3",
    "E4",
    "E_total",
    "u_low_b12",
    "u_linf",
    "sigma_linf",
    "max_abs_trace_sigma",
    "max_abs_trace_tau",
    "linf_ratio",
)


def check_p(p: float, strict: bool = True):
    if strict and not 2.0 <= p <= 4.0:
        raise ValueError(f"Lebesgue index p must lie in [2, 4], got {p}")


class _NormCache:
    """Shell norms of one field at p = 2 and, for the high shells, at the run's p."""

    def __init__(self, bank: DyadicBank, f, p: float):
        self.l2 = bank.shell_norms(f, 2.0)
        if p == 2.0:
            self.lp = self.l2
        else:
            high = [j for j, keep in zip(bank.shells, bank.shell_mask("high")) if keep]
            self.lp = bank.shell_norms(f, p, shells=high)


def energy_e0(bank: DyadicBank, u0: SpectralVectorField, sigma0: SpectralTensorField,
              p: float = 2.0, strict: bool = True) -> float:
    """Initial-data size: low parts in B^{1/2}_{2,1}, high parts in the p-dependent spaces."""
    check_p(p, strict)
    low = BesovSpec(0.5, 2.0, 1.0)
    return (bank.besov_norm(u0, low, "low")
            + bank.besov_norm(sigma0, low, "low")
            + bank.besov_norm(u0, BesovSpec(3.0 / p - 1.0, p, 1.0), "high")
            + bank.besov_norm(sigma0, BesovSpec(3.0 / p, p, 1.0), "high"))


def auxiliary_fields(state: SimState) -> Tuple[SpectralVectorField, SpectralVectorField,
                                               SpectralVectorField]:
    """
    psi = Lambda^-1 P div sigma, Gamma = u - Lambda^-1 psi, phi = 2 Lambda psi - u.

    Returns:
        (psi, gamma, phi), all solenoidal
    """
    psi = state.psi
    gamma = state.u - fractional_lambda(psi, -1.0)
    phi = 2.0 * fractional_lambda(psi, 1.0) - state.u
    for v in (psi, gamma, phi):
        v.solenoidal = True
    return psi, gamma, phi


def linf_bound_check(bank: DyadicBank, sigma: SpectralTensorField, p: float = 2.0) -> Dict:
    """
    Ratio |sigma|_inf / (|sigma_low|_{B^{1/2}_{2,1}} + |sigma_high|_{B^{3/p}_{p,1}}).

    The homogeneous norms do not see the mean, so the numerator is taken on
    sigma minus its mean. A vanishing denominator gives ratio 0.
    """
    fluctuation = sigma.without_mean()
    numerator = lp_norm(fluctuation, np.inf)
    denominator = (bank.besov_norm(sigma, BesovSpec(0.5, 2.0, 1.0), "low")
                   + bank.besov_norm(sigma, BesovSpec(3.0 / p, p, 1.0), "high"))
    if denominator == 0.0:
        if numerator > 1e-300:
            raise RuntimeError("Nonzero fluctuation with vanishing Besov norms")
        ratio = 0.0
    else:
        ratio = numerator / denominator
    return {"sigma_linf": numerator, "denominator": denominator, "ratio": ratio}


class EnergyLedger:
    """
    Running values of E(0) and E1-E4 with one history row per sample.

    Single writer: the run loop calls update() with nondecreasing times.
    """

    def __init__(self, bank: DyadicBank, p: float = 2.0, params: Optional[ModelParams] = None,
                 keep_snapshots: bool = False, strict: bool = True):
        check_p(p, strict)
        self.bank = bank
        self.p = float(p)
        self.params = params or ModelParams()
        self.keep_snapshots = keep_snapshots
        self.snapshots: List[SimState] = []

        self.e0: Optional[float] = None
        self.e1_u = TildeNormTracker(bank, 2.0)
        self.e1_sigma = TildeNormTracker(bank, 2.0)
        self.e3_u = TildeNormTracker(bank, self.p)
        self.e3_sigma = TildeNormTracker(bank, self.p)

        self.integrals = {"e2_u_low": 0.0, "e2_psi_low": 0.0, "e3_u_high_int": 0.0,
                          "e3_psi_high_int": 0.0, "e4_trace_low": 0.0, "e4_trace_high": 0.0}
        self._last_integrands: Optional[Dict[str, float]] = None
        self._last_t: Optional[float] = None
        self.history: List[Dict[str, float]] = []

    def start(self, state: SimState) -> Dict[str, float]:
        """Fix E(0) from the initial data and record the first sample."""
        if self.e0 is not None:
            raise RuntimeError("Ledger already started")
        self.e0 = energy_e0(self.bank, state.u, state.sigma, self.p)
        return self.update(state)

    def _integrands(self, u_norms: _NormCache, psi_norms: _NormCache,
                    trace_norms: _NormCache) -> Dict[str, float]:
        bank, p = self.bank, self.p
        return {
            "e2_u_low": bank.aggregate(u_norms.l2, 2.5, 1, "low"),
            "e2_psi_low": bank.aggregate(psi_norms.l2, 2.5, 1, "low"),
            "e3_u_high_int": bank.aggregate(u_norms.lp, 3.0 / p + 1.0, 1, "high"),
            "e3_psi_high_int": bank.aggregate(psi_norms.lp, 3.0 / p, 1, "high"),
            "e4_trace_low": bank.aggregate(trace_norms.l2, 1.5, 1, "low"),
            "e4_trace_high": bank.aggregate(trace_norms.lp, 3.0 / p, 1, "high"),
        }

    def update(self, state: SimState) -> Dict[str, float]:
        """Advance trackers and integrals to state.t and append a history row."""
        if self.e0 is None:
            self.e0 = energy_e0(self.bank, state.u, state.sigma, self.p)
        t = float(state.t)
        p = self.p

        u_norms = _NormCache(self.bank, state.u, p)
        sigma_norms = _NormCache(self.bank, state.sigma, p)
        psi_norms = _NormCache(self.bank, state.psi, p)
        trace_norms = _NormCache(self.bank, state.trace, p)

        self.e1_u.update_norms(u_norms.l2, t)
        self.e1_sigma.update_norms(sigma_norms.l2, t)
        self.e3_u.update_norms(u_norms.lp, t)
        self.e3_sigma.update_norms(sigma_norms.lp, t)

        current = self._integrands(u_norms, psi_norms, trace_norms)
        if self._last_integrands is not None:
            width = t - self._last_t
            for key, value in current.items():
                self.integrals[key] += 0.5 * (self._last_integrands[key] + value) * width
        self._last_integrands = current
        self._last_t = t

        trace_phys = state.trace.to_physical()
        g = self.params.damping_rate(t)
        linf = linf_bound_check(self.bank, state.sigma, p)
        row = dict(self.components())
        row.update({
            "t": t,
            "u_low_b12": self.bank.aggregate(u_norms.l2, 0.5, 1, "low"),
            "u_linf": state.u.max_abs(),
            "sigma_linf": state.sigma.max_abs(),
            "max_abs_trace_sigma": float(np.max(np.abs(trace_phys))),
            "max_abs_trace_tau": float(np.max(np.abs(trace_phys + g))),
            "linf_ratio": linf["ratio"],
        })
        row["E_total"] = row["E1"] + row["E2"] + row["E3"] + row["E4"]
        self.history.append(row)
        if self.keep_snapshots:
            self.snapshots.append(state.copy())
        logger.debug(f"ledger t={t:.6g} E={row['E_total']:.6e}")
        return row

    def components(self) -> Dict[str, float]:
        """Every stored piece plus the four energies."""
        p = self.p
        parts = {
            "e1_u_low": self.e1_u.norm(0.5, "low"),
            "e1_sigma_low": self.e1_sigma.norm(0.5, "low"),
            "e3_u_high_sup": self.e3_u.norm(3.0 / p - 1.0, "high"),
            "e3_sigma_high_sup": self.e3_sigma.norm(3.0 / p, "high"),
        }
        parts.update(self.integrals)
        parts["E1"] = parts["e1_u_low"] + parts["e1_sigma_low"]
        parts["E2"] = parts["e2_u_low"] + parts["e2_psi_low"]
        parts["E3"] = (parts["e3_u_high_sup"] + parts["e3_sigma_high_sup"]
                       + parts["e3_u_high_int"] + parts["e3_psi_high_int"])
        parts["E4"] = parts["e4_trace_low"] + parts["e4_trace_high"]
        return parts

    def total(self) -> float:
        c = self.components()
        return c["E1"] + c["E2"] + c["E3"] + c["E4"]


def ledger_update(ledger: EnergyLedger, state: SimState,
                  params: Optional[ModelParams] = None) -> EnergyLedger:
    if params is not None:
        ledger.params = params
    ledger.update(state)
    return ledger


def replay_ledger(snapshots: Iterable[SimState], bank: DyadicBank, p: float = 2.0,
                  params: Optional[ModelParams] = None) -> EnergyLedger:
    """Rebuild a ledger from stored snapshots; the first one fixes E(0)."""
    ledger = EnergyLedger(bank, p, params)
    for index, state in enumerate(snapshots):
        if index == 0:
            ledger.start(state)
        else:
            ledger.update(state)
    return ledger
