"""Readout cavity: dispersive shifts, flux-dependent pull and S21 lineshape."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class CavityParams:
    f_bare: float
    kappa: float  # FWHM, Hz

    def __post_init__(self):
        if not self.f_bare > 0:
            raise DomainError(f"f_bare must be > 0, got {self.f_bare}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be > 0, got {self.kappa}")
        if self.kappa / self.f_bare >= 1e-3:
            warnings.warn(f"cavity linewidth kappa/f_bare = {self.kappa / self.f_bare:.3g} is not small", stacklevel=2)


@dataclass(frozen=True)
class CouplingParams:
    g: float
    delta: float  # qubit minus cavity, Hz, signed

    def __post_init__(self):
        if abs(self.delta) <= 10 * abs(self.g):
            warnings.warn(
                f"|delta| = {abs(self.delta):.4g} Hz is within 10 g of resonance; dispersive formulas are unreliable",
                stacklevel=2,
            )


def dispersive_shift_two_level(cpl: CouplingParams) -> float:
    """chi = g^2 / delta for a two-level qubit."""
    if cpl.delta == 0:
        raise DomainError("delta = 0: qubit and cavity are resonant, no dispersive shift")
    return cpl.g**2 / cpl.delta


def dispersive_shift_transmon(cpl: CouplingParams, anharmonicity: float) -> float:
    """Transmon-corrected shift (g^2/delta) * alpha / (delta + alpha)."""
    if cpl.delta == 0:
        raise DomainError("delta = 0: qubit and cavity are resonant, no dispersive shift")
    if cpl.delta + anharmonicity == 0:
        raise DomainError("delta + alpha = 0: straddling-regime pole")
    return cpl.g**2 / cpl.delta * anharmonicity / (cpl.delta + anharmonicity)


def cavity_pull_vs_flux(cav: CavityParams, g: float, qubit_f01_at_flux: float) -> float:
    """Dressed cavity frequency with the qubit in its ground state.

    With delta = f01 - f_bare the cavity is pushed away from the qubit:
    f_bare - g^2 / delta.
    """
    delta = qubit_f01_at_flux - cav.f_bare
    if delta == 0:
        raise DomainError("qubit is resonant with the cavity")
    return cav.f_bare - g**2 / delta


def cavity_frequency(cav: CavityParams, g: float, qubit_f01: float, high_power: bool) -> float:
    """Observed cavity resonance in the two power regimes.

    High probe power saturates the qubit and leaves the bare cavity; low power
    shows the dressed (pulled) resonance.
    """
    if high_power:
        return cav.f_bare
    return cavity_pull_vs_flux(cav, g, qubit_f01)


def s21_lorentzian(cav: CavityParams, probe_f, f0: float | None = None):
    """Unit-peak Lorentzian power transmission with FWHM kappa.

    ``f0`` defaults to the bare cavity frequency; pass the dressed frequency to
    model the low-power line.
    """
    centre = cav.f_bare if f0 is None else f0
    x = np.asarray(probe_f, dtype=float)
    out = 1.0 / (1.0 + 4.0 * (x - centre) ** 2 / cav.kappa**2)
    return float(out) if out.ndim == 0 else out
