"""Circuit parameters and transmon spectra from device geometry and flux bias.

Energies are carried as frequencies (E/h, in Hz) throughout.  The charge-basis
Hamiltonian

    H = 4 E_C (n - n_g)^2 - E_J(flux) cos(phi)

is tridiagonal in the charge states ``n = -N..N``, so it is diagonalized with
a tridiagonal eigensolver rather than a dense one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.linalg import eigvalsh_tridiagonal
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError

DEFAULT_TRUNCATION = 30
DEFAULT_C_STRAY = 26.51e-15
# |f01(N) - f01(2N)| must stay below this for a spectrum to count as converged.
CONVERGENCE_TOL_HZ = 1.0


@dataclass(frozen=True)
class PpcGeometry:
    """Parallel-plate capacitor geometry, stored in SI units."""

    area: float
    thickness: float
    epsilon_r: float

    def __post_init__(self):
        if not self.area > 0:
            raise DomainError(f"area must be > 0, got {self.area}")
        if not self.thickness > 0:
            raise DomainError(f"thickness must be > 0, got {self.thickness}")
        if not self.epsilon_r >= 1:
            raise DomainError(f"epsilon_r must be >= 1, got {self.epsilon_r}")

    @classmethod
    def from_lab_units(cls, area_um2: float, thickness_nm: float, epsilon_r: float) -> "PpcGeometry":
        return cls(area_um2 * 1e-12, thickness_nm * 1e-9, epsilon_r)


@dataclass(frozen=True)
class CapacitanceBudget:
    c_ppc: float
    c_stray: float = DEFAULT_C_STRAY
    participation_internal: float = 1.0

    def __post_init__(self):
        if not self.c_ppc > 0:
            raise DomainError(f"c_ppc must be > 0, got {self.c_ppc}")
        if not self.c_stray >= 0:
            raise DomainError(f"c_stray must be >= 0, got {self.c_stray}")
        if not 0 < self.participation_internal <= 1:
            raise DomainError(
                f"participation_internal must lie in (0, 1], got {self.participation_internal}"
            )


@dataclass(frozen=True)
class TransmonParams:
    """Static identity of the qubit: E_C/h, E_J/h at zero flux and offset charge."""

    e_c: float
    e_j_max: float
    n_g: float = 0.0

    def __post_init__(self):
        if not self.e_c > 0:
            raise DomainError(f"e_c must be > 0, got {self.e_c}")
        if not self.e_j_max > 0:
            raise DomainError(f"e_j_max must be > 0, got {self.e_j_max}")
        if not math.isfinite(self.ratio):
            raise DomainError("E_J/E_C must be finite")

    @property
    def ratio(self) -> float:
        return self.e_j_max / self.e_c


@dataclass(frozen=True)
class FluxLineCalibration:
    """Linear map from flux-line bias current to reduced flux."""

    current_period: float
    current_offset: float = 0.0
    asymmetry_d: float = 0.0

    def __post_init__(self):
        if not self.current_period > 0:
            raise DomainError(f"current_period must be > 0, got {self.current_period}")
        if not 0 <= self.asymmetry_d < 1:
            raise DomainError(f"asymmetry_d must lie in [0, 1), got {self.asymmetry_d}")


@dataclass(frozen=True)
class TransmonSpectrum:
    f01: float
    f02: float
    anharmonicity: float
    levels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.f01 > 0:
            raise DomainError(f"f01 must be > 0, got {self.f01}")
        if not self.f02 > self.f01:
            raise DomainError("f02 must exceed f01")
        if np.any(np.diff(self.levels) <= 0):
            raise DomainError("spectrum levels are not strictly increasing")

    @property
    def two_photon_drive(self) -> float:
        """Drive frequency of the two-photon 0->2 transition, f02/2."""
        return self.f02 / 2


def ppc_capacitance(geom: PpcGeometry) -> float:
    """Parallel-plate capacitance eps0 * eps_r * A / d, in farads."""
    if not (geom.area > 0 and geom.thickness > 0):
        raise DomainError("area and thickness must be positive")
    return constants.epsilon_0 * geom.epsilon_r * geom.area / geom.thickness


def charging_energy(c_total: float) -> float:
    """E_C/h = e^2 / (2 C h) in Hz."""
    if not c_total > 0:
        raise DomainError(f"capacitance must be > 0, got {c_total}")
    return constants.e**2 / (2 * c_total * constants.h)


def capacitance_from_charging_energy(e_c: float) -> float:
    if not e_c > 0:
        raise DomainError(f"e_c must be > 0, got {e_c}")
    return constants.e**2 / (2 * e_c * constants.h)


def total_capacitance(budget: CapacitanceBudget) -> float:
    return budget.c_ppc + budget.c_stray


def squid_ej(e_j_max: float, flux: float, asymmetry_d: float = 0.0) -> float:
    """Effective Josephson energy of an asymmetric dc SQUID.

    E_J,max * |cos(pi f)| * sqrt(1 + d^2 tan^2(pi f)), evaluated in the
    equivalent form E_J,max * sqrt(cos^2 + d^2 sin^2) so that half flux stays
    finite.  Even and unit-periodic in ``flux``.
    """
    reduced = flux - round(flux)
    if abs(reduced) == 0.5:
        c2, s2 = 0.0, 1.0
    else:
        c2 = math.cos(math.pi * reduced) ** 2
        s2 = math.sin(math.pi * reduced) ** 2
    return e_j_max * math.sqrt(c2 + asymmetry_d**2 * s2)


def flux_from_current(cal: FluxLineCalibration, current: float) -> float:
    return (current - cal.current_offset) / cal.current_period


def _charge_basis_levels(e_c: float, e_j: float, n_g: float, truncation: int, count: int) -> np.ndarray:
    n = np.arange(-truncation, truncation + 1, dtype=float)
    diag = 4.0 * e_c * (n - n_g) ** 2
    offdiag = np.full(2 * truncation, -0.5 * e_j)
    return eigvalsh_tridiagonal(diag, offdiag, select="i", select_range=(0, count - 1))


def transmon_spectrum(
    params: TransmonParams,
    flux: float = 0.0,
    truncation: int = DEFAULT_TRUNCATION,
    asymmetry_d: float = 0.0,
    n_levels: int = 5,
) -> TransmonSpectrum:
    """Exact charge-basis spectrum of the flux-tuned transmon.

    The result is checked against a diagonalization at twice the truncation;
    a change in f01 of 1 Hz or more raises :class:`ConvergenceError`.

    Parameters
    ----------
    params : TransmonParams
    flux : float
        Reduced flux through the SQUID loop.
    truncation : int
        Charge states ``-truncation..truncation`` are kept (>= 10).
    asymmetry_d : float
        SQUID junction asymmetry.
    n_levels : int
        Number of levels reported (>= 3).
    """
    if truncation < 10:
        raise DomainError(f"truncation must be >= 10, got {truncation}")
    n_levels = max(3, n_levels)
    e_j = squid_ej(params.e_j_max, flux, asymmetry_d)
    if not e_j > 0:
        raise DomainError(f"E_J(flux={flux}) = 0: no Josephson coupling, spectrum is out of the transmon regime")
    energies = _charge_basis_levels(params.e_c, e_j, params.n_g, truncation, n_levels)
    check = _charge_basis_levels(params.e_c, e_j, params.n_g, 2 * truncation, n_levels)
    f01 = energies[1] - energies[0]
    drift = abs((check[1] - check[0]) - f01)
    if not drift < CONVERGENCE_TOL_HZ:
        raise ConvergenceError(
            f"charge truncation {truncation} not converged: f01 moves by {drift:.3g} Hz on doubling"
        )
    levels = energies - energies[0]
    f02 = levels[2]
    return TransmonSpectrum(
        f01=float(f01),
        f02=float(f02),
        anharmonicity=float(f02 - 2 * f01),
        levels=tuple(float(v) for v in levels),
    )


def asymptotic_f01(e_j: float, e_c: float) -> float:
    """Large E_J/E_C approximation sqrt(8 E_J E_C) - E_C."""
    return math.sqrt(8 * e_j * e_c) - e_c


def ej_from_frequency(f01: float, e_c: float, n_g: float = 0.0, truncation: int = DEFAULT_TRUNCATION) -> float:
    """Josephson energy (Hz) that reproduces a measured sweet-spot ``f01``.

    f01 is monotone in E_J, so a bracketing root finder is used on the
    bracket [f01^2/(8 E_C)/4, 4 (f01 + E_C)^2/(8 E_C)].
    """
    if not (f01 > 0 and e_c > 0):
        raise DomainError("f01 and e_c must be positive")
    lo = f01**2 / (8 * e_c) / 4
    hi = 4 * (f01 + e_c) ** 2 / (8 * e_c)

    def mismatch(e_j):
        return transmon_spectrum(TransmonParams(e_c, e_j, n_g), truncation=truncation).f01 - f01

    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo > 0 or f_hi < 0:
        raise DomainError(f"no E_J in [{lo:.4g}, {hi:.4g}] Hz gives f01 = {f01:.6g} Hz")
    return brentq(mismatch, lo, hi, xtol=1.0, rtol=4 * np.finfo(float).eps, maxiter=200)


def t1_bound_from_loss(f01: float, loss_tangent: float, participation: float = 1.0) -> float:
    """Dielectric-loss-limited T1 = 1 / (p * 2 pi f01 * tan_delta)."""
    if not (f01 > 0 and loss_tangent > 0):
        raise DomainError("f01 and loss_tangent must be positive")
    if not 0 < participation <= 1:
        raise DomainError(f"participation must lie in (0, 1], got {participation}")
    return 1.0 / (participation * 2 * math.pi * f01 * loss_tangent)
