"""Open-system dynamics of a driven transmon under pulse sequences.

The qubit (2 or 3 levels) is simulated in the frame rotating at the drive
frequency, within the rotating-wave approximation,

    d rho/dt = -i[H, rho] + Gamma_1 D[a] rho + (2/T_phi) D[n] rho

with ``H = delta n + (alpha/2) n(n-1) + (Omega/2)(e^{-i phase} a + h.c.)`` and
``delta = 2 pi (f01 - f_drive)``.  For two levels ``(2/T_phi) D[n]`` is the same
channel as ``(1/(2 T_phi)) D[sigma_z]``.

Integration is fixed-step classical RK4.  Because the Lindblad generator is
constant over a segment, one RK4 step is the matrix polynomial
``1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24`` acting on vec(rho); ``n`` steps
are applied as its ``n``-th power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, NumericalError, StepSizeError

PI_PULSE_DURATION = 80e-9
# dt must resolve the fastest rate in the model by this factor
STEP_RESOLUTION = 100.0

TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-9


@dataclass(frozen=True)
class QubitModel:
    """Qubit frequency, anharmonicity and Markovian decoherence times (SI)."""

    f01: float
    t1: float = math.inf
    t_phi: float = math.inf
    anharmonicity: float = 0.0
    levels: int = 2

    def __post_init__(self):
        if self.levels not in (2, 3):
            raise DomainError(f"levels must be 2 or 3, got {self.levels}")
        if not self.t1 > 0:
            raise DomainError(f"t1 must be > 0, got {self.t1}")
        if not self.t_phi > 0:
            raise DomainError(f"t_phi must be > 0, got {self.t_phi}")
        if self.levels == 3 and self.anharmonicity == 0:
            raise DomainError("a three-level model needs a nonzero anharmonicity")

    @classmethod
    def from_t2_star(cls, f01, t1, t2_star, **kwargs) -> "QubitModel":
        """Build a model whose Ramsey time is ``t2_star``; 1/T2* = 1/(2 T1) + 1/T_phi."""
        return cls(f01=f01, t1=t1, t_phi=pure_dephasing_time(t1, t2_star), **kwargs)

    @property
    def gamma1(self) -> float:
        return 0.0 if math.isinf(self.t1) else 1.0 / self.t1

    @property
    def gamma_phi(self) -> float:
        return 0.0 if math.isinf(self.t_phi) else 1.0 / self.t_phi

    @property
    def t2(self) -> float:
        rate = 0.5 * self.gamma1 + self.gamma_phi
        return math.inf if rate == 0 else 1.0 / rate


def pure_dephasing_time(t1: float, t2_star: float) -> float:
    rate = 1.0 / t2_star - 0.5 / t1
    if rate < 0:
        raise DomainError(f"T2* = {t2_star} exceeds 2 T1 = {2 * t1}")
    return math.inf if rate == 0 else 1.0 / rate


SegmentKind = Literal["drive", "delay", "rotation"]


@dataclass(frozen=True)
class PulseSegment:
    """One piece of a pulse sequence.

    ``drive`` and ``delay`` segments last ``duration`` seconds; ``amplitude`` is
    the Rabi rate Omega in rad/s and ``drive_frequency`` fixes the rotating
    frame.  A ``rotation`` is an ideal instantaneous rotation of the 0-1
    transition by ``angle`` about the axis at ``phase`` (duration 0, no decay).
    """

    kind: SegmentKind
    duration: float = 0.0
    amplitude: float = 0.0
    drive_frequency: float = 0.0
    phase: float = 0.0
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("drive", "delay", "rotation"):
            raise DomainError(f"unknown segment kind {self.kind!r}")
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise DomainError(f"segment duration must be finite and >= 0, got {self.duration}")
        if self.kind == "delay" and self.amplitude != 0:
            raise DomainError("delay segments carry no drive amplitude")
        if self.kind == "rotation" and self.duration != 0:
            raise DomainError("rotations are instantaneous")


def drive(duration, amplitude, drive_frequency, phase=0.0) -> PulseSegment:
    return PulseSegment("drive", duration, amplitude, drive_frequency, phase)


def delay(duration, drive_frequency) -> PulseSegment:
    return PulseSegment("delay", duration, 0.0, drive_frequency)


def rotation(angle, phase=0.0) -> PulseSegment:
    return PulseSegment("rotation", 0.0, 0.0, 0.0, phase, angle)


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple
    initial_state: str = "ground"

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise DomainError("a pulse sequence needs at least one segment")
        if self.initial_state != "ground":
            raise DomainError("only ground-state preparation is supported")

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)


@dataclass
class DensityState:
    matrix: np.ndarray

    @property
    def levels(self) -> int:
        return self.matrix.shape[0]

    @property
    def p_excited(self) -> float:
        """Probability of reading 'not ground' (rho_11, plus rho_22 for three levels)."""
        return 1.0 - float(self.matrix[0, 0].real)

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def validate(self):
        rho = self.matrix
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise NumericalError(f"density matrix lost Hermiticity ({herm:.3g})")
        tr = np.trace(rho)
        if abs(tr - 1) > TRACE_TOL:
            raise NumericalError(f"density matrix trace drifted to {tr:.12g}")
        lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lowest < -POSITIVITY_TOL:
            raise NumericalError(f"density matrix has negative eigenvalue {lowest:.3g}")
        return self


@dataclass
class ExperimentResult:
    sweep_values: np.ndarray
    p_excited: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sweep_values = np.asarray(self.sweep_values, dtype=float)
        p = np.asarray(self.p_excited, dtype=float)
        if self.sweep_values.shape != p.shape:
            raise DomainError("sweep values and probabilities differ in length")
        if np.any(p < -1e-9) or np.any(p > 1 + 1e-9):
            raise NumericalError("excited-state probability outside [0, 1]")
        self.p_excited = np.clip(p, 0.0, 1.0)


# ---------------------------------------------------------------------------
# operators and generators


def _lowering(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def _number(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def hamiltonian(model: QubitModel, seg: PulseSegment) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/s) of a drive or delay segment."""
    d = model.levels
    detuning = 2 * math.pi * (model.f01 - seg.drive_frequency)
    n = np.arange(d, dtype=float)
    h = np.diag(detuning * n + math.pi * model.anharmonicity * n * (n - 1)).astype(complex)
    if seg.amplitude:
        a = _lowering(d)
        coupling = 0.5 * seg.amplitude * np.exp(-1j * seg.phase) * a
        h += coupling + coupling.conj().T
    return h


def _dissipator(c: np.ndarray) -> np.ndarray:
    d = c.shape[0]
    eye = np.eye(d)
    cdc = c.conj().T @ c
    return np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)


def liouvillian(model: QubitModel, seg: PulseSegment) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    d = model.levels
    eye = np.eye(d)
    h = hamiltonian(model, seg)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    if model.gamma1:
        gen += model.gamma1 * _dissipator(_lowering(d))
    if model.gamma_phi:
        gen += 2.0 * model.gamma_phi * _dissipator(_number(d))
    return gen


def max_rate(model: QubitModel, seg: PulseSegment) -> float:
    """Fastest angular rate (rad/s) the step size has to resolve."""
    detuning = abs(2 * math.pi * (model.f01 - seg.drive_frequency))
    rates = [abs(seg.amplitude), detuning, model.gamma1, model.gamma_phi]
    if model.levels == 3:
        rates += [math.sqrt(2) * abs(seg.amplitude), abs(2 * detuning) + abs(2 * math.pi * model.anharmonicity)]
    return max(rates)


def step_bound(model: QubitModel, segments: Iterable[PulseSegment]) -> float:
    rate = max((max_rate(model, s) for s in segments if s.kind != "rotation"), default=0.0)
    return math.inf if rate == 0 else 1.0 / (STEP_RESOLUTION * rate)


def rk4_step_matrix(gen: np.ndarray, h: float) -> np.ndarray:
    m = h * gen
    eye = np.eye(m.shape[0], dtype=complex)
    m2 = m @ m
    m3 = m2 @ m
    return eye + m + m2 / 2 + m3 / 6 + (m3 @ m) / 24


def rotation_unitary(levels: int, angle: float, phase: float) -> np.ndarray:
    gen = np.zeros((levels, levels), dtype=complex)
    gen[0, 1] = np.exp(1j * phase)
    gen[1, 0] = np.exp(-1j * phase)
    return expm(-0.5j * angle * gen)


def _ground(levels: int) -> np.ndarray:
    vec = np.zeros(levels * levels, dtype=complex)
    vec[0] = 1.0
    return vec


class _Propagator:
    """Applies segments to vec(rho) with fixed-step RK4 at step <= dt.

    Step matrices are cached per (segment, step count, step) within one
    experiment; nothing is shared between calls.
    """

    def __init__(self, model: QubitModel, dt: float):
        self.model = model
        self.dt = dt
        self._gens: dict = {}
        self._powers: dict = {}

    def _split(self, duration: float) -> tuple[int, float]:
        if math.isinf(self.dt):
            return 1, duration
        n = max(1, math.ceil(duration / self.dt - 1e-9))
        return n, duration / n

    def advance(self, vec: np.ndarray, seg: PulseSegment, duration: float | None = None) -> np.ndarray:
        d = self.model.levels
        if seg.kind == "rotation":
            u = rotation_unitary(d, seg.angle, seg.phase)
            rho = vec.reshape(d, d)
            return (u @ rho @ u.conj().T).reshape(-1)
        duration = seg.duration if duration is None else duration
        if duration == 0:
            return vec
        key = (seg.kind, seg.amplitude, seg.drive_frequency, seg.phase)
        if key not in self._gens:
            self._gens[key] = liouvillian(self.model, seg)
        n, h = self._split(duration)
        pkey = (key, n, h)
        if pkey not in self._powers:
            self._powers[pkey] = np.linalg.matrix_power(rk4_step_matrix(self._gens[key], h), n)
        return self._powers[pkey] @ vec

    def state(self, vec: np.ndarray) -> DensityState:
        d = self.model.levels
        return DensityState(vec.reshape(d, d).copy()).validate()


def _resolve_dt(model: QubitModel, segments: Sequence[PulseSegment], dt: float | None) -> float:
    bound = step_bound(model, segments)
    if dt is None:
        return bound
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    if dt > bound * (1 + 1e-12):
        raise StepSizeError(f"dt = {dt:.3g} s exceeds the stability bound {bound:.3g} s (1/(100 x fastest rate))")
    return dt


def evolve(model: QubitModel, seq: PulseSequence, dt: float | None = None) -> DensityState:
    """Final state after running ``seq`` from the ground state.

    ``dt`` defaults to the largest admissible step.  Segments are split into
    equal steps no longer than ``dt``; the state is validated after every
    segment.
    """
    dt = _resolve_dt(model, seq.segments, dt)
    prop = _Propagator(model, dt)
    vec = _ground(model.levels)
    for seg in seq.segments:
        vec = prop.advance(vec, seg)
        prop.state(vec)
    return prop.state(vec)


def _time_grid(t_max, n_points, times) -> np.ndarray:
    if times is None:
        if t_max is None or n_points is None:
            raise DomainError("give either times or t_max and n_points")
        if n_points < 2 or not t_max > 0:
            raise DomainError("need n_points >= 2 and t_max > 0")
        return np.linspace(0.0, t_max, n_points)
    grid = np.asarray(times, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("time grid must be a non-empty 1-D sequence")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise DomainError("time grid must be non-negative and strictly increasing")
    return grid


def _sample(prop: _Propagator, vec: np.ndarray, seg: PulseSegment, grid: np.ndarray) -> list[np.ndarray]:
    """States after running ``seg`` for each duration in ``grid``."""
    out = []
    elapsed = 0.0
    for t in grid:
        vec = prop.advance(vec, seg, t - elapsed)
        elapsed = t
        prop.state(vec)
        out.append(vec)
    return out


def _pulse(angle: float, omega: float, frame: float, phase: float = 0.0) -> PulseSegment:
    """Resonant-amplitude rectangular pulse of the given angle, or an ideal one if omega is 0."""
    if omega == 0:
        return rotation(angle, phase)
    return drive(abs(angle) / omega, omega, frame, phase)


def _pi_rate(pi_duration: float) -> float:
    if pi_duration < 0:
        raise DomainError("pi_duration must be >= 0")
    return 0.0 if pi_duration == 0 else math.pi / pi_duration


def rabi_experiment(
    model: QubitModel,
    drive_freq: float,
    omega: float,
    t_max: float | None = None,
    n_points: int | None = None,
    *,
    times=None,
    dt: float | None = None,
    phase: float = 0.0,
) -> ExperimentResult:
    """P(excited) after a rectangular drive of width t at ``drive_freq``.

    ``omega`` is the drive strength in rad/s.
    """
    grid = _time_grid(t_max, n_points, times)
    seg = drive(grid[-1], omega, drive_freq, phase)
    prop = _Propagator(model, _resolve_dt(model, [seg], dt))
    states = _sample(prop, _ground(model.levels), seg, grid)
    p = [prop.state(v).p_excited for v in states]
    return ExperimentResult(
        grid, p, {"experiment": "rabi", "drive_frequency": drive_freq, "omega": omega, "dt": prop.dt}
    )


def t1_experiment(
    model: QubitModel,
    t_max: float | None = None,
    n_points: int | None = None,
    *,
    times=None,
    pi_duration: float = PI_PULSE_DURATION,
    dt: float | None = None,
) -> ExperimentResult:
    """pi pulse, wait t, read out.  ``pi_duration = 0`` uses an ideal pulse."""
    grid = _time_grid(t_max, n_points, times)
    pi = _pulse(math.pi, _pi_rate(pi_duration), model.f01)
    wait = delay(grid[-1], model.f01)
    prop = _Propagator(model, _resolve_dt(model, [pi, wait], dt))
    start = prop.advance(_ground(model.levels), pi)
    states = _sample(prop, start, wait, grid)
    p = [prop.state(v).p_excited for v in states]
    return ExperimentResult(grid, p, {"experiment": "t1", "pi_duration": pi_duration, "dt": prop.dt})


def ramsey_experiment(
    model: QubitModel,
    drive_detuning: float,
    t_max: float | None = None,
    n_points: int | None = None,
    *,
    times=None,
    pi_duration: float = 0.0,
    dt: float | None = None,
) -> ExperimentResult:
    """pi/2 - t - pi/2 with the drive detuned by ``drive_detuning`` (f01 - f_drive).

    Pulses are ideal by default; a positive ``pi_duration`` uses rectangular
    pulses at Omega = pi / pi_duration, which see the detuning as well.
    """
    grid = _time_grid(t_max, n_points, times)
    frame = model.f01 - drive_detuning
    half = _pulse(math.pi / 2, _pi_rate(pi_duration), frame)
    wait = delay(grid[-1], frame)
    prop = _Propagator(model, _resolve_dt(model, [half, wait], dt))
    start = prop.advance(_ground(model.levels), half)
    p = []
    for v in _sample(prop, start, wait, grid):
        p.append(prop.state(prop.advance(v, half)).p_excited)
    return ExperimentResult(
        grid, p, {"experiment": "ramsey", "drive_detuning": drive_detuning, "pi_duration": pi_duration, "dt": prop.dt}
    )


def echo_experiment(
    model: QubitModel,
    drive_detuning: float,
    t_max: float | None = None,
    n_points: int | None = None,
    *,
    times=None,
    pi_duration: float = 0.0,
    dt: float | None = None,
) -> ExperimentResult:
    """Hahn echo pi/2_x - t/2 - pi_y - t/2 - pi/2_x; ``t`` is the total free time."""
    grid = _time_grid(t_max, n_points, times)
    frame = model.f01 - drive_detuning
    rate = _pi_rate(pi_duration)
    half = _pulse(math.pi / 2, rate, frame)
    refocus = _pulse(math.pi, rate, frame, phase=math.pi / 2)
    wait = delay(grid[-1] / 2, frame)
    prop = _Propagator(model, _resolve_dt(model, [half, refocus, wait], dt))
    start = prop.advance(_ground(model.levels), half)
    p = []
    for t in grid:
        v = prop.advance(start, wait, t / 2)
        v = prop.advance(v, refocus)
        v = prop.advance(v, wait, t / 2)
        p.append(prop.state(prop.advance(v, half)).p_excited)
    return ExperimentResult(
        grid, p, {"experiment": "echo", "drive_detuning": drive_detuning, "pi_duration": pi_duration, "dt": prop.dt}
    )


def sweep_2d(
    model: QubitModel,
    experiment: Literal["rabi", "ramsey"],
    freq_grid,
    time_grid,
    *,
    omega: float | None = None,
    pi_duration: float = 0.0,
    dt: float | None = None,
) -> list[ExperimentResult]:
    """One experiment per drive frequency in ``freq_grid`` (chevron / fringe maps).

    Rows are computed independently and returned in grid order.
    """
    freqs = np.asarray(freq_grid, dtype=float)
    if freqs.ndim != 1 or freqs.size == 0:
        raise DomainError("frequency grid must be a non-empty 1-D sequence")
    if freqs.size > 1 and not (np.all(np.diff(freqs) > 0) or np.all(np.diff(freqs) < 0)):
        raise DomainError("frequency grid must be strictly monotone")
    times = _time_grid(None, None, time_grid)
    rows = []
    for f in freqs:
        if experiment == "rabi":
            if omega is None:
                raise DomainError("a Rabi sweep needs the drive strength omega")
            rows.append(rabi_experiment(model, float(f), omega, times=times, dt=dt))
        elif experiment == "ramsey":
            rows.append(ramsey_experiment(model, model.f01 - float(f), times=times, pi_duration=pi_duration, dt=dt))
        else:
            raise DomainError(f"unknown experiment {experiment!r}")
    return rows
